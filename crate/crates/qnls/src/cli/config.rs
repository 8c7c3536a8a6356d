//! Flat JSON run configuration with documented defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GroundState,
    Evolve,
    Morawetz,
    Classify,
    Disperse,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Evolve => "evolve",
            Command::Morawetz => "morawetz",
            Command::Classify => "classify",
            Command::Disperse => "disperse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Gaussian,
    Soliton,
    BoostedSoliton,
    Random,
    File,
}

/// Keys as they appear in the file. Every key is optional here; required
/// ones are enforced per command by [`parse_config`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Command>,
    dimension: Option<usize>,
    n: Option<usize>,
    length: Option<f64>,
    m: Option<usize>,
    r_max: Option<f64>,
    kappa: Option<f64>,
    dt: Option<f64>,
    t_final: Option<f64>,
    cadence: Option<usize>,
    snapshot_every: Option<usize>,
    initial: Option<InitialKind>,
    amplitude: Option<f64>,
    amplitude_v: Option<f64>,
    width: Option<f64>,
    center: Option<Vec<f64>>,
    velocity: Option<Vec<f64>>,
    xi: Option<Vec<f64>>,
    path: Option<String>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    r0: Option<f64>,
    j: Option<f64>,
    t0: Option<f64>,
    epsilon: Option<f64>,
    r_points: Option<usize>,
    s_stride: Option<usize>,
    normalize: Option<bool>,
    morawetz_column: Option<bool>,
    lp: Option<f64>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
}

/// Validated configuration with every default materialized. Serializing it
/// gives the echo embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub dimension: usize,
    pub n: usize,
    pub length: f64,
    /// Radial grid used for the ground state.
    pub m: usize,
    pub r_max: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_final: f64,
    pub cadence: usize,
    pub snapshot_every: Option<usize>,
    pub initial: InitialKind,
    pub amplitude: f64,
    pub amplitude_v: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub velocity: Vec<f64>,
    pub xi: Vec<f64>,
    pub path: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub r0: f64,
    pub j: f64,
    pub t0: f64,
    pub epsilon: f64,
    pub r_points: usize,
    pub s_stride: usize,
    pub normalize: bool,
    /// Adds the Morawetz action `M(t)` with radius `r0` to evolve records (d ≤ 2).
    pub morawetz_column: bool,
    /// `None` is the sup norm.
    pub lp: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    pub seed: u64,
}

fn require<T>(v: Option<T>, key: &str, cmd: Command) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing required key \"{key}\" for {}", cmd.name())))
}

fn positive(v: f64, key: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("\"{key}\" = {v} must be positive")))
    }
}

fn vector(v: Option<Vec<f64>>, key: &str, dim: usize, default: f64) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![default; dim]),
        Some(x) if x.len() == dim && x.iter().all(|c| c.is_finite()) => Ok(x),
        Some(x) => Err(Error::Config(format!("\"{key}\" needs {dim} finite components, got {}", x.len()))),
    }
}

/// Parses and validates a configuration for `command`. A `command` key in
/// the file, if present, must agree.
pub fn parse_config(text: &str, command: Command) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(c) = raw.command {
        if c != command {
            return Err(Error::Config(format!("config is for {}, invoked as {}", c.name(), command.name())));
        }
    }
    let cmd = command;
    let uniform = cmd != Command::GroundState;
    let from_file = raw.initial == Some(InitialKind::File);
    let (dimension, n, length) = if uniform && !from_file {
        (require(raw.dimension, "dimension", cmd)?, require(raw.n, "n", cmd)?, require(raw.length, "length", cmd)?)
    } else {
        (raw.dimension.unwrap_or(1), raw.n.unwrap_or(256), raw.length.unwrap_or(64.0))
    };
    if !(1..=3).contains(&dimension) {
        return Err(Error::Config(format!("\"dimension\" = {dimension} outside 1..=3")));
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Config(format!("\"n\" = {n} is not a power of two (>= 8)")));
    }
    positive(length, "length")?;
    if cmd == Command::Morawetz && dimension != 1 && !from_file {
        return Err(Error::Config("the morawetz command runs in dimension 1".into()));
    }
    let (dt, t_final) = match cmd {
        Command::Evolve => (require(raw.dt, "dt", cmd)?, require(raw.t_final, "t_final", cmd)?),
        Command::Morawetz => (require(raw.dt, "dt", cmd)?, raw.t_final.unwrap_or(0.0)),
        _ => (raw.dt.unwrap_or(1e-3), raw.t_final.unwrap_or(0.0)),
    };
    positive(dt, "dt")?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("\"t_final\" = {t_final} must be nonnegative")));
    }
    let t0 = if cmd == Command::Morawetz { positive(require(raw.t0, "t0", cmd)?, "t0")? } else { raw.t0.unwrap_or(100.0) };
    let initial = raw.initial.unwrap_or(InitialKind::Gaussian);
    let path = raw.path;
    if initial == InitialKind::File && path.is_none() {
        return Err(Error::Config("missing required key \"path\" for initial = file".into()));
    }
    let width = positive(raw.width.unwrap_or(1.0), "width")?;
    let amplitude = raw.amplitude.unwrap_or(1.0);
    let epsilon = raw.epsilon.unwrap_or(0.025);
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Config(format!("\"epsilon\" = {epsilon} outside (0, 1/2]")));
    }
    let cadence = raw.cadence.unwrap_or(10);
    if cadence == 0 {
        return Err(Error::Config("\"cadence\" must be at least 1".into()));
    }
    let m = raw.m.unwrap_or(2048);
    if m < 16 {
        return Err(Error::Config(format!("\"m\" = {m} must be at least 16")));
    }
    let cfg = RunConfig {
        command: cmd,
        dimension,
        n,
        length,
        m,
        r_max: positive(raw.r_max.unwrap_or(30.0), "r_max")?,
        kappa: positive(raw.kappa.unwrap_or(0.5), "kappa")?,
        dt,
        t_final,
        cadence,
        snapshot_every: raw.snapshot_every.filter(|&s| s > 0),
        initial,
        amplitude,
        amplitude_v: raw.amplitude_v.unwrap_or(amplitude),
        width,
        center: vector(raw.center, "center", dimension, 0.5 * length)?,
        velocity: vector(raw.velocity, "velocity", dimension, 0.0)?,
        xi: vector(raw.xi, "xi", dimension, 0.0)?,
        path,
        tol: positive(raw.tol.unwrap_or(1e-10), "tol")?,
        max_iter: raw.max_iter.unwrap_or(5000),
        r0: positive(raw.r0.unwrap_or(3.0), "r0")?,
        j: positive(raw.j.unwrap_or(8f64.ln()), "j")?,
        t0,
        epsilon,
        r_points: raw.r_points.unwrap_or(8).max(1),
        s_stride: raw.s_stride.unwrap_or(4).max(1),
        normalize: raw.normalize.unwrap_or(true),
        morawetz_column: raw.morawetz_column.unwrap_or(false),
        lp: match raw.lp {
            None => None,
            Some(p) => Some(positive(p, "lp")?),
        },
        t_start: positive(raw.t_start.unwrap_or(3.0 * width * width), "t_start")?,
        t_end: positive(raw.t_end.unwrap_or(12.0 * width * width), "t_end")?,
        samples: raw.samples.unwrap_or(8),
        seed: raw.seed.unwrap_or(0),
    };
    if cfg.t_end <= cfg.t_start {
        return Err(Error::Config("\"t_end\" must exceed \"t_start\"".into()));
    }
    Ok(cfg)
}

impl RunConfig {
    /// Compact JSON echo of the validated configuration.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"dimension": 1, "n": 256, "length": 64, "dt": 0.01, "t_final": 1}"#;

    #[test]
    fn minimal_evolve_gets_defaults() {
        let c = parse_config(MINIMAL, Command::Evolve).unwrap();
        assert_eq!(c.kappa, 0.5);
        assert_eq!(c.cadence, 10);
        assert_eq!(c.center, vec![32.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let e = parse_config(r#"{"dimension": 1, "n": 100, "length": 64, "dt": 0.01, "t_final": 1}"#, Command::Evolve);
        assert!(e.unwrap_err().to_string().contains("not a power of two"));
        let e = parse_config(r#"{"dimension": 1, "n": 64, "length": 64, "dt": 0.01, "t_final": 1, "kapa": 1}"#, Command::Evolve);
        assert!(e.unwrap_err().to_string().contains("kapa"));
        let e = parse_config(r#"{"dimension": 1, "n": 64, "length": 64, "dt": 0.01}"#, Command::Evolve);
        assert!(e.unwrap_err().to_string().contains("t_final"));
    }

    #[test]
    fn ground_state_needs_nothing() {
        let c = parse_config("{}", Command::GroundState).unwrap();
        assert_eq!((c.m, c.r_max), (2048, 30.0));
    }
}
