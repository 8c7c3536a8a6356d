//! Command orchestration and artifact writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Command, InitialKind, RunConfig};
use super::snapshot::{read_snapshot, write_snapshot, Snapshot};
use crate::error::{Error, Result};
use crate::evolution::{blow_up_detect, dispersive_decay_fit, evolve_with, DiagnosticsRecord, EvolutionConfig, Outcome};
use crate::fields::{galilean_boost, FieldPair};
use crate::grid::{Field, RadialGrid, UniformGrid};
use crate::ground_state::{gn_constant_consistency, periodic_ground_state, petviashvili_solve, GroundState};
use crate::morawetz::{build_weights, interaction_lhs, morawetz_action, InteractionParams};
use crate::threshold::{classify_data, rescale_to_e0};

pub const CSV_SCHEMA: u32 = 1;

/// What a command produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    /// `completed`, or `blow-up` for flagged evolutions.
    pub outcome: String,
}

fn csv_header(cfg: &RunConfig, columns: &[&str]) -> String {
    format!("# schema={CSV_SCHEMA}\n# config={}\n{}\n", cfg.echo(), columns.join(","))
}

fn csv_row(out: &mut String, values: &[f64]) {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.17e}")).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn write_json(path: &Path, cfg: &RunConfig, result: Value) -> Result<()> {
    let doc = json!({
        "schema": CSV_SCHEMA,
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg)?,
        "result": result,
    });
    fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

fn outcome_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Completed => "completed",
        Outcome::BlowUp { .. } => "blow-up",
    }
}

/// Builds the initial pair described by the configuration.
pub fn initial_pair(cfg: &RunConfig) -> Result<FieldPair> {
    if cfg.initial == InitialKind::File {
        let path = cfg.path.as_deref().expect("validated");
        let (snap, _) = read_snapshot(Path::new(path))?;
        let Snapshot::Uniform(p) = snap else {
            return Err(Error::Config(format!("{path} holds radial data, a uniform grid is needed")));
        };
        if (p.kappa() - cfg.kappa).abs() > 0.0 {
            return Err(Error::Config(format!("snapshot has kappa {} but config has {}", p.kappa(), cfg.kappa)));
        }
        return Ok(p);
    }
    let grid = UniformGrid::new(cfg.dimension, cfg.n, cfg.length)?;
    let d = cfg.dimension;
    let lump = |amp: f64, width: f64, centre: &[f64]| {
        let centre = centre.to_vec();
        Field::from_fn(grid, move |x| {
            let z = grid.displacement(&x, &[centre[0], *centre.get(1).unwrap_or(&0.0), *centre.get(2).unwrap_or(&0.0)]);
            let r2: f64 = (0..d).map(|a| z[a] * z[a]).sum();
            Complex64::new(amp * (-r2 / (width * width)).exp(), 0.0)
        })
    };
    let soliton = || -> Result<FieldPair> { Ok(periodic_ground_state(grid, cfg.kappa, cfg.tol, cfg.max_iter)?.pair) };
    match cfg.initial {
        InitialKind::Gaussian => {
            let p = FieldPair::new(
                lump(cfg.amplitude, cfg.width, &cfg.center),
                lump(cfg.amplitude_v, cfg.width, &cfg.center),
                cfg.kappa,
            )?;
            if cfg.velocity.iter().any(|&v| v != 0.0) {
                galilean_boost(&p, &cfg.velocity)
            } else {
                Ok(p)
            }
        }
        InitialKind::Soliton => soliton(),
        InitialKind::BoostedSoliton => galilean_boost(&soliton()?, &cfg.xi),
        InitialKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut draw = |amp: f64| -> Vec<Complex64> {
                let mut acc = vec![Complex64::new(0.0, 0.0); grid.size()];
                for _ in 0..4 {
                    let centre: Vec<f64> = (0..d).map(|_| cfg.length * rng.gen_range(0.25..0.75)).collect();
                    let width = cfg.width * rng.gen_range(0.5..2.0);
                    let c = Complex64::from_polar(amp * rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
                    for (a, z) in acc.iter_mut().zip(lump(1.0, width, &centre).data()) {
                        *a += c * z;
                    }
                }
                acc
            };
            let u = draw(cfg.amplitude);
            let v = draw(cfg.amplitude_v);
            FieldPair::new(Field::new(grid, u)?, Field::new(grid, v)?, cfg.kappa)
        }
        InitialKind::File => unreachable!(),
    }
}

fn record_columns(d: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "mass", "kinetic", "potential", "energy"].iter().map(|s| s.to_string()).collect();
    for a in ["x", "y", "z"].iter().take(d) {
        cols.push(format!("momentum_{a}"));
    }
    cols.extend(["l3_u", "l3_pair", "max_modulus", "morawetz"].iter().map(|s| s.to_string()));
    cols
}

fn record_values(r: &DiagnosticsRecord) -> Vec<f64> {
    let mut v = vec![r.t, r.mass, r.kinetic, r.potential, r.energy];
    v.extend(&r.momentum);
    v.extend([r.l3_u, r.l3_pair, r.max_modulus, r.morawetz.unwrap_or(f64::NAN)]);
    v
}

/// Writes the time-series CSV for a set of records.
pub fn timeseries_csv(cfg: &RunConfig, records: &[DiagnosticsRecord]) -> String {
    let d = records.first().map_or(cfg.dimension, |r| r.momentum.len());
    let cols = record_columns(d);
    let mut out = csv_header(cfg, &cols.iter().map(String::as_str).collect::<Vec<_>>());
    for r in records {
        csv_row(&mut out, &record_values(r));
    }
    out
}

#[derive(Serialize)]
struct GroundStateSummary {
    mass: f64,
    kinetic: f64,
    potential: f64,
    energy: f64,
    ratios: [f64; 3],
    m_gs: f64,
    c_gn: f64,
    c_gn_consistency: f64,
    me_threshold: f64,
    mh_threshold: f64,
    residual: f64,
    iterations: usize,
    stabilizer: f64,
}

fn solve_ground_state(cfg: &RunConfig) -> Result<GroundState> {
    petviashvili_solve(RadialGrid::new(cfg.m, cfg.r_max)?, cfg.kappa, cfg.tol, cfg.max_iter)
}

fn ground_state(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let gs = solve_ground_state(cfg)?;
    let summary = GroundStateSummary {
        mass: gs.mass,
        kinetic: gs.kinetic,
        potential: gs.potential,
        energy: gs.energy(),
        ratios: gs.ratios,
        m_gs: gs.m_gs,
        c_gn: gs.c_gn,
        c_gn_consistency: gn_constant_consistency(&gs),
        me_threshold: gs.me_threshold,
        mh_threshold: gs.mh_threshold,
        residual: gs.residual,
        iterations: gs.iterations,
        stabilizer: gs.stabilizer,
    };
    let json_path = out.join("ground_state.json");
    write_json(&json_path, cfg, serde_json::to_value(&summary)?)?;
    let snap = out.join("ground_state.nlss");
    write_snapshot(&Snapshot::Radial(gs.pair()), 0.0, &snap)?;
    Ok(RunSummary { artifacts: vec![json_path, snap], outcome: "completed".into() })
}

fn evolve(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let p0 = initial_pair(cfg)?;
    let mut ecfg = EvolutionConfig::new(cfg.dt, cfg.t_final, cfg.kappa);
    ecfg.cadence = cfg.cadence;
    let weights = if cfg.morawetz_column && p0.grid().dim() <= 2 {
        Some(build_weights(p0.grid().dim(), cfg.r0, cfg.epsilon, 4096)?)
    } else {
        None
    };
    let mut artifacts = Vec::new();
    let mut last: Option<(f64, FieldPair)> = None;
    let mut index = 0usize;
    let mut failure: Option<Error> = None;
    let ts = evolve_with(&p0, &ecfg, |t, p| {
        if let Some(every) = cfg.snapshot_every {
            if index.is_multiple_of(every) {
                let path = out.join(format!("snapshot_{index:06}.nlss"));
                match write_snapshot(&Snapshot::Uniform(p.clone()), t, &path) {
                    Ok(()) => artifacts.push(path),
                    Err(e) => failure = failure.take().or(Some(e)),
                }
            }
        }
        index += 1;
        last = Some((t, p.clone()));
        weights.as_ref().and_then(|w| morawetz_action(p, w).ok())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let csv = out.join("timeseries.csv");
    fs::write(&csv, timeseries_csv(cfg, &ts.records))?;
    artifacts.push(csv);
    if let Some((t, p)) = last {
        let path = out.join("final.nlss");
        if write_snapshot(&Snapshot::Uniform(p), t, &path).is_ok() {
            artifacts.push(path);
        }
    }
    let json_path = out.join("evolve.json");
    let first = &ts.records[0];
    let final_rec = ts.records.last().expect("initial record");
    write_json(
        &json_path,
        cfg,
        json!({
            "outcome": outcome_name(&ts.outcome),
            "detail": ts.outcome,
            "classification": blow_up_detect(&ts),
            "steps": ts.steps,
            "dt": ts.dt,
            "relative_mass_drift": (final_rec.mass - first.mass) / first.mass,
            "relative_energy_drift": (final_rec.energy - first.energy) / first.energy.abs().max(f64::MIN_POSITIVE),
        }),
    )?;
    artifacts.push(json_path);
    Ok(RunSummary { artifacts, outcome: outcome_name(&ts.outcome).into() })
}

fn morawetz(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let p0 = initial_pair(cfg)?;
    let (p, lambda) = if cfg.normalize { rescale_to_e0(&p0)? } else { (p0, 1.0) };
    let params = InteractionParams {
        r0: cfg.r0,
        j: cfg.j,
        t0: cfg.t0,
        epsilon: cfg.epsilon,
        r_points: cfg.r_points,
        s_stride: cfg.s_stride,
        dt: cfg.dt,
        cadence: cfg.cadence,
    };
    let rep = interaction_lhs(&p, &params)?;
    let mut by_t = csv_header(cfg, &["t", "r_integrated"]);
    for (t, v) in &rep.per_t {
        csv_row(&mut by_t, &[*t, *v]);
    }
    let mut by_r = csv_header(cfg, &["radius", "time_average"]);
    for (r, v) in &rep.per_r {
        csv_row(&mut by_r, &[*r, *v]);
    }
    let (pt, pr, pj) = (out.join("interaction_t.csv"), out.join("interaction_r.csv"), out.join("morawetz.json"));
    fs::write(&pt, by_t)?;
    fs::write(&pr, by_r)?;
    write_json(
        &pj,
        cfg,
        json!({
            "outcome": outcome_name(&rep.outcome),
            "lambda": lambda,
            "accumulator": rep.accumulator,
            "nu": rep.nu,
            "e0": rep.e0,
            "ratio": rep.ratio,
            "min_cell": rep.min_cell,
        }),
    )?;
    Ok(RunSummary { artifacts: vec![pt, pr, pj], outcome: outcome_name(&rep.outcome).into() })
}

fn classify(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let p = initial_pair(cfg)?;
    let gs = solve_ground_state(cfg)?;
    let rep = classify_data(&p, &gs)?;
    let path = out.join("classify.json");
    write_json(&path, cfg, serde_json::to_value(&rep)?)?;
    Ok(RunSummary { artifacts: vec![path], outcome: "completed".into() })
}

fn disperse(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let p = initial_pair(cfg)?;
    let r = cfg.lp.unwrap_or(f64::INFINITY);
    let fit = dispersive_decay_fit(&p.u, r, cfg.t_start, cfg.t_end, cfg.samples)?;
    let d = p.grid().dim() as f64;
    let expected = -d * (0.5 - 1.0 / r);
    let path = out.join("disperse.json");
    write_json(
        &path,
        cfg,
        json!({
            "slope": fit.slope,
            "expected": expected,
            "relative_error": (fit.slope - expected).abs() / expected.abs(),
            "boundary_mass": fit.boundary_mass,
            "samples": fit.samples,
        }),
    )?;
    Ok(RunSummary { artifacts: vec![path], outcome: "completed".into() })
}

/// Runs one command, writing its artifacts into `out` (created if needed).
pub fn run_command(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out)?;
    match cfg.command {
        Command::GroundState => ground_state(cfg, out),
        Command::Evolve => evolve(cfg, out),
        Command::Morawetz => morawetz(cfg, out),
        Command::Classify => classify(cfg, out),
        Command::Disperse => disperse(cfg, out),
    }
}

/// Process exit code for a failed run: 1 for configuration and usage
/// problems, 2 for numeric and I/O failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::Json(_) => 1,
        _ => 2,
    }
}

/// Renders a human-readable listing of the artifacts.
pub fn describe(summary: &RunSummary) -> String {
    let mut s = format!("outcome: {}\n", summary.outcome);
    for a in &summary.artifacts {
        let _ = writeln!(s, "wrote {}", a.display());
    }
    s
}
