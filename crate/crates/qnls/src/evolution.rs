//! Strang-split time integration, free-propagator diagnostics and blow-up
//! detection.
//!
//! Sign convention: `i∂t u + Δu = 0` gives `û(t) = e^{-i|k|²t} û(0)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{conserved, pair_lp_norm, FieldPair, RadialPair};
use crate::grid::{
    forward_in_place, inverse_in_place, lp_norm_samples, plane_wave, solve_tridiagonal, Field, Quadrature, RadialGrid,
    UniformGrid,
};

/// Default pointwise drift tolerance of the nonlinear substep.
pub const DEFAULT_SUBSTEP_TOL: f64 = 1e-14;
/// Default cap on RK4 substeps per grid point and step.
pub const DEFAULT_MAX_SUBSTEPS: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub kappa: f64,
    /// Steps between diagnostics records.
    pub cadence: usize,
    /// Blow-up flag once `H(t)` exceeds this multiple of `H(0)`.
    pub h_growth_limit: f64,
    /// Pointwise relative drift of `|u|² + |v|²` allowed per nonlinear step.
    pub substep_tol: f64,
    pub max_substeps: usize,
    /// Blow-up flag once the max modulus exceeds this; defaults to `(π/h)²`.
    pub modulus_bound: Option<f64>,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_final: f64, kappa: f64) -> Self {
        Self {
            dt,
            t_final,
            kappa,
            cadence: 10,
            h_growth_limit: 100.0,
            substep_tol: DEFAULT_SUBSTEP_TOL,
            max_substeps: DEFAULT_MAX_SUBSTEPS,
            modulus_bound: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_final = {} must be nonnegative", self.t_final)));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidArgument("cadence must be at least 1".into()));
        }
        if !(self.substep_tol > 0.0) || self.max_substeps == 0 {
            return Err(Error::InvalidArgument("substep tolerance and limit must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually used so that `steps · dt = t_final`.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_final / steps as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
    pub l3_u: f64,
    pub l3_pair: f64,
    pub max_modulus: f64,
    pub morawetz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Outcome {
    Completed,
    BlowUp { t: f64, reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSeries {
    pub records: Vec<DiagnosticsRecord>,
    pub outcome: Outcome,
    pub steps: usize,
    pub dt: f64,
}

fn rk4_point(u: Complex64, v: Complex64, h: f64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let f = |u: Complex64, v: Complex64| (i * v * u.conj(), i * u * u);
    let (k1u, k1v) = f(u, v);
    let (k2u, k2v) = f(u + 0.5 * h * k1u, v + 0.5 * h * k1v);
    let (k3u, k3v) = f(u + 0.5 * h * k2u, v + 0.5 * h * k2v);
    let (k4u, k4v) = f(u + h * k3u, v + h * k3v);
    (u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u), v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v))
}

/// Pointwise flow of `∂t u = i v ū`, `∂t v = i u²` over `dt`.
///
/// Each point doubles its RK4 substep count until the relative drift of
/// `|u|² + |v|²` is below `tol`. Returns the largest substep count used.
pub fn nonlinear_points(u: &mut [Complex64], v: &mut [Complex64], dt: f64, tol: f64, max_substeps: usize) -> Result<usize> {
    let mut worst = 1;
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        let n0 = a.norm_sqr() + b.norm_sqr();
        if n0 == 0.0 {
            continue;
        }
        let mut k = 1;
        loop {
            let h = dt / k as f64;
            let (mut x, mut y) = (*a, *b);
            for _ in 0..k {
                (x, y) = rk4_point(x, y, h);
            }
            let n1 = x.norm_sqr() + y.norm_sqr();
            if (n1 - n0).abs() <= tol * n0 {
                *a = x;
                *b = y;
                worst = worst.max(k);
                break;
            }
            k *= 2;
            if k > max_substeps {
                return Err(Error::Numeric(format!(
                    "nonlinear substep tolerance {tol:e} not met with {max_substeps} substeps"
                )));
            }
        }
    }
    Ok(worst)
}

fn tilts_compatible(tu: [f64; 3], tv: [f64; 3]) -> bool {
    (0..3).all(|a| (tv[a] - 2.0 * tu[a]).abs() <= 1e-12 * (1.0 + tv[a].abs()))
}

/// Returns the pair itself, or a copy with commensurate tilts absorbed, such
/// that the tilt of `v` is twice the tilt of `u`.
fn nonlinear_ready(p: &FieldPair) -> Result<FieldPair> {
    if tilts_compatible(p.u.tilt(), p.v.tilt()) {
        return Ok(p.clone());
    }
    let mut q = p.clone();
    q.u.absorb_tilt(1e-12);
    q.v.absorb_tilt(1e-12);
    if tilts_compatible(q.u.tilt(), q.v.tilt()) {
        Ok(q)
    } else {
        Err(Error::InvalidArgument(
            "phase tilts of u and v are incompatible with the quadratic nonlinearity".into(),
        ))
    }
}

fn free_multiplier(grid: &UniformGrid, tilt: [f64; 3], coeff: f64, tau: f64) -> Vec<Complex64> {
    (0..grid.size())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let mut k2 = 0.0;
            for a in 0..grid.dim() {
                let k = grid.wavenumber(idx[a]) + tilt[a];
                k2 += k * k;
            }
            Complex64::from_polar(1.0, -coeff * k2 * tau)
        })
        .collect()
}

fn apply_free(grid: &UniformGrid, g: &mut [Complex64], mult: &[Complex64]) {
    forward_in_place(grid, g);
    for (z, m) in g.iter_mut().zip(mult) {
        *z *= m;
    }
    inverse_in_place(grid, g);
}

/// Exact free flow: `û ↦ e^{-i|k|²dt} û`, `v̂ ↦ e^{-iκ|k|²dt} v̂`.
pub fn linear_step(p: &FieldPair, dt: f64) -> FieldPair {
    let mut out = p.clone();
    propagate_field(&mut out.u, 1.0, dt);
    propagate_field(&mut out.v, p.kappa(), dt);
    out
}

/// Applies `e^{i coeff Δ t}` to a single field in place.
pub fn propagate_field(f: &mut Field, coeff: f64, t: f64) {
    let grid = *f.grid();
    let tilt = f.tilt();
    let mut g = f.envelope();
    apply_free(&grid, &mut g, &free_multiplier(&grid, tilt, coeff, t));
    if tilt != [0.0; 3] {
        for (z, ph) in g.iter_mut().zip(plane_wave(&grid, tilt)) {
            *z *= ph;
        }
    }
    f.data_mut().copy_from_slice(&g);
}

pub fn nonlinear_step(p: &FieldPair, dt: f64) -> Result<FieldPair> {
    nonlinear_step_with(p, dt, DEFAULT_SUBSTEP_TOL, DEFAULT_MAX_SUBSTEPS)
}

pub fn nonlinear_step_with(p: &FieldPair, dt: f64, tol: f64, max_substeps: usize) -> Result<FieldPair> {
    let mut q = nonlinear_ready(p)?;
    let mut u = q.u.data().to_vec();
    let mut v = q.v.data().to_vec();
    nonlinear_points(&mut u, &mut v, dt, tol, max_substeps)?;
    q.u.data_mut().copy_from_slice(&u);
    q.v.data_mut().copy_from_slice(&v);
    Ok(q)
}

/// `linear(dt/2) ∘ nonlinear(dt) ∘ linear(dt/2)`.
pub fn strang_step(p: &FieldPair, dt: f64) -> Result<FieldPair> {
    let half = linear_step(p, 0.5 * dt);
    let mid = nonlinear_step(&half, dt)?;
    Ok(linear_step(&mid, 0.5 * dt))
}

/// Split-step state held as periodic envelopes, so the tilt phases are
/// applied only when a diagnostics record needs true samples.
struct Stepper {
    grid: UniformGrid,
    kappa: f64,
    tilt_u: [f64; 3],
    tilt_v: [f64; 3],
    gu: Vec<Complex64>,
    gv: Vec<Complex64>,
    half: (Vec<Complex64>, Vec<Complex64>),
    full: (Vec<Complex64>, Vec<Complex64>),
    phases: Option<(Vec<Complex64>, Vec<Complex64>)>,
}

impl Stepper {
    fn new(p: &FieldPair, dt: f64) -> Result<Self> {
        let p = nonlinear_ready(p)?;
        let grid = *p.grid();
        let (tu, tv) = (p.u.tilt(), p.v.tilt());
        let k = p.kappa();
        let phases = if tu == [0.0; 3] && tv == [0.0; 3] {
            None
        } else {
            Some((plane_wave(&grid, tu), plane_wave(&grid, tv)))
        };
        Ok(Self {
            grid,
            kappa: k,
            tilt_u: tu,
            tilt_v: tv,
            gu: p.u.envelope(),
            gv: p.v.envelope(),
            half: (free_multiplier(&grid, tu, 1.0, 0.5 * dt), free_multiplier(&grid, tv, k, 0.5 * dt)),
            full: (free_multiplier(&grid, tu, 1.0, dt), free_multiplier(&grid, tv, k, dt)),
            phases,
        })
    }

    fn linear(&mut self, full: bool) {
        let (mu, mv) = if full { &self.full } else { &self.half };
        apply_free(&self.grid, &mut self.gu, mu);
        apply_free(&self.grid, &mut self.gv, mv);
    }

    fn pair(&self) -> FieldPair {
        let (mut u, mut v) = (self.gu.clone(), self.gv.clone());
        if let Some((pu, pv)) = &self.phases {
            u.iter_mut().zip(pu).for_each(|(z, p)| *z *= p);
            v.iter_mut().zip(pv).for_each(|(z, p)| *z *= p);
        }
        FieldPair::new(
            Field::with_tilt(self.grid, u, self.tilt_u).expect("sizes match"),
            Field::with_tilt(self.grid, v, self.tilt_v).expect("sizes match"),
            self.kappa,
        )
        .expect("same grid")
    }
}

fn record(t: f64, p: &FieldPair, morawetz: Option<f64>) -> DiagnosticsRecord {
    let c = conserved(p);
    let l3_u = lp_norm_samples(p.grid(), p.u.data(), 3.0);
    DiagnosticsRecord {
        t,
        mass: c.mass,
        kinetic: c.kinetic,
        potential: c.potential,
        energy: c.energy,
        momentum: c.momentum,
        l3_u,
        l3_pair: pair_lp_norm(p, 3.0).expect("finite exponent"),
        max_modulus: p.u.data().iter().chain(p.v.data()).fold(0.0f64, |m, z| m.max(z.norm())),
        morawetz,
    }
}

fn record_is_finite(r: &DiagnosticsRecord) -> bool {
    [r.mass, r.kinetic, r.potential, r.max_modulus].iter().all(|x| x.is_finite())
        && r.momentum.iter().all(|x| x.is_finite())
}

/// Checks a fresh record against the blow-up criteria.
fn blow_up_reason(rec: &DiagnosticsRecord, h0: f64, cfg: &EvolutionConfig, bound: f64) -> Option<String> {
    if rec.max_modulus > bound {
        return Some(format!("max modulus {:.6e} exceeds resolution bound {:.6e}", rec.max_modulus, bound));
    }
    if h0 > 0.0 && rec.kinetic > cfg.h_growth_limit * h0 {
        return Some(format!("kinetic energy grew by more than {}x", cfg.h_growth_limit));
    }
    None
}

pub fn evolve(p0: &FieldPair, cfg: &EvolutionConfig) -> Result<TimeSeries> {
    evolve_with(p0, cfg, |_, _| None)
}

/// Runs the split-step scheme, calling `observer(t, pair)` at every record;
/// its return value fills the Morawetz column.
pub fn evolve_with(
    p0: &FieldPair,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(f64, &FieldPair) -> Option<f64>,
) -> Result<TimeSeries> {
    cfg.validate()?;
    if (cfg.kappa - p0.kappa()).abs() > 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "configured kappa {} differs from the pair's {}",
            cfg.kappa,
            p0.kappa()
        )));
    }
    if !p0.is_finite() {
        return Err(Error::NonFinite("initial data".into()));
    }
    let (steps, dt) = cfg.schedule();
    let bound = cfg.modulus_bound.unwrap_or_else(|| p0.grid().k_max().powi(2));
    let mut st = Stepper::new(p0, dt)?;
    let first = st.pair();
    let m0 = observer(0.0, &first);
    let rec0 = record(0.0, &first, m0);
    let h0 = rec0.kinetic;
    let mut records = vec![rec0];
    if let Some(reason) = blow_up_reason(&records[0], h0, cfg, bound) {
        return Ok(TimeSeries { records, outcome: Outcome::BlowUp { t: 0.0, reason }, steps: 0, dt });
    }
    let mut done = 0;
    while done < steps {
        let chunk = cfg.cadence.min(steps - done);
        st.linear(false);
        for i in 0..chunk {
            if let Err(e) = nonlinear_points(&mut st.gu, &mut st.gv, dt, cfg.substep_tol, cfg.max_substeps) {
                let t = (done + i) as f64 * dt;
                return Ok(TimeSeries {
                    records,
                    outcome: Outcome::BlowUp { t, reason: format!("unresolved nonlinear step: {e}") },
                    steps: done + i,
                    dt,
                });
            }
            st.linear(i + 1 < chunk);
        }
        done += chunk;
        let t = done as f64 * dt;
        let p = st.pair();
        let acc = observer(t, &p);
        let rec = record(t, &p, acc);
        if !record_is_finite(&rec) || !p.is_finite() {
            return Err(Error::NonFinite(format!("state at t = {t}")));
        }
        let reason = blow_up_reason(&rec, h0, cfg, bound);
        records.push(rec);
        if let Some(reason) = reason {
            return Ok(TimeSeries { records, outcome: Outcome::BlowUp { t, reason }, steps: done, dt });
        }
    }
    Ok(TimeSeries { records, outcome: Outcome::Completed, steps, dt })
}

/// Final state after `evolve`-equivalent stepping, for callers that need
/// fields. A flagged blow-up is reported as a numeric error.
pub fn evolve_state(p0: &FieldPair, cfg: &EvolutionConfig) -> Result<FieldPair> {
    let mut last = None;
    let ts = evolve_with(p0, cfg, |t, p| {
        if t >= cfg.t_final - 1e-12 {
            last = Some(p.clone());
        }
        None
    })?;
    if let Outcome::BlowUp { t, reason } = ts.outcome {
        return Err(Error::Numeric(format!("run stopped at t = {t}: {reason}")));
    }
    Ok(last.unwrap_or_else(|| p0.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlowUpClass {
    GlobalLooking,
    BlowUp,
    Undecided,
}

/// Classifies a run: flagged runs are blow-up; completed runs whose kinetic
/// energy stayed within `10 · max(H(0), 1)` look global.
pub fn blow_up_detect(ts: &TimeSeries) -> BlowUpClass {
    if matches!(ts.outcome, Outcome::BlowUp { .. }) {
        return BlowUpClass::BlowUp;
    }
    let Some(first) = ts.records.first() else {
        return BlowUpClass::Undecided;
    };
    let h_max = ts.records.iter().fold(0.0f64, |m, r| m.max(r.kinetic));
    if h_max <= 10.0 * first.kinetic.max(1.0) {
        BlowUpClass::GlobalLooking
    } else {
        BlowUpClass::Undecided
    }
}

/// Circular-mean centre of mass of `|u|² + |v|²` per axis.
pub fn centre_of_mass(p: &FieldPair) -> Vec<f64> {
    let grid = p.grid();
    let l = grid.length();
    (0..grid.dim())
        .map(|a| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..grid.size() {
                let w = p.u.data()[i].norm_sqr() + p.v.data()[i].norm_sqr();
                acc += w * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * grid.point(i)[a] / l);
            }
            let theta = acc.arg().rem_euclid(2.0 * std::f64::consts::PI);
            theta * l / (2.0 * std::f64::consts::PI)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersiveFit {
    pub slope: f64,
    pub samples: Vec<(f64, f64)>,
    /// Largest fraction of mass found in the outer shell of the box.
    pub boundary_mass: f64,
}

/// Fraction of `∫|f|²` in the outer 10% shell of the box (any axis).
pub fn boundary_mass_fraction(grid: &UniformGrid, data: &[Complex64]) -> f64 {
    let l = grid.length();
    let mut edge = 0.0;
    let mut total = 0.0;
    for (i, z) in data.iter().enumerate() {
        let x = grid.point(i);
        let w = z.norm_sqr();
        total += w;
        if (0..grid.dim()).any(|a| x[a] < 0.05 * l || x[a] >= 0.95 * l) {
            edge += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

/// Fits the exponent of `‖e^{itΔ} f₀‖_{Lʳ}` against `t` over geometrically
/// spaced samples in `[t0, t1]`, evaluating the free multiplier directly at
/// each sample time.
pub fn dispersive_decay_fit(f0: &Field, r: f64, t0: f64, t1: f64, samples: usize) -> Result<DispersiveFit> {
    if !(t0 > 0.0 && t1 > t0) || samples < 2 {
        return Err(Error::InvalidArgument("need 0 < t0 < t1 and at least two samples".into()));
    }
    let grid = *f0.grid();
    let mut boundary = boundary_mass_fraction(&grid, f0.data());
    let mut pts = Vec::with_capacity(samples);
    for s in 0..samples {
        let t = t0 * (t1 / t0).powf(s as f64 / (samples - 1) as f64);
        let mut f = f0.clone();
        propagate_field(&mut f, 1.0, t);
        boundary = boundary.max(boundary_mass_fraction(&grid, f.data()));
        if boundary > 1e-6 {
            return Err(Error::Numeric(format!(
                "wrap-around: {boundary:.3e} of the mass reached the box boundary by t = {t}"
            )));
        }
        pts.push((t, lp_norm_samples(&grid, f.data(), r)));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(DispersiveFit { slope: sxy / sxx, samples: pts, boundary_mass: boundary })
}

/// Weighted-symmetric second-order 5-D radial Laplacian with flux weights
/// `r_{j±1/2}⁴`, zero flux through the origin and `f = 0` beyond `r_max`.
/// Returns `(lower, diag, upper)`.
pub fn conservative_radial_laplacian(grid: &RadialGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = grid.m();
    let h = grid.dr();
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for j in 0..m {
        let r = grid.node(j);
        let rp = (r + 0.5 * h).powi(4);
        let rm = if j == 0 { 0.0 } else { (r - 0.5 * h).powi(4) };
        let s = 1.0 / (r.powi(4) * h * h);
        diag[j] = -(rp + rm) * s;
        if j > 0 {
            lower[j] = rm * s;
        }
        if j + 1 < m {
            upper[j] = rp * s;
        }
    }
    (lower, diag, upper)
}

/// `∫|∇f|²` with the conservative flux form, consistent with the
/// Crank–Nicolson radial dynamics.
pub fn conservative_dirichlet(grid: &RadialGrid, f: &[Complex64]) -> f64 {
    let h = grid.dr();
    let m = f.len();
    let mut acc = 0.0;
    for j in 0..m {
        let next = if j + 1 < m { f[j + 1] } else { Complex64::new(0.0, 0.0) };
        acc += (grid.node(j) + 0.5 * h).powi(4) * (next - f[j]).norm_sqr();
    }
    acc * crate::grid::SIGMA4 / h
}

/// Radial conserved quantities with the conservative kinetic energy.
pub fn radial_record(t: f64, p: &RadialPair) -> DiagnosticsRecord {
    let grid = *p.grid();
    let k = crate::fields::PairFunctionals::kappa(p);
    let mass = grid.integrate(&p.u.iter().zip(&p.v).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect::<Vec<_>>());
    let kinetic = conservative_dirichlet(&grid, &p.u) + 0.5 * k * conservative_dirichlet(&grid, &p.v);
    let potential = grid.integrate(&p.u.iter().zip(&p.v).map(|(u, v)| (v.conj() * u * u).re).collect::<Vec<_>>());
    let l3 = |f: &dyn Fn(usize) -> f64| {
        grid.integrate(&(0..grid.m()).map(|j| f(j).powi(3)).collect::<Vec<_>>()).cbrt()
    };
    DiagnosticsRecord {
        t,
        mass,
        kinetic,
        potential,
        energy: kinetic - potential,
        momentum: vec![],
        l3_u: l3(&|j| p.u[j].norm()),
        l3_pair: l3(&|j| (p.u[j].norm_sqr() + p.v[j].norm_sqr()).sqrt()),
        max_modulus: p.u.iter().chain(&p.v).fold(0.0f64, |m, z| m.max(z.norm())),
        morawetz: None,
    }
}

struct CrankNicolson {
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    explicit: (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>),
}

impl CrankNicolson {
    /// `(1 − i c τ/2 A) f⁺ = (1 + i c τ/2 A) f`.
    fn new(a: &(Vec<f64>, Vec<f64>, Vec<f64>), coeff: f64, tau: f64) -> Self {
        let z = Complex64::new(0.0, 0.5 * coeff * tau);
        let one = Complex64::new(1.0, 0.0);
        let imp = |x: &[f64], shift: bool| -> Vec<Complex64> {
            x.iter().map(|&v| if shift { one - z * v } else { -z * v }).collect()
        };
        let exp = |x: &[f64], shift: bool| -> Vec<Complex64> {
            x.iter().map(|&v| if shift { one + z * v } else { z * v }).collect()
        };
        Self {
            lower: imp(&a.0, false),
            diag: imp(&a.1, true),
            upper: imp(&a.2, false),
            explicit: (exp(&a.0, false), exp(&a.1, true), exp(&a.2, false)),
        }
    }

    fn step(&self, f: &mut [Complex64]) {
        let m = f.len();
        let (lo, di, up) = &self.explicit;
        let rhs: Vec<Complex64> = (0..m)
            .map(|j| {
                let mut s = di[j] * f[j];
                if j > 0 {
                    s += lo[j] * f[j - 1];
                }
                if j + 1 < m {
                    s += up[j] * f[j + 1];
                }
                s
            })
            .collect();
        let out = solve_tridiagonal(&self.lower, &self.diag, &self.upper, &rhs).expect("Crank-Nicolson matrix is invertible");
        f.copy_from_slice(&out);
    }
}

/// Strang splitting for radial data in ℝ⁵: Crank–Nicolson free steps with
/// the conservative Laplacian (unitary in the quadrature norm) around the
/// pointwise nonlinear flow. Records use the conservative kinetic energy.
pub fn evolve_radial(p0: &RadialPair, cfg: &EvolutionConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let grid = *p0.grid();
    let kappa = crate::fields::PairFunctionals::kappa(p0);
    let (steps, dt) = cfg.schedule();
    let a = conservative_radial_laplacian(&grid);
    let half = (CrankNicolson::new(&a, 1.0, 0.5 * dt), CrankNicolson::new(&a, kappa, 0.5 * dt));
    let bound = cfg.modulus_bound.unwrap_or_else(|| (std::f64::consts::PI / grid.dr()).powi(2));
    let mut u = p0.u.clone();
    let mut v = p0.v.clone();
    let rec0 = radial_record(0.0, p0);
    let h0 = rec0.kinetic;
    let mut records = vec![rec0];
    let mut done = 0;
    while done < steps {
        let chunk = cfg.cadence.min(steps - done);
        for i in 0..chunk {
            half.0.step(&mut u);
            half.1.step(&mut v);
            if let Err(e) = nonlinear_points(&mut u, &mut v, dt, cfg.substep_tol, cfg.max_substeps) {
                let t = (done + i) as f64 * dt;
                return Ok(TimeSeries {
                    records,
                    outcome: Outcome::BlowUp { t, reason: format!("unresolved nonlinear step: {e}") },
                    steps: done + i,
                    dt,
                });
            }
            half.0.step(&mut u);
            half.1.step(&mut v);
        }
        done += chunk;
        let t = done as f64 * dt;
        let p = RadialPair::new(grid, u.clone(), v.clone(), kappa)?;
        let rec = radial_record(t, &p);
        if !record_is_finite(&rec) {
            return Err(Error::NonFinite(format!("radial state at t = {t}")));
        }
        let reason = blow_up_reason(&rec, h0, cfg, bound);
        records.push(rec);
        if let Some(reason) = reason {
            return Ok(TimeSeries { records, outcome: Outcome::BlowUp { t, reason }, steps: done, dt });
        }
    }
    Ok(TimeSeries { records, outcome: Outcome::Completed, steps, dt })
}
