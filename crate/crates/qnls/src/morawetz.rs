//! Interaction Morawetz machinery: the bump Γ, the radial weights φ, φ₁, ψ
//! and a, the local boost parameter ξ, the action M(t), the interaction
//! accumulator, and the sign and invariance checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve_with, EvolutionConfig, Outcome};
use crate::fields::{galilean_boost, FieldPair};
use crate::grid::{forward, gradient, inverse, Quadrature, UniformGrid};

const GL8: [(f64, f64); 8] = [
    (-0.9602898564975362, 0.10122853629037669),
    (-0.7966664774136267, 0.22238103445337434),
    (-0.525532409916329, 0.31370664587788705),
    (-0.18343464249564978, 0.36268378337836177),
    (0.18343464249564978, 0.36268378337836177),
    (0.525532409916329, 0.31370664587788705),
    (0.7966664774136267, 0.22238103445337434),
    (0.9602898564975362, 0.10122853629037669),
];

/// Composite 8-point Gauss–Legendre on `[a, b]` with panels no longer than `max_panel`.
fn gauss<const K: usize>(a: f64, b: f64, max_panel: f64, f: impl Fn(f64) -> [f64; K]) -> [f64; K] {
    let mut acc = [0.0; K];
    if b <= a {
        return acc;
    }
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL8 {
            let v = f(mid + 0.5 * h * x);
            for k in 0..K {
                acc[k] += 0.5 * h * w * v[k];
            }
        }
    }
    acc
}

/// Sorted, deduplicated breakpoints inside `(lo, hi)` with the endpoints added.
fn segments(lo: f64, hi: f64, cuts: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > lo && *c < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

/// Smooth radial cutoff: 1 on `[0, 1−ε]`, 0 on `[1, ∞)`, and the
/// `e^{-1/t}` smooth step in between.
pub fn bump_gamma(r: f64, eps: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 - eps {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let s = (1.0 - r) / eps;
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (f(s), f(1.0 - s));
    a / (a + b)
}

/// Volume of the unit ball in ℝᵈ for the supported dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        5 => 8.0 * PI * PI / 15.0,
        _ => f64::NAN,
    }
}

/// Radial weight tables in the scaled variable `ρ = |x|/R`.
///
/// `φ`, `φ₁` and `ψ` are scale free; `a(x) = R² A(|x|/R)` and
/// `∇a(x) = ψ(|x|/R) x`.
#[derive(Debug, Clone, Serialize)]
pub struct MorawetzWeights {
    dim: usize,
    radius: f64,
    epsilon: f64,
    omega: f64,
    drho: f64,
    #[serde(skip)]
    pub gamma: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub phi1: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<f64>,
    /// Scaled `A(ρ) = ∫₀^ρ ψ(τ) τ dτ`.
    #[serde(skip)]
    pub a: Vec<f64>,
    #[serde(skip)]
    pub dphi: Vec<f64>,
    #[serde(skip)]
    pub dpsi: Vec<f64>,
    phi_total: f64,
    moment_total: f64,
}

/// Extent of the tables in `ρ`; φ vanishes beyond 2.
pub const TABLE_EXTENT: f64 = 2.5;

/// `(φ(ρ), φ₁(ρ))` by direct quadrature of the normalized correlation.
fn correlation(d: usize, rho: f64, eps: f64) -> (f64, f64) {
    if rho >= 2.0 {
        return (0.0, 0.0);
    }
    let g = |r: f64| bump_gamma(r, eps);
    let panel = 0.125 * eps;
    let e1 = 1.0 - eps;
    if d == 1 {
        let lo = (rho - 1.0).max(-1.0);
        let cuts = [-1.0, -e1, e1, 1.0, rho - 1.0, rho - e1, rho + e1, rho + 1.0];
        let pts = segments(lo, 1.0, &cuts);
        let mut acc = [0.0; 2];
        for w in pts.windows(2) {
            let v = gauss(w[0], w[1], panel, |s| {
                let a = g(s).powi(2);
                let b = g(rho - s);
                [a * b * b, a * b * b * b]
            });
            acc[0] += v[0];
            acc[1] += v[1];
        }
        return (0.5 * acc[0], 0.5 * acc[1]);
    }
    let (sphere, full) = match d {
        2 => (2.0, PI),
        5 => (2.0 * PI * PI, 4.0 / 3.0),
        _ => unreachable!(),
    };
    let inner = |sigma: f64| -> [f64; 2] {
        let prod = rho * sigma;
        if prod < 1e-14 {
            let t = rho.max(sigma);
            let b = g(t);
            return [b * b * full, b * b * b * full];
        }
        let (t_lo, t_hi) = ((rho - sigma).abs(), rho + sigma);
        let cosine = |t: f64| ((rho * rho + sigma * sigma - t * t) / (2.0 * prod)).clamp(-1.0, 1.0);
        let mut acc = [0.0; 2];
        if t_lo < e1 {
            let c1 = if t_hi <= e1 { -1.0 } else { cosine(e1) };
            let flat = if d == 2 { c1.acos() } else { 2.0 / 3.0 - c1 + c1 * c1 * c1 / 3.0 };
            acc = [flat, flat];
        }
        let (ta, tb) = (t_lo.max(e1), t_hi.min(1.0));
        if tb > ta {
            let v = if d == 5 {
                // sin θ dθ = t dt / (ρσ) turns the sin³θ weight into a polynomial in t.
                gauss(ta, tb, 0.25 * eps, |t| {
                    let c = cosine(t);
                    let w = (1.0 - c * c) * t / prod;
                    let b = g(t);
                    [b * b * w, b * b * b * w]
                })
            } else {
                let (th_a, th_b) = (cosine(ta).acos(), cosine(tb).acos());
                gauss(th_a, th_b, (th_b - th_a) / 4.0, |th| {
                    let t = (rho * rho + sigma * sigma - 2.0 * prod * th.cos()).max(0.0).sqrt();
                    let b = g(t);
                    [b * b, b * b * b]
                })
            };
            acc[0] += v[0];
            acc[1] += v[1];
        }
        acc
    };
    let cuts = [e1, rho - e1, rho + e1, rho - 1.0, rho + 1.0, e1 - rho, 1.0 - rho];
    let pts = segments(0.0, 1.0, &cuts);
    let mut acc = [0.0; 2];
    for w in pts.windows(2) {
        let v = gauss(w[0], w[1], panel, |s| {
            let i = inner(s);
            let weight = g(s).powi(2) * s.powi(d as i32 - 1);
            [weight * i[0], weight * i[1]]
        });
        acc[0] += v[0];
        acc[1] += v[1];
    }
    let norm = sphere / unit_ball_volume(d);
    (norm * acc[0], norm * acc[1])
}

/// Cumulative `∫₀^{ρ_i} f` with a four-point cubic rule per interval.
/// `parity` extends the data to negative `ρ` (+1 even, −1 odd); values past
/// the end are taken as zero.
fn cumulative(f: &[f64], h: f64, parity: f64) -> Vec<f64> {
    let n = f.len();
    let at = |i: isize| -> f64 {
        if i < 0 {
            parity * f[(-i) as usize]
        } else if (i as usize) < n {
            f[i as usize]
        } else {
            0.0
        }
    };
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let k = i as isize;
        let piece = h * (-at(k - 1) + 13.0 * at(k) + 13.0 * at(k + 1) - at(k + 2)) / 24.0;
        out[i + 1] = out[i] + piece;
    }
    out
}

fn centred_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h)
            } else if i == 0 {
                0.0
            } else if i + 1 < n {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            } else {
                (f[i] - f[i - 1]) / h
            }
        })
        .collect()
}

fn interp(table: &[f64], h: f64, rho: f64) -> f64 {
    let x = rho / h;
    let i = x.floor() as usize;
    if i + 1 >= table.len() {
        return table[table.len() - 1];
    }
    let t = x - i as f64;
    table[i] * (1.0 - t) + table[i + 1] * t
}

/// Tabulates the weights for dimension `d ∈ {1, 2, 5}`, radius `R` and
/// smoothing `ε ∈ (0, 1/2]` on `table_size ≥ 4096` nodes in `[0, 2.5]`.
pub fn build_weights(d: usize, radius: f64, eps: f64, table_size: usize) -> Result<MorawetzWeights> {
    if ![1, 2, 5].contains(&d) {
        return Err(Error::InvalidArgument(format!("weights are tabulated for d in {{1, 2, 5}}, got {d}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1/2]")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
    }
    if table_size < 4096 {
        return Err(Error::InvalidArgument(format!("table size {table_size} below 4096")));
    }
    let n = table_size;
    let h = TABLE_EXTENT / (n - 1) as f64;
    let rho: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let gamma: Vec<f64> = rho.iter().map(|&r| bump_gamma(r, eps)).collect();
    let (phi, phi1): (Vec<f64>, Vec<f64>) = rho.iter().map(|&r| correlation(d, r, eps)).unzip();
    let big_phi = cumulative(&phi, h, 1.0);
    let moment: Vec<f64> = phi.iter().zip(&rho).map(|(f, r)| f * r).collect();
    let big_t = cumulative(&moment, h, -1.0);
    let psi: Vec<f64> = (0..n).map(|i| if i == 0 { phi[0] } else { big_phi[i] / rho[i] }).collect();
    let a: Vec<f64> = (0..n).map(|i| rho[i] * big_phi[i] - big_t[i]).collect();
    let dphi = centred_derivative(&phi, h);
    let dpsi = centred_derivative(&psi, h);
    Ok(MorawetzWeights {
        dim: d,
        radius,
        epsilon: eps,
        omega: unit_ball_volume(d),
        drho: h,
        gamma,
        phi,
        phi1,
        psi,
        a,
        dphi,
        dpsi,
        phi_total: big_phi[n - 1],
        moment_total: big_t[n - 1],
    })
}

impl MorawetzWeights {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Unit-ball volume used in the normalization of φ.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn table_step(&self) -> f64 {
        self.drho
    }

    pub fn rho(&self, i: usize) -> f64 {
        i as f64 * self.drho
    }

    pub fn gamma(&self, r: f64) -> f64 {
        bump_gamma(r / self.radius, self.epsilon)
    }

    pub fn phi(&self, r: f64) -> f64 {
        let rho = r.abs() / self.radius;
        if rho >= 2.0 {
            0.0
        } else {
            interp(&self.phi, self.drho, rho)
        }
    }

    pub fn phi1(&self, r: f64) -> f64 {
        let rho = r.abs() / self.radius;
        if rho >= 2.0 {
            0.0
        } else {
            interp(&self.phi1, self.drho, rho)
        }
    }

    pub fn psi(&self, r: f64) -> f64 {
        let rho = r.abs() / self.radius;
        if rho >= TABLE_EXTENT {
            self.phi_total / rho
        } else {
            interp(&self.psi, self.drho, rho)
        }
    }

    pub fn a(&self, r: f64) -> f64 {
        let rho = r.abs() / self.radius;
        let scaled = if rho >= TABLE_EXTENT {
            rho * self.phi_total - self.moment_total
        } else {
            interp(&self.a, self.drho, rho)
        };
        self.radius * self.radius * scaled
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightReport {
    /// `Γ` is 1 below `1−ε`, 0 from 1 on, and nonincreasing on the table.
    pub gamma_ok: bool,
    /// `sup |φ′| · R`.
    pub phi_slope: f64,
    /// `sup (ψ − φ) / min(r/R, R/r)`.
    pub psi_phi_decay: f64,
    /// `sup |φ − φ₁| / ε`.
    pub phi1_gap: f64,
    pub min_psi_minus_phi: f64,
    /// Nodes violating `0 ≤ φ₁ ≤ φ ≤ ψ ≤ 1` by more than 1e-12.
    pub ordering_violations: usize,
    /// `max |Δa − φ − (d−1)ψ|` over interior table nodes.
    pub laplacian_identity: f64,
    /// `max φ` beyond `ρ = 2`.
    pub tail: f64,
}

pub fn weight_identity_check(w: &MorawetzWeights) -> WeightReport {
    let n = w.phi.len();
    let h = w.drho;
    let eps = w.epsilon;
    let mut gamma_ok = true;
    for i in 0..n {
        let r = w.rho(i);
        let g = w.gamma[i];
        if (r <= 1.0 - eps && g != 1.0) || (r >= 1.0 && g != 0.0) || (i > 0 && g > w.gamma[i - 1]) {
            gamma_ok = false;
        }
    }
    let tol = 1e-12;
    let mut ordering_violations = 0;
    let mut min_gap = f64::INFINITY;
    let mut decay = 0.0f64;
    let mut phi1_gap = 0.0f64;
    let mut tail = 0.0f64;
    for i in 0..n {
        let (p1, p, s) = (w.phi1[i], w.phi[i], w.psi[i]);
        if p1 < -tol || p1 > p + tol || p > s + tol || s > 1.0 + tol {
            ordering_violations += 1;
        }
        min_gap = min_gap.min(s - p);
        phi1_gap = phi1_gap.max((p - p1).abs() / eps);
        let rho = w.rho(i);
        if rho > 0.0 {
            decay = decay.max((s - p) / rho.min(1.0 / rho));
        }
        if rho >= 2.0 {
            tail = tail.max(p.abs());
        }
    }
    let phi_slope = w.dphi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dm1 = (w.dim - 1) as f64;
    let mut identity = 0.0f64;
    for i in 2..n - 2 {
        let a = &w.a;
        let d2 = (-a[i + 2] + 16.0 * a[i + 1] - 30.0 * a[i] + 16.0 * a[i - 1] - a[i - 2]) / (12.0 * h * h);
        let d1 = (-a[i + 2] + 8.0 * a[i + 1] - 8.0 * a[i - 1] + a[i - 2]) / (12.0 * h);
        let lap = d2 + dm1 * d1 / w.rho(i);
        identity = identity.max((lap - w.phi[i] - dm1 * w.psi[i]).abs());
    }
    WeightReport {
        gamma_ok,
        phi_slope,
        psi_phi_decay: decay,
        phi1_gap,
        min_psi_minus_phi: min_gap,
        ordering_violations,
        laplacian_identity: identity,
        tail,
    }
}

/// Pointwise densities entering the Morawetz computation.
///
/// `n = 2κ|u|² + |v|²`; per axis `a_j = Im(2u ∂_jū + v ∂_jv̄)` and
/// `l_j = 2|∂_j u|² + κ|∂_j v|²`. The κ-weighted flux is `b_j = κ a_j`.
#[derive(Debug, Clone)]
pub struct Densities {
    pub n: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
}

pub fn densities(p: &FieldPair) -> Densities {
    let k = p.kappa();
    let gu = gradient(&p.u);
    let gv = gradient(&p.v);
    let (u, v) = (p.u.data(), p.v.data());
    let n = u.iter().zip(v).map(|(a, b)| 2.0 * k * a.norm_sqr() + b.norm_sqr()).collect();
    let a = (0..gu.len())
        .map(|j| {
            (0..u.len())
                .map(|i| (2.0 * u[i] * gu[j].data()[i].conj() + v[i] * gv[j].data()[i].conj()).im)
                .collect()
        })
        .collect();
    let l = (0..gu.len())
        .map(|j| (0..u.len()).map(|i| 2.0 * gu[j].data()[i].norm_sqr() + k * gv[j].data()[i].norm_sqr()).collect())
        .collect();
    Densities { n, a, l }
}

/// Spectral convolution with a fixed real kernel sampled at minimal-image
/// displacements from the origin.
struct Convolver {
    grid: UniformGrid,
    hat: Vec<Complex64>,
}

impl Convolver {
    fn new(grid: UniformGrid, kernel: impl Fn(&[f64; 3]) -> f64) -> Self {
        let samples: Vec<Complex64> = (0..grid.size())
            .map(|i| Complex64::new(kernel(&grid.displacement(&grid.point(i), &[0.0; 3])), 0.0))
            .collect();
        Self { grid, hat: forward(&grid, &samples) }
    }

    /// `∫ f(y) K(x − y) dy` at every grid point `x`.
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut spec = forward(g, &f.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>());
        for (z, k) in spec.iter_mut().zip(&self.hat) {
            *z *= k;
        }
        let scale = (g.size() as f64).sqrt() * g.cell_volume();
        inverse(g, &spec).iter().map(|z| z.re * scale).collect()
    }
}

fn weight_at(grid: &UniformGrid, s: &[f64], radius: f64, eps: f64) -> Result<Vec<f64>> {
    if s.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("centre has {} components, grid dimension {}", s.len(), grid.dim())));
    }
    let mut c = [0.0; 3];
    c[..s.len()].copy_from_slice(s);
    Ok((0..grid.size())
        .map(|i| {
            let z = grid.displacement(&grid.point(i), &c);
            let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
            bump_gamma(r / radius, eps).powi(2)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoostChoice {
    pub xi: Vec<f64>,
    pub denominator: f64,
    pub degenerate: bool,
}

/// `∫ Im(2u∇ū + v∇v̄) Γ²((x−s)/R) dx`.
pub fn weighted_momentum(p: &FieldPair, s: &[f64], radius: f64, w: &MorawetzWeights) -> Result<Vec<f64>> {
    let grid = *p.grid();
    let wt = weight_at(&grid, s, radius, w.epsilon())?;
    let dens = densities(p);
    Ok(dens.a.iter().map(|a| grid.integrate(&a.iter().zip(&wt).map(|(x, y)| x * y).collect::<Vec<_>>())).collect())
}

/// The boost that annihilates the Γ²-weighted momentum around `s`:
/// `ξ = ∫ A Γ² / ∫ (2κ|u|² + |v|²) Γ²`, or `ξ = 0` when the denominator vanishes.
pub fn boost_xi(p: &FieldPair, s: &[f64], radius: f64, w: &MorawetzWeights) -> Result<BoostChoice> {
    let grid = *p.grid();
    let wt = weight_at(&grid, s, radius, w.epsilon())?;
    let dens = densities(p);
    let den = grid.integrate(&dens.n.iter().zip(&wt).map(|(x, y)| x * y).collect::<Vec<_>>());
    if !(den > 0.0) {
        return Ok(BoostChoice { xi: vec![0.0; grid.dim()], denominator: den, degenerate: true });
    }
    let xi = dens
        .a
        .iter()
        .map(|a| grid.integrate(&a.iter().zip(&wt).map(|(x, y)| x * y).collect::<Vec<_>>()) / den)
        .collect();
    Ok(BoostChoice { xi, denominator: den, degenerate: false })
}

/// `M(t) = 2 ∫∫ A(x)·∇a(x−y) N(y) dx dy` with `∇a(z) = ψ(|z|/R) z`.
pub fn morawetz_action(p: &FieldPair, w: &MorawetzWeights) -> Result<f64> {
    let grid = *p.grid();
    if grid.dim() > 2 {
        return Err(Error::InvalidArgument("the Morawetz action is evaluated in d = 1 or 2".into()));
    }
    let dens = densities(p);
    let mut total = 0.0;
    for j in 0..grid.dim() {
        let conv = Convolver::new(grid, |z| {
            let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
            w.psi(r) * z[j]
        });
        let field = conv.apply(&dens.n);
        total += grid.integrate(&dens.a[j].iter().zip(&field).map(|(a, f)| a * f).collect::<Vec<_>>());
    }
    Ok(2.0 * total)
}

/// Per-centre integrals `I_X(s) = ∫ X(x) Γ²((x−s)/R) dx`.
struct Localized {
    l: Vec<f64>,
    n: Vec<f64>,
    a: Vec<Vec<f64>>,
}

fn localize(dens: &Densities, conv: &Convolver) -> Localized {
    let l_sum: Vec<f64> = (0..dens.n.len()).map(|i| dens.l.iter().map(|l| l[i]).sum()).collect();
    Localized { l: conv.apply(&l_sum), n: conv.apply(&dens.n), a: dens.a.iter().map(|a| conv.apply(a)).collect() }
}

fn gamma_kernel(grid: UniformGrid, radius: f64, eps: f64) -> Convolver {
    Convolver::new(grid, |z| {
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        bump_gamma(r / radius, eps).powi(2)
    })
}

/// `∫∫∫ [L(x)N(y) − A(x)·B(y)] Γ²((x−s)/R) Γ²((y−s)/R) dx dy ds` and the
/// matching magnitude `∫ (I_L I_N + κ|I_A|²) ds`.
fn paired_quantity(p: &FieldPair, conv: &Convolver) -> (f64, f64) {
    let grid = *p.grid();
    let k = p.kappa();
    let loc = localize(&densities(p), conv);
    let mut value = Vec::with_capacity(grid.size());
    let mut scale = Vec::with_capacity(grid.size());
    for i in 0..grid.size() {
        let a2: f64 = loc.a.iter().map(|a| a[i] * a[i]).sum();
        value.push(loc.l[i] * loc.n[i] - k * a2);
        scale.push(loc.l[i] * loc.n[i] + k * a2);
    }
    (grid.integrate(&value), grid.integrate(&scale))
}

/// Relative change of the paired quantity under `galilean_boost(p, ξ)`.
/// The boosted densities come from the boosted fields' own gradients.
pub fn galilean_invariance_check(p: &FieldPair, xi: &[f64], radius: f64, w: &MorawetzWeights) -> Result<f64> {
    let conv = gamma_kernel(*p.grid(), radius, w.epsilon());
    let (q0, s0) = paired_quantity(p, &conv);
    let (q1, _) = paired_quantity(&galilean_boost(p, xi)?, &conv);
    if s0 == 0.0 {
        return Ok((q1 - q0).abs());
    }
    Ok((q1 - q0).abs() / s0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchySchwarzMargin {
    /// Minimum of the symmetrized per-component margin over sampled pairs.
    pub margin: f64,
    /// Largest `L_j(x) N(y)` product seen, for relative comparisons.
    pub scale: f64,
}

/// Samples point pairs `(x, y)` and returns the minimum over them and over
/// components `j` of
/// `½[L_j(x)N(y) + L_j(y)N(x)] − ½[A_j(x)B_j(y) + A_j(y)B_j(x)]`.
///
/// The symmetrized form is what enters the double integral; it is
/// nonnegative because `κ A_j² ≤ L_j N` holds pointwise. The unsymmetrized
/// cross-point expression has no sign.
pub fn cauchy_schwarz_margin(p: &FieldPair, samples: usize, seed: u64) -> CauchySchwarzMargin {
    let k = p.kappa();
    let dens = densities(p);
    let size = dens.n.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    let mut scale = 0.0f64;
    for _ in 0..samples {
        let x = rng.gen_range(0..size);
        let y = rng.gen_range(0..size);
        for j in 0..dens.a.len() {
            let (lx, ly, ax, ay) = (dens.l[j][x], dens.l[j][y], dens.a[j][x], dens.a[j][y]);
            let (nx, ny) = (dens.n[x], dens.n[y]);
            let m = 0.5 * (lx * ny + ly * nx) - 0.5 * k * (ax * ay + ay * ax);
            margin = margin.min(m);
            scale = scale.max(lx * ny).max(ly * nx);
        }
    }
    if samples == 0 {
        margin = 0.0;
    }
    CauchySchwarzMargin { margin, scale }
}

#[derive(Debug, Clone, Serialize)]
pub struct InteractionParams {
    pub r0: f64,
    pub j: f64,
    pub t0: f64,
    pub epsilon: f64,
    /// Points of the logarithmic R grid.
    pub r_points: usize,
    /// Stride of the s subgrid.
    pub s_stride: usize,
    pub dt: f64,
    /// Steps between time samples.
    pub cadence: usize,
}

impl InteractionParams {
    /// `ν = R₀e^J/(J T₀) + ε`.
    pub fn nu(&self) -> f64 {
        self.r0 * self.j.exp() / (self.j * self.t0) + self.epsilon
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InteractionReport {
    pub accumulator: f64,
    pub nu: f64,
    pub e0: f64,
    /// `accumulator / (ν E₀²)`.
    pub ratio: f64,
    /// Smallest per-cell value `I_{L^ξ} I_N` over the largest `I_L I_N + κ I_A²`.
    pub min_cell: f64,
    /// `(R, time average)` contributions.
    pub per_r: Vec<(f64, f64)>,
    /// `(t, R-integrated)` contributions.
    pub per_t: Vec<(f64, f64)>,
    pub outcome: Outcome,
}

/// Time- and R-averaged interaction integral
/// `(1/(J T₀)) ∫₀^{T₀} ∫_{R₀}^{R₀e^J} R^{-d} ∫ I_{L^ξ}(s) I_N(s) ds dR/R dt`
/// in d = 1, with `ξ = ξ(t, s, R)` the local boost at every cell, so that
/// `I_{L^ξ} = I_L − 2κ ξ I_A + κ ξ² I_N`.
pub fn interaction_lhs(p0: &FieldPair, params: &InteractionParams) -> Result<InteractionReport> {
    let grid = *p0.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the interaction accumulator is evaluated in d = 1".into()));
    }
    if params.r_points == 0 || params.s_stride == 0 || !(params.j > 0.0) || !(params.r0 > 0.0) {
        return Err(Error::InvalidArgument("interaction parameters must be positive".into()));
    }
    let k = p0.kappa();
    let kr = params.r_points;
    let radii: Vec<f64> = (0..kr).map(|i| params.r0 * (params.j * (i as f64 + 0.5) / kr as f64).exp()).collect();
    let d_log_r = params.j / kr as f64;
    let convs: Vec<Convolver> = radii.iter().map(|&r| gamma_kernel(grid, r, params.epsilon)).collect();
    let hs = grid.spacing() * params.s_stride as f64;
    let mut per_t: Vec<(f64, f64)> = Vec::new();
    let mut per_r_series: Vec<Vec<f64>> = vec![Vec::new(); kr];
    let mut min_cell = f64::INFINITY;
    let mut max_mag = 0.0f64;
    let mut cfg = EvolutionConfig::new(params.dt, params.t0, k);
    cfg.cadence = params.cadence.max(1);
    let ts = evolve_with(p0, &cfg, |t, p| {
        let dens = densities(p);
        let mut total = 0.0;
        for (idx, (conv, &r)) in convs.iter().zip(&radii).enumerate() {
            let loc = localize(&dens, conv);
            let mut cell_sum = 0.0;
            for s in (0..grid.size()).step_by(params.s_stride) {
                let (il, inn, ia) = (loc.l[s], loc.n[s], loc.a[0][s]);
                let xi = if inn > 0.0 { ia / inn } else { 0.0 };
                let il_xi = il - 2.0 * k * xi * ia + k * xi * xi * inn;
                let cell = il_xi * inn;
                max_mag = max_mag.max(il * inn + k * ia * ia);
                min_cell = min_cell.min(cell);
                cell_sum += cell;
            }
            let contrib = cell_sum * hs / r;
            per_r_series[idx].push(contrib);
            total += contrib * d_log_r;
        }
        per_t.push((t, total));
        None
    })?;
    let trapezoid = |vals: &[f64], times: &[f64]| -> f64 {
        times.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
    };
    let times: Vec<f64> = per_t.iter().map(|x| x.0).collect();
    let vals: Vec<f64> = per_t.iter().map(|x| x.1).collect();
    let norm = 1.0 / (params.j * params.t0);
    let accumulator = trapezoid(&vals, &times) * norm;
    let per_r = radii
        .iter()
        .zip(&per_r_series)
        .map(|(&r, series)| (r, trapezoid(series, &times) / params.t0))
        .collect();
    let e0 = ts.records[0].energy;
    let nu = params.nu();
    let ratio = if e0 != 0.0 { accumulator / (nu * e0 * e0) } else { 0.0 };
    let min_cell = if max_mag > 0.0 { min_cell / max_mag } else { 0.0 };
    Ok(InteractionReport { accumulator, nu, e0, ratio, min_cell, per_r, per_t, outcome: ts.outcome })
}
