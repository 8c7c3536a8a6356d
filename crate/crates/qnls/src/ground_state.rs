//! Ground state of `φ − Δφ = φϕ`, `2ϕ − κΔϕ = φ²` on the 5-D radial
//! half-line, its Pohozaev ratios and the constants derived from it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{FieldPair, RadialPair};
use crate::grid::{apply_multiplier, CompactRadial, Field, Quadrature, RadialGrid, UniformGrid};

/// Default amplitude of the Gaussian initial guess `a e^{-r²}`.
pub const DEFAULT_GUESS_AMPLITUDE: f64 = 3.0;

/// Converged radial profile pair and the quantities derived from it.
#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    #[serde(skip)]
    pub grid: RadialGrid,
    pub kappa: f64,
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub varphi: Vec<f64>,
    /// Sup-norm of both equation residuals relative to the sup of the profiles.
    pub residual: f64,
    pub iterations: usize,
    /// Joint stabilizing factor `(⟨L₁φ,φ⟩ + ⟨L₂ϕ,ϕ⟩)/(2R)` at the last iterate.
    pub stabilizer: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// `(1, H/M, R/M)`.
    pub ratios: [f64; 3],
    /// `M_gs = M(Q)`.
    pub m_gs: f64,
    /// `4·5^{-5/4} M_gs^{-1/2}`.
    pub c_gn: f64,
    /// `M(Q)E(Q)`.
    pub me_threshold: f64,
    /// `M(Q)H(Q)`.
    pub mh_threshold: f64,
    /// Residuals of the final iterations, oldest first.
    pub residual_tail: Vec<f64>,
}

impl GroundState {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        grid: RadialGrid,
        kappa: f64,
        phi: Vec<f64>,
        varphi: Vec<f64>,
        funcs: (f64, f64, f64),
        residual: f64,
        iterations: usize,
        stabilizer: f64,
        residual_tail: Vec<f64>,
    ) -> Self {
        let (mass, kinetic, potential) = funcs;
        let c_gn = sharp_gn_constant_from_mass(mass);
        GroundState {
            grid,
            kappa,
            phi,
            varphi,
            residual,
            iterations,
            stabilizer,
            mass,
            kinetic,
            potential,
            ratios: [1.0, kinetic / mass, potential / mass],
            m_gs: mass,
            c_gn,
            me_threshold: mass * (kinetic - potential),
            mh_threshold: mass * kinetic,
            residual_tail,
        }
    }

    pub fn energy(&self) -> f64 {
        self.kinetic - self.potential
    }

    /// The profiles as a radial pair.
    pub fn pair(&self) -> RadialPair {
        RadialPair::from_real(self.grid, &self.phi, &self.varphi, self.kappa).expect("profiles match grid")
    }

    /// `J(Q) = M^{1/2} H^{5/2} R^{-2}` from the stored functionals.
    pub fn gn_quotient(&self) -> f64 {
        self.mass.sqrt() * self.kinetic.powf(2.5) / (self.potential * self.potential)
    }
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Functionals `(M, H, R)` of a real radial pair with the compact Laplacian.
pub fn radial_functionals(op: &CompactRadial, kappa: f64, phi: &[f64], varphi: &[f64]) -> (f64, f64, f64) {
    let w = op.weights();
    let m = weighted_dot(w, phi, phi) + weighted_dot(w, varphi, varphi);
    let h = op.dirichlet(phi) + 0.5 * kappa * op.dirichlet(varphi);
    let r: f64 = w.iter().zip(phi).zip(varphi).map(|((w, p), q)| w * q * p * p).sum();
    (m, h, r)
}

/// Stabilized Petviashvili iteration on the compact fourth-order discretization.
///
/// Each component carries its own stabilizing factor, `S₁ = ⟨L₁φ,φ⟩/R` and
/// `S₂ = ⟨L₂ϕ,ϕ⟩/R`, and the update is
/// `φ ← S₁^{3/2} S₂^{1/2} L₁⁻¹(φϕ)`, `ϕ ← S₁ S₂ L₂⁻¹(φ²)`. The exponents
/// cancel both amplitude modes of the quadratic map; a single joint factor
/// leaves the relative amplitude of `φ` and `ϕ` neutrally stable and the
/// iteration oscillates with period two.
pub fn petviashvili_solve(grid: RadialGrid, kappa: f64, tol: f64, max_iter: usize) -> Result<GroundState> {
    petviashvili_solve_from(grid, kappa, tol, max_iter, DEFAULT_GUESS_AMPLITUDE)
}

pub fn petviashvili_solve_from(
    grid: RadialGrid,
    kappa: f64,
    tol: f64,
    max_iter: usize,
    amplitude: f64,
) -> Result<GroundState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    if !(amplitude > 0.0) {
        return Err(Error::InvalidArgument(format!("guess amplitude {amplitude} must be positive")));
    }
    let op = CompactRadial::new(grid);
    let w = op.weights().to_vec();
    let mut phi: Vec<f64> = op.nodes().iter().map(|r| amplitude * (-r * r).exp()).collect();
    let mut varphi = phi.clone();
    let mut tail: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;
    let mut joint = f64::NAN;
    for it in 1..=max_iter {
        let r: f64 = w.iter().zip(&phi).zip(&varphi).map(|((w, p), q)| w * q * p * p).sum();
        let l1 = weighted_dot(&w, &phi, &phi) + op.dirichlet(&phi);
        let l2 = 2.0 * weighted_dot(&w, &varphi, &varphi) + kappa * op.dirichlet(&varphi);
        let (s1, s2) = (l1 / r, l2 / r);
        joint = (l1 + l2) / (2.0 * r);
        if !(r > 0.0) || !s1.is_finite() || !s2.is_finite() || s1 <= 0.0 || s2 <= 0.0 {
            return Err(Error::Numeric(format!("iteration collapsed at step {it} (R = {r:e})")));
        }
        let src1: Vec<f64> = phi.iter().zip(&varphi).map(|(p, q)| p * q).collect();
        let src2: Vec<f64> = phi.iter().map(|p| p * p).collect();
        let f1 = s1.powf(1.5) * s2.sqrt();
        let f2 = s1 * s2;
        phi = op.solve(1.0, 1.0, &src1).into_iter().map(|x| f1 * x).collect();
        varphi = op.solve(2.0, kappa, &src2).into_iter().map(|x| f2 * x).collect();

        let scale = sup(&phi).max(sup(&varphi));
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Numeric(format!("iteration collapsed at step {it}")));
        }
        let floor = phi.iter().chain(&varphi).fold(f64::INFINITY, |m, &v| m.min(v));
        if floor < -1e-10 * scale {
            return Err(Error::Numeric(format!("profile turned negative ({floor:e}) at step {it}")));
        }
        residual = equation_residual(&op, kappa, &phi, &varphi) / scale;
        tail.push(residual);
        if tail.len() > 10 {
            tail.remove(0);
        }
        if residual < tol {
            let funcs = radial_functionals(&op, kappa, &phi, &varphi);
            return Ok(GroundState::assemble(grid, kappa, phi, varphi, funcs, residual, it, joint, tail));
        }
    }
    let _ = joint;
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// Sup-norm of `φ − Δφ − φϕ` and `2ϕ − κΔϕ − φ²`.
fn equation_residual(op: &CompactRadial, kappa: f64, phi: &[f64], varphi: &[f64]) -> f64 {
    let lp = op.laplacian(phi);
    let lq = op.laplacian(varphi);
    let mut res = 0.0f64;
    for j in 0..phi.len() {
        let e1 = phi[j] - lp[j] - phi[j] * varphi[j];
        let e2 = 2.0 * varphi[j] - kappa * lq[j] - phi[j] * phi[j];
        res = res.max(e1.abs()).max(e2.abs());
    }
    res
}

/// Independent coarse solver used to cross-check `M_gs`.
///
/// Conservative second-order discretization with flux weights `r_{j±1/2}⁴`,
/// dense LU factorizations, and a damped fixed point on
/// `φ = L₁⁻¹(φϕ)`, `ϕ = L₂⁻¹(φ²)` renormalized every step so that
/// `⟨L₁φ,φ⟩ + ⟨L₂ϕ,ϕ⟩ = 2R`.
pub fn oracle_coarse_solve(m: usize, r_max: f64, kappa: f64) -> Result<GroundState> {
    if m > 512 {
        return Err(Error::InvalidArgument(format!("oracle resolution m = {m} exceeds 512")));
    }
    let grid = RadialGrid::new(m, r_max)?;
    let h = grid.dr();
    let r = grid.nodes();
    let w = grid.weights();
    let mut lap = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let rp = (r[j] + 0.5 * h).powi(4);
        let rm = if j == 0 { 0.0 } else { (r[j] - 0.5 * h).powi(4) };
        let s = 1.0 / (r[j].powi(4) * h * h);
        lap[(j, j)] = -(rp + rm) * s;
        if j > 0 {
            lap[(j, j - 1)] = rm * s;
        }
        if j + 1 < m {
            lap[(j, j + 1)] = rp * s;
        }
    }
    let ident = DMatrix::<f64>::identity(m, m);
    let l1 = &ident - &lap;
    let l2 = &ident * 2.0 - &lap * kappa;
    let lu1 = l1.clone().lu();
    let lu2 = l2.clone().lu();
    let dot = |a: &DVector<f64>, b: &DVector<f64>| -> f64 { (0..m).map(|j| w[j] * a[j] * b[j]).sum() };

    let mut phi = DVector::from_iterator(m, r.iter().map(|x| 3.0 * (-x * x).exp()));
    let mut varphi = phi.clone();
    let theta = 0.5;
    let max_iter = 20_000;
    let tol = 1e-9;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let src1 = phi.component_mul(&varphi);
        let src2 = phi.component_mul(&phi);
        let a = lu1.solve(&src1).ok_or_else(|| Error::Numeric("singular oracle operator".into()))?;
        let b = lu2.solve(&src2).ok_or_else(|| Error::Numeric("singular oracle operator".into()))?;
        phi = &phi * (1.0 - theta) + a * theta;
        varphi = &varphi * (1.0 - theta) + b * theta;
        let rr = dot(&varphi, &phi.component_mul(&phi));
        if !(rr > 0.0) {
            return Err(Error::Numeric(format!("oracle collapsed at step {it}")));
        }
        let c = (dot(&(&l1 * &phi), &phi) + dot(&(&l2 * &varphi), &varphi)) / (2.0 * rr);
        phi *= c;
        varphi *= c;
        let e1 = &l1 * &phi - phi.component_mul(&varphi);
        let e2 = &l2 * &varphi - phi.component_mul(&phi);
        let scale = phi.amax().max(varphi.amax());
        residual = e1.amax().max(e2.amax()) / scale;
        if residual < tol {
            let mass = dot(&phi, &phi) + dot(&varphi, &varphi);
            let kinetic = -dot(&(&lap * &phi), &phi) - 0.5 * kappa * dot(&(&lap * &varphi), &varphi);
            let potential = dot(&varphi, &phi.component_mul(&phi));
            return Ok(GroundState::assemble(
                grid,
                kappa,
                phi.iter().copied().collect(),
                varphi.iter().copied().collect(),
                (mass, kinetic, potential),
                residual,
                it,
                c,
                vec![residual],
            ));
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// `(1, H/M, R/M)`.
pub fn pohozaev_ratios(gs: &GroundState) -> (f64, f64, f64) {
    (1.0, gs.kinetic / gs.mass, gs.potential / gs.mass)
}

/// `(1, H/M, R/M)` of an arbitrary real radial pair.
pub fn pair_ratios(grid: RadialGrid, kappa: f64, phi: &[f64], varphi: &[f64]) -> (f64, f64, f64) {
    let op = CompactRadial::new(grid);
    let (m, h, r) = radial_functionals(&op, kappa, phi, varphi);
    (1.0, h / m, r / m)
}

pub fn sharp_gn_constant_from_mass(m_gs: f64) -> f64 {
    4.0 * 5f64.powf(-1.25) / m_gs.sqrt()
}

/// `C_GN = 4·5^{-5/4} M_gs^{-1/2}`.
pub fn sharp_gn_constant(gs: &GroundState) -> f64 {
    sharp_gn_constant_from_mass(gs.m_gs)
}

/// Relative gap between the closed-form constant and `J(Q)^{-1/2}`.
pub fn gn_constant_consistency(gs: &GroundState) -> f64 {
    let direct = gs.gn_quotient().powf(-0.5);
    (sharp_gn_constant(gs) - direct).abs() / direct
}

/// Ground-state analogue on a periodic box in dimension `d ≤ 3`.
#[derive(Debug, Clone)]
pub struct PeriodicGroundState {
    pub pair: FieldPair,
    pub residual: f64,
    pub iterations: usize,
}

/// Stabilized Petviashvili iteration with spectral operators on a periodic
/// box, centred at the middle of the box. Used to seed soliton dynamics.
pub fn periodic_ground_state(grid: UniformGrid, kappa: f64, tol: f64, max_iter: usize) -> Result<PeriodicGroundState> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    let centre = grid.length() / 2.0;
    let d = grid.dim();
    let gauss = Field::from_fn(grid, |x| {
        let r2: f64 = (0..d).map(|a| (x[a] - centre).powi(2)).sum();
        Complex64::new(DEFAULT_GUESS_AMPLITUDE * (-r2).exp(), 0.0)
    });
    let mut phi = gauss.clone();
    let mut varphi = gauss;
    let re = |f: &Field| -> Vec<f64> { f.data().iter().map(|z| z.re).collect() };
    let ksq = |k: &[f64; 3]| k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let p = re(&phi);
        let q = re(&varphi);
        let lp = re(&apply_multiplier(&phi, false, |k| Complex64::new(1.0 + ksq(k), 0.0)));
        let lq = re(&apply_multiplier(&varphi, false, |k| Complex64::new(2.0 + kappa * ksq(k), 0.0)));
        let r = grid.integrate(&p.iter().zip(&q).map(|(a, b)| a * a * b).collect::<Vec<_>>());
        let s1 = grid.integrate(&lp.iter().zip(&p).map(|(a, b)| a * b).collect::<Vec<_>>()) / r;
        let s2 = grid.integrate(&lq.iter().zip(&q).map(|(a, b)| a * b).collect::<Vec<_>>()) / r;
        if !(r > 0.0 && s1 > 0.0 && s2 > 0.0 && s1.is_finite() && s2.is_finite()) {
            return Err(Error::Numeric(format!("periodic iteration collapsed at step {it}")));
        }
        let e1: Vec<f64> = lp.iter().zip(&p).zip(&q).map(|((l, a), b)| l - a * b).collect();
        let e2: Vec<f64> = lq.iter().zip(&p).map(|(l, a)| l - a * a).collect();
        let scale = sup(&p).max(sup(&q));
        residual = sup(&e1).max(sup(&e2)) / scale;
        if residual < tol {
            let pair = FieldPair::new(phi, varphi, kappa)?;
            return Ok(PeriodicGroundState { pair, residual, iterations: it });
        }
        let src1 = Field::new(grid, p.iter().zip(&q).map(|(a, b)| Complex64::new(a * b, 0.0)).collect())?;
        let src2 = Field::new(grid, p.iter().map(|a| Complex64::new(a * a, 0.0)).collect())?;
        let f1 = s1.powf(1.5) * s2.sqrt();
        let f2 = s1 * s2;
        phi = apply_multiplier(&src1, false, |k| Complex64::new(f1 / (1.0 + ksq(k)), 0.0));
        varphi = apply_multiplier(&src2, false, |k| Complex64::new(f2 / (2.0 + kappa * ksq(k)), 0.0));
        for f in [&mut phi, &mut varphi] {
            for z in f.data_mut() {
                z.im = 0.0;
            }
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual })
}
