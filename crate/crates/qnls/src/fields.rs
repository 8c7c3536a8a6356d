//! The state pair `(u, v)` and its functionals: mass, kinetic and potential
//! energy, momentum, the Gagliardo–Nirenberg quotient, Lᵖ norms and boosts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{gradient, CompactRadial, Field, Quadrature, RadialGrid, UniformGrid};

/// `(u, v)` on a common uniform grid with coupling `κ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub u: Field,
    pub v: Field,
    kappa: f64,
}

impl FieldPair {
    pub fn new(u: Field, v: Field, kappa: f64) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
        }
        Ok(Self { u, v, kappa })
    }

    pub fn grid(&self) -> &UniformGrid {
        self.u.grid()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_resonant(&self) -> bool {
        (self.kappa - 0.5).abs() < 1e-15
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// `λ² (u, v)(λ x)`, represented exactly on the box of length `L/λ`.
    pub fn dilate(&self, lambda: f64) -> Result<FieldPair> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("scale {lambda} must be positive")));
        }
        let g = self.grid();
        let grid = UniformGrid::new(g.dim(), g.n(), g.length() / lambda)?;
        let scale = |f: &Field| -> Result<Field> {
            let t = f.tilt();
            let data = f.data().iter().map(|z| z * (lambda * lambda)).collect();
            Field::with_tilt(grid, data, [t[0] * lambda, t[1] * lambda, t[2] * lambda])
        };
        FieldPair::new(scale(&self.u)?, scale(&self.v)?, self.kappa)
    }
}

/// `M, H, R, E = H − R` and the momentum vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedSet {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
}

pub fn mass(p: &FieldPair) -> f64 {
    let dens: Vec<f64> = p.u.data().iter().zip(p.v.data()).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
    p.grid().integrate(&dens)
}

fn gradient_norm_sqr(grads: &[Field]) -> f64 {
    let grid = grads[0].grid();
    let dens: Vec<f64> = (0..grid.size()).map(|i| grads.iter().map(|g| g.data()[i].norm_sqr()).sum()).collect();
    grid.integrate(&dens)
}

pub fn kinetic(p: &FieldPair) -> f64 {
    gradient_norm_sqr(&gradient(&p.u)) + 0.5 * p.kappa * gradient_norm_sqr(&gradient(&p.v))
}

/// `Re ∫ v̄ u²`.
pub fn potential(p: &FieldPair) -> f64 {
    let dens: Vec<f64> = p.u.data().iter().zip(p.v.data()).map(|(u, v)| (v.conj() * u * u).re).collect();
    p.grid().integrate(&dens)
}

pub fn energy(p: &FieldPair) -> f64 {
    kinetic(p) - potential(p)
}

fn momentum_from(p: &FieldPair, gu: &[Field], gv: &[Field]) -> Vec<f64> {
    let grid = p.grid();
    (0..grid.dim())
        .map(|a| {
            let dens: Vec<f64> = (0..grid.size())
                .map(|i| (p.u.data()[i].conj() * gu[a].data()[i] + 0.5 * p.v.data()[i].conj() * gv[a].data()[i]).im)
                .collect();
            grid.integrate(&dens)
        })
        .collect()
}

/// `Im ∫ (ū∇u + ½ v̄∇v)`.
pub fn momentum(p: &FieldPair) -> Vec<f64> {
    momentum_from(p, &gradient(&p.u), &gradient(&p.v))
}

/// All conserved quantities, sharing one gradient evaluation.
pub fn conserved(p: &FieldPair) -> ConservedSet {
    let gu = gradient(&p.u);
    let gv = gradient(&p.v);
    let kinetic = gradient_norm_sqr(&gu) + 0.5 * p.kappa * gradient_norm_sqr(&gv);
    let potential = potential(p);
    ConservedSet {
        mass: mass(p),
        kinetic,
        potential,
        energy: kinetic - potential,
        momentum: momentum_from(p, &gu, &gv),
    }
}

/// `J = M^{1/2} H^{5/2} R^{-2}`; undefined when `R = 0`.
pub fn gn_functional_from(m: f64, h: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::InvalidArgument("J is undefined at R = 0".into()));
    }
    Ok(m.sqrt() * h.powf(2.5) / (r * r))
}

pub fn gn_functional(p: &FieldPair) -> Result<f64> {
    gn_functional_from(mass(p), kinetic(p), potential(p))
}

fn xi3(grid: &UniformGrid, xi: &[f64]) -> Result<[f64; 3]> {
    if xi.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("boost has {} components, grid dimension {}", xi.len(), grid.dim())));
    }
    let mut q = [0.0; 3];
    q[..xi.len()].copy_from_slice(xi);
    Ok(q)
}

/// `(e^{iκx·ξ} u, e^{ix·ξ} v)`.
pub fn galilean_boost(p: &FieldPair, xi: &[f64]) -> Result<FieldPair> {
    let q = xi3(p.grid(), xi)?;
    let k = p.kappa;
    FieldPair::new(p.u.modulate([k * q[0], k * q[1], k * q[2]]), p.v.modulate(q), k)
}

/// `(e^{ix·ξ} u, e^{2ix·ξ} v)`: the symmetry of the flow at `κ = 1/2`,
/// under which solutions travel at velocity `2ξ`.
pub fn resonant_boost(p: &FieldPair, xi: &[f64]) -> Result<FieldPair> {
    let q = xi3(p.grid(), xi)?;
    FieldPair::new(p.u.modulate(q), p.v.modulate([2.0 * q[0], 2.0 * q[1], 2.0 * q[2]]), p.kappa)
}

fn lp_from_moduli(grid: &impl Quadrature, moduli: impl Iterator<Item = f64>, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(moduli.fold(0.0, f64::max));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {p} outside [1, inf]")));
    }
    let vals: Vec<f64> = moduli.map(|m| m.powf(p)).collect();
    Ok(grid.integrate(&vals).powf(1.0 / p))
}

/// `‖f‖_{Lᵖ}`; `p = ∞` gives the max modulus.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_from_moduli(f.grid(), f.data().iter().map(|z| z.norm()), p)
}

/// `‖(u, v)‖_{Lᵖ}` of the pointwise Euclidean modulus `(|u|² + |v|²)^{1/2}`.
pub fn pair_lp_norm(p: &FieldPair, exponent: f64) -> Result<f64> {
    lp_from_moduli(
        p.grid(),
        p.u.data().iter().zip(p.v.data()).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()),
        exponent,
    )
}

/// Radial pair on the 5-D half-line.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPair {
    grid: RadialGrid,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    kappa: f64,
}

impl RadialPair {
    pub fn new(grid: RadialGrid, u: Vec<Complex64>, v: Vec<Complex64>, kappa: f64) -> Result<Self> {
        if u.len() != grid.m() || v.len() != grid.m() {
            return Err(Error::InvalidArgument("radial samples do not match grid".into()));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
        }
        Ok(Self { grid, u, v, kappa })
    }

    pub fn from_real(grid: RadialGrid, u: &[f64], v: &[f64], kappa: f64) -> Result<Self> {
        let c = |x: &[f64]| x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        Self::new(grid, c(u), c(v), kappa)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Multiplies both components by a radial cutoff.
    pub fn localize(&self, chi: &[f64]) -> RadialPair {
        let mul = |f: &[Complex64]| f.iter().zip(chi).map(|(z, c)| z * c).collect();
        RadialPair { grid: self.grid, u: mul(&self.u), v: mul(&self.v), kappa: self.kappa }
    }

    pub fn conserved(&self) -> ConservedSet {
        let kinetic = PairFunctionals::kinetic(self);
        let potential = PairFunctionals::potential(self);
        ConservedSet { mass: PairFunctionals::mass(self), kinetic, potential, energy: kinetic - potential, momentum: vec![] }
    }
}

/// The functionals the threshold module needs, on either grid type.
pub trait PairFunctionals: Sized {
    fn kappa(&self) -> f64;
    fn mass(&self) -> f64;
    fn kinetic(&self) -> f64;
    fn potential(&self) -> f64;
    fn energy(&self) -> f64 {
        self.kinetic() - self.potential()
    }
    /// `λ²(u, v)(λx)`.
    fn dilate(&self, lambda: f64) -> Result<Self>;
    /// `H(u^ξ)` for the boost `(e^{iκx·ξ}u, e^{ix·ξ}v)`.
    fn boosted_kinetic(&self, xi: &[f64]) -> Result<f64>;
}

impl PairFunctionals for FieldPair {
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn mass(&self) -> f64 {
        mass(self)
    }
    fn kinetic(&self) -> f64 {
        kinetic(self)
    }
    fn potential(&self) -> f64 {
        potential(self)
    }
    fn dilate(&self, lambda: f64) -> Result<Self> {
        FieldPair::dilate(self, lambda)
    }
    fn boosted_kinetic(&self, xi: &[f64]) -> Result<f64> {
        Ok(kinetic(&galilean_boost(self, xi)?))
    }
}

impl PairFunctionals for RadialPair {
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn mass(&self) -> f64 {
        let dens: Vec<f64> = self.u.iter().zip(&self.v).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
        self.grid.integrate(&dens)
    }
    fn kinetic(&self) -> f64 {
        let op = CompactRadial::new(self.grid);
        op.dirichlet_complex(&self.u) + 0.5 * self.kappa * op.dirichlet_complex(&self.v)
    }
    fn potential(&self) -> f64 {
        let dens: Vec<f64> = self.u.iter().zip(&self.v).map(|(u, v)| (v.conj() * u * u).re).collect();
        self.grid.integrate(&dens)
    }
    fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("scale {lambda} must be positive")));
        }
        let grid = RadialGrid::new(self.grid.m(), self.grid.r_max() / lambda)?;
        let s = |f: &[Complex64]| f.iter().map(|z| z * (lambda * lambda)).collect();
        RadialPair::new(grid, s(&self.u), s(&self.v), self.kappa)
    }
    /// Radial data carry no momentum, so the boost only adds
    /// `|ξ|²(κ²‖u‖² + (κ/2)‖v‖²)`.
    fn boosted_kinetic(&self, xi: &[f64]) -> Result<f64> {
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        let mu: f64 = self.grid.integrate(&self.u.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        let mv: f64 = self.grid.integrate(&self.v.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        let k = self.kappa;
        Ok(PairFunctionals::kinetic(self) + xi2 * (k * k * mu + 0.5 * k * mv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn grid1(n: usize, l: f64) -> UniformGrid {
        UniformGrid::new(1, n, l).unwrap()
    }

    fn pair(grid: UniformGrid, u: impl Fn(f64) -> Complex64, v: impl Fn(f64) -> Complex64, kappa: f64) -> FieldPair {
        let g = grid;
        let shift = |x: [f64; 3]| g.displacement(&x, &[0.0; 3])[0];
        FieldPair::new(Field::from_fn(g, |x| u(shift(x))), Field::from_fn(g, |x| v(shift(x))), kappa).unwrap()
    }

    #[test]
    fn mass_examples() {
        let g = grid1(64, 2.0 * PI);
        assert_eq!(mass(&pair(g, |_| c(0.0), |_| c(0.0), 0.5)), 0.0);
        assert!((mass(&pair(g, |_| c(1.0), |_| c(0.0), 0.5)) - 2.0 * PI).abs() < 1e-12);
        let g = grid1(512, 40.0);
        let gauss = |x: f64| c((-x * x / 2.0).exp());
        assert!((mass(&pair(g, gauss, gauss, 0.5)) - 2.0 * PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn kinetic_and_potential_examples() {
        let g = grid1(32, 2.0 * PI);
        let e1 = |x: f64| Complex64::from_polar(1.0, x);
        let e2 = |x: f64| Complex64::from_polar(1.0, 2.0 * x);
        let zero = |_| c(0.0);
        assert!((kinetic(&pair(g, e1, zero, 0.5)) - 2.0 * PI).abs() < 1e-12);
        assert!((kinetic(&pair(g, zero, e1, 0.5)) - PI / 2.0).abs() < 1e-12);
        assert!((potential(&pair(g, |_| c(1.0), |_| c(1.0), 0.5)) - 2.0 * PI).abs() < 1e-12);
        assert!((potential(&pair(g, e1, e2, 0.5)) - 2.0 * PI).abs() < 1e-12);
        assert!(potential(&pair(g, e1, e1, 0.5)).abs() < 1e-12);
        let p = pair(g, e1, zero, 0.5);
        assert!((energy(&p) - kinetic(&p)).abs() < 1e-15);
        assert_eq!(energy(&pair(g, zero, zero, 0.5)), 0.0);
    }

    #[test]
    fn momentum_examples() {
        let g = grid1(32, 2.0 * PI);
        let p = pair(g, |x| Complex64::from_polar(1.0, x), |_| c(0.0), 0.5);
        assert!((momentum(&p)[0] - 2.0 * PI).abs() < 1e-12);
        let g = grid1(256, 30.0);
        let real = pair(g, |x| c((-x * x).exp()), |x| c((-(x - 1.0).powi(2)).exp()), 0.5);
        assert!(momentum(&real)[0].abs() < 1e-12);
    }

    #[test]
    fn momentum_shift_under_boost() {
        let g = UniformGrid::new(2, 64, 20.0).unwrap();
        let u = Field::from_fn(g, |x| Complex64::from_polar((-(x[0] - 10.0).powi(2) - (x[1] - 9.0).powi(2)).exp(), 0.3 * x[0]));
        let v = Field::from_fn(g, |x| c(0.5 * (-(x[0] - 11.0).powi(2) / 2.0 - (x[1] - 10.0).powi(2)).exp()));
        let p = FieldPair::new(u, v, 0.5).unwrap();
        let xi = [0.731, -0.412];
        let b = galilean_boost(&p, &xi).unwrap();
        let (p0, p1, m) = (momentum(&p), momentum(&b), mass(&p));
        for a in 0..2 {
            assert!((p1[a] - p0[a] - xi[a] / 2.0 * m).abs() < 1e-10);
        }
        assert!((mass(&b) - m).abs() < 1e-12 * m);
        assert!((potential(&b) - potential(&p)).abs() < 1e-12);
    }

    #[test]
    fn gn_functional_rejects_zero_potential() {
        let g = grid1(32, 10.0);
        let p = pair(g, |x| c((-x * x).exp()), |_| c(0.0), 0.5);
        assert!(gn_functional(&p).is_err());
    }

    #[test]
    fn lp_norm_examples() {
        let g = grid1(64, 2.0 * PI);
        let f = Field::from_fn(g, |_| c(-1.5));
        assert!((lp_norm(&f, 3.0).unwrap() - 1.5 * (2.0 * PI).powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(lp_norm(&Field::zeros(g), 3.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.5);
        let g = grid1(512, 40.0);
        let f = Field::from_fn(g, |x| {
            let y = g.displacement(&x, &[0.0; 3])[0];
            c((-y * y / 2.0).exp())
        });
        let exact = (2.0 * PI / 3.0f64).sqrt().powf(1.0 / 3.0);
        assert!((lp_norm(&f, 3.0).unwrap() - exact).abs() < 1e-10);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn dilation_scaling_laws() {
        for d in 1..=2usize {
            let g = UniformGrid::new(d, 64, 24.0).unwrap();
            let u = Field::from_fn(g, |x| c((-(0..d).map(|a| (x[a] - 12.0).powi(2)).sum::<f64>()).exp()));
            let v = Field::from_fn(g, |x| c(0.7 * (-(0..d).map(|a| (x[a] - 12.5).powi(2) / 2.0).sum::<f64>()).exp()));
            let p = FieldPair::new(u, v, 0.5).unwrap();
            let lam = 1.7;
            let q = p.dilate(lam).unwrap();
            let df = d as i32;
            assert!((mass(&q) - lam.powi(4 - df) * mass(&p)).abs() < 1e-10 * mass(&q));
            assert!((kinetic(&q) - lam.powi(6 - df) * kinetic(&p)).abs() < 1e-9 * kinetic(&q));
            assert!((potential(&q) - lam.powi(6 - df) * potential(&p)).abs() < 1e-9 * potential(&q).abs());
        }
    }

    #[test]
    fn radial_boosted_kinetic_formula() {
        let grid = RadialGrid::new(256, 15.0).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|r| (-r * r / 2.0).exp()).collect();
        let v: Vec<f64> = grid.nodes().iter().map(|r| 0.5 * (-r * r).exp()).collect();
        let p = RadialPair::from_real(grid, &u, &v, 0.5).unwrap();
        let h = PairFunctionals::kinetic(&p);
        let hb = p.boosted_kinetic(&[0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((h - hb).abs() < 1e-14);
        let mu = grid.integrate(&u.iter().map(|x| x * x).collect::<Vec<_>>());
        let hb = p.boosted_kinetic(&[1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let mv = grid.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!((hb - h - 2.0 * (0.25 * mu + 0.25 * mv)).abs() < 1e-12);
    }
}
