use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use qnls::cli::snapshot::{decode_snapshot, encode_snapshot};
use qnls::cli::Snapshot;
use qnls::evolution::strang_step;
use qnls::fields::{conserved, galilean_boost, mass, potential, FieldPair};
use qnls::grid::{forward, inverse, Field, UniformGrid};
use qnls::morawetz::{boost_xi, build_weights, cauchy_schwarz_margin, weighted_momentum, MorawetzWeights};
use qnls::threshold::{delta_prime, rescale_to_e0, trapping_curve};

fn weights() -> &'static MorawetzWeights {
    static W: OnceLock<MorawetzWeights> = OnceLock::new();
    W.get_or_init(|| build_weights(1, 10.0, 0.1, 4096).unwrap())
}

prop_compose! {
    fn lump()(a in 0.05f64..1.0, phase in 0.0f64..std::f64::consts::TAU, c in 12.0f64..28.0, w in 1.0f64..3.0, k in -2.0f64..2.0)
        -> (Complex64, f64, f64, f64) {
        (Complex64::from_polar(a, phase), c, w, k)
    }
}

fn field(g: UniformGrid, lumps: Vec<(Complex64, f64, f64, f64)>) -> Field {
    Field::from_fn(g, move |x| {
        lumps.iter().map(|(a, c, w, k)| a * (-((x[0] - c) / w).powi(2)).exp() * Complex64::from_polar(1.0, k * x[0])).sum()
    })
}

prop_compose! {
    fn pair(kappa: f64)(u in prop::collection::vec(lump(), 1..4), v in prop::collection::vec(lump(), 1..4)) -> FieldPair {
        let g = UniformGrid::new(1, 128, 40.0).unwrap();
        FieldPair::new(field(g, u), field(g, v), kappa).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(data in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
        let g = UniformGrid::new(1, 64, 5.0).unwrap();
        let z: Vec<Complex64> = data.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let back = inverse(&g, &forward(&g, &z));
        for (a, b) in z.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn boost_preserves_moduli(p in pair(0.5), xi in -3.0f64..3.0) {
        let q = galilean_boost(&p, &[xi]).unwrap();
        prop_assert!((mass(&q) - mass(&p)).abs() <= 1e-12 * mass(&p));
        prop_assert!((potential(&q) - potential(&p)).abs() <= 1e-12 * mass(&p));
        for (a, b) in p.u.data().iter().zip(q.u.data()) {
            prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn strang_step_keeps_mass(p in pair(0.5), dt in 1e-3f64..2e-2) {
        let q = strang_step(&p, dt).unwrap();
        prop_assert!((mass(&q) - mass(&p)).abs() <= 1e-11 * mass(&p));
    }

    #[test]
    fn boost_annihilates_weighted_momentum(p in pair(0.5), s in 0.0f64..40.0, r in 3.0f64..15.0) {
        let w = weights();
        let b = boost_xi(&p, &[s], r, w).unwrap();
        prop_assume!(!b.degenerate);
        let q = galilean_boost(&p, &b.xi).unwrap();
        let mom = weighted_momentum(&q, &[s], r, w).unwrap()[0];
        prop_assert!(mom.abs() < 1e-10 * mass(&p));
    }

    #[test]
    fn sign_condition_holds(p in pair(0.5), seed in any::<u64>()) {
        let m = cauchy_schwarz_margin(&p, 2000, seed);
        prop_assert!(m.margin >= -1e-12 * m.scale.max(1.0));
    }

    #[test]
    fn snapshot_round_trip_is_exact(p in pair(0.5), t in -1e3f64..1e3) {
        let bytes = encode_snapshot(&Snapshot::Uniform(p.clone()), t).unwrap();
        let (back, t2) = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(t2.to_bits(), t.to_bits());
        prop_assert_eq!(back, Snapshot::Uniform(p));
    }

    #[test]
    fn rescaling_equalizes_mass_and_energy(p in pair(0.5)) {
        let c = conserved(&p);
        prop_assume!(c.energy > 0.0);
        let (q, _) = rescale_to_e0(&p).unwrap();
        let d = conserved(&q);
        prop_assert!((d.mass - d.energy).abs() <= 1e-9 * d.mass);
    }

    #[test]
    fn trapping_curve_peaks_at_one(y in 0.0f64..2.0) {
        prop_assert!(trapping_curve(y) <= 1.0 + 1e-15);
        if y < 0.99 {
            prop_assert!(trapping_curve(y) < trapping_curve(y + 0.01));
        }
    }

    #[test]
    fn delta_prime_is_positive_and_increasing(d in 1e-6f64..0.99) {
        prop_assert!(delta_prime(d) > 0.0);
        prop_assert!(delta_prime(d) < delta_prime(d + 0.005));
    }
}
