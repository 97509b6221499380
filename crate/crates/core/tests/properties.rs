use coagfrag::analysis::phi;
use coagfrag::{
    weighted_norm, CoagulationKernel, FragmentationKernel, NormSpec, RateLaws, StateVector,
    TruncatedSystem,
};
use proptest::prelude::*;

fn laws() -> RateLaws {
    RateLaws {
        g: 1.0,
        growth_exp: 1.0,
        d: 1.0,
        s: 0.5,
        a: 1.0,
        frag_exp: 1.5,
        ..Default::default()
    }
}

fn state(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..max_len)
}

proptest! {
    #[test]
    fn norm_is_absolutely_homogeneous(u in state(60), c in -10.0f64..10.0,
                                      p in 0.0f64..3.0, w in 0.0f64..0.99) {
        let spec = NormSpec::new(p, w).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let lhs = weighted_norm(&scaled, &spec, &laws());
        let rhs = c.abs() * weighted_norm(&u, &spec, &laws());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn norm_triangle_inequality(u in state(60), v in state(60),
                                p in 0.0f64..3.0, w in 0.0f64..0.99) {
        let spec = NormSpec::new(p, w).unwrap();
        let len = u.len().min(v.len());
        let (u, v) = (&u[..len], &v[..len]);
        let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        let lhs = weighted_norm(&sum, &spec, &laws());
        let rhs = weighted_norm(u, &spec, &laws()) + weighted_norm(v, &spec, &laws());
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn norm_weight_increases_with_order(u in state(40), p in 0.0f64..3.0, dp in 0.01f64..1.0) {
        let lower = weighted_norm(&u, &NormSpec::moment(p), &laws());
        let upper = weighted_norm(&u, &NormSpec::moment(p + dp), &laws());
        prop_assert!(lower <= upper * (1.0 + 1e-12));
    }

    #[test]
    fn phi_strictly_increasing_in_order(i in 3usize..300, sigma in -0.5f64..2.0,
                                        p in 1.05f64..4.0, dp in 0.05f64..1.0) {
        let frag = FragmentationKernel::Powerlaw { sigma };
        let lo = phi(&frag, i, p).unwrap();
        let hi = phi(&frag, i, p + dp).unwrap();
        prop_assert!(0.0 < lo && lo < hi && hi < 1.0, "{lo} {hi}");
    }

    #[test]
    fn column_mass_identity(j in 2usize..400, sigma in -0.9f64..3.0) {
        let col = FragmentationKernel::Powerlaw { sigma }.column(j);
        let total: f64 = col.iter().enumerate().map(|(i, b)| (i + 1) as f64 * b).sum();
        prop_assert!((total - j as f64).abs() <= 1e-12 * j as f64);
        prop_assert!(col.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn pure_coagulation_fragmentation_conserves_mass(
        u in prop::collection::vec(0.0f64..20.0, 2..60),
        k in 0.0f64..0.1,
        a in 0.0f64..3.0,
        frag_exp in 0.0f64..2.5,
        powerlaw in any::<bool>(),
    ) {
        let n = u.len();
        let (frag, coag) = if powerlaw {
            (FragmentationKernel::Powerlaw { sigma: 0.1 }, CoagulationKernel::Product { k2: k, k3: 1.0 })
        } else {
            (FragmentationKernel::Binary, CoagulationKernel::BrownianLike { k1: k })
        };
        let laws = RateLaws { a, frag_exp, ..Default::default() };
        let sys = TruncatedSystem::new(n, frag, coag, laws).unwrap();
        let mass: f64 = u.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
        let flux = sys.mass_flux(&StateVector::new(u)).unwrap();
        prop_assert!(flux.abs() <= 1e-10 * mass.max(1.0), "flux {flux}");
    }

    #[test]
    fn positive_state_has_nonnegative_gain_off_diagonal(
        u in prop::collection::vec(0.0f64..5.0, 2..25),
    ) {
        // quasi-positivity: at u_i = 0 the derivative of u_i is >= 0
        let n = u.len();
        let sys = TruncatedSystem::new(
            n,
            FragmentationKernel::Powerlaw { sigma: 0.1 },
            CoagulationKernel::Product { k2: 5e-3, k3: 1.0 },
            laws(),
        ).unwrap();
        for i in 0..n {
            let mut v = u.clone();
            v[i] = 0.0;
            let du = sys.rhs(&StateVector::new(v)).unwrap();
            prop_assert!(du[i] >= -1e-12, "du[{i}] = {}", du[i]);
        }
    }
}
