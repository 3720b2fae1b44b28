use proptest::prelude::*;
use trapspec::bspline::{BSplineBasis, BasisSpec};
use trapspec::potentials::{
    scale_mass, trap_crossing_radius, DispersionTerm, PotentialCurve, TrapSystem,
};
use trapspec::pseudo::{roots_for_xi, xi_from_energy};
use trapspec::radial::solve_on_basis;
use trapspec::spectra::{sum_rule, DipoleFunction};

fn morse(depth: f64, alpha: f64) -> PotentialCurve {
    PotentialCurve::morse(depth, 3.0, alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn states_are_orthonormal(depth in 0.5f64..4.0, alpha in 0.6f64..1.5, omega in 0.0f64..0.3) {
        let sys = TrapSystem::new(1.0, 0, omega).unwrap();
        let basis = BSplineBasis::new(&BasisSpec::uniform(0.5, 14.0, 70)).unwrap();
        let states = solve_on_basis(&morse(depth, alpha), &sys, &basis, 8).unwrap();
        for i in 0..states.len() {
            for j in 0..=i {
                let o = states[i].overlap_with(&states[j], |_| 1.0).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((o - want).abs() < 1e-9, "<{i}|{j}> = {o}");
            }
        }
    }

    #[test]
    fn full_basis_closure(depth in 0.5f64..4.0, omega in 0.05f64..0.5, which in 0usize..4) {
        let sys = TrapSystem::new(1.0, 0, omega).unwrap();
        let basis = BSplineBasis::new(&BasisSpec::uniform(0.5, 14.0, 50)).unwrap();
        let initial = solve_on_basis(&PotentialCurve::free(), &sys, &basis, 4).unwrap().swap_remove(which);
        let finals = solve_on_basis(&morse(depth, 1.0), &sys, &basis, basis.size()).unwrap();
        let sr = sum_rule(&initial, &DipoleFunction::Constant(1.0), &finals).unwrap();
        prop_assert!(sr.complete);
        prop_assert!((sr.sum - 1.0).abs() < 1e-8, "sum {}", sr.sum);
    }

    #[test]
    fn roots_interlace_unitarity_points(xi in -20.0f64..20.0) {
        prop_assume!(xi.abs() > 1e-9);
        let roots = roots_for_xi(xi, 6).unwrap();
        prop_assert!(roots.windows(2).all(|w| w[1] > w[0]));
        let trap = if xi > 0.0 {
            prop_assert!(roots[0] < 0.5);
            &roots[1..]
        } else {
            &roots[..]
        };
        for (n, &x) in trap.iter().enumerate() {
            let n = n as f64;
            if xi > 0.0 {
                prop_assert!(x > 2.0 * n + 1.5 && x < 2.0 * n + 2.5, "n {n}: {x}");
            } else {
                prop_assert!(x > 2.0 * n + 0.5 && x < 2.0 * n + 1.5, "n {n}: {x}");
            }
            let back = xi_from_energy(x).unwrap();
            prop_assert!(((back - xi) / xi).abs() < 1e-8, "{back} vs {xi}");
        }
    }

    #[test]
    fn roots_increase_with_xi(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        prop_assume!((a - b).abs() > 1e-6 && a.abs() > 1e-6 && b.abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // compare on the branch connected to the oscillator ground state
        let trap = |xi: f64| {
            let r = roots_for_xi(xi, 2).unwrap();
            if xi > 0.0 { r[1] } else { r[0] }
        };
        prop_assert!(trap(hi) > trap(lo));
    }

    #[test]
    fn mass_scaling_composes(mu0 in 1.0f64..1e4, s1 in 0.5f64..2.0, s2 in 0.5f64..2.0) {
        let once = scale_mass(mu0, s1 * s2).unwrap();
        let twice = scale_mass(scale_mass(mu0, s1).unwrap(), s2).unwrap();
        prop_assert!(((once - twice) / once).abs() < 1e-15);
        prop_assert!(scale_mass(mu0, -s1).is_err());
    }

    #[test]
    fn effective_potential_is_the_sum(r in 4.0f64..500.0, j in 0u32..4, omega in 0.0f64..1e-6, mu in 1.0f64..1e4) {
        let c6 = 1393.0;
        let curve = PotentialCurve::tail_only(vec![DispersionTerm::new(6, c6).unwrap()]);
        let sys = TrapSystem::new(mu, j, omega).unwrap();
        let jj = (j * (j + 1)) as f64;
        let want = -c6 / r.powi(6) + jj / (2.0 * mu * r * r) + 0.5 * mu * omega * omega * r * r;
        let got = curve.effective_potential(&sys, r).unwrap();
        prop_assert!((got - want).abs() <= 1e-13 * want.abs().max(c6 / r.powi(6)));
    }

    #[test]
    fn crossing_radius_balances_trap_and_tail(c in 1.0f64..1e4, n in 3u32..7, mu in 1.0f64..1e4, omega in 1e-12f64..1e-6) {
        let sys = TrapSystem::new(mu, 0, omega).unwrap();
        let rc = trap_crossing_radius(c, n, &sys).unwrap();
        let tail = c / rc.powi(n as i32);
        let trap = sys.trap(rc);
        prop_assert!(((tail - trap) / trap).abs() < 1e-12);
    }
}
