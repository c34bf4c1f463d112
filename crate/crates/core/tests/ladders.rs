use sqstates::bounds::{asymptotic_residuals, lemc_ladder, residuals_monotone, thm3_bounds, AsymptoticLadder};
use sqstates::domain::{ClassicalTarget, IntervalGeometry};
use sqstates::families::{build_discretized_state, DensitySpec};

fn unit() -> IntervalGeometry {
    IntervalGeometry::dimensionless()
}

#[test]
fn gaussian_family_ladders() {
    let b = vec![0.2, 0.1, 0.05];
    for l in [
        AsymptoticLadder::GaussMeanX { x_star: 0.3, epsilon: 0.05, betas: b.clone() },
        AsymptoticLadder::GaussStdDevX { x_star: 0.3, epsilon: 0.05, betas: b.clone() },
        AsymptoticLadder::GaussStdDevP { x_star: 0.3, epsilon: 0.05, betas: b.clone() },
    ] {
        let rows = asymptotic_residuals(&unit(), &l).unwrap();
        assert!(rows.iter().all(|r| r.ok), "{l:?}: {rows:?}");
        assert!(residuals_monotone(&rows), "{rows:?}");
    }
}

#[test]
fn theta_family_ladders_off_center() {
    let a = vec![2.0, 3.0, 4.0, 6.0, 8.0];
    for xs in [0.0, 0.5] {
        for l in [
            AsymptoticLadder::ThetaMeanX { x_star: xs, alphas: a.clone() },
            AsymptoticLadder::ThetaStdDevX { x_star: xs, alphas: a.clone() },
            AsymptoticLadder::ThetaStdDevP { x_star: xs, alphas: a.clone() },
        ] {
            let rows = asymptotic_residuals(&unit(), &l).unwrap();
            assert!(rows.iter().all(|r| r.ok), "{l:?}: {rows:?}");
            assert!(residuals_monotone(&rows), "{rows:?}");
        }
    }
}

#[test]
fn theta_second_moment_ladder() {
    let rows = asymptotic_residuals(&unit(), &AsymptoticLadder::ThetaSecondX { a: 0.0, taus: vec![0.2, 0.1, 0.05] }).unwrap();
    assert!(rows.iter().all(|r| r.ok), "{rows:?}");
    assert!(residuals_monotone(&rows));
}

#[test]
fn discretized_bound_battery() {
    let g = unit();
    for d in [DensitySpec::gaussian(1.0).unwrap(), DensitySpec::laplace_symmetrized(0.5).unwrap(), DensitySpec::triangular(3.0).unwrap()] {
        for xs in [0.0, 0.3, -0.6] {
            let t = ClassicalTarget::new(&g, xs, 0.0).unwrap();
            for a in [2.0, 10.0, 50.0] {
                let r = thm3_bounds(&build_discretized_state(&g, &t, &d, a).unwrap()).unwrap();
                assert!(r.x_ok && r.meanx_ok && r.envelope_ok && r.product_ok, "{} {xs} {a}: {r:?}", d.name);
            }
        }
    }
}

#[test]
fn window_holds_for_small_alpha() {
    for d in [DensitySpec::gaussian(1.0).unwrap(), DensitySpec::laplace_symmetrized(1.0).unwrap(), DensitySpec::triangular(2.0).unwrap()] {
        let (rows, _) = lemc_ladder(&unit(), &d, &[2.0, 3.0, 5.0, 8.0]).unwrap();
        assert!(rows.iter().all(|r| r.inside), "{}: {rows:?}", d.name);
    }
}

#[test]
fn si_window_scales() {
    let g = IntervalGeometry::si(1e-7, 1.67e-27).unwrap();
    let d = DensitySpec::gaussian(1e9).unwrap();
    let (rows, _) = lemc_ladder(&g, &d, &[5.0, 10.0]).unwrap();
    assert!(rows.iter().all(|r| r.inside), "{rows:?}");
}
