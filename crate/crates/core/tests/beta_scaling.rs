use std::sync::Arc;

use betaconv_core::scaling::{
    default_grid, density_recursion_step, forward, forward_cdf, recover_derivative, recover_integer_step,
    recover_iterative, recover_iterative_bounded, RecoverySchedule,
};
use betaconv_core::{
    Beta, BetaParams64, DistRef64, Error, Extrapolation, Gamma, GridFn, GridSpec64, Interpolation, LogNormal,
    PointMass, PowerFamily, ScalarDist, Uniform,
};

fn bp(a: f64, b: f64) -> BetaParams64 {
    BetaParams64::new(a, b).unwrap()
}

#[test]
fn round_trip_recovers_smooth_bases() {
    let bases: Vec<DistRef64> = vec![Arc::new(Gamma::new(2.0, 1.0).unwrap()), Arc::new(Uniform::unit())];
    for base in &bases {
        for &(a, b) in &[(1.0, 1.0), (1.0, 2.0), (0.5, 0.5)] {
            let p = bp(a, b);
            let grid = default_grid(base.as_ref(), p, 512).unwrap();
            let pair = forward(base.as_ref(), p, &grid).unwrap();
            let schedule = RecoverySchedule::default_for(b).unwrap();
            let h = recover_iterative_bounded(&pair.scaled_cdf, p, &schedule, base.upper()).unwrap();
            let err = h.sup_distance(|x| base.cdf(x));
            assert!(err <= 1e-2, "{} ({a},{b}): sup error {err}", base.name());
        }
    }
}

#[test]
fn point_mass_round_trip_trips_the_monotonicity_gate() {
    // A jump cannot be deconvolved to 1e-6 monotonicity through several
    // steps; the instability is reported rather than clamped away.
    let pm = PointMass::new(1.0).unwrap();
    let p = bp(1.0, 2.0);
    let grid = default_grid(&pm, p, 512).unwrap();
    let scaled = forward_cdf(&pm, p, &grid).unwrap().cdf;
    let schedule = RecoverySchedule::default_for(2.0).unwrap();
    let err = recover_iterative_bounded(&scaled, p, &schedule, 1.0).unwrap_err();
    assert!(matches!(err, Error::RecoveryInstability(_)), "{err}");
    assert!(err.is_numeric_failure());
}

#[test]
fn forward_routes_agree_and_dominate() {
    let bases: Vec<DistRef64> = vec![
        Arc::new(Gamma::new(2.0, 1.0).unwrap()),
        Arc::new(Uniform::unit()),
        Arc::new(PointMass::new(1.0).unwrap()),
        Arc::new(PowerFamily::pure(0.5).unwrap()),
        Arc::new(LogNormal::new(0.0, 1.0).unwrap()),
        Arc::new(Beta::new(2.0, 3.0).unwrap()),
    ];
    for base in &bases {
        for &(a, b) in &[(1.0, 1.0), (0.5, 0.5), (2.0, 0.5)] {
            let p = bp(a, b);
            let grid = default_grid(base.as_ref(), p, 512).unwrap();
            let pair = forward(base.as_ref(), p, &grid).unwrap();
            let label = format!("{} ({a},{b})", base.name());
            assert!(pair.residual <= 1e-7, "{label}: routes differ by {:e}", pair.residual);
            assert!(
                pair.pdf_residual <= 1e-6,
                "{label}: pdf integral off by {:e}",
                pair.pdf_residual
            );
            let cdf = &pair.scaled_cdf;
            assert!(cdf.ys()[0] < 1e-5, "{label}: starts at {}", cdf.ys()[0]);
            for (&x, &y) in cdf.xs().iter().zip(cdf.ys()) {
                assert!(y >= base.cdf(x) - 1e-12, "{label}: {y} below base at {x}");
            }
        }
    }
}

#[test]
fn recursion_and_derivative_route_agree() {
    // Gamma(3,1) scaled by B_{1,2} is Exp(1). Two density-recursion steps and
    // the δ = 0 derivative route must both give back x²e^{−x}/2.
    let e = |x: f64| (-x).exp();
    let xs = GridSpec64::log(1e-4, 40.0, 400).nodes().unwrap();
    let route = recover_derivative(&e, f64::INFINITY, bp(1.0, 2.0), 2, 0.0, &xs).unwrap();
    let first = |x: f64| density_recursion_step(&e, 1.0, 0.0, x).unwrap();
    let mut worst: f64 = 0.0;
    let window = route
        .xs()
        .iter()
        .zip(route.ys())
        .filter(|(&x, _)| (0.1..=5.0).contains(&x));
    for (&x, &y) in window {
        let recursed = density_recursion_step(&first, 1.0, 1.0, x).unwrap();
        worst = worst.max((recursed - y).abs());
        assert!((y - x * x * (-x).exp() / 2.0).abs() < 1e-6, "x {x}: {y}");
    }
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn integer_steps_undo_integer_scaling() {
    // H_{1,2} = Exp(1) for H = Gamma(3,1): strip B_{1,1}, then B_{2,1}.
    let xs = GridSpec64::log(1e-4, 30.0, 400).nodes().unwrap();
    let cdf2 = GridFn::cdf(xs.clone(), xs.iter().map(|&x| 1.0 - (-x).exp()).collect()).unwrap();
    let pdf2 = GridFn::density(xs.clone(), xs.iter().map(|&x| (-x).exp()).collect()).unwrap();
    let cdf1 = recover_integer_step(&cdf2, &pdf2, 1.0, 0.0).unwrap();
    let pdf1 = GridFn::density(xs.clone(), xs.iter().map(|&x| x * (-x).exp()).collect()).unwrap();
    let h = recover_integer_step(&cdf1, &pdf1, 1.0, 1.0).unwrap();
    let g3 = Gamma::new(3.0, 1.0).unwrap();
    assert!(h.sup_distance(|x| g3.cdf(x)) < 1e-12);
}

#[test]
fn recovery_from_a_saved_grid_matches_direct_recovery() {
    let g = Gamma::new(2.0, 1.0).unwrap();
    let p = bp(1.0, 1.0);
    let grid = default_grid(&g, p, 256).unwrap();
    let scaled = forward_cdf(&g, p, &grid).unwrap().cdf;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scaled.csv");
    scaled.save_csv(&path).unwrap();
    let loaded = GridFn::load_csv(&path, Interpolation::MonotoneCubic, Extrapolation::CDF).unwrap();
    assert_eq!(loaded.xs(), scaled.xs());
    assert_eq!(loaded.ys(), scaled.ys());
    let schedule = RecoverySchedule::default_for(1.0).unwrap();
    let a = recover_iterative(&scaled, p, &schedule).unwrap();
    let b = recover_iterative(&loaded, p, &schedule).unwrap();
    assert_eq!(a.ys(), b.ys());
    assert!(a.sup_distance(|x| g.cdf(x)) < 1e-2);
}
