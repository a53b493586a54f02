use std::sync::Arc;

use betaconv_core::scaling::forward_cdf_mixture;
use betaconv_core::special::ln_gamma;
use betaconv_core::verify::{run_identity_suite, VerifyOptions, GROUPS};
use betaconv_core::weyl::{weyl_integral, weyl_stieltjes, williamson_transform, PowerWeight, WeylOrder};
use betaconv_core::{Beta, BetaParams64, DistRef64, Gamma, LogNormal, ScalarDist, Uniform};

fn bases() -> Vec<DistRef64> {
    vec![
        Arc::new(Gamma::new(2.0, 1.0).unwrap()),
        Arc::new(Uniform::unit()),
        Arc::new(LogNormal::new(0.0, 1.0).unwrap()),
        Arc::new(Beta::new(2.0, 3.0).unwrap()),
    ]
}

#[test]
fn identity_suite_passes_and_filters() {
    let full = run_identity_suite(&VerifyOptions::default()).unwrap();
    let failed: Vec<_> = full
        .failures()
        .map(|c| format!("{}: {} ({:e})", c.group, c.name, c.residual))
        .collect();
    assert!(full.passed, "{failed:?}");
    for g in GROUPS {
        assert!(full.checks.iter().any(|c| c.group == g), "group {g} ran no checks");
    }

    let only = VerifyOptions {
        only: vec!["semigroup".into()],
        ..Default::default()
    };
    let part = run_identity_suite(&only).unwrap();
    assert!(!part.checks.is_empty());
    assert!(part.checks.iter().all(|c| c.group == "semigroup"));

    let bogus = VerifyOptions {
        only: vec!["nope".into()],
        ..Default::default()
    };
    assert!(run_identity_suite(&bogus).is_err());
}

#[test]
fn williamson_is_a_weighted_stieltjes_integral() {
    for base in bases() {
        for &beta in &[0.5, 1.0, 2.5] {
            let w = PowerWeight::new(-beta);
            let order = WeylOrder::new(beta + 1.0).unwrap();
            for &x in &[0.2, 0.7] {
                let lhs = williamson_transform(base.as_ref(), beta, x).unwrap();
                let j = weyl_stieltjes(base.as_ref(), order, &|y| w.eval(y), x).unwrap();
                let rhs = (ln_gamma(beta + 1.0)).exp() * j;
                assert!(
                    (lhs - rhs).abs() <= 1e-8,
                    "{} β {beta} x {x}: {lhs} vs {rhs}",
                    base.name()
                );
            }
        }
    }
}

#[test]
fn williamson_is_the_survival_of_a_unit_alpha_scaling() {
    for base in bases() {
        for &beta in &[0.5, 2.0] {
            let p = BetaParams64::new(1.0, beta).unwrap();
            for &x in &[0.1, 0.5, 0.9] {
                let w = williamson_transform(base.as_ref(), beta, x).unwrap();
                let f = forward_cdf_mixture(base.as_ref(), p, x).unwrap();
                assert!(
                    (w - (1.0 - f)).abs() <= 1e-8,
                    "{} β {beta} x {x}: {w} vs {}",
                    base.name(),
                    1.0 - f
                );
            }
        }
    }
}

#[test]
fn density_and_stieltjes_forms_agree() {
    // ∫(y−x)^{β−1} h(y) dy is the same integral whether written against the
    // density or against dH.
    let g = Gamma::new(2.0, 1.0).unwrap();
    let one = |_: f64| 1.0;
    for &beta in &[0.5, 1.0, 1.7] {
        let order = WeylOrder::new(beta).unwrap();
        for &x in &[0.05, 1.0, 4.0] {
            let a = weyl_integral(&|y| g.density(y).unwrap(), order, x, f64::INFINITY).unwrap();
            let b = weyl_stieltjes(&g, order, &one, x).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3), "β {beta} x {x}: {a} vs {b}");
        }
    }
}

#[test]
fn weyl_integral_of_an_exponential_is_exact() {
    // I_β e^{−y} = e^{−x} for every β > 0.
    for &beta in &[0.3, 1.0, 3.5] {
        let order = WeylOrder::new(beta).unwrap();
        for &x in &[0.01, 1.0, 10.0] {
            let v = weyl_integral(&|y: f64| (-y).exp(), order, x, f64::INFINITY).unwrap();
            assert!((v / (-x).exp() - 1.0).abs() < 1e-9, "β {beta} x {x}: {v}");
        }
    }
}
