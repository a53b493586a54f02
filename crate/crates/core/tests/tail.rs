use std::sync::Arc;

use betaconv_core::tail::{product_index, rv_index_at_zero, QuantileWindow, TailSource};
use betaconv_core::{Beta, DistRef64, PowerFamily, ProductDist, ScalarDist};

#[test]
fn product_of_regularly_varying_factors_takes_the_smaller_index() {
    for &gamma in &[0.5, 2.0] {
        for &alpha in &[1.0, 3.0] {
            let r: DistRef64 = Arc::new(PowerFamily::pure(gamma).unwrap());
            let s: DistRef64 = Arc::new(Beta::new(alpha, 1.0).unwrap());
            let w = ProductDist::new(r, s).unwrap();
            let est =
                rv_index_at_zero(TailSource::Dist(&w as &dyn ScalarDist<f64>), QuantileWindow::default()).unwrap();
            let law = product_index(gamma, alpha).unwrap();
            assert!(!law.boundary);
            assert!(
                (est.index_hat - law.index).abs() <= 0.1,
                "γ {gamma} α {alpha}: estimated {} against {}",
                est.index_hat,
                law.index
            );
        }
    }
}

#[test]
fn equal_indices_are_flagged() {
    let law = product_index(1.0, 1.0).unwrap();
    assert!(law.boundary);
    assert_eq!(law.index, 1.0);
}

#[test]
fn hill_estimate_from_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    // U^{1/γ} has CDF x^γ on (0, 1).
    let gamma = 1.5;
    let xs: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>().powf(1.0 / gamma)).collect();
    let est = rv_index_at_zero(TailSource::Samples(&xs), QuantileWindow::default()).unwrap();
    assert!((est.index_hat - gamma).abs() <= 0.1, "{}", est.index_hat);
}
