//! Shared fixtures for the criterion benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use offswitch_core::choice::{honest_message, Act, ChoiceDataset, RationalityModel};
use offswitch_core::{BivariatePosterior, Kernel, MeanFunction};

pub fn bench_kernel() -> (Kernel, MeanFunction) {
    (
        Kernel::squared_exponential(1.0, 1.2).unwrap(),
        MeanFunction::default(),
    )
}

pub fn bench_bivariate() -> BivariatePosterior {
    BivariatePosterior::new(0.6, -0.2, 0.9, 0.7, 0.25).unwrap()
}

pub fn butter_pool(n: usize) -> Vec<Act> {
    (0..n)
        .map(|i| Act::scalar(1.0 + 8.0 * i as f64 / (n - 1) as f64))
        .collect()
}

/// A 30-pair noisy message over a 12-point pool, fixed seed.
pub fn bench_dataset() -> ChoiceDataset {
    let model = RationalityModel::gaussian_noise(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    honest_message(
        |a: &Act| {
            let b = a.coords()[0];
            1.7 * (-(b - 6.8f64).powi(2) / 0.245).exp()
                + 0.9 * (-(b - 3.3f64).powi(2) / 1.28).exp()
        },
        &model,
        &butter_pool(12),
        30,
        &mut rng,
    )
    .unwrap()
}
