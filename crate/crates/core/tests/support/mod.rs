//! Shared test oracles, independent of the library's evaluation paths.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use offswitch_core::BivariatePosterior;

/// Adaptive Simpson quadrature with interval-halving error control. The
/// forced initial subdivision guards against premature acceptance on
/// integrands whose coarse samples cancel.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
        force: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || (force == 0 && delta.abs() <= 15.0 * tol) {
            return left + right + delta / 15.0;
        }
        let force = force.saturating_sub(1);
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1, force)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1, force)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48, 10)
}

pub fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ via the Taylor expansion Φ(z) = ½ + φ(z)·Σ z^{2k+1}/(2k+1)!!, a route
/// independent of the library's rational erfc approximation.
pub fn std_cdf_series(z: f64) -> f64 {
    if z <= -8.5 {
        return 0.0;
    }
    if z >= 8.5 {
        return 1.0;
    }
    let mut term = z;
    let mut sum = z;
    let mut k = 0u32;
    while term.abs() > 1e-18 * sum.abs().max(1.0) && k < 300 {
        k += 1;
        term *= z * z / (2 * k + 1) as f64;
        sum += term;
    }
    (0.5 + std_pdf(z) * sum).clamp(0.0, 1.0)
}

/// A random bivariate posterior with a genuinely PSD covariance.
pub fn random_bivariate(rng: &mut ChaCha8Rng) -> BivariatePosterior {
    let mu_x = rng.random_range(-2.0..2.0);
    let mu_o = rng.random_range(-2.0..2.0);
    let l11: f64 = rng.random_range(0.1..1.2);
    let l21: f64 = rng.random_range(-0.8..0.8);
    let l22: f64 = rng.random_range(0.1..1.2);
    BivariatePosterior::new(
        mu_x,
        mu_o,
        l11 * l11,
        l21 * l21 + l22 * l22,
        l11 * l21,
    )
    .unwrap()
}

/// Kendall rank correlation between two equally long sequences.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (a[i] - a[j]) * (b[i] - b[j]);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}
