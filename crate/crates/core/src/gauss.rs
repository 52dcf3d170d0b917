//! Exact Gaussian primitives used by every closed-form payoff.
//!
//! Everything downstream reduces to the standard normal pdf/cdf, three
//! Gaussian integral identities,
//!
//! ```text
//! ∫ φ(x) φ(a+bx) dx = φ(a/√(1+b²)) / √(1+b²)
//! ∫ Φ(a+bx) φ(x) dx = Φ(a/√(1+b²))
//! ∫ x Φ(a+bx) φ(x) dx = b φ(a/√(1+b²)) / √(1+b²)
//! ```
//!
//! the truncated-normal partial expectation (inverse Mills ratio), the folded
//! mean E|x|, squared-exponential Gram matrices, and seeded multivariate
//! normal sampling.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::choice::Act;
use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
#[cfg(test)]
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// A univariate normal N(m, s²); `s = 0` denotes a point mass at `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateGaussian {
    pub mean: f64,
    pub stddev: f64,
}

impl UnivariateGaussian {
    pub fn new(mean: f64, stddev: f64) -> Result<Self> {
        if !mean.is_finite() || !stddev.is_finite() {
            return Err(Error::NonFinite {
                what: "Gaussian parameter",
            });
        }
        if stddev < 0.0 {
            return Err(Error::InvalidParameter {
                name: "stddev",
                reason: "must be non-negative".into(),
            });
        }
        Ok(Self { mean, stddev })
    }

    pub fn is_point_mass(&self) -> bool {
        self.stddev == 0.0
    }
}

/// A truncation limit; unbounded ends are explicit variants, never sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl Limit {
    fn validate(self, name: &'static str) -> Result<Self> {
        if let Limit::Finite(v) = self {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "finite limit holds a non-finite value".into(),
                });
            }
        }
        Ok(self)
    }

    fn leq(self, other: Limit) -> bool {
        match (self, other) {
            (Limit::NegInfinity, _) | (_, Limit::PosInfinity) => true,
            (Limit::PosInfinity, _) | (_, Limit::NegInfinity) => false,
            (Limit::Finite(a), Limit::Finite(b)) => a <= b,
        }
    }

    fn contains_leq(self, x: f64) -> bool {
        // whether x <= self
        match self {
            Limit::NegInfinity => false,
            Limit::PosInfinity => true,
            Limit::Finite(v) => x <= v,
        }
    }

    fn contains_geq(self, x: f64) -> bool {
        // whether x >= self
        match self {
            Limit::NegInfinity => true,
            Limit::PosInfinity => false,
            Limit::Finite(v) => x >= v,
        }
    }
}

/// Prior covariance function over acts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// k(z, z') = variance · exp(−‖z−z'‖² / (2·lengthscale²)).
    ///
    /// `variance = 0` is the degenerate point-mass prior used by the
    /// no-uncertainty regime.
    SquaredExponential { variance: f64, lengthscale: f64 },
}

impl Kernel {
    pub fn squared_exponential(variance: f64, lengthscale: f64) -> Result<Self> {
        if !variance.is_finite() || !lengthscale.is_finite() {
            return Err(Error::NonFinite {
                what: "kernel hyperparameter",
            });
        }
        if variance < 0.0 {
            return Err(Error::InvalidParameter {
                name: "variance",
                reason: "must be non-negative".into(),
            });
        }
        if lengthscale <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "lengthscale",
                reason: "must be positive".into(),
            });
        }
        Ok(Kernel::SquaredExponential {
            variance,
            lengthscale,
        })
    }

    pub fn eval(&self, a: &Act, b: &Act) -> f64 {
        match *self {
            Kernel::SquaredExponential {
                variance,
                lengthscale,
            } => {
                let sq: f64 = a
                    .coords()
                    .iter()
                    .zip(b.coords())
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum();
                variance * (-sq / (2.0 * lengthscale * lengthscale)).exp()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Kernel::SquaredExponential { variance, .. } => variance,
        }
    }
}

/// Prior mean function over acts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeanFunction {
    Constant { value: f64 },
}

impl Default for MeanFunction {
    fn default() -> Self {
        MeanFunction::Constant { value: 0.0 }
    }
}

impl MeanFunction {
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "mean value" });
        }
        Ok(MeanFunction::Constant { value })
    }

    pub fn eval(&self, _act: &Act) -> f64 {
        match *self {
            MeanFunction::Constant { value } => value,
        }
    }
}

// ---------------------------------------------------------------------------
// erf family (Cody's rational Chebyshev approximations, |rel err| < 1e-15)
// ---------------------------------------------------------------------------

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

/// erfc(x)·exp(x²) for x > 0.46875 (regions 2 and 3 of Cody's scheme).
fn erfcx_positive_tail(x: f64) -> f64 {
    debug_assert!(x > 0.46875);
    if x <= 4.0 {
        let mut num = ERF_C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + ERF_C[i]) * x;
            den = (den + ERF_D[i]) * x;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        let z = 1.0 / (x * x);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (1.0 / std::f64::consts::PI.sqrt() - r) / x
    }
}

/// exp(−x²) computed with the split-argument trick to keep relative accuracy.
fn exp_neg_xsq(x: f64) -> f64 {
    let ysq = (x * 16.0).trunc() / 16.0;
    let del = (x - ysq) * (x + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        let z = y * y;
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        return 1.0 - x * (num + ERF_A[3]) / (den + ERF_B[3]);
    } else if y <= 26.6 {
        erfcx_positive_tail(y) * exp_neg_xsq(y)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Scaled complementary error function erfcx(x) = exp(x²)·erfc(x).
///
/// Overflows to +∞ for large negative arguments, which downstream ratios
/// absorb gracefully.
pub fn erfcx(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        let xsq = x * x;
        return xsq.exp() * erfc(x);
    }
    let tail = erfcx_positive_tail(y);
    if x >= 0.0 {
        tail
    } else {
        // erfcx(-y) = 2 exp(y²) - erfcx(y)
        let e = (y * y).exp();
        2.0 * e - tail
    }
}

// ---------------------------------------------------------------------------
// Standard normal pdf / cdf and stable companions
// ---------------------------------------------------------------------------

pub(crate) fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

pub(crate) fn ncdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// log Φ(z), stable over the whole real line.
pub(crate) fn log_ncdf(z: f64) -> f64 {
    if z > -1.0 {
        ncdf(z).ln()
    } else {
        // Φ(z) = ½ erfcx(−z/√2) e^{−z²/2}
        (0.5 * erfcx(-z * FRAC_1_SQRT_2)).ln() - 0.5 * z * z
    }
}

/// φ(z)/Φ(z), the inverse Mills ratio, stable over the whole real line.
pub(crate) fn mills_ratio(z: f64) -> f64 {
    SQRT_2_OVER_PI / erfcx(-z * FRAC_1_SQRT_2)
}

/// Standard normal density φ(z) = exp(−z²/2)/√(2π).
pub fn std_normal_pdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite { what: "pdf input" });
    }
    Ok(phi(z))
}

/// Standard normal distribution function Φ(z).
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite { what: "cdf input" });
    }
    Ok(ncdf(z))
}

// ---------------------------------------------------------------------------
// The three Gaussian integral identities
// ---------------------------------------------------------------------------

/// ∫ φ(x) φ(a+bx) dx.
pub fn integral_phi_phi(a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite {
            what: "integral argument",
        });
    }
    let t = (1.0 + b * b).sqrt();
    Ok(phi(a / t) / t)
}

/// ∫ Φ(a+bx) φ(x) dx.
pub fn integral_cdf_phi(a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite {
            what: "integral argument",
        });
    }
    let t = (1.0 + b * b).sqrt();
    Ok(ncdf(a / t))
}

/// ∫ x Φ(a+bx) φ(x) dx.
pub fn integral_x_cdf_phi(a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite {
            what: "integral argument",
        });
    }
    let t = (1.0 + b * b).sqrt();
    Ok(b / t * phi(a / t))
}

// ---------------------------------------------------------------------------
// Truncated-normal partial expectation and folded mean
// ---------------------------------------------------------------------------

/// E[x · I{a ≤ x ≤ b}] for x ~ N(m, s²).
///
/// Point masses (s = 0) contribute m exactly when m lies inside the window.
pub fn partial_expectation(g: &UnivariateGaussian, a: Limit, b: Limit) -> Result<f64> {
    let a = a.validate("lower limit")?;
    let b = b.validate("upper limit")?;
    if !a.leq(b) {
        return Err(Error::InvalidBounds);
    }
    let (m, s) = (g.mean, g.stddev);
    if g.is_point_mass() {
        let inside = b.contains_leq(m) && a.contains_geq(m);
        return Ok(if inside { m } else { 0.0 });
    }
    let (cdf_hi, pdf_hi) = match b {
        Limit::PosInfinity => (1.0, 0.0),
        Limit::Finite(v) => {
            let z = (v - m) / s;
            (ncdf(z), phi(z))
        }
        Limit::NegInfinity => (0.0, 0.0),
    };
    let (cdf_lo, pdf_lo) = match a {
        Limit::NegInfinity => (0.0, 0.0),
        Limit::Finite(v) => {
            let z = (v - m) / s;
            (ncdf(z), phi(z))
        }
        Limit::PosInfinity => (1.0, 0.0),
    };
    Ok(m * (cdf_hi - cdf_lo) - s * (pdf_hi - pdf_lo))
}

/// E|x| for x ~ N(m, s²): m(1 − 2Φ(−m/s)) + 2sφ(−m/s).
pub fn expected_abs(g: &UnivariateGaussian) -> f64 {
    if g.is_point_mass() {
        return g.mean.abs();
    }
    let z = -g.mean / g.stddev;
    g.mean * (1.0 - 2.0 * ncdf(z)) + 2.0 * g.stddev * phi(z)
}

// ---------------------------------------------------------------------------
// Gram matrices and multivariate normal sampling
// ---------------------------------------------------------------------------

const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Prior covariance over a finite set of acts, jittered until it factorizes.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    points: Vec<Act>,
    entries: DMatrix<f64>,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl GramMatrix {
    pub fn points(&self) -> &[Act] {
        &self.points
    }

    /// Covariance entries, jitter included on the diagonal.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// True when the underlying kernel is identically zero (Dirac prior).
    pub fn is_point_mass(&self) -> bool {
        self.chol.is_none()
    }

    pub fn cholesky(&self) -> Option<&Cholesky<f64, Dyn>> {
        self.chol.as_ref()
    }

    /// Solve (K + jitter·I) x = b.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.chol {
            Some(c) => Ok(c.solve(b)),
            None => Err(Error::IllPosed(
                "cannot solve against a point-mass Gram matrix".into(),
            )),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Build the Gram matrix and prior mean vector over `points`.
///
/// The jitter ladder runs 1e-10 → 1e-6 in decade steps before reporting the
/// kernel as ill-conditioned. An identically zero kernel yields the
/// point-mass representation with no factorization.
pub fn gram(
    kernel: &Kernel,
    mean: &MeanFunction,
    points: &[Act],
) -> Result<(GramMatrix, DVector<f64>)> {
    if points.is_empty() {
        return Err(Error::Empty {
            what: "Gram points",
        });
    }
    let dim = points[0].dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
    }
    let n = points.len();
    let mean_vec = DVector::from_iterator(n, points.iter().map(|p| mean.eval(p)));

    let mut base = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&points[i], &points[j]);
            base[(i, j)] = v;
            base[(j, i)] = v;
        }
    }

    if base.iter().all(|&v| v == 0.0) {
        return Ok((
            GramMatrix {
                points: points.to_vec(),
                entries: base,
                jitter: 0.0,
                chol: None,
            },
            mean_vec,
        ));
    }

    for &jitter in &JITTER_LADDER {
        let mut entries = base.clone();
        for i in 0..n {
            entries[(i, i)] += jitter;
        }
        if let Some(chol) = entries.clone().cholesky() {
            return Ok((
                GramMatrix {
                    points: points.to_vec(),
                    entries,
                    jitter,
                    chol: Some(chol),
                },
                mean_vec,
            ));
        }
    }
    Err(Error::CholeskyFailed {
        size: n,
        max_jitter: *JITTER_LADDER.last().unwrap(),
    })
}

/// Sample from a raw covariance matrix (jitter ladder applied as needed);
/// an identically zero covariance returns the mean.
pub(crate) fn sample_from_cov(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>> {
    let n = mean.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cov.nrows(),
        });
    }
    if cov.iter().all(|&v| v == 0.0) {
        return Ok(mean.clone());
    }
    let scale = (0..n).map(|i| cov[(i, i)].abs()).fold(1.0, f64::max);
    for &jitter in &JITTER_LADDER {
        let mut c = cov.clone();
        for i in 0..n {
            c[(i, i)] += jitter * scale;
        }
        if let Some(chol) = c.cholesky() {
            let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
            return Ok(mean + chol.l() * z);
        }
    }
    Err(Error::CholeskyFailed {
        size: n,
        max_jitter: *JITTER_LADDER.last().unwrap(),
    })
}

/// Draw one sample from N(mean, cov) using the caller's seeded stream.
pub fn mvn_sample(mean: &DVector<f64>, cov: &GramMatrix, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    if mean.len() != cov.len() {
        return Err(Error::DimensionMismatch {
            expected: cov.len(),
            got: mean.len(),
        });
    }
    match cov.cholesky() {
        None => Ok(mean.clone()),
        Some(chol) => {
            let z = DVector::from_iterator(
                mean.len(),
                (0..mean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
            );
            Ok(mean + chol.l() * z)
        }
    }
}
