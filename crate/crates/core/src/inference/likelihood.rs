//! Likelihood terms over pairwise choice data.
//!
//! Every observation reduces to a term in the scalar latent difference
//! Δ = f_winner − f_loser. Two shapes cover all three sender models: a probit
//! factor Φ((Δ − offset)/scale) for strict choices, and an interval factor
//! Φ((σ−Δ)/scale) − Φ((−σ−Δ)/scale) for the both-kept outcome of the
//! discernibility mechanism. Gradient-based arms use these smooth factors;
//! the sampling arm can evaluate the hard indicator versions.

use crate::choice::{Act, ChoiceDataset, RationalityModel};
use crate::error::{Error, Result};
use crate::gauss::{log_ncdf, mills_ratio};

/// Probit surrogate scale used when the data-generating choice is exact or
/// threshold-censored and a smooth likelihood is required.
pub const DEFAULT_SURROGATE_SIGMA: f64 = 1e-3;

/// Which likelihood the receiver fits against the message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodSpec {
    /// Exact-choice data: hard indicator, smoothed to a probit of
    /// `surrogate_sigma` for the gradient-based arms.
    Indicator { surrogate_sigma: f64 },
    /// Gaussian-noise data: probit with the game's true σ.
    Probit { sigma: f64 },
    /// Threshold-censored data: hard branch indicators, smoothed with
    /// `smoothing` for the gradient-based arms.
    ThresholdCensored { sigma: f64, smoothing: f64 },
}

impl LikelihoodSpec {
    /// The fitting likelihood implied by the sender's model; σ is common
    /// knowledge, so the noise model is fit at its true scale.
    pub fn for_model(model: &RationalityModel) -> Self {
        match *model {
            RationalityModel::Exact => LikelihoodSpec::Indicator {
                surrogate_sigma: DEFAULT_SURROGATE_SIGMA,
            },
            RationalityModel::GaussianNoise { sigma } => LikelihoodSpec::Probit { sigma },
            RationalityModel::DiscernibilityThreshold { sigma, .. } => {
                LikelihoodSpec::ThresholdCensored {
                    sigma,
                    smoothing: DEFAULT_SURROGATE_SIGMA,
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LikelihoodSpec::Indicator { surrogate_sigma } => surrogate_sigma > 0.0,
            LikelihoodSpec::Probit { sigma } => sigma > 0.0,
            LikelihoodSpec::ThresholdCensored { sigma, smoothing } => {
                sigma > 0.0 && smoothing > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "likelihood",
                reason: "scales must be positive".into(),
            })
        }
    }

    /// Whether the sampling arm should evaluate hard indicators instead of
    /// the smooth factors.
    pub(crate) fn hard_for_sampling(&self) -> bool {
        !matches!(self, LikelihoodSpec::Probit { .. })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum TermShape {
    /// log Φ((Δ − offset)/scale)
    Probit { offset: f64, scale: f64 },
    /// log [Φ((half_width − Δ)/scale) − Φ((−half_width − Δ)/scale)]
    Interval { half_width: f64, scale: f64 },
}

/// One likelihood factor on the latent difference f[i] − f[j].
#[derive(Debug, Clone, Copy)]
pub(crate) struct LikTerm {
    pub i: usize,
    pub j: usize,
    pub shape: TermShape,
}

impl LikTerm {
    pub fn delta(&self, f: &[f64]) -> f64 {
        f[self.i] - f[self.j]
    }
}

/// log of the interval probability Φ(hi) − Φ(lo) with the two pdf/mass
/// ratios φ(hi)/P and φ(lo)/P, computed in log space throughout.
fn interval_core(hi: f64, lo: f64) -> (f64, f64, f64) {
    debug_assert!(hi > lo);
    // Mirror into the left tail when both arguments are positive so the
    // difference of near-one cdfs never cancels.
    let log_p = if lo >= 0.0 {
        let a = log_ncdf(-lo);
        let b = log_ncdf(-hi);
        a + (-((b - a).exp())).ln_1p()
    } else {
        let a = log_ncdf(hi);
        let b = log_ncdf(lo);
        a + (-((b - a).exp())).ln_1p()
    };
    let log_phi = |z: f64| -0.5 * z * z - 0.918_938_533_204_672_8;
    let r_hi = (log_phi(hi) - log_p).exp();
    let r_lo = (log_phi(lo) - log_p).exp();
    (log_p, r_hi, r_lo)
}

/// Smooth log factor with first and second derivatives in Δ.
pub(crate) fn term_logpdf(shape: &TermShape, delta: f64) -> (f64, f64, f64) {
    match *shape {
        TermShape::Probit { offset, scale } => {
            let t = (delta - offset) / scale;
            let val = log_ncdf(t);
            let r = mills_ratio(t);
            let d1 = r / scale;
            let d2 = -r * (t + r) / (scale * scale);
            (val, d1, d2)
        }
        TermShape::Interval { half_width, scale } => {
            let hi = (half_width - delta) / scale;
            let lo = (-half_width - delta) / scale;
            let (log_p, r_hi, r_lo) = interval_core(hi, lo);
            let d1 = (r_lo - r_hi) / scale;
            let d2 = (lo * r_lo - hi * r_hi) / (scale * scale) - d1 * d1;
            (log_p, d1, d2)
        }
    }
}

/// Hard indicator version: 0 when the observed branch holds under Δ, −∞
/// otherwise.
pub(crate) fn term_hard(shape: &TermShape, delta: f64) -> f64 {
    let ok = match *shape {
        TermShape::Probit { offset, .. } => delta > offset,
        TermShape::Interval { half_width, .. } => delta.abs() <= half_width,
    };
    if ok {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Moments of the factor against a Gaussian cavity N(m, v):
/// (log Z, ∂logZ/∂m, ∂²logZ/∂m²).
pub(crate) fn term_cavity_moments(shape: &TermShape, m: f64, v: f64) -> (f64, f64, f64) {
    match *shape {
        TermShape::Probit { offset, scale } => {
            let u = (scale * scale + v).sqrt();
            let z = (m - offset) / u;
            let log_z = log_ncdf(z);
            let r = mills_ratio(z);
            let alpha = r / u;
            let beta = -r * (z + r) / (u * u);
            (log_z, alpha, beta)
        }
        TermShape::Interval { half_width, scale } => {
            let u = (scale * scale + v).sqrt();
            let hi = (half_width - m) / u;
            let lo = (-half_width - m) / u;
            let (log_z, r_hi, r_lo) = interval_core(hi, lo);
            let alpha = (r_lo - r_hi) / u;
            let beta = (lo * r_lo - hi * r_hi) / (u * u) - alpha * alpha;
            (log_z, alpha, beta)
        }
    }
}

/// Map the dataset's observations onto likelihood terms over `acts`.
pub(crate) fn build_terms(
    dataset: &ChoiceDataset,
    spec: &LikelihoodSpec,
    acts: &[Act],
) -> Result<Vec<LikTerm>> {
    spec.validate()?;
    let index_of = |a: &Act| -> Result<usize> {
        acts.iter().position(|b| b == a).ok_or(Error::IllPosed(
            "dataset act missing from the latent index".into(),
        ))
    };
    let mut terms = Vec::with_capacity(dataset.len());
    for obs in dataset.observations() {
        if !obs.is_pair() {
            return Err(Error::InvalidParameter {
                name: "dataset",
                reason: "likelihood terms require pairwise choice sets".into(),
            });
        }
        let set = obs.choice_set();
        match (spec, obs.chosen()) {
            (LikelihoodSpec::Indicator { surrogate_sigma }, [w]) => {
                let l = 1 - w;
                terms.push(LikTerm {
                    i: index_of(&set[*w])?,
                    j: index_of(&set[l])?,
                    shape: TermShape::Probit {
                        offset: 0.0,
                        scale: *surrogate_sigma,
                    },
                });
            }
            (LikelihoodSpec::Probit { sigma }, [w]) => {
                let l = 1 - w;
                terms.push(LikTerm {
                    i: index_of(&set[*w])?,
                    j: index_of(&set[l])?,
                    shape: TermShape::Probit {
                        offset: 0.0,
                        scale: *sigma,
                    },
                });
            }
            (LikelihoodSpec::ThresholdCensored { sigma, smoothing }, [w]) => {
                let l = 1 - w;
                terms.push(LikTerm {
                    i: index_of(&set[*w])?,
                    j: index_of(&set[l])?,
                    shape: TermShape::Probit {
                        offset: *sigma,
                        scale: *smoothing,
                    },
                });
            }
            (LikelihoodSpec::ThresholdCensored { sigma, smoothing }, [a, b]) => {
                terms.push(LikTerm {
                    i: index_of(&set[*a])?,
                    j: index_of(&set[*b])?,
                    shape: TermShape::Interval {
                        half_width: *sigma,
                        scale: *smoothing,
                    },
                });
            }
            _ => {
                return Err(Error::InvalidParameter {
                    name: "dataset",
                    reason: "observation is not a singleton choice under a pairwise likelihood"
                        .into(),
                });
            }
        }
    }
    Ok(terms)
}

pub(crate) fn smooth_loglik(f: &[f64], terms: &[LikTerm]) -> f64 {
    terms
        .iter()
        .map(|t| term_logpdf(&t.shape, t.delta(f)).0)
        .sum()
}

pub(crate) fn hard_loglik(f: &[f64], terms: &[LikTerm]) -> f64 {
    terms
        .iter()
        .map(|t| term_hard(&t.shape, t.delta(f)))
        .sum()
}

/// Gradient of the smooth log likelihood; also returns the per-term negative
/// second derivatives h_t ≥ 0 that assemble the Hessian Σ h_t d_t d_tᵀ.
pub(crate) fn smooth_grad_curv(f: &[f64], terms: &[LikTerm]) -> (Vec<f64>, Vec<f64>) {
    let mut grad = vec![0.0; f.len()];
    let mut curv = Vec::with_capacity(terms.len());
    for t in terms {
        let (_, d1, d2) = term_logpdf(&t.shape, t.delta(f));
        grad[t.i] += d1;
        grad[t.j] -= d1;
        curv.push((-d2).max(0.0));
    }
    (grad, curv)
}

// ---------------------------------------------------------------------------
// Public likelihood surfaces
// ---------------------------------------------------------------------------

/// Sum of log Φ((f_winner − f_loser)/σ) over a strict pairwise dataset.
///
/// `f` is indexed by the dataset's distinct acts in first-seen order.
pub fn probit_log_likelihood(f: &[f64], dataset: &ChoiceDataset, sigma_fit: f64) -> Result<f64> {
    if !(sigma_fit > 0.0) || !sigma_fit.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_fit",
            reason: "must be positive and finite".into(),
        });
    }
    if dataset
        .observations()
        .iter()
        .any(|o| !o.is_strict_pair())
    {
        return Err(Error::InvalidParameter {
            name: "dataset",
            reason: "probit likelihood requires pairwise sets with a single chosen act".into(),
        });
    }
    let acts = dataset.distinct_acts();
    if f.len() != acts.len() {
        return Err(Error::DimensionMismatch {
            expected: acts.len(),
            got: f.len(),
        });
    }
    let terms = build_terms(dataset, &LikelihoodSpec::Probit { sigma: sigma_fit }, &acts)?;
    Ok(smooth_loglik(f, &terms))
}

/// Analytic gradient of [`probit_log_likelihood`] in the latent values.
pub fn probit_log_likelihood_grad(
    f: &[f64],
    dataset: &ChoiceDataset,
    sigma_fit: f64,
) -> Result<Vec<f64>> {
    if !(sigma_fit > 0.0) || !sigma_fit.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_fit",
            reason: "must be positive and finite".into(),
        });
    }
    let acts = dataset.distinct_acts();
    if f.len() != acts.len() {
        return Err(Error::DimensionMismatch {
            expected: acts.len(),
            got: f.len(),
        });
    }
    let terms = build_terms(dataset, &LikelihoodSpec::Probit { sigma: sigma_fit }, &acts)?;
    Ok(smooth_grad_curv(f, &terms).0)
}

/// Hard log-indicator of the threshold mechanism: 0 when every observation's
/// branch is consistent with `f`, −∞ otherwise.
pub fn threshold_log_likelihood(f: &[f64], dataset: &ChoiceDataset, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be positive and finite".into(),
        });
    }
    let acts = dataset.distinct_acts();
    if f.len() != acts.len() {
        return Err(Error::DimensionMismatch {
            expected: acts.len(),
            got: f.len(),
        });
    }
    let terms = build_terms(
        dataset,
        &LikelihoodSpec::ThresholdCensored {
            sigma,
            smoothing: DEFAULT_SURROGATE_SIGMA,
        },
        &acts,
    )?;
    Ok(hard_loglik(f, &terms))
}
