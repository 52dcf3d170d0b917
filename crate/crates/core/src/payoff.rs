//! Closed-form expected payoffs of the receiver's three actions.
//!
//! Under the Gaussian-noise sender, the deferral payoff has the closed form
//! built from two applications of
//!
//! ```text
//! E[ν(x)·I{ν(x)+n(x) > ν(o)+n(o)}]
//!   = μ_x (1 − Φ((μ_o−μ_x)/√D)) + ((k_xx−k_xo)/√D) φ((μ_o−μ_x)/√D),
//! D = k_xx + 2σ² + k_oo − 2k_xo,
//! ```
//!
//! immediate action and doing nothing are just the posterior means. The
//! discernibility-threshold sender yields a set-valued deferral payoff (one
//! candidate per way of resolving the indiscernible branch, each penalised by
//! ε), and message costs charge deferral an extra β = γ·E|ν(o)|.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{expected_abs, ncdf, phi, UnivariateGaussian};
use crate::inference::BivariatePosterior;

/// Deferral payoff: scalar under the noise model, a candidate pair under the
/// threshold model (indiscernible branch kept as x or as o).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DefValue {
    Scalar(f64),
    Set { keep_x: f64, keep_o: f64 },
}

impl DefValue {
    pub fn scalar(&self) -> Result<f64> {
        match *self {
            DefValue::Scalar(v) => Ok(v),
            DefValue::Set { .. } => Err(Error::WrongPayoffKind {
                expected: "scalar deferral payoff",
            }),
        }
    }

    pub fn set(&self) -> Result<(f64, f64)> {
        match *self {
            DefValue::Set { keep_x, keep_o } => Ok((keep_x, keep_o)),
            DefValue::Scalar(_) => Err(Error::WrongPayoffKind {
                expected: "set-valued deferral payoff",
            }),
        }
    }

    pub fn low(&self) -> f64 {
        match *self {
            DefValue::Scalar(v) => v,
            DefValue::Set { keep_x, keep_o } => keep_x.min(keep_o),
        }
    }

    pub fn high(&self) -> f64 {
        match *self {
            DefValue::Scalar(v) => v,
            DefValue::Set { keep_x, keep_o } => keep_x.max(keep_o),
        }
    }
}

/// Expected payoffs of DEF / IMM / DoN with cost and diagnostic terms.
///
/// `p` and `e` are the win probability and uncertainty bonus that decompose
/// the deferral value as p·μ_x + (1−p)·μ_o + e; both are zero for the
/// threshold model where that decomposition does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPayoffs {
    pub def_value: DefValue,
    pub imm_value: f64,
    pub don_value: f64,
    /// Extra communication charge on deferral; zero when talk is cheap.
    pub beta: f64,
    /// The γ·ℓ charge common to all three actions; recorded for bookkeeping,
    /// excluded from decision margins because it cancels in comparisons.
    pub common_cost: f64,
    pub p: f64,
    pub e: f64,
}

/// Message cost parameters: per-unit cost γ (as a fraction of |ν(o)|) and
/// the message length ℓ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub gamma: f64,
    pub message_len: usize,
}

impl CostParams {
    pub fn new(gamma: f64, message_len: usize) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "must be non-negative and finite".into(),
            });
        }
        Ok(Self { gamma, message_len })
    }

    pub fn free() -> Self {
        Self {
            gamma: 0.0,
            message_len: 0,
        }
    }
}

/// E[ν(x)·I{ν(x)+n(x) > ν(o)+n(o)}] for the bivariate posterior and noise σ.
///
/// A degenerate denominator with distinct means resolves the indicator by
/// sign; with equal means it is rejected as ill-posed.
pub fn def_building_block(bp: &BivariatePosterior, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be non-negative and finite".into(),
        });
    }
    building_block(bp.mu_x, bp.mu_o, bp.k_xx, bp.k_oo, bp.k_xo, sigma)
}

fn building_block(
    mu_win: f64,
    mu_lose: f64,
    k_win: f64,
    k_lose: f64,
    k_cross: f64,
    sigma: f64,
) -> Result<f64> {
    let d = k_win + 2.0 * sigma * sigma + k_lose - 2.0 * k_cross;
    if d <= 0.0 {
        if mu_win > mu_lose {
            return Ok(mu_win);
        }
        if mu_win < mu_lose {
            return Ok(0.0);
        }
        return Err(Error::IllPosed(
            "degenerate comparison with equal means violates the distinct-utility assumption"
                .into(),
        ));
    }
    let s = d.sqrt();
    let z = (mu_lose - mu_win) / s;
    Ok(mu_win * (1.0 - ncdf(z)) + (k_win - k_cross) / s * phi(z))
}

/// Expected payoffs under the Gaussian-noise sender (cheap talk).
pub fn payoffs_noise(bp: &BivariatePosterior, sigma: f64) -> Result<ExpectedPayoffs> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be non-negative and finite".into(),
        });
    }
    let x_term = building_block(bp.mu_x, bp.mu_o, bp.k_xx, bp.k_oo, bp.k_xo, sigma)?;
    let o_term = building_block(bp.mu_o, bp.mu_x, bp.k_oo, bp.k_xx, bp.k_xo, sigma)?;
    let d = bp.k_xx + 2.0 * sigma * sigma + bp.k_oo - 2.0 * bp.k_xo;
    let (p, e) = if d > 0.0 {
        let s = d.sqrt();
        let z = (bp.mu_x - bp.mu_o) / s;
        (ncdf(z), (bp.k_xx + bp.k_oo - 2.0 * bp.k_xo) / s * phi(z))
    } else if bp.mu_x > bp.mu_o {
        (1.0, 0.0)
    } else {
        (0.0, 0.0)
    };
    Ok(ExpectedPayoffs {
        def_value: DefValue::Scalar(x_term + o_term),
        imm_value: bp.mu_x,
        don_value: bp.mu_o,
        beta: 0.0,
        common_cost: 0.0,
        p,
        e,
    })
}

/// β = γ·E|ν(o)|, the expected extra communication charge on deferral.
pub fn beta_cost(bp: &BivariatePosterior, cost: &CostParams) -> f64 {
    let g = UnivariateGaussian {
        mean: bp.mu_o,
        stddev: bp.k_oo.max(0.0).sqrt(),
    };
    cost.gamma * expected_abs(&g)
}

/// Expected payoffs with message costs: identical to the cheap-talk values
/// except deferral carries the extra −β; the common −γℓ term is recorded but
/// excluded from decision margins.
pub fn payoffs_with_cost(
    bp: &BivariatePosterior,
    sigma: f64,
    cost: &CostParams,
) -> Result<ExpectedPayoffs> {
    let mut payoffs = payoffs_noise(bp, sigma)?;
    payoffs.beta = beta_cost(bp, cost);
    payoffs.common_cost = cost.gamma * cost.message_len as f64;
    Ok(payoffs)
}

/// Expected payoffs under the discernibility-threshold sender.
///
/// The deferral payoff is the candidate pair
/// { clear-win terms + E[ν(x)·I{indiscernible}] − ε,
///   clear-win terms + E[ν(o)·I{indiscernible}] − ε }.
pub fn payoffs_threshold(
    bp: &BivariatePosterior,
    sigma: f64,
    epsilon: f64,
) -> Result<ExpectedPayoffs> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be positive and finite".into(),
        });
    }
    if !(epsilon > 0.0 && epsilon <= sigma) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: "must lie in (0, sigma]".into(),
        });
    }
    let (mu_x, mu_o) = (bp.mu_x, bp.mu_o);
    let v = bp.k_xx + bp.k_oo - 2.0 * bp.k_xo;

    let (keep_x, keep_o, p_x_clear) = if v <= 0.0 {
        // Point-mass posterior: evaluate the three branches directly.
        if mu_x > mu_o + sigma {
            (mu_x, mu_x, 1.0)
        } else if mu_o > mu_x + sigma {
            (mu_o, mu_o, 0.0)
        } else {
            (mu_x - epsilon, mu_o - epsilon, 0.0)
        }
    } else {
        let s = v.sqrt();
        let h_o = (mu_o + sigma - mu_x) / s; // argument of the x-clear terms
        let h_x = (mu_x + sigma - mu_o) / s; // argument of the o-clear terms
        let c_x = (bp.k_xx - bp.k_xo) / s;
        let c_o = (bp.k_oo - bp.k_xo) / s;

        let clear_x = mu_x * (1.0 - ncdf(h_o)) + c_x * phi(h_o);
        let clear_o = mu_o * (1.0 - ncdf(h_x)) + c_o * phi(h_x);
        let both_prob_term = ncdf(h_x) + ncdf(h_o) - 1.0;
        let both_x = mu_x * both_prob_term + c_x * (phi(h_x) - phi(h_o));
        let both_o = mu_o * both_prob_term + c_o * (phi(h_o) - phi(h_x));

        (
            clear_x + clear_o + both_x - epsilon,
            clear_x + clear_o + both_o - epsilon,
            1.0 - ncdf(h_o),
        )
    };

    Ok(ExpectedPayoffs {
        def_value: DefValue::Set { keep_x, keep_o },
        imm_value: mu_x,
        don_value: mu_o,
        beta: 0.0,
        common_cost: 0.0,
        p: p_x_clear,
        e: 0.0,
    })
}

/// Dominance rule applied to the sender's noisy utility vectors. For a pair
/// of vectors both rules reduce to the same strict componentwise comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoisyDominance {
    Pareto,
    EAdmissible,
}

/// What deferral pays when the sender's noisy vectors are incomparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IncomparablePolicy {
    /// Doing nothing preserves the status quo: the payoff is ν(o).
    StatusQuo,
    /// Literal reading of the indicators: neither fires, the payoff is zero.
    LiteralZero,
}

/// Monte Carlo expected payoff vectors for the vector-utility case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorExpectedPayoffs {
    pub def_vector: Vec<f64>,
    pub imm_vector: Vec<f64>,
    pub don_vector: Vec<f64>,
    pub mc_stderr: Vec<f64>,
}

/// Estimate E[𝝂(x)·I{x wins} + 𝝂(o)·I{o wins}] by plain Monte Carlo over the
/// per-dimension bivariate posteriors and iid noises. The immediate and
/// do-nothing vectors are the posterior means (closed form).
pub fn payoffs_vector_mc(
    bivariates: &[BivariatePosterior],
    sigma: f64,
    _dominance: NoisyDominance,
    policy: IncomparablePolicy,
    n_mc: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VectorExpectedPayoffs> {
    if bivariates.is_empty() {
        return Err(Error::Empty {
            what: "bivariate posteriors",
        });
    }
    if n_mc < 10_000 {
        return Err(Error::InvalidParameter {
            name: "n_mc",
            reason: "needs at least 10_000 draws".into(),
        });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be non-negative and finite".into(),
        });
    }
    let d = bivariates.len();
    // Per-dimension 2×2 Cholesky factors of the posterior covariance.
    let factors: Vec<(f64, f64, f64)> = bivariates
        .iter()
        .map(|bp| {
            let l11 = bp.k_xx.max(0.0).sqrt();
            let l21 = if l11 > 0.0 { bp.k_xo / l11 } else { 0.0 };
            let l22 = (bp.k_oo - l21 * l21).max(0.0).sqrt();
            (l11, l21, l22)
        })
        .collect();

    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut vx = vec![0.0; d];
    let mut vo = vec![0.0; d];
    for _ in 0..n_mc {
        let mut x_wins = true;
        let mut o_wins = true;
        for k in 0..d {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let (l11, l21, l22) = factors[k];
            vx[k] = bivariates[k].mu_x + l11 * z1;
            vo[k] = bivariates[k].mu_o + l21 * z1 + l22 * z2;
            let noisy_x = vx[k] + sigma * rng.sample::<f64, _>(StandardNormal);
            let noisy_o = vo[k] + sigma * rng.sample::<f64, _>(StandardNormal);
            if noisy_x <= noisy_o {
                x_wins = false;
            }
            if noisy_o <= noisy_x {
                o_wins = false;
            }
        }
        for k in 0..d {
            let payoff = if x_wins {
                vx[k]
            } else if o_wins {
                vo[k]
            } else {
                match policy {
                    IncomparablePolicy::StatusQuo => vo[k],
                    IncomparablePolicy::LiteralZero => 0.0,
                }
            };
            sum[k] += payoff;
            sum_sq[k] += payoff * payoff;
        }
    }
    let n = n_mc as f64;
    let def_vector: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mc_stderr: Vec<f64> = sum_sq
        .iter()
        .zip(&def_vector)
        .map(|(&sq, &m)| ((sq / n - m * m).max(0.0) / n).sqrt())
        .collect();
    Ok(VectorExpectedPayoffs {
        def_vector,
        imm_vector: bivariates.iter().map(|b| b.mu_x).collect(),
        don_vector: bivariates.iter().map(|b| b.mu_o).collect(),
        mc_stderr,
    })
}
