//! Posterior inference over latent utility values from choice data.
//!
//! Four interchangeable approximations mirror a spectrum of receiver
//! rationality: a MAP point estimate with no uncertainty at all, a Laplace
//! Gaussian at the mode, expectation propagation, and elliptical slice
//! sampling from the exact (non-Gaussian) posterior.

mod ep;
mod ess;
mod likelihood;
mod newton;

pub use likelihood::{
    probit_log_likelihood, probit_log_likelihood_grad, threshold_log_likelihood, LikelihoodSpec,
    DEFAULT_SURROGATE_SIGMA,
};

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{Act, ChoiceDataset};
use crate::error::{Error, Result};
use crate::gauss::{gram, Kernel, MeanFunction};

/// The receiver's posterior approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InferenceMethod {
    /// Posterior mode only; no uncertainty representation.
    Map,
    /// Gaussian at the mode with curvature covariance.
    Laplace,
    /// Moment-matched Gaussian via expectation propagation.
    Ep {
        damping: f64,
        tol: f64,
        max_sweeps: usize,
    },
    /// Elliptical slice sampling from the exact posterior.
    Sampling { n_samples: usize, burn_in: usize },
}

impl InferenceMethod {
    pub fn ep_default() -> Self {
        InferenceMethod::Ep {
            damping: 0.8,
            tol: 1e-6,
            max_sweeps: 200,
        }
    }

    pub fn sampling_default() -> Self {
        InferenceMethod::Sampling {
            n_samples: 10_000,
            burn_in: 1_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InferenceMethod::Map | InferenceMethod::Laplace => Ok(()),
            InferenceMethod::Ep {
                damping,
                tol,
                max_sweeps,
            } => {
                if damping > 0.0 && damping <= 1.0 && tol > 0.0 && max_sweeps > 0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "ep",
                        reason: "damping in (0,1], tol > 0, max_sweeps > 0 required".into(),
                    })
                }
            }
            InferenceMethod::Sampling { n_samples, burn_in } => {
                if n_samples > burn_in {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "sampling",
                        reason: "n_samples must exceed burn_in".into(),
                    })
                }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InferenceMethod::Map => "map",
            InferenceMethod::Laplace => "laplace",
            InferenceMethod::Ep { .. } => "ep",
            InferenceMethod::Sampling { .. } => "sampling",
        }
    }

    /// Parse a method label, filling in the default EP/sampling schedules.
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "map" | "nn" => Ok(InferenceMethod::Map),
            "laplace" => Ok(InferenceMethod::Laplace),
            "ep" => Ok(InferenceMethod::ep_default()),
            "sampling" | "skewgp" => Ok(InferenceMethod::sampling_default()),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }

    fn is_map(&self) -> bool {
        matches!(self, InferenceMethod::Map)
    }
}

#[derive(Debug, Clone)]
enum PosteriorRepr {
    /// Mean and covariance at the training acts (MAP stores a zero matrix).
    Gaussian {
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    },
    /// Retained sampler draws, one row per draw.
    Samples { draws: DMatrix<f64> },
}

#[derive(Debug, Clone, Default)]
pub struct FitDiagnostics {
    pub newton_iterations: usize,
    pub gradient_inf_norm: f64,
    pub ep_sweeps: usize,
}

/// Approximate posterior over utility values at the training acts.
#[derive(Debug, Clone)]
pub struct LatentPosterior {
    training_acts: Vec<Act>,
    repr: PosteriorRepr,
    method: InferenceMethod,
    diagnostics: FitDiagnostics,
}

impl LatentPosterior {
    pub fn training_acts(&self) -> &[Act] {
        &self.training_acts
    }

    pub fn method(&self) -> &InferenceMethod {
        &self.method
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    /// Posterior mean at the training acts (empirical for the sampling arm).
    pub fn mean(&self) -> DVector<f64> {
        match &self.repr {
            PosteriorRepr::Gaussian { mean, .. } => mean.clone(),
            PosteriorRepr::Samples { draws } => {
                let n = draws.ncols();
                let mut m = DVector::zeros(n);
                for r in 0..draws.nrows() {
                    m += draws.row(r).transpose();
                }
                m / draws.nrows() as f64
            }
        }
    }

    /// Posterior covariance at the training acts (zero for MAP, empirical
    /// for the sampling arm).
    pub fn cov(&self) -> DMatrix<f64> {
        match &self.repr {
            PosteriorRepr::Gaussian { cov, .. } => cov.clone(),
            PosteriorRepr::Samples { draws } => {
                let n = draws.ncols();
                let rows = draws.nrows();
                let mean = self.mean();
                let mut cov = DMatrix::zeros(n, n);
                for r in 0..rows {
                    let d = draws.row(r).transpose() - &mean;
                    cov += &d * d.transpose();
                }
                cov / (rows as f64 - 1.0).max(1.0)
            }
        }
    }

    /// Retained draws for the sampling arm.
    pub fn draws(&self) -> Option<&DMatrix<f64>> {
        match &self.repr {
            PosteriorRepr::Samples { draws } => Some(draws),
            _ => None,
        }
    }
}

/// Posterior marginal over the act pair {x, o}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePosterior {
    pub mu_x: f64,
    pub mu_o: f64,
    pub k_xx: f64,
    pub k_oo: f64,
    pub k_xo: f64,
}

impl BivariatePosterior {
    pub fn new(mu_x: f64, mu_o: f64, k_xx: f64, k_oo: f64, k_xo: f64) -> Result<Self> {
        for (v, what) in [
            (mu_x, "mu_x"),
            (mu_o, "mu_o"),
            (k_xx, "k_xx"),
            (k_oo, "k_oo"),
            (k_xo, "k_xo"),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { what });
            }
        }
        // Absorb harmless rounding noise, reject genuine violations.
        let k_xx = if k_xx >= 0.0 {
            k_xx
        } else if k_xx > -1e-8 {
            0.0
        } else {
            return Err(Error::IllPosed("negative variance k_xx".into()));
        };
        let k_oo = if k_oo >= 0.0 {
            k_oo
        } else if k_oo > -1e-8 {
            0.0
        } else {
            return Err(Error::IllPosed("negative variance k_oo".into()));
        };
        let det = k_xx * k_oo - k_xo * k_xo;
        let k_xo = if det >= -1e-10 {
            k_xo
        } else if det > -1e-6 {
            k_xo.signum() * (k_xx * k_oo).sqrt()
        } else {
            return Err(Error::IllPosed("bivariate covariance not PSD".into()));
        };
        Ok(Self {
            mu_x,
            mu_o,
            k_xx,
            k_oo,
            k_xo,
        })
    }

    pub fn has_uncertainty(&self, threshold: f64) -> bool {
        self.k_xx > threshold || self.k_oo > threshold || self.k_xo.abs() > threshold
    }
}

fn empty_posterior(method: InferenceMethod) -> LatentPosterior {
    LatentPosterior {
        training_acts: Vec::new(),
        repr: PosteriorRepr::Gaussian {
            mean: DVector::zeros(0),
            cov: DMatrix::zeros(0, 0),
        },
        method,
        diagnostics: FitDiagnostics::default(),
    }
}

/// Learn the posterior over utility values at the dataset's acts.
///
/// An empty dataset returns the prior (no training points). Newton and EP
/// non-convergence are reported as errors, never silently absorbed.
pub fn fit(
    dataset: &ChoiceDataset,
    kernel: &Kernel,
    mean: &MeanFunction,
    likelihood: &LikelihoodSpec,
    method: &InferenceMethod,
    rng: &mut ChaCha8Rng,
) -> Result<LatentPosterior> {
    method.validate()?;
    likelihood.validate()?;
    if dataset.is_empty() {
        return Ok(empty_posterior(*method));
    }
    let acts = dataset.distinct_acts();
    let (gram_m, mu0) = gram(kernel, mean, &acts)?;
    let terms = likelihood::build_terms(dataset, likelihood, &acts)?;

    match *method {
        InferenceMethod::Map => {
            let mode = newton::newton_mode(&gram_m, &mu0, &terms)?;
            let n = acts.len();
            Ok(LatentPosterior {
                training_acts: acts,
                repr: PosteriorRepr::Gaussian {
                    mean: mode.f,
                    cov: DMatrix::zeros(n, n),
                },
                method: *method,
                diagnostics: FitDiagnostics {
                    newton_iterations: mode.iterations,
                    gradient_inf_norm: mode.grad_inf_norm,
                    ep_sweeps: 0,
                },
            })
        }
        InferenceMethod::Laplace => {
            let mode = newton::newton_mode(&gram_m, &mu0, &terms)?;
            let cov = newton::laplace_covariance(&gram_m, &mode.f, &terms)?;
            Ok(LatentPosterior {
                training_acts: acts,
                repr: PosteriorRepr::Gaussian { mean: mode.f, cov },
                method: *method,
                diagnostics: FitDiagnostics {
                    newton_iterations: mode.iterations,
                    gradient_inf_norm: mode.grad_inf_norm,
                    ep_sweeps: 0,
                },
            })
        }
        InferenceMethod::Ep {
            damping,
            tol,
            max_sweeps,
        } => {
            let res = ep::ep_fit(&gram_m, &mu0, &terms, damping, tol, max_sweeps)?;
            Ok(LatentPosterior {
                training_acts: acts,
                repr: PosteriorRepr::Gaussian {
                    mean: res.mean,
                    cov: res.cov,
                },
                method: *method,
                diagnostics: FitDiagnostics {
                    newton_iterations: 0,
                    gradient_inf_norm: 0.0,
                    ep_sweeps: res.sweeps,
                },
            })
        }
        InferenceMethod::Sampling { n_samples, burn_in } => {
            // Start the chain from the smooth-surrogate mode, which lies in
            // the feasible region of the hard indicators.
            let mode = newton::newton_mode(&gram_m, &mu0, &terms)?;
            let draws = if likelihood.hard_for_sampling() {
                ess::ess_chain(
                    &gram_m,
                    &mu0,
                    |f| likelihood::hard_loglik(f.as_slice(), &terms),
                    &mode.f,
                    n_samples,
                    burn_in,
                    rng,
                )?
            } else {
                ess::ess_chain(
                    &gram_m,
                    &mu0,
                    |f| likelihood::smooth_loglik(f.as_slice(), &terms),
                    &mode.f,
                    n_samples,
                    burn_in,
                    rng,
                )?
            };
            Ok(LatentPosterior {
                training_acts: acts,
                repr: PosteriorRepr::Samples { draws },
                method: *method,
                diagnostics: FitDiagnostics {
                    newton_iterations: mode.iterations,
                    gradient_inf_norm: mode.grad_inf_norm,
                    ep_sweeps: 0,
                },
            })
        }
    }
}

/// Joint predictive mean and covariance at arbitrary target acts via standard
/// GP conditioning of the (training ∪ targets) prior on the approximate
/// posterior. MAP posteriors predict with zero covariance.
pub fn predict_joint(
    posterior: &LatentPosterior,
    kernel: &Kernel,
    mean: &MeanFunction,
    targets: &[Act],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if targets.is_empty() {
        return Err(Error::Empty {
            what: "prediction targets",
        });
    }
    let t = targets.len();
    let mut mu_star = DVector::from_iterator(t, targets.iter().map(|a| mean.eval(a)));
    let mut k_star_star = DMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..=i {
            let v = kernel.eval(&targets[i], &targets[j]);
            k_star_star[(i, j)] = v;
            k_star_star[(j, i)] = v;
        }
    }

    let acts = posterior.training_acts();
    if acts.is_empty() {
        if posterior.method().is_map() {
            return Ok((mu_star, DMatrix::zeros(t, t)));
        }
        return Ok((mu_star, k_star_star));
    }

    let (gram_m, mu0) = gram(kernel, mean, acts)?;
    if gram_m.is_point_mass() {
        // Dirac prior: the posterior over any act is the prior mean.
        return Ok((mu_star, DMatrix::zeros(t, t)));
    }

    let n = acts.len();
    let mut k_star = DMatrix::zeros(n, t);
    for i in 0..n {
        for j in 0..t {
            k_star[(i, j)] = kernel.eval(&acts[i], &targets[j]);
        }
    }
    // A = K⁻¹ k_star, column by column against the factorized Gram.
    let mut a = DMatrix::zeros(n, t);
    for j in 0..t {
        let col = gram_m.solve(&DVector::from_column_slice(k_star.column(j).as_slice()))?;
        a.set_column(j, &col);
    }

    let m = posterior.mean();
    mu_star += a.transpose() * (&m - &mu0);

    if posterior.method().is_map() {
        return Ok((mu_star, DMatrix::zeros(t, t)));
    }

    let s = posterior.cov();
    let mut cov = k_star_star - k_star.transpose() * &a + a.transpose() * s * &a;
    let covt = cov.transpose();
    cov += covt;
    cov *= 0.5;
    Ok((mu_star, cov))
}

/// Bivariate posterior at the act pair {x, o}.
pub fn predict_pair(
    posterior: &LatentPosterior,
    kernel: &Kernel,
    mean: &MeanFunction,
    x: &Act,
    o: &Act,
) -> Result<BivariatePosterior> {
    if x == o {
        return Err(Error::InvalidParameter {
            name: "acts",
            reason: "x and o must differ".into(),
        });
    }
    let (mu, cov) = predict_joint(posterior, kernel, mean, &[x.clone(), o.clone()])?;
    BivariatePosterior::new(mu[0], mu[1], cov[(0, 0)], cov[(1, 1)], cov[(0, 1)])
}
