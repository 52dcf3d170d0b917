//! Engine for playing the off-switch problem as a signalling game.
//!
//! A human sender holds a latent utility over acts and communicates it to a
//! robot receiver as a dataset of pairwise choices. The receiver learns a
//! Gaussian-process posterior over the utility, evaluates closed-form expected
//! payoffs for deferring, acting immediately, or doing nothing, and picks an
//! action. The crate provides the Gaussian primitives behind the closed forms,
//! the bounded-rationality choice mechanisms, four posterior approximations,
//! the payoff and decision layers, a game orchestrator, and the Monte Carlo
//! experiment harness.

pub mod choice;
pub mod decision;
pub mod error;
pub mod experiments;
pub mod game;
pub mod gauss;
pub mod inference;
pub mod payoff;

pub use choice::{Act, ChoiceDataset, ChoiceObservation, RationalityModel};
pub use decision::{DominanceCriterion, ReceiverAction, Regime};
pub use error::{Error, Result};
pub use gauss::{GramMatrix, Kernel, MeanFunction, UnivariateGaussian};
pub use inference::{BivariatePosterior, InferenceMethod, LatentPosterior, LikelihoodSpec};
pub use payoff::{CostParams, DefValue, ExpectedPayoffs, VectorExpectedPayoffs};
