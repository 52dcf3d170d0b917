//! Decision rules mapping expected payoffs to the receiver's action.

use serde::{Deserialize, Serialize};

use crate::choice::RationalityModel;
use crate::error::{Error, Result};
use crate::inference::BivariatePosterior;
use crate::payoff::{DefValue, ExpectedPayoffs, VectorExpectedPayoffs};

/// σ below this counts as a rational sender.
pub const RATIONALITY_SIGMA_THRESHOLD: f64 = 1e-9;
/// Posterior covariance entries above this count as receiver uncertainty.
pub const UNCERTAINTY_COV_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiverAction {
    Imm,
    Def,
    DoN,
}

impl ReceiverAction {
    pub fn label(&self) -> &'static str {
        match self {
            ReceiverAction::Imm => "IMM",
            ReceiverAction::Def => "DEF",
            ReceiverAction::DoN => "DON",
        }
    }
}

/// Which rationality/uncertainty cell the play sits in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub sender_rational: bool,
    pub receiver_uncertain: bool,
}

/// How set-valued deferral payoffs are compared against the alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DominanceCriterion {
    /// Compare the minimum of the deferral pair.
    PessimisticA,
    /// Compare the maximum of the deferral pair.
    OptimisticB,
}

fn best_of_rest(imm: f64, don: f64) -> ReceiverAction {
    // Ties between acting and doing nothing resolve to the status quo.
    if imm > don {
        ReceiverAction::Imm
    } else {
        ReceiverAction::DoN
    }
}

/// Scalar rule: defer whenever the deferral value (net of β) is at least the
/// best alternative; a tie goes to deferral.
pub fn decide_scalar(p: &ExpectedPayoffs) -> Result<ReceiverAction> {
    let def = p.def_value.scalar()?;
    if def - p.beta >= p.imm_value.max(p.don_value) {
        Ok(ReceiverAction::Def)
    } else {
        Ok(best_of_rest(p.imm_value, p.don_value))
    }
}

/// Set-valued rule: criterion A compares the worst deferral candidate,
/// criterion B the best.
pub fn decide_threshold(p: &ExpectedPayoffs, crit: DominanceCriterion) -> Result<ReceiverAction> {
    let DefValue::Set { .. } = p.def_value else {
        return Err(Error::WrongPayoffKind {
            expected: "set-valued deferral payoff",
        });
    };
    let candidate = match crit {
        DominanceCriterion::PessimisticA => p.def_value.low(),
        DominanceCriterion::OptimisticB => p.def_value.high(),
    };
    if candidate - p.beta >= p.imm_value.max(p.don_value) {
        Ok(ReceiverAction::Def)
    } else {
        Ok(best_of_rest(p.imm_value, p.don_value))
    }
}

/// Dominance rules applicable to payoff vectors. For a finite candidate set
/// "uniquely e-admissible" coincides with strict Pareto dominance over every
/// rival, so both criteria share one predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VectorCriterion {
    Pareto,
    EAdmissible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VectorDecision {
    Action(ReceiverAction),
    /// No action dominates; the caller's default policy resolves it.
    Undecided,
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x > y)
}

/// Vector rule: an action is chosen only when it strictly dominates both
/// alternatives componentwise; otherwise the outcome is reported undecided.
pub fn decide_vector(
    v: &VectorExpectedPayoffs,
    _crit: VectorCriterion,
) -> Result<VectorDecision> {
    let d = v.def_vector.len();
    if v.imm_vector.len() != d || v.don_vector.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.imm_vector.len().min(v.don_vector.len()),
        });
    }
    if dominates(&v.def_vector, &v.imm_vector) && dominates(&v.def_vector, &v.don_vector) {
        return Ok(VectorDecision::Action(ReceiverAction::Def));
    }
    if dominates(&v.imm_vector, &v.def_vector) && dominates(&v.imm_vector, &v.don_vector) {
        return Ok(VectorDecision::Action(ReceiverAction::Imm));
    }
    if dominates(&v.don_vector, &v.def_vector) && dominates(&v.don_vector, &v.imm_vector) {
        return Ok(VectorDecision::Action(ReceiverAction::DoN));
    }
    Ok(VectorDecision::Undecided)
}

/// Classify the play's regime from the posterior at {x, o} and the sender's
/// model. MAP posteriors carry zero covariance and always classify as
/// no-uncertainty.
pub fn classify_regime(bp: &BivariatePosterior, model: &RationalityModel) -> Regime {
    Regime {
        sender_rational: model.sigma() < RATIONALITY_SIGMA_THRESHOLD,
        receiver_uncertain: bp.has_uncertainty(UNCERTAINTY_COV_THRESHOLD),
    }
}
