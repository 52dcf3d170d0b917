//! Acts, choice datasets, and the sender's choice mechanisms.
//!
//! A message is a list of (choice set, chosen subset) observations. Three
//! mechanisms generate the chosen subset: exact scalar maximisation,
//! Gaussian-noise random utility, and a discernibility threshold that keeps
//! both acts when their utilities are too close to tell apart. Vector-valued
//! utilities choose by Pareto dominance or per-coordinate argmax.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in act space: a fixed-dimension coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Act {
    coords: Vec<f64>,
}

impl Act {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty {
                what: "act coordinates",
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "act coordinate",
            });
        }
        Ok(Self { coords })
    }

    pub fn scalar(x: f64) -> Self {
        Self { coords: vec![x] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn format(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{c}");
        }
        s
    }

    fn parse(text: &str, line: usize) -> Result<Self> {
        let coords: Vec<f64> = text
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    reason: format!("bad coordinate `{t}`"),
                })
            })
            .collect::<Result<_>>()?;
        Act::new(coords)
    }
}

/// One observed choice: a non-empty set of acts and the non-empty chosen
/// subset, stored as indices into the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceObservation {
    choice_set: Vec<Act>,
    chosen: Vec<usize>,
}

impl ChoiceObservation {
    pub fn new(choice_set: Vec<Act>, mut chosen: Vec<usize>) -> Result<Self> {
        if choice_set.is_empty() {
            return Err(Error::Empty { what: "choice set" });
        }
        if chosen.is_empty() {
            return Err(Error::Empty {
                what: "chosen subset",
            });
        }
        chosen.sort_unstable();
        chosen.dedup();
        if chosen.iter().any(|&i| i >= choice_set.len()) {
            return Err(Error::InvalidParameter {
                name: "chosen",
                reason: "index outside the choice set".into(),
            });
        }
        let dim = choice_set[0].dim();
        if choice_set.iter().any(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: 0,
            });
        }
        Ok(Self { choice_set, chosen })
    }

    /// Convenience constructor for the pairwise case `winner ≻ loser`.
    pub fn pair(winner: Act, loser: Act) -> Result<Self> {
        Self::new(vec![winner, loser], vec![0])
    }

    pub fn choice_set(&self) -> &[Act] {
        &self.choice_set
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn chosen_acts(&self) -> impl Iterator<Item = &Act> {
        self.chosen.iter().map(|&i| &self.choice_set[i])
    }

    /// Whether this is a two-act set with a single chosen act.
    pub fn is_strict_pair(&self) -> bool {
        self.choice_set.len() == 2 && self.chosen.len() == 1
    }

    pub fn is_pair(&self) -> bool {
        self.choice_set.len() == 2
    }
}

/// The message: a list of choice observations over a common act dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChoiceDataset {
    observations: Vec<ChoiceObservation>,
}

impl ChoiceDataset {
    pub fn new(observations: Vec<ChoiceObservation>) -> Result<Self> {
        if let Some(first) = observations.first() {
            let dim = first.choice_set[0].dim();
            for obs in &observations {
                if obs.choice_set[0].dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: obs.choice_set[0].dim(),
                    });
                }
            }
        }
        Ok(Self { observations })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn observations(&self) -> &[ChoiceObservation] {
        &self.observations
    }

    /// Message length ℓ: the number of observations.
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Unique acts appearing anywhere in the dataset, in first-seen order.
    pub fn distinct_acts(&self) -> Vec<Act> {
        let mut acts: Vec<Act> = Vec::new();
        for obs in &self.observations {
            for a in &obs.choice_set {
                if !acts.contains(a) {
                    acts.push(a.clone());
                }
            }
        }
        acts
    }

    /// Line-oriented text form: `set: a1 a2 … | chosen: ai …`, one
    /// observation per line, coordinates comma-separated. Round-trips
    /// bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for obs in &self.observations {
            out.push_str("set:");
            for a in &obs.choice_set {
                out.push(' ');
                out.push_str(&a.format());
            }
            out.push_str(" | chosen:");
            for a in obs.chosen_acts() {
                out.push(' ');
                out.push_str(&a.format());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut observations = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rest = line.strip_prefix("set:").ok_or_else(|| Error::Parse {
                line: line_no,
                reason: "expected `set:` prefix".into(),
            })?;
            let (set_part, chosen_part) = rest.split_once('|').ok_or_else(|| Error::Parse {
                line: line_no,
                reason: "missing `|` separator".into(),
            })?;
            let chosen_part =
                chosen_part
                    .trim()
                    .strip_prefix("chosen:")
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        reason: "expected `chosen:` prefix".into(),
                    })?;
            let choice_set: Vec<Act> = set_part
                .split_whitespace()
                .map(|t| Act::parse(t, line_no))
                .collect::<Result<_>>()?;
            let mut chosen = Vec::new();
            for t in chosen_part.split_whitespace() {
                let act = Act::parse(t, line_no)?;
                let idx = choice_set
                    .iter()
                    .position(|a| *a == act)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        reason: format!("chosen act `{t}` not in the choice set"),
                    })?;
                chosen.push(idx);
            }
            observations.push(
                ChoiceObservation::new(choice_set, chosen).map_err(|e| Error::Parse {
                    line: line_no,
                    reason: e.to_string(),
                })?,
            );
        }
        ChoiceDataset::new(observations)
    }
}

/// Which bounded-rationality mechanism governs the sender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RationalityModel {
    /// Exact maximisation; utilities are assumed pairwise distinct.
    Exact,
    /// Random-utility choice with independent N(0, σ²) noise on each act.
    GaussianNoise { sigma: f64 },
    /// Acts within σ of each other are indistinguishable and both kept.
    DiscernibilityThreshold { sigma: f64, epsilon: f64 },
}

impl RationalityModel {
    pub fn gaussian_noise(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: "must be positive and finite".into(),
            });
        }
        Ok(RationalityModel::GaussianNoise { sigma })
    }

    pub fn discernibility_threshold(sigma: f64, epsilon: f64) -> Result<Self> {
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
        Ok(RationalityModel::DiscernibilityThreshold { sigma, epsilon })
    }

    /// The noise scale σ; zero for the exact model.
    pub fn sigma(&self) -> f64 {
        match *self {
            RationalityModel::Exact => 0.0,
            RationalityModel::GaussianNoise { sigma } => sigma,
            RationalityModel::DiscernibilityThreshold { sigma, .. } => sigma,
        }
    }
}

// ---------------------------------------------------------------------------
// Choice mechanisms
// ---------------------------------------------------------------------------

/// Exact scalar optimisation: the unique argmax of `values` over the set.
///
/// Ties are rejected; the learning setup assumes pairwise-distinct utilities.
pub fn exact_choice(values: &[f64]) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::Empty { what: "choice set" });
    }
    let mut best = 0usize;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    if values
        .iter()
        .enumerate()
        .any(|(i, &v)| i != best && v == values[best])
    {
        return Err(Error::TiedUtilities);
    }
    Ok(vec![best])
}

/// Random-utility pair choice: index 0 wins when v0 + n0 > v1 + n1 with two
/// independent N(0, σ²) noises, matching the indicator in the deferral payoff.
pub fn noisy_pair_choice(v0: f64, v1: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be positive".into(),
        });
    }
    let n0: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
    let n1: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
    Ok(if v0 + n0 > v1 + n1 { 0 } else { 1 })
}

/// Deterministic pair-choice from pre-drawn noise realisations.
pub fn noisy_pair_choice_with(v0: f64, v1: f64, n0: f64, n1: f64) -> usize {
    if v0 + n0 > v1 + n1 {
        0
    } else {
        1
    }
}

/// Discernibility-threshold pair choice: a clear winner needs a margin above
/// σ, otherwise both acts are kept.
pub fn threshold_choice(v0: f64, v1: f64, sigma: f64) -> Result<Vec<usize>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "must be positive".into(),
        });
    }
    Ok(if v0 > v1 + sigma {
        vec![0]
    } else if v1 > v0 + sigma {
        vec![1]
    } else {
        vec![0, 1]
    })
}

/// Vector optimisation choice: acts not strictly dominated componentwise.
pub fn pareto_choice(values: &[Vec<f64>]) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::Empty { what: "choice set" });
    }
    let d = values[0].len();
    if values.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: 0,
        });
    }
    let dominates = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x > y);
    Ok((0..values.len())
        .filter(|&i| !values.iter().any(|other| dominates(other, &values[i])))
        .collect())
}

/// Union-of-argmax choice: every act that maximises at least one coordinate.
pub fn e_admissible_choice(values: &[Vec<f64>]) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::Empty { what: "choice set" });
    }
    let d = values[0].len();
    if values.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: 0,
        });
    }
    let mut keep = vec![false; values.len()];
    for k in 0..d {
        let max = values.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
        for (i, v) in values.iter().enumerate() {
            if v[k] == max {
                keep[i] = true;
            }
        }
    }
    Ok(keep
        .iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect())
}

// ---------------------------------------------------------------------------
// Honest message generation
// ---------------------------------------------------------------------------

/// Apply the model's mechanism to one act pair, using pre-drawn noises for
/// the random-utility case.
pub fn observe_pair(
    pair: [Act; 2],
    v: [f64; 2],
    model: &RationalityModel,
    noises: [f64; 2],
) -> Result<ChoiceObservation> {
    let chosen = match *model {
        RationalityModel::Exact => exact_choice(&v)?,
        RationalityModel::GaussianNoise { .. } => {
            vec![noisy_pair_choice_with(v[0], v[1], noises[0], noises[1])]
        }
        RationalityModel::DiscernibilityThreshold { sigma, .. } => {
            threshold_choice(v[0], v[1], sigma)?
        }
    };
    ChoiceObservation::new(pair.to_vec(), chosen)
}

/// Generate the sender's honest message: `n_pairs` observations over act
/// pairs drawn uniformly without replacement from the pool, each resolved by
/// the model's own mechanism. Deterministic given the seed behind `rng`.
pub fn honest_message<F>(
    utility: F,
    model: &RationalityModel,
    acts_pool: &[Act],
    n_pairs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ChoiceDataset>
where
    F: Fn(&Act) -> f64,
{
    if acts_pool.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "acts_pool",
            reason: "needs at least two acts".into(),
        });
    }
    if n_pairs == 0 {
        return Err(Error::InvalidParameter {
            name: "n_pairs",
            reason: "must be at least one".into(),
        });
    }
    let sigma = model.sigma();
    let mut observations = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let i = rng.random_range(0..acts_pool.len());
        let mut j = rng.random_range(0..acts_pool.len() - 1);
        if j >= i {
            j += 1;
        }
        let pair = [acts_pool[i].clone(), acts_pool[j].clone()];
        let v = [utility(&pair[0]), utility(&pair[1])];
        // Noise draws are consumed for every model so that the σ → 0 noise
        // model reproduces the exact mechanism pair-for-pair on one seed.
        let noises = [
            rng.sample::<f64, _>(StandardNormal) * sigma,
            rng.sample::<f64, _>(StandardNormal) * sigma,
        ];
        observations.push(observe_pair(pair, v, model, noises)?);
    }
    ChoiceDataset::new(observations)
}

// ---------------------------------------------------------------------------
// Path independence
// ---------------------------------------------------------------------------

const PATH_INDEPENDENCE_CAP: usize = 7;

/// Exhaustively check C(A∪B) = C(C(A)∪B) over a small universe.
///
/// The rule maps a sorted slice of universe indices to the chosen subset
/// (as universe indices). Universes above 7 acts are rejected.
pub fn check_path_independence<C>(rule: C, n_universe: usize) -> Result<bool>
where
    C: Fn(&[usize]) -> Vec<usize>,
{
    if n_universe == 0 {
        return Err(Error::Empty { what: "universe" });
    }
    if n_universe > PATH_INDEPENDENCE_CAP {
        return Err(Error::MessageSpaceTooLarge {
            size: n_universe as u64,
            cap: PATH_INDEPENDENCE_CAP as u64,
        });
    }
    let members = |mask: u32| -> Vec<usize> {
        (0..n_universe).filter(|&i| mask >> i & 1 == 1).collect()
    };
    let to_mask = |set: &[usize]| -> u32 { set.iter().fold(0u32, |m, &i| m | 1 << i) };
    let full: u32 = (1 << n_universe) - 1;
    for a in 1..=full {
        let chosen_a = to_mask(&rule(&members(a)));
        for b in 0..=full {
            let lhs = rule(&members(a | b));
            let rhs = rule(&members(chosen_a | b));
            let (mut l, mut r) = (lhs, rhs);
            l.sort_unstable();
            r.sort_unstable();
            if l != r {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
