//! One play of the modified signalling game.
//!
//! Nature draws the sender's type (a latent utility over the act grid plus
//! noise realisations), the sender emits the honest message, the receiver
//! fits a posterior from it, evaluates expected payoffs at the act pair
//! {x, o}, and acts; on deferral the sender responds by switching the
//! receiver off or letting it proceed. Transcripts are deterministic per
//! (config, seed) and serialize to JSON lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::choice::{observe_pair, Act, ChoiceDataset, RationalityModel};
use crate::decision::{
    decide_scalar, decide_threshold, DominanceCriterion, ReceiverAction,
};
use crate::error::{Error, Result};
use crate::gauss::{gram, mvn_sample, Kernel, MeanFunction};
use crate::inference::{fit, predict_pair, InferenceMethod, LikelihoodSpec};
use crate::payoff::{payoffs_noise, payoffs_threshold, payoffs_with_cost, CostParams};

/// Everything that is common knowledge in the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub grid: Vec<Act>,
    pub x: Act,
    pub o: Act,
    pub kernel: Kernel,
    pub mean: MeanFunction,
    pub model: RationalityModel,
    pub n_prefs: usize,
    pub method: InferenceMethod,
    pub cost: CostParams,
    pub criterion: DominanceCriterion,
    pub seed: u64,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.len() < 2 {
            return Err(Error::Config("act grid needs at least two acts".into()));
        }
        if self.x == self.o {
            return Err(Error::Config("x and o must be distinct acts".into()));
        }
        if self.n_prefs == 0 {
            return Err(Error::Config("n_prefs must be at least one".into()));
        }
        let dim = self.grid[0].dim();
        if self.grid.iter().any(|a| a.dim() != dim)
            || self.x.dim() != dim
            || self.o.dim() != dim
        {
            return Err(Error::Config("act dimensions are inconsistent".into()));
        }
        for k in 0..dim {
            let lo = self.grid.iter().map(|a| a.coords()[k]).fold(f64::INFINITY, f64::min);
            let hi = self
                .grid
                .iter()
                .map(|a| a.coords()[k])
                .fold(f64::NEG_INFINITY, f64::max);
            for act in [&self.x, &self.o] {
                let c = act.coords()[k];
                if c < lo || c > hi {
                    return Err(Error::Config(
                        "x and o must lie inside the grid's bounding box".into(),
                    ));
                }
            }
        }
        self.method.validate()?;
        if self.cost.gamma > 0.0
            && matches!(self.model, RationalityModel::DiscernibilityThreshold { .. })
        {
            return Err(Error::Config(
                "message costs are defined for the noise model only".into(),
            ));
        }
        Ok(())
    }

    /// Stable content hash of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Nature's draw: the latent utility on grid ∪ {x, o} plus the sender's
/// noise vector (two per message pair, two for the deferral response).
#[derive(Debug, Clone)]
pub struct TypeRealization {
    pub joint_acts: Vec<Act>,
    pub utility_values: Vec<f64>,
    pub noise_draws: Vec<f64>,
    pub x_index: usize,
    pub o_index: usize,
    grid_len: usize,
}

impl TypeRealization {
    pub fn value_x(&self) -> f64 {
        self.utility_values[self.x_index]
    }

    pub fn value_o(&self) -> f64 {
        self.utility_values[self.o_index]
    }

    pub fn grid_value(&self, grid_index: usize) -> f64 {
        debug_assert!(grid_index < self.grid_len);
        self.utility_values[grid_index]
    }

    fn response_noises(&self) -> (f64, f64) {
        let n = self.noise_draws.len();
        (self.noise_draws[n - 2], self.noise_draws[n - 1])
    }
}

/// Draw the sender's type from the common-knowledge prior.
pub fn draw_type(config: &GameConfig, rng: &mut ChaCha8Rng) -> Result<TypeRealization> {
    let mut joint = config.grid.clone();
    let grid_len = joint.len();
    let x_index = match joint.iter().position(|a| *a == config.x) {
        Some(i) => i,
        None => {
            joint.push(config.x.clone());
            joint.len() - 1
        }
    };
    let o_index = match joint.iter().position(|a| *a == config.o) {
        Some(i) => i,
        None => {
            joint.push(config.o.clone());
            joint.len() - 1
        }
    };
    let (gram_m, mu0) = gram(&config.kernel, &config.mean, &joint)?;
    let utility_values = mvn_sample(&mu0, &gram_m, rng)?.as_slice().to_vec();
    let sigma = config.model.sigma();
    let noise_draws = (0..2 * config.n_prefs + 2)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * sigma)
        .collect();
    Ok(TypeRealization {
        joint_acts: joint,
        utility_values,
        noise_draws,
        x_index,
        o_index,
        grid_len,
    })
}

/// The honest message implied by the type: pairs drawn uniformly without
/// replacement from the grid, resolved by the type's own utility and noises.
pub fn honest_message_for_type(
    config: &GameConfig,
    t: &TypeRealization,
    rng: &mut ChaCha8Rng,
) -> Result<ChoiceDataset> {
    let n_grid = t.grid_len;
    let mut observations = Vec::with_capacity(config.n_prefs);
    for p in 0..config.n_prefs {
        let i = rng.random_range(0..n_grid);
        let mut j = rng.random_range(0..n_grid - 1);
        if j >= i {
            j += 1;
        }
        let pair = [t.joint_acts[i].clone(), t.joint_acts[j].clone()];
        let v = [t.grid_value(i), t.grid_value(j)];
        let noises = [t.noise_draws[2 * p], t.noise_draws[2 * p + 1]];
        observations.push(observe_pair(pair, v, &config.model, noises)?);
    }
    ChoiceDataset::new(observations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SenderAction {
    Off,
    NotOff,
}

/// The sender's move after deferral, with the realized utility and whether
/// the threshold model landed in the indiscernible branch (where the status
/// quo is retained and the ε penalty applies).
pub fn sender_response(t: &TypeRealization, model: &RationalityModel) -> (SenderAction, f64, bool) {
    let vx = t.value_x();
    let vo = t.value_o();
    match *model {
        RationalityModel::Exact => {
            if vx > vo {
                (SenderAction::NotOff, vx, false)
            } else {
                (SenderAction::Off, vo, false)
            }
        }
        RationalityModel::GaussianNoise { .. } => {
            let (nx, no) = t.response_noises();
            if vx + nx > vo + no {
                (SenderAction::NotOff, vx, false)
            } else {
                (SenderAction::Off, vo, false)
            }
        }
        RationalityModel::DiscernibilityThreshold { sigma, epsilon } => {
            if vx > vo + sigma {
                (SenderAction::NotOff, vx, false)
            } else if vo > vx + sigma {
                (SenderAction::Off, vo, false)
            } else {
                (SenderAction::Off, vo - epsilon, true)
            }
        }
    }
}

/// One full play of the game.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameTranscript {
    pub config_hash: String,
    pub seed: u64,
    pub true_value_x: f64,
    pub true_value_o: f64,
    pub message: ChoiceDataset,
    pub posterior: Option<crate::inference::BivariatePosterior>,
    pub payoffs: Option<crate::payoff::ExpectedPayoffs>,
    pub receiver_action: ReceiverAction,
    pub sender_action: Option<SenderAction>,
    pub indiscernible: bool,
    pub realized_utility: f64,
    pub aborted: Option<String>,
}

impl GameTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }

    /// Stable content hash of the serialized transcript.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Execute draw → message → fit → predict → payoffs → decide → respond.
///
/// Inference failures abort the play into a do-nothing outcome recorded on
/// the transcript; they are never dropped.
pub fn play(config: &GameConfig, rng: &mut ChaCha8Rng) -> Result<GameTranscript> {
    config.validate()?;
    let t = draw_type(config, rng)?;
    let message = honest_message_for_type(config, &t, rng)?;

    let mut transcript = GameTranscript {
        config_hash: config.hash(),
        seed: config.seed,
        true_value_x: t.value_x(),
        true_value_o: t.value_o(),
        message: message.clone(),
        posterior: None,
        payoffs: None,
        receiver_action: ReceiverAction::DoN,
        sender_action: None,
        indiscernible: false,
        realized_utility: t.value_o(),
        aborted: None,
    };

    let likelihood = LikelihoodSpec::for_model(&config.model);
    let outcome = (|| -> Result<()> {
        let posterior = fit(
            &message,
            &config.kernel,
            &config.mean,
            &likelihood,
            &config.method,
            rng,
        )?;
        let bp = predict_pair(&posterior, &config.kernel, &config.mean, &config.x, &config.o)?;
        transcript.posterior = Some(bp);
        let payoffs = match config.model {
            RationalityModel::DiscernibilityThreshold { sigma, epsilon } => {
                payoffs_threshold(&bp, sigma, epsilon)?
            }
            _ => {
                let sigma = config.model.sigma();
                if config.cost.gamma > 0.0 {
                    payoffs_with_cost(&bp, sigma, &config.cost)?
                } else {
                    payoffs_noise(&bp, sigma)?
                }
            }
        };
        transcript.payoffs = Some(payoffs);
        let action = match config.model {
            RationalityModel::DiscernibilityThreshold { .. } => {
                decide_threshold(&payoffs, config.criterion)?
            }
            _ => decide_scalar(&payoffs)?,
        };
        transcript.receiver_action = action;
        match action {
            ReceiverAction::Imm => transcript.realized_utility = t.value_x(),
            ReceiverAction::DoN => transcript.realized_utility = t.value_o(),
            ReceiverAction::Def => {
                let (b, realized, indiscernible) = sender_response(&t, &config.model);
                transcript.sender_action = Some(b);
                transcript.realized_utility = realized;
                transcript.indiscernible = indiscernible;
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        // Aborted plays count as do-nothing but stay flagged.
        transcript.receiver_action = ReceiverAction::DoN;
        transcript.sender_action = None;
        transcript.realized_utility = t.value_o();
        transcript.aborted = Some(e.to_string());
    }
    Ok(transcript)
}

// ---------------------------------------------------------------------------
// Honest-message verification by exhaustive enumeration
// ---------------------------------------------------------------------------

const ENUMERATION_CAP_PREFS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct MessageOutcome {
    /// Chosen pattern per observation (indices into each pair).
    pub pattern: Vec<Vec<usize>>,
    pub receiver_action: ReceiverAction,
    pub sender_value: f64,
    pub aborted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HonestMessageReport {
    pub outcomes: Vec<MessageOutcome>,
    pub honest_index: usize,
    pub honest_value: f64,
    pub max_value: f64,
    /// Margin below which this sender cannot rank the outcomes: σ + ε when a
    /// discernibility-threshold type lands inside its own indifference band
    /// (every message then ties from the sender's standpoint), 1e-9 otherwise.
    pub tolerance: f64,
    pub honest_attains_max: bool,
}

/// The sender's expected realized utility when the receiver takes `action`,
/// evaluated under the true type.
fn sender_expected_value(
    action: ReceiverAction,
    t: &TypeRealization,
    model: &RationalityModel,
) -> f64 {
    let vx = t.value_x();
    let vo = t.value_o();
    match action {
        ReceiverAction::Imm => vx,
        ReceiverAction::DoN => vo,
        ReceiverAction::Def => match *model {
            RationalityModel::Exact => vx.max(vo),
            RationalityModel::GaussianNoise { sigma } => {
                // Closed-form over the two response noises.
                let p = crate::gauss::ncdf((vx - vo) / (sigma * std::f64::consts::SQRT_2));
                p * vx + (1.0 - p) * vo
            }
            RationalityModel::DiscernibilityThreshold { sigma, epsilon } => {
                if vx > vo + sigma {
                    vx
                } else if vo > vx + sigma {
                    vo
                } else {
                    vo - epsilon
                }
            }
        },
    }
}

/// Enumerate every message over the honest message's pairs and check that
/// the honest one attains the maximal sender value under the receiver's
/// induced best response.
pub fn verify_honest_message(config: &GameConfig) -> Result<HonestMessageReport> {
    config.validate()?;
    if config.n_prefs > ENUMERATION_CAP_PREFS {
        let arity = match config.model {
            RationalityModel::DiscernibilityThreshold { .. } => 3u64,
            _ => 2u64,
        };
        return Err(Error::MessageSpaceTooLarge {
            size: arity.pow(config.n_prefs as u32),
            cap: arity.pow(ENUMERATION_CAP_PREFS as u32),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let t = draw_type(config, &mut rng)?;
    let honest = honest_message_for_type(config, &t, &mut rng)?;

    let patterns: Vec<Vec<usize>> = match config.model {
        RationalityModel::DiscernibilityThreshold { .. } => {
            vec![vec![0], vec![1], vec![0, 1]]
        }
        _ => vec![vec![0], vec![1]],
    };
    let n = honest.len();
    let honest_pattern: Vec<Vec<usize>> = honest
        .observations()
        .iter()
        .map(|o| o.chosen().to_vec())
        .collect();

    let likelihood = LikelihoodSpec::for_model(&config.model);
    let mut outcomes = Vec::new();
    let mut honest_index = usize::MAX;
    let total = patterns.len().pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut pattern = Vec::with_capacity(n);
        for _ in 0..n {
            pattern.push(patterns[c % patterns.len()].clone());
            c /= patterns.len();
        }
        let observations: Result<Vec<_>> = honest
            .observations()
            .iter()
            .zip(&pattern)
            .map(|(obs, chosen)| {
                crate::choice::ChoiceObservation::new(obs.choice_set().to_vec(), chosen.clone())
            })
            .collect();
        let message = ChoiceDataset::new(observations?)?;
        if pattern == honest_pattern {
            honest_index = outcomes.len();
        }

        let mut fit_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let result = fit(
            &message,
            &config.kernel,
            &config.mean,
            &likelihood,
            &config.method,
            &mut fit_rng,
        )
        .and_then(|post| {
            predict_pair(&post, &config.kernel, &config.mean, &config.x, &config.o)
        })
        .and_then(|bp| match config.model {
            RationalityModel::DiscernibilityThreshold { sigma, epsilon } => {
                let p = payoffs_threshold(&bp, sigma, epsilon)?;
                decide_threshold(&p, config.criterion)
            }
            _ => {
                let sigma = config.model.sigma();
                let p = if config.cost.gamma > 0.0 {
                    payoffs_with_cost(&bp, sigma, &config.cost)?
                } else {
                    payoffs_noise(&bp, sigma)?
                };
                decide_scalar(&p)
            }
        });
        let (action, aborted) = match result {
            Ok(a) => (a, false),
            Err(_) => (ReceiverAction::DoN, true),
        };
        outcomes.push(MessageOutcome {
            pattern,
            receiver_action: action,
            sender_value: sender_expected_value(action, &t, &config.model),
            aborted,
        });
    }
    if honest_index == usize::MAX {
        return Err(Error::IllPosed(
            "honest pattern missing from the enumeration".into(),
        ));
    }
    let honest_value = outcomes[honest_index].sender_value;
    let max_value = outcomes
        .iter()
        .map(|o| o.sender_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let tolerance = match config.model {
        RationalityModel::DiscernibilityThreshold { sigma, epsilon }
            if (t.value_x() - t.value_o()).abs() <= sigma =>
        {
            sigma + epsilon
        }
        _ => 1e-9,
    };
    Ok(HonestMessageReport {
        honest_index,
        honest_value,
        max_value,
        tolerance,
        honest_attains_max: honest_value >= max_value - tolerance,
        outcomes,
    })
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::RationalityModel;
    use rand::SeedableRng;

    fn base_config() -> GameConfig {
        GameConfig {
            grid: (0..9).map(|i| Act::scalar(1.0 + i as f64)).collect(),
            x: Act::scalar(6.0),
            o: Act::scalar(3.0),
            kernel: Kernel::squared_exponential(1.0, 1.5).unwrap(),
            mean: MeanFunction::default(),
            model: RationalityModel::gaussian_noise(1.0).unwrap(),
            n_prefs: 10,
            method: InferenceMethod::Laplace,
            cost: CostParams::free(),
            criterion: DominanceCriterion::PessimisticA,
            seed: 17,
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = base_config();
        assert!(cfg.validate().is_ok());
        cfg.x = cfg.o.clone();
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.x = Act::scalar(42.0);
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.model = RationalityModel::discernibility_threshold(0.5, 0.2).unwrap();
        cfg.cost = CostParams::new(0.3, 0).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn draw_type_deterministic_and_degenerate() {
        let cfg = base_config();
        let t1 = draw_type(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let t2 = draw_type(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(t1.utility_values, t2.utility_values);
        assert_eq!(t1.noise_draws, t2.noise_draws);

        let mut dirac = base_config();
        dirac.kernel = Kernel::squared_exponential(0.0, 1.0).unwrap();
        dirac.mean = MeanFunction::constant(0.4).unwrap();
        let t = draw_type(&dirac, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert!(t.utility_values.iter().all(|&v| v == 0.4));
    }

    #[test]
    fn draw_type_marginal_variance() {
        let mut cfg = base_config();
        cfg.kernel = Kernel::squared_exponential(1.7, 2.0).unwrap();
        cfg.n_prefs = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let t = draw_type(&cfg, &mut rng).unwrap();
            let v = t.grid_value(0);
            acc += v;
            acc2 += v * v;
        }
        let var = acc2 / n as f64 - (acc / n as f64).powi(2);
        assert!((var - 1.7).abs() / 1.7 < 0.05, "var = {var}");
    }

    #[test]
    fn sender_response_branches() {
        let cfg = base_config();
        let mut t = draw_type(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        t.utility_values[t.x_index] = 1.0;
        t.utility_values[t.o_index] = 0.0;
        let (a, realized, ind) = sender_response(&t, &RationalityModel::Exact);
        assert_eq!(a, SenderAction::NotOff);
        assert_eq!(realized, 1.0);
        assert!(!ind);

        let thr = RationalityModel::discernibility_threshold(2.0, 0.5).unwrap();
        let (a, realized, ind) = sender_response(&t, &thr);
        assert_eq!(a, SenderAction::Off);
        assert_eq!(realized, 0.0 - 0.5);
        assert!(ind);
    }

    #[test]
    fn sender_response_noise_margin() {
        let cfg = base_config();
        let mut wins = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20_000 {
            let mut t = draw_type(&cfg, &mut rng).unwrap();
            t.utility_values[t.x_index] = 10.0;
            t.utility_values[t.o_index] = 0.0;
            let (a, ..) = sender_response(&t, &cfg.model);
            if a == SenderAction::NotOff {
                wins += 1;
            }
        }
        assert!(wins as f64 / 20_000.0 >= 0.9999);
    }

    #[test]
    fn play_transcript_deterministic() {
        let cfg = base_config();
        let t1 = play(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
        let t2 = play(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
        assert_eq!(t1.to_json(), t2.to_json());
        assert_eq!(t1.hash(), t2.hash());
    }

    #[test]
    fn play_invariants() {
        let cfg = base_config();
        for seed in 0..20 {
            let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(tr.aborted.is_none(), "aborted: {:?}", tr.aborted);
            assert_eq!(
                tr.sender_action.is_some(),
                tr.receiver_action == ReceiverAction::Def
            );
            let expected = [tr.true_value_x, tr.true_value_o];
            assert!(expected.contains(&tr.realized_utility));
        }
    }

    #[test]
    fn map_never_defers() {
        let mut cfg = base_config();
        cfg.method = InferenceMethod::Map;
        for seed in 0..30 {
            let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_ne!(tr.receiver_action, ReceiverAction::Def);
        }
    }

    #[test]
    fn near_rational_uncertain_always_defers() {
        let mut cfg = base_config();
        cfg.model = RationalityModel::gaussian_noise(1e-12).unwrap();
        cfg.method = InferenceMethod::Laplace;
        cfg.n_prefs = 6;
        for seed in 0..10 {
            let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(tr.aborted.is_none(), "aborted: {:?}", tr.aborted);
            assert_eq!(tr.receiver_action, ReceiverAction::Def);
        }
    }

    #[test]
    fn threshold_games_play_end_to_end() {
        let mut cfg = base_config();
        cfg.model = RationalityModel::discernibility_threshold(0.5, 0.2).unwrap();
        cfg.n_prefs = 8;
        for method in [
            InferenceMethod::Laplace,
            InferenceMethod::ep_default(),
            InferenceMethod::Sampling {
                n_samples: 2_000,
                burn_in: 200,
            },
        ] {
            cfg.method = method;
            for seed in 0..10 {
                let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                assert!(
                    tr.aborted.is_none(),
                    "{} seed {seed} aborted: {:?}",
                    method.label(),
                    tr.aborted
                );
                if tr.indiscernible {
                    assert_eq!(tr.realized_utility, tr.true_value_o - 0.2);
                } else {
                    assert!(
                        [tr.true_value_x, tr.true_value_o].contains(&tr.realized_utility)
                    );
                }
                let payoffs = tr.payoffs.unwrap();
                assert!(payoffs.def_value.set().is_ok());
            }
        }
    }

    #[test]
    fn aborted_inference_is_flagged_as_do_nothing() {
        let mut cfg = base_config();
        cfg.method = InferenceMethod::Ep {
            damping: 0.05,
            tol: 1e-15,
            max_sweeps: 1,
        };
        let tr = play(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
        assert!(tr.aborted.is_some());
        assert_eq!(tr.receiver_action, ReceiverAction::DoN);
        assert_eq!(tr.realized_utility, tr.true_value_o);
        assert!(tr.sender_action.is_none());
    }

    #[test]
    fn degenerate_type_makes_messages_tie() {
        // Dirac prior: every utility value equals the prior mean, so a
        // threshold sender sits inside its own indifference band and every
        // enumerated message is as good as the honest one.
        let mut cfg = base_config();
        cfg.grid = vec![Act::scalar(3.0), Act::scalar(6.0)];
        cfg.x = Act::scalar(6.0);
        cfg.o = Act::scalar(3.0);
        cfg.kernel = Kernel::squared_exponential(0.0, 1.0).unwrap();
        cfg.mean = MeanFunction::constant(0.3).unwrap();
        cfg.model = RationalityModel::discernibility_threshold(0.5, 0.1).unwrap();
        cfg.n_prefs = 1;
        let report = verify_honest_message(&cfg).unwrap();
        assert!(report.honest_attains_max);
        let ties = report
            .outcomes
            .iter()
            .filter(|o| (o.sender_value - report.max_value).abs() < 1e-12)
            .count();
        assert!(ties >= 2, "expected several tied messages, got {ties}");
    }

    #[test]
    fn honest_enumeration_small_cases() {
        let mut cfg = base_config();
        cfg.grid = vec![Act::scalar(3.0), Act::scalar(6.0)];
        cfg.x = Act::scalar(6.0);
        cfg.o = Act::scalar(3.0);
        cfg.model = RationalityModel::Exact;
        cfg.n_prefs = 1;
        let report = verify_honest_message(&cfg).unwrap();
        assert_eq!(report.outcomes.len(), 2);
        assert!(report.honest_attains_max);

        cfg.model = RationalityModel::discernibility_threshold(0.5, 0.1).unwrap();
        cfg.n_prefs = 2;
        let report = verify_honest_message(&cfg).unwrap();
        assert_eq!(report.outcomes.len(), 9);
        assert!(report.honest_attains_max);

        cfg.n_prefs = 5;
        assert!(verify_honest_message(&cfg).is_err());
    }
}
