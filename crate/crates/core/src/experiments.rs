//! Monte Carlo studies, the butter-taste demo, the payoff oracle, and
//! parameter sweeps.
//!
//! The frequency study samples a latent taste from the prior, generates one
//! noisy message, lets every posterior approximation decide on the same type
//! and message, and tallies the decisions. The demo fits the eight golden
//! butter preferences (optionally extended to thirty) and exports posterior
//! curves. The oracle estimates the deferral integrands by plain Monte Carlo
//! and is the independent check for every closed-form payoff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fmt::Write as _;

use crate::choice::{honest_message, Act, ChoiceDataset, ChoiceObservation, RationalityModel};
use crate::decision::{decide_scalar, DominanceCriterion, ReceiverAction};
use crate::error::{Error, Result};
use crate::game::{draw_type, honest_message_for_type, GameConfig};
use crate::gauss::{sample_from_cov, Kernel, MeanFunction};
use crate::inference::{
    fit, predict_joint, predict_pair, BivariatePosterior, InferenceMethod, LikelihoodSpec,
};
use crate::payoff::{payoffs_noise, payoffs_with_cost, CostParams};

// ---------------------------------------------------------------------------
// Demo ground truth
// ---------------------------------------------------------------------------

/// Double-bump taste over butter amounts in [1, 9]: a sharp optimum near 6.8,
/// a broad secondary mode near 3.3, and a mild rise toward 1. Consistent with
/// all eight golden preferences below.
pub fn reference_taste(act: &Act) -> f64 {
    let b = act.coords()[0];
    1.7 * (-(b - 6.8f64).powi(2) / (2.0 * 0.35f64.powi(2))).exp()
        + 0.9 * (-(b - 3.3f64).powi(2) / (2.0 * 0.8f64.powi(2))).exp()
        + 0.25 * (-(b - 1.0f64).powi(2) / (2.0 * 0.6f64.powi(2))).exp()
}

/// The eight golden butter preferences.
pub fn golden_risotto_pairs() -> ChoiceDataset {
    let pairs = [
        (6.5, 3.5),
        (7.0, 5.0),
        (6.5, 5.5),
        (3.5, 8.5),
        (1.0, 9.0),
        (7.0, 1.5),
        (4.5, 7.5),
        (3.5, 4.0),
    ];
    ChoiceDataset::new(
        pairs
            .iter()
            .map(|&(w, l)| ChoiceObservation::pair(Act::scalar(w), Act::scalar(l)).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Evenly spaced butter grid over [1, 9].
pub fn butter_grid(n: usize) -> Vec<Act> {
    (0..n)
        .map(|i| Act::scalar(1.0 + 8.0 * i as f64 / (n - 1) as f64))
        .collect()
}

// ---------------------------------------------------------------------------
// Frequency study
// ---------------------------------------------------------------------------

/// Configuration of the decision-frequency study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n_runs: usize,
    pub n_prefs: usize,
    /// Sender noise scale; zero selects the exact (rational) mechanism.
    pub sigma: f64,
    /// Per-unit message cost; zero is cheap talk.
    pub gamma: f64,
    pub methods: Vec<InferenceMethod>,
    pub lengthscale_range: (f64, f64),
    pub variance_range: (f64, f64),
    pub grid: Vec<Act>,
    pub seed: u64,
}

impl StudyConfig {
    /// Desk-scale defaults: 200 runs of 30 noisy preferences at σ = 1 with
    /// all four posterior approximations.
    pub fn new(seed: u64) -> Self {
        StudyConfig {
            n_runs: 200,
            n_prefs: 30,
            sigma: 1.0,
            gamma: 0.0,
            methods: vec![
                InferenceMethod::Map,
                InferenceMethod::Laplace,
                InferenceMethod::ep_default(),
                InferenceMethod::sampling_default(),
            ],
            lengthscale_range: (0.5, 3.0),
            variance_range: (0.5, 2.0),
            grid: butter_grid(20),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 || self.n_prefs == 0 {
            return Err(Error::Config("n_runs and n_prefs must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for m in &self.methods {
            m.validate()?;
        }
        if self.grid.len() < 2 {
            return Err(Error::Config("grid needs at least two acts".into()));
        }
        for (lo, hi) in [self.lengthscale_range, self.variance_range] {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::Config("hyperparameter ranges must be positive".into()));
            }
        }
        if self.sigma < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config("sigma and gamma must be non-negative".into()));
        }
        Ok(())
    }

    fn model(&self) -> Result<RationalityModel> {
        if self.sigma > 0.0 {
            RationalityModel::gaussian_noise(self.sigma)
        } else {
            Ok(RationalityModel::Exact)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunOutcome {
    Action(ReceiverAction),
    Aborted,
}

/// Decision counts for one method arm.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodCounts {
    pub method: String,
    pub def_count: usize,
    pub imm_count: usize,
    pub don_count: usize,
    pub aborted_count: usize,
}

impl MethodCounts {
    pub fn total(&self) -> usize {
        self.def_count + self.imm_count + self.don_count + self.aborted_count
    }

    pub fn fraction(&self, action: ReceiverAction) -> f64 {
        let c = match action {
            ReceiverAction::Def => self.def_count,
            ReceiverAction::Imm => self.imm_count,
            ReceiverAction::DoN => self.don_count,
        };
        c as f64 / self.total() as f64
    }

    pub fn aborted_fraction(&self) -> f64 {
        self.aborted_count as f64 / self.total() as f64
    }
}

/// Per-method decision tallies over a study.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub n_runs: usize,
    pub rows: Vec<MethodCounts>,
}

impl FrequencyTable {
    pub fn method(&self, label: &str) -> Option<&MethodCounts> {
        self.rows.iter().find(|r| r.method == label)
    }

    /// `method,action,count,fraction` with a fixed action order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,action,count,fraction\n");
        for row in &self.rows {
            let entries = [
                ("DEF", row.def_count),
                ("IMM", row.imm_count),
                ("DON", row.don_count),
                ("ABORTED", row.aborted_count),
            ];
            for (action, count) in entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    row.method,
                    action,
                    count,
                    count as f64 / row.total() as f64
                );
            }
        }
        out
    }
}

/// One shared (type, message) evaluated by one method arm.
fn run_one_method(
    cfg: &StudyConfig,
    game: &GameConfig,
    message: &ChoiceDataset,
    bp_rng_seed: (u64, u64),
    method: &InferenceMethod,
) -> RunOutcome {
    let likelihood = LikelihoodSpec::for_model(&game.model);
    let mut rng = ChaCha8Rng::seed_from_u64(bp_rng_seed.0);
    rng.set_stream(bp_rng_seed.1);
    let decision = fit(message, &game.kernel, &game.mean, &likelihood, method, &mut rng)
        .and_then(|post| predict_pair(&post, &game.kernel, &game.mean, &game.x, &game.o))
        .and_then(|bp| {
            let p = if cfg.gamma > 0.0 {
                payoffs_with_cost(
                    &bp,
                    cfg.sigma,
                    &CostParams::new(cfg.gamma, message.len())?,
                )?
            } else {
                payoffs_noise(&bp, cfg.sigma)?
            };
            decide_scalar(&p)
        });
    match decision {
        Ok(a) => RunOutcome::Action(a),
        Err(_) => RunOutcome::Aborted,
    }
}

fn run_once(cfg: &StudyConfig, run: usize) -> Result<Vec<RunOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2 * run as u64);

    let lengthscale = rng.random_range(cfg.lengthscale_range.0..=cfg.lengthscale_range.1);
    let variance = rng.random_range(cfg.variance_range.0..=cfg.variance_range.1);
    let kernel = Kernel::squared_exponential(variance, lengthscale)?;

    let n = cfg.grid.len();
    let xi = rng.random_range(0..n);
    let mut oi = rng.random_range(0..n - 1);
    if oi >= xi {
        oi += 1;
    }

    let game = GameConfig {
        grid: cfg.grid.clone(),
        x: cfg.grid[xi].clone(),
        o: cfg.grid[oi].clone(),
        kernel,
        mean: MeanFunction::default(),
        model: cfg.model()?,
        n_prefs: cfg.n_prefs,
        method: InferenceMethod::Laplace,
        cost: CostParams::new(cfg.gamma, cfg.n_prefs)?,
        criterion: DominanceCriterion::PessimisticA,
        seed: cfg.seed,
    };
    let t = draw_type(&game, &mut rng)?;
    let message = honest_message_for_type(&game, &t, &mut rng)?;

    Ok(cfg
        .methods
        .iter()
        .map(|m| run_one_method(cfg, &game, &message, (cfg.seed, 2 * run as u64 + 1), m))
        .collect())
}

/// Run the decision-frequency study: each run draws hyperparameters, a type,
/// and one message, then every method arm decides on that same evidence.
/// Deterministic per seed; runs execute in parallel.
pub fn run_frequency_study(cfg: &StudyConfig) -> Result<FrequencyTable> {
    cfg.validate()?;
    let per_run: Vec<Vec<RunOutcome>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|r| run_once(cfg, r))
        .collect::<Result<_>>()?;

    let rows = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let mut counts = MethodCounts {
                method: m.label().to_string(),
                def_count: 0,
                imm_count: 0,
                don_count: 0,
                aborted_count: 0,
            };
            for run in &per_run {
                match run[mi] {
                    RunOutcome::Action(ReceiverAction::Def) => counts.def_count += 1,
                    RunOutcome::Action(ReceiverAction::Imm) => counts.imm_count += 1,
                    RunOutcome::Action(ReceiverAction::DoN) => counts.don_count += 1,
                    RunOutcome::Aborted => counts.aborted_count += 1,
                }
            }
            counts
        })
        .collect();
    Ok(FrequencyTable {
        n_runs: cfg.n_runs,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Risotto demo
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CurveRow {
    pub x: f64,
    pub mean: f64,
    pub half_width: f64,
    pub samples: [f64; 10],
}

#[derive(Debug, Clone)]
pub struct RisottoDemo {
    pub grid: Vec<Act>,
    pub dataset: ChoiceDataset,
    pub rows: Vec<CurveRow>,
}

impl RisottoDemo {
    /// `x,mean,half_width,sample_1..sample_10` (13 columns).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,mean,half_width");
        for i in 1..=10 {
            let _ = write!(out, ",sample_{i}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{},{}", row.x, row.mean, row.half_width);
            for s in row.samples {
                let _ = write!(out, ",{s}");
            }
            out.push('\n');
        }
        out
    }
}

/// Demo dataset: the eight golden preferences, extended with exact-choice
/// pairs sampled from the reference taste when more are requested.
pub fn risotto_dataset(n_prefs: usize, seed: u64) -> Result<ChoiceDataset> {
    let golden = golden_risotto_pairs();
    let mut observations: Vec<ChoiceObservation> = golden
        .observations()
        .iter()
        .take(n_prefs.min(8))
        .cloned()
        .collect();
    if n_prefs > 8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x5eed);
        let extra = honest_message(
            reference_taste,
            &RationalityModel::Exact,
            &butter_grid(33),
            n_prefs - 8,
            &mut rng,
        )?;
        observations.extend(extra.observations().iter().cloned());
    }
    ChoiceDataset::new(observations)
}

/// Fit the butter demo and export posterior curves over the grid: mean, 95%
/// band half-width, and ten joint posterior sample paths.
pub fn run_risotto_demo(n_prefs: usize, method: &InferenceMethod, seed: u64) -> Result<RisottoDemo> {
    let grid = butter_grid(33);
    let dataset = risotto_dataset(n_prefs, seed)?;
    let kernel = Kernel::squared_exponential(1.0, 1.0)?;
    let mean = MeanFunction::default();
    let likelihood = LikelihoodSpec::Indicator {
        surrogate_sigma: crate::inference::DEFAULT_SURROGATE_SIGMA,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xcafe);
    let posterior = fit(&dataset, &kernel, &mean, &likelihood, method, &mut rng)?;
    let (mu, cov) = predict_joint(&posterior, &kernel, &mean, &grid)?;

    let mut path_rng = ChaCha8Rng::seed_from_u64(seed);
    path_rng.set_stream(0xfade);
    let mut paths = Vec::with_capacity(10);
    for _ in 0..10 {
        paths.push(sample_from_cov(&mu, &cov, &mut path_rng)?);
    }

    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, act)| {
            let mut samples = [0.0; 10];
            for (k, p) in paths.iter().enumerate() {
                samples[k] = p[i];
            }
            CurveRow {
                x: act.coords()[0],
                mean: mu[i],
                half_width: 1.96 * cov[(i, i)].max(0.0).sqrt(),
                samples,
            }
        })
        .collect();
    Ok(RisottoDemo {
        grid,
        dataset,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo payoff oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum OracleMechanism {
    Noise { sigma: f64 },
    Threshold { sigma: f64, epsilon: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Plain Monte Carlo estimates of the deferral integrands, the independent
/// verifier for the closed-form payoffs.
#[derive(Debug, Clone)]
pub enum OracleEstimates {
    Noise {
        /// E[ν(x)·I{ν(x)+n(x) > ν(o)+n(o)}]
        building_block_x: OracleEstimate,
        def: OracleEstimate,
        imm: OracleEstimate,
        don: OracleEstimate,
    },
    Threshold {
        def_keep_x: OracleEstimate,
        def_keep_o: OracleEstimate,
        imm: OracleEstimate,
        don: OracleEstimate,
    },
}

struct Accumulator {
    sum: f64,
    sum_sq: f64,
    n: usize,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            sum: 0.0,
            sum_sq: 0.0,
            n: 0,
        }
    }

    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.n += 1;
    }

    fn estimate(&self, shift: f64) -> OracleEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        OracleEstimate {
            value: mean + shift,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Monte Carlo over the bivariate posterior and iid noises of the exact
/// deferral integrands; reports mean and standard error per quantity.
pub fn mc_payoff_oracle(
    bp: &BivariatePosterior,
    mechanism: OracleMechanism,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<OracleEstimates> {
    if n_draws < 10_000 {
        return Err(Error::InvalidParameter {
            name: "n_draws",
            reason: "oracle needs at least 10_000 draws".into(),
        });
    }
    let l11 = bp.k_xx.max(0.0).sqrt();
    let l21 = if l11 > 0.0 { bp.k_xo / l11 } else { 0.0 };
    let l22 = (bp.k_oo - l21 * l21).max(0.0).sqrt();
    let draw_values = |rng: &mut ChaCha8Rng| {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        (bp.mu_x + l11 * z1, bp.mu_o + l21 * z1 + l22 * z2)
    };

    match mechanism {
        OracleMechanism::Noise { sigma } => {
            if !(sigma >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "sigma",
                    reason: "must be non-negative".into(),
                });
            }
            let mut bb = Accumulator::new();
            let mut def = Accumulator::new();
            let mut imm = Accumulator::new();
            let mut don = Accumulator::new();
            for _ in 0..n_draws {
                let (vx, vo) = draw_values(rng);
                let nx = sigma * rng.sample::<f64, _>(StandardNormal);
                let no = sigma * rng.sample::<f64, _>(StandardNormal);
                let x_wins = vx + nx > vo + no;
                let o_wins = vo + no > vx + nx;
                let bb_draw = if x_wins { vx } else { 0.0 };
                bb.push(bb_draw);
                def.push(bb_draw + if o_wins { vo } else { 0.0 });
                imm.push(vx);
                don.push(vo);
            }
            Ok(OracleEstimates::Noise {
                building_block_x: bb.estimate(0.0),
                def: def.estimate(0.0),
                imm: imm.estimate(0.0),
                don: don.estimate(0.0),
            })
        }
        OracleMechanism::Threshold { sigma, epsilon } => {
            if !(sigma > 0.0 && epsilon > 0.0 && epsilon <= sigma) {
                return Err(Error::InvalidParameter {
                    name: "threshold",
                    reason: "needs sigma > 0 and epsilon in (0, sigma]".into(),
                });
            }
            let mut keep_x = Accumulator::new();
            let mut keep_o = Accumulator::new();
            let mut imm = Accumulator::new();
            let mut don = Accumulator::new();
            for _ in 0..n_draws {
                let (vx, vo) = draw_values(rng);
                let clear = if vx > vo + sigma {
                    vx
                } else if vo > vx + sigma {
                    vo
                } else {
                    f64::NAN
                };
                if clear.is_nan() {
                    keep_x.push(vx);
                    keep_o.push(vo);
                } else {
                    keep_x.push(clear);
                    keep_o.push(clear);
                }
                imm.push(vx);
                don.push(vo);
            }
            // The ε penalty enters each deferral candidate once, outside the
            // Monte Carlo average, matching the closed form.
            Ok(OracleEstimates::Threshold {
                def_keep_x: keep_x.estimate(-epsilon),
                def_keep_o: keep_o.estimate(-epsilon),
                imm: imm.estimate(0.0),
                don: don.estimate(0.0),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Sigma,
    Gamma,
}

impl SweepParam {
    pub fn label(&self) -> &'static str {
        match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param_value: f64,
    pub method: String,
    pub def_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Monotone-trend diagnostics per method.
    pub notes: Vec<String>,
    /// Aborted runs summed across the whole grid.
    pub aborted_total: usize,
}

impl SweepTable {
    /// `param_value,method,def_fraction`, grid-major then method order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param_value,method,def_fraction\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{}", row.param_value, row.method, row.def_fraction);
        }
        out
    }
}

/// Run the frequency study at each grid value of σ or γ and tabulate the
/// deferral fraction per method, with weak-monotonicity diagnostics.
pub fn sweep(param: SweepParam, grid: &[f64], base: &StudyConfig) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::Empty { what: "sweep grid" });
    }
    let mut rows = Vec::new();
    let mut aborted_total = 0;
    for &value in grid {
        let mut cfg = base.clone();
        match param {
            SweepParam::Sigma => cfg.sigma = value,
            SweepParam::Gamma => cfg.gamma = value,
        }
        let table = run_frequency_study(&cfg)?;
        for counts in &table.rows {
            aborted_total += counts.aborted_count;
            rows.push(SweepRow {
                param_value: value,
                method: counts.method.clone(),
                def_fraction: counts.fraction(ReceiverAction::Def),
            });
        }
    }
    let mut notes = Vec::new();
    for method in base.methods.iter().map(|m| m.label()) {
        let series: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.def_fraction)
            .collect();
        let monotone = series.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        notes.push(format!(
            "{}: deferral fraction {} across the {} grid",
            method,
            if monotone {
                "weakly decreasing"
            } else {
                "not monotone"
            },
            param.label(),
        ));
    }
    Ok(SweepTable {
        param,
        rows,
        notes,
        aborted_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::{payoffs_noise, payoffs_threshold};

    #[test]
    fn taste_respects_golden_pairs() {
        for obs in golden_risotto_pairs().observations() {
            let set = obs.choice_set();
            let w = &set[obs.chosen()[0]];
            let l = &set[1 - obs.chosen()[0]];
            assert!(
                reference_taste(w) > reference_taste(l),
                "taste violates {:?} over {:?}",
                w,
                l
            );
        }
    }

    #[test]
    fn oracle_deterministic_branch_has_zero_se() {
        let bp = BivariatePosterior::new(1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let OracleEstimates::Noise {
            building_block_x,
            def,
            ..
        } = mc_payoff_oracle(&bp, OracleMechanism::Noise { sigma: 0.0 }, 10_000, &mut rng).unwrap()
        else {
            panic!("wrong variant")
        };
        assert_eq!(building_block_x.value, 1.0);
        assert_eq!(building_block_x.std_error, 0.0);
        assert_eq!(def.value, 1.0);
        assert_eq!(def.std_error, 0.0);
    }

    #[test]
    fn oracle_matches_emax_identity() {
        let bp = BivariatePosterior::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let OracleEstimates::Noise { def, .. } =
            mc_payoff_oracle(&bp, OracleMechanism::Noise { sigma: 0.0 }, 400_000, &mut rng)
                .unwrap()
        else {
            panic!("wrong variant")
        };
        let target = 0.564_189_583_547_756_3;
        assert!(
            (def.value - target).abs() < 3.0 * def.std_error,
            "{} vs {target} (se {})",
            def.value,
            def.std_error
        );
    }

    #[test]
    fn oracle_se_scaling() {
        let bp = BivariatePosterior::new(0.2, -0.3, 0.9, 0.6, 0.2).unwrap();
        let mech = OracleMechanism::Noise { sigma: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let OracleEstimates::Noise { def: small, .. } =
            mc_payoff_oracle(&bp, mech, 10_000, &mut rng).unwrap()
        else {
            panic!()
        };
        let OracleEstimates::Noise { def: large, .. } =
            mc_payoff_oracle(&bp, mech, 1_000_000, &mut rng).unwrap()
        else {
            panic!()
        };
        let ratio = small.std_error / large.std_error;
        assert!((ratio - 10.0).abs() < 2.0, "ratio = {ratio}");
    }

    #[test]
    fn oracle_agrees_with_closed_forms_spot_check() {
        let bp = BivariatePosterior::new(0.8, 0.3, 1.2, 0.7, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = 0.5;
        let OracleEstimates::Noise { def, imm, don, .. } =
            mc_payoff_oracle(&bp, OracleMechanism::Noise { sigma }, 400_000, &mut rng).unwrap()
        else {
            panic!()
        };
        let closed = payoffs_noise(&bp, sigma).unwrap();
        assert!((def.value - closed.def_value.scalar().unwrap()).abs() < 3.0 * def.std_error);
        assert!((imm.value - closed.imm_value).abs() < 3.0 * imm.std_error);
        assert!((don.value - closed.don_value).abs() < 3.0 * don.std_error);

        let OracleEstimates::Threshold {
            def_keep_x,
            def_keep_o,
            ..
        } = mc_payoff_oracle(
            &bp,
            OracleMechanism::Threshold {
                sigma: 0.5,
                epsilon: 0.2,
            },
            400_000,
            &mut rng,
        )
        .unwrap()
        else {
            panic!()
        };
        let closed = payoffs_threshold(&bp, 0.5, 0.2).unwrap();
        let (kx, ko) = closed.def_value.set().unwrap();
        assert!(
            (def_keep_x.value - kx).abs() < 3.0 * def_keep_x.std_error,
            "keep_x {} vs {kx}",
            def_keep_x.value
        );
        assert!(
            (def_keep_o.value - ko).abs() < 3.0 * def_keep_o.std_error,
            "keep_o {} vs {ko}",
            def_keep_o.value
        );
    }

    #[test]
    fn study_is_deterministic_and_sums_to_one() {
        let mut cfg = StudyConfig::new(7);
        cfg.n_runs = 12;
        cfg.n_prefs = 8;
        cfg.methods = vec![InferenceMethod::Map, InferenceMethod::Laplace];
        cfg.grid = butter_grid(10);
        let a = run_frequency_study(&cfg).unwrap();
        let b = run_frequency_study(&cfg).unwrap();
        assert_eq!(a, b);
        for row in &a.rows {
            assert_eq!(row.total(), 12);
            let s = row.fraction(ReceiverAction::Def)
                + row.fraction(ReceiverAction::Imm)
                + row.fraction(ReceiverAction::DoN)
                + row.aborted_fraction();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(a.method("map").unwrap().def_count, 0);
    }

    #[test]
    fn uncertainty_arms_agree_on_clear_margins() {
        use crate::game::{draw_type, honest_message_for_type};
        let margin_floor = 0.05;
        let methods = [
            InferenceMethod::Laplace,
            InferenceMethod::ep_default(),
            InferenceMethod::Sampling {
                n_samples: 6_000,
                burn_in: 600,
            },
        ];
        let mut clear_runs = 0;
        for run in 0..30u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + run);
            let game = GameConfig {
                grid: butter_grid(12),
                x: Act::scalar(7.0),
                o: Act::scalar(3.0),
                kernel: Kernel::squared_exponential(1.2, 1.5).unwrap(),
                mean: MeanFunction::default(),
                model: RationalityModel::gaussian_noise(1.0).unwrap(),
                n_prefs: 20,
                method: InferenceMethod::Laplace,
                cost: crate::payoff::CostParams::free(),
                criterion: DominanceCriterion::PessimisticA,
                seed: 500 + run,
            };
            let t = draw_type(&game, &mut rng).unwrap();
            let message = honest_message_for_type(&game, &t, &mut rng).unwrap();
            let lik = LikelihoodSpec::for_model(&game.model);
            let mut decisions = Vec::new();
            let mut margins = Vec::new();
            for m in &methods {
                let mut fit_rng = ChaCha8Rng::seed_from_u64(900 + run);
                let post = fit(&message, &game.kernel, &game.mean, &lik, m, &mut fit_rng).unwrap();
                let bp = predict_pair(&post, &game.kernel, &game.mean, &game.x, &game.o).unwrap();
                let p = payoffs_noise(&bp, 1.0).unwrap();
                margins.push(
                    p.def_value.scalar().unwrap() - p.imm_value.max(p.don_value),
                );
                decisions.push(decide_scalar(&p).unwrap());
            }
            if margins.iter().all(|m| m.abs() > margin_floor) {
                clear_runs += 1;
                assert!(
                    decisions.iter().all(|d| *d == decisions[0]),
                    "run {run}: {decisions:?} with margins {margins:?}"
                );
            }
        }
        assert!(clear_runs >= 10, "only {clear_runs} clear-margin runs");
    }

    #[test]
    fn sweep_gamma_endpoints_weakly_decreasing() {
        let mut cfg = StudyConfig::new(13);
        cfg.n_runs = 12;
        cfg.n_prefs = 6;
        cfg.methods = vec![InferenceMethod::Laplace];
        cfg.grid = butter_grid(8);
        let table = sweep(SweepParam::Gamma, &[0.0, 5.0], &cfg).unwrap();
        let free = table.rows[0].def_fraction;
        let costly = table.rows[1].def_fraction;
        assert!(costly <= free, "def fraction rose with cost: {free} -> {costly}");
        assert!(table.notes[0].contains("weakly decreasing"));
    }

    #[test]
    fn sweep_rational_column_always_defers() {
        let mut cfg = StudyConfig::new(14);
        cfg.n_runs = 10;
        cfg.n_prefs = 6;
        cfg.methods = vec![InferenceMethod::Laplace, InferenceMethod::ep_default()];
        cfg.grid = butter_grid(8);
        let table = sweep(SweepParam::Sigma, &[0.0], &cfg).unwrap();
        for row in &table.rows {
            assert_eq!(row.def_fraction, 1.0, "{} deferred {}", row.method, row.def_fraction);
        }
    }

    #[test]
    fn sweep_singleton_matches_study() {
        let mut cfg = StudyConfig::new(11);
        cfg.n_runs = 8;
        cfg.n_prefs = 6;
        cfg.methods = vec![InferenceMethod::Laplace];
        cfg.grid = butter_grid(8);
        let study = run_frequency_study(&cfg).unwrap();
        let table = sweep(SweepParam::Sigma, &[cfg.sigma], &cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(
            (table.rows[0].def_fraction
                - study.method("laplace").unwrap().fraction(ReceiverAction::Def))
            .abs()
                < 1e-15
        );
        assert_eq!(table.notes.len(), 1);
    }

    #[test]
    fn demo_prior_and_golden_fit() {
        let prior = run_risotto_demo(0, &InferenceMethod::Laplace, 3).unwrap();
        assert_eq!(prior.rows.len(), 33);
        for row in &prior.rows {
            assert!((row.mean - 0.0).abs() < 1e-12);
            assert!((row.half_width - 1.96).abs() < 1e-9);
        }

        let demo = run_risotto_demo(8, &InferenceMethod::Laplace, 3).unwrap();
        let posterior_at = |x: f64| {
            demo.rows
                .iter()
                .find(|r| (r.x - x).abs() < 1e-9)
                .unwrap()
                .mean
        };
        for obs in golden_risotto_pairs().observations() {
            let set = obs.choice_set();
            let w = set[obs.chosen()[0]].coords()[0];
            let l = set[1 - obs.chosen()[0]].coords()[0];
            assert!(
                posterior_at(w) > posterior_at(l),
                "posterior mean violates {w} over {l}"
            );
        }
    }

    #[test]
    fn demo_thirty_prefs_order_consistency() {
        let demo = run_risotto_demo(30, &InferenceMethod::Laplace, 3).unwrap();
        assert_eq!(demo.dataset.len(), 30);
        let posterior_at = |x: f64| {
            demo.rows
                .iter()
                .find(|r| (r.x - x).abs() < 1e-9)
                .unwrap()
                .mean
        };
        let mut consistent = 0;
        for obs in demo.dataset.observations() {
            let set = obs.choice_set();
            let w = set[obs.chosen()[0]].coords()[0];
            let l = set[1 - obs.chosen()[0]].coords()[0];
            if posterior_at(w) > posterior_at(l) {
                consistent += 1;
            }
        }
        assert!(consistent >= 29, "only {consistent}/30 pairs consistent");
    }
}
