//! Flat key=value configuration with typed validation.
//!
//! Unknown keys are rejected; command-line overrides win over file values.

use std::collections::BTreeMap;
use std::path::Path;

use offswitch_core::choice::RationalityModel;
use offswitch_core::decision::DominanceCriterion;
use offswitch_core::experiments::StudyConfig;
use offswitch_core::game::GameConfig;
use offswitch_core::gauss::{Kernel, MeanFunction};
use offswitch_core::payoff::CostParams;
use offswitch_core::{Act, InferenceMethod};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

type Parsed = BTreeMap<String, String>;

const KNOWN_KEYS: &[&str] = &[
    "domain_min",
    "domain_max",
    "grid_points",
    "x",
    "o",
    "kernel_variance",
    "kernel_lengthscale",
    "mean_value",
    "model",
    "sigma",
    "epsilon",
    "n_prefs",
    "method",
    "gamma",
    "criterion",
    "seed",
    "runs",
    "lengthscale_min",
    "lengthscale_max",
    "variance_min",
    "variance_max",
    "ep_damping",
    "ep_tol",
    "ep_max_sweeps",
    "sampler_samples",
    "sampler_burnin",
];

/// Typed settings with documented defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub domain_min: f64,
    pub domain_max: f64,
    pub grid_points: usize,
    pub x: Option<Act>,
    pub o: Option<Act>,
    pub kernel_variance: f64,
    pub kernel_lengthscale: f64,
    pub mean_value: f64,
    pub model: String,
    pub sigma: f64,
    pub epsilon: f64,
    pub n_prefs: usize,
    pub method: String,
    pub gamma: f64,
    pub criterion: String,
    pub seed: Option<u64>,
    pub runs: usize,
    pub lengthscale_min: f64,
    pub lengthscale_max: f64,
    pub variance_min: f64,
    pub variance_max: f64,
    pub ep_damping: f64,
    pub ep_tol: f64,
    pub ep_max_sweeps: usize,
    pub sampler_samples: usize,
    pub sampler_burnin: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            domain_min: 1.0,
            domain_max: 9.0,
            grid_points: 20,
            x: None,
            o: None,
            kernel_variance: 1.0,
            kernel_lengthscale: 1.0,
            mean_value: 0.0,
            model: "noise".into(),
            sigma: 1.0,
            epsilon: 0.1,
            n_prefs: 30,
            method: "laplace".into(),
            gamma: 0.0,
            criterion: "a".into(),
            seed: None,
            runs: 200,
            lengthscale_min: 0.5,
            lengthscale_max: 3.0,
            variance_min: 0.5,
            variance_max: 2.0,
            ep_damping: 0.8,
            ep_tol: 1e-6,
            ep_max_sweeps: 200,
            sampler_samples: 10_000,
            sampler_burnin: 1_000,
        }
    }
}

fn parse_lines(text: &str) -> Result<Parsed, ConfigError> {
    let mut map = Parsed::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value", idx + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_override(arg: &str) -> Result<(String, String), ConfigError> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{arg}` is not key=value")))?;
    Ok((key.trim().to_string(), value.trim().to_string()))
}

impl Settings {
    /// Read the optional config file, then apply overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                parse_lines(&text)?
            }
            None => Parsed::new(),
        };
        for arg in overrides {
            let (k, v) = parse_override(arg)?;
            map.insert(k, v);
        }
        Settings::from_map(map)
    }

    fn from_map(map: Parsed) -> Result<Self, ConfigError> {
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError(format!("unknown configuration key `{key}`")));
            }
        }
        let mut s = Settings::default();
        let get_f64 = |map: &Parsed, key: &str| -> Result<Option<f64>, ConfigError> {
            map.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| ConfigError(format!("{key}: `{v}` is not a number")))
                })
                .transpose()
        };
        let get_usize = |map: &Parsed, key: &str| -> Result<Option<usize>, ConfigError> {
            map.get(key)
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| ConfigError(format!("{key}: `{v}` is not a count")))
                })
                .transpose()
        };
        let get_act = |map: &Parsed, key: &str| -> Result<Option<Act>, ConfigError> {
            map.get(key)
                .map(|v| {
                    let coords: Result<Vec<f64>, _> =
                        v.split(',').map(|c| c.trim().parse::<f64>()).collect();
                    coords
                        .map_err(|_| ConfigError(format!("{key}: `{v}` is not act coordinates")))
                        .and_then(|c| {
                            Act::new(c).map_err(|e| ConfigError(format!("{key}: {e}")))
                        })
                })
                .transpose()
        };

        if let Some(v) = get_f64(&map, "domain_min")? {
            s.domain_min = v;
        }
        if let Some(v) = get_f64(&map, "domain_max")? {
            s.domain_max = v;
        }
        if let Some(v) = get_usize(&map, "grid_points")? {
            s.grid_points = v;
        }
        s.x = get_act(&map, "x")?;
        s.o = get_act(&map, "o")?;
        if let Some(v) = get_f64(&map, "kernel_variance")? {
            s.kernel_variance = v;
        }
        if let Some(v) = get_f64(&map, "kernel_lengthscale")? {
            s.kernel_lengthscale = v;
        }
        if let Some(v) = get_f64(&map, "mean_value")? {
            s.mean_value = v;
        }
        if let Some(v) = map.get("model") {
            s.model = v.clone();
        }
        if let Some(v) = get_f64(&map, "sigma")? {
            s.sigma = v;
        }
        if let Some(v) = get_f64(&map, "epsilon")? {
            s.epsilon = v;
        }
        if let Some(v) = get_usize(&map, "n_prefs")? {
            s.n_prefs = v;
        }
        if let Some(v) = map.get("method") {
            s.method = v.clone();
        }
        if let Some(v) = get_f64(&map, "gamma")? {
            s.gamma = v;
        }
        if let Some(v) = map.get("criterion") {
            s.criterion = v.clone();
        }
        if let Some(v) = map.get("seed") {
            s.seed = Some(
                v.parse::<u64>()
                    .map_err(|_| ConfigError(format!("seed: `{v}` is not an integer")))?,
            );
        }
        if let Some(v) = get_usize(&map, "runs")? {
            s.runs = v;
        }
        if let Some(v) = get_f64(&map, "lengthscale_min")? {
            s.lengthscale_min = v;
        }
        if let Some(v) = get_f64(&map, "lengthscale_max")? {
            s.lengthscale_max = v;
        }
        if let Some(v) = get_f64(&map, "variance_min")? {
            s.variance_min = v;
        }
        if let Some(v) = get_f64(&map, "variance_max")? {
            s.variance_max = v;
        }
        if let Some(v) = get_f64(&map, "ep_damping")? {
            s.ep_damping = v;
        }
        if let Some(v) = get_f64(&map, "ep_tol")? {
            s.ep_tol = v;
        }
        if let Some(v) = get_usize(&map, "ep_max_sweeps")? {
            s.ep_max_sweeps = v;
        }
        if let Some(v) = get_usize(&map, "sampler_samples")? {
            s.sampler_samples = v;
        }
        if let Some(v) = get_usize(&map, "sampler_burnin")? {
            s.sampler_burnin = v;
        }
        Ok(s)
    }

    pub fn grid(&self) -> Result<Vec<Act>, ConfigError> {
        if self.grid_points < 2 || !(self.domain_max > self.domain_min) {
            return Err(ConfigError(
                "grid needs at least two points over a non-empty domain".into(),
            ));
        }
        Ok((0..self.grid_points)
            .map(|i| {
                Act::scalar(
                    self.domain_min
                        + (self.domain_max - self.domain_min) * i as f64
                            / (self.grid_points - 1) as f64,
                )
            })
            .collect())
    }

    pub fn rationality_model(&self) -> Result<RationalityModel, ConfigError> {
        match self.model.as_str() {
            "exact" => Ok(RationalityModel::Exact),
            // σ = 0 is the rational limit of the noise model.
            "noise" if self.sigma == 0.0 => Ok(RationalityModel::Exact),
            "noise" => RationalityModel::gaussian_noise(self.sigma)
                .map_err(|e| ConfigError(e.to_string())),
            "threshold" => RationalityModel::discernibility_threshold(self.sigma, self.epsilon)
                .map_err(|e| ConfigError(e.to_string())),
            other => Err(ConfigError(format!(
                "model must be exact|noise|threshold, got `{other}`"
            ))),
        }
    }

    pub fn inference_method(&self, label: &str) -> Result<InferenceMethod, ConfigError> {
        let method =
            InferenceMethod::from_label(label).map_err(|e| ConfigError(e.to_string()))?;
        Ok(match method {
            InferenceMethod::Ep { .. } => InferenceMethod::Ep {
                damping: self.ep_damping,
                tol: self.ep_tol,
                max_sweeps: self.ep_max_sweeps,
            },
            InferenceMethod::Sampling { .. } => InferenceMethod::Sampling {
                n_samples: self.sampler_samples,
                burn_in: self.sampler_burnin,
            },
            other => other,
        })
    }

    pub fn kernel(&self) -> Result<Kernel, ConfigError> {
        Kernel::squared_exponential(self.kernel_variance, self.kernel_lengthscale)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn mean(&self) -> Result<MeanFunction, ConfigError> {
        MeanFunction::constant(self.mean_value).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn dominance_criterion(&self) -> Result<DominanceCriterion, ConfigError> {
        match self.criterion.as_str() {
            "a" | "A" | "pessimistic" => Ok(DominanceCriterion::PessimisticA),
            "b" | "B" | "optimistic" => Ok(DominanceCriterion::OptimisticB),
            other => Err(ConfigError(format!(
                "criterion must be a|b, got `{other}`"
            ))),
        }
    }

    pub fn game_config(&self, seed: u64) -> Result<GameConfig, ConfigError> {
        let grid = self.grid()?;
        let x = self.x.clone().unwrap_or_else(|| grid[grid.len() - 2].clone());
        let o = self.o.clone().unwrap_or_else(|| grid[1].clone());
        Ok(GameConfig {
            grid,
            x,
            o,
            kernel: self.kernel()?,
            mean: self.mean()?,
            model: self.rationality_model()?,
            n_prefs: self.n_prefs,
            method: self.inference_method(&self.method)?,
            cost: CostParams::new(self.gamma, self.n_prefs)
                .map_err(|e| ConfigError(e.to_string()))?,
            criterion: self.dominance_criterion()?,
            seed,
        })
    }

    pub fn study_config(&self, seed: u64, methods: &[String], runs: usize) -> Result<StudyConfig, ConfigError> {
        let parsed: Result<Vec<InferenceMethod>, ConfigError> = methods
            .iter()
            .map(|m| self.inference_method(m))
            .collect();
        Ok(StudyConfig {
            n_runs: runs,
            n_prefs: self.n_prefs,
            sigma: self.sigma,
            gamma: self.gamma,
            methods: parsed?,
            lengthscale_range: (self.lengthscale_min, self.lengthscale_max),
            variance_range: (self.variance_min, self.variance_max),
            grid: self.grid()?,
            seed,
        })
    }
}
