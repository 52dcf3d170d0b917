//! Command-line front end for the off-switch signalling game engine.
//!
//! Subcommands: `fit` (posterior summary from a choice dataset), `play` (one
//! game transcript), `study` (decision-frequency study), `sweep` (σ/γ
//! sweeps), and `demo` (butter-taste posterior curves). Every command is
//! deterministic given (config, seed, overrides). Exit codes: 0 success,
//! 2 input/configuration error, 3 numerical failure.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{ConfigError, Settings};
use offswitch_core::experiments::{
    run_frequency_study, run_risotto_demo, sweep, SweepParam,
};
use offswitch_core::game::play;
use offswitch_core::inference::{fit, predict_joint, LikelihoodSpec};
use offswitch_core::ChoiceDataset;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "offswitch", about = "Off-switch signalling game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; required with --strict for play and study.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for result files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for batch runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Refuse to fall back to the default seed.
    #[arg(long)]
    strict: bool,
    /// Trailing key=value overrides applied on top of the config file.
    #[arg(trailing_var_arg = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a posterior from a choice-dataset file and write its grid summary.
    Fit {
        /// Line-oriented dataset: `set: a1 a2 | chosen: ai`.
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Play one game and write the transcript record.
    Play {
        #[command(flatten)]
        common: Common,
    },
    /// Run the decision-frequency study and write frequency.csv.
    Study {
        /// Comma-separated method arms (map,laplace,ep,sampling).
        #[arg(long, default_value = "map,laplace,ep,sampling")]
        methods: String,
        /// Number of Monte Carlo runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Preferences per message.
        #[arg(long)]
        prefs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep σ or γ across a grid and write sweep.csv.
    Sweep {
        /// Which parameter to sweep.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = "map,laplace,ep,sampling")]
        methods: String,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        prefs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the butter-taste demo and write curves.csv.
    Demo {
        /// Number of preferences (8 golden, larger values extend them).
        #[arg(long, default_value_t = 8)]
        prefs: usize,
        /// Posterior approximation for the demo fit.
        #[arg(long, default_value = "laplace")]
        methods: String,
        #[command(flatten)]
        common: Common,
    },
}

enum CliError {
    Input(String),
    Numerical(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<offswitch_core::Error> for CliError {
    fn from(e: offswitch_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn resolve_seed(common: &Common, settings: &Settings, required: bool) -> Result<u64, CliError> {
    match common.seed.or(settings.seed) {
        Some(s) => Ok(s),
        None if common.strict && required => Err(CliError::Input(
            "strict mode requires an explicit --seed (or a seed config key)".into(),
        )),
        None => {
            eprintln!("offswitch: no seed given, defaulting to 0");
            Ok(0)
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(format!("cannot build thread pool: {e}")))
}

fn parse_methods(spec: &str) -> Vec<String> {
    spec.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn cmd_fit(dataset_path: &Path, common: &Common) -> Result<(), CliError> {
    let settings = Settings::load(common.config.as_deref(), &common.overrides)?;
    let seed = resolve_seed(common, &settings, false)?;
    let text = std::fs::read_to_string(dataset_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", dataset_path.display())))?;
    let dataset = ChoiceDataset::from_text(&text).map_err(|e| CliError::Input(e.to_string()))?;
    if dataset.is_empty() {
        eprintln!("offswitch: dataset is empty; the summary is the prior");
    }
    let model = settings.rationality_model()?;
    let method = settings.inference_method(&settings.method)?;
    let kernel = settings.kernel()?;
    let mean = settings.mean()?;
    let likelihood = LikelihoodSpec::for_model(&model);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let posterior = fit(&dataset, &kernel, &mean, &likelihood, &method, &mut rng)?;
    let grid = settings.grid()?;
    let (mu, cov) = predict_joint(&posterior, &kernel, &mean, &grid)?;

    let mut csv = String::from("x,mean,variance\n");
    for (i, act) in grid.iter().enumerate() {
        use std::fmt::Write as _;
        let coords: Vec<String> = act.coords().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},{},{}",
            coords.join(";"),
            mu[i],
            cov[(i, i)].max(0.0)
        );
    }
    let path = write_output(&common.out, "posterior.csv", &csv)?;
    println!(
        "{{\"command\":\"fit\",\"observations\":{},\"grid_points\":{},\"output\":\"{}\"}}",
        dataset.len(),
        grid.len(),
        path.display()
    );
    Ok(())
}

fn cmd_play(common: &Common) -> Result<(), CliError> {
    let settings = Settings::load(common.config.as_deref(), &common.overrides)?;
    let seed = resolve_seed(common, &settings, true)?;
    let game = settings.game_config(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transcript = play(&game, &mut rng)?;
    let mut record = transcript.to_json();
    record.push('\n');
    let path = write_output(&common.out, "transcript.jsonl", &record)?;
    println!(
        "{{\"command\":\"play\",\"receiver_action\":\"{}\",\"aborted\":{},\"output\":\"{}\"}}",
        transcript.receiver_action.label(),
        transcript.aborted.is_some(),
        path.display()
    );
    Ok(())
}

fn cmd_study(
    methods: &str,
    runs: Option<usize>,
    prefs: Option<usize>,
    common: &Common,
) -> Result<(), CliError> {
    let settings = Settings::load(common.config.as_deref(), &common.overrides)?;
    let seed = resolve_seed(common, &settings, true)?;
    let mut cfg = settings.study_config(
        seed,
        &parse_methods(methods),
        runs.unwrap_or(settings.runs),
    )?;
    if let Some(p) = prefs {
        cfg.n_prefs = p;
    }
    eprintln!(
        "offswitch: study over {} runs x {} methods (seed {seed})",
        cfg.n_runs,
        cfg.methods.len()
    );
    let pool = thread_pool(common.jobs)?;
    let table = pool.install(|| run_frequency_study(&cfg))?;
    let path = write_output(&common.out, "frequency.csv", &table.to_csv())?;
    for row in &table.rows {
        eprintln!(
            "offswitch: {} def={} imm={} don={} aborted={}",
            row.method, row.def_count, row.imm_count, row.don_count, row.aborted_count
        );
    }
    println!(
        "{{\"command\":\"study\",\"runs\":{},\"methods\":{},\"output\":\"{}\"}}",
        cfg.n_runs,
        cfg.methods.len(),
        path.display()
    );
    let aborted: usize = table.rows.iter().map(|r| r.aborted_count).sum();
    if aborted > 0 {
        // Partial results are on disk; the ABORTED rows mark them.
        return Err(CliError::Numerical(format!(
            "{aborted} runs aborted; partial results written to {}",
            path.display()
        )));
    }
    Ok(())
}

fn cmd_sweep(
    param: &str,
    grid_spec: &str,
    methods: &str,
    runs: Option<usize>,
    prefs: Option<usize>,
    common: &Common,
) -> Result<(), CliError> {
    let settings = Settings::load(common.config.as_deref(), &common.overrides)?;
    let seed = resolve_seed(common, &settings, true)?;
    let param = match param {
        "sigma" => SweepParam::Sigma,
        "gamma" => SweepParam::Gamma,
        other => {
            return Err(CliError::Input(format!(
                "param must be sigma|gamma, got `{other}`"
            )))
        }
    };
    let grid: Vec<f64> = grid_spec
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("grid value `{v}` is not a number")))
        })
        .collect::<Result<_, _>>()?;
    let mut cfg = settings.study_config(
        seed,
        &parse_methods(methods),
        runs.unwrap_or(settings.runs),
    )?;
    if let Some(p) = prefs {
        cfg.n_prefs = p;
    }
    let pool = thread_pool(common.jobs)?;
    let table = pool.install(|| sweep(param, &grid, &cfg))?;
    for note in &table.notes {
        eprintln!("offswitch: {note}");
    }
    let path = write_output(&common.out, "sweep.csv", &table.to_csv())?;
    println!(
        "{{\"command\":\"sweep\",\"param\":\"{}\",\"grid_points\":{},\"output\":\"{}\"}}",
        table.param.label(),
        grid.len(),
        path.display()
    );
    let aborted: usize = table.aborted_total;
    if aborted > 0 {
        return Err(CliError::Numerical(format!(
            "{aborted} runs aborted; partial results written to {}",
            path.display()
        )));
    }
    Ok(())
}

fn cmd_demo(prefs: usize, methods: &str, common: &Common) -> Result<(), CliError> {
    let settings = Settings::load(common.config.as_deref(), &common.overrides)?;
    let seed = resolve_seed(common, &settings, false)?;
    let labels = parse_methods(methods);
    let label = labels.first().map(String::as_str).unwrap_or("laplace");
    let method = settings.inference_method(label)?;
    let demo = run_risotto_demo(prefs, &method, seed)?;
    let path = write_output(&common.out, "curves.csv", &demo.to_csv())?;
    println!(
        "{{\"command\":\"demo\",\"prefs\":{},\"method\":\"{}\",\"output\":\"{}\"}}",
        demo.dataset.len(),
        label,
        path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit { dataset, common } => cmd_fit(dataset, common),
        Command::Play { common } => cmd_play(common),
        Command::Study {
            methods,
            runs,
            prefs,
            common,
        } => cmd_study(methods, *runs, *prefs, common),
        Command::Sweep {
            param,
            grid,
            methods,
            runs,
            prefs,
            common,
        } => cmd_sweep(param, grid, methods, *runs, *prefs, common),
        Command::Demo {
            prefs,
            methods,
            common,
        } => cmd_demo(*prefs, methods, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("offswitch: error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("offswitch: numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
