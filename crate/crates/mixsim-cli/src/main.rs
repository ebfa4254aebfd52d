//! Command-line entry point.
//!
//! ```text
//! mixsim --preset fig3b-4 [--trials N] [--seed S] [--out-dir DIR] ...
//! mixsim --config run.cfg [overrides ...]
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use mixsim_cli::config::{parse_config, parse_grid, Overrides, RunPlan};
use mixsim_cli::presets::{preset, PRESET_NAMES};
use mixsim_cli::runner::run_experiment;
use mixsim_cli::CliError;

const USAGE: &str = "\
mixsim - mixture transceiver Monte Carlo experiments

USAGE:
    mixsim --preset <name> [OPTIONS]
    mixsim --config <path> [OPTIONS]

OPTIONS:
    --preset <name>      named experiment (see list below)
    --config <path>      key = value config file
    --seed <u64>         master seed override
    --trials <u64>       trials per SNR point override
    --snr <lo:step:hi>   SNR grid override (dB, inclusive)
    --scheme <list>      comma list: mixture,mixture-sus,zf,mrt,single_group
    --theta-th <f>       grouping threshold override (exhaustive search)
    --rth <f>            target rate override [bits/channel use]
    --cmargin <f>        power-distribution margin override
    --out-dir <path>     output directory (default: out)
    --workers <n>        worker threads (default: MIXSIM_WORKERS or global)
    --help               print this text

PRESETS:
    fig2a fig2b fig3a fig3b-4 fig3b-8 fig4 fig5 fig9 fig10
";

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(path) => {
            println!("manifest written to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {}", msg);
            eprintln!();
            eprintln!("{}", USAGE);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}

fn run(args: Vec<String>) -> Result<PathBuf, CliError> {
    let mut preset_name: Option<String> = None;
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from("out");
    let mut overrides = Overrides::default();

    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let mut value = |flag: &str| {
            it.next()
                .ok_or_else(|| CliError::Config(format!("flag {} needs a value", flag)))
        };
        match arg.as_str() {
            "--help" | "-h" => {
                println!("{}", USAGE);
                std::process::exit(0);
            }
            "--preset" => preset_name = Some(value("--preset")?),
            "--config" => config_path = Some(PathBuf::from(value("--config")?)),
            "--seed" => {
                overrides.seed = Some(parse_u64("--seed", &value("--seed")?)?);
            }
            "--trials" => {
                overrides.trials = Some(parse_u64("--trials", &value("--trials")?)?);
            }
            "--snr" => {
                let v = value("--snr")?;
                overrides.snr_grid_db = Some(parse_grid(&v).map_err(CliError::Config)?);
            }
            "--scheme" => {
                let v = value("--scheme")?;
                overrides.schemes = Some(v.split(',').map(|s| s.trim().to_string()).collect());
            }
            "--theta-th" => {
                overrides.theta_th = Some(parse_f64("--theta-th", &value("--theta-th")?)?);
            }
            "--rth" => {
                overrides.r_th = Some(parse_f64("--rth", &value("--rth")?)?);
            }
            "--cmargin" => {
                overrides.c_margin = Some(parse_f64("--cmargin", &value("--cmargin")?)?);
            }
            "--out-dir" => out_dir = PathBuf::from(value("--out-dir")?),
            "--workers" => {
                overrides.workers = Some(parse_u64("--workers", &value("--workers")?)? as usize);
            }
            other => {
                return Err(CliError::Config(format!("unknown flag '{}'", other)));
            }
        }
    }

    if overrides.workers.is_none() {
        if let Ok(env) = std::env::var("MIXSIM_WORKERS") {
            overrides.workers = Some(
                env.parse::<usize>()
                    .map_err(|_| CliError::Config("MIXSIM_WORKERS must be an integer".into()))?,
            );
        }
    }

    let mut plan: RunPlan = match (preset_name, config_path) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("--preset and --config are mutually exclusive".into()))
        }
        (Some(name), None) => {
            if !PRESET_NAMES.contains(&name.as_str()) {
                return Err(CliError::Config(format!("unknown preset '{}'", name)));
            }
            preset(&name)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("run")
                .to_string();
            let spec = parse_config(&text, &stem)?;
            RunPlan { name: stem, subruns: vec![("main".into(), spec)] }
        }
        (None, None) => {
            return Err(CliError::Config("one of --preset or --config is required".into()))
        }
    };

    for (_, spec) in &mut plan.subruns {
        overrides.apply(spec)?;
        spec.experiment
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    let manifest = run_experiment(&plan, &out_dir)?;
    Ok(manifest.manifest_path)
}

fn parse_u64(flag: &str, v: &str) -> Result<u64, CliError> {
    v.parse::<u64>()
        .map_err(|_| CliError::Config(format!("flag {} expects an integer, got '{}'", flag, v)))
}

fn parse_f64(flag: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .map_err(|_| CliError::Config(format!("flag {} expects a number, got '{}'", flag, v)))
}
