use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use darkstate::config::ScenarioConfig;
use darkstate::presets;
use darkstate::run::{self, RunError};

/// Dissipative entangled-state preparation: scenario runs and parameter sweeps.
#[derive(Parser)]
#[command(name = "darkstate", version, after_help = "Output goes to the config's output.dir unless DARKSTATE_OUT_DIR is set.\nExit codes: 0 success, 1 invalid input, 2 numeric or I/O failure.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory and summary.
    Run {
        /// Config file, or the name of a bundled preset.
        config: String,
    },
    /// Evaluate the scenario's [sweep] grid in parallel.
    Sweep {
        config: String,
        /// Worker threads (all cores by default).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the bundled presets.
    Presets {
        /// Print the config of one preset instead.
        #[arg(long)]
        show: Option<String>,
    },
    /// Check a config without running it.
    Validate { config: String },
}

fn load(arg: &str) -> Result<ScenarioConfig, RunError> {
    let path = Path::new(arg);
    if path.exists() || arg.ends_with(".toml") {
        Ok(ScenarioConfig::from_path(path)?)
    } else {
        Ok(presets::load(arg)?)
    }
}

fn main_inner(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let (result, files) = run::run_scenario(&cfg)?;
            for e in &result.engines {
                let s = e.summary();
                let stat = s.stationarity_time.map_or("not reached".to_string(), |t| format!("{t}"));
                print!("{:<9} dim {:>4}  final F {:.6}  stationary from t = {stat}", e.kind.name(), s.dimension, s.final_fidelity);
                if let Some(ss) = &s.steady_state {
                    print!("  steady F {:.6}", ss.fidelity);
                }
                println!("  ({:.1} s)", s.wall_time_s);
            }
            if let Some(d) = result.max_fidelity_difference {
                println!("max |F_full - F_effective| = {d:.6}");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { config, threads } => {
            let cfg = load(&config)?;
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            let (result, files) = run::run_sweep(&cfg)?;
            for r in &result.records {
                let point: Vec<String> = result.axes.iter().zip(&r.point).map(|(a, v)| format!("{a}={v}")).collect();
                let value = r.value.map_or("-".to_string(), |v| format!("{v:.6}"));
                println!("{:<40} {value:>12}  {:?}", point.join(" "), r.status);
            }
            match result.optimum(true) {
                Ok((p, v)) => println!("best ({:?}): {p:?} -> {v:.6}", result.objective),
                Err(e) => println!("no optimum: {e}"),
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Presets { show } => match show {
            Some(name) => print!("{}", load_source(&name)?),
            None => {
                for p in presets::PRESETS {
                    let cfg = presets::load(p.name)?;
                    println!("{:<11} {:<28} {}", p.name, p.budget, cfg.description);
                }
                println!("{:<11} {:<28} {}", presets::NDIM_ENTRY.0, "", presets::NDIM_ENTRY.1);
            }
        },
        Command::Validate { config } => {
            let s = load(&config)?.validate()?;
            println!("ok: {} ({}, {} engine(s), sweep: {})", s.config.name, s.scheme.name, s.config.engines.len(), s.config.sweep.is_some());
        }
    }
    Ok(())
}

fn load_source(name: &str) -> Result<String, RunError> {
    match presets::find(name) {
        Some(p) => Ok(p.source.to_string()),
        None => Ok(presets::load(name)?.to_toml()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
