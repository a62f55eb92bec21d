use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use harvest_evt::dynamics::simulate_chain;
use harvest_evt::evt::{diagnostics, exceedances, fit_peaks_over_threshold, write_diagnostics};
use harvest_evt::pipeline::{effective_model, render_table, write_fit, RunConfig, RunReport};
use harvest_evt::series::{read_json, read_series, write_series, Manifest};
use harvest_evt::spectra::{member_seed, synthesize_series, wind_to_force};
use harvest_evt::{Error, GpdFit, ReturnLevelMap, Result, TimeSeries, Units};

#[derive(Parser)]
#[command(name = "harvest-evt", version, about = "Harvester-voltage extreme-value toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise one excitation realisation.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        member: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run host and harvester for one member, or for a force series given with --input.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        member: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a GPD above a percentile threshold of a series.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        percentile: f64,
        /// Units for a CSV without a manifest (m/s, N, m/s^2, V, m).
        #[arg(long)]
        units: Option<Units>,
        /// Fit magnitudes; defaults to true for everything but wind speed.
        #[arg(long)]
        rectify: Option<bool>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for density, probability and QQ plot data.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Map a return level from one fit to another.
    Map {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        level: f64,
    },
    /// Full ensemble pipeline.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ensemble: Option<usize>,
    },
    /// Render one or more run reports as a table.
    Report {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn manifest(cfg: &RunConfig, s: &TimeSeries, model: &str, params: serde_json::Value) -> Manifest {
    Manifest {
        units: s.units(),
        sample_rate_hz: s.sample_rate_hz(),
        seed: s.seed(),
        model: model.to_string(),
        params,
        config_hash: Some(cfg.hash()),
        trim_s: None,
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth {
            config,
            seed,
            member,
            out,
        } => {
            let cfg = load_config(&config, seed)?;
            let model = effective_model(&cfg)?;
            let s = synthesize_series(&model, &cfg.synthesis(member_seed(cfg.base_seed, member as u64)))?;
            create_dir(&out)?;
            let path = out.join(format!("{}.csv", model.name()));
            let params = serde_json::json!({ "spectrum": model, "member": member });
            write_series(&path, &s, &manifest(&cfg, &s, model.name(), params))?;
            println!("{}", path.display());
        }
        Command::Simulate {
            config,
            input,
            seed,
            member,
            out,
        } => {
            let cfg = load_config(&config, seed)?;
            let (force, source) = match input {
                Some(p) => (read_series::<f64>(&p, Some(Units::Newton))?, p.display().to_string()),
                None => {
                    let model = effective_model(&cfg)?;
                    let s = synthesize_series(&model, &cfg.synthesis(member_seed(cfg.base_seed, member as u64)))?;
                    let f = if model.is_wind() { wind_to_force(&s, &cfg.wind_load)? } else { s };
                    (f, model.name().to_string())
                }
            };
            let sim = simulate_chain(&force, &cfg.oscillator, &cfg.harvester, &cfg.integrator)?;
            create_dir(&out)?;
            let params = serde_json::json!({
                "source": source,
                "oscillator": cfg.oscillator,
                "harvester": cfg.harvester,
                "integrator": cfg.integrator,
            });
            let outputs = [
                ("force", &force),
                ("displacement", &sim.host.displacement),
                ("velocity", &sim.host.velocity),
                ("acceleration", &sim.host.acceleration),
                ("rel_displacement", &sim.harvester.rel_displacement),
                ("voltage", &sim.harvester.voltage),
            ];
            for (name, s) in outputs {
                let path = out.join(format!("{name}.csv"));
                write_series(&path, s, &manifest(&cfg, s, "simulate", params.clone()))?;
                println!("{}", path.display());
            }
        }
        Command::Fit {
            input,
            percentile,
            units,
            rectify,
            out,
            diagnostics: diag_dir,
        } => {
            let s = read_series::<f64>(&input, units)?;
            let rectify = rectify.unwrap_or(s.units() != Units::MetersPerSecond);
            let fit = fit_peaks_over_threshold(s.samples(), percentile, rectify, s.units())?;
            if fit.is_low_confidence() {
                log::warn!("only {} exceedances; treat the fit as low-confidence", fit.n_exceed);
            }
            if let Some(dir) = diag_dir {
                create_dir(&dir)?;
                let ys = exceedances(s.samples(), fit.threshold, rectify);
                write_diagnostics(&dir, "fit", &diagnostics(&fit, &ys)?)?;
            }
            if let Some(p) = out {
                write_fit(&p, &fit)?;
            }
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
        Command::Map { from, to, level } => {
            let a: GpdFit = read_json(&from)?;
            let b: GpdFit = read_json(&to)?;
            let z = ReturnLevelMap::new(a, b)?.map(level)?;
            println!("{z}");
        }
        Command::Run {
            config,
            seed,
            out,
            ensemble,
        } => {
            let mut cfg = load_config(&config, seed)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            if let Some(n) = ensemble {
                cfg.ensemble_size = n;
            }
            let report = harvest_evt::run_pipeline(&cfg)?;
            print!("{}", render_table(std::slice::from_ref(&report)));
        }
        Command::Report { inputs } => {
            let reports = inputs
                .iter()
                .map(|p| read_json::<RunReport>(p))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", render_table(&reports));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
