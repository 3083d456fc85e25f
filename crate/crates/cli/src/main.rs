use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use d2dmac::fixture::{sec3_example, Instance, SEC3_EXAMPLE};
use d2dmac::golden::{named_stages, radius_csv, radius_table, run_golden, GOLDEN_NAMES};
use d2dmac::optimal::{build_milp, default_stage_count, export_lp, solve_exact, OptimalLimits};
use d2dmac::radio::{BeamModel, SinrCheck};
use d2dmac::scenario::{results_csv, run_sweep, summarize, summary_csv, ScenarioConfig};

#[derive(Parser)]
#[command(name = "d2dmac", version, about = "Joint access/backhaul scheduling for mmWave small cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol x load x WN-count x seed sweep and write CSV results.
    Sweep {
        /// Scenario TOML; built-in defaults when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Per-cell CSV (stdout when neither this nor run.output is set).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-group means across seeds.
        #[arg(short, long)]
        summary: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        loads: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        wn_counts: Option<Vec<usize>>,
        #[arg(long)]
        threads: Option<usize>,
        /// Simulated time per cell in seconds.
        #[arg(long)]
        sim_seconds: Option<f64>,
    },
    /// Run named golden checks; exits nonzero if any fails.
    Golden {
        /// sec3-example, fdmac-e-example, radius-sweep or all.
        #[arg(default_value = "all")]
        name: String,
    },
    /// Export an instance as CPLEX LP text or as an instance fixture.
    Export {
        #[arg(short, long, value_enum, default_value_t = ExportFormat::Lp)]
        format: ExportFormat,
        /// Fixture path, or `sec3-example` for the bundled one.
        #[arg(short, long, default_value = "sec3-example")]
        instance: String,
        /// Stage count K of the model.
        #[arg(long)]
        stages: Option<usize>,
        /// Add SINR rows using cone beams with this half angle in degrees.
        #[arg(long)]
        sinr_half_angle_deg: Option<f64>,
        /// Scenario TOML providing radio parameters for SINR rows.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Interference radius against interferer count, as CSV.
    Radius {
        /// Scenario TOML providing radio parameters.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "5,8,10")]
        ms_db: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        max_interferers: u32,
        #[arg(long, default_value_t = 2.0)]
        link_len: f64,
        #[arg(long)]
        path_loss_exponent: Option<f64>,
        #[arg(long)]
        tx_power_mw: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve an instance exactly and print the optimum with its schedule.
    Optimal {
        /// Fixture path, or `sec3-example` for the bundled one.
        #[arg(short, long)]
        instance: String,
        /// Give up after this many seconds (0 for no limit).
        #[arg(long, default_value_t = 30.0)]
        time_budget: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Lp,
    Fixture,
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

fn load_instance(spec: &str) -> Result<Instance> {
    if spec == "sec3-example" {
        return Ok(sec3_example());
    }
    Instance::load(spec).with_context(|| format!("loading instance {spec}"))
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep { config, output, summary, seeds, loads, wn_counts, threads, sim_seconds } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seeds {
                cfg.run.seeds = s;
            }
            if let Some(l) = loads {
                cfg.traffic.loads = l;
            }
            if let Some(w) = wn_counts {
                cfg.run.wn_counts = w;
            }
            if let Some(t) = threads {
                cfg.run.threads = t;
            }
            if let Some(s) = sim_seconds {
                cfg.frame.sim_seconds = s;
            }
            cfg.validate()?;
            let results = run_sweep(&cfg)?;
            let output = output.or_else(|| cfg.run.output.clone().map(PathBuf::from));
            let summary = summary.or_else(|| cfg.run.summary.clone().map(PathBuf::from));
            emit(&results_csv(&cfg, &results)?, output.as_deref())?;
            if let Some(path) = summary {
                emit(&summary_csv(&cfg, &summarize(&results))?, Some(&path))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Golden { name } => {
            let names: Vec<&str> = if name == "all" { GOLDEN_NAMES.to_vec() } else { vec![name.as_str()] };
            let mut ok = true;
            for n in names {
                let report = run_golden(n)?;
                print!("{report}");
                ok &= report.passed();
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Export { format, instance, stages, sinr_half_angle_deg, config, output } => {
            let text = match format {
                ExportFormat::Fixture if instance == "sec3-example" => SEC3_EXAMPLE.to_string(),
                ExportFormat::Fixture => load_instance(&instance)?.to_toml()?,
                ExportFormat::Lp => {
                    let inst = load_instance(&instance)?;
                    let cfg = load_config(config.as_deref())?;
                    let check = sinr_half_angle_deg.map(|deg| SinrCheck {
                        params: cfg.radio.params(),
                        ms: cfg.radio.ms_table(),
                        model: BeamModel::Cone { half_angle_rad: deg.to_radians() },
                        positions: inst.deployment.positions(),
                    });
                    let k = stages.unwrap_or_else(|| default_stage_count(&inst.flows));
                    export_lp(&build_milp(&inst.name, &inst.flows, k, check.as_ref())?)
                }
            };
            emit(&text, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Radius { config, ms_db, max_interferers, link_len, path_loss_exponent, tx_power_mw, output } => {
            let cfg = load_config(config.as_deref())?;
            let mut radio = cfg.radio.clone();
            if let Some(g) = path_loss_exponent {
                radio.path_loss_exponent = g;
            }
            if let Some(p) = tx_power_mw {
                radio.tx_power_mw = p;
            }
            if link_len.is_nan() || link_len <= 0.0 {
                bail!("--link-len must be positive");
            }
            let rows = radius_table(&radio.params(), link_len, &ms_db, max_interferers);
            emit(&radius_csv(&rows), output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimal { instance, time_budget } => {
            let inst = load_instance(&instance)?;
            let limits = OptimalLimits {
                time_budget: (time_budget > 0.0).then(|| std::time::Duration::from_secs_f64(time_budget)),
                ..OptimalLimits::default()
            };
            let sol = solve_exact(&inst.flows, inst.node_count(), &d2dmac::radio::AlwaysPass, &limits)?;
            println!("optimum: {}", sol.total_slots);
            println!("proven: {}", sol.optimal);
            let choices: Vec<String> = sol.choices.iter().map(|(id, c)| format!("{id}:{c:?}")).collect();
            println!("paths: {}", choices.join(" "));
            println!("stages: {}", named_stages(&sol.schedule, &inst));
            print!("{}", sol.schedule.dump());
            Ok(ExitCode::SUCCESS)
        }
    }
}
