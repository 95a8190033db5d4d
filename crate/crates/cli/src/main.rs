use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use windroute::energy::format_speed_curve;
use windroute::fleet::{format_assignments, format_fleet_log, generate_customers, read_customers, run_fleet};
use windroute::graph::{generate_er, ErArea};
use windroute::harness::{
    ablate, lambda_sweep, make_instance, report, run_experiment, speed_curve, speed_curve_params, write_outputs,
    Config, OutputKind, Variant,
};
use windroute::planner::PlannerKind;

#[derive(Parser)]
#[command(name = "windroute", version, about = "Energy-aware UAV routing under time-varying wind")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the number of trials per cell.
    #[arg(long)]
    trials: Option<usize>,
}

impl ConfigArg {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => Config::default(),
        };
        if let Some(t) = self.trials {
            cfg.experiment.trials = t;
            cfg.experiment.round_size = cfg.experiment.round_size.min(t);
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample an ER waypoint graph and write it as JSON.
    GenerateGraph {
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 0.08)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5000.0)]
        x_max: f64,
        #[arg(long, default_value_t = 5000.0)]
        y_max: f64,
        #[arg(long, default_value_t = 0.0)]
        z_min: f64,
        #[arg(long, default_value_t = 30.0)]
        z_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the planner grid and write raw records and the aggregate table.
    Run {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the risk weight over a list of values.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Compare BER variants with components switched off.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Comma-separated variants; all when omitted.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        #[arg(long, default_value = "ablation")]
        out: PathBuf,
    },
    /// Energy per kilometre over an airspeed grid.
    SpeedCurve {
        #[arg(long, value_delimiter = ',', default_value = "0,8")]
        payloads: Vec<f64>,
        #[arg(long, default_value_t = 6.0)]
        min: f64,
        #[arg(long, default_value_t = 25.0)]
        max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild derived tables from the raw records in a results directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Simulate one truck-and-drones episode.
    Fleet {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default configuration.
    Config,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn listing(dir: &Path, files: &[String]) {
    for f in files {
        println!("{}", dir.join(f).display());
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenerateGraph {
            n,
            p,
            seed,
            x_max,
            y_max,
            z_min,
            z_max,
            out,
        } => {
            let area = ErArea {
                x_max,
                y_max,
                z_min,
                z_max,
            };
            let g = generate_er(n, p, area, seed)?;
            g.save(&out)?;
            println!("{} vertices, {} edges -> {}", g.vertex_count(), g.edges().len(), out.display());
        }
        Command::Run { cfg, out } => {
            let cfg = cfg.load()?;
            let records = run_experiment(&cfg)?;
            listing(&out, &write_outputs(&out, OutputKind::Run, &cfg, &records)?);
        }
        Command::Sweep { cfg, lambda, out } => {
            let cfg = cfg.load()?;
            if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                bail!("lambda values must be finite and non-negative");
            }
            let records = lambda_sweep(&cfg, &lambda)?;
            listing(&out, &write_outputs(&out, OutputKind::Sweep, &cfg, &records)?);
        }
        Command::Ablate { cfg, variants, out } => {
            let cfg = cfg.load()?;
            let variants = if variants.is_empty() {
                Variant::ALL.to_vec()
            } else {
                variants.iter().map(|v| v.parse()).collect::<windroute::Result<Vec<Variant>>>()?
            };
            let records = ablate(&cfg, &variants)?;
            listing(&out, &write_outputs(&out, OutputKind::Ablation, &cfg, &records)?);
        }
        Command::SpeedCurve {
            payloads,
            min,
            max,
            step,
            out,
        } => {
            if !(step > 0.0 && min > 0.0 && max >= min) {
                bail!("need 0 < min <= max and a positive step");
            }
            let n = ((max - min) / step + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| min + step * i as f64).collect();
            let text = format_speed_curve(&speed_curve(&speed_curve_params(), &payloads, &grid)?);
            match out {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Report { input } => {
            listing(&input, &report(&input)?);
        }
        Command::Fleet { cfg, seed, out } => {
            let cfg = cfg.load()?;
            let inst = make_instance(&cfg, seed, None)?;
            let scenario = inst.scenario(&cfg, cfg.experiment.ks[0])?;
            let customers = match &cfg.fleet.customers {
                Some(p) => read_customers(p)?,
                None => generate_customers(&inst.graph, &cfg.fleet, seed),
            };
            let planner = cfg.planner.with_planner(PlannerKind::Ber);
            let run = run_fleet(&scenario, &cfg.fleet, &customers, &planner, seed);
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write(&out.join("fleet_log.csv"), &format_fleet_log(&run.log))?;
            write(&out.join("assignments.csv"), &format_assignments(&run.assignments))?;
            let mut missions = String::from("drone,customer,launch_vertex,start_s,outcome,energy_wh\n");
            for m in &run.missions {
                missions.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    m.drone, m.customer, m.launch, m.start, m.record.outcome, m.record.energy_wh
                ));
            }
            write(&out.join("missions.csv"), &missions)?;
            println!(
                "{} missions, {} unserved, {} conflicts, makespan {:.1} s",
                run.missions.len(),
                run.unserved.len(),
                run.conflicts,
                run.makespan
            );
        }
        Command::Config => print!("{}", Config::default().to_toml()),
    }
    Ok(())
}
