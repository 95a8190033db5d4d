use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::energy::{energy_per_distance_curve, DragModel, EnergyParams, SpeedCurveCase, SpeedCurvePoint};
use crate::error::{io_err, Error, Result};
use crate::executor::{run_mission, Mission, MissionRecord, Prepared};
use crate::fleet::{generate_customers, read_customers, run_fleet, Clustering};
use crate::planner::{PlannerConfig, PlannerKind};
use crate::wind::WindVector;

use super::config::{fixed_graph, make_instance, Config};
use super::report::{aggregate, format_aggregate, format_records, format_sweep, manifest};

const CUSTOMER_SALT: u64 = 0x4355_5354;

/// A BER configuration compared in the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Full,
    NoGate,
    NoWind,
    NoRisk,
    NoOpt,
    /// Fleet runs with K-Means launch stops.
    KMeans,
    /// Fleet runs launching from truck stops only.
    NoCluster,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Full,
        Variant::NoGate,
        Variant::NoWind,
        Variant::NoRisk,
        Variant::NoOpt,
        Variant::KMeans,
        Variant::NoCluster,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoGate => "no_gate",
            Variant::NoWind => "no_wind",
            Variant::NoRisk => "no_risk",
            Variant::NoOpt => "no_opt",
            Variant::KMeans => "kmeans",
            Variant::NoCluster => "no_cluster",
        }
    }

    pub fn is_fleet(self) -> bool {
        matches!(self, Variant::KMeans | Variant::NoCluster)
    }

    fn apply(self, cfg: &mut PlannerConfig) {
        let a = &mut cfg.ablations;
        match self {
            Variant::NoGate => a.budget_gate = false,
            Variant::NoWind => a.wind_costs = false,
            Variant::NoRisk => a.risk_term = false,
            Variant::NoOpt => a.traj_opt = false,
            _ => {}
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

/// One experiment cell; every cell runs the same trial seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub variant: Variant,
    pub planner: PlannerKind,
    pub b0: f64,
    pub k: usize,
    pub lambda: f64,
}

impl Cell {
    pub(crate) fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        self.variant
            .cmp(&other.variant)
            .then(self.planner.cmp(&other.planner))
            .then(self.b0.total_cmp(&other.b0))
            .then(self.k.cmp(&other.k))
            .then(self.lambda.total_cmp(&other.lambda))
    }

    fn planner_config(&self, base: &PlannerConfig) -> PlannerConfig {
        let mut cfg = base.with_planner(self.planner);
        cfg.lambda = self.lambda;
        self.variant.apply(&mut cfg);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub cell: Cell,
    pub record: MissionRecord,
}

fn grid(cfg: &Config, variants: &[Variant], planners: &[PlannerKind], lambdas: &[f64]) -> Vec<Cell> {
    let ex = &cfg.experiment;
    let mut cells = Vec::new();
    for &variant in variants {
        for &planner in planners {
            for &b0 in &ex.budgets {
                for &k in &ex.ks {
                    for &lambda in lambdas {
                        cells.push(Cell {
                            variant,
                            planner,
                            b0,
                            k,
                            lambda,
                        });
                    }
                }
            }
        }
    }
    cells
}

fn run_trial(cfg: &Config, cells: &[Cell], seed: u64, fixed: Option<&crate::graph::TimeGraph>) -> Result<Vec<CellRecord>> {
    let trial_err = |e: Error| Error::Trial {
        seed,
        msg: e.to_string(),
    };
    let inst = make_instance(cfg, seed, fixed).map_err(trial_err)?;
    let customers = match (&cfg.fleet.customers, cells.iter().any(|c| c.variant.is_fleet())) {
        (_, false) => Vec::new(),
        (Some(path), true) => read_customers(path).map_err(trial_err)?,
        (None, true) => generate_customers(&inst.graph, &cfg.fleet, seed ^ CUSTOMER_SALT),
    };
    let mut ks: Vec<usize> = cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut out = Vec::new();
    for k in ks {
        let scenario = inst.scenario(cfg, k).map_err(trial_err)?;
        let depot = scenario.graph.depot();
        let mut prepared = None;
        for cell in cells.iter().filter(|c| c.k == k) {
            let pcfg = cell.planner_config(&cfg.planner);
            if cell.variant.is_fleet() {
                let fleet = crate::fleet::FleetConfig {
                    clustering: if cell.variant == Variant::KMeans {
                        Clustering::KMeans
                    } else {
                        Clustering::None
                    },
                    battery: Some(cell.b0),
                    ..cfg.fleet.clone()
                };
                let run = run_fleet(&scenario, &fleet, &customers, &pcfg, seed);
                out.extend(run.missions.into_iter().map(|m| CellRecord {
                    cell: *cell,
                    record: MissionRecord { seed, ..m.record },
                }));
                continue;
            }
            // return prices depend only on the worst wind and the payload
            let prep = prepared.get_or_insert_with(|| Prepared::new(&scenario, depot, &pcfg, cfg.energy.payload));
            let mut mission = Mission::new(depot, inst.target, cell.b0);
            mission.payload = cfg.energy.payload;
            let record = run_mission(&scenario, prep, &mission, &pcfg, seed);
            out.push(CellRecord { cell: *cell, record });
        }
    }
    Ok(out)
}

/// Runs every cell on trials `seed_base .. seed_base + trials`, in parallel
/// over trials. Output is sorted by cell, then seed.
pub fn run_cells(cfg: &Config, cells: &[Cell]) -> Result<Vec<CellRecord>> {
    let fixed = fixed_graph(cfg)?;
    let ex = &cfg.experiment;
    let per_trial: Vec<Vec<CellRecord>> = (0..ex.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, cells, ex.seed_base + i, fixed.as_ref()))
        .collect::<Result<_>>()?;
    let mut all: Vec<CellRecord> = per_trial.into_iter().flatten().collect();
    all.sort_by(|a, b| a.cell.cmp_key(&b.cell).then(a.record.seed.cmp(&b.record.seed)));
    Ok(all)
}

/// Outcome table over planners × budgets × class counts × λ.
pub fn run_experiment(cfg: &Config) -> Result<Vec<CellRecord>> {
    let ex = &cfg.experiment;
    run_cells(cfg, &grid(cfg, &[Variant::Full], &ex.planners, &ex.lambdas))
}

/// Same grid as [`run_experiment`] over an explicit λ list.
pub fn lambda_sweep(cfg: &Config, lambdas: &[f64]) -> Result<Vec<CellRecord>> {
    run_cells(cfg, &grid(cfg, &[Variant::Full], &cfg.experiment.planners, lambdas))
}

/// BER under each ablation variant at the first configured λ.
pub fn ablate(cfg: &Config, variants: &[Variant]) -> Result<Vec<CellRecord>> {
    let lambda = cfg.experiment.lambdas[0];
    run_cells(cfg, &grid(cfg, variants, &[PlannerKind::Ber], &[lambda]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Run,
    Sweep,
    Ablation,
}

impl OutputKind {
    pub fn records_file(self) -> &'static str {
        match self {
            OutputKind::Run => "records.csv",
            OutputKind::Sweep => "sweep_records.csv",
            OutputKind::Ablation => "ablation_records.csv",
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Persists raw records first, then the derived tables and the manifest.
pub fn write_outputs(dir: &Path, kind: OutputKind, cfg: &Config, records: &[CellRecord]) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<_> = records.iter().map(super::report::RecordRow::from).collect();
    let with_variant = kind == OutputKind::Ablation;
    write(&dir.join(kind.records_file()), &format_records(&rows, with_variant))?;
    let ex = &cfg.experiment;
    let agg = aggregate(&rows, ex.seed_base, ex.round_size);
    let mut files = vec![kind.records_file().to_string()];
    match kind {
        OutputKind::Run => {
            write(&dir.join("aggregate.csv"), &format_aggregate(&agg))?;
            files.push("aggregate.csv".into());
        }
        OutputKind::Ablation => {
            write(&dir.join("ablation.csv"), &format_aggregate(&agg))?;
            files.push("ablation.csv".into());
        }
        OutputKind::Sweep => {
            for (name, text) in format_sweep(&agg) {
                write(&dir.join(&name), &text)?;
                files.push(name);
            }
        }
    }
    write(&dir.join("manifest.json"), &manifest(cfg, kind, &files))?;
    Ok(files)
}

/// Vehicle used for the airspeed sweep: parabolic drag with a heavier
/// avionics load so that each curve has an interior minimum.
pub fn speed_curve_params() -> EnergyParams {
    EnergyParams {
        mass_base: 5.0,
        payload: 0.0,
        g: 9.81,
        drag: DragModel::Parabolic {
            rho: 1.225,
            c_d: 1.0,
            area: 0.2,
        },
        avionics_power: 100.0,
        thrust_coeff: 6.0,
        battery_capacity: 100.0,
    }
}

/// Energy per kilometre for 5 m/s head and tail wind, calm, and a calm
/// 3° climb, for each payload. Case labels carry the payload.
pub fn speed_curve(params: &EnergyParams, payloads: &[f64], airspeeds: &[f64]) -> Result<Vec<SpeedCurvePoint>> {
    let level = Vector3::new(1.0, 0.0, 0.0);
    let climb_angle = 3f64.to_radians();
    let climb = Vector3::new(climb_angle.cos(), 0.0, climb_angle.sin());
    let mut out = Vec::new();
    for &m in payloads {
        let p = params.with_payload(m);
        let tag = |s: &str| format!("{s}_{m}kg");
        let level_cases = [
            SpeedCurveCase {
                label: tag("head"),
                wind: WindVector::new(5.0, std::f64::consts::PI),
            },
            SpeedCurveCase {
                label: tag("calm"),
                wind: WindVector::calm(),
            },
            SpeedCurveCase {
                label: tag("tail"),
                wind: WindVector::new(5.0, 0.0),
            },
        ];
        let climb_case = [SpeedCurveCase {
            label: tag("climb3"),
            wind: WindVector::calm(),
        }];
        out.extend(energy_per_distance_curve(&p, &level_cases, airspeeds, &level)?);
        out.extend(energy_per_distance_curve(&p, &climb_case, airspeeds, &climb)?);
    }
    Ok(out)
}

/// Curves grouped by case label, in grid order.
pub fn curves_by_case(points: &[SpeedCurvePoint]) -> BTreeMap<String, Vec<(f64, Option<f64>)>> {
    let mut out: BTreeMap<String, Vec<(f64, Option<f64>)>> = BTreeMap::new();
    for p in points {
        out.entry(p.case.clone()).or_default().push((p.airspeed, p.wh_per_km));
    }
    out
}
