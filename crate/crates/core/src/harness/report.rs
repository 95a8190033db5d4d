use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{config, io_err, Error, Result};
use crate::executor::Outcome;

use super::config::Config;
use super::experiment::{Cell, CellRecord, OutputKind, Variant};

pub const RECORD_HEADER: &str = "seed,planner,B0,K,lambda,outcome,energy_wh,margin_wh,time_s,steps,max_turn_deg";

/// The persisted part of a mission record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub cell: Cell,
    pub seed: u64,
    pub outcome: Outcome,
    pub energy_wh: f64,
    pub margin_wh: f64,
    pub time_s: f64,
    pub steps: usize,
    pub max_turn_deg: f64,
}

impl From<&CellRecord> for RecordRow {
    fn from(r: &CellRecord) -> Self {
        let m = &r.record;
        Self {
            cell: r.cell,
            seed: m.seed,
            outcome: m.outcome,
            energy_wh: m.energy_wh,
            margin_wh: m.margin_wh,
            time_s: m.time_s,
            steps: m.steps,
            max_turn_deg: m.max_turn_deg,
        }
    }
}

/// Raw rows as CSV; floats use the shortest round-trip form so that
/// re-aggregation from the file is exact.
pub fn format_records(rows: &[RecordRow], with_variant: bool) -> String {
    let mut out = String::new();
    if with_variant {
        out.push_str("variant,");
    }
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in rows {
        if with_variant {
            out.push_str(r.cell.variant.as_str());
            out.push(',');
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.cell.planner,
            r.cell.b0,
            r.cell.k,
            r.cell.lambda,
            r.outcome,
            r.energy_wh,
            r.margin_wh,
            r.time_s,
            r.steps,
            r.max_turn_deg
        ));
    }
    out
}

#[derive(Deserialize)]
struct RawRow {
    variant: Option<String>,
    seed: u64,
    planner: String,
    #[serde(rename = "B0")]
    b0: f64,
    #[serde(rename = "K")]
    k: usize,
    lambda: f64,
    outcome: String,
    energy_wh: f64,
    margin_wh: f64,
    time_s: f64,
    steps: usize,
    max_turn_deg: f64,
}

pub fn parse_records<R: Read>(input: R) -> Result<Vec<RecordRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        let raw: RawRow = row?;
        let line = i + 2;
        let bad = |msg: String| Error::Parse { line, msg };
        let variant = match raw.variant.as_deref() {
            None => Variant::Full,
            Some(v) => v.parse().map_err(|_| bad(format!("unknown variant `{v}`")))?,
        };
        out.push(RecordRow {
            cell: Cell {
                variant,
                planner: raw.planner.parse().map_err(|_| bad(format!("unknown planner `{}`", raw.planner)))?,
                b0: raw.b0,
                k: raw.k,
                lambda: raw.lambda,
            },
            seed: raw.seed,
            outcome: Outcome::parse(&raw.outcome).ok_or_else(|| bad(format!("unknown outcome `{}`", raw.outcome)))?,
            energy_wh: raw.energy_wh,
            margin_wh: raw.margin_wh,
            time_s: raw.time_s,
            steps: raw.steps,
            max_turn_deg: raw.max_turn_deg,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub cell: Cell,
    pub trials: usize,
    pub rounds: usize,
    /// Percent of missions per outcome, over round frequencies.
    pub outcomes: BTreeMap<Outcome, Stat>,
    pub energy: Stat,
    pub margin: Stat,
    pub time: Stat,
    pub max_turn: Stat,
}

impl AggregateRow {
    pub fn pct(&self, o: Outcome) -> f64 {
        self.outcomes[&o].mean
    }
}

/// Folds raw rows into one row per cell. Seeds are grouped into rounds of
/// `round_size` consecutive trials; statistics run over round values.
pub fn aggregate(rows: &[RecordRow], seed_base: u64, round_size: usize) -> Vec<AggregateRow> {
    let mut cells: Vec<(Cell, BTreeMap<u64, Vec<&RecordRow>>)> = Vec::new();
    for r in rows {
        let round = (r.seed - seed_base) / round_size as u64;
        let slot = match cells.iter().position(|(c, _)| c.cmp_key(&r.cell).is_eq()) {
            Some(i) => i,
            None => {
                cells.push((r.cell, BTreeMap::new()));
                cells.len() - 1
            }
        };
        cells[slot].1.entry(round).or_default().push(r);
    }
    cells.sort_by(|a, b| a.0.cmp_key(&b.0));
    cells
        .into_iter()
        .map(|(cell, rounds)| {
            let mut freq: BTreeMap<Outcome, Vec<f64>> = Outcome::ALL.iter().map(|&o| (o, Vec::new())).collect();
            let (mut energy, mut margin, mut time, mut turn) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            let mut trials = 0;
            for members in rounds.values() {
                let n = members.len() as f64;
                trials += members.len();
                for (o, f) in freq.iter_mut() {
                    f.push(100.0 * members.iter().filter(|r| r.outcome == *o).count() as f64 / n);
                }
                let mean = |f: fn(&RecordRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / n;
                energy.push(mean(|r| r.energy_wh));
                margin.push(mean(|r| r.margin_wh));
                time.push(mean(|r| r.time_s));
                turn.push(mean(|r| r.max_turn_deg));
            }
            AggregateRow {
                cell,
                trials,
                rounds: rounds.len(),
                outcomes: freq.into_iter().map(|(o, f)| (o, Stat::of(&f))).collect(),
                energy: Stat::of(&energy),
                margin: Stat::of(&margin),
                time: Stat::of(&time),
                max_turn: Stat::of(&turn),
            }
        })
        .collect()
}

pub const AGGREGATE_HEADER: &str = "variant,planner,B0,K,lambda,trials,rounds,\
suc_mean,suc_std,del_mean,del_std,fail_mean,fail_std,abrt_mean,abrt_std,\
energy_wh_mean,energy_wh_std,margin_wh_mean,margin_wh_std,time_s_mean,time_s_std,\
max_turn_deg_mean,max_turn_deg_std";

pub fn format_aggregate(rows: &[AggregateRow]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for r in rows {
        let c = &r.cell;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            c.variant, c.planner, c.b0, c.k, c.lambda, r.trials, r.rounds
        ));
        let stats = Outcome::ALL
            .iter()
            .map(|o| r.outcomes[o])
            .chain([r.energy, r.margin, r.time, r.max_turn]);
        for s in stats {
            out.push_str(&format!(",{:.4},{:.4}", s.mean, s.std));
        }
        out.push('\n');
    }
    out
}

/// One `lambda,planner,suc,abrt,fail` table per budget and class count.
pub fn format_sweep(rows: &[AggregateRow]) -> Vec<(String, String)> {
    let mut tables: Vec<((f64, usize), Vec<&AggregateRow>)> = Vec::new();
    for r in rows {
        let key = (r.cell.b0, r.cell.k);
        match tables.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => tables.push((key, vec![r])),
        }
    }
    tables
        .into_iter()
        .map(|((b0, k), mut members)| {
            members.sort_by(|a, b| a.cell.lambda.total_cmp(&b.cell.lambda).then(a.cell.planner.cmp(&b.cell.planner)));
            let mut text = String::from("lambda,planner,suc,abrt,fail\n");
            for r in members {
                text.push_str(&format!(
                    "{},{},{:.4},{:.4},{:.4}\n",
                    r.cell.lambda,
                    r.cell.planner,
                    r.pct(Outcome::Suc),
                    r.pct(Outcome::Abrt),
                    r.pct(Outcome::Fail)
                ));
            }
            (format!("sweep_B{b0}_K{k}.csv"), text)
        })
        .collect()
}

pub(crate) fn manifest(cfg: &Config, kind: OutputKind, files: &[String]) -> String {
    let value = serde_json::json!({
        "kind": match kind {
            OutputKind::Run => "run",
            OutputKind::Sweep => "sweep",
            OutputKind::Ablation => "ablation",
        },
        "seed_base": cfg.experiment.seed_base,
        "round_size": cfg.experiment.round_size,
        "trials": cfg.experiment.trials,
        "planners": cfg.experiment.planners.iter().map(|p| p.as_str()).collect::<Vec<_>>(),
        "files": files,
        "config": cfg.to_toml(),
    });
    let mut text = serde_json::to_string_pretty(&value).expect("manifest serializes");
    text.push('\n');
    text
}

/// Regenerates every derived table in `dir` from its raw record files.
/// Returns the files written.
pub fn report(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: serde_json::Value = serde_json::from_str(&text)?;
    let (Some(seed_base), Some(round_size)) = (m["seed_base"].as_u64(), m["round_size"].as_u64()) else {
        return config("manifest lacks seed_base or round_size");
    };
    let mut written = Vec::new();
    for kind in [OutputKind::Run, OutputKind::Sweep, OutputKind::Ablation] {
        let raw = dir.join(kind.records_file());
        if !raw.exists() {
            continue;
        }
        let file = std::fs::File::open(&raw).map_err(io_err(&raw))?;
        let rows = parse_records(file)?;
        let agg = aggregate(&rows, seed_base, round_size as usize);
        let outputs = match kind {
            OutputKind::Run => vec![("aggregate.csv".to_string(), format_aggregate(&agg))],
            OutputKind::Ablation => vec![("ablation.csv".to_string(), format_aggregate(&agg))],
            OutputKind::Sweep => format_sweep(&agg),
        };
        for (name, body) in outputs {
            let p = dir.join(&name);
            std::fs::write(&p, body).map_err(io_err(&p))?;
            written.push(name);
        }
    }
    if written.is_empty() {
        return config(format!("no raw record files in {}", dir.display()));
    }
    Ok(written)
}
