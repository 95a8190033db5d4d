//! Monte-Carlo experiments over generated instances: outcome tables,
//! risk sweeps, ablations and speed curves.

mod config;
mod experiment;
mod report;

pub use config::{
    benchmark_energy, fixed_graph, make_instance, Config, ExperimentConfig, GraphConfig, Instance, WindConfig,
    WindKind,
};
pub use experiment::{
    ablate, curves_by_case, lambda_sweep, run_cells, run_experiment, speed_curve, speed_curve_params, write_outputs,
    Cell, CellRecord, OutputKind, Variant,
};
pub use report::{
    aggregate, format_aggregate, format_records, format_sweep, parse_records, report, AggregateRow, RecordRow, Stat,
    AGGREGATE_HEADER, RECORD_HEADER,
};
