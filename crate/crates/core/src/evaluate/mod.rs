//! Offline evaluation: brute-force gold standards, Precision@k, latency
//! statistics over an encoder × window grid, Pareto frontiers and CSV reports.

mod gold;
mod grid;
mod pareto;
mod report;
mod synth;

pub use gold::{brute_force_knn, precision_at_k, GoldStandard};
pub use grid::{
    build_encoder, gold_standards, measure_cell, run_grid, sample_queries, CellOutcome, EncoderSpec,
    EvalOptions, EvalQuery, EvalRecord, Grid, LatencyStat, LatencyStats,
};
pub use pareto::{pareto_frontier, ParetoPoint};
pub use report::{emit_report, read_records, render_precision_table, write_frontier, FRONTIER_FILE, RECORDS_FILE};
pub use synth::{generate, GeneratorConfig, COLORS};
