//! Input conversion, reports, grid exports and the prior comparison table.

mod convert;
mod csv_input;
mod format;
mod grid;
mod report;
mod table2;

pub use convert::parse_ratio_ci;
pub use csv_input::{load_studies_csv, read_studies_csv, EffectScale, StudyRow, CSV_HEADER};
pub use format::{fmt_sig, round_sig, DEFAULT_DIGITS};
pub use grid::{emit_density_grid, write_grid, GridSource};
pub use report::{
    run_map_report, run_map_report_with, AnalysisReport, Inputs, Interval, MapSummary,
    MaybeFinite, MonteCarloSummary, ReportOptions, ScaledValue, ShrinkageInterval,
    ShrinkageSummary, StudyRecord,
};
pub use table2::{
    common_median_comparison, render_tsv, table2_command, PriorComparisonRow, QUANTILE_LEVELS,
    TABLE2_HEADER,
};
