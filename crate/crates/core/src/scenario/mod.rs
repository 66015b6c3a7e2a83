//! Scripted experiments: scenario files, runs and their artefacts.

mod report;
mod run;
mod script;

pub use report::{export_summary, ComparisonRow, ComparisonTable};
pub use run::{
    run_scenario, summarize_bins, BinSummary, GaitMeans, MetricMeans, RunArtifacts, RunOptions,
    RunSummary, SPEED_BIN_WIDTH, SUMMARY_FORMAT, SUMMARY_VERSION, TIMESERIES_SCHEMA,
};
pub use script::{
    CommandScript, ControllerSpec, Scenario, SelectorSpec, TerrainSpec, Waypoint,
};
