//! Evaluation: ink rasters, IoU, angular error, aggregation over runs and
//! report files.

pub mod metrics;
pub mod raster;
pub mod report;

pub use metrics::{aggregate_runs, angular_error, iou, mean_std, AngularError, MeanStd, Metrics, RunStats};
pub use raster::{rasterize, InkImage};
pub use report::{emit_report, read_runs_csv, summarize, ConditionSummary, Overlay, ReportFiles, RunRecord};
