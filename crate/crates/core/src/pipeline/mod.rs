//! Batch experiment driver: cached feature extraction, training runs with
//! manifests, the feature-count sweep and its report.

mod cache;
mod config;
mod run;
mod sweep;

pub use cache::{calibrate_houses, describe_image, extract_houses, namespace, DescriptorRecord, ExtractReport, HouseFeatures};
pub use config::{Estimator, KernelKind, RunConfig};
pub use run::{
    evaluate_saved, train_eval, unix_now, write_outputs, Hyperparameters, RunManifest, RunOutcome, RunReport, Source,
    TrainedModel, MANIFEST_FILE, MODEL_FILE, REPORT_FILE,
};
pub use sweep::{
    aggregate, median, read_sweep, run_sweep, write_report, write_rows, SummaryRow, SweepRow, Trend, SUMMARY_FILE,
    SWEEP_FILE,
};
