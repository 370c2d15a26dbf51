//! Metrics, synthetic datasets and experiment drivers.

pub mod datasets;
pub mod experiment;
pub mod metrics;

pub use datasets::{blobs, load_csv_dataset, multitag, two_moons, BlobSpec, Dataset, MultitagSpec};
pub use experiment::{
    run_experiment, run_on_dataset, DatasetConfig, ExperimentConfig, ExperimentReport, GraphConfig, GraphSummary,
    Method, Protocol, RunRecord, SummaryRow,
};
pub use metrics::{argmax, argmax_error, precision_recall_f1, top_indices, top_t_set_error};
