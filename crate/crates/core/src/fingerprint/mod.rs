//! Congestion side channel: synthetic victim workloads, trace features and a
//! k-nearest-neighbor workload classifier.

mod dataset;
mod experiment;
mod features;
mod knn;
mod workload;

pub use dataset::{read_dataset_csv, write_dataset_csv, LabeledFeatures};
pub use experiment::{build_dataset, record_workload_trace, FingerprintData, FingerprintPlan, LabeledTrace};
pub use features::{autocorrelation, extract_features, summarize, windowed_features, FeatureVector, FEATURE_NAMES};
pub use knn::{classify, evaluate, train, Evaluation, KnnModel};
pub use workload::{default_profiles, generate_workload, WorkloadProfile};
