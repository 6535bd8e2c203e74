//! Experiment harness: CSV ingestion, label noise, folds, grid search and
//! reports.

pub mod cv;
pub mod experiment;
pub mod io;

pub use cv::{flip_count, flip_labels, fold_pairs, kfold, stratified_split};
pub use experiment::{
    aggregate_table, grid_search, rows_to_csv, run_experiment, run_experiment_on, summary_path,
    train_model, write_report, AggregateRow, ExperimentSpec, GridOutcome, Grids, Hyper, Method,
    ModelFile, Report, ReportRow, TrainSettings, Trained, TrainedModel,
};
pub use io::{load_csv, manifest_check, parse_csv, parse_unlabeled, CsvOptions, RawData, MANIFEST};
