//! Data files, plot series and report documents.

mod dataset;
mod document;
mod plot;
mod read;
mod spec;

pub use dataset::{Dataset, GroupedDataset};
pub use document::{
    float, model_document, parse_model, parse_report, read_report, report_document, write_report, write_report_file,
    EntryDoc, FitDoc, Float, GofDoc, ModelDoc, ReportDoc, ReportEntry, MODEL_SCHEMA, REPORT_SCHEMA,
};
pub use plot::{plot_series, series_csv, Curve, CurveSeries, PlotRequest};
pub use read::{format_dataset, parse_dataset, read_dataset, read_dataset_file};
pub use spec::{ModelSpec, ZoneSpec};
