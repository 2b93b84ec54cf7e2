//! Metrics, k-fold cross-validation and learning curves.

mod metrics;
mod pipeline;
mod report;

pub use metrics::{accuracy, kfold_split, rmse, Fold, Metrics};
pub use pipeline::{
    cross_validate, evaluate_test, fold_features, learning_curve, ClassifierConfig, CurvePoint, CvReport, Dataset,
    ExtractorConfig, ExtractorKind, Fingerprint, FoldFeatures, FoldResult, LsiInput, Summary, TestRun,
};
pub use report::{
    curve_rows, cv_rows, parse_report, test_rows, write_report, FoldTag, ReportRow, Split, REPORT_HEADER,
};

/// Feature counts on the x-axis of the default learning curve.
pub fn default_grid() -> Vec<usize> {
    let mut g: Vec<usize> = (1..=5).map(|i| i * 20).collect();
    g.extend((2..=10).map(|i| i * 100));
    g.extend((2..=10).map(|i| i * 1000));
    g.extend([15_000, 20_000, 30_000, 40_000, 50_000, 60_000]);
    g
}
