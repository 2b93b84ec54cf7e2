//! The per-fold report CSV shared by `cv`, `curve`, `test-eval` and `plot`.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use super::pipeline::{CurvePoint, CvReport, ExtractorKind, TestRun};
use crate::classify::ClassifierKind;
use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 10] =
    ["extractor", "ngram_max", "n_features", "classifier", "fold", "split", "rmse", "accuracy", "wall_seconds", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldTag {
    Index(usize),
    Mean,
    Std,
    /// Whole training set, scored against the test set.
    Full,
}

impl fmt::Display for FoldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldTag::Index(i) => write!(f, "{i}"),
            FoldTag::Mean => f.write_str("mean"),
            FoldTag::Std => f.write_str("std"),
            FoldTag::Full => f.write_str("full"),
        }
    }
}

impl FromStr for FoldTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(FoldTag::Mean),
            "std" => Ok(FoldTag::Std),
            "full" => Ok(FoldTag::Full),
            _ => s.parse().map(FoldTag::Index).map_err(|_| format!("bad fold {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(format!("bad split {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub extractor: ExtractorKind,
    pub ngram_max: u8,
    pub n_features: usize,
    pub classifier: ClassifierKind,
    pub fold: FoldTag,
    pub split: Split,
    pub rmse: f64,
    pub accuracy: f64,
    pub wall_seconds: Option<f64>,
    pub seed: u64,
}

/// Rows for one report: every fold, then mean and std, train before val.
/// Wall-clock times are only kept when `timings` is set, so that reruns
/// produce identical bytes otherwise.
pub fn cv_rows(report: &CvReport, timings: bool) -> Vec<ReportRow> {
    let fp = &report.fingerprint;
    let row = |fold, split, rmse, accuracy, wall: Option<f64>| ReportRow {
        extractor: fp.extractor,
        ngram_max: fp.ngram_max,
        n_features: fp.n_features,
        classifier: fp.classifier,
        fold,
        split,
        rmse,
        accuracy,
        wall_seconds: wall.filter(|_| timings),
        seed: fp.seed,
    };
    let mut rows = Vec::with_capacity(2 * report.folds.len() + 4);
    for f in &report.folds {
        let tag = FoldTag::Index(f.fold);
        rows.push(row(tag, Split::Train, f.train.rmse, f.train.accuracy, Some(f.wall_seconds)));
        rows.push(row(tag, Split::Val, f.validation.rmse, f.validation.accuracy, Some(f.wall_seconds)));
    }
    for (tag, pick) in [(FoldTag::Mean, true), (FoldTag::Std, false)] {
        for (split, s) in [(Split::Train, &report.train), (Split::Val, &report.validation)] {
            let (rmse, acc) = if pick { (s.rmse_mean, s.accuracy_mean) } else { (s.rmse_std, s.accuracy_std) };
            rows.push(row(tag, split, rmse, acc, None));
        }
    }
    rows
}

pub fn curve_rows(curve: &[CurvePoint], timings: bool) -> Vec<ReportRow> {
    curve.iter().flat_map(|p| cv_rows(&p.report, timings)).collect()
}

pub fn test_rows(
    run: &TestRun,
    extractor: ExtractorKind,
    n_features: usize,
    seed: u64,
    timings: bool,
) -> Vec<ReportRow> {
    let row = |split, m: &super::Metrics| ReportRow {
        extractor,
        ngram_max: extractor.ngram_max(),
        n_features,
        classifier: run.model.kind(),
        fold: FoldTag::Full,
        split,
        rmse: m.rmse,
        accuracy: m.accuracy,
        wall_seconds: timings.then_some(run.wall_seconds),
        seed,
    };
    vec![row(Split::Train, &run.train), row(Split::Test, &run.test)]
}

pub fn write_report(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.extractor.name().to_string(),
            r.ngram_max.to_string(),
            r.n_features.to_string(),
            r.classifier.name().to_string(),
            r.fold.to_string(),
            r.split.to_string(),
            r.rmse.to_string(),
            r.accuracy.to_string(),
            r.wall_seconds.map(|s| format!("{s:.3}")).unwrap_or_default(),
            r.seed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: fmt::Display,
{
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|e| Error::Parse { line, message: format!("column {}: {e}", REPORT_HEADER[i]) })
}

pub fn parse_report<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if header.iter().ne(REPORT_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("expected header {}", REPORT_HEADER.join(",")) });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let number = |i: usize| -> Result<f64> {
            let v: f64 = field(&rec, i, line)?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(Error::Parse { line, message: format!("column {}: {v} out of range", REPORT_HEADER[i]) })
            }
        };
        let wall = match rec.get(8) {
            Some("") => None,
            _ => Some(number(8)?),
        };
        let accuracy = number(7)?;
        if accuracy > 1.0 {
            return Err(Error::Parse { line, message: format!("accuracy {accuracy} above 1") });
        }
        rows.push(ReportRow {
            extractor: field(&rec, 0, line)?,
            ngram_max: field(&rec, 1, line)?,
            n_features: field(&rec, 2, line)?,
            classifier: field(&rec, 3, line)?,
            fold: field(&rec, 4, line)?,
            split: field(&rec, 5, line)?,
            rmse: number(6)?,
            accuracy,
            wall_seconds: wall,
            seed: field(&rec, 9, line)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportRow {
        ReportRow {
            extractor: ExtractorKind::UniBi,
            ngram_max: 2,
            n_features: 100,
            classifier: ClassifierKind::LogReg,
            fold: FoldTag::Index(2),
            split: Split::Val,
            rmse: 0.8660254037844386,
            accuracy: 0.5833333333333334,
            wall_seconds: None,
            seed: 7,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![
            sample(),
            ReportRow { fold: FoldTag::Mean, split: Split::Train, wall_seconds: Some(1.5), ..sample() },
            ReportRow { fold: FoldTag::Full, split: Split::Test, ..sample() },
        ];
        let text = write_report(&rows);
        assert!(
            text.starts_with("extractor,ngram_max,n_features,classifier,fold,split,rmse,accuracy,wall_seconds,seed\n")
        );
        assert!(text.contains("uni_bi,2,100,logreg,2,val,0.8660254037844386,0.5833333333333334,,7\n"));
        assert_eq!(parse_report(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn schema_errors() {
        assert!(parse_report("a,b\n1,2\n".as_bytes()).is_err());
        let bad = write_report(&[sample()]).replace(",val,", ",dev,");
        assert!(matches!(parse_report(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let bad = write_report(&[sample()]).replace("0.5833333333333334", "1.5");
        assert!(parse_report(bad.as_bytes()).is_err());
    }
}
