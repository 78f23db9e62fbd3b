//! File formats: CSV readers for score, histogram, and label data; the JSON
//! experiment spec; and the CSV/JSON report writers used by the CLI.
//!
//! Readers attach file and line information to every rejected value so a bad
//! row can be found without re-running anything. Writers emit floats in
//! shortest round-trip form, and every format here parses back losslessly
//! through the matching reader.

use crate::bucket::{LabeledEntry, LabeledSample, ScoredPopulation};
use crate::error::{Error, Result};
use crate::interval::{IntervalEstimate, Method, PrevalencePosterior};
use crate::simulate::{ExperimentSpec, MethodSummary, TrialMetrics, TrialRecord};
use serde::{Deserialize, Serialize};
use std::fmt::Display;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

/// Columns of the per-(method, N) summary report, in order.
pub const SUMMARY_COLUMNS: [&str; 7] = [
    "method",
    "N",
    "trials",
    "avg_ci_size",
    "wrong_ci_rate",
    "wrong_upper_rate",
    "failures",
];

/// Columns of the per-trial long-format report, in order.
pub const TRIAL_COLUMNS: [&str; 11] = [
    "method",
    "N",
    "trial",
    "point",
    "lower",
    "upper",
    "ci_size",
    "wrong_ci",
    "wrong_upper",
    "converged",
    "error",
];

fn io_err(path: &Path, message: impl Display) -> Error {
    Error::Io { path: path.display().to_string(), message: message.to_string() }
}

fn parse_err(path: &Path, line: u64, message: impl Display) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.to_string() }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(p) => parse_err(path, p.line(), e),
        None => io_err(path, e),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn required_column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_err(path, 1, format!("missing required column {name:?}")))
}

fn optional_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn field<'r>(record: &'r csv::StringRecord, idx: usize, name: &str, path: &Path) -> Result<&'r str> {
    record
        .get(idx)
        .ok_or_else(|| parse_err(path, record_line(record), format!("missing {name} field")))
}

fn parse_field<T: FromStr>(raw: &str, name: &str, path: &Path, line: u64) -> Result<T> {
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {name} from {raw:?}")))
}

/// Reads a `score` column into a raw-score population.
pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<ScoredPopulation> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let score_idx = required_column(&headers, "score", path)?;

    let mut scores = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let raw = field(&record, score_idx, "score", path)?;
        let score: f64 = parse_field(raw, "score", path, line)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(parse_err(path, line, format!("score {score} is outside [0, 1]")));
        }
        scores.push(score);
    }
    if scores.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    ScoredPopulation::from_scores(scores)
}

/// Reads `bucket_index,count` rows into a histogram population. Rows may be
/// in any order; indices are zero-based, the largest one fixes the bucket
/// count, and absent indices contribute zero. Duplicates are rejected.
pub fn read_histogram_csv(path: impl AsRef<Path>) -> Result<ScoredPopulation> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let bucket_idx = required_column(&headers, "bucket_index", path)?;
    let count_idx = required_column(&headers, "count", path)?;

    let mut cells: Vec<(usize, u64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let raw_bucket = field(&record, bucket_idx, "bucket_index", path)?;
        let bucket: usize = parse_field(raw_bucket, "bucket_index", path, line)?;
        let raw_count = field(&record, count_idx, "count", path)?;
        let count: u64 = parse_field(raw_count, "count", path, line)?;
        cells.push((bucket, count, line));
    }
    if cells.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }

    let k = cells.iter().map(|&(b, _, _)| b).max().unwrap() + 1;
    let mut counts = vec![0u64; k];
    let mut seen = vec![false; k];
    for (bucket, count, line) in cells {
        if seen[bucket] {
            return Err(parse_err(path, line, format!("duplicate bucket_index {bucket}")));
        }
        seen[bucket] = true;
        counts[bucket] = count;
    }
    ScoredPopulation::from_histogram(counts).map_err(|e| io_err(path, e))
}

/// Reads `score,label[,weight][,day]` rows. Empty optional cells fall back
/// to weight 1 and no day.
pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<LabeledSample> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let score_idx = required_column(&headers, "score", path)?;
    let label_idx = required_column(&headers, "label", path)?;
    let weight_idx = optional_column(&headers, "weight");
    let day_idx = optional_column(&headers, "day");

    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);

        let raw = field(&record, score_idx, "score", path)?;
        let score: f64 = parse_field(raw, "score", path, line)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(parse_err(path, line, format!("score {score} is outside [0, 1]")));
        }

        let label = match field(&record, label_idx, "label", path)? {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(path, line, format!("label must be 0 or 1, got {other:?}")));
            }
        };

        let weight = match weight_idx.map(|i| record.get(i).unwrap_or("")) {
            None | Some("") => 1.0,
            Some(raw) => {
                let w: f64 = parse_field(raw, "weight", path, line)?;
                if !(w > 0.0) || !w.is_finite() {
                    return Err(parse_err(path, line, format!("weight {w} is not positive")));
                }
                w
            }
        };

        let day = match day_idx.map(|i| record.get(i).unwrap_or("")) {
            None | Some("") => None,
            Some(raw) => Some(parse_field(raw, "day", path, line)?),
        };

        entries.push(LabeledEntry { score, label, weight, day });
    }
    if entries.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    LabeledSample::new(entries)
}

/// Reads and validates a JSON experiment spec. All failures — unreadable
/// file, malformed JSON, or a spec that fails validation — are configuration
/// errors.
pub fn read_experiment_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

fn write_record<W: Write, I, S>(writer: &mut csv::Writer<W>, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    writer
        .write_record(fields)
        .map_err(|e| Error::Io { path: "<csv output>".into(), message: e.to_string() })
}

fn finish<W: Write>(mut writer: csv::Writer<W>) -> Result<()> {
    writer
        .flush()
        .map_err(|e| Error::Io { path: "<csv output>".into(), message: e.to_string() })
}

/// `{}` on f64 prints the shortest digits that parse back to the same value.
fn float(v: f64) -> String {
    format!("{v}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes the per-(method, N) summary table.
pub fn write_summary_csv<W: Write>(writer: W, summaries: &[MethodSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    write_record(&mut w, SUMMARY_COLUMNS)?;
    for s in summaries {
        write_record(
            &mut w,
            [
                s.method.name().to_string(),
                s.n.to_string(),
                s.trials.to_string(),
                float(s.avg_ci_size),
                float(s.wrong_ci_rate),
                float(s.wrong_upper_rate),
                s.failures.to_string(),
            ],
        )?;
    }
    finish(w)
}

/// Writes the per-trial long-format table; failed trials carry an empty
/// metric block and the error text.
pub fn write_trials_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    write_record(&mut w, TRIAL_COLUMNS)?;
    for r in records {
        let head = [r.method.name().to_string(), r.n.to_string(), r.trial.to_string()];
        let row: Vec<String> = match (&r.metrics, &r.error) {
            (Some(m), _) => head
                .into_iter()
                .chain([
                    float(m.point),
                    float(m.lower),
                    float(m.upper),
                    float(m.ci_size),
                    flag(m.wrong_ci).to_string(),
                    flag(m.wrong_upper).to_string(),
                    flag(m.converged).to_string(),
                    String::new(),
                ])
                .collect(),
            (None, error) => head
                .into_iter()
                .chain(std::iter::repeat_n(String::new(), 7))
                .chain([error.clone().unwrap_or_else(|| "failed".into())])
                .collect(),
        };
        write_record(&mut w, &row)?;
    }
    finish(w)
}

fn reader_from<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader)
}

fn parse_bool01(raw: &str, name: &str, line: u64) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(parse_err(
            Path::new("<report>"),
            line,
            format!("{name} must be 0 or 1, got {other:?}"),
        )),
    }
}

/// Parses a summary table written by [`write_summary_csv`].
pub fn read_summary_csv<R: Read>(reader: R) -> Result<Vec<MethodSummary>> {
    let path = Path::new("<report>");
    let mut rdr = reader_from(reader);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(SUMMARY_COLUMNS) {
        return Err(parse_err(path, 1, "unexpected summary columns"));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let get = |i: usize, name: &str| field(&record, i, name, path);
        out.push(MethodSummary {
            method: get(0, "method")?.parse()?,
            n: parse_field(get(1, "N")?, "N", path, line)?,
            trials: parse_field(get(2, "trials")?, "trials", path, line)?,
            avg_ci_size: parse_field(get(3, "avg_ci_size")?, "avg_ci_size", path, line)?,
            wrong_ci_rate: parse_field(get(4, "wrong_ci_rate")?, "wrong_ci_rate", path, line)?,
            wrong_upper_rate: parse_field(
                get(5, "wrong_upper_rate")?,
                "wrong_upper_rate",
                path,
                line,
            )?,
            failures: parse_field(get(6, "failures")?, "failures", path, line)?,
        });
    }
    Ok(out)
}

/// Parses a per-trial table written by [`write_trials_csv`].
pub fn read_trials_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let path = Path::new("<report>");
    let mut rdr = reader_from(reader);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(TRIAL_COLUMNS) {
        return Err(parse_err(path, 1, "unexpected trial columns"));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let get = |i: usize, name: &str| field(&record, i, name, path);
        let method: Method = get(0, "method")?.parse()?;
        let n = parse_field(get(1, "N")?, "N", path, line)?;
        let trial = parse_field(get(2, "trial")?, "trial", path, line)?;
        let error_text = get(10, "error")?;
        let (metrics, error) = if get(3, "point")?.is_empty() {
            (None, Some(error_text.to_string()))
        } else {
            let metrics = TrialMetrics {
                point: parse_field(get(3, "point")?, "point", path, line)?,
                lower: parse_field(get(4, "lower")?, "lower", path, line)?,
                upper: parse_field(get(5, "upper")?, "upper", path, line)?,
                ci_size: parse_field(get(6, "ci_size")?, "ci_size", path, line)?,
                wrong_ci: parse_bool01(get(7, "wrong_ci")?, "wrong_ci", line)?,
                wrong_upper: parse_bool01(get(8, "wrong_upper")?, "wrong_upper", line)?,
                converged: parse_bool01(get(9, "converged")?, "converged", line)?,
            };
            (Some(metrics), None)
        };
        out.push(TrialRecord { method, n, trial, metrics, error });
    }
    Ok(out)
}

/// One estimator's full output on one dataset: the reported interval plus
/// the posterior behind it (moments, draws when sample-based, diagnostics).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub method: Method,
    pub interval: IntervalEstimate,
    pub posterior: PrevalencePosterior,
}

/// Serializes estimate records as pretty JSON (non-finite diagnostics become
/// null).
pub fn estimates_to_json(records: &[EstimateRecord]) -> String {
    serde_json::to_string_pretty(records).expect("plain data serializes")
}

/// Writes estimate records as a flat CSV (posterior draws are omitted; use
/// JSON output to keep them).
pub fn write_estimates_csv<W: Write>(writer: W, records: &[EstimateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    write_record(
        &mut w,
        ["method", "point", "lower", "upper", "mean", "variance", "rhat", "converged"],
    )?;
    for r in records {
        write_record(
            &mut w,
            [
                r.method.name().to_string(),
                float(r.interval.point),
                float(r.interval.lower),
                float(r.interval.upper),
                float(r.posterior.mean),
                float(r.posterior.variance),
                r.posterior.rhat.map(float).unwrap_or_default(),
                flag(r.posterior.converged).to_string(),
            ],
        )?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::interval_from_moments;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn scores_read_back_and_bad_rows_name_their_line() {
        let f = write_temp("score\n0.25\n1.0\n0.0\n");
        let pop = read_scores_csv(f.path()).unwrap();
        match pop {
            ScoredPopulation::Scores(s) => assert_eq!(s, vec![0.25, 1.0, 0.0]),
            _ => panic!("expected raw scores"),
        }

        let f = write_temp("score\n0.25\n1.5\n");
        match read_scores_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        let f = write_temp("value\n0.25\n");
        assert!(matches!(read_scores_csv(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn labels_fill_optional_columns() {
        let f = write_temp("score,label\n0.9,1\n0.2,0\n");
        let sample = read_labels_csv(f.path()).unwrap();
        assert_eq!(sample.len(), 2);
        assert_eq!(sample.entries()[0].weight, 1.0);
        assert_eq!(sample.entries()[0].day, None);
        assert!(sample.entries()[0].label);

        let f = write_temp("score,label,weight,day\n0.9,1,0.5,3\n0.2,0,,\n");
        let sample = read_labels_csv(f.path()).unwrap();
        assert_eq!(sample.entries()[0].weight, 0.5);
        assert_eq!(sample.entries()[0].day, Some(3));
        assert_eq!(sample.entries()[1].weight, 1.0);
        assert_eq!(sample.entries()[1].day, None);
    }

    #[test]
    fn bad_label_and_bad_weight_are_rejected_with_lines() {
        let f = write_temp("score,label\n0.9,1\n0.2,2\n");
        match read_labels_csv(f.path()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("label"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let f = write_temp("score,label,weight\n0.9,1,-2\n");
        match read_labels_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn histograms_accept_any_row_order_and_reject_duplicates() {
        let f = write_temp("bucket_index,count\n2,5\n0,10\n");
        let pop = read_histogram_csv(f.path()).unwrap();
        match pop {
            ScoredPopulation::Histogram(c) => assert_eq!(c, vec![10, 0, 5]),
            _ => panic!("expected histogram"),
        }

        let f = write_temp("bucket_index,count\n0,1\n0,2\n");
        match read_histogram_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_files_are_io_errors() {
        assert!(matches!(read_scores_csv("/nonexistent/file.csv"), Err(Error::Io { .. })));
    }

    #[test]
    fn summary_report_round_trips_with_exact_header() {
        let summaries = vec![
            MethodSummary {
                method: Method::Bbb,
                n: 30000,
                trials: 200,
                avg_ci_size: 3.5714e-4,
                wrong_ci_rate: 0.05,
                wrong_upper_rate: 0.02,
                failures: 0,
            },
            MethodSummary {
                method: Method::Bootstrap,
                n: 5000,
                trials: 200,
                avg_ci_size: 1.25e-3,
                wrong_ci_rate: 0.21,
                wrong_upper_rate: 0.17,
                failures: 1,
            },
        ];
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &summaries).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("method,N,trials,avg_ci_size,wrong_ci_rate,wrong_upper_rate,failures\n")
        );
        let back = read_summary_csv(buf.as_slice()).unwrap();
        assert_eq!(back, summaries);
    }

    #[test]
    fn trial_report_round_trips_including_failures() {
        let records = vec![
            TrialRecord {
                method: Method::Gp,
                n: 5000,
                trial: 0,
                metrics: Some(TrialMetrics {
                    point: 3.1e-4,
                    lower: 1.0e-4,
                    upper: 6.2e-4,
                    ci_size: 5.2e-4,
                    wrong_ci: false,
                    wrong_upper: false,
                    converged: true,
                }),
                error: None,
            },
            TrialRecord {
                method: Method::Bootstrap,
                n: 5000,
                trial: 1,
                metrics: None,
                error: Some("resampling failed, with \"quotes\" and, commas".into()),
            },
        ];
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &records).unwrap();
        let back = read_trials_csv(buf.as_slice()).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn experiment_specs_validate_on_read() {
        let good = r#"{
            "population": {"m": 1000, "lambda": 10.0,
                           "curve": {"family": "constant", "value": 0.01}},
            "n_grid": [100], "trials": 2, "methods": ["bbb"]
        }"#;
        let f = write_temp(good);
        let spec = read_experiment_spec(f.path()).unwrap();
        assert_eq!(spec.trials, 2);

        let zero_trials = good.replace("\"trials\": 2", "\"trials\": 0");
        let f = write_temp(&zero_trials);
        assert!(matches!(read_experiment_spec(f.path()), Err(Error::InvalidConfig(_))));

        let f = write_temp("{ not json");
        match read_experiment_spec(f.path()) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains(".tmp") || msg.contains('/')),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn estimate_records_serialize_both_ways() {
        let posterior =
            PrevalencePosterior::from_moments(Method::Bbb, 3.0e-4, 1.0e-8).unwrap();
        let interval = interval_from_moments(3.0e-4, 1.0e-8).unwrap();
        let records = vec![EstimateRecord { method: Method::Bbb, interval, posterior }];

        let json = estimates_to_json(&records);
        let back: Vec<EstimateRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[0].interval, records[0].interval);
        assert_eq!(back[0].posterior.mean, records[0].posterior.mean);

        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,point,lower,upper,mean,variance,rhat,converged\n"));
        assert!(text.contains("bbb,0.0003,"));
    }
}
