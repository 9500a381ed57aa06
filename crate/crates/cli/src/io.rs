//! CSV ingestion and atomic output.

use std::fs;
use std::io::Write;
use std::path::Path;

use conformal_ood::{LabeledFeatures, ScoreVector};
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

fn read_records(path: &Path) -> CliResult<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn parse_number(path: &Path, line: usize, field: &str) -> CliResult<f64> {
    let value: f64 = field.parse().map_err(|_| CliError::Parse {
        path: path.into(),
        line,
        message: format!("not a number: '{field}'"),
    })?;
    if !value.is_finite() {
        return Err(CliError::Parse {
            path: path.into(),
            line,
            message: format!("non-finite value '{field}'"),
        });
    }
    Ok(value)
}

/// Single-column scores with an optional `score` header.
pub fn parse_scores_csv(path: &Path) -> CliResult<ScoreVector> {
    let mut records = read_records(path)?;
    if records
        .first()
        .is_some_and(|(_, r)| r.len() == 1 && r[0].eq_ignore_ascii_case("score"))
    {
        records.remove(0);
    }
    if records.is_empty() {
        return Err(CliError::Input {
            path: path.into(),
            message: "empty score file".into(),
        });
    }
    let mut values = Vec::with_capacity(records.len());
    for (line, record) in &records {
        if record.len() != 1 {
            return Err(CliError::Parse {
                path: path.into(),
                line: *line,
                message: format!("expected 1 column, found {}", record.len()),
            });
        }
        values.push(parse_number(path, *line, &record[0])?);
    }
    Ok(ScoreVector::new(values)?)
}

/// Rows of `label,f1,...,fd` before any class-coverage check.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
}

impl FeatureTable {
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn max_label(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }
}

pub fn read_feature_table(path: &Path) -> CliResult<FeatureTable> {
    let mut records = read_records(path)?;
    if records
        .first()
        .is_some_and(|(_, r)| r.first().is_some_and(|f| f.eq_ignore_ascii_case("label")))
    {
        records.remove(0);
    }
    let Some((_, first)) = records.first() else {
        return Err(CliError::Input {
            path: path.into(),
            message: "empty feature file".into(),
        });
    };
    let width = first.len();
    if width < 2 {
        return Err(CliError::Input {
            path: path.into(),
            message: "expected columns label,f1,...,fd".into(),
        });
    }
    let mut labels = Vec::with_capacity(records.len());
    let mut values = Vec::with_capacity(records.len() * (width - 1));
    for (line, record) in &records {
        let line = *line;
        if record.len() != width {
            return Err(CliError::Parse {
                path: path.into(),
                line,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        let label: i64 = record[0].parse().map_err(|_| CliError::Parse {
            path: path.into(),
            line,
            message: format!("label '{}' is not an integer", record[0]),
        })?;
        if label < 1 {
            return Err(CliError::Parse {
                path: path.into(),
                line,
                message: format!("label {label}: labels are 1-based"),
            });
        }
        labels.push(label as usize);
        for field in &record[1..] {
            values.push(parse_number(path, line, field)?);
        }
    }
    Ok(FeatureTable {
        features: DMatrix::from_row_slice(labels.len(), width - 1, &values),
        labels,
    })
}

/// Labeled features; the number of classes is the largest label.
pub fn parse_features_csv(path: &Path) -> CliResult<LabeledFeatures> {
    let table = read_feature_table(path)?;
    Ok(LabeledFeatures::new(table.features, table.labels, None)?)
}

/// Writes to `path` through a temporary file in the same directory, or to
/// standard output when no path is given.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let Some(path) = path else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::io("<stdout>", e));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub(crate) fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv encoding failed: {e}")))
}

pub(crate) fn json_bytes<S: serde::Serialize>(value: &S) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Config(format!("json encoding failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn scores_with_header() {
        let f = file("score\n1.5\n2.0\n");
        assert_eq!(parse_scores_csv(f.path()).unwrap().as_slice(), &[1.5, 2.0]);
    }

    #[test]
    fn malformed_score_reports_its_line() {
        let f = file("1.5\nabc\n");
        match parse_scores_csv(f.path()).unwrap_err() {
            CliError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        let f = file("1.5\nNaN\n");
        assert!(matches!(parse_scores_csv(f.path()), Err(CliError::Parse { line: 2, .. })));
    }

    #[test]
    fn header_only_is_empty() {
        let f = file("score\n");
        let e = parse_scores_csv(f.path()).unwrap_err();
        assert!(e.to_string().contains("empty score file"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn features() {
        let f = file("label,f1,f2\n1,0.0,0.0\n2,1.0,1.0\n");
        let lf = parse_features_csv(f.path()).unwrap();
        assert_eq!((lf.len(), lf.dim(), lf.num_classes()), (2, 2, 2));
        let f = file("label,f1,f2\n1,0.0,0.0\n2,1.0\n");
        assert!(matches!(parse_features_csv(f.path()), Err(CliError::Parse { line: 3, .. })));
        let f = file("label,f1\n0,1.0\n");
        assert!(parse_features_csv(f.path()).unwrap_err().to_string().contains("labels are 1-based"));
        let f = file("label,f1\n1.5,1.0\n");
        assert!(parse_features_csv(f.path()).unwrap_err().to_string().contains("not an integer"));
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let e = parse_scores_csv(Path::new("/nonexistent/scores.csv")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
