//! LIBSVM sparse text ingestion. Rows are densified on load: the dual table
//! the solver maintains is dense regardless, so sparse storage would buy
//! nothing for the shipped loss families.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::{ComponentLoss, GlmKind, Problem};
use crate::vector::DenseVector;

/// Reads a LIBSVM-format text file: one `label idx:val idx:val ...` row per
/// line, indices 1-based. The dimension is the largest index seen, unless
/// `d_override` pins it (in which case larger indices are rejected). Blank
/// lines are skipped; an empty file is an empty dataset.
pub fn load_libsvm(
    path: impl AsRef<Path>,
    d_override: Option<usize>,
) -> Result<Vec<(DenseVector, f64)>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let contents = fs::read_to_string(path).map_err(|source| Error::DatasetIo {
        path: display.clone(),
        source,
    })?;
    parse_libsvm(&contents, d_override, &display)
}

fn parse_libsvm(
    contents: &str,
    d_override: Option<usize>,
    path: &str,
) -> Result<Vec<(DenseVector, f64)>> {
    let fail = |line: usize, message: String| Error::DatasetParse {
        path: path.to_string(),
        line,
        message,
    };

    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (line_no, raw) in contents.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_token = tokens.next().expect("non-empty line has a first token");
        let label: f64 = label_token
            .parse()
            .map_err(|_| fail(line_no, format!("invalid label {label_token:?}")))?;
        let mut entries = Vec::new();
        for token in tokens {
            let (idx_str, val_str) = token
                .split_once(':')
                .ok_or_else(|| fail(line_no, format!("expected idx:val, got {token:?}")))?;
            let idx: usize = idx_str
                .parse()
                .map_err(|_| fail(line_no, format!("invalid feature index {idx_str:?}")))?;
            if idx == 0 {
                return Err(fail(line_no, "feature index must be >= 1".to_string()));
            }
            if let Some(d) = d_override {
                if idx > d {
                    return Err(fail(
                        line_no,
                        format!("feature index {idx} exceeds the declared dimension {d}"),
                    ));
                }
            }
            let val: f64 = val_str
                .parse()
                .map_err(|_| fail(line_no, format!("invalid feature value {val_str:?}")))?;
            max_index = max_index.max(idx);
            entries.push((idx, val));
        }
        rows.push((label, entries));
    }

    let d = d_override.unwrap_or(max_index);
    Ok(rows
        .into_iter()
        .map(|(label, entries)| {
            let mut x = DenseVector::zeros(d);
            for (idx, val) in entries {
                x[idx - 1] = val;
            }
            (x, label)
        })
        .collect())
}

/// Wraps loaded rows into a regularized problem with the chosen loss kind.
pub fn problem_from_dataset(
    rows: Vec<(DenseVector, f64)>,
    kind: GlmKind,
    lambda: f64,
) -> Result<Problem> {
    let components = rows
        .into_iter()
        .map(|(x, y)| ComponentLoss::glm(kind, x, y))
        .collect();
    Problem::new(components, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sparse_rows() {
        let rows = parse_libsvm("1 1:0.5 3:2\n", Some(3), "test").unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].1, 1.0);
        assert_eq!(rows[0].0.as_slice(), &[0.5, 0.0, 2.0]);
    }

    #[test]
    fn dimension_defaults_to_max_index() {
        let rows = parse_libsvm("-1 2:1\n0.5 4:3\n", None, "test").unwrap();
        assert_eq!(rows[0].0.dim(), 4);
        assert_eq!(rows[1].0.as_slice(), &[0.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        assert!(parse_libsvm("", None, "test").unwrap().is_empty());
        assert!(parse_libsvm("\n  \n", None, "test").unwrap().is_empty());
    }

    #[test]
    fn zero_index_is_rejected_with_line() {
        let err = parse_libsvm("1 1:2\n1 0:1\n", None, "data.svm").unwrap_err();
        match err {
            Error::DatasetParse { line, path, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path, "data.svm");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_tokens_are_rejected_with_line() {
        assert!(matches!(
            parse_libsvm("abc 1:2\n", None, "t"),
            Err(Error::DatasetParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 5\n", None, "t"),
            Err(Error::DatasetParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 2:x\n", None, "t"),
            Err(Error::DatasetParse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 7:2\n", Some(3), "t"),
            Err(Error::DatasetParse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_reports_io_error() {
        let err = load_libsvm("/nonexistent/definitely-not-here.svm", None).unwrap_err();
        assert!(matches!(err, Error::DatasetIo { .. }));
    }

    #[test]
    fn loads_from_disk_and_builds_problem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.svm");
        std::fs::write(&path, "1 1:1\n-1 1:-0.5 2:1\n").unwrap();
        let rows = load_libsvm(&path, None).unwrap();
        assert_eq!(rows.len(), 2);
        let problem = problem_from_dataset(rows, GlmKind::Logistic, 0.5).unwrap();
        assert_eq!(problem.n(), 2);
        assert_eq!(problem.dim(), 2);
    }
}
