//! Shift vectors and rotation matrices for benchmark instances.
//!
//! Files are plain whitespace-separated decimal text: a shift file holds D
//! values, a rotation file holds D rows of D values. When official files are
//! not available a seeded synthetic substitute is generated instead.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{mix, RunRng};

/// Largest tolerated entry of `|M^T M - I|`.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    OfficialFile,
    SyntheticSeeded,
}

impl DataSource {
    pub fn tag(self) -> &'static str {
        match self {
            DataSource::OfficialFile => "official-file",
            DataSource::SyntheticSeeded => "synthetic-seeded",
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("missing data file {0}")]
    Missing(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed number `{token}`")]
    MalformedFloat { path: PathBuf, line: usize, token: String },
    #[error("{path}: expected {expected} rows, found {actual}")]
    RowCount { path: PathBuf, expected: usize, actual: usize },
    #[error("{path}:{line}: expected {expected} values, found {actual}")]
    ColumnCount {
        path: PathBuf,
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{path}: matrix is not orthonormal (max |M^T M - I| = {deviation:e})")]
    NotOrthonormal { path: PathBuf, deviation: f64 },
    #[error("{path}: shift component {index} = {value} lies outside the bounds")]
    ShiftOutOfBounds { path: PathBuf, index: usize, value: f64 },
}

/// Row-major square matrix.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub shift: Vec<f64>,
    pub rotations: Vec<Matrix>,
    pub source: DataSource,
}

pub fn shift_file(dir: &Path, problem_id: &str, dim: usize) -> PathBuf {
    dir.join(format!("{problem_id}_shift_D{dim}.txt"))
}

pub fn rotation_file(dir: &Path, problem_id: &str, dim: usize, k: usize) -> PathBuf {
    dir.join(format!("{problem_id}_rot_D{dim}_{k}.txt"))
}

/// Parses a text file into rows of numbers, skipping blank lines.
/// Returns `(line_number, values)` per non-blank line.
fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            LoadError::Missing(path.to_path_buf())
        } else {
            LoadError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| LoadError::MalformedFloat {
                path: path.to_path_buf(),
                line: line_no,
                token: token.to_string(),
            })?;
            if !v.is_finite() {
                return Err(LoadError::MalformedFloat {
                    path: path.to_path_buf(),
                    line: line_no,
                    token: token.to_string(),
                });
            }
            row.push(v);
        }
        if !row.is_empty() {
            rows.push((line_no, row));
        }
    }
    Ok(rows)
}

/// Reads a shift vector of exactly `dim` values.
pub fn read_shift(path: &Path, dim: usize) -> Result<Vec<f64>, LoadError> {
    let rows = read_rows(path)?;
    if rows.len() != 1 {
        return Err(LoadError::RowCount {
            path: path.to_path_buf(),
            expected: 1,
            actual: rows.len(),
        });
    }
    let (line, values) = rows.into_iter().next().unwrap_or_default();
    if values.len() != dim {
        return Err(LoadError::ColumnCount {
            path: path.to_path_buf(),
            line,
            expected: dim,
            actual: values.len(),
        });
    }
    Ok(values)
}

/// Reads a `dim x dim` matrix and checks orthonormality.
pub fn read_rotation(path: &Path, dim: usize) -> Result<Matrix, LoadError> {
    let rows = read_rows(path)?;
    if rows.len() != dim {
        return Err(LoadError::RowCount {
            path: path.to_path_buf(),
            expected: dim,
            actual: rows.len(),
        });
    }
    let mut m = Vec::with_capacity(dim);
    for (line, values) in rows {
        if values.len() != dim {
            return Err(LoadError::ColumnCount {
                path: path.to_path_buf(),
                line,
                expected: dim,
                actual: values.len(),
            });
        }
        m.push(values);
    }
    let deviation = orthonormality_deviation(&m);
    if !(deviation <= ORTHONORMAL_TOLERANCE) {
        return Err(LoadError::NotOrthonormal {
            path: path.to_path_buf(),
            deviation,
        });
    }
    Ok(m)
}

/// `max |M^T M - I|` over all entries.
pub fn orthonormality_deviation(m: &Matrix) -> f64 {
    let d = m.len();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = (0..d).map(|k| m[k][i] * m[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Loads shift and `n_rotations` rotation matrices from `dir`, checking the
/// shift against the box `[lower, upper]`.
pub fn load_problem_data(
    dir: &Path,
    problem_id: &str,
    dim: usize,
    n_rotations: usize,
    lower: &[f64],
    upper: &[f64],
) -> Result<ProblemData, LoadError> {
    let path = shift_file(dir, problem_id, dim);
    let shift = read_shift(&path, dim)?;
    for (index, (&value, (&lo, &hi))) in shift.iter().zip(lower.iter().zip(upper)).enumerate() {
        if value < lo || value > hi {
            return Err(LoadError::ShiftOutOfBounds {
                path: path.clone(),
                index,
                value,
            });
        }
    }
    let rotations = (1..=n_rotations)
        .map(|k| read_rotation(&rotation_file(dir, problem_id, dim, k), dim))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProblemData {
        shift,
        rotations,
        source: DataSource::OfficialFile,
    })
}

/// Seeded substitute data: shift uniform in the middle 80% of the bounds,
/// rotations from the QR factor of a Gaussian matrix.
pub fn synthetic_problem_data(
    seed: u64,
    lower: &[f64],
    upper: &[f64],
    n_rotations: usize,
) -> ProblemData {
    let dim = lower.len();
    let mut rng = RunRng::derived(seed, 0x5348_4946);
    let shift = lower
        .iter()
        .zip(upper)
        .map(|(lo, hi)| lo + (0.1 + 0.8 * rng.uniform()) * (hi - lo))
        .collect();
    let rotations = (0..n_rotations)
        .map(|k| random_rotation(dim, mix(seed, 0x524f_5400 + k as u64)))
        .collect();
    ProblemData {
        shift,
        rotations,
        source: DataSource::SyntheticSeeded,
    }
}

/// Random orthonormal matrix: Q of a Gaussian matrix's QR decomposition,
/// columns sign-fixed so that R has a positive diagonal.
pub fn random_rotation(dim: usize, seed: u64) -> Matrix {
    let mut rng = RunRng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.normal());
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    (0..dim).map(|i| (0..dim).map(|j| q[(i, j)]).collect()).collect()
}

pub fn write_vector(path: &Path, v: &[f64]) -> std::io::Result<()> {
    let line: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    fs::write(path, line.join(" ") + "\n")
}

pub fn write_matrix(path: &Path, m: &Matrix) -> std::io::Result<()> {
    let mut out = String::new();
    for row in m {
        let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(d: usize) -> Matrix {
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn zero_shift_and_identity_load() {
        let dir = tempfile::tempdir().unwrap();
        write_vector(&shift_file(dir.path(), "C08", 10), &[0.0; 10]).unwrap();
        write_matrix(&rotation_file(dir.path(), "C08", 10, 1), &identity(10)).unwrap();
        let data = load_problem_data(dir.path(), "C08", 10, 1, &[-140.0; 10], &[140.0; 10]).unwrap();
        assert_eq!(data.shift, vec![0.0; 10]);
        assert_eq!(data.rotations[0], identity(10));
        assert_eq!(data.source, DataSource::OfficialFile);
    }

    #[test]
    fn duplicated_row_is_not_orthonormal() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = identity(4);
        m[1] = m[0].clone();
        let path = rotation_file(dir.path(), "C10", 4, 1);
        write_matrix(&path, &m).unwrap();
        assert!(matches!(read_rotation(&path, 4), Err(LoadError::NotOrthonormal { .. })));
    }

    #[test]
    fn load_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        fs::write(&path, "1 0 0\n0 1 0\n0 x 1\n").unwrap();
        match read_rotation(&path, 3) {
            Err(LoadError::MalformedFloat { line, token, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(token, "x");
            }
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&path, "1 0 0\n0 1\n0 0 1\n").unwrap();
        assert!(matches!(
            read_rotation(&path, 3),
            Err(LoadError::ColumnCount { line: 2, expected: 3, actual: 2, .. })
        ));
        fs::write(&path, "1 0 0\n0 1 0\n").unwrap();
        assert!(matches!(read_rotation(&path, 3), Err(LoadError::RowCount { .. })));
    }

    #[test]
    fn missing_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_problem_data(dir.path(), "C01", 10, 0, &[0.0; 10], &[10.0; 10]).unwrap_err();
        assert!(err.to_string().contains("C01_shift_D10.txt"));
    }

    #[test]
    fn shift_outside_bounds_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_vector(&shift_file(dir.path(), "C01", 3), &[1.0, 11.0, 2.0]).unwrap();
        assert!(matches!(
            load_problem_data(dir.path(), "C01", 3, 0, &[0.0; 3], &[10.0; 3]),
            Err(LoadError::ShiftOutOfBounds { index: 1, .. })
        ));
    }

    #[test]
    fn synthetic_rotations_are_orthonormal_and_seeded() {
        for d in [2, 10, 30] {
            let m = random_rotation(d, 77);
            assert!(orthonormality_deviation(&m) <= ORTHONORMAL_TOLERANCE);
            assert_eq!(m, random_rotation(d, 77));
        }
        let data = synthetic_problem_data(5, &[-10.0; 4], &[10.0; 4], 1);
        assert!(data.shift.iter().all(|&v| (-8.0..=8.0).contains(&v)));
        assert_eq!(data.source, DataSource::SyntheticSeeded);
    }
}
