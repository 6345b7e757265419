//! Embedding-matrix geometry: singular-value spectra, IsoScore and PCA
//! intrinsic dimension, plus the EMB1 binary container.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";
/// Magic plus row and column counts.
pub const EMB1_HEADER_LEN: usize = 12;
pub const DEFAULT_PCA_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("need at least 2 rows and 2 columns, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("matrix contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("points have no variance")]
    Degenerate,
    #[error("bad magic: expected EMB1")]
    BadMagic,
    #[error("payload holds {found} bytes, header announces {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("threshold {0} must lie in (0, 1]")]
    InvalidThreshold(f64),
}

/// Row-major `rows x cols` matrix of 32-bit floats, as stored in EMB1 files.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut values = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                values.push(m[(r, c)] as f32);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            values,
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| {
            f64::from(self.values[r * self.cols + c])
        })
    }
}

/// Serializes as `EMB1`, rows and cols as little-endian u32, then row-major
/// little-endian f32 values.
pub fn save_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(EMB1_HEADER_LEN + 4 * m.values.len());
    out.extend_from_slice(EMB1_MAGIC);
    out.extend_from_slice(&(m.rows as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols as u32).to_le_bytes());
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn load_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix, GeometryError> {
    if bytes.len() < 4 || &bytes[..4] != EMB1_MAGIC {
        return Err(GeometryError::BadMagic);
    }
    if bytes.len() < EMB1_HEADER_LEN {
        return Err(GeometryError::SizeMismatch {
            expected: EMB1_HEADER_LEN,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let (rows, cols) = (word(4) as usize, word(8) as usize);
    let payload = &bytes[EMB1_HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .unwrap_or(usize::MAX);
    if payload.len() != expected {
        return Err(GeometryError::SizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(GeometryError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        values.push(v);
    }
    Ok(EmbeddingMatrix { rows, cols, values })
}

fn check(points: &DMatrix<f64>) -> Result<(), GeometryError> {
    let (rows, cols) = points.shape();
    if rows < 2 || cols < 2 {
        return Err(GeometryError::TooSmall { rows, cols });
    }
    for c in 0..cols {
        for r in 0..rows {
            if !points[(r, c)].is_finite() {
                return Err(GeometryError::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn centered(points: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = points.clone();
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    m
}

/// Covariance eigenvalues of the centered points, descending and clamped
/// at zero.
fn pca_variances(points: &DMatrix<f64>) -> Result<Vec<f64>, GeometryError> {
    check(points)?;
    let x = centered(points);
    let cov = (x.transpose() * &x) / (points.nrows() as f64 - 1.0);
    let mut lambda: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|&v| v.max(0.0))
        .collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    if lambda[0] <= 0.0 {
        return Err(GeometryError::Degenerate);
    }
    Ok(lambda)
}

/// Singular values of the column-centered matrix divided by the largest,
/// in descending order.
pub fn singular_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<f64>, GeometryError> {
    check(matrix)?;
    let x = centered(matrix);
    let mut s: Vec<f64> = x.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let max = s[0];
    let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
        return Err(GeometryError::Degenerate);
    }
    Ok(s.into_iter().map(|v| v / max).collect())
}

/// Isotropy of a point cloud in [0, 1].
///
/// The variance of the PCA-reoriented points gives `λ`; with
/// `λ̂ = √d·λ/‖λ‖`, the defect `δ = ‖λ̂ − 1‖ / √(2(d − √d))` yields
/// `φ = (d − δ²(d − √d))² / d²` and the score `(dφ − 1)/(d − 1)`.
pub fn isoscore(points: &DMatrix<f64>) -> Result<f64, GeometryError> {
    let lambda = pca_variances(points)?;
    let d = lambda.len() as f64;
    let sqrt_d = d.sqrt();
    let norm = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
    let defect_sq: f64 = lambda
        .iter()
        .map(|v| (sqrt_d * v / norm - 1.0).powi(2))
        .sum::<f64>()
        / (2.0 * (d - sqrt_d));
    let phi = (d - defect_sq * (d - sqrt_d)).powi(2) / (d * d);
    Ok(((d * phi - 1.0) / (d - 1.0)).clamp(0.0, 1.0))
}

/// Number of covariance eigenvalues at least `threshold` times the largest.
pub fn pca_intrinsic_dim(points: &DMatrix<f64>, threshold: f64) -> Result<usize, GeometryError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(GeometryError::InvalidThreshold(threshold));
    }
    let lambda = pca_variances(points)?;
    let cut = threshold * lambda[0];
    Ok(lambda.iter().filter(|&&v| v >= cut).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub isoscore: f64,
    pub pca_id: usize,
    pub spectrum: Vec<f64>,
}

pub fn geometry_report(
    points: &DMatrix<f64>,
    threshold: f64,
) -> Result<GeometryReport, GeometryError> {
    Ok(GeometryReport {
        isoscore: isoscore(points)?,
        pca_id: pca_intrinsic_dim(points, threshold)?,
        spectrum: singular_spectrum(points)?,
    })
}
