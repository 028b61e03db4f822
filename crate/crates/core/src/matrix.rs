//! Dense linear-algebra substrate: centring, Gram-Schmidt orthogonalisation,
//! orthonormal bases and coordinate matrices.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! column-major `nalgebra::DMatrix<f64>` with instances as rows.

use std::sync::OnceLock;

use nalgebra::linalg::QR;
use nalgebra::{DMatrix, DVector, DVectorView, Dyn, SVD};

use crate::error::{Error, Result};

/// Relative norm below which an orthogonalised column is treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative Frobenius residual allowed when reconstructing a matrix from
/// its coordinates.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Residual ratio that triggers a second orthogonalisation pass.
const REORTH_RATIO: f64 = 0.1;

/// Numeric table of `N` instances by `k` named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    col_names: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, col_names: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if col_names.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                col_names.len(),
                values.ncols()
            )));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values, col_names })
    }

    /// Names columns `{prefix}0`, `{prefix}1`, ...
    pub fn with_prefix(values: DMatrix<f64>, prefix: &str) -> Result<Self> {
        let names = (0..values.ncols())
            .map(|i| format!("{prefix}{i}"))
            .collect();
        Self::new(values, names)
    }

    pub fn from_columns(columns: &[Vec<f64>], col_names: Vec<String>) -> Result<Self> {
        let nrows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(Error::Dimension("columns have unequal lengths".into()));
        }
        let values = DMatrix::from_fn(nrows, columns.len(), |r, c| columns[c][r]);
        Self::new(values, col_names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> DVectorView<'_, f64> {
        self.values.column(j)
    }

    /// New matrix holding the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.ncols()) {
            return Err(Error::Dimension(format!(
                "column index {bad} out of range for {} columns",
                self.ncols()
            )));
        }
        let values = self.values.select_columns(indices.iter());
        let names = indices.iter().map(|&i| self.col_names[i].clone()).collect();
        Self::new(values, names)
    }
}

/// A matrix whose columns have zero mean, with the removed means retained.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix {
    values: DMatrix<f64>,
    source_means: DVector<f64>,
}

impl CenteredMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn source_means(&self) -> &DVector<f64> {
        &self.source_means
    }

    /// Adds the source means back.
    pub fn uncenter(&self) -> DMatrix<f64> {
        let mut out = self.values.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.source_means[j]);
        }
        out
    }

    /// Side-by-side concatenation `(self, other)`.
    pub fn hconcat(&self, other: &CenteredMatrix) -> Result<CenteredMatrix> {
        if self.values.nrows() != other.values.nrows() {
            return Err(Error::Dimension(format!(
                "cannot concatenate {} rows with {} rows",
                self.values.nrows(),
                other.values.nrows()
            )));
        }
        Ok(CenteredMatrix {
            values: hconcat(&self.values, &other.values),
            source_means: DVector::from_iterator(
                self.source_means.len() + other.source_means.len(),
                self.source_means
                    .iter()
                    .chain(other.source_means.iter())
                    .copied(),
            ),
        })
    }
}

/// `N x z` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    values: DMatrix<f64>,
}

impl OrthonormalBasis {
    /// Wraps `u`, checking `U'U = I` to within `1e-10 * z` in Frobenius norm.
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        let z = u.ncols();
        let residual = (u.transpose() * &u - DMatrix::<f64>::identity(z, z)).norm();
        if residual > 1e-10 * (z.max(1) as f64) {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (residual {residual:.3e})"
            )));
        }
        Ok(Self { values: u })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn z(&self) -> usize {
        self.values.ncols()
    }
}

/// Result of orthogonalising one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthogonalized {
    pub vector: DVector<f64>,
    /// The residual norm fell below `RANK_TOL` times the input norm.
    pub degenerate: bool,
}

/// Columns made mutually orthogonal (not normalised).
#[derive(Debug, Clone, PartialEq)]
pub struct GramSchmidt {
    /// Degenerate columns are stored as exact zeros.
    pub columns: DMatrix<f64>,
    pub degenerate: Vec<bool>,
}

impl GramSchmidt {
    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

pub fn center(m: &DataMatrix) -> CenteredMatrix {
    center_values(m.values())
}

pub fn center_values(m: &DMatrix<f64>) -> CenteredMatrix {
    let mut values = m.clone();
    let mut means = DVector::zeros(m.ncols());
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        means[j] = mean;
    }
    CenteredMatrix {
        values,
        source_means: means,
    }
}

/// `z` orthonormal columns whose range contains the columns of `m`.
///
/// Uses the left singular vectors of a thin SVD, ordered by decreasing
/// singular value, and pads with further orthonormal directions when `z`
/// exceeds the number of singular vectors available.
pub fn orthonormal_basis(m: &DMatrix<f64>, z: usize) -> Result<OrthonormalBasis> {
    let n_rows = m.nrows();
    if z > n_rows {
        return Err(Error::Dimension(format!(
            "basis size {z} exceeds the number of rows {n_rows}"
        )));
    }
    if z == 0 {
        return Err(Error::Dimension("basis size must be positive".into()));
    }
    let (u, svd) = left_singular(m)?;
    let rank_tol = svd.singular_values.max() * RANK_TOL * (m.ncols().max(n_rows) as f64);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rank_tol)
        .count();
    if rank > z {
        return Err(Error::Dimension(format!(
            "basis size {z} is below the rank {rank} of the matrix"
        )));
    }

    let take = z.min(u.ncols());
    let mut columns: Vec<DVector<f64>> = (0..take).map(|j| u.column(j).into_owned()).collect();
    let mut e = 0;
    while columns.len() < z && e < n_rows {
        let mut v = DVector::zeros(n_rows);
        v[e] = 1.0;
        for _ in 0..2 {
            for c in &columns {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            columns.push(v / norm);
        }
        e += 1;
    }
    OrthonormalBasis::new(DMatrix::from_columns(&columns))
}

/// Thin SVD left factor. Tall inputs are reduced by Householder QR first and
/// only the small triangular factor is decomposed.
fn left_singular(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, SVD<f64, Dyn, Dyn>)> {
    let missing = || Error::Consistency("SVD did not return left singular vectors".into());
    if m.nrows() > 2 * m.ncols() {
        let qr = m.clone().qr();
        let svd = SVD::new(qr.r(), true, false);
        let u = qr.q() * svd.u.as_ref().ok_or_else(missing)?;
        Ok((u, svd))
    } else {
        let svd = SVD::new(m.clone(), true, false);
        let u = svd.u.clone().ok_or_else(missing)?;
        Ok((u, svd))
    }
}

/// Thin-SVD basis of a tall matrix with `z` equal to its column count,
/// held in factored form `U = Q W` where `M = Q R` and `R = W S V'`.
///
/// The coordinates `U' M = W' R` come out of the small `z x z` problem, so
/// the `N x z` factor is only formed if [`FactoredBasis::basis`] is called.
#[derive(Debug, Clone)]
pub struct FactoredBasis {
    qr: QR<f64, Dyn, Dyn>,
    w: DMatrix<f64>,
    coords: DMatrix<f64>,
    basis: OnceLock<OrthonormalBasis>,
}

impl FactoredBasis {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let (n_rows, z) = m.shape();
        if z == 0 || z > n_rows {
            return Err(Error::Dimension(format!(
                "factored basis needs 0 < columns <= rows, got {n_rows} x {z}"
            )));
        }
        let qr = m.clone().qr();
        let r = qr.r();
        let svd = SVD::new(r.clone(), true, false);
        let w = svd
            .u
            .ok_or_else(|| Error::Consistency("SVD did not return left singular vectors".into()))?;
        let coords = w.transpose() * &r;
        // |Q (W W'R - R)| = |W W'R - R| because Q has orthonormal columns.
        let residual = (&w * &coords - &r).norm();
        let scale = r.norm();
        if residual > RECONSTRUCTION_TOL * scale {
            return Err(Error::NotInRange {
                residual: if scale > 0.0 {
                    residual / scale
                } else {
                    residual
                },
            });
        }
        Ok(Self {
            qr,
            w,
            coords,
            basis: OnceLock::new(),
        })
    }

    pub fn z(&self) -> usize {
        self.w.ncols()
    }

    /// Coordinates of every column of the source matrix, `z x z`.
    pub fn coordinates(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// The explicit `N x z` basis, built on first use.
    pub fn basis(&self) -> &OrthonormalBasis {
        self.basis.get_or_init(|| OrthonormalBasis {
            values: self.qr.q() * &self.w,
        })
    }
}

/// Coordinate matrix `[M]_U = U' M`, checked by reconstruction.
pub fn coordinates(m: &DMatrix<f64>, u: &OrthonormalBasis) -> Result<DMatrix<f64>> {
    let basis = u.values();
    if basis.nrows() != m.nrows() {
        return Err(Error::Dimension(format!(
            "basis has {} rows but matrix has {}",
            basis.nrows(),
            m.nrows()
        )));
    }
    let coords = basis.transpose() * m;
    let residual = (basis * &coords - m).norm();
    let scale = m.norm();
    if residual > RECONSTRUCTION_TOL * scale {
        return Err(Error::NotInRange {
            residual: if scale > 0.0 {
                residual / scale
            } else {
                residual
            },
        });
    }
    Ok(coords)
}

/// Removes from `f` its projection on every column of `w`.
///
/// `w` holds mutually orthogonal (not necessarily normalised) vectors; zero
/// columns are skipped. A second pass runs when the first leaves less than a
/// tenth of the input norm.
pub fn orthogonalize_against(f: &DVector<f64>, w: &[DVector<f64>]) -> Orthogonalized {
    let input_norm = f.norm();
    let mut v = f.clone();
    project_out(&mut v, w);
    if v.norm() < REORTH_RATIO * input_norm {
        project_out(&mut v, w);
    }
    let degenerate = v.norm() <= RANK_TOL * input_norm || input_norm == 0.0;
    Orthogonalized {
        vector: v,
        degenerate,
    }
}

fn project_out(v: &mut DVector<f64>, w: &[DVector<f64>]) {
    for wj in w {
        let denom = wj.norm_squared();
        if denom > 0.0 {
            let coeff = v.dot(wj) / denom;
            v.axpy(-coeff, wj, 1.0);
        }
    }
}

/// Modified Gram-Schmidt over the columns of `m`, left to right.
pub fn gram_schmidt(m: &DMatrix<f64>) -> GramSchmidt {
    let mut done: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    let mut degenerate = Vec::with_capacity(m.ncols());
    for col in m.column_iter() {
        let o = orthogonalize_against(&col.into_owned(), &done);
        if o.degenerate {
            done.push(DVector::zeros(m.nrows()));
        } else {
            done.push(o.vector);
        }
        degenerate.push(o.degenerate);
    }
    let columns = if done.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&done)
    };
    GramSchmidt {
        columns,
        degenerate,
    }
}

pub fn hconcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Squared cosine of the angle between two vectors; 0 if either is zero.
pub fn cos_sq(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = a.norm_squared() * b.norm_squared();
    if denom == 0.0 {
        0.0
    } else {
        let d = a.dot(b);
        d * d / denom
    }
}
