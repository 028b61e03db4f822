//! Ordinary least squares with an intercept, and a greedy wrapper that
//! selects features by training RMSE.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: DVector<f64>,
    /// Training root-mean-square error (divisor N).
    pub rmse: f64,
    pub r_squared: f64,
}

pub fn ols_fit(x: &DataMatrix, y: &[f64]) -> Result<OlsFit> {
    ols_fit_values(x.values(), y)
}

/// Least squares via Householder QR of `[1, X]`. `x` may have no columns.
pub fn ols_fit_values(x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    if x.nrows() != n {
        return Err(Error::Dimension(format!(
            "{} responses for {} instances",
            n,
            x.nrows()
        )));
    }
    let k = x.ncols() + 1;
    if k > n {
        return Err(Error::degenerate(
            "design",
            format!("{k} coefficients cannot be identified from {n} instances"),
        ));
    }
    let mut design = DMatrix::from_element(n, k, 1.0);
    design.columns_mut(1, k - 1).copy_from(x);
    let y = DVector::from_column_slice(y);

    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let col_norm = design.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(Error::degenerate(
                "design",
                format!("column {j} of [1, X] is linearly dependent on earlier columns"),
            ));
        }
    }
    let qty = qr.q().tr_mul(&y);
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::degenerate("design", "singular triangular factor"))?;

    let residual = &y - &design * &coefficients;
    let rss = residual.norm_squared();
    let mean = y.mean();
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    if tss == 0.0 {
        return Err(Error::degenerate("y", "zero variance"));
    }
    Ok(OlsFit {
        coefficients,
        rmse: (rss / n as f64).sqrt(),
        r_squared: 1.0 - rss / tss,
    })
}

/// Greedy forward selection minimising the training RMSE of an OLS fit on
/// the selected features plus each candidate. Ties go to the lowest index.
pub fn wrapper_greedy(x: &DataMatrix, y: &[f64], t: usize) -> Result<Vec<usize>> {
    let n = x.ncols();
    if t > n {
        return Err(Error::TooManyFeatures { t, n });
    }
    let mut selected: Vec<usize> = Vec::with_capacity(t);
    let mut remaining: Vec<usize> = (0..n).collect();
    while selected.len() < t {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &cand) in remaining.iter().enumerate() {
            let cols: Vec<usize> = selected
                .iter()
                .copied()
                .chain(std::iter::once(cand))
                .collect();
            let fit = match ols_fit_values(&x.values().select_columns(cols.iter()), y) {
                Ok(fit) => fit,
                Err(Error::Degenerate { block, .. }) if block == "design" => continue,
                Err(e) => return Err(e),
            };
            if best.is_none_or(|(_, rmse)| fit.rmse < rmse) {
                best = Some((pos, fit.rmse));
            }
        }
        let (pos, _) = best.ok_or(Error::NoInformativeCandidate {
            selected: selected.len(),
        })?;
        selected.push(remaining.remove(pos));
    }
    Ok(selected)
}
