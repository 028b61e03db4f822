//! Definition-based correlation measures: Pearson, multiple and canonical
//! correlation, plus principal angles between column spaces.
//!
//! Canonical correlations are computed from the symmetric form of the
//! eigenproblem: both centred blocks are whitened by a Householder QR and
//! the squared singular values of `Qx' Qy` are the eigenvalues of
//! `Gxx^-1 Gxy Gyy^-1 Gyx`.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::matrix::{center_values, DataMatrix, RANK_TOL};

/// Round-off allowance outside `[0, 1]` before a squared correlation is
/// treated as an internal error rather than clipped.
pub const CLIP_TOL: f64 = 1e-9;

/// Canonical correlation analysis of a pair of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaResult {
    /// Squared canonical correlations, non-increasing.
    pub r_squared: Vec<f64>,
    /// One column of X-weights per canonical pair; `X_C * alpha` has unit norm.
    pub weights_x: DMatrix<f64>,
    /// One column of Y-weights per canonical pair; `Y_C * beta` has unit norm.
    pub weights_y: DMatrix<f64>,
    /// Principal angles in radians, `cos^2(angle_k) = r_squared[k]`.
    pub angles: Vec<f64>,
}

impl CcaResult {
    /// Sum of squared canonical correlations.
    pub fn ssc(&self) -> f64 {
        self.r_squared.iter().sum()
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Dimension("empty vectors".into()));
    }
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 {
        return Err(Error::degenerate("x", "zero variance"));
    }
    if syy == 0.0 {
        return Err(Error::degenerate("y", "zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Squared multiple correlation `R^2(X, y)` from the normal equations.
pub fn multiple_correlation_sq(x: &DataMatrix, y: &[f64]) -> Result<f64> {
    multiple_correlation_sq_values(x.values(), y)
}

pub fn multiple_correlation_sq_values(x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    if y.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "{} responses for {} instances",
            y.len(),
            x.nrows()
        )));
    }
    let xc = center_values(x).into_values();
    let yc = center_values(&DMatrix::from_column_slice(y.len(), 1, y)).into_values();
    let yy = yc.norm_squared();
    if yy == 0.0 {
        return Err(Error::degenerate("y", "zero variance"));
    }
    let gram = xc.transpose() * &xc;
    // Normal equations square the condition number, so the pivot test is
    // looser than RANK_TOL.
    let chol = Cholesky::new(gram.clone()).ok_or_else(|| {
        Error::degenerate(
            "X",
            "Gram matrix of the centred columns is not positive definite",
        )
    })?;
    let l = chol.l();
    for i in 0..gram.nrows() {
        if l[(i, i)] <= 1e-7 * gram[(i, i)].sqrt() {
            return Err(Error::degenerate(
                "X",
                format!("centred column {i} is linearly dependent on earlier columns"),
            ));
        }
    }
    let xty = xc.transpose() * &yc;
    let alpha = chol.solve(&xty);
    let explained = (xty.transpose() * alpha)[(0, 0)];
    Ok((explained / yy).clamp(0.0, 1.0))
}

/// Thin orthonormal factor of a centred block, with a rank check.
fn whiten(block: &str, centred: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (rows, cols) = centred.shape();
    if cols == 0 {
        return Err(Error::degenerate(block, "no columns"));
    }
    if cols >= rows {
        return Err(Error::degenerate(
            block,
            format!("{cols} centred columns cannot have full rank with {rows} instances"),
        ));
    }
    let qr = centred.clone().qr();
    let r = qr.r();
    for j in 0..cols {
        let col_norm = centred.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(Error::degenerate(
                block,
                format!("centred column {j} is zero or linearly dependent on earlier columns"),
            ));
        }
    }
    Ok((qr.q(), r))
}

fn clip_unit(value: f64, what: &str) -> Result<f64> {
    if !(-CLIP_TOL..=1.0 + CLIP_TOL).contains(&value) || value.is_nan() {
        return Err(Error::Consistency(format!(
            "{what} {value} lies outside [0, 1] beyond round-off"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Left and right singular vectors of a cross-product.
type CrossFactors = (DMatrix<f64>, DMatrix<f64>);

/// Singular values of `Qa' Qb`, returned as clipped squares in
/// non-increasing order together with the SVD factors.
fn squared_cosines(
    qa: &DMatrix<f64>,
    qb: &DMatrix<f64>,
    vectors: bool,
) -> Result<(Vec<f64>, Option<CrossFactors>)> {
    let cross = qa.transpose() * qb;
    let svd = SVD::new(cross, vectors, vectors);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order
        .iter()
        .map(|&i| {
            let s = svd.singular_values[i];
            clip_unit(s * s, "squared canonical correlation")
        })
        .collect::<Result<Vec<_>>>()?;
    let factors = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) if vectors => {
            let u = u.select_columns(order.iter());
            let v = v_t.transpose().select_columns(order.iter());
            Some((u, v))
        }
        _ => None,
    };
    Ok((values, factors))
}

fn check_rows(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "X has {} instances but Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() <= x.ncols() + y.ncols() {
        log::warn!(
            "canonical correlation with N = {} <= n + m = {}",
            x.nrows(),
            x.ncols() + y.ncols()
        );
    }
    Ok(())
}

pub fn cca(x: &DataMatrix, y: &DataMatrix) -> Result<CcaResult> {
    cca_values(x.values(), y.values())
}

pub fn cca_values(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<CcaResult> {
    check_rows(x, y)?;
    let (qx, rx) = whiten("X", &center_values(x).into_values())?;
    let (qy, ry) = whiten("Y", &center_values(y).into_values())?;
    let (r_squared, factors) = squared_cosines(&qx, &qy, true)?;
    let (u, v) = factors.ok_or_else(|| Error::Consistency("SVD returned no vectors".into()))?;
    let weights_x = rx
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::degenerate("X", "singular triangular factor"))?;
    let weights_y = ry
        .solve_upper_triangular(&v)
        .ok_or_else(|| Error::degenerate("Y", "singular triangular factor"))?;
    let angles = r_squared.iter().map(|r2| r2.sqrt().acos()).collect();
    Ok(CcaResult {
        r_squared,
        weights_x,
        weights_y,
        angles,
    })
}

/// Sum of squared canonical correlations of `(X, Y)`.
pub fn ssc(x: &DataMatrix, y: &DataMatrix) -> Result<f64> {
    ssc_values(x.values(), y.values())
}

pub fn ssc_values(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    check_rows(x, y)?;
    let (qx, _) = whiten("X", &center_values(x).into_values())?;
    let (qy, _) = whiten("Y", &center_values(y).into_values())?;
    let (values, _) = squared_cosines(&qx, &qy, false)?;
    Ok(values.iter().sum())
}

/// Principal angles between `range(A)` and `range(B)` in ascending order.
/// No centring is applied.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(principal_cos_sq(a, b)?
        .into_iter()
        .map(|c2| c2.sqrt().acos())
        .collect())
}

/// Squared cosines of the principal angles, non-increasing.
pub fn principal_cos_sq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "A has {} rows but B has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let qa = orthonormal_range("A", a)?;
    let qb = orthonormal_range("B", b)?;
    Ok(squared_cosines(&qa, &qb, false)?.0)
}

fn orthonormal_range(block: &str, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if cols == 0 || cols > rows {
        return Err(Error::degenerate(
            block,
            format!("{rows}x{cols} matrix cannot have full column rank"),
        ));
    }
    let qr = m.clone().qr();
    let r = qr.r();
    for j in 0..cols {
        let col_norm = m.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(Error::degenerate(
                block,
                format!("column {j} is zero or linearly dependent on earlier columns"),
            ));
        }
    }
    Ok(qr.q())
}

/// Convenience for vectors: `R^2` between a single column and a block.
pub fn column_block_r_squared(x: &DVector<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let x = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    ssc_values(&x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iris;
    use crate::matrix::{coordinates, hconcat, orthonormal_basis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random::<f64>())
    }

    /// Eigenvalue trace of `Gxx^-1 Gxy Gyy^-1 Gyx` using explicit inverses.
    fn trace_oracle(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let xc = center_values(x).into_values();
        let yc = center_values(y).into_values();
        let gxx = (xc.transpose() * &xc).try_inverse().unwrap();
        let gyy = (yc.transpose() * &yc).try_inverse().unwrap();
        let gxy = xc.transpose() * &yc;
        (gxx * &gxy * gyy * gxy.transpose()).trace()
    }

    /// Pearson via the textbook covariance formula with divisor N - 1.
    fn covariance_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / (n - 1.0);
        let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        cov / (sx * sy)
    }

    #[test]
    fn pearson_self_and_negation() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_matches_covariance_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        assert!((pearson(&x, &y).unwrap() - covariance_oracle(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_constant() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn multiple_correlation_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_matrix(&mut rng, 20, 3);
        let y: Vec<f64> = x.column(1).iter().copied().collect();
        assert!((multiple_correlation_sq_values(&x, &y).unwrap() - 1.0).abs() < 1e-10);

        // y orthogonal to every centred column of X.
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let y = [1.0, -1.0, 1.0, -1.0];
        assert!(multiple_correlation_sq_values(&x, &y).unwrap().abs() < 1e-15);
    }

    #[test]
    fn multiple_correlation_rejects_rank_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(&mut rng, 10, 2);
        let x = hconcat(&a, &a.columns(0, 1).into_owned());
        let y: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        assert!(matches!(
            multiple_correlation_sq_values(&x, &y),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn iris_selected_triple() {
        let x = iris::features().select_columns(&[2, 3, 1]).unwrap();
        let res = cca(&x, &iris::responses()).unwrap();
        assert_eq!(res.r_squared.len(), 2);
        assert!((res.r_squared[0] - 0.9905).abs() < 5e-5);
        assert!((res.r_squared[1] - 0.5626).abs() < 5e-5);
        assert!((res.ssc() - 1.5531).abs() < 1e-4);
        assert!((ssc(&x, &iris::responses()).unwrap() - 1.5531).abs() < 1e-4);
    }

    #[test]
    fn cca_of_identical_blocks_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = random_matrix(&mut rng, 12, 3);
        let res = cca_values(&x, &x).unwrap();
        for r2 in &res.r_squared {
            assert!((r2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cca_matches_trace_formula_and_normalises_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let x = random_matrix(&mut rng, 15, 2);
        let y = random_matrix(&mut rng, 15, 2);
        let res = cca_values(&x, &y).unwrap();
        assert!((res.ssc() - trace_oracle(&x, &y)).abs() < 1e-10);
        assert!((ssc_values(&x, &y).unwrap() - res.ssc()).abs() < 1e-12);
        let xc = center_values(&x).into_values();
        let yc = center_values(&y).into_values();
        let u = &xc * &res.weights_x;
        let v = &yc * &res.weights_y;
        for k in 0..res.r_squared.len() {
            assert!((u.column(k).norm() - 1.0).abs() < 1e-10);
            assert!((v.column(k).norm() - 1.0).abs() < 1e-10);
            let r = u.column(k).dot(&v.column(k));
            assert!((r * r - res.r_squared[k]).abs() < 1e-10);
            assert!((res.angles[k].cos().powi(2) - res.r_squared[k]).abs() < 1e-9);
        }
        assert!(res.r_squared.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ssc_zero_when_blocks_orthogonal() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let y = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 1.0, -1.0]);
        assert!(ssc_values(&x, &y).unwrap().abs() < 1e-15);
    }

    #[test]
    fn cca_rejects_singular_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = random_matrix(&mut rng, 10, 2);
        let x = hconcat(&a, &DMatrix::from_columns(&[a.column(0) + a.column(1)]));
        let y = random_matrix(&mut rng, 10, 1);
        match cca_values(&x, &y) {
            Err(Error::Degenerate { block, .. }) => assert_eq!(block, "X"),
            other => panic!("expected degenerate X, got {other:?}"),
        }
        match cca_values(&y, &DMatrix::from_element(10, 1, 3.0)) {
            Err(Error::Degenerate { block, .. }) => assert_eq!(block, "Y"),
            other => panic!("expected degenerate Y, got {other:?}"),
        }
    }

    #[test]
    fn principal_angle_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 8, 2);
        for angle in principal_angles(&a, &a).unwrap() {
            assert!(angle.abs() < 1e-7);
        }
        let e = DMatrix::from_fn(4, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        let f = DMatrix::from_fn(4, 2, |r, c| if r == c + 2 { 1.0 } else { 0.0 });
        for angle in principal_angles(&e, &f).unwrap() {
            assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn principal_angles_match_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let a = random_matrix(&mut rng, 12, 2);
        let b = random_matrix(&mut rng, 12, 2);
        // Oracle: orthonormalise via SVD left factors, then singular values.
        let ua = SVD::new(a.clone(), true, false).u.unwrap();
        let ub = SVD::new(b.clone(), true, false).u.unwrap();
        let mut s: Vec<f64> = SVD::new(ua.transpose() * ub, false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|x, y| y.total_cmp(x));
        let angles = principal_angles(&a, &b).unwrap();
        assert!(angles.windows(2).all(|w| w[0] <= w[1]));
        for (theta, sv) in angles.iter().zip(s) {
            assert!((theta - sv.min(1.0).acos()).abs() < 1e-9);
        }
    }

    #[test]
    fn iris_correlations_are_coordinate_cosines() {
        let xc = center_values(iris::features().values()).into_values();
        let yc = center_values(iris::responses().values()).into_values();
        let u = orthonormal_basis(&hconcat(&xc, &yc), 6).unwrap();
        let fx = coordinates(&xc, &u).unwrap();
        let fy = coordinates(&yc, &u).unwrap();
        let via_angles = principal_cos_sq(&fx, &fy).unwrap();
        let via_cca = cca(&iris::features(), &iris::responses()).unwrap();
        for (a, b) in via_angles.iter().zip(&via_cca.r_squared) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
            (1usize..=4, 1usize..=4, 0usize..=20).prop_flat_map(|(n, m, extra)| {
                let rows = n + m + 2 + extra;
                (
                    proptest::collection::vec(0.0f64..1.0, rows * n),
                    proptest::collection::vec(0.0f64..1.0, rows * m),
                )
                    .prop_map(move |(a, b)| {
                        (DMatrix::from_vec(rows, n, a), DMatrix::from_vec(rows, m, b))
                    })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn symmetric_and_bounded((x, y) in pair()) {
                let xy = ssc_values(&x, &y).unwrap();
                let yx = ssc_values(&y, &x).unwrap();
                prop_assert!((xy - yx).abs() < 1e-9);
                prop_assert!(xy >= 0.0);
                prop_assert!(xy <= x.ncols().min(y.ncols()) as f64 + 1e-9);
            }

            #[test]
            fn invariant_under_invertible_mixing((x, y) in pair(), seed in 0u64..1000) {
                use rand::Rng as _;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = x.ncols();
                let mix = DMatrix::from_fn(n, n, |r, c| {
                    rng.random::<f64>() - 0.5 + if r == c { 2.0 } else { 0.0 }
                });
                let before = cca_values(&x, &y).unwrap().r_squared;
                let after = cca_values(&(&x * mix), &y).unwrap().r_squared;
                for (a, b) in before.iter().zip(&after) {
                    prop_assert!((a - b).abs() < 1e-8);
                }
            }

            #[test]
            fn single_response_reduces_to_multiple_correlation((x, y) in pair()) {
                let y1: Vec<f64> = y.column(0).iter().copied().collect();
                let res = cca_values(&x, &y.columns(0, 1).into_owned()).unwrap();
                prop_assert_eq!(res.r_squared.len(), 1);
                let r2 = multiple_correlation_sq_values(&x, &y1).unwrap();
                prop_assert!((res.r_squared[0] - r2).abs() < 1e-10);
            }
        }
    }
}
