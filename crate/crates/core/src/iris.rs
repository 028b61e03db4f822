//! Seven-instance iris sample with the published intermediate values of a
//! full three-feature selection, used as a golden fixture.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::correlation::cca;
use crate::dataset::EncodedDataset;
use crate::error::Result;
use crate::matrix::DataMatrix;
use crate::selector::{Mode, SelectionState};

pub const CSV: &str = include_str!("../data/iris7.csv");

pub const FEATURE_NAMES: [&str; 4] = ["sepal length", "sepal width", "petal length", "petal width"];

const FEATURES: [[f64; 4]; 7] = [
    [5.1, 3.5, 1.4, 0.2],
    [4.9, 3.0, 1.4, 0.2],
    [7.0, 3.2, 4.7, 1.4],
    [6.4, 3.2, 4.5, 1.5],
    [6.3, 3.3, 6.0, 2.5],
    [5.8, 2.7, 5.1, 1.9],
    [7.1, 3.0, 5.9, 2.1],
];

/// Published candidate gains per iteration, candidates in original order.
pub const EXPECTED_GAINS: [&[f64]; 3] = [
    &[0.7628, 0.2264, 0.9779, 0.9604],
    &[0.4458, 0.0841, 0.4644],
    &[0.0382, 0.1108],
];

pub const EXPECTED_ORDER: [&str; 3] = ["petal length", "petal width", "sepal width"];

/// Squared canonical correlations of the selected triple.
pub const EXPECTED_R_SQUARED: [f64; 2] = [0.9905, 0.5626];

pub const EXPECTED_SSC: f64 = 1.5531;

/// The values are printed to four decimals.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

pub fn features() -> DataMatrix {
    let values = DMatrix::from_fn(7, 4, |r, c| FEATURES[r][c]);
    DataMatrix::new(
        values,
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    )
    .expect("fixture is finite")
}

/// Dummy-encoded species: setosa (1, 0), versicolor (0, 1), virginica (0, 0).
pub fn responses() -> DataMatrix {
    let species = [0, 0, 1, 1, 2, 2, 2];
    let values = DMatrix::from_fn(7, 2, |r, c| if species[r] == c { 1.0 } else { 0.0 });
    DataMatrix::new(values, vec!["setosa".into(), "versicolor".into()]).expect("fixture is finite")
}

pub fn dataset() -> EncodedDataset {
    EncodedDataset::from_matrices(features(), responses()).expect("fixture shapes agree")
}

/// The published 7x6 orthonormal basis (one particular sign convention).
pub fn printed_basis() -> DMatrix<f64> {
    let cols: [[f64; 7]; 6] = [
        [-0.5724, -0.5810, 0.1497, 0.0927, 0.3680, 0.1695, 0.3736],
        [0.0263, 0.1509, -0.6540, -0.4183, 0.4083, 0.4540, 0.0327],
        [0.3015, -0.0626, 0.0298, -0.4881, 0.0159, -0.4662, 0.6697],
        [0.3769, -0.3212, -0.0979, 0.1931, 0.6321, -0.4206, -0.3625],
        [0.5397, -0.6196, 0.0554, -0.0855, -0.3155, 0.4621, -0.0366],
        [0.0668, -0.0759, -0.6273, 0.6251, -0.2359, -0.1207, 0.3679],
    ];
    DMatrix::from_fn(7, 6, |r, c| cols[c][r])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

impl Check {
    fn numeric(label: String, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            label,
            expected: format!("{expected:.4}"),
            actual: format!("{actual:.6}"),
            passed: (actual - expected).abs() <= tolerance,
        }
    }
}

/// Replays the walkthrough with the given engine and compares every
/// published value within `tolerance`.
pub fn verify(mode: Option<Mode>, tolerance: f64) -> Result<Vec<Check>> {
    let data = dataset();
    let mut state = SelectionState::init(&data, mode)?;
    let mut checks = Vec::new();
    for (iteration, expected) in EXPECTED_GAINS.iter().enumerate() {
        let breakdown = state.evaluate_candidates()?;
        if breakdown.candidates.len() != expected.len() {
            checks.push(Check {
                label: format!("iteration {iteration} candidate count"),
                expected: expected.len().to_string(),
                actual: breakdown.candidates.len().to_string(),
                passed: false,
            });
        }
        for (cand, &e) in breakdown.candidates.iter().zip(expected.iter()) {
            checks.push(Check::numeric(
                format!(
                    "iteration {iteration} gain of {}",
                    FEATURE_NAMES[cand.index]
                ),
                e,
                cand.increment,
                tolerance,
            ));
        }
        state.select_next()?;
    }

    let order: Vec<&str> = state.selected().iter().map(|&i| FEATURE_NAMES[i]).collect();
    checks.push(Check {
        label: "selection order".into(),
        expected: EXPECTED_ORDER.join(", "),
        actual: order.join(", "),
        passed: order == EXPECTED_ORDER,
    });

    let chosen = features().select_columns(state.selected())?;
    let res = cca(&chosen, &responses())?;
    for (k, (&e, &a)) in EXPECTED_R_SQUARED.iter().zip(&res.r_squared).enumerate() {
        checks.push(Check::numeric(format!("R_{}^2", k + 1), e, a, tolerance));
    }
    checks.push(Check::numeric(
        "SSC by definition".into(),
        EXPECTED_SSC,
        res.ssc(),
        tolerance,
    ));
    checks.push(Check::numeric(
        "SSC by accumulated gains".into(),
        EXPECTED_SSC,
        state.criterion_total(),
        tolerance,
    ));
    Ok(checks)
}
