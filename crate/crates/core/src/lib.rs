//! Greedy feature selection ranked by the sum of squared canonical
//! correlations (SSC) between the selected features and the responses.
//!
//! The crate provides a definition-based reference engine and two fast
//! engines that keep the criterion additive over orthogonalised candidates:
//! one on the centred data and one in the coordinates of a shared
//! orthonormal basis. See [`selector`] for the algorithm.
//!
//! ```
//! use ccffs::{iris, selector};
//!
//! let report = selector::run(&iris::dataset(), 3, None).unwrap();
//! assert_eq!(report.indices(), vec![2, 3, 1]);
//! ```

pub mod bench;
pub mod cli;
pub mod correlation;
pub mod dataset;
pub mod error;
pub mod iris;
pub mod matrix;
pub mod parallel;
pub mod regression;
pub mod selector;

pub use nalgebra;

pub use correlation::{cca, ssc, CcaResult};
pub use dataset::{load_csv, EncodedDataset, LoadOptions};
pub use error::{Error, Result};
pub use matrix::DataMatrix;
pub use selector::{run, Mode, SelectionReport, SelectionState};
