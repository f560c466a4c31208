//! Published two-qubit reconstructions of the `(|00> + |01>)/sqrt2` state,
//! transcribed to four decimals. The linear-inversion matrix has negative
//! eigenvalues; the maximum-likelihood matrix is positive but its printed
//! trace is 1.0002 because of rounding.

use crate::linalg::{ComplexMatrix, C64};
use crate::state::DensityMatrix;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Linear-inversion estimate of the plus-pair state, as printed.
pub fn plus_pair_linear_matrix() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![
            c(0.4938, 0.0),
            c(0.5003, 0.0014),
            c(-0.0221, -0.0551),
            c(-0.0102, 0.1282),
        ],
        vec![
            c(0.5003, -0.0014),
            c(0.5062, 0.0),
            c(0.0279, -0.1309),
            c(0.0168, 0.0695),
        ],
        vec![
            c(-0.0221, 0.0551),
            c(0.0279, 0.1309),
            c(-0.0482, 0.0),
            c(0.0030, -0.0378),
        ],
        vec![
            c(-0.0102, -0.1282),
            c(0.0168, -0.0695),
            c(0.0030, 0.0378),
            c(0.0482, 0.0),
        ],
    ])
    .expect("4x4 literal")
}

/// Maximum-likelihood estimate of the plus-pair state, as printed.
pub fn plus_pair_ml_matrix() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![
            c(0.5013, 0.0),
            c(0.4957, 0.0011),
            c(0.0004, 0.0067),
            c(0.0003, 0.0070),
        ],
        vec![
            c(0.4957, -0.0011),
            c(0.4958, 0.0),
            c(0.0004, 0.0067),
            c(0.0003, 0.0070),
        ],
        vec![
            c(0.0004, -0.0067),
            c(0.0004, -0.0067),
            c(0.0014, 0.0),
            c(0.0015, 0.0),
        ],
        vec![
            c(0.0003, -0.0070),
            c(0.0003, -0.0070),
            c(0.0015, 0.0),
            c(0.0017, 0.0),
        ],
    ])
    .expect("4x4 literal")
}

/// The linear-inversion matrix; its printed trace is exactly 1.
pub fn plus_pair_linear() -> DensityMatrix {
    DensityMatrix::new(plus_pair_linear_matrix()).expect("fixture is Hermitian with unit trace")
}

/// The maximum-likelihood matrix divided by its printed trace.
pub fn plus_pair_ml() -> DensityMatrix {
    DensityMatrix::normalized(plus_pair_ml_matrix()).expect("fixture is Hermitian")
}
