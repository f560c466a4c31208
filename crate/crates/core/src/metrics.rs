//! Scores for a reconstructed matrix: spectrum, purity, normalized overlap
//! fidelity and the two-qubit entanglement parameter.
//!
//! The functions take any `AsRef<ComplexMatrix>` so they apply equally to
//! validated [`DensityMatrix`] values and to raw published matrices whose
//! trace is off by rounding.

use crate::error::{Result, TomoError};
use crate::linalg::{self, partial_transpose, trace_product, ComplexMatrix};
use crate::sim::PHYSICAL_TOL;
use crate::state::{qubit_count, DensityMatrix};

/// `Tr(a^dagger b) / sqrt(Tr(a^dagger a) Tr(b^dagger b))`, real part.
///
/// Well defined for indefinite matrices, so linear-inversion output can be
/// scored as is.
pub fn fidelity<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: AsRef<ComplexMatrix> + ?Sized,
    B: AsRef<ComplexMatrix> + ?Sized,
{
    let (a, b) = (a.as_ref(), b.as_ref());
    let overlap = trace_product(&a.adjoint(), b)?;
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if na < 1e-300 || nb < 1e-300 {
        return Err(TomoError::ZeroNorm);
    }
    Ok(overlap.re / (na.sqrt() * nb.sqrt()))
}

/// `Tr(rho^2)`. Exceeds 1 for some indefinite matrices.
pub fn purity<M: AsRef<ComplexMatrix> + ?Sized>(rho: &M) -> f64 {
    let m = rho.as_ref();
    trace_product(m, m).expect("square matrix").re
}

/// `max(0, -lambda_min)` of the partial transpose over the second qubit.
pub fn entanglement_eta<M: AsRef<ComplexMatrix> + ?Sized>(rho: &M) -> Result<f64> {
    let m = rho.as_ref();
    let n = qubit_count(m.dim())?;
    if n != 2 {
        return Err(TomoError::UnsupportedDimension {
            expected: 2,
            found: n,
        });
    }
    let pt = partial_transpose(m, 2, 1)?;
    let min = linalg::hermitian_eig(&pt)?.min();
    Ok(if min < 0.0 { -min } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    /// Descending.
    pub spectrum: Vec<f64>,
    pub purity: f64,
    pub fidelity: Option<f64>,
    /// Two-qubit states only.
    pub eta: Option<f64>,
    pub physical: bool,
    pub min_eigenvalue: f64,
}

pub fn report(rho: &DensityMatrix, target: Option<&DensityMatrix>) -> Result<ReconstructionReport> {
    report_matrix(rho.matrix(), target.map(|t| t.matrix()))
}

/// [`report`] for a raw Hermitian matrix.
pub fn report_matrix(
    rho: &ComplexMatrix,
    target: Option<&ComplexMatrix>,
) -> Result<ReconstructionReport> {
    let spectrum = linalg::eigenvalues(rho)?;
    let min_eigenvalue = *spectrum.last().expect("nonempty");
    let trace = rho.trace().re;
    let n = qubit_count(rho.dim())?;
    Ok(ReconstructionReport {
        purity: purity(rho),
        fidelity: target.map(|t| fidelity(t, rho)).transpose()?,
        eta: if n == 2 {
            Some(entanglement_eta(rho)?)
        } else {
            None
        },
        physical: min_eigenvalue >= -PHYSICAL_TOL && (trace - 1.0).abs() <= 1e-8,
        min_eigenvalue,
        spectrum,
    })
}
