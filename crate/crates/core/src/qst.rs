//! Linear-inversion tomography.
//!
//! Plugs measured expectation values straight into the Pauli expansion. The
//! result is Hermitian with unit trace but is not repaired when noise drives
//! eigenvalues negative.

use crate::error::Result;
use crate::linalg::{self, ComplexMatrix};
use crate::pauli::PauliString;
use crate::sim::{ExpectationSet, PHYSICAL_TOL};
use crate::state::DensityMatrix;

/// `rho = 2^-n (I + sum_P e[P] P)`. Every non-identity string must be present.
pub fn reconstruct_linear(e: &ExpectationSet) -> Result<DensityMatrix> {
    e.ensure_complete()?;
    let n = e.n_qubits();
    let dim = 1usize << n;
    let mut m = ComplexMatrix::identity(dim);
    for (p, r) in e.iter() {
        accumulate(&mut m, p, r.value);
    }
    Ok(DensityMatrix::from_parts_unchecked(
        n,
        m.scale_real(1.0 / dim as f64),
    ))
}

fn accumulate(m: &mut ComplexMatrix, p: &PauliString, value: f64) {
    let mask = p.flip_mask();
    for col in 0..m.dim() {
        m[(col ^ mask, col)] += p.column_phase(col) * value;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalityReport {
    pub physical: bool,
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// Descending.
    pub spectrum: Vec<f64>,
}

/// Whether the smallest eigenvalue is at least `-1e-9` and the trace is 1.
pub fn is_physical(rho: &DensityMatrix) -> Result<PhysicalityReport> {
    let spectrum = linalg::eigenvalues(rho.matrix())?;
    let min_eigenvalue = *spectrum.last().expect("nonempty");
    let trace = rho.matrix().trace().re;
    Ok(PhysicalityReport {
        physical: min_eigenvalue >= -PHYSICAL_TOL && (trace - 1.0).abs() <= 1e-8,
        min_eigenvalue,
        trace,
        spectrum,
    })
}
