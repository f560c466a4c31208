//! Random matrices and states for tests and Monte-Carlo studies.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, C64};
use crate::mle::TParams;
use crate::state::DensityMatrix;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

/// Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Haar-random pure state vector.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Random state of the given rank, `G G^dagger / Tr` with `G` a `dim x rank`
/// complex Ginibre matrix. `rank = dim` gives full-rank mixed states.
pub fn random_density_matrix<R: Rng + ?Sized>(
    n_qubits: usize,
    rank: usize,
    rng: &mut R,
) -> DensityMatrix {
    let dim = 1 << n_qubits;
    assert!((1..=dim).contains(&rank), "rank out of range");
    let g: Vec<Vec<C64>> = (0..dim)
        .map(|_| (0..rank).map(|_| complex_gaussian(rng)).collect())
        .collect();
    let m = ComplexMatrix::from_fn(dim, |i, j| {
        (0..rank).map(|k| g[i][k] * g[j][k].conj()).sum()
    });
    DensityMatrix::normalized(m).expect("Ginibre product is Hermitian with positive trace")
}

/// Random pure state as a density matrix.
pub fn random_pure_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    random_density_matrix(n_qubits, 1, rng)
}

/// Random product state `|a_1> ... |a_n>`.
pub fn random_product_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let mut amps = vec![C64::new(1.0, 0.0)];
    for _ in 0..n_qubits {
        let q = random_pure_vector(2, rng);
        amps = amps
            .iter()
            .flat_map(|a| q.iter().map(move |b| a * b))
            .collect();
    }
    DensityMatrix::pure(&amps).expect("nonzero amplitudes")
}

/// Parameter vector with standard normal entries.
pub fn random_tparams<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> TParams {
    let len = 1 << (2 * n_qubits);
    TParams::new(n_qubits, (0..len).map(|_| gaussian(rng)).collect())
        .expect("length matches qubit count")
}
