//! The density-matrix type shared by every reconstruction path, plus the
//! named target states used by the CLI.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use crate::error::{Result, TomoError};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};

/// Hermiticity and trace tolerance for [`DensityMatrix`].
pub const STATE_TOL: f64 = 1e-8;

/// A Hermitian, unit-trace `2^n x 2^n` matrix.
///
/// Positivity is deliberately not part of the type: linear-inversion output
/// can have negative eigenvalues. Use [`crate::qst::is_physical`] to check it.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n_qubits = qubit_count(matrix.dim())?;
        let deviation = matrix.hermiticity_error();
        if deviation > STATE_TOL {
            return Err(TomoError::NotHermitian { deviation });
        }
        let trace = matrix.trace();
        if (trace - ONE).norm() > STATE_TOL {
            return Err(TomoError::NotNormalized { trace: trace.re });
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Divides a Hermitian matrix by its trace before validating it.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let trace = matrix.trace().re;
        if trace.abs() < 1e-300 {
            return Err(TomoError::NotNormalized { trace });
        }
        Self::new(matrix.scale_real(1.0 / trace))
    }

    /// Skips validation; callers guarantee Hermiticity and unit trace.
    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << n_qubits);
        Self { n_qubits, matrix }
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm < 1e-300 {
            return Err(TomoError::ZeroNorm);
        }
        Self::new(ComplexMatrix::outer(amplitudes).scale_real(1.0 / norm))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self::from_parts_unchecked(
            n_qubits,
            ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        )
    }

    /// Computational basis state; bit `n-1-k` of `index` is qubit `k`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1 << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut m = ComplexMatrix::zeros(dim);
        m[(index, index)] = ONE;
        Self::from_parts_unchecked(n_qubits, m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `(1-w) * self + w * other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(TomoError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let m = &self.matrix.scale_real(1.0 - w) + &other.matrix.scale_real(w);
        Ok(Self::from_parts_unchecked(self.n_qubits, m))
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(TomoError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let ev = crate::linalg::eigenvalues(&diff)?;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

pub(crate) fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(TomoError::DimensionMismatch {
            expected: dim.next_power_of_two(),
            found: dim,
        });
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Target states addressable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    /// `|0...0>` on any number of qubits.
    Zero,
    /// `(|00> + |01>)/sqrt2`.
    PlusPair,
    /// `(|01> + |10>)/sqrt2`.
    BellPsiPlus,
    /// `(|00> + |11>)/sqrt2`.
    BellPhiPlus,
    /// `(i|001> + |010> + |100>)/sqrt3`.
    W3,
}

impl NamedState {
    pub const ALL: [NamedState; 5] = [
        NamedState::Zero,
        NamedState::PlusPair,
        NamedState::BellPsiPlus,
        NamedState::BellPhiPlus,
        NamedState::W3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedState::Zero => "zero",
            NamedState::PlusPair => "plus-pair",
            NamedState::BellPsiPlus => "bell-psi+",
            NamedState::BellPhiPlus => "bell-phi+",
            NamedState::W3 => "w3",
        }
    }

    /// Natural qubit count; `Zero` defaults to two.
    pub fn default_qubits(self) -> usize {
        match self {
            NamedState::W3 => 3,
            _ => 2,
        }
    }

    pub fn amplitudes(self, n_qubits: usize) -> Result<Vec<C64>> {
        let expect = |n: usize| {
            if n_qubits == n {
                Ok(())
            } else {
                Err(TomoError::UnsupportedDimension {
                    expected: n,
                    found: n_qubits,
                })
            }
        };
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Ok(match self {
            NamedState::Zero => {
                if n_qubits == 0 {
                    return Err(TomoError::InvalidArgument("zero qubits".into()));
                }
                let mut v = vec![ZERO; 1 << n_qubits];
                v[0] = ONE;
                v
            }
            NamedState::PlusPair => {
                expect(2)?;
                vec![h, h, ZERO, ZERO]
            }
            NamedState::BellPsiPlus => {
                expect(2)?;
                vec![ZERO, h, h, ZERO]
            }
            NamedState::BellPhiPlus => {
                expect(2)?;
                vec![h, ZERO, ZERO, h]
            }
            NamedState::W3 => {
                expect(3)?;
                let a = 1.0 / 3f64.sqrt();
                let mut v = vec![ZERO; 8];
                v[0b001] = C64::new(0.0, a);
                v[0b010] = C64::new(a, 0.0);
                v[0b100] = C64::new(a, 0.0);
                v
            }
        })
    }

    pub fn density_matrix(self, n_qubits: usize) -> Result<DensityMatrix> {
        DensityMatrix::pure(&self.amplitudes(n_qubits)?)
    }

    pub fn default_density_matrix(self) -> DensityMatrix {
        self.density_matrix(self.default_qubits())
            .expect("default qubit count is always valid")
    }
}

impl FromStr for NamedState {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        NamedState::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| TomoError::UnknownState(s.to_string()))
    }
}
