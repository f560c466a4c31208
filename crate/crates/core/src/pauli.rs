//! Tensor products of single-qubit Pauli operators and the Pauli expansion
//! `rho = 2^-n * sum_P c_P P` with `c_P = Tr(P rho)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, TomoError};
use crate::linalg::{kron, ComplexMatrix, C64, I, ONE, ZERO};
use crate::state::{DensityMatrix, STATE_TOL};

/// Tolerance on the imaginary part of `Tr(P rho)` before it is discarded.
const IMAG_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: usize) -> Option<Pauli> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let rows = match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        ComplexMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).expect("2x2")
    }

    /// Whether the operator flips the computational basis bit.
    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// `<b xor flip| P |b>` for input bit `b`.
    fn phase(self, bit: bool) -> C64 {
        match (self, bit) {
            (Pauli::I | Pauli::X, _) => ONE,
            (Pauli::Y, false) => I,
            (Pauli::Y, true) => -I,
            (Pauli::Z, false) => ONE,
            (Pauli::Z, true) => -ONE,
        }
    }
}

/// A word over `{I, X, Y, Z}`, one letter per qubit, qubit 0 first.
///
/// Ordering is lexicographic with `I < X < Y < Z`, which is also the order of
/// [`PauliString::index`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self(ops)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self(vec![Pauli::I; n_qubits])
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(n_qubits: usize, mut index: usize) -> Self {
        let mut ops = vec![Pauli::I; n_qubits];
        for slot in ops.iter_mut().rev() {
            *slot = Pauli::ALL[index % 4];
            index /= 4;
        }
        Self(ops)
    }

    /// Base-4 number with qubit 0 as the most significant digit.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &p| acc * 4 + p as usize)
    }

    /// All `4^n` strings in lexicographic order, identity first.
    pub fn all(n_qubits: usize) -> impl Iterator<Item = PauliString> {
        (0..1usize << (2 * n_qubits)).map(move |i| PauliString::from_index(n_qubits, i))
    }

    /// The `4^n - 1` non-identity strings in lexicographic order.
    pub fn non_identity(n_qubits: usize) -> impl Iterator<Item = PauliString> {
        Self::all(n_qubits).skip(1)
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Dense `2^n x 2^n` matrix, the Kronecker product of the letters in order.
    pub fn matrix(&self) -> ComplexMatrix {
        self.0
            .iter()
            .map(|p| p.matrix())
            .reduce(|acc, m| kron(&acc, &m))
            .unwrap_or_else(|| ComplexMatrix::identity(1))
    }

    /// Bit mask of qubits the string flips (qubit 0 is the top bit).
    pub fn flip_mask(&self) -> usize {
        let n = self.0.len();
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |acc, (k, _)| acc | (1 << (n - 1 - k)))
    }

    /// The single nonzero entry of column `col`: `P[col ^ mask, col]`.
    pub fn column_phase(&self, col: usize) -> C64 {
        let n = self.0.len();
        self.0.iter().enumerate().fold(ONE, |acc, (k, p)| {
            acc * p.phase((col >> (n - 1 - k)) & 1 == 1)
        })
    }

    /// `Tr(P m)` using the one-nonzero-per-column structure of `P`.
    pub fn expectation(&self, m: &ComplexMatrix) -> C64 {
        let mask = self.flip_mask();
        (0..m.dim())
            .map(|c| self.column_phase(c) * m[(c, c ^ mask)])
            .sum()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(TomoError::InvalidPauliLabel(s.to_string()));
        }
        s.chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(TomoError::InvalidPauliLabel(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// Dense Pauli matrix for a string.
pub fn pauli_matrix(p: &PauliString) -> ComplexMatrix {
    p.matrix()
}

/// Real expansion coefficients `c_P`, keyed by Pauli string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliCoefficients {
    n_qubits: usize,
    coeffs: BTreeMap<PauliString, f64>,
}

impl PauliCoefficients {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            coeffs: BTreeMap::new(),
        }
    }

    /// Starts from the normalized identity coefficient `c_I = 1`.
    pub fn normalized(n_qubits: usize) -> Self {
        let mut c = Self::new(n_qubits);
        c.coeffs.insert(PauliString::identity(n_qubits), 1.0);
        c
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn insert(&mut self, p: PauliString, value: f64) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(TomoError::DimensionMismatch {
                expected: self.n_qubits,
                found: p.n_qubits(),
            });
        }
        self.coeffs.insert(p, value);
        Ok(())
    }

    pub fn get(&self, p: &PauliString) -> Option<f64> {
        self.coeffs.get(p).copied()
    }

    /// Coefficient by label, zero when absent. Panics on a malformed label.
    pub fn value(&self, label: &str) -> f64 {
        let p: PauliString = label.parse().expect("valid Pauli label");
        self.get(&p).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.coeffs.iter().map(|(p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `c_P = Tr(P rho)` for every Pauli string, identity included.
pub fn expand(rho: &DensityMatrix) -> Result<PauliCoefficients> {
    let n = rho.n_qubits();
    let trace = rho.matrix().trace();
    if (trace - ONE).norm() > STATE_TOL {
        return Err(TomoError::NotNormalized { trace: trace.re });
    }
    let mut out = PauliCoefficients::new(n);
    for p in PauliString::all(n) {
        let z = p.expectation(rho.matrix());
        if z.im.abs() > IMAG_TOL {
            return Err(TomoError::NotHermitian {
                deviation: z.im.abs(),
            });
        }
        out.coeffs.insert(p, z.re);
    }
    Ok(out)
}

/// `rho = 2^-n * sum_P c_P P`; absent non-identity coefficients count as zero.
///
/// The result is Hermitian with unit trace but need not be positive.
pub fn assemble(c: &PauliCoefficients) -> Result<DensityMatrix> {
    let n = c.n_qubits;
    let id = c
        .get(&PauliString::identity(n))
        .ok_or(TomoError::MissingIdentityCoefficient)?;
    if (id - 1.0).abs() > STATE_TOL {
        return Err(TomoError::NotNormalized { trace: id });
    }
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim);
    for (p, v) in c.iter() {
        if v == 0.0 {
            continue;
        }
        let mask = p.flip_mask();
        for col in 0..dim {
            m[(col ^ mask, col)] += p.column_phase(col) * v;
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(
        n,
        m.scale_real(1.0 / dim as f64),
    ))
}
