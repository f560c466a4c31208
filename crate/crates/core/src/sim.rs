//! Synthetic measurement data: ideal Pauli expectations, Gaussian noise,
//! NMR readout rotations and toy decoherence channels.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, TomoError};
use crate::linalg::{self, kron, ComplexMatrix, C64, I};
use crate::pauli::{Pauli, PauliString};
use crate::state::DensityMatrix;

/// Tolerance on the smallest eigenvalue for an input to count as physical.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Sigma attached to ideal expectation values when the caller has no better
/// estimate.
pub const DEFAULT_SIGMA: f64 = 1.0;

/// Name of the pseudo-random generator behind [`add_noise`].
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha, seed_from_u64)";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub value: f64,
    pub sigma: f64,
}

/// Measured Pauli expectation values with their standard deviations.
///
/// The identity string is implicit (its value is always 1) and cannot be
/// stored.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationSet {
    n_qubits: usize,
    records: BTreeMap<PauliString, Record>,
}

impl ExpectationSet {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            records: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn insert(&mut self, p: PauliString, value: f64, sigma: f64) -> Result<()> {
        let label = || p.to_string();
        if p.n_qubits() != self.n_qubits {
            return Err(TomoError::InvalidRecord {
                label: label(),
                reason: format!("expected {} qubits", self.n_qubits),
            });
        }
        if p.is_identity() {
            return Err(TomoError::InvalidRecord {
                label: label(),
                reason: "identity expectation is fixed at 1".into(),
            });
        }
        if !value.is_finite() {
            return Err(TomoError::InvalidRecord {
                label: label(),
                reason: format!("non-finite value {value}"),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(TomoError::ZeroSigma {
                label: label(),
                sigma,
            });
        }
        self.records.insert(p, Record { value, sigma });
        Ok(())
    }

    pub fn get(&self, p: &PauliString) -> Option<Record> {
        self.records.get(p).copied()
    }

    /// Value by label. Panics on a malformed or absent label.
    pub fn value(&self, label: &str) -> f64 {
        let p: PauliString = label.parse().expect("valid Pauli label");
        self.records[&p].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Record)> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Non-identity strings without a record, in lexicographic order.
    pub fn missing(&self) -> Vec<PauliString> {
        PauliString::non_identity(self.n_qubits)
            .filter(|p| !self.records.contains_key(p))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == (1 << (2 * self.n_qubits)) - 1
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(TomoError::IncompleteSet {
                missing: self.missing(),
            })
        }
    }

    /// Replaces every sigma.
    pub fn with_uniform_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(TomoError::ZeroSigma {
                label: "*".into(),
                sigma,
            });
        }
        for r in self.records.values_mut() {
            r.sigma = sigma;
        }
        Ok(self)
    }

    /// Entrywise average of two sets over the same strings; sigmas from `self`.
    pub fn average(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits || self.records.len() != other.records.len() {
            return Err(TomoError::DimensionMismatch {
                expected: self.records.len(),
                found: other.records.len(),
            });
        }
        let mut out = self.clone();
        for (p, r) in out.records.iter_mut() {
            let o = other.get(p).ok_or_else(|| TomoError::IncompleteSet {
                missing: vec![p.clone()],
            })?;
            r.value = 0.5 * (r.value + o.value);
        }
        Ok(out)
    }
}

/// Smallest eigenvalue and trace check shared by the physical-input guards.
pub(crate) fn require_physical(rho: &DensityMatrix) -> Result<()> {
    let min = linalg::hermitian_eig(rho.matrix())?.min();
    let trace = rho.matrix().trace().re;
    if min < -PHYSICAL_TOL || (trace - 1.0).abs() > 1e-8 {
        return Err(TomoError::NotPhysicalState {
            min_eigenvalue: min,
            trace,
        });
    }
    Ok(())
}

/// Noise-free `Tr(P rho)` for all non-identity strings, each with `sigma`.
pub fn ideal_expectations(rho: &DensityMatrix, sigma: f64) -> Result<ExpectationSet> {
    require_physical(rho)?;
    expectations_unchecked(rho, sigma)
}

/// Like [`ideal_expectations`] but accepts indefinite matrices, e.g. a
/// published linear-inversion estimate.
pub fn expectations_unchecked(rho: &DensityMatrix, sigma: f64) -> Result<ExpectationSet> {
    let n = rho.n_qubits();
    let mut set = ExpectationSet::new(n);
    for p in PauliString::non_identity(n) {
        let value = p.expectation(rho.matrix()).re;
        set.insert(p, value, sigma)?;
    }
    Ok(set)
}

/// Uniform Gaussian noise on every expectation value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    sigma: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(TomoError::InvalidArgument(format!(
                "noise sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Adds an independent `N(0, sigma^2)` draw to each value, visiting records in
/// lexicographic order. Values are not clamped; sigmas become `spec.sigma`.
pub fn add_noise(e: &ExpectationSet, spec: NoiseSpec) -> ExpectationSet {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.sigma).expect("sigma validated in NoiseSpec");
    let mut out = e.clone();
    for r in out.records.values_mut() {
        r.value += normal.sample(&mut rng);
        r.sigma = spec.sigma;
    }
    out
}

/// Per-qubit rotation applied before acquisition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rotation {
    None,
    /// `exp(-i pi sigma_x / 4)`
    X90,
    /// `exp(-i pi sigma_y / 4)`
    Y90,
}

impl Rotation {
    pub fn unitary(self) -> ComplexMatrix {
        let c = C64::new(FRAC_1_SQRT_2, 0.0);
        let generator = match self {
            Rotation::None => return ComplexMatrix::identity(2),
            Rotation::X90 => Pauli::X.matrix(),
            Rotation::Y90 => Pauli::Y.matrix(),
        };
        // cos(pi/4) I - i sin(pi/4) sigma
        &ComplexMatrix::identity(2).scale(c) - &generator.scale(I * c)
    }

    /// `U^dagger P U = sign * P'` for this rotation.
    pub fn heisenberg(self, p: Pauli) -> (f64, Pauli) {
        match (self, p) {
            (Rotation::None, p) | (_, p @ Pauli::I) => (1.0, p),
            (Rotation::X90, Pauli::X) => (1.0, Pauli::X),
            (Rotation::X90, Pauli::Y) => (-1.0, Pauli::Z),
            (Rotation::X90, Pauli::Z) => (1.0, Pauli::Y),
            (Rotation::Y90, Pauli::X) => (1.0, Pauli::Z),
            (Rotation::Y90, Pauli::Y) => (1.0, Pauli::Y),
            (Rotation::Y90, Pauli::Z) => (-1.0, Pauli::X),
        }
    }

    fn letter(self) -> char {
        match self {
            Rotation::None => 'I',
            Rotation::X90 => 'X',
            Rotation::Y90 => 'Y',
        }
    }
}

/// One readout setting: a rotation per qubit, e.g. `IX` = nothing on qubit 0
/// and a 90-degree x pulse on qubit 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadoutPulse(Vec<Rotation>);

impl ReadoutPulse {
    pub fn new(rotations: Vec<Rotation>) -> Self {
        Self(rotations)
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.0
    }

    pub fn unitary(&self) -> ComplexMatrix {
        self.0
            .iter()
            .map(|r| r.unitary())
            .reduce(|acc, u| kron(&acc, &u))
            .unwrap_or_else(|| ComplexMatrix::identity(1))
    }

    /// The four two-qubit settings `II`, `IX`, `IY`, `XX`.
    pub fn two_qubit_settings() -> Vec<ReadoutPulse> {
        use Rotation::{None as N, X90, Y90};
        vec![
            ReadoutPulse(vec![N, N]),
            ReadoutPulse(vec![N, X90]),
            ReadoutPulse(vec![N, Y90]),
            ReadoutPulse(vec![X90, X90]),
        ]
    }
}

impl fmt::Display for ReadoutPulse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.0 {
            write!(f, "{}", r.letter())?;
        }
        Ok(())
    }
}

/// `U rho U^dagger` for the pulse's tensor-product rotation.
pub fn apply_readout(rho: &DensityMatrix, pulse: &ReadoutPulse) -> Result<DensityMatrix> {
    if pulse.n_qubits() != rho.n_qubits() {
        return Err(TomoError::DimensionMismatch {
            expected: rho.n_qubits(),
            found: pulse.n_qubits(),
        });
    }
    let u = pulse.unitary();
    let out = &(&u * rho.matrix()) * &u.adjoint();
    Ok(DensityMatrix::from_parts_unchecked(rho.n_qubits(), out))
}

/// Expectation values extracted from one readout setting.
///
/// After the pulse, the spectrum of qubit `k` gives the transverse terms
/// `sigma_x` and `sigma_y` on `k` times `I` or `sigma_z` on every other qubit.
/// Each observed operator is mapped back through the pulse to the Pauli string
/// it measures on the pre-pulse state.
pub fn readout_expectations(
    rho: &DensityMatrix,
    pulse: &ReadoutPulse,
) -> Result<Vec<(PauliString, f64)>> {
    let rotated = apply_readout(rho, pulse)?;
    let n = rho.n_qubits();
    let mut out = Vec::new();
    for k in 0..n {
        for transverse in [Pauli::X, Pauli::Y] {
            for others in 0..1usize << (n - 1) {
                let mut observed = Vec::with_capacity(n);
                let mut bit = 0;
                for q in 0..n {
                    if q == k {
                        observed.push(transverse);
                    } else {
                        let z = (others >> bit) & 1 == 1;
                        observed.push(if z { Pauli::Z } else { Pauli::I });
                        bit += 1;
                    }
                }
                let observed = PauliString::new(observed);
                let value = observed.expectation(rotated.matrix()).re;
                let mut sign = 1.0;
                let mut source = Vec::with_capacity(n);
                for (rot, &p) in pulse.rotations().iter().zip(observed.ops()) {
                    let (s, q) = rot.heisenberg(p);
                    sign *= s;
                    source.push(q);
                }
                out.push((PauliString::new(source), sign * value));
            }
        }
    }
    Ok(out)
}

/// Merges the observables of several readout settings into one set; repeated
/// strings are averaged.
pub fn readout_expectation_set(
    rho: &DensityMatrix,
    pulses: &[ReadoutPulse],
    sigma: f64,
) -> Result<ExpectationSet> {
    let mut sums: BTreeMap<PauliString, (f64, usize)> = BTreeMap::new();
    for pulse in pulses {
        for (p, v) in readout_expectations(rho, pulse)? {
            let e = sums.entry(p).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let mut set = ExpectationSet::new(rho.n_qubits());
    for (p, (sum, count)) in sums {
        set.insert(p, sum / count as f64, sigma)?;
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Dephasing,
    Depolarizing,
}

impl std::str::FromStr for ChannelKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dephasing" => Ok(ChannelKind::Dephasing),
            "depolarizing" => Ok(ChannelKind::Depolarizing),
            other => Err(TomoError::InvalidArgument(format!(
                "unknown channel {other:?}"
            ))),
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::Depolarizing => "depolarizing",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    /// Per second.
    pub rate: f64,
    /// Seconds.
    pub duration: f64,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, rate: f64, duration: f64) -> Result<Self> {
        if !(rate >= 0.0 && duration >= 0.0) {
            return Err(TomoError::InvalidArgument(format!(
                "rate and duration must be nonnegative, got {rate}, {duration}"
            )));
        }
        Ok(Self {
            kind,
            rate,
            duration,
        })
    }

    /// `exp(-rate * duration)`, with `inf * 0` taken as no decay.
    pub fn survival(&self) -> f64 {
        if self.duration == 0.0 || self.rate == 0.0 {
            1.0
        } else {
            (-self.rate * self.duration).exp()
        }
    }
}

/// Applies the channel for its duration.
///
/// Dephasing damps each off-diagonal element by `survival` once per qubit
/// whose bit differs between row and column. Depolarizing mixes toward
/// `I/2^n` with weight `1 - survival`.
pub fn evolve(rho: &DensityMatrix, ch: &ChannelSpec) -> Result<DensityMatrix> {
    require_physical(rho)?;
    let lambda = ch.survival();
    let m = rho.matrix();
    let out = match ch.kind {
        ChannelKind::Dephasing => ComplexMatrix::from_fn(m.dim(), |r, c| {
            m[(r, c)] * lambda.powi((r ^ c).count_ones() as i32)
        }),
        ChannelKind::Depolarizing => {
            let mixed = DensityMatrix::maximally_mixed(rho.n_qubits());
            return rho.mix(&mixed, 1.0 - lambda);
        }
    };
    Ok(DensityMatrix::from_parts_unchecked(rho.n_qubits(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{trace_product, ONE};
    use crate::pauli::assemble;
    use crate::random::{random_density_matrix, random_pure_state};
    use crate::state::NamedState;

    #[test]
    fn ideal_examples() {
        let e = ideal_expectations(&DensityMatrix::basis(2, 0), DEFAULT_SIGMA).unwrap();
        assert_eq!(e.value("ZZ"), 1.0);
        assert_eq!(e.value("XI"), 0.0);
        assert!(e.is_complete());
        assert_eq!(e.get(&"XI".parse().unwrap()).unwrap().sigma, 1.0);

        let e = ideal_expectations(&DensityMatrix::maximally_mixed(2), 0.1).unwrap();
        assert!(e.iter().all(|(_, r)| r.value == 0.0));

        let plus = NamedState::PlusPair.default_density_matrix();
        let e = ideal_expectations(&plus, 1.0).unwrap();
        for label in ["IX", "ZX", "ZI"] {
            let p: PauliString = label.parse().unwrap();
            let oracle = trace_product(&p.matrix(), plus.matrix()).unwrap().re;
            assert!((oracle - 1.0).abs() < 1e-15);
            assert!((e.value(label) - 1.0).abs() < 1e-15, "{label}");
        }
    }

    #[test]
    fn ideal_rejects_unphysical() {
        let q = crate::fixtures::plus_pair_linear();
        assert!(matches!(
            ideal_expectations(&q, 1.0),
            Err(TomoError::NotPhysicalState { .. })
        ));
        assert!(expectations_unchecked(&q, 1.0).unwrap().is_complete());
    }

    #[test]
    fn assembling_ideal_expectations_reproduces_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for n in 1..=3 {
            let rho = random_density_matrix(n, 1 << n, &mut rng);
            let e = ideal_expectations(&rho, 1.0).unwrap();
            let mut c = crate::pauli::PauliCoefficients::normalized(n);
            for (p, r) in e.iter() {
                c.insert(p.clone(), r.value).unwrap();
            }
            assert!(assemble(&c).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn record_validation() {
        let mut e = ExpectationSet::new(2);
        assert!(e.insert("II".parse().unwrap(), 1.0, 1.0).is_err());
        assert!(e.insert("X".parse().unwrap(), 0.0, 1.0).is_err());
        assert!(matches!(
            e.insert("XX".parse().unwrap(), 0.0, 0.0),
            Err(TomoError::ZeroSigma { .. })
        ));
        assert!(e.insert("XX".parse().unwrap(), f64::NAN, 1.0).is_err());
        e.insert("XX".parse().unwrap(), 0.3, 1.0).unwrap();
        assert!(!e.is_complete());
        assert_eq!(e.missing().len(), 14);
        assert!(
            matches!(e.ensure_complete(), Err(TomoError::IncompleteSet { missing }) if missing.len() == 14)
        );
    }

    #[test]
    fn noise_limits_and_determinism() {
        let e = ideal_expectations(&NamedState::BellPhiPlus.default_density_matrix(), 1.0).unwrap();
        let tiny = add_noise(&e, NoiseSpec::new(1e-12, 7).unwrap());
        for ((_, a), (_, b)) in tiny.iter().zip(e.iter()) {
            assert!((a.value - b.value).abs() < 1e-10);
            assert_eq!(a.sigma, 1e-12);
        }
        let spec = NoiseSpec::new(0.05, 99).unwrap();
        let a = add_noise(&e, spec);
        let b = add_noise(&e, spec);
        for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
            assert_eq!(x.value.to_bits(), y.value.to_bits());
        }
        assert_ne!(a, add_noise(&e, NoiseSpec::new(0.05, 100).unwrap()));
        assert!(NoiseSpec::new(0.0, 1).is_err());
    }

    #[test]
    fn noise_sample_std() {
        // 10^4 draws: 667 seeds over the 15 strings of a two-qubit set
        let e = ideal_expectations(&DensityMatrix::maximally_mixed(2), 1.0).unwrap();
        let mut draws = Vec::new();
        for seed in 0..667 {
            let noisy = add_noise(&e, NoiseSpec::new(0.05, seed).unwrap());
            draws.extend(noisy.iter().map(|(_, r)| r.value));
        }
        assert!(draws.len() >= 10_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let std = var.sqrt();
        assert!((std - 0.05).abs() / 0.05 < 0.05, "sample std {std}");
        assert!(mean.abs() < 5.0 * 0.05 / (draws.len() as f64).sqrt());
    }

    #[test]
    fn rotation_unitaries_match_heisenberg_table() {
        for rot in [Rotation::None, Rotation::X90, Rotation::Y90] {
            let u = rot.unitary();
            assert!((&u * &u.adjoint()).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
            for p in Pauli::ALL {
                let conj = &(&u.adjoint() * &p.matrix()) * &u;
                let (s, q) = rot.heisenberg(p);
                assert!(
                    conj.max_abs_diff(&q.matrix().scale_real(s)) < 1e-15,
                    "{rot:?} {p:?}"
                );
            }
        }
    }

    #[test]
    fn readout_examples() {
        let bell = NamedState::BellPhiPlus.default_density_matrix();
        let same = apply_readout(&bell, &ReadoutPulse::new(vec![Rotation::None; 2])).unwrap();
        assert!(same.matrix().max_abs_diff(bell.matrix()) < 1e-15);

        // |0> under X90 points along -y
        let zero = DensityMatrix::basis(1, 0);
        let out = apply_readout(&zero, &ReadoutPulse::new(vec![Rotation::X90])).unwrap();
        let y = "Y"
            .parse::<PauliString>()
            .unwrap()
            .expectation(out.matrix())
            .re;
        assert!((y + 1.0).abs() < 1e-15);

        let pulse = ReadoutPulse::new(vec![Rotation::X90, Rotation::X90]);
        let out = apply_readout(&bell, &pulse).unwrap();
        let yy_after = "YY"
            .parse::<PauliString>()
            .unwrap()
            .expectation(out.matrix())
            .re;
        let zz_before = "ZZ"
            .parse::<PauliString>()
            .unwrap()
            .expectation(bell.matrix())
            .re;
        // oracle: U^dagger (Y x Y) U as an explicit matrix
        let u = pulse.unitary();
        let conj = &(&u.adjoint() * &"YY".parse::<PauliString>().unwrap().matrix()) * &u;
        let oracle = trace_product(&conj, bell.matrix()).unwrap().re;
        assert!((yy_after - zz_before).abs() < 1e-14);
        assert!((oracle - zz_before).abs() < 1e-14);

        assert!(apply_readout(&bell, &ReadoutPulse::new(vec![Rotation::X90])).is_err());
    }

    #[test]
    fn readout_preserves_spectrum() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let rho = random_density_matrix(2, 4, &mut rng);
        let before = linalg::eigenvalues(rho.matrix()).unwrap();
        for pulse in ReadoutPulse::two_qubit_settings() {
            let out = apply_readout(&rho, &pulse).unwrap();
            assert!((out.matrix().trace() - ONE).norm() < 1e-12);
            for (a, b) in linalg::eigenvalues(out.matrix())
                .unwrap()
                .iter()
                .zip(&before)
            {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn four_settings_are_informationally_complete() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let rho = random_density_matrix(2, 4, &mut rng);
        let pulses = ReadoutPulse::two_qubit_settings();
        assert_eq!(
            pulses.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            ["II", "IX", "IY", "XX"]
        );
        let set = readout_expectation_set(&rho, &pulses, 1.0).unwrap();
        assert!(set.is_complete());
        let ideal = ideal_expectations(&rho, 1.0).unwrap();
        for ((p, a), (q, b)) in set.iter().zip(ideal.iter()) {
            assert_eq!(p, q);
            assert!((a.value - b.value).abs() < 1e-12, "{p}");
        }
        // the unrotated setting alone cannot see ZZ
        let direct = readout_expectation_set(&rho, &pulses[..1], 1.0).unwrap();
        assert!(!direct.is_complete());
        assert!(direct.get(&"ZZ".parse().unwrap()).is_none());
    }

    #[test]
    fn evolve_examples() {
        let bell = NamedState::BellPhiPlus.default_density_matrix();
        for kind in [ChannelKind::Dephasing, ChannelKind::Depolarizing] {
            let same = evolve(&bell, &ChannelSpec::new(kind, 3.0, 0.0).unwrap()).unwrap();
            assert!(same.matrix().max_abs_diff(bell.matrix()) < 1e-15);
        }
        let mixed = evolve(
            &bell,
            &ChannelSpec::new(ChannelKind::Depolarizing, f64::INFINITY, 1.0).unwrap(),
        )
        .unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-9
        );

        // Kraus oracle: per-qubit {sqrt((1+l)/2) I, sqrt((1-l)/2) Z}
        let ch = ChannelSpec::new(ChannelKind::Dephasing, 2f64.ln(), 1.0).unwrap();
        let l = ch.survival();
        assert!((l - 0.5).abs() < 1e-15);
        let k0 = ComplexMatrix::identity(2).scale_real(((1.0 + l) / 2.0).sqrt());
        let k1 = Pauli::Z.matrix().scale_real(((1.0 - l) / 2.0).sqrt());
        let mut kraus_out = ComplexMatrix::zeros(4);
        for a in [&k0, &k1] {
            for b in [&k0, &k1] {
                let k = kron(a, b);
                kraus_out = &kraus_out + &(&(&k * bell.matrix()) * &k.adjoint());
            }
        }
        let out = evolve(&bell, &ch).unwrap();
        assert!(out.matrix().max_abs_diff(&kraus_out) < 1e-15);
        let xx = "XX".parse::<PauliString>().unwrap();
        assert!((xx.expectation(out.matrix()).re - 0.25).abs() < 1e-15);
        assert!(ChannelSpec::new(ChannelKind::Dephasing, -1.0, 1.0).is_err());
    }

    #[test]
    fn evolve_stays_physical() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for i in 0..50 {
            let rho = random_pure_state(2, &mut rng);
            let kind = if i % 2 == 0 {
                ChannelKind::Dephasing
            } else {
                ChannelKind::Depolarizing
            };
            let ch = ChannelSpec::new(kind, i as f64 * 0.7, 0.13 * i as f64).unwrap();
            let out = evolve(&rho, &ch).unwrap();
            assert!(out.matrix().is_hermitian(1e-14));
            assert!((out.matrix().trace() - ONE).norm() < 1e-12);
            assert!(linalg::hermitian_eig(out.matrix()).unwrap().min() >= -1e-10);
        }
    }
}
