//! Maximum-likelihood reconstruction over the `T^dagger T` parameterization.
//!
//! A real vector `t` of length `4^n` fills a lower-triangular `T` (real
//! diagonal, complex strictly-lower part) and defines
//! `rho(t) = T^dagger T / Tr(T^dagger T)`, which is positive semidefinite with
//! unit trace for every nonzero `t`. Fitting minimizes
//! `L(t) = sum_P (Tr(P rho(t)) - m_P)^2 / (2 sigma_P^2)` over the measured
//! expectation values `m_P` with Levenberg-Marquardt.

use serde::Serialize;

use crate::error::{Result, TomoError};
use crate::linalg::{ComplexMatrix, C64, I, ONE};
use crate::lm::{self, LeastSquares, LmSettings, Termination};
use crate::pauli::PauliString;
use crate::qst::reconstruct_linear;
use crate::sim::ExpectationSet;
use crate::state::DensityMatrix;

/// Real parameter vector: `2^n` diagonal entries of `T`, then `(re, im)`
/// pairs of the strictly-lower triangle row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct TParams {
    n_qubits: usize,
    t: Vec<f64>,
}

impl TParams {
    pub fn new(n_qubits: usize, t: Vec<f64>) -> Result<Self> {
        let expected = 1usize << (2 * n_qubits);
        if t.len() != expected {
            return Err(TomoError::DimensionMismatch {
                expected,
                found: t.len(),
            });
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(TomoError::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self { n_qubits, t })
    }

    /// Parameters of `I / 2^n`: every diagonal entry `2^(-n/2)`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut t = vec![0.0; dim * dim];
        let d = (dim as f64).sqrt().recip();
        t[..dim].iter_mut().for_each(|x| *x = d);
        Self { n_qubits, t }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.t
    }

    /// The lower-triangular `T`.
    pub fn lower_triangular(&self) -> ComplexMatrix {
        lower_triangular(self.dim(), &self.t)
    }
}

/// `(row, col, unit)` for every parameter slot, where `dT/dt_k = unit * e_row e_col^T`.
fn slots(dim: usize) -> impl Iterator<Item = (usize, usize, C64)> {
    let diag = (0..dim).map(|i| (i, i, ONE));
    let lower = (1..dim).flat_map(|i| (0..i).flat_map(move |j| [(i, j, ONE), (i, j, I)]));
    diag.chain(lower)
}

fn lower_triangular(dim: usize, t: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for ((i, j, unit), &v) in slots(dim).zip(t) {
        m[(i, j)] += unit * v;
    }
    m
}

/// `T^dagger T` as an exactly Hermitian matrix.
fn gram(tri: &ComplexMatrix) -> ComplexMatrix {
    let d = tri.dim();
    let mut a = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            // T[k, i] vanishes for k < i
            let v: C64 = (i..d).map(|k| tri[(k, i)].conj() * tri[(k, j)]).sum();
            if i == j {
                a[(i, i)] = C64::new(v.re, 0.0);
            } else {
                a[(i, j)] = v;
                a[(j, i)] = v.conj();
            }
        }
    }
    a
}

fn norm_sqr(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum()
}

/// `T^dagger T / Tr(T^dagger T)`; positive semidefinite with unit trace.
pub fn rho_from_t(t: &TParams) -> Result<DensityMatrix> {
    let tau = norm_sqr(&t.t);
    if tau < 1e-300 {
        return Err(TomoError::ZeroParameters);
    }
    let a = gram(&t.lower_triangular());
    Ok(DensityMatrix::from_parts_unchecked(
        t.n_qubits,
        a.scale_real(1.0 / tau),
    ))
}

/// Squared pivots below this trigger the regularized retry in [`t_from_rho`].
const PIVOT_TOL: f64 = 1e-12;

/// Default diagonal shift used when a pivot vanishes.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Inverse of [`rho_from_t`] for positive-definite input.
///
/// Solves `T^dagger T = rho` from the last row upward:
/// `T[i,i]^2 = rho[i,i] - sum_{k>i} |T[k,i]|^2` and
/// `T[i,j] = (rho[i,j] - sum_{k>i} conj(T[k,i]) T[k,j]) / T[i,i]`.
/// Indefinite input makes some squared pivots negative; the recursion then
/// continues with complex square roots and the real parts of the diagonal are
/// kept. When a squared pivot is smaller than `1e-12` in magnitude the
/// factorization is retried on `(rho + eps I) / (1 + eps d)`.
pub fn t_from_rho(rho: &DensityMatrix) -> Result<TParams> {
    t_from_rho_with(rho, DEFAULT_EPSILON)
}

pub fn t_from_rho_with(rho: &DensityMatrix, epsilon: f64) -> Result<TParams> {
    let m = rho.matrix();
    let tri = match factor(m) {
        Ok(tri) => tri,
        Err(_) => {
            let d = m.dim() as f64;
            let shifted = (m + &ComplexMatrix::identity(m.dim()).scale_real(epsilon))
                .scale_real(1.0 / (1.0 + epsilon * d));
            factor(&shifted)?
        }
    };
    let t = slots(m.dim())
        .map(|(i, j, unit)| {
            let z = tri[(i, j)];
            if unit == ONE {
                z.re
            } else {
                z.im
            }
        })
        .collect();
    TParams::new(rho.n_qubits(), t)
}

fn factor(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = m.dim();
    let mut tri = ComplexMatrix::zeros(d);
    for i in (0..d).rev() {
        let s: C64 = m[(i, i)] - (i + 1..d).map(|k| tri[(k, i)].norm_sqr()).sum::<f64>();
        let s = C64::new(s.re, 0.0);
        if s.norm() < PIVOT_TOL {
            return Err(TomoError::SingularPivot {
                index: i,
                magnitude: s.norm(),
            });
        }
        let pivot = s.sqrt();
        tri[(i, i)] = pivot;
        for j in 0..i {
            let acc: C64 = (i + 1..d).map(|k| tri[(k, i)].conj() * tri[(k, j)]).sum();
            tri[(i, j)] = (m[(i, j)] - acc) / pivot.conj();
        }
    }
    // drop the imaginary part a negative squared pivot puts on the diagonal
    for i in 0..d {
        tri[(i, i)] = C64::new(tri[(i, i)].re, 0.0);
    }
    Ok(tri)
}

/// Likelihood with per-record weighted residuals `(model - data) / sigma`.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodValue {
    pub total: f64,
    pub residuals: Vec<(PauliString, f64)>,
}

struct Term {
    label: PauliString,
    mask: usize,
    /// `P[c ^ mask, c]` for each column `c`.
    phases: Vec<C64>,
    value: f64,
    inv_sigma: f64,
}

/// The fitting problem: one residual per expectation record.
pub struct TomographyProblem {
    n_qubits: usize,
    terms: Vec<Term>,
}

impl TomographyProblem {
    pub fn new(data: &ExpectationSet) -> Result<Self> {
        data.ensure_complete()?;
        let dim = 1usize << data.n_qubits();
        let mut terms = Vec::with_capacity(data.len());
        for (p, r) in data.iter() {
            if r.sigma.is_nan() || r.sigma <= 0.0 {
                return Err(TomoError::ZeroSigma {
                    label: p.to_string(),
                    sigma: r.sigma,
                });
            }
            terms.push(Term {
                label: p.clone(),
                mask: p.flip_mask(),
                phases: (0..dim).map(|c| p.column_phase(c)).collect(),
                value: r.value,
                inv_sigma: 1.0 / r.sigma,
            });
        }
        Ok(Self {
            n_qubits: data.n_qubits(),
            terms,
        })
    }

    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `Tr(P rho(t))` for every term.
    fn model(&self, t: &[f64]) -> Vec<f64> {
        let tau = norm_sqr(t);
        let a = gram(&lower_triangular(self.dim(), t));
        self.terms
            .iter()
            .map(|term| {
                let tr: C64 = term
                    .phases
                    .iter()
                    .enumerate()
                    .map(|(c, ph)| ph * a[(c, c ^ term.mask)])
                    .sum();
                tr.re / tau
            })
            .collect()
    }
}

impl LeastSquares for TomographyProblem {
    fn n_params(&self) -> usize {
        self.dim() * self.dim()
    }

    fn residuals(&self, t: &[f64]) -> Vec<f64> {
        self.model(t)
            .into_iter()
            .zip(&self.terms)
            .map(|(m, term)| (m - term.value) * term.inv_sigma)
            .collect()
    }

    fn jacobian(&self, t: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let n = d * d;
        let tau = norm_sqr(t);
        let tri = lower_triangular(d, t);
        let model = self.model(t);
        let slot_list: Vec<_> = slots(d).collect();
        let mut jac = vec![0.0; self.terms.len() * n];
        for (row, (term, m)) in self.terms.iter().zip(&model).enumerate() {
            let out = &mut jac[row * n..(row + 1) * n];
            for (k, &(i, j, unit)) in slot_list.iter().enumerate() {
                // Tr(P dA/dt_k) = 2 Re(unit * (P T^dagger)[j, i])
                let col = j ^ term.mask;
                let pt = term.phases[col] * tri[(i, col)].conj();
                let d_trace = 2.0 * (unit * pt).re;
                out[k] = (d_trace / tau - m * 2.0 * t[k] / tau) * term.inv_sigma;
            }
        }
        jac
    }

    fn canonicalize(&self, t: &mut [f64]) {
        let norm = norm_sqr(t).sqrt();
        if norm > 0.0 {
            t.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// `L(t) = sum_P (Tr(P rho(t)) - m_P)^2 / (2 sigma_P^2)`.
pub fn likelihood(t: &TParams, data: &ExpectationSet) -> Result<LikelihoodValue> {
    check_shape(t, data)?;
    if norm_sqr(&t.t) < 1e-300 {
        return Err(TomoError::ZeroParameters);
    }
    let problem = TomographyProblem::new(data)?;
    let r = problem.residuals(&t.t);
    Ok(LikelihoodValue {
        total: 0.5 * r.iter().map(|x| x * x).sum::<f64>(),
        residuals: problem
            .terms
            .iter()
            .map(|term| term.label.clone())
            .zip(r)
            .collect(),
    })
}

/// `d residual_P / d t_k`, one row per record in lexicographic order.
pub fn jacobian(t: &TParams, data: &ExpectationSet) -> Result<Vec<Vec<f64>>> {
    check_shape(t, data)?;
    let problem = TomographyProblem::new(data)?;
    let n = problem.n_params();
    Ok(problem
        .jacobian(&t.t)
        .chunks(n)
        .map(|row| row.to_vec())
        .collect())
}

fn check_shape(t: &TParams, data: &ExpectationSet) -> Result<()> {
    if t.n_qubits != data.n_qubits() {
        return Err(TomoError::DimensionMismatch {
            expected: data.n_qubits(),
            found: t.n_qubits,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub gtol: f64,
    pub xtol: f64,
    pub max_iters: usize,
    /// Diagonal shift for the initial-guess factorization.
    pub epsilon: f64,
    /// Retry once from the maximally mixed point when the first run hits
    /// `max_iters`.
    pub restart: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        let lm = LmSettings::default();
        Self {
            gtol: lm.gtol,
            xtol: lm.xtol,
            max_iters: lm.max_iters,
            epsilon: DEFAULT_EPSILON,
            restart: true,
        }
    }
}

/// Gradient max-norm above which hitting `max_iters` is an error.
pub const NONCONVERGENCE_GRADIENT: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct FitResult {
    pub rho: DensityMatrix,
    pub t_opt: TParams,
    pub final_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: Termination,
    pub gradient_norm: f64,
    pub restarted: bool,
    /// Likelihood after each accepted step of the returned run.
    pub likelihood_history: Vec<f64>,
}

/// Fits `rho(t)` to the data. Without `init` the search starts from the
/// linear-inversion estimate mapped through [`t_from_rho`].
pub fn fit(data: &ExpectationSet, init: Option<&TParams>, opts: &FitOptions) -> Result<FitResult> {
    fit_observed(data, init, opts, &mut |_| {})
}

/// [`fit`] with a callback that sees every parameter vector the optimizer
/// evaluates.
pub fn fit_observed(
    data: &ExpectationSet,
    init: Option<&TParams>,
    opts: &FitOptions,
    observe: &mut dyn FnMut(&TParams),
) -> Result<FitResult> {
    let problem = TomographyProblem::new(data)?;
    let n = data.n_qubits();
    let start = match init {
        Some(t) => {
            check_shape(t, data)?;
            t.clone()
        }
        None => initial_guess(data, opts.epsilon)?,
    };
    let start = if norm_sqr(&start.t) < 1e-300 {
        TParams::maximally_mixed(n)
    } else {
        start
    };

    let settings = LmSettings {
        gtol: opts.gtol,
        xtol: opts.xtol,
        max_iters: opts.max_iters,
    };
    let mut run = |x0: TParams| {
        let outcome = lm::minimize(&problem, x0.t, &settings, &mut |x| {
            observe(&TParams {
                n_qubits: n,
                t: x.to_vec(),
            })
        });
        into_result(n, outcome, false)
    };

    let mut result = run(start)?;
    if !result.converged && opts.restart {
        let mut second = run(TParams::maximally_mixed(n))?;
        second.restarted = true;
        if second.converged || second.final_likelihood < result.final_likelihood {
            result = second;
        }
    }

    if !result.converged && result.gradient_norm > NONCONVERGENCE_GRADIENT {
        let gradient_norm = result.gradient_norm;
        return Err(TomoError::DidNotConverge {
            result: Box::new(result),
            gradient_norm,
        });
    }
    Ok(result)
}

fn into_result(n_qubits: usize, outcome: lm::LmOutcome, restarted: bool) -> Result<FitResult> {
    let t_opt = TParams::new(n_qubits, outcome.x)?;
    Ok(FitResult {
        rho: rho_from_t(&t_opt)?,
        t_opt,
        final_likelihood: outcome.cost,
        iterations: outcome.iterations,
        converged: outcome.termination != Termination::MaxIters,
        termination_reason: outcome.termination,
        gradient_norm: outcome.gradient_norm,
        restarted,
        likelihood_history: outcome.cost_history,
    })
}

/// Linear-inversion estimate pushed through [`t_from_rho_with`], imaginary
/// parts dropped.
pub fn initial_guess(data: &ExpectationSet, epsilon: f64) -> Result<TParams> {
    let linear = reconstruct_linear(data)?;
    match t_from_rho_with(&linear, epsilon) {
        Ok(t) => Ok(t),
        Err(TomoError::SingularPivot { .. }) => Ok(TParams::maximally_mixed(data.n_qubits())),
        Err(e) => Err(e),
    }
}

/// Serializable optimizer diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: Termination,
    pub final_likelihood: f64,
    pub gradient_norm: f64,
    pub restarted: bool,
}

impl From<&FitResult> for FitDiagnostics {
    fn from(r: &FitResult) -> Self {
        Self {
            iterations: r.iterations,
            converged: r.converged,
            termination_reason: r.termination_reason,
            final_likelihood: r.final_likelihood,
            gradient_norm: r.gradient_norm,
            restarted: r.restarted,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg;
    use crate::metrics::fidelity;
    use crate::random::{random_density_matrix, random_tparams};
    use crate::sim::{add_noise, ideal_expectations, NoiseSpec};
    use crate::state::NamedState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn diag_only(n: usize, diag: &[f64]) -> TParams {
        let mut t = vec![0.0; 1 << (2 * n)];
        t[..diag.len()].copy_from_slice(diag);
        TParams::new(n, t).unwrap()
    }

    #[test]
    fn layout() {
        let t = TParams::new(2, (1..=16).map(f64::from).collect()).unwrap();
        let tri = t.lower_triangular();
        for i in 0..4 {
            assert_eq!(tri[(i, i)], C64::new((i + 1) as f64, 0.0));
        }
        assert_eq!(tri[(1, 0)], C64::new(5.0, 6.0));
        assert_eq!(tri[(2, 0)], C64::new(7.0, 8.0));
        assert_eq!(tri[(2, 1)], C64::new(9.0, 10.0));
        assert_eq!(tri[(3, 0)], C64::new(11.0, 12.0));
        assert_eq!(tri[(3, 2)], C64::new(15.0, 16.0));
        assert_eq!(tri[(0, 1)], C64::new(0.0, 0.0));
        assert!(TParams::new(2, vec![0.0; 15]).is_err());
        assert!(TParams::new(1, vec![f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rho_from_t_examples() {
        let mixed = rho_from_t(&diag_only(2, &[1.0; 4])).unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-15
        );
        let zero = rho_from_t(&diag_only(2, &[1.0])).unwrap();
        assert_eq!(zero, DensityMatrix::basis(2, 0));
        assert!(matches!(
            rho_from_t(&TParams::new(1, vec![0.0; 4]).unwrap()),
            Err(TomoError::ZeroParameters)
        ));
        let diff = rho_from_t(&TParams::maximally_mixed(3))
            .unwrap()
            .matrix()
            .max_abs_diff(DensityMatrix::maximally_mixed(3).matrix());
        assert!(diff < 1e-15);
    }

    #[test]
    fn random_parameters_give_states() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let t = random_tparams(2, &mut rng);
            let rho = rho_from_t(&t).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
            assert!(linalg::hermitian_eig(rho.matrix()).unwrap().min() >= -1e-12);
            let neg = TParams::new(2, t.as_slice().iter().map(|x| -x).collect()).unwrap();
            assert!(
                rho_from_t(&neg)
                    .unwrap()
                    .matrix()
                    .max_abs_diff(rho.matrix())
                    < 1e-15
            );
        }
    }

    #[test]
    fn t_from_rho_examples() {
        let t = t_from_rho(&DensityMatrix::maximally_mixed(2)).unwrap();
        for (k, v) in t.as_slice().iter().enumerate() {
            assert_eq!(*v, if k < 4 { 0.5 } else { 0.0 });
        }
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        for _ in 0..1000 {
            let rho = random_density_matrix(2, 4, &mut rng);
            let back = rho_from_t(&t_from_rho(&rho).unwrap()).unwrap();
            assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-8);
        }
    }

    #[test]
    fn t_from_rho_rank_deficient_and_indefinite() {
        // pure state: vanishing pivots force the regularized path
        let zero = DensityMatrix::basis(2, 0);
        assert!(matches!(
            factor(zero.matrix()),
            Err(TomoError::SingularPivot { .. })
        ));
        let t = t_from_rho(&zero).unwrap();
        let back = rho_from_t(&t).unwrap();
        assert!(back.matrix().max_abs_diff(zero.matrix()) < 1e-5);

        let t = t_from_rho(&fixtures::plus_pair_linear()).unwrap();
        assert!(t.as_slice().iter().all(|x| x.is_finite()));
        assert!(norm_sqr(t.as_slice()) > 0.0);
        assert!(
            linalg::hermitian_eig(rho_from_t(&t).unwrap().matrix())
                .unwrap()
                .min()
                >= -1e-12
        );
    }

    #[test]
    fn likelihood_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let t = random_tparams(2, &mut rng);
        let data = ideal_expectations(&rho_from_t(&t).unwrap(), 1.0).unwrap();
        assert!(likelihood(&t, &data).unwrap().total < 1e-15);

        let noisy = add_noise(&data, NoiseSpec::new(0.2, 3).unwrap())
            .with_uniform_sigma(1.0)
            .unwrap();
        let l1 = likelihood(&t, &noisy).unwrap();
        let l2 = likelihood(&t, &noisy.clone().with_uniform_sigma(0.5).unwrap()).unwrap();
        assert!((l2.total - 4.0 * l1.total).abs() < 1e-12 * l2.total);
        let sum: f64 = l1.residuals.iter().map(|(_, r)| r * r).sum::<f64>() / 2.0;
        assert!((l1.total - sum).abs() < 1e-12);
    }

    #[test]
    fn single_record_toy_likelihood() {
        // one qubit at <Z> = 0.8, <X> = <Y> = 0: rho diag(0.9, 0.1)
        let t = diag_only(1, &[0.9f64.sqrt(), 0.1f64.sqrt()]);
        let mut data = ExpectationSet::new(1);
        data.insert("X".parse().unwrap(), 0.0, 1.0).unwrap();
        data.insert("Y".parse().unwrap(), 0.0, 1.0).unwrap();
        data.insert("Z".parse().unwrap(), 0.9, 0.1).unwrap();
        let l = likelihood(&t, &data).unwrap();
        assert!((l.total - 0.5).abs() < 1e-12, "{}", l.total);
    }

    #[test]
    fn incomplete_data_rejected() {
        let mut data = ExpectationSet::new(1);
        data.insert("Z".parse().unwrap(), 0.9, 0.1).unwrap();
        assert!(matches!(
            likelihood(&TParams::maximally_mixed(1), &data),
            Err(TomoError::IncompleteSet { .. })
        ));
        assert!(fit(&data, None, &FitOptions::default()).is_err());
    }

    fn finite_difference(t: &TParams, data: &ExpectationSet, h: f64) -> Vec<Vec<f64>> {
        let base = t.as_slice().to_vec();
        let mut cols = Vec::new();
        for k in 0..base.len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += h;
            minus[k] -= h;
            let rp = likelihood(&TParams::new(t.n_qubits(), plus).unwrap(), data).unwrap();
            let rm = likelihood(&TParams::new(t.n_qubits(), minus).unwrap(), data).unwrap();
            cols.push(
                rp.residuals
                    .iter()
                    .zip(&rm.residuals)
                    .map(|((_, a), (_, b))| (a - b) / (2.0 * h))
                    .collect::<Vec<_>>(),
            );
        }
        // transpose to rows
        (0..cols[0].len())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect()
    }

    #[test]
    fn jacobian_matches_finite_differences_one_qubit() {
        let mut rng = ChaCha20Rng::seed_from_u64(34);
        for _ in 0..20 {
            let t = random_tparams(1, &mut rng);
            let data = add_noise(
                &ideal_expectations(&random_density_matrix(1, 2, &mut rng), 1.0).unwrap(),
                NoiseSpec::new(0.1, 1).unwrap(),
            );
            let analytic = jacobian(&t, &data).unwrap();
            let numeric = finite_difference(&t, &data, 1e-6);
            for (ra, rn) in analytic.iter().zip(&numeric) {
                for (a, n) in ra.iter().zip(rn) {
                    let scale = a.abs().max(n.abs()).max(1e-3);
                    assert!((a - n).abs() / scale <= 1e-5, "{a} vs {n}");
                }
            }
        }
    }

    #[test]
    fn jacobian_stationary_at_exact_match() {
        let mut rng = ChaCha20Rng::seed_from_u64(35);
        let t = random_tparams(2, &mut rng);
        let data = ideal_expectations(&rho_from_t(&t).unwrap(), 1.0).unwrap();
        let j = jacobian(&t, &data).unwrap();
        let r = likelihood(&t, &data).unwrap().residuals;
        for k in 0..16 {
            let g: f64 = j.iter().zip(&r).map(|(row, (_, ri))| row[k] * ri).sum();
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_zero_entry_for_diagonal_observable() {
        // at t = (a, b, 0, 0) the Z expectation does not move with Re/Im T[1,0]
        let t = diag_only(1, &[0.8, 0.6]);
        let data = ideal_expectations(&DensityMatrix::maximally_mixed(1), 1.0).unwrap();
        let j = jacobian(&t, &data).unwrap();
        let z_row = &j[2];
        assert_eq!(z_row[2], 0.0);
        assert_eq!(z_row[3], 0.0);
        // ...while X and Y do
        assert!(j[0][2].abs() > 0.1);
        assert!(j[1][3].abs() > 0.1);
    }

    #[test]
    fn fit_recovers_noise_free_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(36);
        for rank in [1, 2, 4] {
            let rho = random_density_matrix(2, rank, &mut rng);
            let data = ideal_expectations(&rho, 1.0).unwrap();
            let fit = fit(&data, None, &FitOptions::default()).unwrap();
            assert!(fit.converged);
            assert!(fidelity(&fit.rho, &rho).unwrap() >= 1.0 - 1e-8);
            assert!(fit.rho.trace_distance(&rho).unwrap() <= 1e-6, "rank {rank}");
        }
    }

    #[test]
    fn fit_maximally_mixed() {
        let data = ideal_expectations(&DensityMatrix::maximally_mixed(2), 1.0).unwrap();
        let fit = fit(&data, None, &FitOptions::default()).unwrap();
        assert!(
            fit.rho
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-6
        );
    }

    #[test]
    fn fit_is_physical_and_descends() {
        let bell = NamedState::BellPhiPlus.default_density_matrix();
        let data = add_noise(
            &ideal_expectations(&bell, 1.0).unwrap(),
            NoiseSpec::new(0.05, 5).unwrap(),
        );
        let mut evaluated = 0;
        let fit = fit_observed(&data, None, &FitOptions::default(), &mut |t| {
            evaluated += 1;
            let rho = rho_from_t(t).unwrap();
            assert!(linalg::hermitian_eig(rho.matrix()).unwrap().min() >= -1e-12);
        })
        .unwrap();
        assert!(evaluated > 1);
        assert!(fit.likelihood_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(linalg::hermitian_eig(fit.rho.matrix()).unwrap().min() >= -1e-12);
        assert!((fit.rho.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn explicit_init_and_iteration_cap() {
        let bell = NamedState::BellPhiPlus.default_density_matrix();
        let data = add_noise(
            &ideal_expectations(&bell, 1.0).unwrap(),
            NoiseSpec::new(0.05, 6).unwrap(),
        );
        let opts = FitOptions {
            max_iters: 1,
            restart: false,
            ..FitOptions::default()
        };
        match fit(&data, Some(&TParams::maximally_mixed(2)), &opts) {
            Err(TomoError::DidNotConverge {
                result,
                gradient_norm,
            }) => {
                assert!(!result.converged);
                assert_eq!(result.termination_reason, Termination::MaxIters);
                assert!(gradient_norm > NONCONVERGENCE_GRADIENT);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(fit(
            &data,
            Some(&TParams::maximally_mixed(1)),
            &FitOptions::default()
        )
        .is_err());
    }
}
