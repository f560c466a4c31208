//! Levenberg-Marquardt minimization of `0.5 * |r(x)|^2`.
//!
//! Damped Gauss-Newton steps `(J^T J + mu I) dx = -J^T r` with the damping
//! update of Nielsen: shrink `mu` on accepted steps according to the gain
//! ratio, double the growth factor on every rejection.

use crate::linalg::solve_spd;

pub trait LeastSquares {
    fn n_params(&self) -> usize;

    fn residuals(&self, x: &[f64]) -> Vec<f64>;

    /// Row-major `n_residuals x n_params`.
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;

    /// Maps `x` to an equivalent point before it is evaluated. The residuals
    /// must not change beyond rounding.
    fn canonicalize(&self, _x: &mut [f64]) {}
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmSettings {
    pub gtol: f64,
    pub xtol: f64,
    pub max_iters: usize,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            gtol: 1e-10,
            xtol: 1e-12,
            max_iters: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTol,
    StepTol,
    MaxIters,
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// `0.5 * |r|^2` at `x`.
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Max-norm of `J^T r` at `x`.
    pub gradient_norm: f64,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

const MU_FLOOR: f64 = 1e-14;

/// Minimizes from `x0`. `observe` sees every point whose residuals are
/// evaluated, rejected trial steps included.
pub fn minimize<P: LeastSquares + ?Sized>(
    problem: &P,
    x0: Vec<f64>,
    settings: &LmSettings,
    observe: &mut dyn FnMut(&[f64]),
) -> LmOutcome {
    let n = problem.n_params();
    let mut x = x0;
    problem.canonicalize(&mut x);
    observe(&x);
    let mut r = problem.residuals(&x);
    let mut cost = half_norm_sqr(&r);
    let mut jac = problem.jacobian(&x);
    let (mut jtj, mut g) = normal_equations(&jac, &r, n);
    let mut history = vec![cost];

    let max_diag = (0..n).map(|i| jtj[i * n + i]).fold(0.0, f64::max);
    let mut mu = 1e-3 * max_diag.max(1e-300);
    let mut nu = 2.0;
    let mut iterations = 0;

    let termination = loop {
        if max_abs(&g) < settings.gtol {
            break Termination::GradientTol;
        }
        if iterations >= settings.max_iters {
            break Termination::MaxIters;
        }
        iterations += 1;

        let floor = MU_FLOOR * max_diag_of(&jtj, n).max(1e-300);
        mu = mu.max(floor);
        let mut lhs = jtj.clone();
        for i in 0..n {
            lhs[i * n + i] += mu;
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let Some(step) = solve_spd(&lhs, &rhs) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };

        let step_norm = norm(&step);
        if step_norm <= settings.xtol * (norm(&x) + settings.xtol) {
            break Termination::StepTol;
        }

        let mut trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        problem.canonicalize(&mut trial);
        observe(&trial);
        let r_trial = problem.residuals(&trial);
        let cost_trial = half_norm_sqr(&r_trial);
        // predicted decrease of the quadratic model: 0.5 * dx^T (mu dx - g)
        let predicted: f64 = 0.5
            * step
                .iter()
                .zip(&g)
                .map(|(s, gi)| s * (mu * s - gi))
                .sum::<f64>();
        let gain = (cost - cost_trial) / predicted;

        // decreases within rounding of the cost are not progress
        let improved = cost - cost_trial > 4.0 * f64::EPSILON * cost;
        if improved && gain > 0.0 {
            x = trial;
            r = r_trial;
            cost = cost_trial;
            jac = problem.jacobian(&x);
            (jtj, g) = normal_equations(&jac, &r, n);
            history.push(cost);
            mu *= f64::max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0).powi(3));
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
        }
    };

    LmOutcome {
        x,
        cost,
        iterations,
        termination,
        gradient_norm: max_abs(&g),
        cost_history: history,
    }
}

fn normal_equations(jac: &[f64], r: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = r.len();
    let mut jtj = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    for row in 0..m {
        let jr = &jac[row * n..(row + 1) * n];
        for a in 0..n {
            let ja = jr[a];
            if ja == 0.0 {
                continue;
            }
            g[a] += ja * r[row];
            for b in a..n {
                jtj[a * n + b] += ja * jr[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[a * n + b] = jtj[b * n + a];
        }
    }
    (jtj, g)
}

fn max_diag_of(m: &[f64], n: usize) -> f64 {
    (0..n).map(|i| m[i * n + i]).fold(0.0, f64::max)
}

fn half_norm_sqr(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
