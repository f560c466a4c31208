//! Command drivers behind the `tomo` binary: simulate, reconstruct, metrics
//! and the decay experiment.

pub mod format;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TomoError};
use crate::linalg::ComplexMatrix;
use crate::lm::Termination;
use crate::metrics::{self, ReconstructionReport};
use crate::mle::{self, FitOptions, FitResult};
use crate::qst;
use crate::sim::{
    add_noise, evolve, ideal_expectations, ChannelKind, ChannelSpec, ExpectationSet, NoiseSpec,
    DEFAULT_SIGMA, RNG_ALGORITHM,
};
use crate::state::{DensityMatrix, NamedState};

use format::{round_sig, ser_f64, ser_opt_f64, ser_vec_f64, ExpectationFile, MatrixFile};

pub const REPORT_FORMAT: &str = "tomo-report/1";
pub const DECAY_FORMAT: &str = "tomo-decay/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qst,
    Mle,
}

impl std::str::FromStr for Method {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qst" => Ok(Method::Qst),
            "mle" => Ok(Method::Mle),
            other => Err(TomoError::InvalidArgument(format!(
                "unknown method {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qst => "qst",
            Method::Mle => "mle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub gtol: f64,
    pub xtol: f64,
    pub max_iters: usize,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            gtol: f.gtol,
            xtol: f.xtol,
            max_iters: f.max_iters,
            epsilon: f.epsilon,
        }
    }
}

impl OptimizerConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            gtol: self.gtol,
            xtol: self.xtol,
            max_iters: self.max_iters,
            epsilon: self.epsilon,
            ..FitOptions::default()
        }
    }
}

/// Parameters of one command invocation. Serialized into every artifact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    /// Named state or matrix file.
    pub state: Option<String>,
    pub qubits: Option<usize>,
    /// Expectation file (reconstruct) or matrix file (metrics).
    pub input: Option<PathBuf>,
    /// Noise standard deviation. Zero disables noise.
    pub sigma: f64,
    pub seed: u64,
    pub method: Method,
    /// Named state or matrix file.
    pub target: Option<String>,
    pub channel: ChannelKind,
    /// Per second.
    pub rate: f64,
    /// Seconds.
    pub times: Vec<f64>,
    pub trials: usize,
    pub optimizer: OptimizerConfig,
    pub out: Option<PathBuf>,
    pub rng: String,
}

/// Default decay rate in 1/s. At the last default time point the Bell
/// coherence has dropped to exp(-1.6), about 0.2.
pub const DEFAULT_RATE: f64 = 5.0;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            state: None,
            qubits: None,
            input: None,
            sigma: 0.0,
            seed: 0,
            method: Method::Mle,
            target: None,
            channel: ChannelKind::Dephasing,
            rate: DEFAULT_RATE,
            times: vec![0.0, 0.04, 0.08, 0.12, 0.16],
            trials: 1,
            optimizer: OptimizerConfig::default(),
            out: None,
            rng: RNG_ALGORITHM.to_string(),
        }
    }
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    /// Checks ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TomoError::InvalidArgument(m));
        for spec in [&self.state, &self.target].into_iter().flatten() {
            if spec.parse::<NamedState>().is_err() && !Path::new(spec).is_file() {
                return Err(TomoError::UnknownState(spec.clone()));
            }
        }
        if let Some(p) = &self.input {
            if !p.is_file() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            ));
        }
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return bad(format!(
                "rate must be finite and nonnegative, got {}",
                self.rate
            ));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("times must be a nonempty list of nonnegative values".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.qubits == Some(0) {
            return bad("qubits must be at least 1".into());
        }
        let o = &self.optimizer;
        if !(o.gtol > 0.0 && o.xtol > 0.0 && o.epsilon > 0.0 && o.max_iters > 0) {
            return bad("optimizer tolerances and max_iters must be positive".into());
        }
        Ok(())
    }

    /// Single-line JSON for header comments.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config always serializes")
    }

    fn header_meta(&self) -> format::Meta {
        vec![
            ("seed".into(), self.seed.to_string()),
            ("sigma".into(), format!("{:?}", self.sigma)),
            ("config".into(), self.to_json_line()),
        ]
    }
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_times(s: &str) -> Result<Vec<f64>> {
    let bad = || TomoError::InvalidArgument(format!("invalid time grid {s:?}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0 && stop >= start) {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            // rounding turns 3 * 0.04 = 0.12000000000000001 into 0.12
            Ok((0..=count)
                .map(|k| round_sig(start + k as f64 * step))
                .collect())
        }
        _ => Err(bad()),
    }
}

/// A named state or a matrix file holding a density matrix.
pub fn resolve_state(spec: &str, qubits: Option<usize>) -> Result<DensityMatrix> {
    if let Ok(named) = spec.parse::<NamedState>() {
        return named.density_matrix(qubits.unwrap_or(named.default_qubits()));
    }
    let path = Path::new(spec);
    if path.is_file() {
        let file = MatrixFile::parse(&std::fs::read_to_string(path)?)?;
        return DensityMatrix::new(file.matrix);
    }
    Err(TomoError::UnknownState(spec.to_string()))
}

pub fn read_expectations(path: &Path) -> Result<ExpectationFile> {
    ExpectationFile::parse(&std::fs::read_to_string(path)?)
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    MatrixFile::parse(&std::fs::read_to_string(path)?)
}

fn measure(rho: &DensityMatrix, sigma: f64, seed: u64) -> Result<ExpectationSet> {
    if sigma > 0.0 {
        let ideal = ideal_expectations(rho, sigma)?;
        Ok(add_noise(&ideal, NoiseSpec::new(sigma, seed)?))
    } else {
        ideal_expectations(rho, DEFAULT_SIGMA)
    }
}

/// Expectation data for the configured state. `sigma = 0` gives exact
/// values with unit record sigma.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<ExpectationFile> {
    cfg.validate()?;
    let spec = cfg
        .state
        .as_deref()
        .ok_or_else(|| TomoError::InvalidArgument("simulate needs --state".into()))?;
    let rho = resolve_state(spec, cfg.qubits)?;
    let mut file = ExpectationFile::new(measure(&rho, cfg.sigma, cfg.seed)?);
    file.meta = cfg.header_meta();
    Ok(file)
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: Termination,
    #[serde(serialize_with = "ser_f64")]
    pub final_likelihood: f64,
    #[serde(serialize_with = "ser_f64")]
    pub gradient_norm: f64,
    pub restarted: bool,
}

impl From<&FitResult> for OptimizerReport {
    fn from(r: &FitResult) -> Self {
        let d = mle::FitDiagnostics::from(r);
        Self {
            iterations: d.iterations,
            converged: d.converged,
            termination_reason: d.termination_reason,
            final_likelihood: d.final_likelihood,
            gradient_norm: d.gradient_norm,
            restarted: d.restarted,
        }
    }
}

/// JSON report. Field order here is the key order on disk.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub method: Option<Method>,
    pub n_qubits: usize,
    pub physical: bool,
    #[serde(serialize_with = "ser_f64")]
    pub min_eigenvalue: f64,
    #[serde(serialize_with = "ser_f64")]
    pub trace: f64,
    #[serde(serialize_with = "ser_f64")]
    pub purity: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub fidelity: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub eta: Option<f64>,
    #[serde(serialize_with = "ser_vec_f64")]
    pub spectrum: Vec<f64>,
    pub optimizer: Option<OptimizerReport>,
    pub seed: u64,
    pub config: RunConfig,
}

impl Report {
    fn build(
        rho: &ComplexMatrix,
        method: Option<Method>,
        target: Option<&DensityMatrix>,
        optimizer: Option<OptimizerReport>,
        cfg: &RunConfig,
    ) -> Result<Self> {
        let r: ReconstructionReport = metrics::report_matrix(rho, target.map(|t| t.matrix()))?;
        Ok(Self {
            format: REPORT_FORMAT,
            method,
            n_qubits: crate::state::qubit_count(rho.dim())?,
            physical: r.physical,
            min_eigenvalue: r.min_eigenvalue,
            trace: rho.trace().re,
            purity: r.purity,
            fidelity: r.fidelity,
            eta: r.eta,
            spectrum: r.spectrum,
            optimizer,
            seed: cfg.seed,
            config: cfg.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        format::to_json(self)
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructOutcome {
    pub rho: DensityMatrix,
    pub report: Report,
    pub fit: Option<FitResult>,
    /// The fit hit its iteration limit with a large gradient.
    pub did_not_converge: bool,
}

impl ReconstructOutcome {
    pub fn matrix_file(&self) -> MatrixFile {
        let mut file = MatrixFile::new(self.rho.matrix().clone());
        file.meta = self.report.config.header_meta();
        file.meta.insert(
            0,
            (
                "method".into(),
                self.report.method.map_or(String::new(), |m| m.to_string()),
            ),
        );
        file
    }

    /// Writes the matrix to `path` and the report next to it with a
    /// `.json` extension.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.matrix_file().format())?;
        let report_path = path.with_extension("json");
        std::fs::write(&report_path, self.report.to_json())?;
        Ok(report_path)
    }
}

/// Reconstructs with the configured method. Non-convergence still yields
/// an outcome, flagged by `did_not_converge`.
pub fn cmd_reconstruct(file: &ExpectationFile, cfg: &RunConfig) -> Result<ReconstructOutcome> {
    cfg.validate()?;
    let data = &file.set;
    data.ensure_complete()?;
    let target = cfg
        .target
        .as_deref()
        .map(|t| resolve_state(t, Some(data.n_qubits())))
        .transpose()?;

    let mut did_not_converge = false;
    let (rho, fit) = match cfg.method {
        Method::Qst => (qst::reconstruct_linear(data)?, None),
        Method::Mle => {
            let (result, failed) = match mle::fit(data, None, &cfg.optimizer.fit_options()) {
                Ok(r) => (r, false),
                Err(TomoError::DidNotConverge { result, .. }) => (*result, true),
                Err(e) => return Err(e),
            };
            did_not_converge = failed;
            (result.rho.clone(), Some(result))
        }
    };
    let optimizer = fit.as_ref().map(OptimizerReport::from);
    let report = Report::build(
        rho.matrix(),
        Some(cfg.method),
        target.as_ref(),
        optimizer,
        cfg,
    )?;
    Ok(ReconstructOutcome {
        rho,
        report,
        fit,
        did_not_converge,
    })
}

/// Scores a matrix that may be unnormalized or indefinite.
pub fn cmd_metrics(matrix: &ComplexMatrix, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    if !matrix.is_hermitian(crate::linalg::HERMITIAN_TOL) {
        return Err(TomoError::NotHermitian {
            deviation: matrix.hermiticity_error(),
        });
    }
    let n = crate::state::qubit_count(matrix.dim())?;
    let target = cfg
        .target
        .as_deref()
        .map(|t| resolve_state(t, Some(n)))
        .transpose()?;
    Report::build(matrix, None, target.as_ref(), None, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub time: f64,
    pub eta_qst: f64,
    pub eta_mle: f64,
    pub min_eig_qst: f64,
    pub min_eig_mle: f64,
}

/// Seed for one (trial, time point) pair. Trial 0 at the first time point
/// uses the base seed itself.
pub fn trial_seed(base: u64, trial: usize, time_index: usize) -> u64 {
    base.wrapping_add(((trial as u64) << 32) | time_index as u64)
}

/// One Monte-Carlo trial: evolve, measure, reconstruct both ways.
pub fn decay_trial(rho0: &DensityMatrix, cfg: &RunConfig, trial: usize) -> Result<Vec<DecayRow>> {
    let opts = cfg.optimizer.fit_options();
    cfg.times
        .iter()
        .enumerate()
        .map(|(k, &time)| {
            let rho = evolve(rho0, &ChannelSpec::new(cfg.channel, cfg.rate, time)?)?;
            let data = measure(&rho, cfg.sigma, trial_seed(cfg.seed, trial, k))?;
            let linear = qst::reconstruct_linear(&data)?;
            let ml = match mle::fit(&data, None, &opts) {
                Ok(r) => r.rho,
                Err(TomoError::DidNotConverge { result, .. }) => result.rho,
                Err(e) => return Err(e),
            };
            Ok(DecayRow {
                time,
                eta_qst: metrics::entanglement_eta(&linear)?,
                eta_mle: metrics::entanglement_eta(&ml)?,
                min_eig_qst: crate::linalg::hermitian_eig(linear.matrix())?.min(),
                min_eig_mle: crate::linalg::hermitian_eig(ml.matrix())?.min(),
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct DecayTable {
    /// Per-time means over trials.
    pub rows: Vec<DecayRow>,
    /// `trials[i][k]` is trial `i` at time index `k`.
    pub trials: Vec<Vec<DecayRow>>,
    pub config: RunConfig,
}

impl DecayTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# format={DECAY_FORMAT}\n");
        for (k, v) in self.config.header_meta() {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&format!("# trials={}\n", self.trials.len()));
        out.push_str("time,eta_qst,eta_mle,min_eig_qst,min_eig_mle\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?}\n",
                r.time,
                round_sig(r.eta_qst),
                round_sig(r.eta_mle),
                round_sig(r.min_eig_qst),
                round_sig(r.min_eig_mle)
            ));
        }
        out
    }
}

/// Runs `cfg.trials` trials in parallel and averages them per time point.
pub fn cmd_decay(cfg: &RunConfig) -> Result<DecayTable> {
    cfg.validate()?;
    let spec = cfg.state.as_deref().unwrap_or("bell-phi+");
    let rho0 = resolve_state(spec, cfg.qubits)?;
    if rho0.n_qubits() != 2 {
        return Err(TomoError::UnsupportedDimension {
            expected: 2,
            found: rho0.n_qubits(),
        });
    }
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|i| decay_trial(&rho0, cfg, i))
        .collect::<Result<Vec<_>>>()?;

    let count = trials.len() as f64;
    let rows = (0..cfg.times.len())
        .map(|k| {
            let mean =
                |f: fn(&DecayRow) -> f64| trials.iter().map(|t| f(&t[k])).sum::<f64>() / count;
            DecayRow {
                time: cfg.times[k],
                eta_qst: mean(|r| r.eta_qst),
                eta_mle: mean(|r| r.eta_mle),
                min_eig_qst: mean(|r| r.min_eig_qst),
                min_eig_mle: mean(|r| r.min_eig_mle),
            }
        })
        .collect();
    let mut config = cfg.clone();
    config.state = Some(spec.to_string());
    Ok(DecayTable {
        rows,
        trials,
        config,
    })
}

/// Exit status for an error: 3 for non-convergence, 2 otherwise.
pub fn exit_code(err: &TomoError) -> i32 {
    match err {
        TomoError::DidNotConverge { .. } => 3,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grids() {
        assert_eq!(
            parse_times("0:0.04:0.16").unwrap(),
            vec![0.0, 0.04, 0.08, 0.12, 0.16]
        );
        assert_eq!(parse_times("0, 0.5,2").unwrap(), vec![0.0, 0.5, 2.0]);
        assert!(parse_times("0:0:1").is_err());
        assert!(parse_times("a").is_err());
        assert!(parse_times("1:2").is_err());
    }

    #[test]
    fn simulate_examples() {
        let mut cfg = RunConfig::new("simulate");
        cfg.state = Some("bell-phi+".into());
        let f = cmd_simulate(&cfg).unwrap();
        assert_eq!(f.set.value("XX"), 1.0);
        assert_eq!(f.set.value("YY"), -1.0);
        assert_eq!(f.set.value("ZZ"), 1.0);
        assert_eq!(f.meta_value("seed"), Some("0"));

        cfg.state = Some("zero".into());
        cfg.sigma = 1e-12;
        cfg.seed = 9;
        let f = cmd_simulate(&cfg).unwrap();
        assert!((f.set.value("ZZ") - 1.0).abs() < 1e-10);
        assert_eq!(f.meta_value("sigma"), Some("1e-12"));

        cfg.state = Some("w3".into());
        assert_eq!(cmd_simulate(&cfg).unwrap().set.len(), 63);

        cfg.state = Some("ghz".into());
        assert!(matches!(
            cmd_simulate(&cfg),
            Err(TomoError::UnknownState(_))
        ));
    }

    #[test]
    fn reconstruct_exact_zero() {
        let mut cfg = RunConfig::new("simulate");
        cfg.state = Some("zero".into());
        let file = cmd_simulate(&cfg).unwrap();
        let mut cfg = RunConfig::new("reconstruct");
        cfg.method = Method::Qst;
        cfg.target = Some("zero".into());
        let out = cmd_reconstruct(&file, &cfg).unwrap();
        assert!((out.report.fidelity.unwrap() - 1.0).abs() < 1e-12);
        assert!(out.report.optimizer.is_none());
    }

    #[test]
    fn decay_without_noise_or_decoherence() {
        let mut cfg = RunConfig::new("decay");
        cfg.rate = 0.0;
        let t = cmd_decay(&cfg).unwrap();
        for r in &t.rows {
            assert!(
                (r.eta_qst - 0.5).abs() < 1e-9 && (r.eta_mle - 0.5).abs() < 1e-6,
                "{r:?}"
            );
        }
        cfg.rate = 1e4;
        cfg.times = vec![1.0];
        let t = cmd_decay(&cfg).unwrap();
        assert!(t.rows[0].eta_qst < 1e-9 && t.rows[0].eta_mle < 1e-6);
    }

    #[test]
    fn decay_rejects_other_sizes() {
        let mut cfg = RunConfig::new("decay");
        cfg.state = Some("w3".into());
        assert!(matches!(
            cmd_decay(&cfg),
            Err(TomoError::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::new("x");
        cfg.sigma = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::new("x");
        cfg.input = Some("/nonexistent/file".into());
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::new("x");
        cfg.target = Some("nope".into());
        assert!(matches!(cfg.validate(), Err(TomoError::UnknownState(_))));
        assert!(RunConfig::new("x").validate().is_ok());
    }
}
