//! Density-matrix reconstruction from Pauli expectation data.
//!
//! Two estimators share one data model:
//!
//! - [`qst::reconstruct_linear`] inverts the Pauli expansion directly. It is
//!   exact for noise-free data but noisy input can produce negative
//!   eigenvalues.
//! - [`mle::fit`] minimizes a Gaussian likelihood over matrices of the form
//!   `T^dagger T / Tr(T^dagger T)`, so every estimate is a valid state.
//!
//! [`sim`] produces synthetic data (ideal expectations, Gaussian noise, NMR
//! readout rotations, dephasing and depolarizing channels) and [`metrics`]
//! scores the results. [`cli`] holds the file formats and the command
//! drivers behind the `tomo` binary.
//!
//! ```
//! use tomo::{metrics, mle, qst, sim, NamedState};
//!
//! let truth = NamedState::BellPhiPlus.default_density_matrix();
//! let ideal = sim::ideal_expectations(&truth, 0.05)?;
//! let data = sim::add_noise(&ideal, sim::NoiseSpec::new(0.05, 7)?);
//!
//! let linear = qst::reconstruct_linear(&data)?;
//! let fit = mle::fit(&data, None, &mle::FitOptions::default())?;
//! let report = metrics::report(&fit.rho, Some(&truth))?;
//! assert!(report.physical);
//! assert!(report.fidelity.unwrap() > 0.95);
//! assert!(metrics::entanglement_eta(&linear)? > 0.4);
//! # Ok::<(), tomo::TomoError>(())
//! ```

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod lm;
pub mod metrics;
pub mod mle;
pub mod pauli;
pub mod qst;
pub mod random;
pub mod sim;
pub mod state;

pub use error::{Result, TomoError};
pub use linalg::{ComplexMatrix, C64};
pub use pauli::{Pauli, PauliString};
pub use sim::ExpectationSet;
pub use state::{DensityMatrix, NamedState};
