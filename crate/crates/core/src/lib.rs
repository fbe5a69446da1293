//! Simulation and Monte Carlo verification of the asymptotic distribution of
//! sample autocovariances of long-memory linear processes
//! `X_t = Σ_j ψ(j) Z_{t−j}` with power-law coefficients `ψ(j) ~ C_d j^{d−1}`.
//!
//! Depending on the moments of the innovations and the memory parameter `d`,
//! `γ̂_h − γ_h` behaves in one of three ways:
//!
//! * region A: Gaussian limit at rate `N^{−1/2}` (finite fourth moment, `d < 1/4`);
//! * region B: shifted `α/2`-stable limit at rate `N^{2/α−1}` (tail index `α ∈ (2,4)`, `d < 1/α`);
//! * region C: Rosenblatt limit at rate `N^{2d−1}`, identical across lags.
//!
//! The crate is organised bottom-up: [`coeffmodel`] and [`innovations`]
//! describe the model, [`procsim`] simulates paths, [`acov`] computes the
//! estimators, [`limitlaws`] classifies regimes and samples the limit laws,
//! and [`mcharness`] runs the convergence experiments.
//!
//! Replication-level work runs on rayon when the `parallel` feature is on
//! (the default). Every random quantity is drawn from a stream derived from
//! a master seed and the work item's index, so results do not depend on the
//! worker count.

pub mod acov;
pub mod coeffmodel;
mod conv;
mod error;
pub mod exec;
pub mod innovations;
pub mod limitlaws;
pub mod mcharness;
pub mod procsim;
mod quad;
pub mod stats;
pub mod streams;
mod tail;

pub use acov::{AcovEstimate, Decomposition};
pub use coeffmodel::{AcovSequence, CoefficientModel, SlowlyVarying};
pub use error::{Error, Result};
pub use exec::Schedule;
pub use innovations::{InnovationModel, MomentClass};
pub use limitlaws::{LimitSample, Region, RegimeReport};
pub use mcharness::{ExperimentConfig, ExperimentResult};
pub use procsim::{ConvolutionMethod, SeriesSample};
