//! Spatially stationary lattice networks of interacting neurons.
//!
//! Neurons sit on the torus `V_n = {-n, ..., n}^d` and interact through
//! offset-dependent couplings. They are driven by a Gaussian martingale
//! noise whose correlations are stationary modulo `V_n`. The crate covers:
//!
//! - [`lattice`]: torus index arithmetic, shifts and the d-dimensional DFT.
//! - [`kernels`]: interaction bounds `kappa^k` and the dominating weights
//!   `lambda^j` obtained by spectral inversion, plus the weighted path norm.
//! - [`noise`]: spectral synthesis of the correlated noise and its checks.
//! - [`dynamics`]: FitzHugh-Nagumo network with Hebbian plasticity, and the
//!   deterministic solution maps driven by an arbitrary input path.
//! - [`empirical`]: the periodic empirical measure and its statistics.
//! - [`deviations`]: plain Monte Carlo rare-event estimates and the
//!   `(1/|V_n|) log P` scaling sweep.
//! - [`cli`]: configuration files and the `simulate` / `verify` / `scaling`
//!   entry points used by the `torusnet` binary.
//!
//! See `examples/` for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod deviations;
pub mod dynamics;
pub mod empirical;
pub mod field;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod noise;
pub mod rng;

pub use field::{PathField, TimeGrid};
pub use lattice::{cube_indices, mod_torus, shift_field, LatticeShape, TorusIndex};

use lattice::TorusIndex as Idx;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid lattice shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("negative spectrum {value:e} at frequency {k:?}, t = {t}")]
    NegativeSpectrum { k: Idx, t: f64, value: f64 },
    #[error("2 kappa_* - kappa~(theta) = {value:e} is not positive on the spectral grid")]
    NonPositiveDenominator { value: f64 },
    #[error("weight tail mass {mass:e} beyond radius {radius} exceeds {limit:e}")]
    TailMass { mass: f64, radius: usize, limit: f64 },
    #[error("non-positive weight lambda at {j:?}: {value:e}")]
    NonPositiveWeight { j: Idx, value: f64 },
    #[error("non-finite state at site {site:?}, t = {t}")]
    NonfiniteState { site: Idx, t: f64 },
    #[error("degenerate Lipschitz ratio: inputs coincide in the weighted norm")]
    DivisionDegenerate,
    #[error("observable `{0}` is already registered")]
    DuplicateName(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
