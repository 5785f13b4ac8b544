//! Gaussian martingale noise correlated modulo `V_n`.
//!
//! The covariance rate `a^j(t)` is supplied through [`CovarianceSpec`]. The
//! torus spectrum `a~^{n,k}(t)` is its DFT over `V_n`, and the noise is the
//! moving average
//!
//! ```text
//! W^{n,j}_t = sum_k int_0^t c^{n,k}(s) dB^{(j-k) mod V_n}_s,
//! c^{n,.} = IDFT(sqrt(a~^{n,.}))
//! ```
//!
//! of independent Brownian motions, discretized with the filter frozen at
//! the left end of each step. With that convention one step has covariance
//! `E[dW^j dW^k] = a^{(k-j) mod V_n}(t_m) dt` exactly.

mod checks;
mod sampling;
mod spectral;

pub use checks::{
    brownian_sup_tail_check, tail_statistic, verify_covariance, BrownianTailRow, CovarianceEntry,
    CovarianceReport, TailPoint,
};
pub use sampling::{sample_noise_paths, NoiseEnsemble, NoiseStepper};
pub use spectral::{build_spectral_model, EtaReport, SpectralNoiseModel, NEGATIVE_SPECTRUM_TOL};

use crate::lattice::TorusIndex;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Covariance-rate kernel `a^j(t)`.
pub trait CovarianceSpec: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    /// `a^j(t)` for any `j` in `Z^d`.
    fn rate(&self, j: &TorusIndex, t: f64) -> f64;

    /// Continuous spectrum `a~(t, theta) = sum_{j in Z^d} a^j(t) e^{-i<j,theta>}`.
    fn spectrum(&self, theta: &[f64], t: f64) -> f64;

    fn is_time_constant(&self) -> bool;
}

/// Scalar time modulation `g(t)` applied to a stationary kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant,
    /// `g(t) = 1 + amplitude * sin(2 pi frequency t)`, `|amplitude| < 1`.
    Oscillating { amplitude: f64, frequency: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Oscillating { amplitude, frequency } => {
                1.0 + amplitude * (2.0 * PI * frequency * t).sin()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let TimeProfile::Oscillating { amplitude, frequency } = *self {
            if !(amplitude.abs() < 1.0) || !frequency.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "oscillating profile needs |amplitude| < 1, got {amplitude}"
                )));
            }
        }
        Ok(())
    }
}

/// `a^j(t) = sigma2 * g(t) * rho^{|j|_1}`.
#[derive(Clone, Debug)]
pub struct GeometricCovariance {
    dim: usize,
    sigma2: f64,
    rho: f64,
    profile: TimeProfile,
}

impl GeometricCovariance {
    pub fn new(dim: usize, sigma2: f64, rho: f64, profile: TimeProfile) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidShape(format!("dimension {dim} not in 1..=3")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("rho_a must be in [0,1), got {rho}")));
        }
        profile.validate()?;
        Ok(Self { dim, sigma2, rho, profile })
    }
}

impl CovarianceSpec for GeometricCovariance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rate(&self, j: &TorusIndex, t: f64) -> f64 {
        self.sigma2 * self.profile.value(t) * self.rho.powi(j.l1_norm() as i32)
    }

    fn spectrum(&self, theta: &[f64], t: f64) -> f64 {
        let r = self.rho;
        let line: f64 = theta
            .iter()
            .map(|th| (1.0 - r * r) / (1.0 - 2.0 * r * th.cos() + r * r))
            .product();
        self.sigma2 * self.profile.value(t) * line
    }

    fn is_time_constant(&self) -> bool {
        self.profile == TimeProfile::Constant
    }
}

/// `a^j(t) = sigma2 * g(t) * delta_{j0}`: independent Brownian motions.
#[derive(Clone, Debug)]
pub struct SiteWhiteCovariance {
    dim: usize,
    sigma2: f64,
    profile: TimeProfile,
}

impl SiteWhiteCovariance {
    pub fn new(dim: usize, sigma2: f64, profile: TimeProfile) -> Result<Self> {
        GeometricCovariance::new(dim, sigma2, 0.0, profile)?;
        Ok(Self { dim, sigma2, profile })
    }
}

impl CovarianceSpec for SiteWhiteCovariance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rate(&self, j: &TorusIndex, t: f64) -> f64 {
        if j.sup_norm() == 0 {
            self.sigma2 * self.profile.value(t)
        } else {
            0.0
        }
    }

    fn spectrum(&self, _theta: &[f64], t: f64) -> f64 {
        self.sigma2 * self.profile.value(t)
    }

    fn is_time_constant(&self) -> bool {
        self.profile == TimeProfile::Constant
    }
}
