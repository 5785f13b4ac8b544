use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Bounded, globally Lipschitz scalar functions used for synaptic response
/// and Hebbian activity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseFn {
    /// `1 / (1 + e^{-x})`
    Logistic,
    /// Constant 1.
    Unit,
    /// Constant 0.
    Zero,
}

impl ResponseFn {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ResponseFn::Logistic => 1.0 / (1.0 + (-x).exp()),
            ResponseFn::Unit => 1.0,
            ResponseFn::Zero => 0.0,
        }
    }

    /// `sup |f|`.
    pub fn bound(self) -> f64 {
        match self {
            ResponseFn::Logistic | ResponseFn::Unit => 1.0,
            ResponseFn::Zero => 0.0,
        }
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            ResponseFn::Logistic => 0.25,
            ResponseFn::Unit | ResponseFn::Zero => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResponseFn::Logistic => "logistic",
            ResponseFn::Unit => "unit",
            ResponseFn::Zero => "zero",
        }
    }
}

/// FitzHugh-Nagumo constants.
///
/// `dv = (v - v^3/3 - w + I) dt + dW`, `dw = (v + a_fr - c_fr w) dt`,
/// with `v_0 = u_ini` and `w_0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FhnParams {
    pub a_fr: f64,
    pub c_fr: f64,
    pub u_ini: f64,
    pub f1: ResponseFn,
    pub f2: ResponseFn,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self { a_fr: 0.3, c_fr: 0.8, u_ini: 0.0, f1: ResponseFn::Logistic, f2: ResponseFn::Logistic }
    }
}

impl FhnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_fr >= 0.0 && self.a_fr.is_finite()) {
            return Err(Error::InvalidParameter(format!("a_fr must be >= 0, got {}", self.a_fr)));
        }
        if !(self.c_fr > 0.0 && self.c_fr.is_finite()) {
            return Err(Error::InvalidParameter(format!("c_fr must be > 0, got {}", self.c_fr)));
        }
        if !self.u_ini.is_finite() {
            return Err(Error::InvalidParameter("u_ini must be finite".into()));
        }
        Ok(())
    }

    /// `f_bar = max(sup|f1|, sup|f2|)`.
    pub fn f_bar(&self) -> f64 {
        self.f1.bound().max(self.f2.bound())
    }

    /// Drift constant `C~ = 1 + 1/c + T/c` for horizon `T`.
    ///
    /// For two inputs the voltage difference `D` satisfies
    /// `D' = D (1 - (v1^2 + v1 v2 + v2^2)/3) - R + ...` where the quadratic
    /// factor is nonnegative, so the cubic part only contracts, and the
    /// recovery difference is `R_t = int_0^t e^{-c(t-s)} D_s ds`, bounded by
    /// `||D||_t / c`. This gives `C~ = 1 + 1/c`; the extra `T/c` is kept as a
    /// margin for bounding the recovery integral by its full-horizon mass.
    pub fn drift_constant(&self, horizon: f64) -> f64 {
        1.0 + 1.0 / self.c_fr + horizon / self.c_fr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values_and_bounds() {
        assert_eq!(ResponseFn::Logistic.eval(0.0), 0.5);
        for x in [-50.0, -1.0, 0.0, 3.0, 700.0] {
            let y = ResponseFn::Logistic.eval(x);
            assert!((0.0..=1.0).contains(&y));
        }
        assert_eq!(ResponseFn::Unit.eval(-4.0), 1.0);
        assert_eq!(ResponseFn::Zero.bound(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(FhnParams::default().validate().is_ok());
        assert!(FhnParams { c_fr: 0.0, ..Default::default() }.validate().is_err());
        assert!(FhnParams { a_fr: -1.0, ..Default::default() }.validate().is_err());
    }
}
