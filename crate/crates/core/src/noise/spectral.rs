use super::CovarianceSpec;
use crate::field::TimeGrid;
use crate::lattice::{cube_indices, fft_nd, symmetrize_sign_flips, Dft, LatticeShape, TorusIndex};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

/// Spectrum values in `[-NEGATIVE_SPECTRUM_TOL, 0)` are rounding and are
/// clamped to zero; anything below is an inadmissible covariance.
pub const NEGATIVE_SPECTRUM_TOL: f64 = 1e-12;

/// Above this many stored values the per-step filter multipliers of a
/// time-dependent spec are recomputed on demand instead of cached.
const MULTIPLIER_CACHE_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct SpectralNoiseModel {
    spec: Arc<dyn CovarianceSpec>,
    shape: LatticeShape,
    grid: TimeGrid,
    dft: Dft,
    a_max: f64,
    /// `sqrt(a~^{n,k}(t_m))` per grid step (one row when time-constant).
    multipliers: Option<Vec<Vec<f64>>>,
    silent: bool,
}

/// Validate the spectrum on every grid time and prepare the sampling filters.
pub fn build_spectral_model(
    spec: Arc<dyn CovarianceSpec>,
    shape: LatticeShape,
    grid: TimeGrid,
) -> Result<SpectralNoiseModel> {
    if spec.dim() != shape.dim() {
        return Err(Error::InvalidParameter(format!(
            "covariance spec is {}-dimensional but the lattice is {}-dimensional",
            spec.dim(),
            shape.dim()
        )));
    }
    let idx = cube_indices(&shape);
    for j in &idx {
        for t in [0.0, grid.horizon()] {
            let a = spec.rate(j, t);
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("a^{j}({t}) is not finite")));
            }
            for flip in 1..(1u32 << shape.dim()) {
                let c: Vec<i64> = j
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(p, &x)| if flip & (1 << p) != 0 { -x } else { x })
                    .collect();
                let b = spec.rate(&TorusIndex::new(&c), t);
                if (a - b).abs() > 1e-12 * a.abs().max(1e-300) {
                    return Err(Error::InvalidParameter(format!(
                        "covariance rate is not symmetric under sign flips at {j}"
                    )));
                }
            }
        }
    }
    let dft = Dft::new(shape);
    let mut model = SpectralNoiseModel {
        spec,
        shape,
        grid,
        dft,
        a_max: 0.0,
        multipliers: None,
        silent: false,
    };
    let steps: Vec<usize> = if model.spec.is_time_constant() {
        vec![0]
    } else {
        (0..=grid.steps()).collect()
    };
    let cache = model.spec.is_time_constant()
        || steps.len() * shape.site_count() <= MULTIPLIER_CACHE_LIMIT;
    let mut rows = Vec::new();
    let mut a_max = 0.0f64;
    for &step in &steps {
        let spectrum = model.torus_spectrum(grid.time(step))?;
        a_max = spectrum.iter().cloned().fold(a_max, f64::max);
        if cache {
            rows.push(spectrum.iter().map(|v| v.sqrt()).collect());
        }
    }
    model.a_max = a_max;
    model.silent = a_max == 0.0;
    if cache {
        model.multipliers = Some(rows);
    }
    Ok(model)
}

impl SpectralNoiseModel {
    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn spec(&self) -> &dyn CovarianceSpec {
        self.spec.as_ref()
    }

    pub(crate) fn dft(&self) -> &Dft {
        &self.dft
    }

    /// `max_{k,t} a~^{n,k}(t)` over the grid.
    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// True when the spectrum vanishes identically (zero noise).
    pub fn is_silent(&self) -> bool {
        self.silent
    }

    /// `a^j(t)` restricted to `V_n`, flat order.
    pub fn rates(&self, t: f64) -> Vec<f64> {
        cube_indices(&self.shape).iter().map(|j| self.spec.rate(j, t)).collect()
    }

    /// `a~^{n,k}(t)` for `k` in `V_n`, clamped at zero within tolerance.
    pub fn torus_spectrum(&self, t: f64) -> Result<Vec<f64>> {
        let spectrum = self.dft.forward_real(&self.rates(t));
        let mut out = Vec::with_capacity(spectrum.len());
        for (m, z) in spectrum.iter().enumerate() {
            let v = z.re;
            if v < -NEGATIVE_SPECTRUM_TOL {
                return Err(Error::NegativeSpectrum { k: self.shape.index(m), t, value: v });
            }
            out.push(v.max(0.0));
        }
        Ok(out)
    }

    /// Filter multipliers `sqrt(a~^{n,k})` at the left end of step `step`.
    pub fn multipliers(&self, step: usize) -> Cow<'_, [f64]> {
        match &self.multipliers {
            Some(rows) if rows.len() == 1 => Cow::Borrowed(&rows[0]),
            Some(rows) => Cow::Borrowed(&rows[step]),
            None => {
                let spectrum = self
                    .torus_spectrum(self.grid.time(step))
                    .expect("spectrum validated at construction");
                Cow::Owned(spectrum.into_iter().map(f64::sqrt).collect())
            }
        }
    }

    /// Torus filter `c^{n,j}(t)` for `j` in `V_n`.
    pub fn torus_filter(&self, t: f64) -> Result<Vec<f64>> {
        let sqrt: Vec<Complex64> = self
            .torus_spectrum(t)?
            .into_iter()
            .map(|v| Complex64::new(v.sqrt(), 0.0))
            .collect();
        let mut c: Vec<f64> = self.dft.inverse(&sqrt).into_iter().map(|z| z.re).collect();
        symmetrize_sign_flips(&self.shape, &mut c);
        Ok(c)
    }

    /// Limit filter `c^j(t)` for `|j|_inf <= window`, by trapezoidal
    /// quadrature of `sqrt(a~(t, theta))` on an `M^d` grid.
    pub fn limit_filter(&self, t: f64, grid_size: usize, window: usize) -> Result<Vec<f64>> {
        limit_filter(self.spec.as_ref(), t, grid_size, window)
    }

    /// Discrepancies `eta_{n,j}` and `eta_{n,*}`.
    ///
    /// `d/dt` is a centered difference on the time grid (one-sided at the
    /// ends). The sum over `Z^d` is taken over `|j|_inf <= M/4`, where the
    /// quadrature of `c^j` is accurate; `quadrature_gap` compares against the
    /// `M/2` grid.
    pub fn eta(&self, grid_size: usize) -> Result<EtaReport> {
        let n = self.shape.radius();
        let window = grid_size / 4;
        if window <= n {
            return Err(Error::InvalidParameter(format!(
                "eta needs M/4 > n, got M={grid_size}, n={n}"
            )));
        }
        let win_shape = LatticeShape::new(self.shape.dim(), window)?;
        let win_idx = cube_indices(&win_shape);
        let inner: Vec<Option<usize>> = win_idx
            .iter()
            .map(|j| (j.sup_norm() as usize <= n).then(|| self.shape.flat(j)))
            .collect();
        let frak = |t: f64| -> Result<Vec<f64>> {
            let torus = self.torus_filter(t)?;
            let limit = self.limit_filter(t, grid_size, window)?;
            Ok(limit
                .iter()
                .zip(&inner)
                .map(|(c, tor)| tor.map_or(0.0, |m| torus[m]) - c)
                .collect())
        };
        let size = win_idx.len();
        let mut sup_c = vec![0.0f64; size];
        let mut sup_dc = vec![0.0f64; size];
        if self.spec.is_time_constant() {
            let c = frak(0.0)?;
            for (s, v) in sup_c.iter_mut().zip(&c) {
                *s = v.abs();
            }
        } else {
            let k = self.grid.steps();
            let dt = self.grid.dt();
            let mut prev = frak(self.grid.time(0))?;
            let mut cur = frak(self.grid.time(1))?;
            for m in 0..size {
                sup_c[m] = prev[m].abs().max(cur[m].abs());
                sup_dc[m] = ((cur[m] - prev[m]) / dt).abs();
            }
            for step in 1..k {
                let next = frak(self.grid.time(step + 1))?;
                for m in 0..size {
                    sup_c[m] = sup_c[m].max(next[m].abs());
                    sup_dc[m] = sup_dc[m].max(((next[m] - prev[m]) / (2.0 * dt)).abs());
                }
                if step + 1 == k {
                    for m in 0..size {
                        sup_dc[m] = sup_dc[m].max(((next[m] - cur[m]) / dt).abs());
                    }
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        let horizon = self.grid.horizon();
        let mut per_site = vec![0.0; self.shape.site_count()];
        let mut eta_star = 0.0;
        let mut outside = 0.0;
        for m in 0..size {
            let e = sup_c[m] + horizon * sup_dc[m];
            eta_star += e;
            match inner[m] {
                Some(flat) => per_site[flat] = e,
                None => outside += e,
            }
        }
        let coarse = self.limit_filter(0.0, grid_size / 2, n)?;
        let fine = self.limit_filter(0.0, grid_size, n)?;
        let quadrature_gap = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(EtaReport { n, eta_star, per_site, outside, quadrature_gap, grid_size })
    }
}

/// `c^j(t)` on `|j|_inf <= window` (flat order of `V_window`).
pub(crate) fn limit_filter(
    spec: &dyn CovarianceSpec,
    t: f64,
    grid_size: usize,
    window: usize,
) -> Result<Vec<f64>> {
    let dim = spec.dim();
    if 2 * window + 1 > grid_size {
        return Err(Error::InvalidParameter(format!(
            "quadrature grid M={grid_size} too small for window {window}"
        )));
    }
    let total = grid_size.pow(dim as u32);
    let mut buf = Vec::with_capacity(total);
    let mut theta = vec![0.0; dim];
    for pos in 0..total {
        let mut rest = pos;
        for p in (0..dim).rev() {
            theta[p] = 2.0 * PI * (rest % grid_size) as f64 / grid_size as f64;
            rest /= grid_size;
        }
        let a = spec.spectrum(&theta, t);
        if a < -NEGATIVE_SPECTRUM_TOL {
            return Err(Error::NegativeSpectrum {
                k: TorusIndex::origin(dim),
                t,
                value: a,
            });
        }
        buf.push(Complex64::new(a.max(0.0).sqrt(), 0.0));
    }
    fft_nd(&mut buf, grid_size, dim, true);
    let norm = 1.0 / total as f64;
    let m = grid_size as i64;
    let shape = LatticeShape::new(dim, window)?;
    Ok(cube_indices(&shape)
        .iter()
        .map(|j| {
            let pos = j
                .coords()
                .iter()
                .fold(0usize, |acc, &c| acc * grid_size + c.rem_euclid(m) as usize);
            buf[pos].re * norm
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaReport {
    pub n: usize,
    pub eta_star: f64,
    /// `eta_{n,j}` for `j` in `V_n`, flat order.
    pub per_site: Vec<f64>,
    /// Contribution of `j` outside `V_n` (where the torus filter is zero).
    pub outside: f64,
    /// Max change of `c^j(0)`, `j` in `V_n`, between the `M/2` and `M` grids.
    pub quadrature_gap: f64,
    pub grid_size: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{GeometricCovariance, SiteWhiteCovariance, TimeProfile};

    fn geometric(n: usize, profile: TimeProfile) -> SpectralNoiseModel {
        let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, profile).unwrap());
        build_spectral_model(spec, LatticeShape::new(1, n).unwrap(), TimeGrid::new(1.0, 0.01).unwrap())
            .unwrap()
    }

    #[test]
    fn site_white_has_identity_spectrum_and_delta_filter() {
        let spec = Arc::new(SiteWhiteCovariance::new(2, 1.0, TimeProfile::Constant).unwrap());
        let shape = LatticeShape::new(2, 2).unwrap();
        let model = build_spectral_model(spec, shape, TimeGrid::new(1.0, 0.1).unwrap()).unwrap();
        assert!(model.torus_spectrum(0.0).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let filter = model.torus_filter(0.0).unwrap();
        let origin = shape.flat(&TorusIndex::origin(2));
        for (m, c) in filter.iter().enumerate() {
            let want = if m == origin { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-14);
        }
        assert!(model.eta(64).unwrap().eta_star < 1e-12);
    }

    #[test]
    fn torus_spectrum_positive_for_geometric() {
        let model = geometric(4, TimeProfile::Constant);
        let spec = model.torus_spectrum(0.0).unwrap();
        assert!(spec.iter().all(|&v| v > 0.0));
        // DFT of the truncated kernel at the origin frequency
        let sum: f64 = (-4i32..=4).map(|j| 0.4f64.powi(j.abs())).sum();
        let zero = model.shape().flat(&TorusIndex::origin(1));
        assert!((spec[zero] - sum).abs() < 1e-13);
    }

    #[test]
    fn filter_is_even_and_squares_to_kernel() {
        let model = geometric(4, TimeProfile::Constant);
        let shape = *model.shape();
        let c = model.torus_filter(0.0).unwrap();
        for j in cube_indices(&shape) {
            assert_eq!(c[shape.flat(&j)].to_bits(), c[shape.flat(&j.neg())].to_bits());
        }
        let a = model.rates(0.0);
        for m in cube_indices(&shape) {
            let conv: f64 = cube_indices(&shape)
                .iter()
                .map(|k| c[shape.flat(&k.neg())] * c[shape.add_flat(shape.flat(k), &m)])
                .sum();
            assert!((conv - a[shape.flat(&m)]).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_spectrum_rejected() {
        #[derive(Debug)]
        struct Bad;
        impl CovarianceSpec for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn rate(&self, j: &TorusIndex, _t: f64) -> f64 {
                if j.sup_norm() <= 1 { 1.0 } else { 0.0 }
            }
            fn spectrum(&self, theta: &[f64], _t: f64) -> f64 {
                1.0 + 2.0 * theta[0].cos()
            }
            fn is_time_constant(&self) -> bool {
                true
            }
        }
        let res = build_spectral_model(
            Arc::new(Bad),
            LatticeShape::new(1, 3).unwrap(),
            TimeGrid::new(1.0, 0.1).unwrap(),
        );
        assert!(matches!(res, Err(Error::NegativeSpectrum { .. })));
    }

    #[test]
    fn eta_decreases_with_n() {
        let etas: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|&n| geometric(n, TimeProfile::Constant).eta(1024).unwrap().eta_star)
            .collect();
        for w in etas.windows(2) {
            assert!(w[1] < w[0], "{etas:?}");
        }
    }

    #[test]
    fn time_profile_enters_eta_through_derivative() {
        let flat = geometric(4, TimeProfile::Constant).eta(256).unwrap();
        let osc = geometric(4, TimeProfile::Oscillating { amplitude: 0.5, frequency: 1.0 })
            .eta(256)
            .unwrap();
        assert!(osc.eta_star > flat.eta_star);
        assert!(flat.quadrature_gap < 1e-12);
    }
}
