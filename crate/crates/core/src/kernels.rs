//! Interaction bounds `kappa^k` and the dominating weights `lambda^j`.
//!
//! The weights are defined through their Fourier series
//!
//! ```text
//! lambda~(theta) = h / (2 kappa_* - kappa~(theta)),   h = kappa_*
//! ```
//!
//! so that `sum_j lambda^j = lambda~(0) = 1`. Taking Fourier coefficients of
//! `lambda~ (2 kappa_* - kappa~) = h` gives
//! `sum_k lambda^{j-k} kappa^k - 2 kappa_* lambda^j = -h delta_{j0}`, which is
//! the domination inequality with equality away from the origin.
//!
//! `lambda^j` is recovered by sampling `lambda~` on a uniform `M^d` frequency
//! grid and applying an inverse FFT (trapezoidal quadrature of the Fourier
//! integral; converges geometrically because `lambda~` is analytic).

use crate::field::PathField;
use crate::lattice::{cube_indices, fft_nd, symmetrize_sign_flips, LatticeShape, TorusIndex};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Tail mass of `lambda` beyond the stored radius that is tolerated.
pub const LAMBDA_TAIL_LIMIT: f64 = 1e-6;

const RESOLUTION_FACTOR: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayFamily {
    /// `kappa^k = scale * rate^{|k|_1}`
    Geometric,
    /// `kappa^k = scale * rate^{|k|_2}`
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub family: DecayFamily,
    pub rate: f64,
    pub scale: f64,
    pub support: usize,
}

impl DecaySpec {
    pub fn geometric(rate: f64, scale: f64, support: usize) -> Self {
        Self { family: DecayFamily::Geometric, rate, scale, support }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Origin {
    Decay(DecaySpec),
    Table,
}

/// Dominating weights stored on `V_{R_lambda}`.
#[derive(Clone, Debug)]
pub struct LambdaWeights {
    shape: LatticeShape,
    values: Vec<f64>,
    grid_size: usize,
    tail_mass: f64,
    unresolved: usize,
}

impl LambdaWeights {
    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn radius(&self) -> usize {
        self.shape.radius()
    }

    /// Spectral grid size `M` per dimension.
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Mass beyond `R_lambda` before renormalization.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Entries below the FFT rounding level that were recomputed from the
    /// convolution identity instead.
    pub fn unresolved(&self) -> usize {
        self.unresolved
    }

    pub fn at(&self, j: &TorusIndex) -> f64 {
        if j.sup_norm() as usize > self.shape.radius() {
            0.0
        } else {
            self.values[self.shape.flat(j)]
        }
    }
}

/// Interaction bounds and, once built, the dominating weights.
#[derive(Clone, Debug)]
pub struct KernelFamily {
    kappa_shape: LatticeShape,
    kappa: Vec<f64>,
    kappa_star: f64,
    origin: Origin,
    lambda: Option<LambdaWeights>,
}

/// Build `kappa^k` on `|k|_inf <= R` from a decay specification.
pub fn build_kappa(dim: usize, spec: DecaySpec) -> Result<KernelFamily> {
    if !(spec.rate > 0.0 && spec.rate < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa decay rate must be in (0,1), got {}",
            spec.rate
        )));
    }
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kappa scale must be positive, got {}",
            spec.scale
        )));
    }
    if spec.support < 1 {
        return Err(Error::InvalidParameter("kappa support radius must be >= 1".into()));
    }
    let shape = LatticeShape::new(dim, spec.support)?;
    let kappa: Vec<f64> = cube_indices(&shape)
        .iter()
        .map(|k| {
            let dist = match spec.family {
                DecayFamily::Geometric => k.l1_norm() as f64,
                DecayFamily::Exponential => k.euclid_norm(),
            };
            spec.scale * spec.rate.powf(dist)
        })
        .collect();
    let kappa_star = match spec.family {
        DecayFamily::Geometric => spec.scale * geometric_line_sum(spec.rate, None).powi(dim as i32),
        DecayFamily::Exponential => {
            kappa.iter().sum::<f64>() + exponential_remainder_bound(dim, spec)
        }
    };
    Ok(KernelFamily { kappa_shape: shape, kappa, kappa_star, origin: Origin::Decay(spec), lambda: None })
}

/// `sum_{|k| <= n} rho^{|k|}` in one dimension, or the full sum for `None`.
fn geometric_line_sum(rho: f64, radius: Option<usize>) -> f64 {
    match radius {
        None => (1.0 + rho) / (1.0 - rho),
        Some(n) => (1.0 + rho - 2.0 * rho.powi(n as i32 + 1)) / (1.0 - rho),
    }
}

/// Upper bound for `sum_{|k|_inf > R} scale * rho^{|k|_2}` using `|k|_2 >= |k|_inf`.
fn exponential_remainder_bound(dim: usize, spec: DecaySpec) -> f64 {
    let d = dim as i32;
    let mut total = 0.0;
    let mut r = spec.support + 1;
    loop {
        let shell = ((2 * r + 1) as f64).powi(d) - ((2 * r - 1) as f64).powi(d);
        let term = shell * spec.rate.powi(r as i32);
        total += term;
        if term < 1e-18 * total.max(1e-300) || r > spec.support + 100_000 {
            break;
        }
        r += 1;
    }
    spec.scale * total
}

impl KernelFamily {
    /// Explicit table on `V_R` (flat order). Must be positive and invariant
    /// under coordinate sign flips.
    pub fn from_table(shape: LatticeShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.site_count() {
            return Err(Error::InvalidParameter(format!(
                "kappa table needs {} entries, got {}",
                shape.site_count(),
                values.len()
            )));
        }
        if let Some((m, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {v} at {:?}",
                shape.index(m)
            )));
        }
        for (m, k) in cube_indices(&shape).iter().enumerate() {
            for flip in 1..(1u32 << shape.dim()) {
                let mut c = k.coords().to_vec();
                for (p, cp) in c.iter_mut().enumerate() {
                    if flip & (1 << p) != 0 {
                        *cp = -*cp;
                    }
                }
                let other = values[shape.flat(&TorusIndex::new(&c))];
                if (other - values[m]).abs() > 1e-12 * values[m].abs() {
                    return Err(Error::InvalidParameter(format!(
                        "kappa is not symmetric under sign flips at {k:?}"
                    )));
                }
            }
        }
        let kappa_star = values.iter().sum();
        Ok(Self { kappa_shape: shape, kappa: values, kappa_star, origin: Origin::Table, lambda: None })
    }

    pub fn dim(&self) -> usize {
        self.kappa_shape.dim()
    }

    /// Support radius `R` of the stored `kappa`.
    pub fn support(&self) -> usize {
        self.kappa_shape.radius()
    }

    pub fn kappa_shape(&self) -> &LatticeShape {
        &self.kappa_shape
    }

    pub fn kappa_values(&self) -> &[f64] {
        &self.kappa
    }

    pub fn kappa(&self, k: &TorusIndex) -> f64 {
        if k.sup_norm() as usize > self.support() {
            match &self.origin {
                Origin::Decay(spec) => {
                    let dist = match spec.family {
                        DecayFamily::Geometric => k.l1_norm() as f64,
                        DecayFamily::Exponential => k.euclid_norm(),
                    };
                    spec.scale * spec.rate.powf(dist)
                }
                Origin::Table => 0.0,
            }
        } else {
            self.kappa[self.kappa_shape.flat(k)]
        }
    }

    /// `kappa_* = sum_k kappa^k` over the whole lattice (closed form for the
    /// geometric family, truncated sum plus remainder bound otherwise).
    pub fn kappa_star(&self) -> f64 {
        self.kappa_star
    }

    /// `kappa_bar_n = sum_{k not in V_n} kappa^k`.
    pub fn kappa_tail(&self, n: usize) -> f64 {
        match &self.origin {
            Origin::Decay(spec) if spec.family == DecayFamily::Geometric => {
                let full = geometric_line_sum(spec.rate, None).powi(self.dim() as i32);
                let inner = geometric_line_sum(spec.rate, Some(n)).powi(self.dim() as i32);
                (spec.scale * (full - inner)).max(0.0)
            }
            _ => {
                let r = n.min(self.support());
                let inner: f64 = cube_indices(&self.kappa_shape.with_radius(r))
                    .iter()
                    .map(|k| self.kappa[self.kappa_shape.flat(k)])
                    .sum();
                (self.kappa_star - inner).max(0.0)
            }
        }
    }

    pub fn lambda(&self) -> Option<&LambdaWeights> {
        self.lambda.as_ref()
    }

    fn lambda_or_err(&self) -> Result<&LambdaWeights> {
        self.lambda
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("lambda weights have not been built".into()))
    }

    /// `kappa~(theta)` sampled on the `M^d` grid `theta_q = 2 pi q / M`, in
    /// standard FFT order.
    pub fn kappa_spectrum(&self, grid_size: usize) -> Vec<f64> {
        let dim = self.dim();
        let m = grid_size as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); grid_size.pow(dim as u32)];
        for (flat, k) in cube_indices(&self.kappa_shape).iter().enumerate() {
            let pos = k
                .coords()
                .iter()
                .fold(0usize, |acc, &c| acc * grid_size + c.rem_euclid(m) as usize);
            buf[pos] += self.kappa[flat];
        }
        fft_nd(&mut buf, grid_size, dim, false);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Folded weights `L_s = sum_{j : j mod V_m = s} lambda^j` for a torus,
    /// so that `||X||^2_{T,lambda} = sum_s L_s ||X^s||_T^2` for a
    /// `V_m`-periodic field.
    pub fn folded_weights(&self, shape: &LatticeShape) -> Result<Vec<f64>> {
        let lambda = self.lambda_or_err()?;
        if shape.dim() != self.dim() {
            return Err(Error::InvalidParameter("dimension mismatch".into()));
        }
        let mut folded = vec![0.0; shape.site_count()];
        for (flat, j) in cube_indices(&lambda.shape).iter().enumerate() {
            folded[shape.flat(&shape.reduce(j.coords()))] += lambda.values[flat];
        }
        Ok(folded)
    }
}

/// Compute `lambda^j` on `|j|_inf <= R_lambda` from an `M^d` spectral grid.
pub fn build_lambda(
    mut family: KernelFamily,
    grid_size: usize,
    lambda_radius: usize,
) -> Result<KernelFamily> {
    if grid_size < 4 * lambda_radius || grid_size < 2 * family.support() + 1 {
        return Err(Error::InvalidParameter(format!(
            "spectral grid M={grid_size} must be >= 4 R_lambda ({}) and > 2 R ({})",
            4 * lambda_radius,
            2 * family.support()
        )));
    }
    let dim = family.dim();
    let h = family.kappa_star;
    let two_kappa_star = 2.0 * family.kappa_star;
    let kappa_tilde = family.kappa_spectrum(grid_size);
    let min_denominator = kappa_tilde
        .iter()
        .map(|&k| two_kappa_star - k)
        .fold(f64::INFINITY, f64::min);
    if !(min_denominator > 0.0) {
        return Err(Error::NonPositiveDenominator { value: min_denominator });
    }
    let mut buf: Vec<Complex64> = kappa_tilde
        .iter()
        .map(|&k| Complex64::new(h / (two_kappa_star - k), 0.0))
        .collect();
    fft_nd(&mut buf, grid_size, dim, true);
    let norm = 1.0 / (grid_size as f64).powi(dim as i32);
    let total: f64 = buf.iter().map(|z| z.re * norm).sum();

    // Inverse-FFT values carry an absolute rounding error of about
    // `noise_floor`; below `RESOLUTION_FACTOR * noise_floor` their relative
    // error would exceed what the domination check tolerates.
    let max_tilde = h / min_denominator;
    let noise_floor = 8.0 * f64::EPSILON * (total_len(grid_size, dim) as f64).log2().max(1.0) * max_tilde;
    let resolved_above = RESOLUTION_FACTOR * noise_floor;
    let shape = LatticeShape::new(dim, lambda_radius)?;
    let m = grid_size as i64;
    let mut values = Vec::with_capacity(shape.site_count());
    let mut unresolved = Vec::new();
    for (flat, j) in cube_indices(&shape).into_iter().enumerate() {
        let pos = j
            .coords()
            .iter()
            .fold(0usize, |acc, &c| acc * grid_size + c.rem_euclid(m) as usize);
        let v = buf[pos].re * norm;
        if v < -noise_floor {
            return Err(Error::NonPositiveWeight { j, value: v });
        }
        if v <= resolved_above {
            unresolved.push(flat);
        }
        values.push(v.max(0.0));
    }
    fill_unresolved(&family, &shape, &mut values, &mut unresolved)?;
    let unresolved = unresolved.len();
    symmetrize_sign_flips(&shape, &mut values);
    let inside: f64 = values.iter().sum();
    let tail_mass = (total - inside).max(0.0);
    if tail_mass > LAMBDA_TAIL_LIMIT {
        return Err(Error::TailMass { mass: tail_mass, radius: lambda_radius, limit: LAMBDA_TAIL_LIMIT });
    }
    // Redistribute the truncated mass so the stored weights sum to one.
    for v in &mut values {
        *v /= inside;
    }
    family.lambda = Some(LambdaWeights { shape, values, grid_size, tail_mass, unresolved });
    Ok(family)
}

fn total_len(side: usize, dim: usize) -> usize {
    side.pow(dim as u32)
}

/// Entries too small for the FFT to resolve in relative terms are recomputed from the identity
/// `lambda^j = (2 kappa_*)^{-1} sum_k kappa^k lambda^{j-k}` (valid for
/// `j != 0`), sweeping outward in `|j|_1` so each entry sees a positive
/// neighbour nearer the origin. Values beyond `R_lambda` count as zero.
fn fill_unresolved(
    family: &KernelFamily,
    shape: &LatticeShape,
    values: &mut [f64],
    unresolved: &mut [usize],
) -> Result<()> {
    if unresolved.is_empty() {
        return Ok(());
    }
    unresolved.sort_by_key(|&f| (shape.index(f).l1_norm(), f));
    let kappa_idx = cube_indices(&family.kappa_shape);
    let radius = shape.radius() as i64;
    let inv = 1.0 / (2.0 * family.kappa_star);
    for _sweep in 0..60 {
        let mut change = 0.0f64;
        for &f in unresolved.iter() {
            let j = shape.index(f);
            let mut acc = 0.0;
            for (k, kv) in kappa_idx.iter().zip(&family.kappa) {
                let rest = j.add(&k.neg());
                if rest.sup_norm() <= radius {
                    acc += kv * values[shape.flat(&rest)];
                }
            }
            let next = acc * inv;
            change = change.max((next - values[f]).abs() / next.max(f64::MIN_POSITIVE));
            values[f] = next;
        }
        if change < 1e-13 {
            break;
        }
    }
    for &f in unresolved.iter() {
        if !(values[f] > 0.0) {
            return Err(Error::NonPositiveWeight { j: shape.index(f), value: values[f] });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    /// `max_j (sum_k lambda^{j-k} kappa^k - 2 kappa_* lambda^j) / lambda^j`
    /// over the safe interior `|j|_inf <= R_lambda - R`.
    pub max_violation: f64,
    /// Same maximum without the `lambda^j` normalization.
    pub max_abs_violation: f64,
    /// `|sum_j lambda^j - 1|`.
    pub normalization_error: f64,
    pub min_lambda: f64,
    /// `sum_k lambda^{-k} kappa^k - 2 kappa_* lambda^0`; strictly negative.
    pub origin_gap: f64,
    pub interior_radius: usize,
}

/// Evaluate the domination inequality by direct convolution.
pub fn check_domination(family: &KernelFamily) -> Result<DominationReport> {
    let lambda = family.lambda_or_err()?;
    let r = family.support();
    let interior_radius = lambda.radius().saturating_sub(r);
    let interior = LatticeShape::new(family.dim(), interior_radius)?;
    let kappa_idx = cube_indices(&family.kappa_shape);
    let two_kappa_star = 2.0 * family.kappa_star;
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_abs_violation = f64::NEG_INFINITY;
    let mut origin_gap = f64::NAN;
    for j in cube_indices(&interior) {
        let conv: f64 = kappa_idx
            .iter()
            .zip(&family.kappa)
            .map(|(k, &kv)| lambda.at(&j.add(&k.neg())) * kv)
            .sum();
        let lj = lambda.at(&j);
        let gap = conv - two_kappa_star * lj;
        if j.sup_norm() == 0 {
            origin_gap = gap;
        }
        max_abs_violation = max_abs_violation.max(gap);
        max_violation = max_violation.max(gap / lj);
    }
    Ok(DominationReport {
        max_violation,
        max_abs_violation,
        normalization_error: (lambda.values.iter().sum::<f64>() - 1.0).abs(),
        min_lambda: lambda.values.iter().cloned().fold(f64::INFINITY, f64::min),
        origin_gap,
        interior_radius,
    })
}

/// `sqrt(sum_j lambda^j (sup_t |X^j_t|)^2)` using the periodic extension of
/// the torus field.
pub fn weighted_norm(field: &PathField, family: &KernelFamily) -> Result<f64> {
    weighted_norm_of_sups(&field.site_sups(), field.shape(), family)
}

/// Weighted norm from precomputed per-site sup norms.
pub fn weighted_norm_of_sups(
    sups: &[f64],
    shape: &LatticeShape,
    family: &KernelFamily,
) -> Result<f64> {
    let folded = family.folded_weights(shape)?;
    Ok(folded
        .iter()
        .zip(sups)
        .map(|(w, s)| w * s * s)
        .sum::<f64>()
        .sqrt())
}

/// Write a table over a cube as CSV rows `k1,...,kd,value`.
pub fn write_table_csv<W: Write>(out: &mut W, shape: &LatticeShape, values: &[f64]) -> Result<()> {
    let header: Vec<String> = (1..=shape.dim()).map(|p| format!("k{p}")).collect();
    writeln!(out, "{},value", header.join(","))?;
    for (flat, k) in cube_indices(shape).iter().enumerate() {
        let coords: Vec<String> = k.coords().iter().map(|c| c.to_string()).collect();
        writeln!(out, "{},{}", coords.join(","), values[flat])?;
    }
    Ok(())
}

/// Read a `kappa` table written by [`write_table_csv`] (rows may come in any
/// order but must cover a full cube).
pub fn read_kappa_csv<R: BufRead>(input: R) -> Result<KernelFamily> {
    let mut rows: Vec<(Vec<i64>, f64)> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || lineno == 0 && line.starts_with('k') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_err = || Error::Config(format!("line {}: malformed kappa row `{line}`", lineno + 1));
        let (value, coords) = fields.split_last().ok_or_else(parse_err)?;
        let value: f64 = value.parse().map_err(|_| parse_err())?;
        let coords: Vec<i64> = coords
            .iter()
            .map(|c| c.parse().map_err(|_| parse_err()))
            .collect::<Result<_>>()?;
        rows.push((coords, value));
    }
    let dim = rows.first().map(|r| r.0.len()).unwrap_or(0);
    let radius = rows
        .iter()
        .flat_map(|r| r.0.iter().map(|c| c.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    let shape = LatticeShape::new(dim, radius)?;
    if rows.len() != shape.site_count() || rows.iter().any(|r| r.0.len() != dim) {
        return Err(Error::Config(format!(
            "kappa table must cover the full cube V_{radius} in d={dim}"
        )));
    }
    let mut values = vec![f64::NAN; shape.site_count()];
    for (coords, v) in rows {
        values[shape.flat(&TorusIndex::new(&coords))] = v;
    }
    KernelFamily::from_table(shape, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference() -> KernelFamily {
        build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40)).unwrap(), 4096, 60).unwrap()
    }

    #[test]
    fn geometric_closed_forms() {
        let fam = build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40)).unwrap();
        assert!((fam.kappa_star() - 3.0).abs() < 1e-15);
        assert!((fam.kappa_tail(4) - 0.125).abs() < 1e-15);
        let fam2 = build_kappa(2, DecaySpec::geometric(0.5, 1.0, 5)).unwrap();
        assert_eq!(fam2.kappa(&TorusIndex::new(&[1, -2])), fam2.kappa(&TorusIndex::new(&[-1, 2])));
        assert!((fam2.kappa_star() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_rate_outside_unit_interval() {
        assert!(build_kappa(1, DecaySpec::geometric(1.0, 1.0, 4)).is_err());
        assert!(build_kappa(1, DecaySpec::geometric(0.0, 1.0, 4)).is_err());
    }

    #[test]
    fn kappa_spectrum_matches_geometric_fourier_sum() {
        let fam = build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40)).unwrap();
        let m = 64;
        let spec = fam.kappa_spectrum(m);
        for (q, &v) in spec.iter().enumerate() {
            let theta = 2.0 * PI * q as f64 / m as f64;
            let exact = 0.75 / (1.25 - theta.cos());
            assert!((v - exact).abs() < 1e-11, "q={q}: {v} vs {exact}");
        }
        assert!((spec[0] - 3.0).abs() < 1e-11);
    }

    #[test]
    fn lambda_positive_normalized_and_even() {
        let fam = reference();
        let lam = fam.lambda().unwrap();
        assert!(lam.values().iter().all(|&v| v > 0.0));
        assert!((lam.values().iter().sum::<f64>() - 1.0).abs() < 1e-8);
        for j in 1..=60 {
            let a = lam.at(&TorusIndex::new(&[j]));
            let b = lam.at(&TorusIndex::new(&[-j]));
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300) + 1e-18);
        }
    }

    #[test]
    fn domination_holds_with_strict_origin() {
        let report = check_domination(&reference()).unwrap();
        assert!(report.max_violation <= 1e-8, "{report:?}");
        assert!(report.min_lambda > 0.0);
        assert!(report.origin_gap < 0.0);
        assert!(report.normalization_error <= 1e-8);
    }

    #[test]
    fn lambda_converges_when_grid_doubles() {
        let kappa = build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40)).unwrap();
        let a = build_lambda(kappa.clone(), 4096, 60).unwrap();
        let b = build_lambda(kappa, 8192, 60).unwrap();
        let diff = a
            .lambda()
            .unwrap()
            .values()
            .iter()
            .zip(b.lambda().unwrap().values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-9, "diff {diff}");
    }

    #[test]
    fn lambda_matches_neumann_series_oracle() {
        // lambda = (1/2) sum_m (2 kappa_*)^{-m} kappa^{*m}, built by direct
        // convolution on a window wide enough that truncation is negligible.
        let rho: f64 = 0.5;
        let kstar = (1.0 + rho) / (1.0 - rho);
        let half = 200usize;
        let width = 2 * half + 1;
        let kappa: Vec<f64> = (0..width)
            .map(|i| {
                let k = i as i64 - half as i64;
                if k.abs() <= 40 { rho.powi(k.abs() as i32) } else { 0.0 }
            })
            .collect();
        let mut power = vec![0.0; width];
        power[half] = 1.0;
        let mut lambda = vec![0.0; width];
        let mut coef = 0.5;
        for _ in 0..80 {
            for i in 0..width {
                lambda[i] += coef * power[i];
            }
            let mut next = vec![0.0; width];
            for (i, &p) in power.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (k, &kv) in kappa.iter().enumerate() {
                    if kv == 0.0 {
                        continue;
                    }
                    let idx = i as i64 + k as i64 - half as i64;
                    if (0..width as i64).contains(&idx) {
                        next[idx as usize] += p * kv;
                    }
                }
            }
            power = next;
            coef /= 2.0 * kstar;
        }
        let fam = reference();
        let lam = fam.lambda().unwrap();
        for j in -20i64..=20 {
            let got = lam.at(&TorusIndex::new(&[j]));
            let want = lambda[(j + half as i64) as usize];
            assert!((got - want).abs() < 1e-10, "j={j}: {got} vs {want}");
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let fam = reference();
        let shape = LatticeShape::new(1, 80).unwrap();
        let times = vec![0.0, 0.5, 1.0];
        let zero = PathField::zeros(shape, times.clone());
        assert_eq!(weighted_norm(&zero, &fam).unwrap(), 0.0);
        let ones = PathField::from_values(shape, times.clone(), vec![1.0; 3 * 161]).unwrap();
        assert!((weighted_norm(&ones, &fam).unwrap() - 1.0).abs() < 1e-12);
        let mut bump = PathField::zeros(shape, times);
        let origin = shape.flat(&TorusIndex::origin(1));
        for t in 0..3 {
            bump.snapshot_mut(t)[origin] = 2.5;
        }
        let lam0 = fam.lambda().unwrap().at(&TorusIndex::origin(1));
        assert!((weighted_norm(&bump, &fam).unwrap() - 2.5 * lam0.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn exponential_family_and_tail() {
        let fam = build_kappa(
            2,
            DecaySpec { family: DecayFamily::Exponential, rate: 0.3, scale: 1.0, support: 12 },
        )
        .unwrap();
        let partial: f64 = fam.kappa_values().iter().sum();
        assert!(fam.kappa_star() >= partial);
        assert!(fam.kappa_tail(3) > fam.kappa_tail(6));
        let fam = build_lambda(fam, 256, 40).unwrap();
        let report = check_domination(&fam).unwrap();
        assert!(report.max_violation <= 1e-8);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let fam = build_kappa(2, DecaySpec::geometric(0.4, 2.0, 2)).unwrap();
        let mut buf = Vec::new();
        write_table_csv(&mut buf, fam.kappa_shape(), fam.kappa_values()).unwrap();
        let back = read_kappa_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.kappa_values(), fam.kappa_values());
        let asym = "k1,value\n-1,1.0\n0,2.0\n1,0.5\n";
        assert!(read_kappa_csv(std::io::Cursor::new(asym)).is_err());
        let negative = "k1,value\n-1,1.0\n0,-2.0\n1,1.0\n";
        assert!(read_kappa_csv(std::io::Cursor::new(negative)).is_err());
    }

    #[test]
    fn tail_mass_guard() {
        let kappa = build_kappa(1, DecaySpec::geometric(0.5, 1.0, 4)).unwrap();
        assert!(matches!(build_lambda(kappa, 64, 8), Err(Error::TailMass { .. })));
    }
}
