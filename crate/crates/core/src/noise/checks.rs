use super::{NoiseEnsemble, SpectralNoiseModel};
use crate::lattice::TorusIndex;
use crate::rng::replica_rng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceEntry {
    pub site_j: String,
    pub site_k: String,
    pub time_s: f64,
    pub time_t: f64,
    pub empirical: f64,
    pub expected: f64,
    pub std_error: f64,
    /// `(empirical - expected) / std_error`.
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceReport {
    pub replicas: usize,
    pub entries: Vec<CovarianceEntry>,
    pub max_abs_deviation: f64,
    pub max_abs_z: f64,
}

/// Compare `E[W^j_s W^k_t]` across replicas against
/// `int_0^{min(s,t)} a^{(k-j) mod V_n}(r) dr` (trapezoid on the grid).
///
/// `steps` are grid step indices and must be recorded in the ensemble.
pub fn verify_covariance(
    ensemble: &NoiseEnsemble,
    model: &SpectralNoiseModel,
    site_pairs: &[(TorusIndex, TorusIndex)],
    step_pairs: &[(usize, usize)],
) -> Result<CovarianceReport> {
    let shape = ensemble.shape;
    let grid = ensemble.grid;
    let n_rep = ensemble.replicas();
    if n_rep < 2 {
        return Err(Error::InvalidParameter("covariance check needs at least 2 replicas".into()));
    }
    let mut entries = Vec::new();
    for (j, k) in site_pairs {
        let (fj, fk) = (shape.flat(&shape.reduce(j.coords())), shape.flat(&shape.reduce(k.coords())));
        let lag = shape.reduce(k.add(&j.neg()).coords());
        for &(s, t) in step_pairs {
            let row = |step: usize| {
                ensemble.row_of_step(step).ok_or_else(|| {
                    Error::InvalidParameter(format!("grid step {step} was not recorded"))
                })
            };
            let (rs, rt) = (row(s)?, row(t)?);
            let products: Vec<f64> =
                ensemble.paths.iter().map(|p| p.at(rs, fj) * p.at(rt, fk)).collect();
            let mean = products.iter().sum::<f64>() / n_rep as f64;
            let var = products.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_rep - 1) as f64;
            let std_error = (var / n_rep as f64).sqrt();
            let upto = s.min(t);
            let dt = grid.dt();
            let expected: f64 = (0..upto)
                .map(|m| 0.5 * dt * (model.spec().rate(&lag, grid.time(m)) + model.spec().rate(&lag, grid.time(m + 1))))
                .sum();
            let z = if std_error > 0.0 {
                (mean - expected) / std_error
            } else if mean == expected {
                0.0
            } else {
                f64::INFINITY
            };
            entries.push(CovarianceEntry {
                site_j: j.to_string(),
                site_k: k.to_string(),
                time_s: grid.time(s),
                time_t: grid.time(t),
                empirical: mean,
                expected,
                std_error,
                z,
            });
        }
    }
    let max_abs_deviation = entries.iter().map(|e| (e.empirical - e.expected).abs()).fold(0.0, f64::max);
    let max_abs_z = entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    Ok(CovarianceReport { replicas: n_rep, entries, max_abs_deviation, max_abs_z })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailPoint {
    pub a: f64,
    pub hits: usize,
    pub probability: f64,
    /// `(1/|V_n|) log probability`; `-inf` when there are no hits.
    pub norm_log_p: f64,
}

/// Empirical `P(sum_j ||W^{n,j}||_T > a |V_n|)` for each `a`.
pub fn tail_statistic(ensemble: &NoiseEnsemble, a_values: &[f64]) -> Vec<TailPoint> {
    let sites = ensemble.shape.site_count() as f64;
    let masses: Vec<f64> = ensemble.sups.iter().map(|s| s.iter().sum()).collect();
    let total = masses.len().max(1) as f64;
    a_values
        .iter()
        .map(|&a| {
            let hits = masses.iter().filter(|&&m| m > a * sites).count();
            let probability = hits as f64 / total;
            TailPoint { a, hits, probability, norm_log_p: probability.ln() / sites }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BrownianTailRow {
    pub b: f64,
    pub hits: usize,
    pub empirical: f64,
    /// `4 (1 - Phi(b / sqrt(T)))`; exceeds 1 for small `b`.
    pub bound: f64,
    pub std_error: f64,
    pub within: bool,
}

/// Empirical `P(sup_{t<=T} |B_t| > b)` for a scalar Brownian motion on a
/// `steps`-point grid, against the reflection-principle bound. A grid sup
/// underestimates the continuous sup, so the comparison is conservative.
pub fn brownian_sup_tail_check(
    replicas: usize,
    horizon: f64,
    steps: usize,
    b_values: &[f64],
    seed: u64,
) -> Result<Vec<BrownianTailRow>> {
    if b_values.iter().any(|&b| b < 0.0) || replicas == 0 || steps == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidParameter("tail check needs b >= 0, T > 0 and replicas".into()));
    }
    let sqrt_dt = (horizon / steps as f64).sqrt();
    let sups: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let mut b = 0.0f64;
            let mut sup = 0.0f64;
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                b += z * sqrt_dt;
                sup = sup.max(b.abs());
            }
            sup
        })
        .collect();
    let total = replicas as f64;
    Ok(b_values
        .iter()
        .map(|&b| {
            let hits = sups.iter().filter(|&&s| s > b).count();
            let p = hits as f64 / total;
            let std_error = (p * (1.0 - p) / total).sqrt();
            let bound = 2.0 * erfc(b / (2.0 * horizon).sqrt());
            BrownianTailRow { b, hits, empirical: p, bound, std_error, within: p <= bound + 4.0 * std_error }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TimeGrid;
    use crate::lattice::LatticeShape;
    use crate::noise::{build_spectral_model, sample_noise_paths, GeometricCovariance, TimeProfile};
    use std::sync::Arc;

    #[test]
    fn reflection_bound_value() {
        let rows = brownian_sup_tail_check(1000, 1.0, 100, &[0.0, 2.0], 1).unwrap();
        assert!((rows[1].bound - 0.0910).abs() < 1e-4);
        assert!(rows[0].bound >= 1.0 && rows[0].empirical == 1.0);
        assert!(rows.iter().all(|r| r.within));
    }

    #[test]
    fn tail_statistic_is_monotone() {
        let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, TimeProfile::Constant).unwrap());
        let model = build_spectral_model(spec, LatticeShape::new(1, 2).unwrap(), TimeGrid::new(1.0, 0.01).unwrap())
            .unwrap();
        let ens = sample_noise_paths(&model, 500, 5, 100).unwrap();
        let pts = tail_statistic(&ens, &[1e-9, 0.5, 1.0, 2.0, 1e6]);
        assert_eq!(pts[0].probability, 1.0);
        assert_eq!(pts[4].hits, 0);
        for w in pts.windows(2) {
            assert!(w[1].probability <= w[0].probability);
        }
    }

    #[test]
    fn covariance_matches_kernel_on_small_ensemble() {
        let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, TimeProfile::Constant).unwrap());
        let model = build_spectral_model(spec, LatticeShape::new(1, 2).unwrap(), TimeGrid::new(1.0, 0.02).unwrap())
            .unwrap();
        let ens = sample_noise_paths(&model, 4000, 9, 25).unwrap();
        let pairs: Vec<_> = (-2..=2).map(|m| (TorusIndex::new(&[0]), TorusIndex::new(&[m]))).collect();
        let report = verify_covariance(&ens, &model, &pairs, &[(50, 50), (25, 50)]).unwrap();
        assert!(report.max_abs_z < 4.5, "{report:?}");
        assert!((report.entries[4].expected - 1.0).abs() < 1e-12);
    }
}
