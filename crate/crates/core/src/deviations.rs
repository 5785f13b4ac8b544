//! Plain Monte Carlo rare-event estimates and the `(1/|V_n|) log P` sweep.
//!
//! Observables are functionals of one replica, evaluated on a compact
//! [`ReplicaSummary`] so that large ensembles need not keep full paths.

use crate::dynamics::{simulate_network, Network, PathEnsemble, ReplicaPaths, SimulationOptions};
use crate::noise::SpectralNoiseModel;
use crate::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Per-replica quantities observables are built from.
#[derive(Clone, Debug)]
pub struct ReplicaSummary {
    /// `||v^j||_T` per site.
    pub v_sup: Vec<f64>,
    /// `v^j_T` per site.
    pub v_terminal: Vec<f64>,
    /// `||W^{n,j}||_T` per site.
    pub noise_sup: Vec<f64>,
    /// Flat index of the origin site.
    pub origin: usize,
}

impl ReplicaSummary {
    pub fn from_paths(paths: &ReplicaPaths, origin: usize) -> Self {
        Self {
            v_sup: paths.v_sups.clone(),
            v_terminal: paths.v_terminal.clone(),
            noise_sup: paths.noise_sups.clone(),
            origin,
        }
    }
}

pub fn summarize(ensemble: &PathEnsemble) -> Vec<ReplicaSummary> {
    let origin = ensemble.shape.flat(&crate::TorusIndex::origin(ensemble.shape.dim()));
    ensemble.replicas.iter().map(|r| ReplicaSummary::from_paths(r, origin)).collect()
}

pub type Evaluator = Arc<dyn Fn(&ReplicaSummary) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Observable {
    pub name: String,
    evaluator: Evaluator,
}

impl Observable {
    pub fn eval(&self, replica: &ReplicaSummary) -> f64 {
        (self.evaluator)(replica)
    }
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Observable({})", self.name)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Named observables available to the estimators and the command line.
#[derive(Clone, Debug, Default)]
pub struct ObservableRegistry {
    entries: BTreeMap<String, Observable>,
}

impl ObservableRegistry {
    /// Registry holding `site0_sup`, `spatial_mean_sup`, `terminal_mean` and
    /// `noise_mass`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::default();
        reg.register("site0_sup", |r| r.v_sup[r.origin]).unwrap();
        reg.register("spatial_mean_sup", |r| mean(&r.v_sup)).unwrap();
        reg.register("terminal_mean", |r| mean(&r.v_terminal)).unwrap();
        reg.register("noise_mass", |r| mean(&r.noise_sup)).unwrap();
        reg
    }

    pub fn register<F>(&mut self, name: &str, evaluator: F) -> Result<Observable>
    where
        F: Fn(&ReplicaSummary) -> f64 + Send + Sync + 'static,
    {
        if self.entries.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let obs = Observable { name: name.to_string(), evaluator: Arc::new(evaluator) };
        self.entries.insert(name.to_string(), obs.clone());
        Ok(obs)
    }

    pub fn get(&self, name: &str) -> Result<&Observable> {
        self.entries.get(name).ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct RareEventEstimate {
    pub threshold: f64,
    pub replicas: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// No hits: only `ci_hi` is informative.
    pub zero_hits: bool,
}

/// `P(value > threshold)` from precomputed observable values.
pub fn estimate_from_values(values: &[f64], threshold: f64) -> RareEventEstimate {
    let hits = values.iter().filter(|&&v| v > threshold).count();
    let (ci_lo, ci_hi) = wilson_interval(hits, values.len());
    RareEventEstimate {
        threshold,
        replicas: values.len(),
        hits,
        p_hat: hits as f64 / values.len().max(1) as f64,
        ci_lo,
        ci_hi,
        zero_hits: hits == 0,
    }
}

/// Estimates at several thresholds on one replica set.
pub fn threshold_sweep(values: &[f64], thresholds: &[f64]) -> Vec<RareEventEstimate> {
    thresholds.iter().map(|&t| estimate_from_values(values, t)).collect()
}

/// Simulate `replicas` independent networks and evaluate `observable`.
pub fn observable_values(
    net: &Network,
    noise: Option<&SpectralNoiseModel>,
    observable: &Observable,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let opts = SimulationOptions {
        replicas,
        seed,
        record_stride: net.grid.steps(),
        keep_noise: false,
    };
    let ensemble = simulate_network(net, noise, opts)?;
    Ok(summarize(&ensemble).iter().map(|r| observable.eval(r)).collect())
}

/// Plain Monte Carlo estimate of `P(observable > threshold)`.
pub fn estimate_rare_event(
    net: &Network,
    noise: Option<&SpectralNoiseModel>,
    observable: &Observable,
    threshold: f64,
    replicas: usize,
    seed: u64,
) -> Result<RareEventEstimate> {
    if replicas < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 replicas, got {replicas}")));
    }
    let values = observable_values(net, noise, observable, replicas, seed)?;
    Ok(estimate_from_values(&values, threshold))
}

/// Type-7 empirical quantile.
pub fn empirical_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Threshold {
    Fixed(f64),
    /// Empirical `q`-quantile of the observable at the smallest `n`.
    Auto { q: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub sites: usize,
    pub replicas: usize,
    pub threshold: f64,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `-ln(p_hat) / |V_n|`, `+inf` with zero hits.
    pub norm_log_p: f64,
}

/// Finite-size sweep of `-(1/|V_n|) ln P(observable > threshold)`.
///
/// `build(n)` returns the network and noise model at radius `n`. Each `n`
/// uses the same `seed`. With [`Threshold::Auto`] the threshold is fixed
/// from the replicas of the smallest `n` and reused for all rows.
pub fn ldp_scaling_report<F>(
    build: F,
    n_values: &[usize],
    observable: &Observable,
    threshold: Threshold,
    replicas: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>>
where
    F: Fn(usize) -> Result<(Network, Option<SpectralNoiseModel>)>,
{
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut threshold_value = match threshold {
        Threshold::Fixed(t) => Some(t),
        Threshold::Auto { .. } => None,
    };
    let mut rows = Vec::new();
    for n in ns {
        let (net, noise) = build(n)?;
        let values = observable_values(&net, noise.as_ref(), observable, replicas, seed)?;
        let t = *threshold_value.get_or_insert_with(|| match threshold {
            Threshold::Auto { q } => empirical_quantile(&values, q),
            Threshold::Fixed(t) => t,
        });
        let est = estimate_from_values(&values, t);
        let sites = net.shape.site_count();
        rows.push(ScalingRow {
            n,
            sites,
            replicas,
            threshold: t,
            hits: est.hits,
            p_hat: est.p_hat,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            norm_log_p: -est.p_hat.ln() / sites as f64,
        });
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(out: &mut W, rows: &[ScalingRow]) -> Result<()> {
    writeln!(out, "n,sites,replicas,threshold,hits,p_hat,ci_lo,ci_hi,norm_log_p")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n, r.sites, r.replicas, r.threshold, r.hits, r.p_hat, r.ci_lo, r.ci_hi, r.norm_log_p
        )?;
    }
    Ok(())
}
