//! Property suites run by `torusnet verify`.

use super::config::{LoadedConfig, NoiseKind};
use crate::dynamics::{
    euler_halving_study, growth_bound_check, lipschitz_ratio, log_psi_c, simulate_network, solve_driven,
    truncation_gap, ResponseFn, SimulationOptions, SynapseConfig,
};
use crate::empirical::{bl_distance, empirical_measure};
use crate::field::PathField;
use crate::kernels::{build_lambda, check_domination, KernelFamily, LAMBDA_TAIL_LIMIT};
use crate::lattice::{cube_indices, offsets_within, LatticeShape, TorusIndex};
use crate::noise::{
    brownian_sup_tail_check, build_spectral_model, sample_noise_paths, tail_statistic, verify_covariance,
};
use crate::rng::{derive_seed, replica_rng};
use crate::{Error, Result, TimeGrid};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kernels,
    Noise,
    Dynamics,
    Empirical,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kernels" => Suite::Kernels,
            "noise" => Suite::Noise,
            "dynamics" => Suite::Dynamics,
            "empirical" => Suite::Empirical,
            "all" => Suite::All,
            _ => {
                return Err(Error::Config(format!(
                    "unknown suite `{s}` (kernels|noise|dynamics|empirical|all)"
                )))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        write!(f, "{tag} {}/{}: {}", self.suite, self.name, self.detail)
    }
}

struct Log {
    suite: &'static str,
    results: Vec<CheckResult>,
}

impl Log {
    fn check(&mut self, name: &'static str, passed: bool, detail: String) {
        let outcome = if passed { Outcome::Pass } else { Outcome::Fail };
        self.push(name, outcome, detail);
    }

    fn skip(&mut self, name: &'static str, detail: &str) {
        self.push(name, Outcome::Skip, detail.to_string());
    }

    fn push(&mut self, name: &'static str, outcome: Outcome, detail: String) {
        let r = CheckResult { suite: self.suite, name, outcome, detail };
        println!("{r}");
        self.results.push(r);
    }
}

/// Run `suite` against the configuration, printing one line per check.
pub fn run_suite(cfg: &LoadedConfig, kernel: &KernelFamily, suite: Suite) -> Result<Vec<CheckResult>> {
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Kernels, Suite::Noise, Suite::Dynamics, Suite::Empirical],
        ref s => std::slice::from_ref(s),
    };
    let mut out = Vec::new();
    for &s in suites {
        let start = Instant::now();
        let mut log = Log { suite: "", results: Vec::new() };
        match s {
            Suite::Kernels => {
                log.suite = "kernels";
                kernels(kernel, &mut log)?
            }
            Suite::Noise => {
                log.suite = "noise";
                noise(cfg, &mut log)?
            }
            Suite::Dynamics => {
                log.suite = "dynamics";
                dynamics(cfg, kernel, &mut log)?
            }
            Suite::Empirical => {
                log.suite = "empirical";
                empirical(cfg, kernel, &mut log)?
            }
            Suite::All => unreachable!(),
        }
        eprintln!("{} suite took {:.1?}", log.suite, start.elapsed());
        out.extend(log.results);
    }
    Ok(out)
}

fn kernels(kernel: &KernelFamily, log: &mut Log) -> Result<()> {
    let r = check_domination(kernel)?;
    let lambda = kernel.lambda().expect("kernel built with weights");
    log.check("lambda_positive", r.min_lambda > 0.0, format!("min lambda = {:.3e}", r.min_lambda));
    log.check(
        "normalization",
        r.normalization_error <= 1e-8,
        format!("|sum lambda - 1| = {:.3e} <= 1e-8", r.normalization_error),
    );
    log.check(
        "domination",
        r.max_violation <= 1e-8,
        format!(
            "max (sum_k lambda^(j-k) kappa^k - 2 kappa_* lambda^j) / lambda^j = {:.3e} <= 1e-8 on |j| <= {}",
            r.max_violation, r.interior_radius
        ),
    );
    log.check(
        "tail_mass",
        lambda.tail_mass() <= LAMBDA_TAIL_LIMIT,
        format!("tail beyond R_lambda = {:.3e} <= {LAMBDA_TAIL_LIMIT:e}", lambda.tail_mass()),
    );
    let d = kernel.dim() as u32;
    let m = lambda.grid_size();
    if (2 * m).pow(d) > 1 << 22 {
        log.skip("grid_convergence", "2M grid too large");
    } else {
        let finer = build_lambda(kernel.clone(), 2 * m, lambda.radius())?;
        let diff = lambda
            .values()
            .iter()
            .zip(finer.lambda().unwrap().values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        log.check("grid_convergence", diff <= 1e-9, format!("max |lambda(M) - lambda(2M)| = {diff:.3e} <= 1e-9"));
    }
    Ok(())
}

fn noise(cfg: &LoadedConfig, log: &mut Log) -> Result<()> {
    let c = &cfg.config;
    let n = c.lattice.n;
    let seed = c.run.seed;
    let replicas = c.run.replicas;
    let grid = cfg.grid()?;
    let shape = cfg.shape(n)?;
    let steps = grid.steps();
    let origin = TorusIndex::origin(c.lattice.d);
    let all_pairs: Vec<_> = cube_indices(&shape).into_iter().map(|m| (origin, m)).collect();

    match cfg.noise_model(n)? {
        None => log.skip("covariance", "noise family is none"),
        Some(model) => {
            let ens = sample_noise_paths(&model, replicas, seed, steps)?;
            let rep = verify_covariance(&ens, &model, &all_pairs, &[(steps, steps)])?;
            log.check(
                "covariance",
                rep.max_abs_z <= 4.0,
                format!(
                    "Cov(W^0_T, W^m_T), m in V_{n}, {replicas} replicas: max |z| = {:.2} <= 4, max |dev| = {:.3e}",
                    rep.max_abs_z, rep.max_abs_deviation
                ),
            );
            let mass: Vec<f64> = ens.sups.iter().map(|s| s.iter().sum()).collect();
            let mean = mass.iter().sum::<f64>() / mass.len() as f64;
            let sites = shape.site_count() as f64;
            let factors = [0.5, 1.0, 2.0, 4.0];
            let a: Vec<f64> = factors.iter().map(|f| f * mean / sites).collect();
            let pts = tail_statistic(&ens, &a);
            let decreasing = pts.windows(2).all(|w| w[1].norm_log_p < w[0].norm_log_p);
            let shown: Vec<String> = pts
                .iter()
                .zip(factors)
                .map(|(p, f)| format!("{f}x: {} hits, {:.4}", p.hits, p.norm_log_p))
                .collect();
            log.check(
                "tail_monotone",
                decreasing,
                format!("(1/|V_n|) log P(sum ||W|| > a |V_n|) strictly decreasing [{}]", shown.join("; ")),
            );
        }
    }

    let white = cfg.covariance(NoiseKind::SiteWhite)?.unwrap();
    let model = build_spectral_model(white, shape, grid)?;
    let ens = sample_noise_paths(&model, replicas, derive_seed(seed, 1), steps)?;
    let cross: Vec<_> = all_pairs.iter().filter(|(_, m)| *m != origin).cloned().collect();
    if cross.is_empty() {
        log.skip("site_white_control", "n = 0 has no cross pairs");
    } else {
        let rep = verify_covariance(&ens, &model, &cross, &[(steps, steps)])?;
        log.check(
            "site_white_control",
            rep.max_abs_z <= 4.0,
            format!("site-white cross covariances: max |z| = {:.2} <= 4", rep.max_abs_z),
        );
    }

    if c.noise.family == NoiseKind::Geometric {
        let (ns, m): (&[usize], usize) = match c.lattice.d {
            1 => (&[2, 4, 8, 16], 1024),
            2 => (&[2, 4, 8, 16], 128),
            _ => (&[2, 4, 8], 64),
        };
        // eta only needs the time profile, so a coarse grid suffices
        let eta_grid = TimeGrid::with_steps(grid.horizon(), steps.min(100))?;
        let spec = cfg.covariance(NoiseKind::Geometric)?.unwrap();
        let etas = ns
            .iter()
            .map(|&k| {
                let model = build_spectral_model(spec.clone(), LatticeShape::new(c.lattice.d, k)?, eta_grid)?;
                Ok(model.eta(m)?.eta_star)
            })
            .collect::<Result<Vec<f64>>>()?;
        let decreasing = etas.windows(2).all(|w| w[1] < w[0]);
        let shown: Vec<String> = ns.iter().zip(&etas).map(|(k, e)| format!("n={k}: {e:.3e}")).collect();
        log.check("eta_decreasing", decreasing, format!("eta_n,* [{}]", shown.join(", ")));
    } else {
        log.skip("eta_decreasing", "needs the geometric noise family");
    }

    let b_values = [1.0, 2.0, 3.0];
    let rows = brownian_sup_tail_check(50_000, 1.0, steps.max(1000), &b_values, derive_seed(seed, 2))?;
    let shown: Vec<String> = rows
        .iter()
        .map(|r| format!("b={}: {:.4} vs {:.4}", r.b, r.empirical, r.bound.min(1.0)))
        .collect();
    log.check(
        "brownian_sup_tail",
        rows.iter().all(|r| r.within),
        format!("P(sup|B| > b) <= reflection bound + 4 sigma, 50000 replicas [{}]", shown.join("; ")),
    );
    Ok(())
}

fn brownian_pair(shape: LatticeShape, grid: TimeGrid, seed: u64, i: u64) -> (PathField, PathField) {
    (PathField::brownian(shape, grid, seed, 2 * i), PathField::brownian(shape, grid, seed, 2 * i + 1))
}

fn dynamics(cfg: &LoadedConfig, kernel: &KernelFamily, log: &mut Log) -> Result<()> {
    let c = &cfg.config;
    let n = c.lattice.n;
    let d = c.lattice.d;
    let seed = derive_seed(c.run.seed, 10);
    let net = cfg.network(n, kernel, false)?;
    let (shape, grid, params) = (net.shape, net.grid, net.params);
    let horizon = grid.horizon();

    let log_psi = log_psi_c(&params, kernel, horizon);
    let ratios = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (w, v) = brownian_pair(shape, grid, seed, i);
            lipschitz_ratio(&w, &v, &params, &net.synapse, kernel)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let violations = ratios.iter().filter(|r| r.ln() > log_psi).count();
    log.check(
        "lipschitz",
        violations == 0,
        format!("100 Brownian pairs: max ratio {worst:.4}, ln Psi_C = {log_psi:.4e}, {violations} violations"),
    );

    let shift_seed = derive_seed(c.run.seed, 11);
    let diffs = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let w = PathField::brownian(shape, grid, shift_seed, i);
            let mut rng = replica_rng(shift_seed, 1000 + i);
            let j = TorusIndex::new(&(0..d).map(|_| rng.random_range(-(n as i64)..=n as i64)).collect::<Vec<_>>());
            let a = solve_driven(&w.shifted(&j), n, &params, &net.synapse)?;
            let b = solve_driven(&w, n, &params, &net.synapse)?.shifted(&j);
            Ok(a.sub(&b)?.sup_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    log.check("shift_equivariance", worst <= 1e-10, format!("20 inputs: max |Psi(S w) - S Psi(w)| = {worst:.3e} <= 1e-10"));

    let (m, ns): (usize, [usize; 3]) = match d {
        1 => (12, [2, 4, 6]),
        2 => (6, [2, 4, 6]),
        _ => (3, [1, 2, 3]),
    };
    let l = &c.learning;
    let radius = 6.min(m).min(kernel.support());
    let syn = SynapseConfig::geometric(d, l.j_bar0, l.rho_j.unwrap(), radius, l.j_ini_frac, l.j_corr, l.j_dec, l.v_fn)
        .and_then(|s| s.check_kernel(kernel, params.f_bar()).map(|_| s))
        .map_err(|e| cfg.anchor("learning", "J_bar0", e))?;
    let shape_m = LatticeShape::new(d, m)?;
    let w = PathField::brownian(shape_m, grid, derive_seed(c.run.seed, 12), 0);
    let gaps = ns
        .par_iter()
        .map(|&k| truncation_gap(&w, k, &params, &syn, kernel))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = gaps.windows(2).all(|g| g[1].gap < g[0].gap);
    let c3 = gaps[0].bound_ratio.unwrap_or(0.0);
    let within = gaps.iter().all(|g| {
        g.gap <= g.kappa_tail * c3 * (shape_m.site_count() as f64 + g.input_mass) * (1.0 + 1e-12)
    });
    let shown: Vec<String> = gaps.iter().map(|g| format!("n={}: {:.3e}", g.n, g.gap)).collect();
    log.check(
        "truncation_decay",
        decreasing && within,
        format!("m={m}, R_J={radius}: gaps [{}] strictly decreasing; envelope with C3 = {c3:.3e}: {within}", shown.join(", ")),
    );

    let w = PathField::brownian(shape, grid, derive_seed(c.run.seed, 13), 0);
    let alphas: Vec<f64> = [0.25, 0.5, 0.75, 1.0].iter().map(|a| a * horizon).collect();
    let rows = growth_bound_check(&w, &params, &net.synapse, kernel, &alphas)?;
    let min_slack = rows.iter().map(|r| r.rhs / r.lhs.max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
    log.check(
        "growth_bound",
        rows.iter().all(|r| r.holds),
        format!("{} alphas, min rhs/lhs = {min_slack:.3e}", rows.len()),
    );

    let zero = PathField::zeros(shape, grid.times());
    let study = euler_halving_study(&zero, 3, &params, &net.synapse)?;
    log.check(
        "euler_halving",
        study.diffs[0] <= 1e-3 && study.ratios[0] >= 1.8,
        format!(
            "zero drive: |X(dt) - X(dt/2)| = {:.3e} <= 1e-3, ratio {:.3} >= 1.8",
            study.diffs[0], study.ratios[0]
        ),
    );

    let noise = cfg.noise_model(n)?;
    let opts = SimulationOptions {
        replicas: c.run.replicas,
        seed: c.run.seed,
        record_stride: grid.steps(),
        keep_noise: false,
    };
    let ens = simulate_network(&net, noise.as_ref(), opts)?;
    let j_min = ens.replicas.iter().map(|r| r.j_min).fold(f64::INFINITY, f64::min);
    let j_excess = ens.replicas.iter().map(|r| r.j_excess).fold(f64::NEG_INFINITY, f64::max);
    let clamps: usize = ens.replicas.iter().map(|r| r.clamp_events).sum();
    log.check(
        "hebbian_bounds",
        j_min >= 0.0 && j_excess <= 0.0,
        format!(
            "{} replicas: min J = {j_min:.3e} >= 0, max (J - J_bar) = {j_excess:.3e} <= 0, {clamps} clamp events",
            c.run.replicas
        ),
    );

    let mut quiet = net.clone();
    quiet.synapse.activity = ResponseFn::Zero;
    let opts = SimulationOptions { replicas: 1, seed: c.run.seed, record_stride: 1, keep_noise: false };
    let ens = simulate_network(&quiet, None, opts)?;
    let times = ens.recorded_times();
    let trace = &ens.replicas[0].j_trace;
    let mut worst = 0.0f64;
    for (row, t) in trace.iter().zip(&times) {
        for (k, &val) in row.iter().enumerate() {
            let exact = quiet.synapse.j_ini_frac * quiet.synapse.j_bar()[k] * (-quiet.synapse.j_dec * t).exp();
            if exact > 0.0 {
                worst = worst.max((val - exact).abs() / exact);
            }
        }
    }
    let tol = 2.0 * grid.dt();
    log.check("hebbian_decay", worst <= tol, format!("activity 0: max rel error vs e^(-J_dec t) = {worst:.3e} <= {tol:.1e}"));
    Ok(())
}

fn empirical(cfg: &LoadedConfig, kernel: &KernelFamily, log: &mut Log) -> Result<()> {
    let c = &cfg.config;
    let n = c.lattice.n;
    let net = cfg.network(n, kernel, false)?;
    let noise = cfg.noise_model(n)?;
    let replicas = c.run.replicas.min(20);
    let opts = SimulationOptions {
        replicas,
        seed: derive_seed(c.run.seed, 20),
        record_stride: c.run.record_stride,
        keep_noise: false,
    };
    let ens = simulate_network(&net, noise.as_ref(), opts)?;
    let shifts = cube_indices(&net.shape);
    let measures: Vec<_> = ens.replicas.iter().map(|r| empirical_measure(r.v.clone())).collect();
    let stationary = measures.iter().all(|mu| mu.stationarity_check(&shifts));
    log.check("stationarity", stationary, format!("{replicas} measures, {} shifts each", shifts.len()));

    let offsets = offsets_within(c.lattice.d, 1.min(n))?;
    let last = ens.recorded_steps.len() - 1;
    let rows = [0, last / 2, last];
    let mut rng = replica_rng(c.run.seed, 21);
    let nonzero: Vec<_> = shifts.iter().filter(|j| j.l1_norm() > 0).collect();
    let j = if nonzero.is_empty() {
        TorusIndex::origin(c.lattice.d)
    } else {
        *nonzero[rng.random_range(0..nonzero.len())]
    };
    let base = measures[0].marginal_statistics(&offsets, &rows)?;
    let shifted = empirical_measure(ens.replicas[0].v.shifted(&j)).marginal_statistics(&offsets, &rows)?;
    let same = base.iter().zip(&shifted).all(|(a, b)| {
        a.mean.to_bits() == b.mean.to_bits()
            && a.variance.to_bits() == b.variance.to_bits()
            && a.q50.to_bits() == b.q50.to_bits()
    });
    log.check("shift_invariant_statistics", same, format!("marginals of mu(S^{j} X) equal mu(X) bitwise"));

    let projection: Vec<_> = offsets.iter().map(|k| (*k, last)).collect();
    let self_dist = bl_distance(&measures[0], &measures[0], &projection, 64, c.run.seed)?;
    let cross = if measures.len() > 1 {
        bl_distance(&measures[0], &measures[1], &projection, 64, c.run.seed)?
    } else {
        0.0
    };
    log.check(
        "bl_proxy",
        self_dist == 0.0 && (0.0..=2.0).contains(&cross),
        format!("BL proxy d(mu, mu) = {self_dist}, d(mu_0, mu_1) = {cross:.4}"),
    );

    let norms = measures[0].weighted_ensemble_norms(kernel)?;
    log.check(
        "weighted_norms",
        norms.min.is_finite() && norms.max.is_finite() && norms.min <= norms.mean && norms.mean <= norms.max,
        format!("atom norms min {:.4} mean {:.4} max {:.4}", norms.min, norms.mean, norms.max),
    );
    Ok(())
}
