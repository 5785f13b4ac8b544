//! Entry points behind the `torusnet` binary.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration
//! error, 3 numerical failure (non-finite state, negative spectrum, ...).

pub mod config;
mod verify;

pub use config::{is_numerical, kernel_defaults, LoadedConfig, OutputKind, RunConfig};
pub use verify::{run_suite, CheckResult, Outcome, Suite};

use crate::deviations::{
    ldp_scaling_report, summarize, write_scaling_csv, ObservableRegistry, Threshold,
};
use crate::dynamics::{simulate_network, SimulationOptions};
use crate::empirical::empirical_measure;
use crate::io::{write_paths_binary, write_paths_csv};
use crate::lattice::cube_indices;
use crate::{Error, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    if is_numerical(err) {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
}

pub fn load_config(path: &Path, overrides: Overrides) -> Result<LoadedConfig> {
    let mut cfg = LoadedConfig::from_path(path)?;
    if let Some(seed) = overrides.seed {
        cfg.config.run.seed = seed;
    }
    if let Some(r) = overrides.replicas {
        cfg.config.run.replicas = r;
    }
    Ok(cfg)
}

/// Run `f` on a pool of `workers` threads (all cores if `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Serialize)]
struct Manifest<'a> {
    torusnet_version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    arguments: serde_json::Value,
    files: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn write_manifest(
    out_dir: &Path,
    command: &'static str,
    cfg: &LoadedConfig,
    arguments: serde_json::Value,
    files: &[&str],
) -> Result<()> {
    let manifest = Manifest {
        torusnet_version: env!("CARGO_PKG_VERSION"),
        command,
        config: &cfg.config,
        arguments,
        files: files.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)
}

fn create_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", out_dir.display())))
}

fn report(result: Result<i32>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Serialize)]
struct Stat {
    min: f64,
    mean: f64,
    max: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        Stat {
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    replicas: usize,
    sites: usize,
    steps: usize,
    recorded_times: usize,
    kappa_star: f64,
    lambda_tail_mass: f64,
    lambda_recomputed_entries: usize,
    site0_sup: Stat,
    spatial_mean_sup: Stat,
    terminal_mean: Stat,
    noise_mass: Stat,
    j_min: f64,
    j_max_excess: f64,
    clamp_events: usize,
    stationarity_exact: bool,
    /// Weighted norms of the atoms of the empirical measure of replica 0.
    atom_weighted_norm: Stat,
}

/// Simulate the configured network and write paths, manifest and summary.
pub fn cmd_simulate(config_path: &Path, out_dir: &Path, overrides: Overrides) -> i32 {
    report(simulate_inner(config_path, out_dir, overrides))
}

fn simulate_inner(config_path: &Path, out_dir: &Path, overrides: Overrides) -> Result<i32> {
    let start = Instant::now();
    let cfg = load_config(config_path, overrides)?;
    let kernel = cfg.validate()?;
    let c = &cfg.config;
    let net = cfg.network(c.lattice.n, &kernel, false)?;
    let noise = cfg.noise_model(c.lattice.n)?;
    let outputs = &c.run.outputs;
    let opts = SimulationOptions {
        replicas: c.run.replicas,
        seed: c.run.seed,
        record_stride: c.run.record_stride,
        keep_noise: outputs.contains(&OutputKind::Noise),
    };
    let ens = simulate_network(&net, noise.as_ref(), opts)?;
    create_out_dir(out_dir)?;
    let mut files = vec!["manifest.json", "summary.json"];
    let v_fields: Vec<_> = ens.replicas.iter().map(|r| &r.v).collect();
    if outputs.contains(&OutputKind::Csv) {
        let mut f = BufWriter::new(File::create(out_dir.join("paths.csv"))?);
        write_paths_csv(&mut f, &v_fields)?;
        f.flush()?;
        files.push("paths.csv");
    }
    if outputs.contains(&OutputKind::Binary) {
        let mut f = BufWriter::new(File::create(out_dir.join("paths.bin"))?);
        write_paths_binary(&mut f, &v_fields, net.grid.dt())?;
        f.flush()?;
        files.push("paths.bin");
    }
    if outputs.contains(&OutputKind::Noise) {
        let w: Vec<_> = ens.replicas.iter().filter_map(|r| r.noise.as_ref()).collect();
        let mut f = BufWriter::new(File::create(out_dir.join("noise.csv"))?);
        write_paths_csv(&mut f, &w)?;
        f.flush()?;
        files.push("noise.csv");
    }

    let registry = ObservableRegistry::with_builtins();
    let summaries = summarize(&ens);
    let values = |name: &str| -> Result<Vec<f64>> {
        let obs = registry.get(name)?;
        Ok(summaries.iter().map(|s| obs.eval(s)).collect())
    };
    let shifts = cube_indices(&net.shape);
    let stationarity_exact = ens
        .replicas
        .iter()
        .all(|r| empirical_measure(r.v.clone()).stationarity_check(&shifts));
    let norms = empirical_measure(ens.replicas[0].v.clone()).weighted_ensemble_norms(&kernel)?;
    let lambda = kernel.lambda().expect("validated kernel has weights");
    let summary = SimulationSummary {
        replicas: ens.replicas.len(),
        sites: net.shape.site_count(),
        steps: net.grid.steps(),
        recorded_times: ens.recorded_steps.len(),
        kappa_star: kernel.kappa_star(),
        lambda_tail_mass: lambda.tail_mass(),
        lambda_recomputed_entries: lambda.unresolved(),
        site0_sup: Stat::of(&values("site0_sup")?),
        spatial_mean_sup: Stat::of(&values("spatial_mean_sup")?),
        terminal_mean: Stat::of(&values("terminal_mean")?),
        noise_mass: Stat::of(&values("noise_mass")?),
        j_min: ens.replicas.iter().map(|r| r.j_min).fold(f64::INFINITY, f64::min),
        j_max_excess: ens.replicas.iter().map(|r| r.j_excess).fold(f64::NEG_INFINITY, f64::max),
        clamp_events: ens.replicas.iter().map(|r| r.clamp_events).sum(),
        stationarity_exact,
        atom_weighted_norm: Stat { min: norms.min, mean: norms.mean, max: norms.max },
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_manifest(out_dir, "simulate", &cfg, serde_json::Value::Null, &files)?;
    eprintln!(
        "simulated {} replicas on {} sites in {:.2?}; wrote {}",
        summary.replicas,
        summary.sites,
        start.elapsed(),
        out_dir.display()
    );
    Ok(EXIT_OK)
}

/// Run property suites; exit 0 iff every check passes.
pub fn cmd_verify(config_path: &Path, suite: Suite, out_dir: Option<&Path>, overrides: Overrides) -> i32 {
    report(verify_inner(config_path, suite, out_dir, overrides))
}

fn verify_inner(config_path: &Path, suite: Suite, out_dir: Option<&Path>, overrides: Overrides) -> Result<i32> {
    let cfg = load_config(config_path, overrides)?;
    let kernel = cfg.validate()?;
    let results = run_suite(&cfg, &kernel, suite)?;
    let failed = results.iter().filter(|r| r.outcome == Outcome::Fail).count();
    println!(
        "{} checks, {} passed, {} failed, {} skipped",
        results.len(),
        results.iter().filter(|r| r.outcome == Outcome::Pass).count(),
        failed,
        results.iter().filter(|r| r.outcome == Outcome::Skip).count()
    );
    if let Some(dir) = out_dir {
        create_out_dir(dir)?;
        write_json(&dir.join("verify.json"), &results)?;
        write_manifest(dir, "verify", &cfg, serde_json::json!({ "suite": suite }), &["manifest.json", "verify.json"])?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Parse `auto`, `auto:q` or a number.
pub fn parse_threshold(s: &str) -> Result<Threshold> {
    let bad = || Error::Config(format!("threshold must be a number, `auto` or `auto:q`, got `{s}`"));
    if s == "auto" {
        return Ok(Threshold::Auto { q: 0.9 });
    }
    if let Some(q) = s.strip_prefix("auto:") {
        let q: f64 = q.parse().map_err(|_| bad())?;
        if !(0.0..1.0).contains(&q) {
            return Err(bad());
        }
        return Ok(Threshold::Auto { q });
    }
    s.parse::<f64>().map(Threshold::Fixed).map_err(|_| bad())
}

pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let list = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("--n-list must be comma-separated integers, got `{s}`")))?;
    if list.is_empty() || list.contains(&0) {
        return Err(Error::Config("--n-list needs radii >= 1".into()));
    }
    Ok(list)
}

/// Finite-size scaling sweep of `-(1/|V_n|) ln P(observable > threshold)`.
pub fn cmd_scaling(
    config_path: &Path,
    n_list: &[usize],
    observable: &str,
    threshold: Threshold,
    out_dir: &Path,
    overrides: Overrides,
) -> i32 {
    report(scaling_inner(config_path, n_list, observable, threshold, out_dir, overrides))
}

fn scaling_inner(
    config_path: &Path,
    n_list: &[usize],
    observable: &str,
    threshold: Threshold,
    out_dir: &Path,
    overrides: Overrides,
) -> Result<i32> {
    let cfg = load_config(config_path, overrides)?;
    let registry = ObservableRegistry::with_builtins();
    let obs = registry.get(observable)?;
    let kernel = cfg.validate()?;
    let c = &cfg.config;
    let build = |n: usize| Ok((cfg.network(n, &kernel, true)?, cfg.noise_model(n)?));
    let rows = ldp_scaling_report(build, n_list, obs, threshold, c.run.replicas, c.run.seed)?;
    create_out_dir(out_dir)?;
    let mut f = BufWriter::new(File::create(out_dir.join("scaling.csv"))?);
    write_scaling_csv(&mut f, &rows)?;
    f.flush()?;
    for r in rows.iter().filter(|r| r.hits == 0) {
        eprintln!("ZERO_HITS at n = {}: p < {:.3e} (Wilson upper bound)", r.n, r.ci_hi);
    }
    let args = serde_json::json!({
        "n_list": n_list,
        "observable": observable,
        "threshold": threshold,
        "resolved_threshold": rows.first().map(|r| r.threshold),
    });
    write_manifest(out_dir, "scaling", &cfg, args, &["manifest.json", "scaling.csv"])?;
    Ok(EXIT_OK)
}

/// Default output directory next to the config file.
pub fn default_out_dir(config_path: &Path, command: &str) -> PathBuf {
    config_path.parent().unwrap_or(Path::new(".")).join(format!("{command}-out"))
}
