//! Run configuration.
//!
//! TOML file with sections `[lattice]`, `[time]`, `[kernel]`, `[noise]`,
//! `[fhn]`, `[learning]` and `[run]`. Every key is optional and unknown keys
//! are rejected. A `manifest.json` written by a previous run is also
//! accepted, in which case its `config` object is used.
//!
//! ```toml
//! [lattice]
//! d = 1                # 1, 2 or 3
//! n = 4                # torus V_n = {-n..n}^d
//!
//! [time]
//! T = 1.0
//! dt = 0.001           # must divide T
//!
//! [kernel]
//! family = "geometric" # geometric | exponential | table
//! rho = 0.5            # 0.25 when d = 3
//! scale = 1.0
//! R = 40               # support; 16 (d=2), 6 (d=3)
//! R_lambda = 60        # 48 (d=2), 16 (d=3)
//! M = 4096             # spectral grid; 256 (d=2), 64 (d=3)
//! table = ""           # CSV `k1,..,kd,value` when family = "table"
//!
//! [noise]
//! family = "geometric" # geometric | site_white | none
//! rho_a = 0.4
//! sigma2 = 1.0
//! time_profile = { kind = "constant" }   # or { kind = "oscillating", amplitude, frequency }
//!
//! [fhn]
//! a_fr = 0.3
//! c_fr = 0.8
//! u_ini = 0.0
//! f1 = "logistic"      # logistic | unit | zero
//! f2 = "logistic"
//!
//! [learning]
//! J_bar0 = 0.5
//! rho_J = 0.5         # kernel rho
//! R_J = 4              # min(n, 6)
//! J_ini_frac = 0.5
//! J_corr = 1.0
//! J_dec = 0.5
//! v_fn = "logistic"
//!
//! [run]
//! seed = 0
//! replicas = 100
//! record_stride = 10
//! outputs = ["csv"]    # csv | binary | noise
//! ```

use crate::dynamics::{FhnParams, Network, ResponseFn, SynapseConfig};
use crate::field::TimeGrid;
use crate::kernels::{build_kappa, build_lambda, read_kappa_csv, DecayFamily, DecaySpec, KernelFamily};
use crate::lattice::LatticeShape;
use crate::noise::{
    build_spectral_model, CovarianceSpec, GeometricCovariance, SiteWhiteCovariance, SpectralNoiseModel,
    TimeProfile,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub d: usize,
    pub n: usize,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { d: 1, n: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { horizon: 1.0, dt: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Geometric,
    Exponential,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub family: KernelKind,
    pub rho: Option<f64>,
    pub scale: f64,
    #[serde(rename = "R")]
    pub support: Option<usize>,
    #[serde(rename = "R_lambda")]
    pub lambda_radius: Option<usize>,
    #[serde(rename = "M")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            family: KernelKind::Geometric,
            rho: None,
            scale: 1.0,
            support: None,
            lambda_radius: None,
            grid_size: None,
            table: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Geometric,
    SiteWhite,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub family: NoiseKind,
    pub rho_a: f64,
    pub sigma2: f64,
    pub time_profile: TimeProfile,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { family: NoiseKind::Geometric, rho_a: 0.4, sigma2: 1.0, time_profile: TimeProfile::Constant }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FhnSection {
    pub a_fr: f64,
    pub c_fr: f64,
    pub u_ini: f64,
    pub f1: ResponseFn,
    pub f2: ResponseFn,
}

impl Default for FhnSection {
    fn default() -> Self {
        let p = FhnParams::default();
        Self { a_fr: p.a_fr, c_fr: p.c_fr, u_ini: p.u_ini, f1: p.f1, f2: p.f2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningSection {
    #[serde(rename = "J_bar0")]
    pub j_bar0: f64,
    #[serde(rename = "rho_J")]
    pub rho_j: Option<f64>,
    #[serde(rename = "R_J")]
    pub radius: Option<usize>,
    #[serde(rename = "J_ini_frac")]
    pub j_ini_frac: f64,
    #[serde(rename = "J_corr")]
    pub j_corr: f64,
    #[serde(rename = "J_dec")]
    pub j_dec: f64,
    pub v_fn: ResponseFn,
}

impl Default for LearningSection {
    fn default() -> Self {
        Self {
            j_bar0: 0.5,
            rho_j: None,
            radius: None,
            j_ini_frac: 0.5,
            j_corr: 1.0,
            j_dec: 0.5,
            v_fn: ResponseFn::Logistic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Csv,
    Binary,
    Noise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub replicas: usize,
    pub record_stride: usize,
    pub outputs: Vec<OutputKind>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, replicas: 100, record_stride: 10, outputs: vec![OutputKind::Csv] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub time: TimeSection,
    pub kernel: KernelSection,
    pub noise: NoiseSection,
    pub fhn: FhnSection,
    pub learning: LearningSection,
    pub run: RunSection,
}

/// Per-dimension kernel defaults `(rho, R, R_lambda, M)`.
pub fn kernel_defaults(d: usize) -> (f64, usize, usize, usize) {
    match d {
        1 => (0.5, 40, 60, 4096),
        2 => (0.5, 16, 48, 256),
        _ => (0.25, 6, 16, 64),
    }
}

impl RunConfig {
    /// Fill every dimension-dependent default so that the serialized config
    /// reproduces the run.
    pub fn resolve(&mut self) {
        let (rho, support, radius, grid) = kernel_defaults(self.lattice.d);
        let k = &mut self.kernel;
        k.rho.get_or_insert(rho);
        k.support.get_or_insert(support);
        k.lambda_radius.get_or_insert(radius);
        k.grid_size.get_or_insert(grid);
        let rho = k.rho.unwrap();
        self.learning.rho_j.get_or_insert(rho);
        self.learning.radius.get_or_insert(self.lattice.n.min(6));
    }

    pub fn fhn_params(&self) -> FhnParams {
        let f = &self.fhn;
        FhnParams { a_fr: f.a_fr, c_fr: f.c_fr, u_ini: f.u_ini, f1: f.f1, f2: f.f2 }
    }
}

/// A loaded config and the text it came from, for line-anchored errors.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub path: PathBuf,
    source: String,
}

fn line_col_of(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::from_source(&source, path)
    }

    pub fn from_source(source: &str, path: &Path) -> Result<Self> {
        let is_json = path.extension().is_some_and(|e| e == "json") || source.trim_start().starts_with('{');
        let mut config: RunConfig = if is_json {
            let value: serde_json::Value = serde_json::from_str(source).map_err(|e| {
                Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
            })?;
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(source).map_err(|e| {
                let at = e
                    .span()
                    .map(|s| {
                        let (l, c) = line_col_of(source, s.start);
                        format!(":{l}:{c}")
                    })
                    .unwrap_or_default();
                Error::Config(format!("{}{at}: {}", path.display(), e.message()))
            })?
        };
        config.resolve();
        Ok(Self { config, path: path.to_path_buf(), source: source.to_string() })
    }

    /// Line of `key` inside `[section]`, if the file sets it.
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        for (i, raw) in self.source.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('[') {
                current = rest.trim_end_matches(']').trim().to_string();
                continue;
            }
            let name = line.split('=').next().unwrap_or("").trim().trim_matches('"');
            if current == section && name == key && line.contains('=') {
                return Some(i + 1);
            }
            // JSON manifests: match the key anywhere
            if self.source.trim_start().starts_with('{') && line.starts_with(&format!("\"{key}\"")) {
                return Some(i + 1);
            }
        }
        None
    }

    /// Attach the config location of `[section] key` to an error.
    pub fn anchor(&self, section: &str, key: &str, err: Error) -> Error {
        let at = match self.line_of(section, key) {
            Some(line) => format!("{}:{line}: [{section}] {key}", self.path.display()),
            None => format!("{}: [{section}] {key} (default)", self.path.display()),
        };
        match err {
            Error::InvalidParameter(m) | Error::InvalidShape(m) | Error::Config(m) => {
                Error::Config(format!("{at}: {m}"))
            }
            other if is_numerical(&other) => Error::Numerical(format!("{at}: {other}")),
            other => Error::Config(format!("{at}: {other}")),
        }
    }

    fn table_path(&self) -> Option<PathBuf> {
        let t = self.config.kernel.table.as_ref()?;
        let p = Path::new(t);
        Some(if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        })
    }

    pub fn shape(&self, n: usize) -> Result<LatticeShape> {
        LatticeShape::new(self.config.lattice.d, n).map_err(|e| self.anchor("lattice", "n", e))
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let t = &self.config.time;
        TimeGrid::new(t.horizon, t.dt).map_err(|e| self.anchor("time", "dt", e))
    }

    /// `kappa` with its dominating weights.
    pub fn kernel(&self) -> Result<KernelFamily> {
        let c = &self.config;
        let k = &c.kernel;
        let d = c.lattice.d;
        let kappa = match k.family {
            KernelKind::Table => {
                let path = self.table_path().ok_or_else(|| {
                    self.anchor("kernel", "table", Error::InvalidParameter("family = \"table\" needs a table file".into()))
                })?;
                let file = std::fs::File::open(&path).map_err(|e| {
                    self.anchor("kernel", "table", Error::InvalidParameter(format!("{}: {e}", path.display())))
                })?;
                let family = read_kappa_csv(std::io::BufReader::new(file))
                    .map_err(|e| self.anchor("kernel", "table", e))?;
                if family.dim() != d {
                    return Err(self.anchor(
                        "kernel",
                        "table",
                        Error::InvalidParameter(format!("table has dimension {}, lattice has {d}", family.dim())),
                    ));
                }
                family
            }
            kind => {
                let family = if kind == KernelKind::Geometric { DecayFamily::Geometric } else { DecayFamily::Exponential };
                let spec = DecaySpec { family, rate: k.rho.unwrap(), scale: k.scale, support: k.support.unwrap() };
                build_kappa(d, spec).map_err(|e| self.anchor("kernel", "rho", e))?
            }
        };
        build_lambda(kappa, k.grid_size.unwrap(), k.lambda_radius.unwrap())
            .map_err(|e| self.anchor("kernel", "M", e))
    }

    pub fn covariance(&self, family: NoiseKind) -> Result<Option<Arc<dyn CovarianceSpec>>> {
        let c = &self.config;
        let nz = &c.noise;
        let spec: Arc<dyn CovarianceSpec> = match family {
            NoiseKind::None => return Ok(None),
            NoiseKind::Geometric => Arc::new(
                GeometricCovariance::new(c.lattice.d, nz.sigma2, nz.rho_a, nz.time_profile)
                    .map_err(|e| self.anchor("noise", "rho_a", e))?,
            ),
            NoiseKind::SiteWhite => Arc::new(
                SiteWhiteCovariance::new(c.lattice.d, nz.sigma2, nz.time_profile)
                    .map_err(|e| self.anchor("noise", "sigma2", e))?,
            ),
        };
        Ok(Some(spec))
    }

    pub fn noise_model(&self, n: usize) -> Result<Option<SpectralNoiseModel>> {
        let Some(spec) = self.covariance(self.config.noise.family)? else {
            return Ok(None);
        };
        build_spectral_model(spec, self.shape(n)?, self.grid()?)
            .map(Some)
            .map_err(|e| self.anchor("noise", "family", e))
    }

    /// Synapses with radius `min(R_J, cap)`.
    pub fn synapse(&self, cap: usize) -> Result<SynapseConfig> {
        let l = &self.config.learning;
        SynapseConfig::geometric(
            self.config.lattice.d,
            l.j_bar0,
            l.rho_j.unwrap(),
            l.radius.unwrap().min(cap),
            l.j_ini_frac,
            l.j_corr,
            l.j_dec,
            l.v_fn,
        )
        .map_err(|e| self.anchor("learning", "J_bar0", e))
    }

    /// Network on `V_n`. The synapse radius is `R_J`, except in sweeps over
    /// `n` (`clip_radius`), where it is capped at `n`.
    pub fn network(&self, n: usize, kernel: &KernelFamily, clip_radius: bool) -> Result<Network> {
        let shape = self.shape(n)?;
        let grid = self.grid()?;
        let params = self.config.fhn_params();
        params.validate().map_err(|e| self.anchor("fhn", "c_fr", e))?;
        let synapse = self.synapse(if clip_radius { n } else { usize::MAX })?;
        if synapse.radius() > n {
            return Err(self.anchor(
                "learning",
                "R_J",
                Error::InvalidParameter(format!("R_J = {} exceeds n = {n}", synapse.radius())),
            ));
        }
        Network::new(shape, grid, params, synapse, kernel).map_err(|e| self.anchor("learning", "J_bar0", e))
    }

    /// Check everything the run will need, in file order.
    pub fn validate(&self) -> Result<KernelFamily> {
        let n = self.config.lattice.n;
        self.shape(n)?;
        self.grid()?;
        if self.config.run.replicas == 0 {
            return Err(self.anchor("run", "replicas", Error::InvalidParameter("need at least one replica".into())));
        }
        let kernel = self.kernel()?;
        self.network(n, &kernel, false)?;
        Ok(kernel)
    }
}

pub fn is_numerical(err: &Error) -> bool {
    matches!(
        err,
        Error::NegativeSpectrum { .. }
            | Error::NonPositiveDenominator { .. }
            | Error::TailMass { .. }
            | Error::NonPositiveWeight { .. }
            | Error::NonfiniteState { .. }
            | Error::DivisionDegenerate
            | Error::Numerical(_)
    )
}
