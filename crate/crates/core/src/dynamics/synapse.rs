use super::ResponseFn;
use crate::kernels::KernelFamily;
use crate::lattice::{offsets_within, TorusIndex};
use crate::{Error, Result};

/// Learning rule constants and the offset support `V_R` of the synapses.
#[derive(Clone, Debug, PartialEq)]
pub struct SynapseConfig {
    radius: usize,
    offsets: Vec<TorusIndex>,
    j_bar: Vec<f64>,
    pub j_ini_frac: f64,
    pub j_corr: f64,
    pub j_dec: f64,
    pub activity: ResponseFn,
}

impl SynapseConfig {
    /// `J_bar^k = j_bar0 * rho_j^{|k|_1}` on `|k|_inf <= radius`.
    #[allow(clippy::too_many_arguments)]
    pub fn geometric(
        dim: usize,
        j_bar0: f64,
        rho_j: f64,
        radius: usize,
        j_ini_frac: f64,
        j_corr: f64,
        j_dec: f64,
        activity: ResponseFn,
    ) -> Result<Self> {
        if !(j_bar0 >= 0.0 && j_bar0.is_finite()) {
            return Err(Error::InvalidParameter(format!("J_bar0 must be >= 0, got {j_bar0}")));
        }
        if !(0.0..1.0).contains(&rho_j) {
            return Err(Error::InvalidParameter(format!("rho_J must be in [0,1), got {rho_j}")));
        }
        let offsets = offsets_within(dim, radius)?;
        let j_bar = offsets.iter().map(|k| j_bar0 * rho_j.powi(k.l1_norm() as i32)).collect();
        Self::from_parts(offsets, j_bar, j_ini_frac, j_corr, j_dec, activity)
    }

    /// No coupling: a single zero-strength offset.
    pub fn uncoupled(dim: usize) -> Result<Self> {
        Self::geometric(dim, 0.0, 0.0, 0, 0.0, 0.0, 0.0, ResponseFn::Zero)
    }

    fn from_parts(
        offsets: Vec<TorusIndex>,
        j_bar: Vec<f64>,
        j_ini_frac: f64,
        j_corr: f64,
        j_dec: f64,
        activity: ResponseFn,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&j_ini_frac) {
            return Err(Error::InvalidParameter(format!(
                "J_ini_frac must be in [0,1], got {j_ini_frac}"
            )));
        }
        if !(j_corr >= 0.0 && j_dec >= 0.0 && j_corr.is_finite() && j_dec.is_finite()) {
            return Err(Error::InvalidParameter("J_corr and J_dec must be >= 0".into()));
        }
        let radius = offsets.iter().map(|k| k.sup_norm() as usize).max().unwrap_or(0);
        Ok(Self { radius, offsets, j_bar, j_ini_frac, j_corr, j_dec, activity })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[TorusIndex] {
        &self.offsets
    }

    pub fn j_bar(&self) -> &[f64] {
        &self.j_bar
    }

    pub fn j_bar_total(&self) -> f64 {
        self.j_bar.iter().sum()
    }

    /// Keep only offsets with `|k|_inf <= radius`.
    pub fn restricted(&self, radius: usize) -> Self {
        let (offsets, j_bar) = self
            .offsets
            .iter()
            .zip(&self.j_bar)
            .filter(|(k, _)| k.sup_norm() as usize <= radius)
            .map(|(k, b)| (*k, *b))
            .unzip();
        Self { radius: self.radius.min(radius), offsets, j_bar, ..self.clone() }
    }

    /// Check `kappa^k >= J_bar^k f_bar^2` on the synaptic support.
    pub fn check_kernel(&self, kernel: &KernelFamily, f_bar: f64) -> Result<()> {
        for (k, &b) in self.offsets.iter().zip(&self.j_bar) {
            let need = b * f_bar * f_bar;
            let have = kernel.kappa(k);
            if have < need * (1.0 - 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "kappa^{k} = {have} is below J_bar^k f_bar^2 = {need}"
                )));
            }
        }
        Ok(())
    }
}

/// Current conductances `J^k_t` for every site and offset, stored
/// `values[site * offsets + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynapticState {
    offsets: usize,
    values: Vec<f64>,
}

impl SynapticState {
    pub fn initial(config: &SynapseConfig, sites: usize) -> Self {
        let row: Vec<f64> = config.j_bar.iter().map(|b| b * config.j_ini_frac).collect();
        let mut values = Vec::with_capacity(sites * row.len());
        for _ in 0..sites {
            values.extend_from_slice(&row);
        }
        Self { offsets: row.len(), values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, site: usize, k: usize) -> f64 {
        self.values[site * self.offsets + k]
    }

    /// Mean of `J^k` over sites, per offset.
    pub fn offset_means(&self) -> Vec<f64> {
        let sites = self.values.len() / self.offsets.max(1);
        let mut out = vec![0.0; self.offsets];
        for row in self.values.chunks_exact(self.offsets.max(1)) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter().map(|s| s / sites.max(1) as f64).collect()
    }

    /// `(min J, max (J - J_bar^k))`; the invariant is `min >= 0`, `excess <= 0`.
    pub fn bound_margins(&self, config: &SynapseConfig) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut excess = f64::NEG_INFINITY;
        for row in self.values.chunks_exact(self.offsets.max(1)) {
            for (v, b) in row.iter().zip(&config.j_bar) {
                min = min.min(*v);
                excess = excess.max(v - b);
            }
        }
        (min, excess)
    }
}

/// `sum_k J^k f1(v^j) f2(v^{(j+k) mod V_n})` at one site. `neighbors` is the
/// `[site][k]` table of `(j+k) mod V_n`.
pub fn interaction_sum(
    state: &SynapticState,
    f1: ResponseFn,
    f2: ResponseFn,
    v: &[f64],
    neighbors: &[usize],
    site: usize,
) -> f64 {
    let k = state.offsets;
    let row = &state.values[site * k..(site + 1) * k];
    let nb = &neighbors[site * k..(site + 1) * k];
    let s: f64 = row.iter().zip(nb).map(|(j, &m)| j * f2.eval(v[m])).sum();
    f1.eval(v[site]) * s
}

/// Explicit Euler step of
/// `dJ = (J_corr (J_bar - J) act(v^j) act(v^{j+k}) - J_dec J) dt`, then
/// clamp to `[0, J_bar^k]`. `activity` holds `act(v)` per site. Returns the
/// number of entries the clamp moved.
pub fn hebbian_step(
    state: &mut SynapticState,
    config: &SynapseConfig,
    activity: &[f64],
    neighbors: &[usize],
    dt: f64,
) -> usize {
    let k = state.offsets;
    if k == 0 {
        return 0;
    }
    let mut clamped = 0;
    for (site, (row, nb)) in state.values.chunks_exact_mut(k).zip(neighbors.chunks_exact(k)).enumerate() {
        let a = activity[site];
        for ((j, &m), &b) in row.iter_mut().zip(nb).zip(&config.j_bar) {
            let dj = config.j_corr * (b - *j) * a * activity[m] - config.j_dec * *j;
            let next = *j + dj * dt;
            let c = next.clamp(0.0, b);
            if c != next {
                clamped += 1;
            }
            *j = c;
        }
    }
    clamped
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeShape;

    fn single_offset(k0: i64) -> (SynapseConfig, SynapticState, Vec<usize>, LatticeShape) {
        let shape = LatticeShape::new(1, 3).unwrap();
        let offsets = vec![TorusIndex::new(&[k0])];
        let cfg = SynapseConfig::from_parts(offsets.clone(), vec![1.0], 1.0, 0.0, 0.0, ResponseFn::Logistic)
            .unwrap();
        let state = SynapticState::initial(&cfg, shape.site_count());
        (cfg, state, shape.neighbor_table(&offsets), shape)
    }

    #[test]
    fn interaction_examples() {
        let (_, state, nb, shape) = single_offset(2);
        let v = vec![0.0; shape.site_count()];
        let s = interaction_sum(&state, ResponseFn::Logistic, ResponseFn::Logistic, &v, &nb, 1);
        assert!((s - 0.25).abs() < 1e-15);
        let zero = SynapseConfig::uncoupled(1).unwrap();
        let st = SynapticState::initial(&zero, 7);
        let nb0 = shape.neighbor_table(zero.offsets());
        assert_eq!(interaction_sum(&st, ResponseFn::Logistic, ResponseFn::Logistic, &v, &nb0, 3), 0.0);
    }

    #[test]
    fn frozen_and_decaying_weights() {
        let (cfg, mut state, nb, shape) = single_offset(1);
        let act = vec![0.7; shape.site_count()];
        let before = state.clone();
        hebbian_step(&mut state, &cfg, &act, &nb, 0.01);
        assert_eq!(state, before);

        let cfg = SynapseConfig { j_dec: 0.5, activity: ResponseFn::Zero, ..cfg };
        let zero = vec![0.0; shape.site_count()];
        let mut prev = state.get(0, 0);
        for _ in 0..10 {
            hebbian_step(&mut state, &cfg, &zero, &nb, 0.01);
            assert!(state.get(0, 0) < prev);
            prev = state.get(0, 0);
        }
        assert!((prev - 0.995f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn clamp_keeps_weights_in_range() {
        let (cfg, mut state, nb, shape) = single_offset(1);
        let cfg = SynapseConfig { j_corr: 1e4, ..cfg };
        let act = vec![1.0; shape.site_count()];
        let n = hebbian_step(&mut state, &cfg, &act, &nb, 1.0);
        let (min, excess) = state.bound_margins(&cfg);
        assert!(min >= 0.0 && excess <= 0.0);
        assert_eq!(n, 0);
        let cfg = SynapseConfig { j_corr: 0.0, j_dec: 10.0, ..cfg };
        let n = hebbian_step(&mut state, &cfg, &act, &nb, 1.0);
        assert_eq!(n, shape.site_count());
        assert_eq!(state.bound_margins(&cfg).0, 0.0);
    }

    #[test]
    fn restriction_and_kernel_check() {
        let cfg = SynapseConfig::geometric(1, 0.5, 0.4, 6, 1.0, 1.0, 0.5, ResponseFn::Logistic).unwrap();
        assert_eq!(cfg.offsets().len(), 13);
        let r = cfg.restricted(2);
        assert_eq!(r.offsets().len(), 5);
        assert_eq!(r.radius(), 2);
        let kernel = crate::kernels::build_kappa(1, crate::kernels::DecaySpec::geometric(0.5, 1.0, 40)).unwrap();
        assert!(cfg.check_kernel(&kernel, 1.0).is_ok());
        let strong = SynapseConfig::geometric(1, 2.0, 0.4, 6, 1.0, 1.0, 0.5, ResponseFn::Logistic).unwrap();
        assert!(strong.check_kernel(&kernel, 1.0).is_err());
    }
}
