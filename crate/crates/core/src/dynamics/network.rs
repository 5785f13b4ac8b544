use super::synapse::{hebbian_step, SynapseConfig, SynapticState};
use super::FhnParams;
use crate::field::{PathField, TimeGrid};
use crate::kernels::KernelFamily;
use crate::lattice::LatticeShape;
use crate::noise::{NoiseStepper, SpectralNoiseModel};
use crate::{Error, Result};
use rayon::prelude::*;

/// Validated network description on a torus.
#[derive(Clone, Debug)]
pub struct Network {
    pub shape: LatticeShape,
    pub grid: TimeGrid,
    pub params: FhnParams,
    pub synapse: SynapseConfig,
}

impl Network {
    /// Checks `R_J <= n` and `kappa^k >= J_bar^k f_bar^2` on the support.
    pub fn new(
        shape: LatticeShape,
        grid: TimeGrid,
        params: FhnParams,
        synapse: SynapseConfig,
        kernel: &KernelFamily,
    ) -> Result<Self> {
        params.validate()?;
        if synapse.radius() > shape.radius() {
            return Err(Error::InvalidParameter(format!(
                "synapse radius {} exceeds torus radius {}",
                synapse.radius(),
                shape.radius()
            )));
        }
        if kernel.dim() != shape.dim() {
            return Err(Error::InvalidParameter("kernel and lattice dimensions differ".into()));
        }
        synapse.check_kernel(kernel, params.f_bar())?;
        Ok(Self { shape, grid, params, synapse })
    }
}

/// Euler stepper for the coupled `(v, w, J)` system on one torus. Shared by
/// the stochastic simulator and the deterministic solution maps.
pub(crate) struct Integrator<'a> {
    params: &'a FhnParams,
    synapse: &'a SynapseConfig,
    neighbors: Vec<usize>,
    pub v: Vec<f64>,
    pub rec: Vec<f64>,
    pub j: SynapticState,
    f2v: Vec<f64>,
    act: Vec<f64>,
    next_v: Vec<f64>,
    pub clamp_events: usize,
}

impl<'a> Integrator<'a> {
    pub fn new(shape: &LatticeShape, params: &'a FhnParams, synapse: &'a SynapseConfig) -> Self {
        let sites = shape.site_count();
        Self {
            params,
            synapse,
            neighbors: shape.neighbor_table(synapse.offsets()),
            v: vec![params.u_ini; sites],
            rec: vec![0.0; sites],
            j: SynapticState::initial(synapse, sites),
            f2v: vec![0.0; sites],
            act: vec![0.0; sites],
            next_v: vec![0.0; sites],
            clamp_events: 0,
        }
    }

    /// One synchronous step; every update reads start-of-step values.
    pub fn step(&mut self, dw: &[f64], dt: f64) {
        let p = self.params;
        let k = self.synapse.offsets().len();
        for (m, &x) in self.v.iter().enumerate() {
            self.f2v[m] = p.f2.eval(x);
            self.act[m] = self.synapse.activity.eval(x);
        }
        let jv = self.j.values();
        for m in 0..self.v.len() {
            let x = self.v[m];
            let row = &jv[m * k..(m + 1) * k];
            let nb = &self.neighbors[m * k..(m + 1) * k];
            let coupling: f64 = row.iter().zip(nb).map(|(j, &s)| j * self.f2v[s]).sum();
            let inter = p.f1.eval(x) * coupling;
            self.next_v[m] = x + (x - x * x * x / 3.0 - self.rec[m] + inter) * dt + dw[m];
        }
        for (r, &x) in self.rec.iter_mut().zip(&self.v) {
            *r += (x + p.a_fr - p.c_fr * *r) * dt;
        }
        self.clamp_events += hebbian_step(&mut self.j, self.synapse, &self.act, &self.neighbors, dt);
        std::mem::swap(&mut self.v, &mut self.next_v);
    }

    pub fn first_nonfinite(&self) -> Option<usize> {
        self.v
            .iter()
            .zip(&self.rec)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
    }
}

/// Per-replica output of [`simulate_network`].
#[derive(Clone, Debug)]
pub struct ReplicaPaths {
    /// Voltage `v` at the recorded steps.
    pub v: PathField,
    /// Recovery `w` at the recorded steps.
    pub rec: PathField,
    /// Noise `W` at the recorded steps, when requested.
    pub noise: Option<PathField>,
    /// `||v^j||_T` over every grid step.
    pub v_sups: Vec<f64>,
    /// `||W^{n,j}||_T` over every grid step.
    pub noise_sups: Vec<f64>,
    /// `v^j_T`.
    pub v_terminal: Vec<f64>,
    /// Smallest `J` seen at any step.
    pub j_min: f64,
    /// Largest `J - J_bar^k` seen at any step.
    pub j_excess: f64,
    /// Site-mean of `J^k` per offset at each recorded step.
    pub j_trace: Vec<Vec<f64>>,
    pub clamp_events: usize,
}

#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub shape: LatticeShape,
    pub grid: TimeGrid,
    pub seed: u64,
    pub recorded_steps: Vec<usize>,
    pub replicas: Vec<ReplicaPaths>,
}

impl PathEnsemble {
    pub fn recorded_times(&self) -> Vec<f64> {
        self.recorded_steps.iter().map(|&m| self.grid.time(m)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimulationOptions {
    pub replicas: usize,
    pub seed: u64,
    pub record_stride: usize,
    pub keep_noise: bool,
}

/// Euler-Maruyama integration of the FitzHugh-Nagumo network with Hebbian
/// synapses. Replica `r` draws its noise from stream `r` of `seed`;
/// `noise = None` runs the deterministic system.
pub fn simulate_network(
    net: &Network,
    noise: Option<&SpectralNoiseModel>,
    opts: SimulationOptions,
) -> Result<PathEnsemble> {
    if let Some(model) = noise {
        if model.shape() != &net.shape || model.grid() != &net.grid {
            return Err(Error::InvalidParameter(
                "noise model was built for a different lattice or grid".into(),
            ));
        }
    }
    let recorded_steps = net.grid.recorded_steps(opts.record_stride);
    let replicas: Vec<ReplicaPaths> = (0..opts.replicas)
        .into_par_iter()
        .map(|r| run_replica(net, noise, &recorded_steps, opts, r as u64))
        .collect::<Result<_>>()?;
    Ok(PathEnsemble { shape: net.shape, grid: net.grid, seed: opts.seed, recorded_steps, replicas })
}

fn run_replica(
    net: &Network,
    noise: Option<&SpectralNoiseModel>,
    recorded_steps: &[usize],
    opts: SimulationOptions,
    replica: u64,
) -> Result<ReplicaPaths> {
    let sites = net.shape.site_count();
    let dt = net.grid.dt();
    let times: Vec<f64> = recorded_steps.iter().map(|&m| net.grid.time(m)).collect();
    let mut integ = Integrator::new(&net.shape, &net.params, &net.synapse);
    let mut stepper = noise.map(|m| NoiseStepper::new(m, opts.seed, replica));
    let mut dw = vec![0.0; sites];
    let mut w = vec![0.0; sites];
    let mut v_field = PathField::zeros(net.shape, times.clone());
    let mut rec_field = PathField::zeros(net.shape, times.clone());
    let mut noise_field = opts.keep_noise.then(|| PathField::zeros(net.shape, times));
    v_field.snapshot_mut(0).copy_from_slice(&integ.v);
    let mut v_sups: Vec<f64> = integ.v.iter().map(|x| x.abs()).collect();
    let mut noise_sups = vec![0.0f64; sites];
    let (mut j_min, mut j_excess) = integ.j.bound_margins(&net.synapse);
    let mut j_trace = vec![integ.j.offset_means()];
    let mut next_row = 1;
    for step in 0..net.grid.steps() {
        if let Some(s) = stepper.as_mut() {
            s.increment(step, &mut dw);
        }
        integ.step(&dw, dt);
        if let Some(site) = integ.first_nonfinite() {
            return Err(Error::NonfiniteState {
                site: net.shape.index(site),
                t: net.grid.time(step + 1),
            });
        }
        for m in 0..sites {
            w[m] += dw[m];
            v_sups[m] = v_sups[m].max(integ.v[m].abs());
            noise_sups[m] = noise_sups[m].max(w[m].abs());
        }
        let (lo, hi) = integ.j.bound_margins(&net.synapse);
        j_min = j_min.min(lo);
        j_excess = j_excess.max(hi);
        if recorded_steps.get(next_row) == Some(&(step + 1)) {
            v_field.snapshot_mut(next_row).copy_from_slice(&integ.v);
            rec_field.snapshot_mut(next_row).copy_from_slice(&integ.rec);
            if let Some(f) = noise_field.as_mut() {
                f.snapshot_mut(next_row).copy_from_slice(&w);
            }
            j_trace.push(integ.j.offset_means());
            next_row += 1;
        }
    }
    Ok(ReplicaPaths {
        v: v_field,
        rec: rec_field,
        noise: noise_field,
        v_sups,
        noise_sups,
        v_terminal: integ.v.clone(),
        j_min,
        j_excess,
        j_trace,
        clamp_events: integ.clamp_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ResponseFn;
    use crate::kernels::{build_kappa, DecaySpec};
    use crate::noise::{build_spectral_model, GeometricCovariance, TimeProfile};
    use std::sync::Arc;

    fn kernel() -> KernelFamily {
        build_kappa(1, DecaySpec::geometric(0.5, 1.0, 12)).unwrap()
    }

    fn opts(replicas: usize) -> SimulationOptions {
        SimulationOptions { replicas, seed: 1, record_stride: 10, keep_noise: false }
    }

    #[test]
    fn equilibrium_stays_at_zero() {
        let shape = LatticeShape::new(1, 2).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let params = FhnParams { a_fr: 0.0, ..Default::default() };
        let net = Network::new(shape, grid, params, SynapseConfig::uncoupled(1).unwrap(), &kernel()).unwrap();
        let ens = simulate_network(&net, None, opts(1)).unwrap();
        assert_eq!(ens.replicas[0].v.sup_abs(), 0.0);
        assert_eq!(ens.replicas[0].rec.sup_abs(), 0.0);
    }

    #[test]
    fn decoupled_sites_follow_one_trajectory() {
        let shape = LatticeShape::new(2, 1).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let kernel = build_kappa(2, DecaySpec::geometric(0.5, 1.0, 4)).unwrap();
        let net = Network::new(shape, grid, FhnParams::default(), SynapseConfig::uncoupled(2).unwrap(), &kernel)
            .unwrap();
        let ens = simulate_network(&net, None, opts(1)).unwrap();
        let v = &ens.replicas[0].v;
        for t in 0..v.len_times() {
            let row = v.snapshot(t);
            assert!(row.iter().all(|&x| x == row[0]));
        }
        assert!(v.sup_abs() > 0.0);
    }

    #[test]
    fn rejects_synapse_wider_than_torus_and_weak_kernel() {
        let shape = LatticeShape::new(1, 2).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let syn = SynapseConfig::geometric(1, 0.5, 0.4, 3, 1.0, 1.0, 0.5, ResponseFn::Logistic).unwrap();
        assert!(Network::new(shape, grid, FhnParams::default(), syn, &kernel()).is_err());
        let syn = SynapseConfig::geometric(1, 5.0, 0.4, 2, 1.0, 1.0, 0.5, ResponseFn::Logistic).unwrap();
        assert!(Network::new(shape, grid, FhnParams::default(), syn, &kernel()).is_err());
    }

    #[test]
    fn noisy_run_is_reproducible_and_bounded_weights() {
        let shape = LatticeShape::new(1, 3).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let syn = SynapseConfig::geometric(1, 0.5, 0.4, 3, 1.0, 1.0, 0.5, ResponseFn::Logistic).unwrap();
        let net = Network::new(shape, grid, FhnParams::default(), syn, &kernel()).unwrap();
        let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, TimeProfile::Constant).unwrap());
        let model = build_spectral_model(spec, shape, grid).unwrap();
        let a = simulate_network(&net, Some(&model), opts(3)).unwrap();
        let b = simulate_network(&net, Some(&model), opts(3)).unwrap();
        for (x, y) in a.replicas.iter().zip(&b.replicas) {
            assert_eq!(x.v.values(), y.v.values());
            assert!(x.j_min >= 0.0 && x.j_excess <= 0.0);
        }
        assert_eq!(a.recorded_steps.len(), 11);
    }
}
