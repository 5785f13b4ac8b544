use super::SpectralNoiseModel;
use crate::field::{PathField, TimeGrid};
use crate::lattice::LatticeShape;
use crate::rng::{replica_rng, ReplicaRng};
use crate::Result;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

/// Per-replica generator of noise increments `dW^{n,.}` over successive
/// grid steps.
///
/// Each step draws `|V_n|` standard normals in flat site order from the
/// replica stream, then filters them through the spectral multiplier.
pub struct NoiseStepper<'a> {
    model: &'a SpectralNoiseModel,
    rng: ReplicaRng,
    draws: Vec<f64>,
    buf: Vec<Complex64>,
    sqrt_dt: f64,
}

impl<'a> NoiseStepper<'a> {
    pub fn new(model: &'a SpectralNoiseModel, seed: u64, replica: u64) -> Self {
        Self {
            model,
            rng: replica_rng(seed, replica),
            draws: vec![0.0; model.shape().site_count()],
            buf: Vec::new(),
            sqrt_dt: model.grid().dt().sqrt(),
        }
    }

    /// Write `W_{t_{step+1}} - W_{t_step}` into `out`.
    pub fn increment(&mut self, step: usize, out: &mut [f64]) {
        if self.model.is_silent() {
            out.fill(0.0);
            return;
        }
        for d in &mut self.draws {
            let z: f64 = self.rng.sample(StandardNormal);
            *d = z * self.sqrt_dt;
        }
        let mult = self.model.multipliers(step);
        self.model.dft().multiply_spectrum(&self.draws, &mult, &mut self.buf, out);
    }
}

/// Sampled noise fields, recorded every `stride` steps, with per-site sup
/// norms over the full grid.
#[derive(Clone, Debug)]
pub struct NoiseEnsemble {
    pub shape: LatticeShape,
    pub grid: TimeGrid,
    pub seed: u64,
    /// Grid steps of the recorded rows (always contains 0 and `K`).
    pub recorded_steps: Vec<usize>,
    pub paths: Vec<PathField>,
    /// `||W^{n,j}||_T` over every grid step, per replica and site.
    pub sups: Vec<Vec<f64>>,
}

impl NoiseEnsemble {
    pub fn replicas(&self) -> usize {
        self.paths.len()
    }

    /// Row index of a recorded grid step.
    pub fn row_of_step(&self, step: usize) -> Option<usize> {
        self.recorded_steps.binary_search(&step).ok()
    }
}

/// Draw `replicas` independent noise fields. Replica `r` uses stream `r` of
/// `seed`, so the result does not depend on the thread count.
pub fn sample_noise_paths(
    model: &SpectralNoiseModel,
    replicas: usize,
    seed: u64,
    stride: usize,
) -> Result<NoiseEnsemble> {
    let shape = *model.shape();
    let grid = *model.grid();
    let recorded_steps = grid.recorded_steps(stride);
    let times: Vec<f64> = recorded_steps.iter().map(|&m| grid.time(m)).collect();
    let results: Vec<(PathField, Vec<f64>)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let sites = shape.site_count();
            let mut stepper = NoiseStepper::new(model, seed, r as u64);
            let mut w = vec![0.0; sites];
            let mut dw = vec![0.0; sites];
            let mut sups = vec![0.0f64; sites];
            let mut field = PathField::zeros(shape, times.clone());
            let mut next_row = 1;
            for step in 0..grid.steps() {
                stepper.increment(step, &mut dw);
                for ((wi, di), s) in w.iter_mut().zip(&dw).zip(sups.iter_mut()) {
                    *wi += di;
                    *s = s.max(wi.abs());
                }
                if recorded_steps.get(next_row) == Some(&(step + 1)) {
                    field.snapshot_mut(next_row).copy_from_slice(&w);
                    next_row += 1;
                }
            }
            (field, sups)
        })
        .collect();
    let (paths, sups) = results.into_iter().unzip();
    Ok(NoiseEnsemble { shape, grid, seed, recorded_steps, paths, sups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{build_spectral_model, GeometricCovariance, TimeProfile};
    use std::sync::Arc;

    fn model() -> SpectralNoiseModel {
        let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, TimeProfile::Constant).unwrap());
        build_spectral_model(spec, LatticeShape::new(1, 2).unwrap(), TimeGrid::new(1.0, 0.01).unwrap())
            .unwrap()
    }

    #[test]
    fn starts_at_zero_and_is_reproducible() {
        let m = model();
        let a = sample_noise_paths(&m, 4, 11, 10).unwrap();
        let b = sample_noise_paths(&m, 4, 11, 10).unwrap();
        assert_eq!(a.recorded_steps, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        for (x, y) in a.paths.iter().zip(&b.paths) {
            assert!(x.snapshot(0).iter().all(|&v| v == 0.0));
            assert_eq!(x.values(), y.values());
        }
        assert_ne!(a.paths[0].values(), a.paths[1].values());
    }

    #[test]
    fn recorded_terminal_matches_full_resolution_run() {
        let m = model();
        let coarse = sample_noise_paths(&m, 2, 3, 1000).unwrap();
        let fine = sample_noise_paths(&m, 2, 3, 1).unwrap();
        for r in 0..2 {
            assert_eq!(coarse.paths[r].snapshot(1), fine.paths[r].snapshot(100));
            assert_eq!(coarse.sups[r], fine.paths[r].site_sups());
        }
    }
}
