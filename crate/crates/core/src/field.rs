//! Uniform time grids and path fields `(X^j_t)` over a torus.

use crate::lattice::{shift_field, LatticeShape, TorusIndex};
use crate::rng::replica_rng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Uniform grid `0 = t_0 < ... < t_K = T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    /// `dt` must divide `horizon` to within `1e-12`.
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "time step {dt} does not divide horizon {horizon}"
            )));
        }
        Ok(Self { horizon, steps: steps as usize })
    }

    pub fn with_steps(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(
                "time grid needs a positive horizon and at least one step".into(),
            ));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `K`; the grid has `K + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        self.horizon * step as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|m| self.time(m)).collect()
    }

    /// Grid steps kept when recording every `stride`-th point. The terminal
    /// step is always included.
    pub fn recorded_steps(&self, stride: usize) -> Vec<usize> {
        let stride = stride.max(1);
        let mut out: Vec<usize> = (0..=self.steps).step_by(stride).collect();
        if *out.last().unwrap() != self.steps {
            out.push(self.steps);
        }
        out
    }
}

/// Real path field over a torus, stored time-major: `values[t * sites + site]`.
///
/// `times` holds the grid time of each stored row.
#[derive(Clone, Debug, PartialEq)]
pub struct PathField {
    shape: LatticeShape,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PathField {
    pub fn zeros(shape: LatticeShape, times: Vec<f64>) -> Self {
        let values = vec![0.0; times.len() * shape.site_count()];
        Self { shape, times, values }
    }

    /// Independent standard Brownian motions on every site, sampled on
    /// `grid` from stream `replica` of `seed`.
    pub fn brownian(shape: LatticeShape, grid: TimeGrid, seed: u64, replica: u64) -> Self {
        let mut rng = replica_rng(seed, replica);
        let sites = shape.site_count();
        let mut f = Self::zeros(shape, grid.times());
        let sd = grid.dt().sqrt();
        for t in 1..=grid.steps() {
            for m in 0..sites {
                let z: f64 = rng.sample(StandardNormal);
                f.values[t * sites + m] = f.values[(t - 1) * sites + m] + sd * z;
            }
        }
        f
    }

    pub fn from_values(shape: LatticeShape, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != times.len() * shape.site_count() {
            return Err(Error::InvalidParameter(format!(
                "path field needs {} values, got {}",
                times.len() * shape.site_count(),
                values.len()
            )));
        }
        Ok(Self { shape, times, values })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len_times(&self) -> usize {
        self.times.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, t: usize, site: usize) -> f64 {
        self.values[t * self.shape.site_count() + site]
    }

    pub fn snapshot(&self, t: usize) -> &[f64] {
        let s = self.shape.site_count();
        &self.values[t * s..(t + 1) * s]
    }

    pub fn snapshot_mut(&mut self, t: usize) -> &mut [f64] {
        let s = self.shape.site_count();
        &mut self.values[t * s..(t + 1) * s]
    }

    pub fn site_path(&self, site: usize) -> Vec<f64> {
        (0..self.len_times()).map(|t| self.at(t, site)).collect()
    }

    /// `||X^j||_T` over the stored grid, for every site.
    pub fn site_sups(&self) -> Vec<f64> {
        let s = self.shape.site_count();
        let mut sups = vec![0.0f64; s];
        for row in self.values.chunks_exact(s) {
            for (m, v) in row.iter().enumerate() {
                sups[m] = sups[m].max(v.abs());
            }
        }
        sups
    }

    /// Sup norms restricted to the first `upto` stored rows.
    pub fn site_sups_until(&self, upto: usize) -> Vec<f64> {
        let s = self.shape.site_count();
        let mut sups = vec![0.0f64; s];
        for row in self.values.chunks_exact(s).take(upto) {
            for (m, v) in row.iter().enumerate() {
                sups[m] = sups[m].max(v.abs());
            }
        }
        sups
    }

    /// Spatial shift `S^j` applied at every time.
    pub fn shifted(&self, j: &TorusIndex) -> Self {
        let s = self.shape.site_count();
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.values.chunks_exact(s) {
            values.extend(shift_field(row, &self.shape, j));
        }
        Self { shape: self.shape, times: self.times.clone(), values }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            shape: self.shape,
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape || self.times.len() != other.times.len() {
            return Err(Error::InvalidParameter("path fields have different layouts".into()));
        }
        Ok(Self {
            shape: self.shape,
            times: self.times.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect(),
        })
    }

    /// Largest absolute entry.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_divisible_step() {
        assert!(TimeGrid::new(1.0, 1e-3).is_ok());
        assert_eq!(TimeGrid::new(1.0, 1e-3).unwrap().steps(), 1000);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, 0.0).is_err());
        assert!(TimeGrid::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn recorded_steps_keep_terminal() {
        let g = TimeGrid::new(1.0, 0.1).unwrap();
        assert_eq!(g.recorded_steps(4), vec![0, 4, 8, 10]);
        assert_eq!(g.recorded_steps(5), vec![0, 5, 10]);
        assert_eq!(g.recorded_steps(1).len(), 11);
    }

    #[test]
    fn site_sups_and_shift() {
        let shape = LatticeShape::new(1, 1).unwrap();
        let f = PathField::from_values(shape, vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0, -3.0, 2.0])
            .unwrap();
        assert_eq!(f.site_sups(), vec![1.0, 3.0, 2.0]);
        let g = f.shifted(&TorusIndex::new(&[1]));
        assert_eq!(g.snapshot(1), &[-3.0, 2.0, 1.0]);
    }
}
