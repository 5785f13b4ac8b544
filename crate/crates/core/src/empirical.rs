//! The periodic empirical measure
//! `mu^n(X) = (1/|V_n|) sum_{j in V_n} delta_{S^j X~}`
//! and statistics computed under it.
//!
//! Atoms are never materialized: atom `j` reads site `k` of the base field
//! at `(j + k) mod V_n`. Sums over atoms are taken over sorted values, so
//! statistics that are equal as multisets are equal bit for bit.

use crate::field::PathField;
use crate::kernels::KernelFamily;
use crate::lattice::{LatticeShape, TorusIndex};
use crate::rng::replica_rng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::io::Write;

#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    base: PathField,
}

pub fn empirical_measure(field: PathField) -> EmpiricalMeasure {
    EmpiricalMeasure { base: field }
}

/// Order-independent sum: sorts by value first.
fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

impl EmpiricalMeasure {
    pub fn base(&self) -> &PathField {
        &self.base
    }

    pub fn shape(&self) -> &LatticeShape {
        self.base.shape()
    }

    pub fn atom_count(&self) -> usize {
        self.shape().site_count()
    }

    /// Materialize atom `S^j X`.
    pub fn atom(&self, j: &TorusIndex) -> PathField {
        self.base.shifted(j)
    }

    /// Value of atom `j` at site `k` (any integer tuple, read periodically)
    /// and stored row `t`.
    pub fn atom_value(&self, atom: usize, k: &TorusIndex, t: usize) -> f64 {
        let shape = self.shape();
        self.base.at(t, shape.add_flat(atom, &shape.reduce(k.coords())))
    }

    /// Values of every atom at site `k`, row `t`; equals the multiset of all
    /// site values at row `t` for every `k`.
    fn marginal_values(&self, k: &TorusIndex, t: usize) -> Vec<f64> {
        (0..self.atom_count()).map(|a| self.atom_value(a, k, t)).collect()
    }

    /// Whether the atom multiset is invariant under each shift. Shifting
    /// atom `S^j X` by `s` gives atom `S^{(j+s) mod V_n} X`, so the check is
    /// that `j -> (j + s) mod V_n` permutes `V_n`.
    pub fn stationarity_check(&self, shifts: &[TorusIndex]) -> bool {
        let shape = self.shape();
        shifts.iter().all(|s| {
            if s.dim() != shape.dim() {
                return false;
            }
            let table = shape.shift_table(&shape.reduce(s.coords()));
            let mut seen = vec![false; table.len()];
            table.iter().all(|&m| !std::mem::replace(&mut seen[m], true))
        })
    }

    pub fn marginal_statistics(&self, offsets: &[TorusIndex], rows: &[usize]) -> Result<Vec<MarginalRow>> {
        let mut out = Vec::new();
        for k in offsets {
            for &t in rows {
                if t >= self.base.len_times() {
                    return Err(Error::InvalidParameter(format!("row {t} is not stored")));
                }
                let mut vals = self.marginal_values(k, t);
                vals.sort_by(f64::total_cmp);
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let variance = sorted_sum(vals.iter().map(|x| (x - mean).powi(2)).collect()) / n;
                let q = |p: f64| quantile_sorted(&vals, p);
                out.push(MarginalRow {
                    offset: k.to_string(),
                    time: self.base.times()[t],
                    mean,
                    variance,
                    q10: q(0.1),
                    q50: q(0.5),
                    q90: q(0.9),
                });
            }
        }
        Ok(out)
    }

    /// `(1/|V_n|) sum_j (v^j_t - m)(v^{(j+k) mod V_n}_t - m)` at row `t`.
    pub fn spatial_covariance(&self, k: &TorusIndex, t: usize) -> f64 {
        let shape = self.shape();
        let row = self.base.snapshot(t);
        let n = row.len() as f64;
        let mean = sorted_sum(row.to_vec()) / n;
        let k = shape.reduce(k.coords());
        let products = (0..row.len())
            .map(|j| (row[j] - mean) * (row[shape.add_flat(j, &k)] - mean))
            .collect();
        sorted_sum(products) / n
    }

    /// `||S^j X||_{T,lambda}` for every atom, with the periodic extension
    /// off the cube.
    pub fn atom_weighted_norms(&self, kernel: &KernelFamily) -> Result<Vec<f64>> {
        let shape = self.shape();
        let folded = kernel.folded_weights(shape)?;
        let sq: Vec<f64> = self.base.site_sups().iter().map(|s| s * s).collect();
        let support: Vec<(usize, f64)> =
            folded.iter().cloned().enumerate().filter(|(_, w)| *w != 0.0).collect();
        Ok((0..shape.site_count())
            .map(|j| {
                let table_j = shape.index(j);
                support
                    .iter()
                    .map(|&(s, w)| w * sq[shape.add_flat(s, &table_j)])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    }

    pub fn weighted_ensemble_norms(&self, kernel: &KernelFamily) -> Result<NormSummary> {
        let norms = self.atom_weighted_norms(kernel)?;
        let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = sorted_sum(norms.clone()) / norms.len() as f64;
        Ok(NormSummary { min, mean, max })
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalRow {
    pub offset: String,
    pub time: f64,
    pub mean: f64,
    pub variance: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// A path coordinate `(site offset, stored row)` used by [`bl_distance`].
pub type Coordinate = (TorusIndex, usize);

/// Randomized bounded-Lipschitz distance between two empirical measures on
/// finitely many path coordinates.
///
/// Test functions are `f(x) = clamp(sum_i w_i x_i + b, -1, 1)` with
/// `sum |w_i| = 1` (1-Lipschitz in the sup norm, bounded by 1); the result
/// is `max_f |E_1 f - E_2 f|` over `count` functions drawn from `seed`.
/// This is a computable stand-in for the Levy-Prokhorov metric, not that
/// metric itself.
pub fn bl_distance(
    mu1: &EmpiricalMeasure,
    mu2: &EmpiricalMeasure,
    projection: &[Coordinate],
    count: usize,
    seed: u64,
) -> Result<f64> {
    if mu1.shape().dim() != mu2.shape().dim() || projection.is_empty() {
        return Err(Error::InvalidParameter(
            "distance needs measures of equal dimension and a nonempty projection".into(),
        ));
    }
    for (_, t) in projection {
        if *t >= mu1.base.len_times() || *t >= mu2.base.len_times() {
            return Err(Error::InvalidParameter(format!("row {t} is not stored")));
        }
    }
    let mut rng = replica_rng(seed, 0);
    let tests: Vec<(Vec<f64>, f64)> = (0..count)
        .map(|_| {
            let raw: Vec<f64> = projection.iter().map(|_| rng.sample(StandardNormal)).collect();
            let l1: f64 = raw.iter().map(|x: &f64| x.abs()).sum();
            let w = raw.iter().map(|x| x / l1).collect();
            (w, rng.random_range(-1.0..=1.0))
        })
        .collect();
    let coords = |mu: &EmpiricalMeasure| -> Vec<Vec<f64>> {
        (0..mu.atom_count())
            .map(|a| projection.iter().map(|(k, t)| mu.atom_value(a, k, *t)).collect())
            .collect()
    };
    let (c1, c2) = (coords(mu1), coords(mu2));
    let expect = |c: &[Vec<f64>], w: &[f64], b: f64| {
        let vals = c
            .iter()
            .map(|x| (x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b).clamp(-1.0, 1.0))
            .collect();
        sorted_sum(vals) / c.len() as f64
    };
    Ok(tests
        .iter()
        .map(|(w, b)| (expect(&c1, w, *b) - expect(&c2, w, *b)).abs())
        .fold(0.0, f64::max))
}

pub fn write_statistics_csv<W: Write>(out: &mut W, rows: &[MarginalRow]) -> Result<()> {
    writeln!(out, "offset,time,mean,variance,q10,q50,q90")?;
    for r in rows {
        writeln!(
            out,
            "\"{}\",{},{},{},{},{},{}",
            r.offset, r.time, r.mean, r.variance, r.q10, r.q50, r.q90
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_kappa, build_lambda, DecaySpec};
    use crate::lattice::cube_indices;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_field(d: usize, n: usize, times: usize, seed: u64) -> PathField {
        let shape = LatticeShape::new(d, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<f64> = (0..times).map(|i| i as f64).collect();
        let v = (0..times * shape.site_count()).map(|_| rng.random::<f64>() - 0.5).collect();
        PathField::from_values(shape, t, v).unwrap()
    }

    #[test]
    fn single_site_and_constant_fields() {
        let mu = empirical_measure(random_field(1, 0, 3, 1));
        assert_eq!(mu.atom_count(), 1);
        assert_eq!(mu.atom_value(0, &TorusIndex::new(&[5]), 1), mu.base().at(1, 0));

        let shape = LatticeShape::new(2, 2).unwrap();
        let c = PathField::from_values(shape, vec![0.0, 1.0], vec![1.5; 50]).unwrap();
        let mu = empirical_measure(c);
        let a = mu.atom(&TorusIndex::new(&[1, -2]));
        assert_eq!(a.values(), mu.base().values());
        let stats = mu.marginal_statistics(&[TorusIndex::new(&[0, 0])], &[1]).unwrap();
        assert_eq!(stats[0].mean, 1.5);
        assert_eq!(stats[0].variance, 0.0);
    }

    #[test]
    fn stationarity_and_offset_free_means() {
        let mu = empirical_measure(random_field(2, 3, 2, 7));
        let shifts: Vec<_> = cube_indices(&LatticeShape::new(2, 4).unwrap());
        assert!(mu.stationarity_check(&shifts));
        let offsets = [TorusIndex::new(&[0, 0]), TorusIndex::new(&[2, -1]), TorusIndex::new(&[9, 9])];
        let stats = mu.marginal_statistics(&offsets, &[1]).unwrap();
        assert_eq!(stats[0].mean.to_bits(), stats[1].mean.to_bits());
        assert_eq!(stats[0].mean.to_bits(), stats[2].mean.to_bits());
        // two-loop oracle
        let row = mu.base().snapshot(1);
        let direct = row.iter().sum::<f64>() / row.len() as f64;
        assert!((stats[0].mean - direct).abs() < 1e-15);
        assert!(stats[0].q10 <= stats[0].q50 && stats[0].q50 <= stats[0].q90);
    }

    #[test]
    fn covariance_symmetric_and_nonnegative_variance() {
        let mu = empirical_measure(random_field(1, 6, 1, 3));
        for k in 1..6 {
            let a = mu.spatial_covariance(&TorusIndex::new(&[k]), 0);
            let b = mu.spatial_covariance(&TorusIndex::new(&[-k]), 0);
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(mu.spatial_covariance(&TorusIndex::new(&[0]), 0) >= 0.0);
    }

    #[test]
    fn distance_properties() {
        let f = random_field(1, 4, 3, 1);
        let mu1 = empirical_measure(f.clone());
        let mu1s = empirical_measure(f.shifted(&TorusIndex::new(&[3])));
        let mu2 = empirical_measure(random_field(1, 4, 3, 2));
        let mu3 = empirical_measure(random_field(1, 4, 3, 3));
        let proj = [(TorusIndex::new(&[0]), 1), (TorusIndex::new(&[1]), 2)];
        assert_eq!(bl_distance(&mu1, &mu1s, &proj, 64, 5).unwrap(), 0.0);
        let d12 = bl_distance(&mu1, &mu2, &proj, 64, 5).unwrap();
        let d21 = bl_distance(&mu2, &mu1, &proj, 64, 5).unwrap();
        let d13 = bl_distance(&mu1, &mu3, &proj, 64, 5).unwrap();
        let d23 = bl_distance(&mu2, &mu3, &proj, 64, 5).unwrap();
        assert_eq!(d12, d21);
        assert!(d12 <= 2.0 && d12 > 0.0);
        assert!(d13 <= d12 + d23 + 1e-12);
    }

    #[test]
    fn ensemble_norms() {
        let kernel = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 10)).unwrap(), 256, 40).unwrap();
        let shape = LatticeShape::new(1, 5).unwrap();
        let ones = PathField::from_values(shape, vec![0.0, 1.0], vec![1.0; 22]).unwrap();
        let s = empirical_measure(ones).weighted_ensemble_norms(&kernel).unwrap();
        assert_eq!(s.min, s.max);
        assert!((s.mean - 1.0).abs() < 1e-12);
        let zero = PathField::zeros(shape, vec![0.0, 1.0]);
        assert_eq!(empirical_measure(zero).weighted_ensemble_norms(&kernel).unwrap().max, 0.0);
    }
}
