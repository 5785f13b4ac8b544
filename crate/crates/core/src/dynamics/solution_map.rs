//! Deterministic solution maps `Psi^n(w)`: the network driven by a given
//! input path `w` instead of sampled noise,
//!
//! ```text
//! X_t = U_ini + int_0^t (drift with interactions over offsets in V_n) ds + w_t,
//! ```
//!
//! on a torus `V_m` (indices reduced mod `V_m`). `n = m` with full synaptic
//! support stands in for the untruncated map `Psi`.

use super::network::Integrator;
use super::synapse::SynapseConfig;
use super::FhnParams;
use crate::field::PathField;
use crate::kernels::{weighted_norm, KernelFamily};
use crate::{Error, Result};
use serde::Serialize;

/// Solve the driven system with interactions truncated to `V_truncation`.
/// `drive` must cover every grid time and vanish at `t = 0`.
pub fn solve_driven(
    drive: &PathField,
    truncation: usize,
    params: &FhnParams,
    synapse: &SynapseConfig,
) -> Result<PathField> {
    params.validate()?;
    let shape = *drive.shape();
    if truncation > shape.radius() {
        return Err(Error::InvalidParameter(format!(
            "truncation radius {truncation} exceeds torus radius {}",
            shape.radius()
        )));
    }
    if drive.len_times() < 2 {
        return Err(Error::InvalidParameter("drive needs at least two grid times".into()));
    }
    if drive.snapshot(0).iter().any(|&x| x != 0.0) {
        return Err(Error::InvalidParameter("drive must vanish at t = 0".into()));
    }
    let synapse = synapse.restricted(truncation);
    let mut integ = Integrator::new(&shape, params, &synapse);
    let mut out = PathField::zeros(shape, drive.times().to_vec());
    out.snapshot_mut(0).copy_from_slice(&integ.v);
    let mut dw = vec![0.0; shape.site_count()];
    for step in 0..drive.len_times() - 1 {
        let dt = drive.times()[step + 1] - drive.times()[step];
        for (m, d) in dw.iter_mut().enumerate() {
            *d = drive.at(step + 1, m) - drive.at(step, m);
        }
        integ.step(&dw, dt);
        if let Some(site) = integ.first_nonfinite() {
            return Err(Error::NonfiniteState { site: shape.index(site), t: drive.times()[step + 1] });
        }
        out.snapshot_mut(step + 1).copy_from_slice(&integ.v);
    }
    Ok(out)
}

/// `ln Psi_C` with `Psi_C^2 = 8 exp(4 T^2 kappa_*^2 e^{2CT} + 2CT)` and
/// `C = C~ + kappa_*`. The constant itself overflows `f64` at ordinary
/// parameters, so only its logarithm is returned.
pub fn log_psi_c(params: &FhnParams, kernel: &KernelFamily, horizon: f64) -> f64 {
    let ks = kernel.kappa_star();
    let c = params.drift_constant(horizon) + ks;
    let t = horizon;
    0.5 * (8f64.ln() + 4.0 * t * t * ks * ks * (2.0 * c * t).exp() + 2.0 * c * t)
}

/// `||Psi(w) - Psi(v)||_{T,lambda} / ||w - v||_{T,lambda}` with full
/// interaction support on the torus of the inputs.
pub fn lipschitz_ratio(
    w: &PathField,
    v: &PathField,
    params: &FhnParams,
    synapse: &SynapseConfig,
    kernel: &KernelFamily,
) -> Result<f64> {
    let denom = weighted_norm(&w.sub(v)?, kernel)?;
    if denom == 0.0 {
        return Err(Error::DivisionDegenerate);
    }
    let m = w.shape().radius();
    let xw = solve_driven(w, m, params, synapse)?;
    let xv = solve_driven(v, m, params, synapse)?;
    Ok(weighted_norm(&xw.sub(&xv)?, kernel)? / denom)
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationGap {
    pub n: usize,
    /// `sum_j ||Psi(w)^j - Psi^n(w)^j||_T` over `V_m`.
    pub gap: f64,
    pub kappa_tail: f64,
    /// `sum_j ||w^j||_T`.
    pub input_mass: f64,
    /// `gap / (kappa_bar_n (|V_m| + input_mass))`; `None` when `kappa_bar_n = 0`.
    pub bound_ratio: Option<f64>,
}

/// Compare the truncated map `Psi^n` against the full-support solve on the
/// torus of `w`.
pub fn truncation_gap(
    w: &PathField,
    n: usize,
    params: &FhnParams,
    synapse: &SynapseConfig,
    kernel: &KernelFamily,
) -> Result<TruncationGap> {
    let m = w.shape().radius();
    if n > m {
        return Err(Error::InvalidParameter(format!("need n <= m, got n={n}, m={m}")));
    }
    let full = solve_driven(w, m, params, synapse)?;
    let trunc = solve_driven(w, n, params, synapse)?;
    let gap: f64 = full.sub(&trunc)?.site_sups().iter().sum();
    let input_mass: f64 = w.site_sups().iter().sum();
    let kappa_tail = kernel.kappa_tail(n);
    let sites = w.shape().site_count() as f64;
    let bound_ratio = (kappa_tail > 0.0).then(|| gap / (kappa_tail * (sites + input_mass)));
    Ok(TruncationGap { n, gap, kappa_tail, input_mass, bound_ratio })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Check `sum_j ||Psi(w)^j||_alpha <= e^{(C + kappa_*) alpha}
/// (|V_m| (|U_ini| + alpha kappa_*) + 2 sum_j ||w^j||_alpha)` for each
/// `alpha` (a grid time of `w`), with `C = C~ + kappa_*` at horizon `T`.
pub fn growth_bound_check(
    w: &PathField,
    params: &FhnParams,
    synapse: &SynapseConfig,
    kernel: &KernelFamily,
    alphas: &[f64],
) -> Result<Vec<GrowthRow>> {
    let m = w.shape().radius();
    let x = solve_driven(w, m, params, synapse)?;
    let times = w.times();
    let horizon = *times.last().unwrap();
    let ks = kernel.kappa_star();
    let c = params.drift_constant(horizon) + ks;
    let sites = w.shape().site_count() as f64;
    alphas
        .iter()
        .map(|&alpha| {
            let upto = times.iter().take_while(|&&t| t <= alpha + 1e-12).count();
            if upto == 0 {
                return Err(Error::InvalidParameter(format!("alpha {alpha} precedes the grid")));
            }
            let lhs: f64 = x.site_sups_until(upto).iter().sum();
            let w_mass: f64 = w.site_sups_until(upto).iter().sum();
            let rhs = ((c + ks) * alpha).exp()
                * (sites * (params.u_ini.abs() + alpha * ks) + 2.0 * w_mass);
            Ok(GrowthRow { alpha, lhs, rhs, holds: lhs <= rhs })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HalvingStudy {
    pub dts: Vec<f64>,
    /// Sup-norm difference of terminal fields between successive step sizes.
    pub diffs: Vec<f64>,
    /// `diffs[i] / diffs[i + 1]`.
    pub ratios: Vec<f64>,
}

/// Euler self-convergence: solve with `dt, dt/2, dt/4, ...` using the same
/// drive (given on the coarsest grid, linearly interpolated onto the finer
/// ones) and compare terminal fields.
pub fn euler_halving_study(
    drive: &PathField,
    levels: usize,
    params: &FhnParams,
    synapse: &SynapseConfig,
) -> Result<HalvingStudy> {
    if levels < 2 {
        return Err(Error::InvalidParameter("need at least two levels".into()));
    }
    let m = drive.shape().radius();
    let mut terminals = Vec::new();
    let mut dts = Vec::new();
    for level in 0..levels {
        let refined = refine_linear(drive, 1 << level);
        dts.push(refined.times()[1] - refined.times()[0]);
        let x = solve_driven(&refined, m, params, synapse)?;
        terminals.push(x.snapshot(x.len_times() - 1).to_vec());
    }
    let diffs: Vec<f64> = terminals
        .windows(2)
        .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let ratios = diffs.windows(2).map(|d| d[0] / d[1]).collect();
    Ok(HalvingStudy { dts, diffs, ratios })
}

/// Insert `factor - 1` linearly interpolated rows between grid rows.
fn refine_linear(field: &PathField, factor: usize) -> PathField {
    if factor == 1 {
        return field.clone();
    }
    let shape = *field.shape();
    let old = field.times();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for i in 0..old.len() - 1 {
        for s in 0..factor {
            let f = s as f64 / factor as f64;
            times.push(old[i] + f * (old[i + 1] - old[i]));
            for m in 0..shape.site_count() {
                values.push(field.at(i, m) + f * (field.at(i + 1, m) - field.at(i, m)));
            }
        }
    }
    times.push(*old.last().unwrap());
    values.extend_from_slice(field.snapshot(old.len() - 1));
    PathField::from_values(shape, times, values).expect("consistent refinement")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ResponseFn;
    use crate::kernels::{build_kappa, build_lambda, DecaySpec};
    use crate::lattice::{LatticeShape, TorusIndex};
    use crate::TimeGrid;

    fn brownian(shape: LatticeShape, grid: TimeGrid, seed: u64) -> PathField {
        PathField::brownian(shape, grid, seed, 0)
    }

    fn synapse(radius: usize) -> SynapseConfig {
        SynapseConfig::geometric(1, 0.5, 0.4, radius, 1.0, 1.0, 0.5, ResponseFn::Logistic).unwrap()
    }

    #[test]
    fn zero_drive_equilibrium() {
        let shape = LatticeShape::new(1, 3).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let w = PathField::zeros(shape, grid.times());
        let p = FhnParams { a_fr: 0.0, ..Default::default() };
        let x = solve_driven(&w, 3, &p, &SynapseConfig::uncoupled(1).unwrap()).unwrap();
        assert_eq!(x.sup_abs(), 0.0);
    }

    #[test]
    fn shift_equivariance_is_exact() {
        let shape = LatticeShape::new(1, 5).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let w = brownian(shape, grid, 4);
        let p = FhnParams::default();
        let base = solve_driven(&w, 3, &p, &synapse(3)).unwrap();
        for j in [-4i64, 1, 5] {
            let j = TorusIndex::new(&[j]);
            let shifted = solve_driven(&w.shifted(&j), 3, &p, &synapse(3)).unwrap();
            assert_eq!(shifted.values(), base.shifted(&j).values());
        }
    }

    #[test]
    fn periodic_input_gives_periodic_output() {
        let shape = LatticeShape::new(1, 4).unwrap();
        let small = LatticeShape::new(1, 1).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let base = brownian(small, grid, 8);
        let mut w = PathField::zeros(shape, grid.times());
        for t in 0..w.len_times() {
            for m in 0..shape.site_count() {
                let src = small.flat(&small.reduce(shape.index(m).coords()));
                w.snapshot_mut(t)[m] = base.at(t, src);
            }
        }
        let x = solve_driven(&w, 4, &FhnParams::default(), &synapse(4)).unwrap();
        for t in 0..x.len_times() {
            for m in 0..shape.site_count() - 3 {
                assert_eq!(x.at(t, m), x.at(t, m + 3));
            }
        }
    }

    #[test]
    fn drive_must_start_at_zero() {
        let shape = LatticeShape::new(1, 1).unwrap();
        let grid = TimeGrid::new(1.0, 0.5).unwrap();
        let mut w = PathField::zeros(shape, grid.times());
        w.snapshot_mut(0)[0] = 1.0;
        assert!(solve_driven(&w, 1, &FhnParams::default(), &synapse(1)).is_err());
    }

    #[test]
    fn lipschitz_ratio_below_constant() {
        let shape = LatticeShape::new(1, 4).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let kernel = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 12)).unwrap(), 256, 40).unwrap();
        let p = FhnParams::default();
        let log_c = log_psi_c(&p, &kernel, 1.0);
        let w = brownian(shape, grid, 1);
        let v = brownian(shape, grid, 2);
        let r = lipschitz_ratio(&w, &v, &p, &synapse(4), &kernel).unwrap();
        assert!(r > 0.0 && r.ln() <= log_c);
        assert!(matches!(
            lipschitz_ratio(&w, &w, &p, &synapse(4), &kernel),
            Err(Error::DivisionDegenerate)
        ));
    }

    #[test]
    fn truncation_gap_vanishes_inside_support() {
        let shape = LatticeShape::new(1, 6).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let kernel = build_kappa(1, DecaySpec::geometric(0.5, 1.0, 6)).unwrap();
        let w = brownian(shape, grid, 3);
        let syn = synapse(3);
        let g = truncation_gap(&w, 3, &FhnParams::default(), &syn, &kernel).unwrap();
        assert_eq!(g.gap, 0.0);
        let g2 = truncation_gap(&w, 1, &FhnParams::default(), &syn, &kernel).unwrap();
        assert!(g2.gap > 0.0 && g2.bound_ratio.unwrap() > 0.0);
    }

    #[test]
    fn growth_bound_holds() {
        let shape = LatticeShape::new(1, 4).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let kernel = build_kappa(1, DecaySpec::geometric(0.5, 1.0, 12)).unwrap();
        let w = brownian(shape, grid, 5);
        let rows = growth_bound_check(&w, &FhnParams::default(), &synapse(4), &kernel, &[0.1, 0.5, 1.0]).unwrap();
        assert!(rows.iter().all(|r| r.holds));
        let zero = PathField::zeros(shape, grid.times());
        let p = FhnParams { a_fr: 0.0, ..Default::default() };
        let rows = growth_bound_check(&zero, &p, &SynapseConfig::uncoupled(1).unwrap(), &kernel, &[1.0]).unwrap();
        assert_eq!(rows[0].lhs, 0.0);
    }

    #[test]
    fn euler_is_first_order() {
        let shape = LatticeShape::new(1, 2).unwrap();
        let grid = TimeGrid::new(1.0, 1e-2).unwrap();
        let w = PathField::zeros(shape, grid.times());
        let study = euler_halving_study(&w, 3, &FhnParams::default(), &synapse(2)).unwrap();
        assert!(study.ratios[0] > 1.8, "{study:?}");
    }
}
