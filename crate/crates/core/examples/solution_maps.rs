//! The deterministic solution map `w -> Psi(w)`: Lipschitz ratios in the
//! weighted norm, truncation of the interaction radius and Euler halving.

use torusnet::dynamics::{
    euler_halving_study, lipschitz_ratio, log_psi_c, truncation_gap, FhnParams, ResponseFn, SynapseConfig,
};
use torusnet::kernels::{build_kappa, build_lambda, DecaySpec};
use torusnet::{LatticeShape, PathField, TimeGrid};

fn main() -> torusnet::Result<()> {
    let kernel = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40))?, 4096, 60)?;
    let params = FhnParams::default();
    let synapse = SynapseConfig::geometric(1, 0.5, 0.5, 6, 0.5, 1.0, 0.5, ResponseFn::Logistic)?;
    let grid = TimeGrid::new(1.0, 1e-3)?;

    let shape = LatticeShape::new(1, 6)?;
    let ratios: Vec<f64> = (0..10)
        .map(|i| {
            let w = PathField::brownian(shape, grid, 5, 2 * i);
            let v = PathField::brownian(shape, grid, 5, 2 * i + 1);
            lipschitz_ratio(&w, &v, &params, &synapse, &kernel)
        })
        .collect::<torusnet::Result<_>>()?;
    println!("Lipschitz ratios: {:?}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>());
    println!("ln Psi_C = {:.3e} (the bound is far from tight)", log_psi_c(&params, &kernel, 1.0));

    let wide = PathField::brownian(LatticeShape::new(1, 12)?, grid, 6, 0);
    for n in [1, 2, 4, 6] {
        let g = truncation_gap(&wide, n, &params, &synapse, &kernel)?;
        println!("n = {n}: gap {:.3e}, kappa tail {:.3e}, ratio {:?}", g.gap, g.kappa_tail, g.bound_ratio);
    }

    let study = euler_halving_study(&PathField::brownian(shape, TimeGrid::new(1.0, 1e-2)?, 7, 0), 4, &params, &synapse)?;
    for (dt, diff) in study.dts.iter().zip(&study.diffs) {
        println!("dt = {dt:.2e}: |X(dt) - X(dt/2)| = {diff:.3e}");
    }
    println!("halving ratios {:?}", study.ratios);
    Ok(())
}
