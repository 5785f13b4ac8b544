//! Periodic empirical measure of one simulated network: stationarity,
//! marginal statistics, spatial covariance and the bounded-Lipschitz proxy
//! distance between two replicas.

use std::sync::Arc;
use torusnet::dynamics::{simulate_network, FhnParams, Network, ResponseFn, SimulationOptions, SynapseConfig};
use torusnet::empirical::{bl_distance, empirical_measure, write_statistics_csv};
use torusnet::kernels::{build_kappa, build_lambda, DecaySpec};
use torusnet::lattice::offsets_within;
use torusnet::noise::{build_spectral_model, GeometricCovariance, TimeProfile};
use torusnet::{cube_indices, LatticeShape, TimeGrid, TorusIndex};

fn main() -> torusnet::Result<()> {
    let shape = LatticeShape::new(1, 6)?;
    let grid = TimeGrid::new(1.0, 1e-3)?;
    let kernel = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40))?, 4096, 60)?;
    let synapse = SynapseConfig::geometric(1, 0.5, 0.5, 3, 0.5, 1.0, 0.5, ResponseFn::Logistic)?;
    let net = Network::new(shape, grid, FhnParams::default(), synapse, &kernel)?;
    let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, TimeProfile::Constant)?);
    let noise = build_spectral_model(spec, shape, grid)?;
    let opts = SimulationOptions { replicas: 2, seed: 3, record_stride: 100, keep_noise: false };
    let ens = simulate_network(&net, Some(&noise), opts)?;

    let mu = empirical_measure(ens.replicas[0].v.clone());
    let nu = empirical_measure(ens.replicas[1].v.clone());
    println!("{} atoms, stationary: {}", mu.atom_count(), mu.stationarity_check(&cube_indices(&shape)));

    let offsets = offsets_within(1, 1)?;
    let last = ens.recorded_steps.len() - 1;
    let rows = mu.marginal_statistics(&offsets, &[last / 2, last])?;
    write_statistics_csv(&mut std::io::stdout(), &rows)?;
    for k in 0..=3 {
        println!("spatial covariance at lag {k}, t = T: {:+.4}", mu.spatial_covariance(&TorusIndex::new(&[k]), last));
    }
    let norms = mu.weighted_ensemble_norms(&kernel)?;
    println!("atom weighted norms: min {:.4} mean {:.4} max {:.4}", norms.min, norms.mean, norms.max);

    let projection: Vec<_> = offsets.iter().map(|k| (*k, last)).collect();
    println!("BL proxy distance between replicas: {:.4}", bl_distance(&mu, &nu, &projection, 256, 0)?);
    Ok(())
}
