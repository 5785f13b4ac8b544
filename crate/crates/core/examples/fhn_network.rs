//! Stochastic FitzHugh-Nagumo network on a 2-d torus with correlated noise.

use std::sync::Arc;
use torusnet::dynamics::{simulate_network, FhnParams, Network, ResponseFn, SimulationOptions, SynapseConfig};
use torusnet::kernels::{build_kappa, build_lambda, DecaySpec};
use torusnet::noise::{build_spectral_model, GeometricCovariance, TimeProfile};
use torusnet::{LatticeShape, TimeGrid, TorusIndex};

fn main() -> torusnet::Result<()> {
    let shape = LatticeShape::new(2, 3)?;
    let grid = TimeGrid::new(2.0, 1e-3)?;
    let kernel = build_lambda(build_kappa(2, DecaySpec::geometric(0.5, 1.0, 16))?, 256, 48)?;
    let synapse = SynapseConfig::geometric(2, 0.5, 0.5, 2, 0.5, 1.0, 0.5, ResponseFn::Logistic)?;
    let net = Network::new(shape, grid, FhnParams::default(), synapse, &kernel)?;
    let spec = Arc::new(GeometricCovariance::new(2, 0.5, 0.4, TimeProfile::Constant)?);
    let noise = build_spectral_model(spec, shape, grid)?;

    let opts = SimulationOptions { replicas: 8, seed: 1, record_stride: 250, keep_noise: false };
    let ens = simulate_network(&net, Some(&noise), opts)?;
    let origin = shape.flat(&TorusIndex::origin(2));
    for (r, rep) in ens.replicas.iter().enumerate() {
        let path: Vec<String> = (0..rep.v.len_times()).map(|t| format!("{:+.3}", rep.v.at(t, origin))).collect();
        println!("replica {r}: v^0 at t = 0, 0.25, .. 2: {}", path.join(" "));
    }
    Ok(())
}
