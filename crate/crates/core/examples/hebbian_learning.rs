//! Synaptic weights under the Hebbian rule: mean `J^k` per offset over time,
//! and pure decay when the activity function is zero.

use torusnet::dynamics::{simulate_network, FhnParams, Network, ResponseFn, SimulationOptions, SynapseConfig};
use torusnet::kernels::{build_kappa, build_lambda, DecaySpec};
use torusnet::{LatticeShape, TimeGrid};

fn main() -> torusnet::Result<()> {
    let shape = LatticeShape::new(1, 4)?;
    let grid = TimeGrid::new(4.0, 1e-3)?;
    let kernel = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40))?, 4096, 60)?;
    for activity in [ResponseFn::Logistic, ResponseFn::Zero] {
        let synapse = SynapseConfig::geometric(1, 0.5, 0.5, 2, 0.2, 2.0, 0.5, activity)?;
        let net = Network::new(shape, grid, FhnParams::default(), synapse, &kernel)?;
        let opts = SimulationOptions { replicas: 1, seed: 0, record_stride: 1000, keep_noise: false };
        let ens = simulate_network(&net, None, opts)?;
        println!("activity = {}; J_bar = {:?}", activity.name(), net.synapse.j_bar());
        for (t, row) in ens.recorded_times().iter().zip(&ens.replicas[0].j_trace) {
            let cells: Vec<String> = row.iter().map(|j| format!("{j:.4}")).collect();
            println!("  t = {t:.0}: {}", cells.join(" "));
        }
    }
    Ok(())
}
