//! Finite-size scaling of `-(1/|V_n|) ln P(observable > threshold)` for a
//! decoupled network with site-white noise, where sites are independent.

use std::sync::Arc;
use torusnet::deviations::{ldp_scaling_report, write_scaling_csv, ObservableRegistry, Threshold};
use torusnet::dynamics::{FhnParams, Network, SynapseConfig};
use torusnet::kernels::{build_kappa, build_lambda, DecaySpec};
use torusnet::noise::{build_spectral_model, SiteWhiteCovariance, TimeProfile};
use torusnet::{LatticeShape, TimeGrid};

fn main() -> torusnet::Result<()> {
    let grid = TimeGrid::new(1.0, 1e-2)?;
    let kernel = build_lambda(build_kappa(1, DecaySpec::geometric(0.5, 1.0, 40))?, 4096, 60)?;
    let build = |n: usize| {
        let shape = LatticeShape::new(1, n)?;
        let net = Network::new(shape, grid, FhnParams::default(), SynapseConfig::uncoupled(1)?, &kernel)?;
        let spec = Arc::new(SiteWhiteCovariance::new(1, 1.0, TimeProfile::Constant)?);
        Ok((net, Some(build_spectral_model(spec, shape, grid)?)))
    };
    let registry = ObservableRegistry::with_builtins();
    for name in ["site0_sup", "spatial_mean_sup"] {
        println!("observable {name}:");
        let rows = ldp_scaling_report(build, &[1, 2, 3, 4], registry.get(name)?, Threshold::Auto { q: 0.8 }, 4000, 9)?;
        write_scaling_csv(&mut std::io::stdout(), &rows)?;
    }
    Ok(())
}
