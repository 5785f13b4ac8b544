//! Spatially correlated noise with `a^j = rho^{|j|_1}` on a ring: sample an
//! ensemble, compare covariances with the kernel and print `eta_{n,*}`.

use std::sync::Arc;
use torusnet::noise::{
    build_spectral_model, sample_noise_paths, verify_covariance, GeometricCovariance, TimeProfile,
};
use torusnet::{LatticeShape, TimeGrid, TorusIndex};

fn main() -> torusnet::Result<()> {
    let spec = Arc::new(GeometricCovariance::new(1, 1.0, 0.4, TimeProfile::Constant)?);
    let grid = TimeGrid::new(1.0, 1e-2)?;
    let model = build_spectral_model(spec.clone(), LatticeShape::new(1, 4)?, grid)?;
    println!("filter c^(n,k) at t=0: {:?}", model.torus_filter(0.0)?.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>());

    let ens = sample_noise_paths(&model, 5000, 7, 10)?;
    let origin = TorusIndex::origin(1);
    let pairs: Vec<_> = (0..=4).map(|m| (origin, TorusIndex::new(&[m]))).collect();
    let report = verify_covariance(&ens, &model, &pairs, &[(100, 100), (50, 100)])?;
    for e in &report.entries {
        println!(
            "Cov(W^{}_{}, W^{}_{}) = {:+.4}  expected {:+.4}  z = {:+.2}",
            e.site_j, e.time_s, e.site_k, e.time_t, e.empirical, e.expected, e.z
        );
    }

    for n in [2, 4, 8, 16] {
        let m = build_spectral_model(spec.clone(), LatticeShape::new(1, n)?, grid)?;
        println!("eta_(n={n},*) = {:.3e}", m.eta(1024)?.eta_star);
    }
    Ok(())
}
