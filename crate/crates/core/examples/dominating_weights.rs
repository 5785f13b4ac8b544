//! Build the dominating weights `lambda^j` for geometric interaction bounds in
//! one, two and three dimensions and print the convolution check.
//!
//! ```text
//! cargo run --release --example dominating_weights
//! ```

use std::time::Instant;
use torusnet::kernels::{build_kappa, build_lambda, check_domination, DecaySpec};
use torusnet::TorusIndex;

fn main() -> torusnet::Result<()> {
    // (d, rho, R, R_lambda, M)
    let setups = [(1, 0.5, 40, 60, 4096), (2, 0.5, 16, 48, 256), (3, 0.25, 6, 16, 64)];
    for (d, rho, support, radius, grid) in setups {
        let start = Instant::now();
        let kappa = build_kappa(d, DecaySpec::geometric(rho, 1.0, support))?;
        let family = build_lambda(kappa, grid, radius)?;
        let report = check_domination(&family)?;
        let lambda = family.lambda().unwrap();
        println!(
            "d={d} rho={rho} R={support} R_lambda={radius} M={grid}: kappa_*={:.6} min lambda={:.3e} \
             tail={:.2e} unresolved={} max violation={:.2e} ({:.2?})",
            family.kappa_star(),
            report.min_lambda,
            lambda.tail_mass(),
            lambda.unresolved(),
            report.max_violation,
            start.elapsed()
        );
        let origin = TorusIndex::origin(d);
        let mut axis = vec![0i64; d];
        print!("  lambda along an axis:");
        for step in [0, 1, 2, 4, 8] {
            axis[0] = step;
            let j = if step == 0 { origin } else { TorusIndex::new(&axis) };
            print!(" {:.3e}", lambda.at(&j));
        }
        println!();
    }
    Ok(())
}
