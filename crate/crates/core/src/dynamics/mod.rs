//! FitzHugh-Nagumo network with Hebbian synapses on a torus.
//!
//! Per site `j`, with noise increment `dW^{n,j}`:
//!
//! ```text
//! dv^j = (v^j - (v^j)^3/3 - w^j + sum_k J^k f1(v^j) f2(v^{(j+k) mod V_n})) dt + dW^{n,j}
//! dw^j = (v^j + a - c w^j) dt
//! dJ^k = (J_corr (J_bar^k - J^k) act(v^j) act(v^{j+k}) - J_dec J^k) dt
//! ```
//!
//! The recovery variable `w` carries the exponential memory of the reduced
//! one-variable form, so no history convolution is stored.

mod fhn;
mod network;
mod solution_map;
mod synapse;

pub use fhn::{FhnParams, ResponseFn};
pub use network::{simulate_network, Network, PathEnsemble, ReplicaPaths, SimulationOptions};
pub use solution_map::{
    euler_halving_study, growth_bound_check, lipschitz_ratio, log_psi_c, solve_driven,
    truncation_gap, GrowthRow, HalvingStudy, TruncationGap,
};
pub use synapse::{hebbian_step, interaction_sum, SynapseConfig, SynapticState};
