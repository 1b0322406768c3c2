//! Approximate contraction drivers: MPO-MPS products, the hybrid
//! density-matrix/swap tree approximation, and partitioned contraction of
//! arbitrary networks.

mod approx;
mod contract;
mod mpo;

pub use approx::{approx_tensor_network, interval_orderings, Approximation};
pub use contract::{partitioned_contract, ContractOptions, ContractResult, StepInfo};
pub use mpo::{mpo_mps_dm, mpo_mps_fullenv, mpo_mps_zipup, swap_adjacent, Mpo, Mps};
