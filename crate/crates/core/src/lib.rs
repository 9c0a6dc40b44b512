//! Scheduling for weighted Age of Synchronization (AoS) minimization.
//!
//! A set of nodes receives random status updates and shares a channel that
//! admits at most `N` transmissions per slot. Each node's AoS is weighted by a
//! value that follows its own Markov chain. The crate:
//!
//! - models the slot dynamics ([`model`]),
//! - builds the truncated per-node MDP ([`mdp`]),
//! - solves the occupation-measure LP for a fixed transmission price
//!   ([`occupation`], backed by the dense simplex in [`simplex`]),
//! - searches the price and mixes two solutions so the average bandwidth
//!   budget is met exactly ([`lagrange`]),
//! - enforces the hard per-slot cap at run time ([`scheduler`]) and
//!   simulates the network ([`sim`]).
//!
//! [`oracle`] holds independent brute-force solvers used to check the LP.

pub mod error;
pub mod lagrange;
pub mod linalg;
pub mod mdp;
pub mod model;
pub mod occupation;
pub mod oracle;
pub mod scheduler;
pub mod sim;
pub mod simplex;

pub use error::{AosError, Result};
pub use lagrange::{relaxed_policy, MultiplierBracket, RelaxedSolution};
pub use mdp::{build_kernel, check_threshold, ThresholdProfile, TruncatedMdp};
pub use model::{
    make_paper_config, stationary_weights, step_node, weighted_aos, NodeConfig, NodeState,
    SystemConfig, WeightChain,
};
pub use occupation::{extract_policy, solve_node, OccupationSolution, TransmitPolicy};
pub use scheduler::{GreedyScheduler, NearStationaryScheduler, ScheduleDecision, Scheduler};
pub use sim::{run, SimResult};
