//! Exact solver for the feedback length minimization problem on design
//! structure matrices.
//!
//! The objective charges every feedback `d[s_h][s_k]` (an activity at
//! position `h` depending on one scheduled later at `k`) by its length
//! `k - h`. [`solve`] finds a minimizing permutation with a parallel
//! branch-and-prune search over prefixes and suffixes;
//! [`oracle::brute_force_optimum`] enumerates permutations for small `n`.

pub mod dsm;
pub mod error;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod rank;
pub mod solver;

pub use dsm::{
    generate_instance, prefix_value, quadratic_objective, sequence_to_order_vars, split_components, suffix_value,
    total_feedback_length, ActivitySequence, Dsm, OrderVars, SplitDecomposition,
};
pub use error::{Error, Result};
pub use io::{read_dsm, read_solution, write_dsm, write_solution, SolutionFile};
pub use rank::{complement_address, rank_subset, unrank_subset, BinomialTable, HashAddress};
pub use solver::{solve, Direction, SolveReport, SolverConfig, Variant};
