//! Double-decomposition branch and prune.
//!
//! A forward tree grows prefixes from position 1 and a backward tree grows
//! suffixes from position `n`. Row by row, each tree splits its parents among
//! workers, grows each parent by one activity, and keeps only the best
//! ordering per activity set. The trees meet at row `na`, where every prefix
//! set is paired with its complementary suffix set.

mod expand;
mod search;
mod store;

pub use expand::{
    backward_child_value, expand_and_prune_chunk, forward_child_value, partition_row, restore_and_merge, seed_rows,
    Lookup, RowChunk, Transfer, WorkerOutput, WorkerResult,
};
pub use search::{
    explore, solve, Method, PhaseTimings, RowCounters, SearchCounters, SolveReport, SolverConfig, Variant,
    DEFAULT_CORES, DEFAULT_MEMORY_CAP, DEFAULT_NA,
};
pub use store::{CompressedChunk, Direction, NodeRef, Offer, PartialNode, RowStore};
