//! One row step of a search tree: split the parent row among workers, grow
//! every parent by one activity, keep the best node per activity set inside
//! each worker, then fold the workers' results into the next row.

use std::collections::HashMap;

use crate::dsm::Dsm;
use crate::error::{Error, Result};
use crate::rank::BinomialTable;

use super::store::{beats, CompressedChunk, Direction, NodeRef, RowStore};

/// How a worker finds the stored node with the same activity set as a child.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Lookup {
    /// Direct slot access by hash address.
    #[default]
    Hash,
    /// Scan every node the worker holds and compare activity sets.
    LinearScan,
}

/// What a worker hands back to the merge step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Transfer {
    /// Only occupied `(address, node, value)` triples.
    #[default]
    Compressed,
    /// The worker's whole dense row, empty slots included.
    Dense,
}

/// Dependence sums over bitmask sets. Bit `a` of a mask stands for activity `a`.
pub(crate) struct Kernel<'a> {
    dsm: &'a Dsm,
    transposed: Vec<f64>,
    full: u64,
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(dsm: &'a Dsm) -> Self {
        let n = dsm.n();
        let mut transposed = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                transposed[j * n + i] = dsm.get(i, j);
            }
        }
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self { dsm, transposed, full }
    }

    pub(crate) fn full(&self) -> u64 {
        self.full
    }

    /// `sum_{k in mask} d[i][k]`
    #[inline]
    fn row_sum(&self, i: usize, mask: u64) -> f64 {
        let row = self.dsm.row(i);
        let mut sum = 0.0;
        let mut rest = mask;
        while rest != 0 {
            sum += row[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        sum
    }

    /// `sum_{h in mask} d[h][j]`
    #[inline]
    fn col_sum(&self, j: usize, mask: u64) -> f64 {
        let n = self.dsm.n();
        let col = &self.transposed[j * n..(j + 1) * n];
        let mut sum = 0.0;
        let mut rest = mask;
        while rest != 0 {
            sum += col[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        sum
    }

    /// Total dependence of the set on everything outside it,
    /// `sum_{h in set, k not in set} d[h][k]`.
    fn cut(&self, set: u64) -> f64 {
        let outside = self.full & !set;
        let mut sum = 0.0;
        let mut rest = set;
        while rest != 0 {
            sum += self.row_sum(rest.trailing_zeros() as usize, outside);
            rest &= rest - 1;
        }
        sum
    }

    /// Cut of `parent + {next}` from the parent's cut in O(n): the new member
    /// stops receiving from the parent and starts sending outward.
    #[inline]
    fn extended_cut(&self, parent: u64, parent_cut: f64, next: usize) -> f64 {
        let child = parent | 1 << next;
        parent_cut - self.col_sum(next, parent) + self.row_sum(next, self.full & !child)
    }

    /// Backward increment for every child of a suffix set,
    /// `sum_{h not in suffix, k in suffix} d[h][k]`.
    fn inbound(&self, suffix: u64) -> f64 {
        let outside = self.full & !suffix;
        let mut sum = 0.0;
        let mut rest = suffix;
        while rest != 0 {
            sum += self.col_sum(rest.trailing_zeros() as usize, outside);
            rest &= rest - 1;
        }
        sum
    }

    /// Value of the single-activity prefix `(a)`: every other activity sits
    /// one position downstream.
    fn seed_prefix(&self, a: usize) -> f64 {
        self.row_sum(a, self.full & !(1 << a))
    }
}

fn mask_of(acts: impl IntoIterator<Item = usize>) -> u64 {
    acts.into_iter().fold(0, |m, a| m | 1 << a)
}

/// Value of the forward child `parent_prefix + (next)` grown from the
/// parent's value with the incremental rule the solver uses.
pub fn forward_child_value(dsm: &Dsm, parent_prefix: &[usize], parent_fv: f64, next: usize) -> f64 {
    let k = Kernel::new(dsm);
    let parent = mask_of(parent_prefix.iter().copied());
    parent_fv + k.extended_cut(parent, k.cut(parent), next)
}

/// Value of the backward child `(next) + parent_suffix`. The increment only
/// depends on the parent's activity set.
pub fn backward_child_value(dsm: &Dsm, parent_suffix: &[usize], parent_fv: f64, next: usize) -> f64 {
    debug_assert!(!parent_suffix.contains(&next));
    let k = Kernel::new(dsm);
    parent_fv + k.inbound(mask_of(parent_suffix.iter().copied()))
}

/// Seed rows of both trees: all single-activity prefixes (row 1) and all
/// single-activity suffixes (row `n - 1`, value 0).
pub fn seed_rows(dsm: &Dsm, table: &BinomialTable) -> Result<(RowStore, RowStore)> {
    let n = dsm.n();
    let kernel = Kernel::new(dsm);
    let mut forward = RowStore::new(n, 1, Direction::Forward, table, u64::MAX)?;
    let mut backward = RowStore::new(n, n - 1, Direction::Backward, table, u64::MAX)?;
    for a in 0..n {
        let ha = table.rank_mask(1 << a, n);
        forward.offer(ha, &[a as u8], kernel.seed_prefix(a))?;
        backward.offer(ha, &[a as u8], 0.0)?;
    }
    Ok((forward, backward))
}

/// A contiguous run of a row's occupied entries handed to one worker.
#[derive(Clone, Debug)]
pub struct RowChunk<'a> {
    row: &'a RowStore,
    addresses: Vec<u64>,
}

impl<'a> RowChunk<'a> {
    pub fn row(&self) -> &'a RowStore {
        self.row
    }

    pub fn addresses(&self) -> &[u64] {
        &self.addresses
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeRef<'a>> + '_ {
        self.addresses.iter().filter_map(|&ha| self.row.get(ha))
    }
}

/// Splits the occupied entries into `workers` contiguous parts whose sizes
/// differ by at most one. Surplus parts are empty.
pub fn partition_row(row: &RowStore, workers: usize) -> Vec<RowChunk<'_>> {
    let workers = workers.max(1);
    let all = row.occupied_addresses();
    let (base, extra) = (all.len() / workers, all.len() % workers);
    let mut parts = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        parts.push(RowChunk {
            row,
            addresses: all[start..start + len].to_vec(),
        });
        start += len;
    }
    parts
}

/// A worker's pruned children.
#[derive(Clone, Debug)]
pub enum WorkerOutput {
    Compressed(CompressedChunk),
    Dense(RowStore),
}

impl WorkerOutput {
    /// Records that cross from the worker to the merge step.
    pub fn transferred_records(&self) -> u64 {
        match self {
            WorkerOutput::Compressed(c) => c.len() as u64,
            WorkerOutput::Dense(r) => r.slot_count() as u64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WorkerResult {
    pub output: WorkerOutput,
    /// Children generated.
    pub expanded: u64,
    /// Distinct activity sets the worker kept.
    pub kept: u64,
    /// Node-against-node comparisons spent locating similar nodes.
    pub comparisons: u64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WorkerOptions {
    pub lookup: Lookup,
    pub transfer: Transfer,
    pub cap: u64,
}

const CANCEL_CHECK_EVERY: usize = 256;

/// Grows every parent of `chunk` by one activity and prunes within the chunk.
/// Returns `Ok(None)` if `cancelled` fires part way.
pub(crate) fn expand_chunk(
    kernel: &Kernel<'_>,
    table: &BinomialTable,
    chunk: &RowChunk<'_>,
    opts: WorkerOptions,
    cancelled: &dyn Fn() -> bool,
) -> Result<Option<WorkerResult>> {
    let row = chunk.row();
    let n = row.n();
    let direction = row.direction();
    let (child_row, child_size) = match direction {
        Direction::Forward => (row.row() + 1, row.size() + 1),
        Direction::Backward => (row.row() - 1, row.size() + 1),
    };
    if child_size > n || child_row == 0 || child_row >= n {
        return Err(Error::Invariant(format!(
            "row {} cannot be expanded further",
            row.row()
        )));
    }

    let mut out = CompressedChunk::new(child_size);
    let mut by_address: HashMap<u64, usize> = HashMap::new();
    let mut masks: Vec<u64> = Vec::new();
    let (mut expanded, mut comparisons) = (0u64, 0u64);
    let mut child = vec![0u8; child_size];

    for (i, parent) in chunk.iter().enumerate() {
        if i % CANCEL_CHECK_EVERY == 0 && cancelled() {
            return Ok(None);
        }
        let mask = parent.mask();
        match direction {
            Direction::Forward => child[..child_size - 1].copy_from_slice(parent.activities),
            Direction::Backward => child[1..].copy_from_slice(parent.activities),
        }
        let forward_cut = match direction {
            Direction::Forward => kernel.cut(mask),
            Direction::Backward => 0.0,
        };
        let backward_gain = match direction {
            Direction::Forward => 0.0,
            Direction::Backward => kernel.inbound(mask),
        };

        let mut free = kernel.full() & !mask;
        while free != 0 {
            let a = free.trailing_zeros() as usize;
            free &= free - 1;
            let child_mask = mask | 1 << a;
            let fv = match direction {
                Direction::Forward => {
                    child[child_size - 1] = a as u8;
                    parent.fv + kernel.extended_cut(mask, forward_cut, a)
                }
                Direction::Backward => {
                    child[0] = a as u8;
                    parent.fv + backward_gain
                }
            };
            expanded += 1;

            let existing = match opts.lookup {
                Lookup::Hash => {
                    let ha = table.rank_mask(child_mask, n);
                    match by_address.get(&ha) {
                        Some(&idx) => {
                            comparisons += 1;
                            Some(idx)
                        }
                        None => {
                            by_address.insert(ha, out.len());
                            out.push(ha, &child, fv);
                            None
                        }
                    }
                }
                Lookup::LinearScan => {
                    let mut found = None;
                    for (idx, &m) in masks.iter().enumerate() {
                        comparisons += 1;
                        if m == child_mask {
                            found = Some(idx);
                            break;
                        }
                    }
                    if found.is_none() {
                        masks.push(child_mask);
                        out.push(table.rank_mask(child_mask, n), &child, fv);
                    }
                    found
                }
            };
            if let Some(idx) = existing {
                let held = out.entry(idx);
                if beats(fv, &child, held.fv, held.activities) {
                    out.replace(idx, &child, fv);
                }
            }
        }
    }

    let kept = out.len() as u64;
    let output = match opts.transfer {
        Transfer::Compressed => WorkerOutput::Compressed(out),
        Transfer::Dense => {
            let mut dense = RowStore::new(n, child_row, direction, table, opts.cap)?;
            for node in out.iter() {
                dense.offer(node.ha, node.activities, node.fv)?;
            }
            WorkerOutput::Dense(dense)
        }
    };
    Ok(Some(WorkerResult {
        output,
        expanded,
        kept,
        comparisons,
    }))
}

/// Expands one chunk with hash lookup and returns its compressed triples.
pub fn expand_and_prune_chunk(dsm: &Dsm, table: &BinomialTable, chunk: &RowChunk<'_>) -> Result<CompressedChunk> {
    let kernel = Kernel::new(dsm);
    let opts = WorkerOptions {
        cap: u64::MAX,
        ..WorkerOptions::default()
    };
    match expand_chunk(&kernel, table, chunk, opts, &|| false)? {
        Some(WorkerResult {
            output: WorkerOutput::Compressed(c),
            ..
        }) => Ok(c),
        _ => Err(Error::Invariant("compressed expansion produced no chunk".into())),
    }
}

/// Installs every triple into `row`; on collisions the lower value wins,
/// then the lexicographically smaller activity list. Arrival order of the
/// chunks does not affect the result.
pub fn restore_and_merge(mut row: RowStore, chunks: &[CompressedChunk]) -> Result<RowStore> {
    for chunk in chunks {
        absorb_chunk(&mut row, chunk)?;
    }
    Ok(row)
}

pub(crate) fn absorb_chunk(row: &mut RowStore, chunk: &CompressedChunk) -> Result<()> {
    if chunk.size() != row.size() {
        return Err(Error::Invariant(format!(
            "chunk of {}-activity nodes merged into a row of size {}",
            chunk.size(),
            row.size()
        )));
    }
    for node in chunk.iter() {
        row.offer(node.ha, node.activities, node.fv)?;
    }
    Ok(())
}

pub(crate) fn absorb_output(row: &mut RowStore, output: &WorkerOutput) -> Result<()> {
    match output {
        WorkerOutput::Compressed(chunk) => absorb_chunk(row, chunk),
        WorkerOutput::Dense(dense) => {
            if dense.size() != row.size() || dense.slot_count() != row.slot_count() {
                return Err(Error::Invariant(
                    "dense worker row does not match the merged row".into(),
                ));
            }
            for node in dense.iter() {
                row.offer(node.ha, node.activities, node.fv)?;
            }
            Ok(())
        }
    }
}
