use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::rank::BinomialTable;

/// Which end of the sequence a search tree grows from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Prefixes, positions `1..=p`.
    Forward,
    /// Suffixes, positions `p+1..=n`.
    Backward,
}

impl Direction {
    /// Number of activities a node of row `p` holds.
    pub fn node_size(self, n: usize, p: usize) -> usize {
        match self {
            Direction::Forward => p,
            Direction::Backward => n - p,
        }
    }
}

/// An owned search-tree node. Activities are 0-based indices in prefix order
/// (forward) or in order of positions `p+1..=n` (backward).
#[derive(Clone, Debug, PartialEq)]
pub struct PartialNode {
    pub activities: Vec<usize>,
    pub fv: f64,
    pub direction: Direction,
}

impl PartialNode {
    pub fn ids(&self) -> Vec<usize> {
        self.activities.iter().map(|&a| a + 1).collect()
    }
}

/// Borrowed view of a stored node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeRef<'a> {
    pub ha: u64,
    pub activities: &'a [u8],
    pub fv: f64,
}

impl NodeRef<'_> {
    pub fn mask(&self) -> u64 {
        self.activities.iter().fold(0, |m, &a| m | 1 << a)
    }
}

/// `true` when the candidate should replace the incumbent: strictly lower
/// value, or equal value with a lexicographically smaller activity list.
#[inline]
pub(crate) fn beats(fv: f64, order: &[u8], best_fv: f64, best_order: &[u8]) -> bool {
    match fv.partial_cmp(&best_fv) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => order < best_order,
        _ => false,
    }
}

/// Outcome of offering a node to a slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Offer {
    Inserted,
    Replaced,
    Rejected,
}

/// Dense per-row store: one slot per subset of the row's node size, indexed
/// by hash address.
#[derive(Clone, Debug)]
pub struct RowStore {
    n: usize,
    row: usize,
    size: usize,
    direction: Direction,
    fv: Vec<f64>,
    order: Vec<u8>,
    occupied: usize,
}

impl RowStore {
    /// Allocates an empty row, refusing rows with more than `cap` slots.
    pub fn new(n: usize, row: usize, direction: Direction, table: &BinomialTable, cap: u64) -> Result<Self> {
        if row == 0 || row >= n {
            return Err(Error::Invariant(format!("row {row} outside 1..{n}")));
        }
        let size = direction.node_size(n, row);
        let slots = table.get(n, size);
        if slots > cap {
            return Err(Error::Resource { n, size, slots, cap });
        }
        let slots = usize::try_from(slots).map_err(|_| Error::Resource { n, size, slots, cap })?;
        Ok(Self {
            n,
            row,
            size,
            direction,
            fv: vec![f64::INFINITY; slots],
            order: vec![0; slots * size],
            occupied: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Split position `p` this row belongs to.
    pub fn row(&self) -> usize {
        self.row
    }

    /// Activities per node.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn slot_count(&self) -> usize {
        self.fv.len()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    #[inline]
    fn index(&self, ha: u64) -> Result<usize> {
        let idx = ha.wrapping_sub(1) as usize;
        if ha == 0 || idx >= self.fv.len() {
            return Err(Error::Invariant(format!(
                "address {ha} outside 1..={} for row {} ({:?})",
                self.fv.len(),
                self.row,
                self.direction
            )));
        }
        Ok(idx)
    }

    pub fn get(&self, ha: u64) -> Option<NodeRef<'_>> {
        let idx = self.index(ha).ok()?;
        self.slot(idx)
    }

    #[inline]
    fn slot(&self, idx: usize) -> Option<NodeRef<'_>> {
        let fv = self.fv[idx];
        if fv == f64::INFINITY {
            return None;
        }
        Some(NodeRef {
            ha: idx as u64 + 1,
            activities: &self.order[idx * self.size..(idx + 1) * self.size],
            fv,
        })
    }

    pub fn node(&self, ha: u64) -> Option<PartialNode> {
        self.get(ha).map(|r| PartialNode {
            activities: r.activities.iter().map(|&a| usize::from(a)).collect(),
            fv: r.fv,
            direction: self.direction,
        })
    }

    /// Occupied slots in address order.
    pub fn iter(&self) -> impl Iterator<Item = NodeRef<'_>> + '_ {
        (0..self.fv.len()).filter_map(move |idx| self.slot(idx))
    }

    pub fn occupied_addresses(&self) -> Vec<u64> {
        self.iter().map(|r| r.ha).collect()
    }

    /// Keeps the better of the incumbent and the candidate at `ha`.
    pub fn offer(&mut self, ha: u64, order: &[u8], fv: f64) -> Result<Offer> {
        let idx = self.index(ha)?;
        if order.len() != self.size {
            return Err(Error::Invariant(format!(
                "node of {} activities offered to a row of size {}",
                order.len(),
                self.size
            )));
        }
        if !(fv.is_finite() && fv >= 0.0) {
            return Err(Error::Invariant(format!(
                "feedback value {fv} is not finite and non-negative"
            )));
        }
        let span = idx * self.size..(idx + 1) * self.size;
        let current = self.fv[idx];
        let outcome = if current == f64::INFINITY {
            self.occupied += 1;
            Offer::Inserted
        } else if beats(fv, order, current, &self.order[span.clone()]) {
            Offer::Replaced
        } else {
            return Ok(Offer::Rejected);
        };
        self.fv[idx] = fv;
        self.order[span].copy_from_slice(order);
        Ok(outcome)
    }
}

/// The occupied entries of one worker's partial row, in the order found.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompressedChunk {
    size: usize,
    addresses: Vec<u64>,
    fv: Vec<f64>,
    order: Vec<u8>,
}

impl CompressedChunk {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            ..Self::default()
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    /// Appends a triple. Callers keep addresses unique within the chunk.
    pub fn push(&mut self, ha: u64, order: &[u8], fv: f64) {
        debug_assert_eq!(order.len(), self.size);
        self.addresses.push(ha);
        self.fv.push(fv);
        self.order.extend_from_slice(order);
    }

    pub(crate) fn replace(&mut self, idx: usize, order: &[u8], fv: f64) {
        self.fv[idx] = fv;
        self.order[idx * self.size..(idx + 1) * self.size].copy_from_slice(order);
    }

    pub(crate) fn entry(&self, idx: usize) -> NodeRef<'_> {
        NodeRef {
            ha: self.addresses[idx],
            activities: &self.order[idx * self.size..(idx + 1) * self.size],
            fv: self.fv[idx],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeRef<'_>> + '_ {
        (0..self.len()).map(move |idx| self.entry(idx))
    }
}
