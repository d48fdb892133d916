use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crate::dsm::{order_feedback_length, ActivitySequence, Dsm};
use crate::error::{Error, Result};
use crate::io::SolutionFile;
use crate::oracle::brute_force_optimum;
use crate::rank::BinomialTable;

use super::expand::{absorb_output, expand_chunk, partition_row, seed_rows, Kernel, Lookup, Transfer, WorkerOptions};
use super::store::{Direction, RowStore};

/// Strategy ablations. Each one changes cost, never the result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Variant {
    #[default]
    Full,
    /// One worker per search tree, two in total.
    NoSecondDecomposition,
    /// Workers ship their whole dense row instead of occupied triples.
    NoCompression,
    /// Workers find similar nodes by scanning instead of by hash address.
    NoHash,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::NoSecondDecomposition,
        Variant::NoCompression,
        Variant::NoHash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSecondDecomposition => "no-second-decomposition",
            Variant::NoCompression => "no-compression",
            Variant::NoHash => "no-hash",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    fn worker_options(self, cap: u64) -> WorkerOptions {
        WorkerOptions {
            lookup: if self == Variant::NoHash {
                Lookup::LinearScan
            } else {
                Lookup::Hash
            },
            transfer: if self == Variant::NoCompression {
                Transfer::Dense
            } else {
                Transfer::Compressed
            },
            cap,
        }
    }
}

pub const DEFAULT_CORES: usize = 8;
pub const DEFAULT_NA: usize = 5;
pub const DEFAULT_MEMORY_CAP: u64 = 1 << 31;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Worker budget shared by both trees.
    pub cores: usize,
    /// Row where the forward and backward trees meet.
    pub na: usize,
    pub time_limit: Option<Duration>,
    /// Largest row, in slots, the solver may allocate.
    pub memory_cap: u64,
    pub variant: Variant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cores: DEFAULT_CORES,
            na: DEFAULT_NA,
            time_limit: None,
            memory_cap: DEFAULT_MEMORY_CAP,
            variant: Variant::Full,
        }
    }
}

impl SolverConfig {
    pub fn with_cores(mut self, cores: usize) -> Self {
        self.cores = cores;
        self
    }

    pub fn with_na(mut self, na: usize) -> Self {
        self.na = na;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// `na` clamped into `[2, n - 2]` so both trees expand at least one row.
    pub fn clamped_na(&self, n: usize) -> usize {
        self.na.clamp(2, n.saturating_sub(2).max(2))
    }
}

/// Work done on one row of one tree.
#[derive(Clone, Debug, PartialEq)]
pub struct RowCounters {
    pub direction: Direction,
    pub row: usize,
    /// Activities per node in this row.
    pub size: usize,
    pub expanded: u64,
    pub pruned: u64,
    pub survivors: u64,
    pub workers: usize,
    pub transferred_records: u64,
    pub similar_comparisons: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchCounters {
    pub rows: Vec<RowCounters>,
    pub combination_pairs: u64,
}

impl SearchCounters {
    pub fn expanded(&self) -> u64 {
        self.rows.iter().map(|r| r.expanded).sum()
    }

    pub fn pruned(&self) -> u64 {
        self.rows.iter().map(|r| r.pruned).sum()
    }

    pub fn transferred_records(&self) -> u64 {
        self.rows.iter().map(|r| r.transferred_records).sum()
    }

    pub fn similar_comparisons(&self) -> u64 {
        self.rows.iter().map(|r| r.similar_comparisons).sum()
    }

    pub fn rows_of(&self, direction: Direction) -> impl Iterator<Item = &RowCounters> + '_ {
        self.rows.iter().filter(move |r| r.direction == direction)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub forward: Duration,
    pub backward: Duration,
    pub combination: Duration,
    pub total: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    BranchAndPrune,
    /// Instances with fewer than four activities are enumerated directly.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub sequence: ActivitySequence,
    /// Objective of `sequence`, evaluated directly.
    pub objective: f64,
    /// `fv_a + fv_b` of the winning pair as accumulated during the search.
    pub search_value: f64,
    /// Split row actually used; 0 for exhaustive solves.
    pub na: usize,
    pub cores_used: usize,
    pub method: Method,
    pub counters: SearchCounters,
    pub timings: PhaseTimings,
}

impl SolveReport {
    pub fn to_solution_file(&self) -> SolutionFile {
        SolutionFile {
            n: self.sequence.len(),
            objective: self.objective,
            sequence: self.sequence.ids(),
            time_ms: self.timings.total.as_secs_f64() * 1e3,
            nodes_expanded: self.counters.expanded(),
            nodes_pruned: self.counters.pruned(),
            cores_used: self.cores_used,
            na: self.na,
        }
    }
}

struct Cancel {
    deadline: Option<Instant>,
    stop: AtomicBool,
}

impl Cancel {
    fn new(limit: Option<Duration>) -> Self {
        Self {
            deadline: limit.map(|l| Instant::now() + l),
            stop: AtomicBool::new(false),
        }
    }

    fn fired(&self) -> bool {
        if self.stop.load(Ordering::Relaxed) {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.stop.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }
}

/// Hands out worker counts at row boundaries.
struct Scheduler {
    cores: usize,
    fixed: Option<usize>,
    done: [AtomicBool; 2],
    remaining: [AtomicUsize; 2],
}

fn slot(direction: Direction) -> (usize, usize) {
    match direction {
        Direction::Forward => (0, 1),
        Direction::Backward => (1, 0),
    }
}

impl Scheduler {
    fn new(cores: usize, fixed: Option<usize>, forward_rows: usize, backward_rows: usize) -> Self {
        Self {
            cores: cores.max(1),
            fixed,
            done: [AtomicBool::new(forward_rows == 0), AtomicBool::new(backward_rows == 0)],
            remaining: [AtomicUsize::new(forward_rows), AtomicUsize::new(backward_rows)],
        }
    }

    /// Half the budget each while both trees run; the odd core goes to the
    /// tree with more rows left, and a lone tree gets everything.
    fn workers(&self, direction: Direction) -> usize {
        if let Some(f) = self.fixed {
            return f;
        }
        let (me, other) = slot(direction);
        if self.done[other].load(Ordering::Acquire) {
            return self.cores;
        }
        let mine = self.remaining[me].load(Ordering::Acquire);
        let theirs = self.remaining[other].load(Ordering::Acquire);
        let odd = self.cores % 2 == 1;
        let gets_odd = odd && (mine > theirs || (mine == theirs && direction == Direction::Forward));
        (self.cores / 2 + usize::from(gets_odd)).max(1)
    }

    fn row_done(&self, direction: Direction) {
        self.remaining[slot(direction).0].fetch_sub(1, Ordering::AcqRel);
    }

    fn finish(&self, direction: Direction) {
        self.done[slot(direction).0].store(true, Ordering::Release);
    }
}

enum Stop {
    Cancelled(Vec<RowCounters>),
    Failed(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Failed(e)
    }
}

struct Context<'a> {
    kernel: Kernel<'a>,
    table: &'a BinomialTable,
    opts: WorkerOptions,
}

/// Rows a tree explores after its seed row, in order.
fn rows_for(direction: Direction, n: usize, na: usize) -> Vec<usize> {
    match direction {
        Direction::Forward => (2..=na).collect(),
        Direction::Backward => (na..=n - 2).rev().collect(),
    }
}

fn run_pipeline(
    ctx: &Context<'_>,
    seed: RowStore,
    rows: &[usize],
    sched: &Scheduler,
    cancel: &Cancel,
) -> std::result::Result<(RowStore, Vec<RowCounters>), Stop> {
    let direction = seed.direction();
    let n = seed.n();
    let mut current = seed;
    let mut counters = Vec::with_capacity(rows.len());
    let cancelled = || cancel.fired();

    for &p in rows {
        if cancel.fired() {
            return Err(Stop::Cancelled(counters));
        }
        let workers = sched.workers(direction);
        let started = Instant::now();
        let parts = partition_row(&current, workers);
        let results = if parts.len() == 1 {
            vec![expand_chunk(&ctx.kernel, ctx.table, &parts[0], ctx.opts, &cancelled)?]
        } else {
            thread::scope(|s| {
                let handles: Vec<_> = parts
                    .iter()
                    .map(|chunk| s.spawn(|| expand_chunk(&ctx.kernel, ctx.table, chunk, ctx.opts, &cancelled)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| Err(Error::Invariant("search worker panicked".into())))
                    })
                    .collect::<Result<Vec<_>>>()
            })?
        };
        let Some(results) = results.into_iter().collect::<Option<Vec<_>>>() else {
            return Err(Stop::Cancelled(counters));
        };

        let mut next = RowStore::new(n, p, direction, ctx.table, ctx.opts.cap)?;
        for r in &results {
            absorb_output(&mut next, &r.output)?;
        }
        let expanded: u64 = results.iter().map(|r| r.expanded).sum();
        let survivors = next.occupied_count() as u64;
        counters.push(RowCounters {
            direction,
            row: p,
            size: next.size(),
            expanded,
            pruned: expanded - survivors,
            survivors,
            workers,
            transferred_records: results.iter().map(|r| r.output.transferred_records()).sum(),
            similar_comparisons: results.iter().map(|r| r.comparisons).sum(),
            elapsed: started.elapsed(),
        });
        sched.row_done(direction);
        current = next;
    }
    sched.finish(direction);
    Ok((current, counters))
}

/// Explores one tree alone from its seed row through row `through_row`,
/// returning that row and the per-row counters.
pub fn explore(
    dsm: &Dsm,
    table: &BinomialTable,
    direction: Direction,
    through_row: usize,
    workers: usize,
    variant: Variant,
) -> Result<(RowStore, Vec<RowCounters>)> {
    let n = dsm.n();
    if through_row == 0 || through_row >= n {
        return Err(Error::input(format!("row {through_row} outside 1..{n}")));
    }
    let (forward, backward) = seed_rows(dsm, table)?;
    let (seed, rows) = match direction {
        Direction::Forward => (forward, (2..=through_row).collect::<Vec<_>>()),
        Direction::Backward => (backward, (through_row..=n - 2).rev().collect()),
    };
    let ctx = Context {
        kernel: Kernel::new(dsm),
        table,
        opts: variant.worker_options(u64::MAX),
    };
    let sched = Scheduler::new(workers, Some(workers.max(1)), 0, 0);
    let cancel = Cancel::new(None);
    run_pipeline(&ctx, seed, &rows, &sched, &cancel).map_err(|stop| match stop {
        Stop::Failed(e) => e,
        Stop::Cancelled(_) => Error::Invariant("exploration cancelled without a deadline".into()),
    })
}

fn check_memory(n: usize, na: usize, table: &BinomialTable, cap: u64) -> Result<()> {
    for direction in [Direction::Forward, Direction::Backward] {
        for p in rows_for(direction, n, na) {
            let size = direction.node_size(n, p);
            let slots = table.get(n, size);
            if slots > cap {
                return Err(Error::Resource { n, size, slots, cap });
            }
        }
    }
    Ok(())
}

/// Pairs each forward node with the backward node on the complementary set
/// and returns the best pair: lowest `fv_a + fv_b`, then lexicographically
/// smallest sequence.
fn combine(forward: &RowStore, backward: &RowStore, table: &BinomialTable) -> Result<(Vec<usize>, f64, u64)> {
    let n = forward.n();
    let total = table.get(n, forward.size());
    let mut best: Option<(f64, u64, u64)> = None;
    let mut pairs = 0u64;
    for a in forward.iter() {
        let hb = total + 1 - a.ha;
        let b = backward
            .get(hb)
            .ok_or_else(|| Error::Invariant(format!("backward row has no node at complement address {hb}")))?;
        debug_assert_eq!(a.mask() | b.mask(), if n == 64 { u64::MAX } else { (1 << n) - 1 });
        pairs += 1;
        let value = a.fv + b.fv;
        let better = match best {
            None => true,
            Some((best_value, ha, hb_best)) => {
                value < best_value
                    || (value == best_value && {
                        let pa = forward.get(ha).unwrap().activities;
                        let pb = backward.get(hb_best).unwrap().activities;
                        (a.activities, b.activities) < (pa, pb)
                    })
            }
        };
        if better {
            best = Some((value, a.ha, hb));
        }
    }
    let (value, ha, hb) = best.ok_or_else(|| Error::Invariant("forward row is empty".into()))?;
    let order = forward
        .get(ha)
        .unwrap()
        .activities
        .iter()
        .chain(backward.get(hb).unwrap().activities)
        .map(|&a| usize::from(a))
        .collect();
    Ok((order, value, pairs))
}

/// Finds an optimal sequence by growing prefixes and suffixes row by row,
/// keeping only the best ordering of each activity set, then joining the
/// two trees at row `na`.
pub fn solve(dsm: &Dsm, config: &SolverConfig) -> Result<SolveReport> {
    let n = dsm.n();
    if config.cores == 0 {
        return Err(Error::input("at least one core is required"));
    }
    if n > 64 {
        return Err(Error::input(format!("{n} activities exceed the 64-activity limit")));
    }
    let table = BinomialTable::new(n)?;

    let cancel = Cancel::new(config.time_limit);
    let started = Instant::now();
    if cancel.fired() {
        return Err(Error::Timeout(Box::default()));
    }

    if n < 4 {
        let (sequence, objective) = brute_force_optimum(dsm)?;
        let total = started.elapsed();
        return Ok(SolveReport {
            sequence,
            objective,
            search_value: objective,
            na: 0,
            cores_used: 1,
            method: Method::Exhaustive,
            counters: SearchCounters::default(),
            timings: PhaseTimings {
                total,
                ..PhaseTimings::default()
            },
        });
    }

    let na = config.clamped_na(n);
    check_memory(n, na, &table, config.memory_cap)?;

    let ctx = Context {
        kernel: Kernel::new(dsm),
        table: &table,
        opts: config.variant.worker_options(config.memory_cap),
    };
    let forward_rows = rows_for(Direction::Forward, n, na);
    let backward_rows = rows_for(Direction::Backward, n, na);
    let (fixed, cores_used) = match config.variant {
        Variant::NoSecondDecomposition => (Some(1), 2),
        _ => (None, config.cores),
    };
    let sched = Scheduler::new(config.cores, fixed, forward_rows.len(), backward_rows.len());
    let (forward_seed, backward_seed) = seed_rows(dsm, &table)?;

    let timed = |seed: RowStore, rows: &[usize]| {
        let t = Instant::now();
        let out = run_pipeline(&ctx, seed, rows, &sched, &cancel);
        (out, t.elapsed())
    };
    let ((fw, fw_time), (bw, bw_time)) = if config.cores == 1 && fixed.is_none() {
        let fw = timed(forward_seed, &forward_rows);
        let bw = timed(backward_seed, &backward_rows);
        (fw, bw)
    } else {
        thread::scope(|s| {
            let back = s.spawn(|| timed(backward_seed, &backward_rows));
            let fw = timed(forward_seed, &forward_rows);
            let bw = back.join().unwrap_or_else(|_| {
                (
                    Err(Stop::Failed(Error::Invariant("backward tree panicked".into()))),
                    Duration::ZERO,
                )
            });
            (fw, bw)
        })
    };

    let mut counters = SearchCounters::default();
    let (forward, backward) = match (fw, bw) {
        (Ok((f, fc)), Ok((b, bc))) => {
            counters.rows.extend(fc);
            counters.rows.extend(bc);
            (f, b)
        }
        (Err(Stop::Failed(e)), _) | (_, Err(Stop::Failed(e))) => return Err(e),
        (f, b) => {
            for side in [f, b] {
                match side {
                    Ok((_, c)) | Err(Stop::Cancelled(c)) => counters.rows.extend(c),
                    Err(Stop::Failed(_)) => unreachable!(),
                }
            }
            return Err(Error::Timeout(Box::new(counters)));
        }
    };

    let combine_started = Instant::now();
    let (order, search_value, pairs) = combine(&forward, &backward, &table)?;
    counters.combination_pairs = pairs;
    let combination = combine_started.elapsed();

    let objective = order_feedback_length(dsm, &order);
    let scale = objective.abs().max(1.0);
    if (objective - search_value).abs() > 1e-9 * scale {
        return Err(Error::Invariant(format!(
            "search value {search_value} disagrees with direct objective {objective}"
        )));
    }
    Ok(SolveReport {
        sequence: ActivitySequence::from_indices(order)?,
        objective,
        search_value,
        na,
        cores_used,
        method: Method::BranchAndPrune,
        counters,
        timings: PhaseTimings {
            forward: fw_time,
            backward: bw_time,
            combination,
            total: started.elapsed(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsm::generate_instance;
    use crate::oracle::brute_force_optimum;

    #[test]
    fn clamp_rule() {
        let c = SolverConfig::default().with_na(15);
        assert_eq!(c.clamped_na(6), 4);
        assert_eq!(SolverConfig::default().with_na(0).clamped_na(9), 2);
        assert_eq!(SolverConfig::default().clamped_na(12), 5);
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let d = Dsm::zeros(6).unwrap();
        let r = solve(&d, &SolverConfig::default().with_cores(2)).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.sequence.ids(), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn isolated_fourth_activity() {
        let d = Dsm::from_dependencies(4, &[(1, 2, 0.5), (1, 3, 0.2), (2, 3, 0.4)]).unwrap();
        let r = solve(&d, &SolverConfig::default()).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.objective, brute_force_optimum(&d).unwrap().1);
    }

    #[test]
    fn small_instances_use_enumeration() {
        let d = Dsm::from_dependencies(3, &[(1, 2, 0.5), (1, 3, 0.2), (2, 3, 0.4)]).unwrap();
        let r = solve(&d, &SolverConfig::default()).unwrap();
        assert_eq!(r.method, Method::Exhaustive);
        assert_eq!(r.sequence.ids(), vec![3, 2, 1]);
    }

    #[test]
    fn matches_oracle_on_seeded_instance() {
        let d = generate_instance(8, 0.5, 42).unwrap();
        let r = solve(&d, &SolverConfig::default()).unwrap();
        let (seq, v) = brute_force_optimum(&d).unwrap();
        assert_eq!(r.objective, v);
        assert_eq!(r.sequence, seq);
    }

    #[test]
    fn zero_time_limit_times_out() {
        let d = generate_instance(12, 0.5, 1).unwrap();
        let err = solve(&d, &SolverConfig::default().with_time_limit(Duration::ZERO)).unwrap_err();
        assert!(matches!(err, Error::Timeout(_)));
    }

    #[test]
    fn memory_cap_names_the_row() {
        let d = Dsm::zeros(12).unwrap();
        let cfg = SolverConfig {
            memory_cap: 500,
            ..SolverConfig::default().with_na(6)
        };
        match solve(&d, &cfg).unwrap_err() {
            Error::Resource { n, size, slots, .. } => assert_eq!((n, size, slots), (12, 5, 792)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn odd_core_goes_to_longer_tree() {
        let s = Scheduler::new(5, None, 3, 6);
        assert_eq!(s.workers(Direction::Forward), 2);
        assert_eq!(s.workers(Direction::Backward), 3);
        s.finish(Direction::Backward);
        assert_eq!(s.workers(Direction::Forward), 5);
        let s = Scheduler::new(1, None, 3, 3);
        assert_eq!(s.workers(Direction::Forward), 1);
        assert_eq!(s.workers(Direction::Backward), 1);
    }

    #[test]
    fn counters_follow_row_sizes() {
        let d = generate_instance(9, 0.3, 5).unwrap();
        let t = BinomialTable::new(9).unwrap();
        let r = solve(&d, &SolverConfig::default().with_cores(3).with_na(4)).unwrap();
        for row in &r.counters.rows {
            assert_eq!(row.survivors, t.get(9, row.size));
            assert_eq!(row.expanded, t.get(9, row.size - 1) * (9 - row.size as u64 + 1));
            assert_eq!(row.expanded - row.pruned, row.survivors);
        }
        assert_eq!(r.counters.combination_pairs, t.get(9, 4));
    }
}
