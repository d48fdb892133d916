//! Instance grids, timing tables, strategy ablations and the sign test.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::dsm::generate_instance;
use crate::error::{Error, Result};
use crate::oracle::{brute_force_optimum, MAX_ORACLE_N};
use crate::solver::{solve, SolverConfig, Variant};

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub n_list: Vec<usize>,
    pub density_list: Vec<f64>,
    pub instances_per_cell: usize,
    pub seed_base: u64,
    /// Per solve. Overrides `config.time_limit`.
    pub time_limit: Option<Duration>,
    pub config: SolverConfig,
    /// Cross-check every objective against exhaustive enumeration (n <= 10).
    pub verify: bool,
}

impl GridSpec {
    pub fn new(n_list: Vec<usize>, density_list: Vec<f64>, instances_per_cell: usize) -> Self {
        Self {
            n_list,
            density_list,
            instances_per_cell,
            seed_base: 0,
            time_limit: None,
            config: SolverConfig::default(),
            verify: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances_per_cell == 0 {
            return Err(Error::input("instances_per_cell must be at least 1"));
        }
        if let Some(d) = self.density_list.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::input(format!("density {d} outside [0, 1]")));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::input(format!("grid size n = {n} is below 2")));
        }
        if self.verify {
            if let Some(n) = self.n_list.iter().find(|&&n| n > MAX_ORACLE_N) {
                return Err(Error::input(format!(
                    "cannot verify n = {n} exhaustively (limit {MAX_ORACLE_N})"
                )));
            }
        }
        Ok(())
    }

    /// Seed of instance `instance` in cell `cell` (cells ordered n-major).
    pub fn seed(&self, cell: usize, instance: usize) -> u64 {
        self.seed_base + (cell * self.instances_per_cell + instance) as u64
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.n_list
            .iter()
            .flat_map(move |&n| self.density_list.iter().map(move |&d| (n, d)))
            .enumerate()
            .map(|(c, (n, d))| (c, n, d))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceResult {
    pub seed: u64,
    /// `None` on timeout.
    pub objective: Option<f64>,
    pub sequence: Option<Vec<usize>>,
    pub time_ms: f64,
    pub timed_out: bool,
    /// `Some(true)` when verified against enumeration and equal.
    pub oracle_match: Option<bool>,
    pub expanded: u64,
    pub pruned: u64,
    pub transferred_records: u64,
    pub similar_comparisons: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub n: usize,
    pub density: f64,
    /// Mean over runs that finished; `None` if every run timed out.
    pub mean_time_ms: Option<f64>,
    pub timeouts: usize,
    pub expanded: u64,
    pub pruned: u64,
    pub transferred_records: u64,
    pub similar_comparisons: u64,
    pub oracle_mismatches: usize,
    pub runs: Vec<InstanceResult>,
}

impl CellResult {
    pub fn objectives(&self) -> Vec<Option<f64>> {
        self.runs.iter().map(|r| r.objective).collect()
    }

    fn from_runs(n: usize, density: f64, runs: Vec<InstanceResult>) -> Self {
        let finished: Vec<f64> = runs.iter().filter(|r| !r.timed_out).map(|r| r.time_ms).collect();
        let mean_time_ms = (!finished.is_empty()).then(|| finished.iter().sum::<f64>() / finished.len() as f64);
        Self {
            n,
            density,
            mean_time_ms,
            timeouts: runs.iter().filter(|r| r.timed_out).count(),
            expanded: runs.iter().map(|r| r.expanded).sum(),
            pruned: runs.iter().map(|r| r.pruned).sum(),
            transferred_records: runs.iter().map(|r| r.transferred_records).sum(),
            similar_comparisons: runs.iter().map(|r| r.similar_comparisons).sum(),
            oracle_mismatches: runs.iter().filter(|r| r.oracle_match == Some(false)).count(),
            runs,
        }
    }
}

fn run_instance(spec: &GridSpec, config: &SolverConfig, n: usize, density: f64, seed: u64) -> Result<InstanceResult> {
    let dsm = generate_instance(n, density, seed)?;
    let started = Instant::now();
    let outcome = solve(&dsm, config);
    let time_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(report) => {
            let oracle_match = if spec.verify {
                Some(brute_force_optimum(&dsm)?.1 == report.objective)
            } else {
                None
            };
            Ok(InstanceResult {
                seed,
                objective: Some(report.objective),
                sequence: Some(report.sequence.ids()),
                time_ms,
                timed_out: false,
                oracle_match,
                expanded: report.counters.expanded(),
                pruned: report.counters.pruned(),
                transferred_records: report.counters.transferred_records(),
                similar_comparisons: report.counters.similar_comparisons(),
            })
        }
        Err(Error::Timeout(counters)) => Ok(InstanceResult {
            seed,
            objective: None,
            sequence: None,
            time_ms,
            timed_out: true,
            oracle_match: None,
            expanded: counters.expanded(),
            pruned: counters.pruned(),
            transferred_records: counters.transferred_records(),
            similar_comparisons: counters.similar_comparisons(),
        }),
        Err(e) => Err(e),
    }
}

/// Solves every instance of every cell, one at a time. Timeouts are
/// recorded per run; other errors abort the grid.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<CellResult>> {
    run_grid_with(spec, spec.config.variant)
}

fn run_grid_with(spec: &GridSpec, variant: Variant) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let config = SolverConfig {
        time_limit: spec.time_limit.or(spec.config.time_limit),
        variant,
        ..spec.config.clone()
    };
    spec.cells()
        .map(|(cell, n, density)| {
            let runs = (0..spec.instances_per_cell)
                .map(|i| run_instance(spec, &config, n, density, spec.seed(cell, i)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CellResult::from_runs(n, density, runs))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationResult {
    pub variant: &'static str,
    pub full: Vec<CellResult>,
    pub ablated: Vec<CellResult>,
}

impl AblationResult {
    /// `true` when every instance got the same objective and sequence from
    /// both solvers (timeouts compare equal only to timeouts).
    pub fn results_identical(&self) -> bool {
        self.full.iter().zip(&self.ablated).all(|(a, b)| {
            a.runs
                .iter()
                .zip(&b.runs)
                .all(|(x, y)| x.objective == y.objective && x.sequence == y.sequence)
        })
    }

    /// Instances where the ablated solver finished slower.
    pub fn full_wins(&self) -> usize {
        self.full
            .iter()
            .zip(&self.ablated)
            .flat_map(|(a, b)| a.runs.iter().zip(&b.runs))
            .filter(|(x, y)| !x.timed_out && (y.timed_out || x.time_ms < y.time_ms))
            .count()
    }

    pub fn comparisons(&self) -> usize {
        self.full.iter().map(|c| c.runs.len()).sum()
    }
}

/// Runs the grid with the full solver and with `variant` on the same seeds.
pub fn ablation_run(spec: &GridSpec, variant: Variant) -> Result<AblationResult> {
    Ok(AblationResult {
        variant: variant.name(),
        full: run_grid_with(spec, Variant::Full)?,
        ablated: run_grid_with(spec, variant)?,
    })
}

/// Critical win count of the two-tailed sign test at the 0.05 level,
/// `N / 2 + 1.96 * sqrt(N) / 2`.
pub fn sign_test_cv(comparisons: usize) -> f64 {
    let n = comparisons as f64;
    n / 2.0 + 1.96 * n.sqrt() / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Significance {
    Significant,
    NotSignificant,
}

pub fn sign_test_decision(wins: usize, comparisons: usize) -> Significance {
    if wins as f64 >= sign_test_cv(comparisons) {
        Significance::Significant
    } else {
        Significance::NotSignificant
    }
}

/// Aligned plain-text table, one line per cell.
pub fn format_table(cells: &[CellResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>4} {:>6} {:>5} {:>8} {:>12} {:>14} {:>14} {:>14} {:>16} {:>9}",
        "n", "den", "runs", "timeouts", "mean_ms", "expanded", "pruned", "transferred", "comparisons", "verified"
    )
    .unwrap();
    for c in cells {
        let mean = c.mean_time_ms.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
        let verified = if c.runs.iter().all(|r| r.oracle_match.is_none()) {
            "-".to_string()
        } else {
            format!(
                "{}/{}",
                c.runs.iter().filter(|r| r.oracle_match == Some(true)).count(),
                c.runs.len()
            )
        };
        writeln!(
            out,
            "{:>4} {:>6.2} {:>5} {:>8} {:>12} {:>14} {:>14} {:>14} {:>16} {:>9}",
            c.n,
            c.density,
            c.runs.len(),
            c.timeouts,
            mean,
            c.expanded,
            c.pruned,
            c.transferred_records,
            c.similar_comparisons,
            verified
        )
        .unwrap();
    }
    out
}

pub fn to_json(cells: &[CellResult]) -> String {
    serde_json::to_string_pretty(cells).expect("cell results serialize")
}

/// One line per variant: identical results, sign-test verdict and counter totals.
pub fn format_ablations(results: &[AblationResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<24} {:>9} {:>6} {:>8} {:>16} {:>16} {:>16} {:>16}",
        "variant", "identical", "wins", "cv", "transferred", "full_transfer", "comparisons", "full_compare"
    )
    .unwrap();
    for r in results {
        let total = |cells: &[CellResult], f: fn(&CellResult) -> u64| cells.iter().map(f).sum::<u64>();
        let n = r.comparisons();
        let verdict = match sign_test_decision(r.full_wins(), n) {
            Significance::Significant => "*",
            Significance::NotSignificant => "",
        };
        writeln!(
            out,
            "{:<24} {:>9} {:>5}{:1} {:>8.2} {:>16} {:>16} {:>16} {:>16}",
            r.variant,
            r.results_identical(),
            r.full_wins(),
            verdict,
            sign_test_cv(n),
            total(&r.ablated, |c| c.transferred_records),
            total(&r.full, |c| c.transferred_records),
            total(&r.ablated, |c| c.similar_comparisons),
            total(&r.full, |c| c.similar_comparisons),
        )
        .unwrap();
    }
    out
}

pub fn ablations_to_json(results: &[AblationResult]) -> String {
    serde_json::to_string_pretty(results).expect("ablation results serialize")
}
