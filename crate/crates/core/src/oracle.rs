//! Exhaustive ground truth for small instances.
//!
//! Everything here enumerates orderings in lexicographic order and evaluates
//! them with the direct evaluators from [`crate::dsm`]; none of it touches
//! the incremental rules the solver grows nodes with.

use crate::dsm::{order_feedback_length, prefix_value, suffix_value, ActivitySequence, Dsm};
use crate::error::{Error, Result};

/// Largest instance [`brute_force_optimum`] accepts.
pub const MAX_ORACLE_N: usize = 10;
/// Largest subset the per-subset oracles accept.
pub const MAX_ORACLE_SUBSET: usize = 9;

/// Rearranges `v` into the next lexicographic permutation; `false` once `v`
/// was the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Minimum of `eval` over all orderings of `items`, first minimum in
/// lexicographic order.
fn min_over_orderings(items: &[usize], eval: impl Fn(&[usize]) -> f64) -> (Vec<usize>, f64) {
    let mut cur = items.to_vec();
    cur.sort_unstable();
    let mut best = cur.clone();
    let mut best_value = eval(&cur);
    while next_permutation(&mut cur) {
        let v = eval(&cur);
        if v < best_value {
            best_value = v;
            best.copy_from_slice(&cur);
        }
    }
    (best, best_value)
}

/// Optimal sequence by enumerating all `n!` permutations; ties go to the
/// lexicographically smallest sequence.
pub fn brute_force_optimum(dsm: &Dsm) -> Result<(ActivitySequence, f64)> {
    let n = dsm.n();
    if n > MAX_ORACLE_N {
        return Err(Error::input(format!(
            "exhaustive search is limited to n <= {MAX_ORACLE_N} ({n} activities given); \
             use the branch-and-prune solver instead"
        )));
    }
    let items: Vec<usize> = (0..n).collect();
    let (order, value) = min_over_orderings(&items, |o| order_feedback_length(dsm, o));
    Ok((ActivitySequence::from_indices(order)?, value))
}

fn check_subset(dsm: &Dsm, subset: &[usize]) -> Result<()> {
    if subset.is_empty() || subset.len() > MAX_ORACLE_SUBSET {
        return Err(Error::input(format!(
            "subset size {} outside 1..={MAX_ORACLE_SUBSET}",
            subset.len()
        )));
    }
    let mut seen = vec![false; dsm.n()];
    for &a in subset {
        if a >= dsm.n() || std::mem::replace(&mut seen[a], true) {
            return Err(Error::input(format!("invalid or repeated activity {}", a + 1)));
        }
    }
    Ok(())
}

/// Best ordering of `subset` (0-based) as the sequence prefix, with its value.
pub fn best_prefix(dsm: &Dsm, subset: &[usize]) -> Result<(Vec<usize>, f64)> {
    check_subset(dsm, subset)?;
    Ok(min_over_orderings(subset, |o| prefix_value(dsm, o)))
}

/// Best ordering of `subset` (0-based) as the sequence suffix, with its value.
pub fn best_suffix(dsm: &Dsm, subset: &[usize]) -> Result<(Vec<usize>, f64)> {
    check_subset(dsm, subset)?;
    Ok(min_over_orderings(subset, |o| suffix_value(dsm, o)))
}

pub fn best_prefix_value(dsm: &Dsm, subset: &[usize]) -> Result<f64> {
    best_prefix(dsm, subset).map(|(_, v)| v)
}

pub fn best_suffix_value(dsm: &Dsm, subset: &[usize]) -> Result<f64> {
    best_suffix(dsm, subset).map(|(_, v)| v)
}
