//! Per-row hash addresses: the 1-based lexicographic rank of a `p`-subset of
//! `{1..n}` among all `p`-subsets.
//!
//! Two routes compute the same rank. [`rank_subset`] sums the per-element
//! terms `h(s_i)` literally over sorted ids. [`BinomialTable::rank_mask`]
//! collapses each term with the hockey-stick identity and is the form used
//! by the solver.

use crate::error::{Error, Result};

/// Exact binomial coefficients `C(m, k)` for `0 <= k <= m <= n_max`.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    n_max: usize,
    c: Vec<u64>,
}

impl BinomialTable {
    /// Fails if any coefficient in range does not fit in a `u64`.
    pub fn new(n_max: usize) -> Result<Self> {
        let w = n_max + 1;
        let mut c = vec![0u64; w * w];
        for m in 0..=n_max {
            c[m * w] = 1;
            for k in 1..=m {
                let above = c[(m - 1) * w + k - 1];
                let left = if k < m { c[(m - 1) * w + k] } else { 0 };
                c[m * w + k] = above.checked_add(left).ok_or_else(|| {
                    Error::input(format!("C({m}, {k}) overflows 64 bits; n_max = {n_max} is too large"))
                })?;
            }
        }
        Ok(Self { n_max, c })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `C(m, k)`, zero when `k > m`.
    #[inline]
    pub fn get(&self, m: usize, k: usize) -> u64 {
        if k > m {
            0
        } else {
            self.c[m * (self.n_max + 1) + k]
        }
    }

    /// Rank of the subset whose 0-based members are the set bits of `mask`,
    /// taken among `p`-subsets of `n` items with `p = mask.count_ones()`.
    ///
    /// For sorted 1-based members `s_1 < ... < s_p` with `s_0 = 0`, the
    /// contribution of `s_i` is `sum_{t = s_{i-1}+1}^{s_i - 1} C(n - t, p - i)`,
    /// which telescopes to `C(n - s_{i-1}, p - i + 1) - C(n - s_i + 1, p - i + 1)`.
    #[inline]
    pub fn rank_mask(&self, mask: u64, n: usize) -> u64 {
        debug_assert!(n <= self.n_max && (n == 64 || mask >> n == 0));
        let p = mask.count_ones() as usize;
        let mut rank = 1;
        let mut prev = 0usize;
        let mut rest = mask;
        let mut i = 1;
        while rest != 0 {
            let s = rest.trailing_zeros() as usize + 1;
            rest &= rest - 1;
            let r = p - i + 1;
            rank += self.get(n - prev, r) - self.get(n - s + 1, r);
            prev = s;
            i += 1;
        }
        rank
    }

    /// Inverse of [`BinomialTable::rank_mask`] for a subset of size `p`.
    pub fn unrank_mask(&self, ha: u64, n: usize, p: usize) -> u64 {
        debug_assert!(ha >= 1 && ha <= self.get(n, p));
        let mut remaining = ha - 1;
        let mut mask = 0u64;
        let mut next = 1usize;
        for i in 1..=p {
            loop {
                let block = self.get(n - next, p - i);
                if remaining < block {
                    break;
                }
                remaining -= block;
                next += 1;
            }
            mask |= 1 << (next - 1);
            next += 1;
        }
        mask
    }
}

/// A subset's position among all same-size subsets of a universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashAddress {
    pub ha: u64,
    pub n: usize,
    pub p: usize,
}

fn check_universe(n: usize, p: usize, table: &BinomialTable) -> Result<()> {
    if n > table.n_max() {
        return Err(Error::input(format!(
            "universe size {n} exceeds table limit {}",
            table.n_max()
        )));
    }
    if n > 64 {
        return Err(Error::input(format!("universe size {n} exceeds 64")));
    }
    if p > n {
        return Err(Error::input(format!("subset size {p} exceeds universe size {n}")));
    }
    Ok(())
}

/// Ranks a set of distinct 1-based ids; input order is irrelevant.
pub fn rank_subset(ids: &[usize], n: usize, table: &BinomialTable) -> Result<HashAddress> {
    let p = ids.len();
    check_universe(n, p, table)?;
    if p == 0 {
        return Err(Error::input("cannot rank an empty subset"));
    }
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    if let Some(&bad) = sorted.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::input(format!("activity {bad} outside 1..={n}")));
    }
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::input(format!("activity {} listed twice", w[0])));
    }

    if p == 1 {
        return Ok(HashAddress {
            ha: sorted[0] as u64,
            n,
            p,
        });
    }
    // h(s_1): all subsets whose smallest member is below s_1.
    let mut ha: u64 = (1..sorted[0]).map(|t| table.get(n - t, p - 1)).sum();
    // h(s_i), 1 < i < p: subsets agreeing up to s_{i-1} with a smaller i-th member.
    for i in 2..p {
        let (lo, hi) = (sorted[i - 2] + 1, sorted[i - 1]);
        ha += (lo..hi).map(|t| table.get(n - t, p - i)).sum::<u64>();
    }
    // h(s_p) = s_p - s_{p-1}, which also carries the 1-based offset.
    ha += (sorted[p - 1] - sorted[p - 2]) as u64;
    Ok(HashAddress { ha, n, p })
}

/// Sorted 1-based ids of the subset at `ha`.
pub fn unrank_subset(ha: u64, n: usize, p: usize, table: &BinomialTable) -> Result<Vec<usize>> {
    check_universe(n, p, table)?;
    let total = table.get(n, p);
    if ha == 0 || ha > total {
        return Err(Error::input(format!(
            "address {ha} outside 1..={total} for C({n}, {p})"
        )));
    }
    let mask = table.unrank_mask(ha, n, p);
    Ok((0..n).filter(|&a| mask >> a & 1 == 1).map(|a| a + 1).collect())
}

/// Address of the complementary `(n - p)`-subset: `C(n, p) + 1 - ha`.
pub fn complement_address(addr: HashAddress, table: &BinomialTable) -> Result<HashAddress> {
    let HashAddress { ha, n, p } = addr;
    check_universe(n, p, table)?;
    let total = table.get(n, p);
    if ha == 0 || ha > total {
        return Err(Error::input(format!(
            "address {ha} outside 1..={total} for C({n}, {p})"
        )));
    }
    Ok(HashAddress {
        ha: total + 1 - ha,
        n,
        p: n - p,
    })
}

/// Slots a per-row store needs in the worst row, `C(n, floor(n / 2))`.
pub fn max_row_slots(n: usize, table: &BinomialTable) -> u64 {
    table.get(n, n / 2)
}
