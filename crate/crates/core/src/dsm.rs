//! The problem model: dependence matrices, activity sequences and the
//! objective evaluators.
//!
//! Activities are 0-based indices inside the library. The 1-based ids used
//! in files, on the command line and in `Display` output are converted at
//! those boundaries only (`ActivitySequence::from_ids`, `ActivitySequence::ids`).

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Generated dependence degrees are drawn from `{1, 2, ..., VALUE_LEVELS} / VALUE_LEVELS`.
///
/// Every value is a dyadic rational with 20 fractional bits, so any sum of
/// `value * length` terms for n up to a few hundred is exact in `f64`. All
/// evaluation routes (direct, incremental, quadratic) then agree bit for bit.
pub const VALUE_LEVELS: u32 = 1 << 20;

/// A square design structure matrix. `get(i, j)` is the dependence of
/// activity `i` on information from activity `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dsm {
    n: usize,
    d: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Dsm {
    /// Builds a matrix from row-major entries, validating range and diagonal.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("a DSM needs at least 2 activities, got {n}")));
        }
        if entries.len() != n * n {
            return Err(Error::input(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::input(format!("d({}, {}) = {v} is outside [0, 1]", i + 1, j + 1)));
                }
                if i == j && v != 0.0 {
                    return Err(Error::input(format!(
                        "diagonal entry d({0}, {0}) = {v} must be 0",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            n,
            d: entries,
            labels: None,
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n * n])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::input(format!(
                "row {} has {} values, expected {n}",
                i + 1,
                row.len()
            )));
        }
        Self::new(n, rows.concat())
    }

    /// Builds a sparse matrix from `(i, j, value)` triples with 1-based ids.
    pub fn from_dependencies(n: usize, deps: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for &(i, j, v) in deps {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::input(format!("dependency ({i}, {j}) outside 1..={n}")));
            }
            entries[(i - 1) * n + (j - 1)] = v;
        }
        Self::new(n, entries)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::input(format!(
                "{} labels given for {} activities",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn nonzero_count(&self) -> usize {
        self.d.iter().filter(|&&v| v != 0.0).count()
    }
}

/// A complete schedule: a permutation of all activities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivitySequence(Vec<usize>);

impl ActivitySequence {
    /// From 0-based activity indices.
    pub fn from_indices(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &a in &order {
            if a >= n {
                return Err(Error::input(format!("activity {} outside 1..={n}", a + 1)));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::input(format!("activity {} appears more than once", a + 1)));
            }
        }
        Ok(Self(order))
    }

    /// From 1-based activity ids.
    pub fn from_ids(ids: &[usize]) -> Result<Self> {
        if ids.contains(&0) {
            return Err(Error::input("activity ids are 1-based; found 0"));
        }
        Self::from_indices(ids.iter().map(|&id| id - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn ids(&self) -> Vec<usize> {
        self.0.iter().map(|&a| a + 1).collect()
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for ActivitySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (pos, a) in self.0.iter().enumerate() {
            if pos > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", a + 1)?;
        }
        write!(f, ")")
    }
}

fn check_dims(dsm: &Dsm, len: usize) -> Result<()> {
    if dsm.n() != len {
        return Err(Error::input(format!(
            "sequence has {len} activities but the DSM has {}",
            dsm.n()
        )));
    }
    Ok(())
}

/// Total length-weighted feedback of a complete sequence.
pub fn total_feedback_length(dsm: &Dsm, seq: &ActivitySequence) -> Result<f64> {
    check_dims(dsm, seq.len())?;
    Ok(order_feedback_length(dsm, seq.indices()))
}

/// Unchecked evaluation of a complete order; pairs are summed by ascending
/// position `h`, then ascending `k`.
pub(crate) fn order_feedback_length(dsm: &Dsm, order: &[usize]) -> f64 {
    let mut total = 0.0;
    for (h, &sh) in order.iter().enumerate() {
        let row = dsm.row(sh);
        for (k, &sk) in order.iter().enumerate().skip(h + 1) {
            total += row[sk] * (k - h) as f64;
        }
    }
    total
}

fn membership(n: usize, acts: &[usize]) -> Vec<bool> {
    let mut member = vec![false; n];
    for &a in acts {
        member[a] = true;
    }
    member
}

/// Feedback value of a prefix occupying positions `1..=p`, `p = prefix.len()`.
///
/// Internal feedbacks count their full length. A feedback from an activity
/// outside the prefix to prefix position `h` counts only the part of its
/// length up to the boundary, `p + 1 - h`, which is why the value does not
/// depend on how the remaining activities are ordered.
///
/// Indices must be distinct and below `dsm.n()`.
pub fn prefix_value(dsm: &Dsm, prefix: &[usize]) -> f64 {
    let n = dsm.n();
    let p = prefix.len();
    debug_assert!(p <= n);
    let member = membership(n, prefix);
    let mut internal = 0.0;
    for (h, &sh) in prefix.iter().enumerate() {
        let row = dsm.row(sh);
        for (k, &sk) in prefix.iter().enumerate().skip(h + 1) {
            internal += row[sk] * (k - h) as f64;
        }
    }
    let mut crossing = 0.0;
    for (h, &sh) in prefix.iter().enumerate() {
        let row = dsm.row(sh);
        let reach = (p - h) as f64;
        for k in (0..n).filter(|&k| !member[k]) {
            crossing += row[k] * reach;
        }
    }
    internal + crossing
}

/// Feedback value of a suffix occupying positions `p+1..=n`, `p = n - suffix.len()`.
///
/// Internal feedbacks count their full length; a feedback from suffix
/// position `k` to any activity outside the suffix counts `k - p - 1`, the
/// part of its length past the boundary.
///
/// Indices must be distinct and below `dsm.n()`.
pub fn suffix_value(dsm: &Dsm, suffix: &[usize]) -> f64 {
    let n = dsm.n();
    debug_assert!(suffix.len() <= n);
    let member = membership(n, suffix);
    let mut internal = 0.0;
    for (h, &sh) in suffix.iter().enumerate() {
        let row = dsm.row(sh);
        for (k, &sk) in suffix.iter().enumerate().skip(h + 1) {
            internal += row[sk] * (k - h) as f64;
        }
    }
    let mut crossing = 0.0;
    for h in (0..n).filter(|&h| !member[h]) {
        let row = dsm.row(h);
        for (k, &sk) in suffix.iter().enumerate() {
            crossing += row[sk] * k as f64;
        }
    }
    internal + crossing
}

/// Components of the objective when a sequence is cut after position `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitDecomposition {
    /// 1-based split position; the prefix region holds positions `1..=p`.
    pub p: usize,
    pub fv_a: f64,
    pub fv_b: f64,
    /// Feedbacks inside the prefix region.
    pub fl_a: f64,
    /// Feedbacks inside the suffix region.
    pub fl_b: f64,
    /// Feedbacks from the suffix region back into the prefix region.
    pub fl_c: f64,
    /// Share of `fl_c` up to the boundary.
    pub fv_ca: f64,
    /// Share of `fl_c` past the boundary.
    pub fv_cb: f64,
}

/// Evaluates every split component from its defining sum.
pub fn split_components(dsm: &Dsm, seq: &ActivitySequence, p: usize) -> Result<SplitDecomposition> {
    let n = dsm.n();
    check_dims(dsm, seq.len())?;
    if p <= 1 || p >= n {
        return Err(Error::input(format!("split position {p} must satisfy 1 < p < {n}")));
    }
    let s = seq.indices();
    let (mut fl_a, mut fl_b, mut fl_c, mut fv_ca, mut fv_cb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    // Positions below are 0-based: the prefix is 0..p, the suffix p..n.
    for h in 0..n {
        let row = dsm.row(s[h]);
        for k in h + 1..n {
            let d = row[s[k]];
            if k < p {
                fl_a += d * (k - h) as f64;
            } else if h >= p {
                fl_b += d * (k - h) as f64;
            } else {
                fl_c += d * (k - h) as f64;
                fv_ca += d * (p - h) as f64;
                fv_cb += d * (k - p) as f64;
            }
        }
    }
    Ok(SplitDecomposition {
        p,
        fv_a: prefix_value(dsm, &s[..p]),
        fv_b: suffix_value(dsm, &s[p..]),
        fl_a,
        fl_b,
        fl_c,
        fv_ca,
        fv_cb,
    })
}

/// Pairwise precedence variables `x[i][j] = 1` iff `i` runs before `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderVars {
    n: usize,
    x: Vec<u8>,
}

impl OrderVars {
    /// Wraps raw 0/1 values (row-major, diagonal ignored) without validating
    /// the ordering constraints; see [`OrderVars::validate`].
    pub fn from_raw(n: usize, x: Vec<u8>) -> Result<Self> {
        if x.len() != n * n {
            return Err(Error::input(format!(
                "expected {} order variables, got {}",
                n * n,
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|&&v| v > 1) {
            return Err(Error::Constraint(format!("order variable value {v} is not binary")));
        }
        Ok(Self { n, x })
    }

    pub fn from_sequence(seq: &ActivitySequence) -> Self {
        let n = seq.len();
        let mut x = vec![0u8; n * n];
        let s = seq.indices();
        for h in 0..n {
            for k in h + 1..n {
                x[s[h] * n + s[k]] = 1;
            }
        }
        Self { n, x }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.x[i * self.n + j]
    }

    /// Checks antisymmetry for every pair and transitivity for every triple.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                if self.get(i, j) + self.get(j, i) != 1 {
                    return Err(Error::Constraint(format!(
                        "antisymmetry violated: x[{0}][{1}] + x[{1}][{0}] = {2}",
                        i + 1,
                        j + 1,
                        self.get(i, j) + self.get(j, i)
                    )));
                }
            }
        }
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                for k in (0..n).filter(|&k| k != i && k != j) {
                    if self.get(i, j) + self.get(j, k) + self.get(k, i) > 2 {
                        return Err(Error::Constraint(format!(
                            "transitivity violated on triple ({}, {}, {})",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn sequence_to_order_vars(seq: &ActivitySequence) -> OrderVars {
    OrderVars::from_sequence(seq)
}

/// The 0-1 quadratic form of the objective. For each ordered pair with
/// `x[i][j] = 1`, the feedback `d[i][j]` is weighted by the difference in
/// predecessor counts of `j` and `i`.
pub fn quadratic_objective(dsm: &Dsm, x: &OrderVars) -> Result<f64> {
    let n = dsm.n();
    if x.n() != n {
        return Err(Error::input(format!(
            "order variables cover {} activities but the DSM has {n}",
            x.n()
        )));
    }
    x.validate()?;
    let predecessors: Vec<i64> = (0..n)
        .map(|j| (0..n).filter(|&k| k != j).map(|k| i64::from(x.get(k, j))).sum())
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if x.get(i, j) == 1 {
                total += dsm.get(i, j) * (predecessors[j] - predecessors[i]) as f64;
            }
        }
    }
    Ok(total)
}

/// Random instance with exactly `round(density * n * (n - 1))` nonzero
/// off-diagonal cells, positions sampled without replacement.
pub fn generate_instance(n: usize, density: f64, seed: u64) -> Result<Dsm> {
    if n < 2 {
        return Err(Error::input(format!("n must be at least 2, got {n}")));
    }
    if !density.is_finite() || !(0.0..=1.0).contains(&density) {
        return Err(Error::input(format!("density {density} outside [0, 1]")));
    }
    let cells = n * (n - 1);
    let nonzero = (density * cells as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, cells, nonzero).into_vec();
    picked.sort_unstable();
    let mut entries = vec![0.0; n * n];
    for cell in picked {
        let i = cell / (n - 1);
        let mut j = cell % (n - 1);
        if j >= i {
            j += 1;
        }
        let level = rng.random_range(1..=VALUE_LEVELS);
        entries[i * n + j] = f64::from(level) / f64::from(VALUE_LEVELS);
    }
    Dsm::new(n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Dsm {
        Dsm::from_dependencies(3, &[(1, 2, 0.5), (1, 3, 0.2), (2, 3, 0.4)]).unwrap()
    }

    fn seq(ids: &[usize]) -> ActivitySequence {
        ActivitySequence::from_ids(ids).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn feedback_length_examples() {
        let d = three();
        assert!(close(total_feedback_length(&d, &seq(&[1, 2, 3])).unwrap(), 1.3));
        assert_eq!(total_feedback_length(&d, &seq(&[3, 2, 1])).unwrap(), 0.0);
        let z = Dsm::zeros(4).unwrap();
        assert_eq!(total_feedback_length(&z, &seq(&[4, 2, 1, 3])).unwrap(), 0.0);
    }

    #[test]
    fn feedback_length_dimension_mismatch() {
        let err = total_feedback_length(&three(), &seq(&[1, 2])).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn split_examples() {
        let d = three();
        assert!(split_components(&d, &seq(&[1, 2, 3]), 1).is_err());
        assert!(split_components(&d, &seq(&[1, 2, 3]), 3).is_err());
        let s = split_components(&d, &seq(&[1, 2, 3]), 2).unwrap();
        assert!(close(s.fv_a, 1.3));
        assert_eq!(s.fv_b, 0.0);
        assert!(close(s.fl_a, 0.5));
        assert_eq!(s.fl_b, 0.0);
        assert!(close(s.fl_c, 0.8));
        assert!(close(s.fv_ca, 0.8));
        assert_eq!(s.fv_cb, 0.0);

        let z = Dsm::zeros(5).unwrap();
        let s = split_components(&z, &seq(&[5, 1, 3, 2, 4]), 3).unwrap();
        for v in [s.fv_a, s.fv_b, s.fl_a, s.fl_b, s.fl_c, s.fv_ca, s.fv_cb] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn prefix_and_suffix_extremes() {
        let d = three();
        // p = 1: every other activity sits one step downstream.
        assert!(close(prefix_value(&d, &[0]), 0.7));
        assert_eq!(prefix_value(&d, &[2]), 0.0);
        for a in 0..3 {
            assert_eq!(suffix_value(&d, &[a]), 0.0);
        }
        let full = [0, 1, 2];
        assert_eq!(prefix_value(&d, &full), order_feedback_length(&d, &full));
        assert_eq!(suffix_value(&d, &full), order_feedback_length(&d, &full));
    }

    #[test]
    fn order_vars_examples() {
        let x = sequence_to_order_vars(&seq(&[1, 2, 3]));
        assert_eq!((x.get(0, 1), x.get(0, 2), x.get(1, 2)), (1, 1, 1));
        assert_eq!((x.get(1, 0), x.get(2, 0), x.get(2, 1)), (0, 0, 0));
        let x = sequence_to_order_vars(&seq(&[3, 1, 2]));
        assert_eq!((x.get(2, 0), x.get(2, 1), x.get(0, 1)), (1, 1, 1));
        assert!(x.validate().is_ok());
    }

    #[test]
    fn quadratic_examples() {
        let d = three();
        let x = sequence_to_order_vars(&seq(&[1, 2, 3]));
        assert!(close(quadratic_objective(&d, &x).unwrap(), 1.3));
        let z = Dsm::zeros(3).unwrap();
        assert_eq!(quadratic_objective(&z, &x).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_rejects_invalid_orders() {
        let d = three();
        // x[1][2] = x[2][1] = 1
        let mut raw = sequence_to_order_vars(&seq(&[1, 2, 3])).x;
        raw[3] = 1;
        let bad = OrderVars::from_raw(3, raw).unwrap();
        let msg = quadratic_objective(&d, &bad).unwrap_err().to_string();
        assert!(msg.contains("antisymmetry"), "{msg}");

        // cycle 1 -> 2 -> 3 -> 1
        let cyc = OrderVars::from_raw(3, vec![0, 1, 0, 0, 0, 1, 1, 0, 0]).unwrap();
        let msg = quadratic_objective(&d, &cyc).unwrap_err().to_string();
        assert!(msg.contains("transitivity"), "{msg}");
    }

    #[test]
    fn generator_counts_and_determinism() {
        let z = generate_instance(6, 0.0, 3).unwrap();
        assert_eq!(z.nonzero_count(), 0);
        let full = generate_instance(6, 1.0, 3).unwrap();
        assert_eq!(full.nonzero_count(), 30);
        for seed in 0..20 {
            let g = generate_instance(10, 0.4, seed).unwrap();
            assert_eq!(g.nonzero_count(), 36);
            assert_eq!(g, generate_instance(10, 0.4, seed).unwrap());
            for i in 0..10 {
                assert_eq!(g.get(i, i), 0.0);
            }
        }
        assert_ne!(
            generate_instance(10, 0.4, 1).unwrap(),
            generate_instance(10, 0.4, 2).unwrap()
        );
    }

    #[test]
    fn generator_rejects_bad_arguments() {
        assert!(generate_instance(5, 1.5, 0).is_err());
        assert!(generate_instance(5, -0.1, 0).is_err());
        assert!(generate_instance(5, f64::NAN, 0).is_err());
        assert!(generate_instance(1, 0.5, 0).is_err());
    }

    #[test]
    fn dsm_validation() {
        assert!(Dsm::from_rows(&[vec![0.0, 0.3], vec![0.7, 0.0]]).is_ok());
        assert!(Dsm::from_rows(&[vec![0.1, 0.3], vec![0.7, 0.0]]).is_err());
        assert!(Dsm::from_rows(&[vec![0.0, 1.3], vec![0.7, 0.0]]).is_err());
        assert!(Dsm::from_rows(&[vec![0.0], vec![0.7, 0.0]]).is_err());
    }

    #[test]
    fn sequence_validation() {
        assert!(ActivitySequence::from_ids(&[1, 1, 2]).is_err());
        assert!(ActivitySequence::from_ids(&[0, 1, 2]).is_err());
        assert!(ActivitySequence::from_ids(&[1, 4, 2]).is_err());
        assert_eq!(seq(&[3, 1, 2]).to_string(), "(3, 1, 2)");
    }
}
