//! Domain types and elementary signal/support manipulations.
//!
//! Everything here is immutable after construction and cheap to clone.
//! Indices are 1-based in all external (JSON/CSV) formats and 0-based
//! internally.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// A dense real signal of length `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct SparseSignal {
    entries: Vec<f64>,
}

/// JSON wire form: `{"n": N, "entries": [...]}`.
#[derive(Serialize, Deserialize)]
struct SignalRepr {
    n: usize,
    entries: Vec<f64>,
}

impl TryFrom<SignalRepr> for SparseSignal {
    type Error = Error;
    fn try_from(r: SignalRepr) -> Result<Self> {
        if r.entries.len() != r.n {
            return Err(Error::Format(format!(
                "signal length {} does not match declared n={}",
                r.entries.len(),
                r.n
            )));
        }
        SparseSignal::new(r.entries)
    }
}

impl From<SparseSignal> for SignalRepr {
    fn from(s: SparseSignal) -> Self {
        SignalRepr {
            n: s.len(),
            entries: s.entries,
        }
    }
}

impl SparseSignal {
    /// Builds a signal, rejecting empty or non-finite input.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("signal length must be at least 1"));
        }
        if let Some(bad) = entries.iter().find(|e| !e.is_finite()) {
            return Err(Error::param(format!("non-finite signal entry {bad}")));
        }
        Ok(SparseSignal { entries })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n.max(0)])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.entries)
    }

    pub fn from_dvector(v: &DVector<f64>) -> Result<Self> {
        Self::new(v.iter().copied().collect())
    }

    /// Support of the signal: indices of entries with `|x_i| > tol`.
    pub fn support(&self, tol: f64) -> IndexSet {
        IndexSet::from_zero_based_unchecked(
            self.entries
                .iter()
                .enumerate()
                .filter(|(_, &v)| v.abs() > tol)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sum of `|x_i|` over the given index set.
    pub fn l1_norm_on(&self, set: &IndexSet) -> f64 {
        set.iter().map(|i| self.entries[i].abs()).sum()
    }
}

/// A sorted, duplicate-free set of indices into `{1..N}` (stored 0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "IndexSetRepr", into = "IndexSetRepr")]
pub struct IndexSet {
    idx: Vec<usize>,
}

/// JSON wire form: `{"indices": [...]}`, 1-based.
#[derive(Serialize, Deserialize)]
struct IndexSetRepr {
    indices: Vec<usize>,
}

impl From<IndexSetRepr> for IndexSet {
    fn from(r: IndexSetRepr) -> Self {
        // 1-based external, 0-based internal; zero entries would underflow so
        // they are dropped via saturating conversion and caught by validation
        // at the use site (sets deserialized here are re-checked against N).
        let idx: BTreeSet<usize> = r.indices.iter().map(|&i| i.saturating_sub(1)).collect();
        IndexSet {
            idx: idx.into_iter().collect(),
        }
    }
}

impl From<IndexSet> for IndexSetRepr {
    fn from(s: IndexSet) -> Self {
        IndexSetRepr {
            indices: s.idx.iter().map(|&i| i + 1).collect(),
        }
    }
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet { idx: Vec::new() }
    }

    /// From 0-based indices; deduplicates and sorts. Errors if any index ≥ n.
    pub fn from_zero_based(indices: &[usize], n: usize) -> Result<Self> {
        let set: BTreeSet<usize> = indices.iter().copied().collect();
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(Error::param(format!(
                "index {} out of range for N={}",
                bad + 1,
                n
            )));
        }
        Ok(IndexSet {
            idx: set.into_iter().collect(),
        })
    }

    /// From 1-based indices in `{1..N}`.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        if indices.iter().any(|&i| i == 0) {
            return Err(Error::param("1-based index 0 is out of range"));
        }
        let shifted: Vec<usize> = indices.iter().map(|&i| i - 1).collect();
        Self::from_zero_based(&shifted, n)
    }

    fn from_zero_based_unchecked(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        IndexSet { idx }
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.idx.binary_search(&i).is_ok()
    }

    /// Iterates 0-based indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.idx.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.idx
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet::from_zero_based_unchecked(
            self.idx
                .iter()
                .copied()
                .filter(|i| other.contains(*i))
                .collect(),
        )
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut idx = self.idx.clone();
        idx.extend_from_slice(&other.idx);
        IndexSet::from_zero_based_unchecked(idx)
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet::from_zero_based_unchecked(
            self.idx
                .iter()
                .copied()
                .filter(|i| !other.contains(*i))
                .collect(),
        )
    }

    /// Complement within `{1..N}` (0-based internally).
    pub fn complement(&self, n: usize) -> IndexSet {
        IndexSet::from_zero_based_unchecked((0..n).filter(|i| !self.contains(*i)).collect())
    }
}

/// Ratio statistics of a support estimate relative to a reference support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportStats {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Computes `(rho, alpha, beta)` for a support estimate against a reference
/// support of sparsity `k`.
///
/// `rho = |T̃|/k`, `alpha = |T̃ ∩ T₀|/|T̃|` (zero for an empty estimate) and
/// `beta = 1 − alpha`.
pub fn support_stats(t0: &IndexSet, t_tilde: &IndexSet, k: usize) -> Result<SupportStats> {
    if k == 0 {
        return Err(Error::param("sparsity k must be positive"));
    }
    if t0.len() > k {
        return Err(Error::param(format!(
            "|T0| = {} exceeds reference sparsity k = {}",
            t0.len(),
            k
        )));
    }
    let rho = t_tilde.len() as f64 / k as f64;
    let alpha = if t_tilde.is_empty() {
        0.0
    } else {
        t_tilde.intersection(t0).len() as f64 / t_tilde.len() as f64
    };
    Ok(SupportStats {
        rho,
        alpha,
        beta: 1.0 - alpha,
    })
}

/// A support estimate T̃ with its derived statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub indices: IndexSet,
    pub k: usize,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SupportEstimate {
    /// Derives the estimate statistics from the actual sets, so `alpha·rho·k`
    /// and `beta·rho·k` are the integer cardinalities `|T̃ ∩ T₀|` and
    /// `|T̃ ∩ T₀ᶜ|` by construction.
    pub fn from_sets(t_tilde: IndexSet, t0: &IndexSet, k: usize) -> Result<Self> {
        let stats = support_stats(t0, &t_tilde, k)?;
        Ok(SupportEstimate {
            indices: t_tilde,
            k,
            rho: stats.rho,
            alpha: stats.alpha,
            beta: stats.beta,
        })
    }
}

/// Checks that the cardinalities implied by `(k, rho, alpha)` are integers.
///
/// Set sizes `ρk` and `αρk` must be whole numbers before a support estimate
/// with those statistics can exist.
pub fn check_cardinalities(k: usize, rho: f64, alpha: f64) -> Result<(usize, usize)> {
    let rk = rho * k as f64;
    let ark = alpha * rk;
    let tol = 1e-9;
    if (rk - rk.round()).abs() > tol || rk < -tol {
        return Err(Error::param(format!("rho*k = {rk} is not a nonnegative integer")));
    }
    if (ark - ark.round()).abs() > tol || ark < -tol {
        return Err(Error::param(format!(
            "alpha*rho*k = {ark} is not a nonnegative integer"
        )));
    }
    Ok((rk.round() as usize, ark.round() as usize))
}

/// Per-index weights in `[0,1]`: `omega` on the estimated support, 1 elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    omega: f64,
}

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Builds the weight vector of program (weights `omega` on T̃, 1 on T̃ᶜ).
pub fn build_weights(t_tilde: &IndexSet, omega: f64, n: usize) -> Result<WeightVector> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::param(format!("omega = {omega} outside [0, 1]")));
    }
    if let Some(bad) = t_tilde.iter().find(|&i| i >= n) {
        return Err(Error::param(format!(
            "support estimate index {} out of range for N={}",
            bad + 1,
            n
        )));
    }
    let mut weights = vec![1.0; n];
    for i in t_tilde.iter() {
        weights[i] = omega;
    }
    Ok(WeightVector { weights, omega })
}

/// Weighted l1 norm `Σ_i w_i |x_i|`.
pub fn weighted_l1_norm(x: &SparseSignal, w: &WeightVector) -> Result<f64> {
    if x.len() != w.len() {
        return Err(Error::param(format!(
            "signal length {} does not match weight length {}",
            x.len(),
            w.len()
        )));
    }
    Ok(x.entries()
        .iter()
        .zip(w.weights())
        .map(|(xi, wi)| wi * xi.abs())
        .sum())
}

/// Splits `x` into its best k-term approximation and the remainder.
///
/// `head` keeps the k largest-magnitude entries (ties broken by lowest
/// index), `tail = x − head`, and `head + tail = x` exactly.
pub fn best_k_term(x: &SparseSignal, k: usize) -> Result<(SparseSignal, SparseSignal)> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} out of range 1..={n}")));
    }
    let top = top_k_indices(x.entries(), k);
    let mut head = vec![0.0; n];
    let mut tail = x.entries().to_vec();
    for &i in &top {
        head[i] = x.entries()[i];
        tail[i] = 0.0;
    }
    Ok((SparseSignal::new(head)?, SparseSignal::new(tail)?))
}

/// Indices of the k largest-magnitude entries, lowest index first on ties.
pub(crate) fn top_k_indices(entries: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&i, &j| {
        entries[j]
            .abs()
            .partial_cmp(&entries[i].abs())
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut top = order[..k].to_vec();
    top.sort_unstable();
    top
}

/// Noise-set geometry of a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseSet {
    /// `‖y − Ax‖₂ ≤ ε`
    L2Ball,
    /// `‖Aᵀ(y − Ax)‖_∞ ≤ ε`
    DantzigBox,
}

/// A sensing matrix, measurements, and a noise-set descriptor.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub noise_set: NoiseSet,
    pub radius: f64,
    /// Indices of all-zero columns, recorded at construction but permitted.
    pub zero_columns: Vec<usize>,
}

impl ProblemInstance {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, noise_set: NoiseSet, radius: f64) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::param(format!(
                "matrix has {} rows but y has length {}",
                a.nrows(),
                y.len()
            )));
        }
        if !(radius >= 0.0) {
            return Err(Error::param(format!("radius = {radius} must be nonnegative")));
        }
        if a.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite entry in instance data"));
        }
        let zero_columns = (0..a.ncols())
            .filter(|&j| a.column(j).iter().all(|&v| v == 0.0))
            .collect();
        Ok(ProblemInstance {
            a,
            y,
            noise_set,
            radius,
            zero_columns,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.a.ncols())
    }
}

/// Reads a dense matrix from CSV: row-major, one row per line, '.' decimal,
/// no header.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_csv(&text)
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Format(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("empty matrix".into()));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

/// Writes a dense matrix as CSV in the same format `read_matrix_csv` accepts.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Reads a vector from CSV, accepting either a single row or a single column.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() == 1 {
        Ok(DVector::from_column_slice(m.column(0).as_slice()))
    } else if m.nrows() == 1 {
        Ok(DVector::from_iterator(m.ncols(), m.row(0).iter().copied()))
    } else {
        Err(Error::Format(format!(
            "expected a vector, found a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> SparseSignal {
        SparseSignal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn best_k_term_unique_maximum() {
        let (head, tail) = best_k_term(&sig(&[3.0, -1.0, 2.0]), 1).unwrap();
        assert_eq!(head.entries(), &[3.0, 0.0, 0.0]);
        assert_eq!(tail.entries(), &[0.0, -1.0, 2.0]);
    }

    #[test]
    fn best_k_term_zero_signal() {
        let (head, tail) = best_k_term(&sig(&[0.0, 0.0, 0.0, 0.0]), 2).unwrap();
        assert!(head.entries().iter().all(|&v| v == 0.0));
        assert!(tail.entries().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn best_k_term_ties_prefer_lowest_index() {
        let (head, _) = best_k_term(&sig(&[-2.0, 2.0, 2.0]), 2).unwrap();
        assert_eq!(head.entries(), &[-2.0, 2.0, 0.0]);
    }

    #[test]
    fn best_k_term_rejects_out_of_range_k() {
        assert!(best_k_term(&sig(&[1.0]), 0).is_err());
        assert!(best_k_term(&sig(&[1.0]), 2).is_err());
    }

    /// Brute-force check that the head is a best k-sparse approximation in
    /// l2: enumerate every support of size k and compare tail norms.
    fn assert_head_is_l2_optimal(x: &SparseSignal, k: usize) {
        let (_, tail) = best_k_term(x, k).unwrap();
        let tail_norm = tail.l2_norm();
        let n = x.len();
        let mut supports = vec![];
        enumerate_supports(n, k, &mut vec![], 0, &mut supports);
        for s in supports {
            let resid: f64 = (0..n)
                .filter(|i| !s.contains(i))
                .map(|i| x.entries()[i].powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(
                tail_norm <= resid + 1e-12,
                "support {s:?} beats best_k_term: {resid} < {tail_norm}"
            );
        }
    }

    fn enumerate_supports(n: usize, k: usize, cur: &mut Vec<usize>, from: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..n {
            cur.push(i);
            enumerate_supports(n, k, cur, i + 1, out);
            cur.pop();
        }
    }

    #[test]
    fn best_k_term_matches_enumeration_with_ties() {
        let x = sig(&[1.0, -1.0, 0.5, 1.0, -0.5, 0.25, 0.0, 1.0]);
        for k in 1..=3 {
            assert_head_is_l2_optimal(&x, k);
        }
    }

    proptest! {
        #[test]
        fn best_k_term_l2_optimal_prop(
            entries in proptest::collection::vec(-10.0f64..10.0, 4..10),
            k in 1usize..=3,
        ) {
            let x = sig(&entries);
            assert_head_is_l2_optimal(&x, k.min(x.len()));
        }

        #[test]
        fn weighted_norm_absolutely_homogeneous(
            entries in proptest::collection::vec(-5.0f64..5.0, 1..12),
            c in -4.0f64..4.0,
        ) {
            let n = entries.len();
            let x = sig(&entries);
            let t = IndexSet::from_zero_based(&[0], n).unwrap();
            let w = build_weights(&t, 0.5, n).unwrap();
            let scaled = sig(&entries.iter().map(|v| c * v).collect::<Vec<_>>());
            let lhs = weighted_l1_norm(&scaled, &w).unwrap();
            let rhs = c.abs() * weighted_l1_norm(&x, &w).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn support_stats_perfect_estimate() {
        let t0 = IndexSet::from_one_based(&[1, 2, 3], 8).unwrap();
        let s = support_stats(&t0, &t0, 3).unwrap();
        assert_eq!((s.rho, s.alpha, s.beta), (1.0, 1.0, 0.0));
    }

    #[test]
    fn support_stats_ninety_percent_accurate() {
        // |T̃| = k = 10 with 9 correct indices.
        let n = 40;
        let t0 = IndexSet::from_zero_based(&(0..10).collect::<Vec<_>>(), n).unwrap();
        let mut est: Vec<usize> = (0..9).collect();
        est.push(20);
        let tt = IndexSet::from_zero_based(&est, n).unwrap();
        let s = support_stats(&t0, &tt, 10).unwrap();
        assert_eq!((s.rho, s.alpha), (1.0, 0.9));
        assert!((s.beta - 0.1).abs() < 1e-15);
    }

    #[test]
    fn support_stats_empty_estimate_convention() {
        let t0 = IndexSet::from_one_based(&[1, 2], 6).unwrap();
        let s = support_stats(&t0, &IndexSet::empty(), 2).unwrap();
        assert_eq!((s.rho, s.alpha, s.beta), (0.0, 0.0, 1.0));
    }

    #[test]
    fn support_stats_cardinalities_are_exact() {
        let n = 30;
        let t0 = IndexSet::from_zero_based(&[0, 3, 5, 7, 9], n).unwrap();
        let tt = IndexSet::from_zero_based(&[3, 5, 11, 12], n).unwrap();
        let k = 5;
        let s = support_stats(&t0, &tt, k).unwrap();
        let card = tt.len() as f64;
        assert_eq!(s.alpha * s.rho * k as f64 + s.beta * s.rho * k as f64, card);
        assert_eq!((s.alpha * s.rho * k as f64).round() as usize, tt.intersection(&t0).len());
    }

    #[test]
    fn build_weights_examples() {
        let n = 4;
        let t = IndexSet::from_one_based(&[1, 2], n).unwrap();
        let w = build_weights(&t, 0.0, n).unwrap();
        assert_eq!(w.weights(), &[0.0, 0.0, 1.0, 1.0]);

        let w = build_weights(&IndexSet::from_one_based(&[2], 3).unwrap(), 0.5, 3).unwrap();
        assert_eq!(w.weights(), &[1.0, 0.5, 1.0]);

        let w = build_weights(&t, 1.0, n).unwrap();
        assert!(w.weights().iter().all(|&v| v == 1.0));

        assert!(build_weights(&t, 1.5, n).is_err());
        assert!(build_weights(&t, -0.1, n).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let x = sig(&[1.0, -2.0]);
        let t = IndexSet::empty();
        let ones = build_weights(&t, 1.0, 2).unwrap();
        assert_eq!(weighted_l1_norm(&x, &ones).unwrap(), 3.0);

        let mut w = build_weights(&IndexSet::from_one_based(&[1, 2], 2).unwrap(), 0.5, 2).unwrap();
        w.weights[1] = 0.0; // direct-sum example uses w = (0.5, 0)
        assert_eq!(weighted_l1_norm(&x, &w).unwrap(), 0.5);

        assert!(weighted_l1_norm(&sig(&[1.0]), &ones).is_err());
    }

    #[test]
    fn index_set_roundtrips_one_based_json() {
        let t = IndexSet::from_one_based(&[2, 5, 3], 6).unwrap();
        let j = serde_json::to_string(&t).unwrap();
        assert_eq!(j, r#"{"indices":[2,3,5]}"#);
        let back: IndexSet = serde_json::from_str(&j).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn signal_json_shape() {
        let x = sig(&[1.5, 0.0]);
        let j = serde_json::to_string(&x).unwrap();
        assert_eq!(j, r#"{"n":2,"entries":[1.5,0.0]}"#);
        let back: SparseSignal = serde_json::from_str(&j).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<SparseSignal>(r#"{"n":3,"entries":[1.0]}"#).is_err());
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 0.0, 2.25, 1e-3, 4.0]);
        let text = matrix_to_csv(&m);
        assert_eq!(text, "1,-0.5,0\n2.25,0.001,4\n");
        let back = parse_matrix_csv(&text).unwrap();
        assert_eq!(back, m);
        assert!(parse_matrix_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn check_cardinalities_rejects_fractional_sizes() {
        assert!(check_cardinalities(8, 1.0, 0.9).is_err()); // 7.2 correct indices
        assert_eq!(check_cardinalities(10, 1.0, 0.9).unwrap(), (10, 9));
        assert_eq!(check_cardinalities(12, 0.5, 0.5).unwrap(), (6, 3));
    }

    #[test]
    fn instance_records_zero_columns() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0]);
        let inst =
            ProblemInstance::new(a, DVector::from_column_slice(&[1.0, 2.0]), NoiseSet::L2Ball, 0.0)
                .unwrap();
        assert_eq!(inst.zero_columns, vec![1]);
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(ProblemInstance::new(a, DVector::from_column_slice(&[1.0]), NoiseSet::L2Ball, -1.0).is_err());
    }
}
