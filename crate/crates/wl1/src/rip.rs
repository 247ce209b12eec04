//! Restricted isometry constants: exact small-scale computation, Monte Carlo
//! lower bounds, and recovery certification.
//!
//! The RIC of order k is the smallest δ with
//! `(1−δ)‖x‖² ≤ ‖Ax‖² ≤ (1+δ)‖x‖²` over all k-sparse x, i.e. the maximum over
//! supports S, |S| = k, of `max(λmax(A_Sᵀ A_S) − 1, 1 − λmin(A_Sᵀ A_S))`.
//! Non-integer orders use the smallest integer strictly above (`δ_k :=
//! δ_⌈k⌉`), so integral orders are left untouched.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{ric_threshold, GeometryParams};
use crate::error::{Error, Result};
use crate::model::IndexSet;

/// Default cap on the number of supports an exact enumeration may visit.
pub const DEFAULT_ENUM_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RicMode {
    Exact,
    LowerBound,
}

/// Extremal support achieving the reported δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicWitness {
    pub support: IndexSet,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicResult {
    pub k_eff: usize,
    pub delta: f64,
    pub mode: RicMode,
    pub witness: RicWitness,
}

/// Applies the ceiling rule: non-integer orders round up, integers stay.
pub fn effective_order(k: f64) -> Result<usize> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::param(format!("order k = {k} must be positive")));
    }
    let eff = if k.fract() == 0.0 { k } else { k.ceil() };
    Ok(eff as usize)
}

/// C(n, k) saturating at `u128::MAX`.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// δ contribution of one support: extreme-eigenvalue deviation of the Gram
/// block from the identity. Returns (delta, achieving eigenvalue).
fn support_delta(gram: &DMatrix<f64>, support: &[usize]) -> (f64, f64) {
    let k = support.len();
    let block = DMatrix::from_fn(k, k, |i, j| gram[(support[i], support[j])]);
    let eig = SymmetricEigen::new(block);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in eig.eigenvalues.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    if hi - 1.0 >= 1.0 - lo {
        (hi - 1.0, hi)
    } else {
        (1.0 - lo, lo)
    }
}

/// Advances `support` to the next lexicographic k-combination of `0..n`.
/// Returns false when the last combination was already reached.
fn next_combination(support: &mut [usize], n: usize) -> bool {
    let k = support.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if support[i] < n - k + i {
            support[i] += 1;
            for j in i + 1..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The combination of `0..n` with the given lexicographic rank.
fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut support = Vec::with_capacity(k);
    let mut x = 0usize;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let count = binomial(n - x - 1, remaining);
            if rank < count {
                support.push(x);
                x += 1;
                break;
            }
            rank -= count;
            x += 1;
        }
    }
    support
}

struct ChunkMax {
    delta: f64,
    eigenvalue: f64,
    support: Vec<usize>,
}

fn scan_chunk(gram: &DMatrix<f64>, n: usize, k: usize, start: u128, len: u64) -> ChunkMax {
    let mut support = unrank_combination(n, k, start);
    let mut best = ChunkMax {
        delta: f64::NEG_INFINITY,
        eigenvalue: f64::NAN,
        support: support.clone(),
    };
    for i in 0..len {
        let (delta, eig) = support_delta(gram, &support);
        // Ties resolve to the lexicographically smallest support so the
        // result is identical regardless of chunking.
        if delta > best.delta || (delta == best.delta && support < best.support) {
            best = ChunkMax {
                delta,
                eigenvalue: eig,
                support: support.clone(),
            };
        }
        if i + 1 < len && !next_combination(&mut support, n) {
            break;
        }
    }
    best
}

/// Exact RIC by full support enumeration with the default budget.
pub fn exact_ric(a: &DMatrix<f64>, k: f64) -> Result<RicResult> {
    exact_ric_with_budget(a, k, DEFAULT_ENUM_BUDGET)
}

/// Exact RIC by full support enumeration.
///
/// Errors with [`Error::Budget`] when `C(N, ⌈k⌉)` exceeds `budget`; callers
/// hitting that limit should fall back to [`mc_ric_lower_bound`] (which can
/// refute but never certify).
pub fn exact_ric_with_budget(a: &DMatrix<f64>, k: f64, budget: u64) -> Result<RicResult> {
    let n = a.ncols();
    let k_eff = effective_order(k)?;
    if k_eff > n {
        return Err(Error::param(format!(
            "order {k_eff} exceeds the number of columns {n}"
        )));
    }
    let total = binomial(n, k_eff);
    if total > budget as u128 {
        return Err(Error::Budget(format!(
            "C({n}, {k_eff}) = {total} supports exceed the budget {budget}; \
             use mc_ric_lower_bound for a refutation-only estimate"
        )));
    }
    let total = total as u64;
    let gram = a.transpose() * a;

    let chunk: u64 = 8192;
    let chunks: Vec<(u128, u64)> = (0..total.div_ceil(chunk))
        .map(|c| {
            let start = c * chunk;
            (start as u128, chunk.min(total - start))
        })
        .collect();
    let best = chunks
        .into_par_iter()
        .map(|(start, len)| scan_chunk(&gram, n, k_eff, start, len))
        .reduce(
            || ChunkMax {
                delta: f64::NEG_INFINITY,
                eigenvalue: f64::NAN,
                support: vec![usize::MAX],
            },
            |x, y| {
                if y.delta > x.delta || (y.delta == x.delta && y.support < x.support) {
                    y
                } else {
                    x
                }
            },
        );

    Ok(RicResult {
        k_eff,
        delta: best.delta.max(0.0),
        mode: RicMode::Exact,
        witness: RicWitness {
            support: IndexSet::from_zero_based(&best.support, n)?,
            eigenvalue: best.eigenvalue,
        },
    })
}

/// Lower bound on the RIC from uniformly sampled supports.
///
/// Deterministic given `seed`; the returned δ never exceeds the exact value.
pub fn mc_ric_lower_bound(a: &DMatrix<f64>, k: f64, trials: usize, seed: u64) -> Result<RicResult> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let n = a.ncols();
    let k_eff = effective_order(k)?;
    if k_eff > n {
        return Err(Error::param(format!(
            "order {k_eff} exceeds the number of columns {n}"
        )));
    }
    let gram = a.transpose() * a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for _ in 0..trials {
        let (sampled, _) = pool.partial_shuffle(&mut rng, k_eff);
        let mut support = sampled.to_vec();
        support.sort_unstable();
        let (delta, eig) = support_delta(&gram, &support);
        let better = match &best {
            None => true,
            Some((d, _, s)) => delta > *d || (delta == *d && support < *s),
        };
        if better {
            best = Some((delta, eig, support));
        }
    }
    let (delta, eigenvalue, support) = best.unwrap();
    Ok(RicResult {
        k_eff,
        delta: delta.max(0.0),
        mode: RicMode::LowerBound,
        witness: RicWitness {
            support: IndexSet::from_zero_based(&support, n)?,
            eigenvalue,
        },
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub enum_budget: u64,
    /// Monte Carlo supports sampled for a cheap refutation before committing
    /// to full enumeration; 0 disables the shortcut.
    pub refute_trials: usize,
    pub refute_seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            enum_budget: DEFAULT_ENUM_BUDGET,
            refute_trials: 512,
            refute_seed: 0x5eed,
        }
    }
}

/// Outcome of checking `δ_tk < δ_t^ω` for a concrete matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub delta: f64,
    pub threshold: f64,
    pub certified: bool,
    pub margin: f64,
    pub mode: RicMode,
    pub k_eff: usize,
}

/// Certifies the recovery condition for `A` at sparsity `k` and geometry `g`.
///
/// Certification requires an exact δ; a Monte Carlo lower bound at or above
/// the threshold refutes without enumerating, but can never certify.
pub fn certify_recovery(a: &DMatrix<f64>, k: usize, g: &GeometryParams) -> Result<Certification> {
    certify_recovery_with(a, k, g, &CertifyOptions::default())
}

pub fn certify_recovery_with(
    a: &DMatrix<f64>,
    k: usize,
    g: &GeometryParams,
    opts: &CertifyOptions,
) -> Result<Certification> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let threshold = ric_threshold(g)?;
    let order = g.t * k as f64;
    if opts.refute_trials > 0 {
        let mc = mc_ric_lower_bound(a, order, opts.refute_trials, opts.refute_seed)?;
        if mc.delta >= threshold {
            return Ok(Certification {
                delta: mc.delta,
                threshold,
                certified: false,
                margin: threshold - mc.delta,
                mode: RicMode::LowerBound,
                k_eff: mc.k_eff,
            });
        }
    }
    let exact = exact_ric_with_budget(a, order, opts.enum_budget)?;
    Ok(Certification {
        delta: exact.delta,
        threshold,
        certified: exact.delta < threshold,
        margin: threshold - exact.delta,
        mode: RicMode::Exact,
        k_eff: exact.k_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) / (rows as f64).sqrt()
        })
    }

    fn orthonormal_cols(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let m = random_matrix(n, k, seed);
        let qr = m.qr();
        qr.q()
    }

    #[test]
    fn orthonormal_columns_have_zero_ric() {
        let a = orthonormal_cols(8, 5, 1);
        for k in 1..=3 {
            let r = exact_ric(&a, k as f64).unwrap();
            assert!(r.delta < 1e-12, "k={k}: delta={}", r.delta);
        }
    }

    #[test]
    fn scaled_orthonormal_columns_give_scaling_delta() {
        let c = 1.3;
        let a = orthonormal_cols(9, 6, 2) * c;
        let r = exact_ric(&a, 2.0).unwrap();
        assert_relative_eq!(r.delta, c * c - 1.0, max_relative = 1e-12);
    }

    /// Independent oracle: closed-form extreme eigenvalues for 1x1/2x2 Gram
    /// blocks and the trigonometric formula for 3x3, over a plain
    /// double/triple loop.
    fn brute_force_ric(a: &DMatrix<f64>, k: usize) -> f64 {
        let n = a.ncols();
        let g = a.transpose() * a;
        let dev = |lo: f64, hi: f64| (hi - 1.0).max(1.0 - lo);
        let mut best: f64 = 0.0;
        match k {
            1 => {
                for i in 0..n {
                    best = best.max((g[(i, i)] - 1.0).abs());
                }
            }
            2 => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let (p, q, r) = (g[(i, i)], g[(j, j)], g[(i, j)]);
                        let mean = 0.5 * (p + q);
                        let disc = (0.25 * (p - q) * (p - q) + r * r).sqrt();
                        best = best.max(dev(mean - disc, mean + disc));
                    }
                }
            }
            3 => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        for l in (j + 1)..n {
                            let idx = [i, j, l];
                            let m = DMatrix::from_fn(3, 3, |r, c| g[(idx[r], idx[c])]);
                            let (lo, hi) = sym3_extremes(&m);
                            best = best.max(dev(lo, hi));
                        }
                    }
                }
            }
            _ => unreachable!("oracle covers k <= 3"),
        }
        best
    }

    /// Closed-form eigenvalue extremes of a symmetric 3x3 matrix.
    fn sym3_extremes(m: &DMatrix<f64>) -> (f64, f64) {
        let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        let q = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]) / 3.0;
        let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2)
            + 2.0 * p1;
        if p2 <= 0.0 {
            return (q, q);
        }
        let p = (p2 / 6.0).sqrt();
        let b = (m - DMatrix::identity(3, 3) * q) / p;
        let det_b = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        (lo, hi)
    }

    #[test]
    fn exact_matches_brute_force_oracle() {
        for seed in 0..4u64 {
            let a = random_matrix(8, 16, 10 + seed);
            for k in 1..=3usize {
                let r = exact_ric(&a, k as f64).unwrap();
                let oracle = brute_force_ric(&a, k);
                assert_relative_eq!(r.delta, oracle, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn ceiling_rule_is_exact() {
        let a = random_matrix(8, 12, 3);
        let r_frac = exact_ric(&a, 2.5).unwrap();
        let r_int = exact_ric(&a, 3.0).unwrap();
        assert_eq!(r_frac.k_eff, 3);
        assert_eq!(r_frac.delta, r_int.delta);
        assert_eq!(r_frac.witness, r_int.witness);
    }

    #[test]
    fn ric_monotone_in_order() {
        for seed in 0..6u64 {
            let a = random_matrix(7, 11, 20 + seed);
            let mut last = 0.0;
            for k in 1..=4 {
                let d = exact_ric(&a, k as f64).unwrap().delta;
                assert!(d >= last - 1e-14, "k={k}: {d} < {last}");
                last = d;
            }
        }
    }

    #[test]
    fn witness_reproduces_delta() {
        let a = random_matrix(8, 14, 5);
        let r = exact_ric(&a, 3.0).unwrap();
        let gram = a.transpose() * a;
        let support: Vec<usize> = r.witness.support.iter().collect();
        let (delta, eig) = support_delta(&gram, &support);
        assert_relative_eq!(delta, r.delta, max_relative = 1e-12);
        assert_relative_eq!(eig, r.witness.eigenvalue, max_relative = 1e-12);
    }

    #[test]
    fn mc_never_exceeds_exact_and_is_deterministic() {
        let a = random_matrix(8, 12, 7);
        let exact = exact_ric(&a, 2.0).unwrap();
        for seed in 0..5 {
            let mc = mc_ric_lower_bound(&a, 2.0, 40, seed).unwrap();
            assert!(mc.delta <= exact.delta + 1e-14);
            let again = mc_ric_lower_bound(&a, 2.0, 40, seed).unwrap();
            assert_eq!(mc, again);
        }
        // Exhaustive sampling on a tiny instance reaches the exact value.
        let tiny = random_matrix(4, 5, 8);
        let exact = exact_ric(&tiny, 2.0).unwrap();
        let mc = mc_ric_lower_bound(&tiny, 2.0, 4000, 1).unwrap();
        assert_relative_eq!(mc.delta, exact.delta, max_relative = 1e-12);
    }

    #[test]
    fn budget_violation_is_typed() {
        let a = random_matrix(4, 30, 9);
        match exact_ric_with_budget(&a, 10.0, 1000) {
            Err(Error::Budget(msg)) => assert!(msg.contains("mc_ric_lower_bound")),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn unrank_agrees_with_iteration() {
        let n = 9;
        let k = 4;
        let mut support: Vec<usize> = (0..k).collect();
        let mut rank: u128 = 0;
        loop {
            assert_eq!(unrank_combination(n, k, rank), support, "rank {rank}");
            rank += 1;
            if !next_combination(&mut support, n) {
                break;
            }
        }
        assert_eq!(rank, binomial(n, k));
    }

    #[test]
    fn certify_orthonormal_always_passes() {
        let a = orthonormal_cols(10, 6, 11);
        let g = GeometryParams::new(2.0, 0.5, 1.0, 1.0).unwrap();
        let cert = certify_recovery(&a, 2, &g).unwrap();
        assert!(cert.certified);
        assert_eq!(cert.mode, RicMode::Exact);
        assert!(cert.delta < 1e-12);
        assert_relative_eq!(cert.margin, cert.threshold, max_relative = 1e-10);
    }

    #[test]
    fn certify_refutes_by_lower_bound_without_enumeration() {
        // Strongly scaled matrix: any single support already violates the
        // threshold, so the MC prepass refutes. The tiny budget would make
        // full enumeration fail, proving the shortcut never enumerated.
        let a = random_matrix(6, 24, 12) * 10.0;
        let g = GeometryParams::new(2.0, 1.0, 1.0, 0.5).unwrap();
        let opts = CertifyOptions {
            enum_budget: 1,
            refute_trials: 64,
            refute_seed: 3,
        };
        let cert = certify_recovery_with(&a, 3, &g, &opts).unwrap();
        assert!(!cert.certified);
        assert_eq!(cert.mode, RicMode::LowerBound);
        assert!(cert.margin < 0.0);
    }

    #[test]
    fn effective_order_examples() {
        assert_eq!(effective_order(3.0).unwrap(), 3);
        assert_eq!(effective_order(2.5).unwrap(), 3);
        assert_eq!(effective_order(0.2).unwrap(), 1);
        assert!(effective_order(0.0).is_err());
    }
}
