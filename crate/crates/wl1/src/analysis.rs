//! Constructive sparse polytope decomposition and the shifted power
//! inequality checker.
//!
//! The polytope `T(α, k) = {v : ‖v‖_∞ ≤ α, ‖v‖₁ ≤ kα}` admits a convex
//! decomposition `v = Σ λᵢ uᵢ` into atoms `uᵢ ∈ U(α, k, v)`: k-sparse,
//! supported inside `supp(v)`, with `‖uᵢ‖₁ = ‖v‖₁` and `‖uᵢ‖_∞ ≤ α`.
//! Conformance is defined entirely by [`verify_decomposition`]; the peeling
//! construction below is one algorithm meeting that contract with at most
//! `N` parts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{top_k_indices, SparseSignal};

const WEIGHT_TOL: f64 = 1e-12;
const SCALAR_TOL: f64 = 1e-12;
const RECON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPart {
    pub lambda: f64,
    pub atom: SparseSignal,
}

/// A convex combination of k-sparse atoms reconstructing a polytope member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexSparseDecomposition {
    pub parts: Vec<DecompositionPart>,
}

impl ConvexSparseDecomposition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Per-invariant worst violations found by [`verify_decomposition`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// |Σλ − 1| plus any negative-weight excess.
    pub convex_weights: f64,
    /// Largest atom support size beyond k.
    pub sparsity: usize,
    /// Number of atom entries outside supp(v).
    pub support: usize,
    /// Worst |‖u‖₁ − ‖v‖₁|.
    pub l1_mismatch: f64,
    /// Worst ‖u‖_∞ excess over α.
    pub linf_excess: f64,
    /// Worst componentwise |Σλu − v|.
    pub reconstruction: f64,
}

impl ViolationReport {
    pub fn ok(&self, alpha: f64, l1_scale: f64) -> bool {
        self.convex_weights <= WEIGHT_TOL
            && self.sparsity == 0
            && self.support == 0
            && self.l1_mismatch <= SCALAR_TOL * (1.0 + l1_scale)
            && self.linf_excess <= SCALAR_TOL * alpha
            && self.reconstruction <= RECON_TOL
    }
}

/// Checks every invariant of a decomposition of `v` in `T(α, k)`.
pub fn verify_decomposition(
    v: &SparseSignal,
    dec: &ConvexSparseDecomposition,
    alpha: f64,
    k: usize,
) -> (bool, ViolationReport) {
    let mut report = ViolationReport::default();
    let n = v.len();
    let v1 = v.l1_norm();

    let mut weight_sum = 0.0;
    for p in &dec.parts {
        weight_sum += p.lambda;
        if p.lambda < 0.0 {
            report.convex_weights = report.convex_weights.max(-p.lambda);
        }
        if p.lambda > 1.0 {
            report.convex_weights = report.convex_weights.max(p.lambda - 1.0);
        }
    }
    report.convex_weights = report.convex_weights.max((weight_sum - 1.0).abs());

    let mut recon = vec![0.0; n];
    for p in &dec.parts {
        let u = p.atom.entries();
        if u.len() != n {
            report.support = usize::MAX;
            return (false, report);
        }
        let nnz = u.iter().filter(|&&x| x != 0.0).count();
        report.sparsity = report.sparsity.max(nnz.saturating_sub(k));
        let outside = u
            .iter()
            .zip(v.entries())
            .filter(|(&ui, &vi)| ui != 0.0 && vi == 0.0)
            .count();
        report.support += outside;
        report.l1_mismatch = report.l1_mismatch.max((p.atom.l1_norm() - v1).abs());
        report.linf_excess = report
            .linf_excess
            .max((p.atom.linf_norm() - alpha).max(0.0));
        for (r, &ui) in recon.iter_mut().zip(u) {
            *r += p.lambda * ui;
        }
    }
    report.reconstruction = recon
        .iter()
        .zip(v.entries())
        .fold(0.0, |m, (r, &vi)| m.max((r - vi).abs()));

    let ok = report.ok(alpha, v1);
    (ok, report)
}

/// Pins `Σ atom` to `target` without breaching the `alpha` cap: shrinks
/// uniformly when over, fills the largest cap slacks when under.
fn pin_l1_mass(atom: &mut [f64], alpha: f64, target: f64) {
    let mass: f64 = atom.iter().sum();
    if mass > target && mass > 0.0 {
        let fix = target / mass;
        for v in atom.iter_mut() {
            *v *= fix;
        }
    } else if mass < target {
        let mut deficit = target - mass;
        let mut order: Vec<usize> = (0..atom.len()).filter(|&i| atom[i] > 0.0).collect();
        order.sort_by(|&i, &j| (alpha - atom[j]).partial_cmp(&(alpha - atom[i])).unwrap());
        for i in order {
            let add = (alpha - atom[i]).max(0.0).min(deficit);
            atom[i] += add;
            deficit -= add;
            if deficit <= 0.0 {
                break;
            }
        }
    }
}

/// Decomposes `v ∈ T(α, k)` into a convex combination of k-sparse atoms.
///
/// Peeling construction: while more than k entries remain, redistribute the
/// residual's l1 mass onto its k largest entries (capped at α) and peel the
/// largest convex weight that keeps the residual inside the scaled polytope.
/// Every step either zeroes a residual entry or saturates one at the cap, so
/// the loop terminates with at most `N` parts.
pub fn sparse_decompose(
    v: &SparseSignal,
    alpha: f64,
    k: usize,
) -> Result<ConvexSparseDecomposition> {
    if !(alpha > 0.0) {
        return Err(Error::param(format!("alpha = {alpha} must be positive")));
    }
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let n = v.len();
    let memb_tol = 1e-12 * (1.0 + alpha);
    if v.linf_norm() > alpha + memb_tol {
        return Err(Error::param(format!(
            "v is outside T(alpha, k): linf norm {} exceeds alpha = {alpha}",
            v.linf_norm()
        )));
    }
    if v.l1_norm() > k as f64 * alpha + memb_tol * k as f64 {
        return Err(Error::param(format!(
            "v is outside T(alpha, k): l1 norm {} exceeds k*alpha = {}",
            v.l1_norm(),
            k as f64 * alpha
        )));
    }

    let signs: Vec<f64> = v.entries().iter().map(|&x| x.signum()).collect();
    let mut g: Vec<f64> = v.entries().iter().map(|&x| x.abs()).collect();
    let mut theta = 1.0;
    let total = g.iter().sum::<f64>();

    let signed = |mag: &[f64]| -> Result<SparseSignal> {
        SparseSignal::new(mag.iter().zip(&signs).map(|(m, s)| m * s).collect())
    };

    let mut parts: Vec<DecompositionPart> = Vec::new();
    // Each iteration zeroes or caps a residual coordinate; 2N + 8 can only be
    // hit through a numerical invariant breach.
    let max_iters = 2 * n + 8;
    for _ in 0..max_iters {
        let support: Vec<usize> = (0..n).filter(|&i| g[i] > 0.0).collect();
        if support.len() <= k {
            // Residual is already an atom (scaled by the remaining weight).
            // Dividing by a small remaining weight amplifies accumulated
            // drift, so clamp at the cap and pin the l1 mass to the total.
            let mut atom: Vec<f64> = g.iter().map(|&x| (x / theta).min(alpha)).collect();
            pin_l1_mass(&mut atom, alpha, total);
            parts.push(DecompositionPart {
                lambda: theta,
                atom: signed(&atom)?,
            });
            let dec = ConvexSparseDecomposition { parts };
            debug_assert!(dec.len() <= n);
            return Ok(dec);
        }

        let scaled: Vec<f64> = g.iter().map(|&x| x / theta).collect();
        let head = top_k_indices(&scaled, k);
        let atom_mag = waterfill(&scaled, &head, alpha, total)?;

        // Largest peel weight keeping the residual in (1−λ)·T(α, k):
        // head entries must stay nonnegative, off-head entries below the cap.
        let mut lambda = 1.0f64;
        for &i in &head {
            if atom_mag[i] > 0.0 {
                lambda = lambda.min(scaled[i] / atom_mag[i]);
            }
        }
        for i in 0..n {
            if g[i] > 0.0 && !head.contains(&i) {
                lambda = lambda.min(1.0 - scaled[i] / alpha);
            }
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Construction(format!(
                "decomposition peel weight {lambda} left (0, 1)"
            )));
        }

        let lambda_abs = theta * lambda;
        for &i in &head {
            g[i] -= lambda_abs * atom_mag[i];
        }
        theta -= lambda_abs;
        // Snap coordinates that hit their bound to keep the support strictly
        // shrinking in floating point.
        let zero_snap = 1e-13 * (1.0 + alpha) * theta;
        for &i in &head {
            if g[i] <= zero_snap {
                g[i] = 0.0;
            }
        }
        parts.push(DecompositionPart {
            lambda: lambda_abs,
            atom: signed(&atom_mag)?,
        });
    }
    Err(Error::Construction(
        "decomposition did not terminate within the part bound".into(),
    ))
}

/// Spreads l1 mass `target` over the `head` entries of `scaled`,
/// proportionally inflated and capped at `alpha`.
fn waterfill(scaled: &[f64], head: &[usize], alpha: f64, target: f64) -> Result<Vec<f64>> {
    let mut vals: Vec<f64> = head.iter().map(|&i| scaled[i]).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let head_sum: f64 = vals.iter().sum();
    let k = vals.len();

    // Find the inflation factor c with Σ min(c·v, α) = target. With j entries
    // capped the segment equation is j·α + c·rest = target.
    let mut capped_sum = 0.0;
    let mut c = None;
    for j in 0..k {
        let rest: f64 = head_sum - capped_sum;
        if rest <= 0.0 {
            break;
        }
        let cand = (target - j as f64 * alpha) / rest;
        let upper = alpha / vals[j];
        let lower = if j == 0 { 1.0 } else { alpha / vals[j - 1] };
        if cand <= upper * (1.0 + 1e-12) && cand >= lower * (1.0 - 1e-12) {
            c = Some((cand, j));
            break;
        }
        capped_sum += vals[j];
    }
    let mut out = vec![0.0; scaled.len()];
    match c {
        Some((c, _)) => {
            for &i in head {
                out[i] = (c * scaled[i]).min(alpha);
            }
        }
        None => {
            // All entries cap: only consistent with target = k·α.
            if (target - k as f64 * alpha).abs() > 1e-9 * (1.0 + target) {
                return Err(Error::Construction(format!(
                    "waterfilling failed: target {target} vs fully capped mass {}",
                    k as f64 * alpha
                )));
            }
            for &i in head {
                out[i] = alpha;
            }
        }
    }
    pin_l1_mass(&mut out, alpha, target);
    Ok(out)
}

/// Shifted power inequality: for nonincreasing nonnegative `a` with
/// `Σ_{i≤k} a_i + λ ≥ Σ_{i>k} a_i` and exponent `α ≥ 1`,
///
/// `Σ_{j>k} a_j^α ≤ k·(ᵅ√(Σ_{i≤k} a_i^α / k) + λ/k)^α`.
///
/// Returns `(lhs, rhs, holds)`.
pub fn shifted_power_inequality(
    a: &[f64],
    k: usize,
    lambda: f64,
    alpha_exp: f64,
) -> Result<(f64, f64, bool)> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param(format!("lambda = {lambda} must be nonnegative")));
    }
    if !(alpha_exp >= 1.0) {
        return Err(Error::param(format!("exponent {alpha_exp} must be at least 1")));
    }
    if a.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::param("entries must be nonnegative"));
    }
    if a.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::param("entries must be sorted nonincreasing"));
    }
    let head: f64 = a.iter().take(k).sum();
    let tail: f64 = a.iter().skip(k).sum();
    if head + lambda + 1e-12 * (1.0 + tail) < tail {
        return Err(Error::param(format!(
            "hypothesis violated: head {head} + lambda {lambda} < tail {tail}"
        )));
    }
    let lhs: f64 = a.iter().skip(k).map(|&x| x.powf(alpha_exp)).sum();
    let head_pow: f64 = a.iter().take(k).map(|&x| x.powf(alpha_exp)).sum();
    let kf = k as f64;
    let rhs = kf * ((head_pow / kf).powf(1.0 / alpha_exp) + lambda / kf).powf(alpha_exp);
    let holds = lhs <= rhs * (1.0 + 1e-12);
    Ok((lhs, rhs, holds))
}
