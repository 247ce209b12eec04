//! Closed-form recovery thresholds and stability constants.
//!
//! All quantities are driven by the derived geometry `(γ, d, a)` of a support
//! estimate with statistics `(ω, ρ, α)`:
//!
//! ```text
//! γ = ω + (1 − ω)·√(1 + ρ − 2αρ)
//! a = max(α, 1 − α)·ρ
//! d = 1                 if ω = 1
//!     1 − αρ + a        if 0 ≤ ω < 1
//! ```
//!
//! The recovery condition is `δ_tk < δ_t^ω = √((t−d)/(t−d+γ²))` for `t > d`,
//! with error amplification factors `D₀, D₁` (l2-ball noise) and `D'₀, D'₁`
//! (Dantzig-selector noise). The unweighted constants `C₀, C₁, C'₀, C'₁` and
//! the nonuniform-weight constants `C''₀, C''₁` with threshold `δ_a^ω` are
//! provided for comparison sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IndexSet, SparseSignal};

/// Relative tolerance for scalar formula comparisons in tests.
pub const FORMULA_RTOL: f64 = 1e-10;

/// Derived geometry that drives every threshold and constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    pub t: f64,
    pub omega: f64,
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub d: f64,
    pub a: f64,
}

impl GeometryParams {
    /// Validates the raw parameters and derives `(γ, d, a)`.
    ///
    /// `t > d` is not required here; threshold evaluation checks it.
    pub fn new(t: f64, omega: f64, rho: f64, alpha: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::param(format!("t = {t} must be positive")));
        }
        let gamma = gamma(omega, rho, alpha)?;
        let (d, a) = sparsity_d(omega, rho, alpha)?;
        Ok(GeometryParams {
            t,
            omega,
            rho,
            alpha,
            gamma,
            d,
            a,
        })
    }
}

fn check_ora(omega: f64, rho: f64, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::param(format!("omega = {omega} outside [0, 1]")));
    }
    if !(rho >= 0.0) {
        return Err(Error::param(format!("rho = {rho} must be nonnegative")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// `γ = ω + (1 − ω)·√(1 + ρ − 2αρ)`.
pub fn gamma(omega: f64, rho: f64, alpha: f64) -> Result<f64> {
    check_ora(omega, rho, alpha)?;
    let radicand = 1.0 + rho - 2.0 * alpha * rho;
    // Impossible for alpha ≤ 1, rho ≥ 0 up to rounding; guarded anyway.
    if radicand < -1e-12 {
        return Err(Error::param(format!(
            "negative radicand 1+rho-2*alpha*rho = {radicand}"
        )));
    }
    Ok(omega + (1.0 - omega) * radicand.max(0.0).sqrt())
}

/// Sparsity multiplier `d` and excess `a = max(α, β)·ρ`.
pub fn sparsity_d(omega: f64, rho: f64, alpha: f64) -> Result<(f64, f64)> {
    check_ora(omega, rho, alpha)?;
    let a = alpha.max(1.0 - alpha) * rho;
    let d = if omega == 1.0 { 1.0 } else { 1.0 - alpha * rho + a };
    Ok((d, a))
}

/// RIC threshold `δ_t^ω = √((t−d)/(t−d+γ²))`.
pub fn ric_threshold(g: &GeometryParams) -> Result<f64> {
    if g.t <= g.d {
        return Err(Error::domain(format!(
            "threshold undefined: t = {} must exceed d = {}",
            g.t, g.d
        )));
    }
    let td = g.t - g.d;
    Ok((td / (td + g.gamma * g.gamma)).sqrt())
}

/// Stability constants `(D₀, D₁)` for the l2-ball noise set.
///
/// Requires `0 ≤ δ < δ_t^ω`; past the threshold the constants diverge.
pub fn stability_constants_l2(g: &GeometryParams, delta: f64) -> Result<(f64, f64)> {
    let thr = ric_threshold(g)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::param(format!("delta = {delta} outside [0, 1)")));
    }
    if delta >= thr {
        return Err(Error::domain(format!(
            "constants diverge: delta = {delta} is not below the threshold {thr}"
        )));
    }
    let td = g.t - g.d;
    let g2 = g.gamma * g.gamma;
    let denom = (td + g2) * (thr - delta);
    let d0 = (2.0 * td * (td + g2) * (1.0 + delta)).sqrt() / denom;
    let d1 = (std::f64::consts::SQRT_2 * delta * g.gamma
        + ((td + g2) * (thr - delta) * delta).sqrt())
        / denom
        + 1.0 / g.d.sqrt();
    Ok((d0, d1))
}

/// Stability constants `(D'₀, D'₁)` for the Dantzig-selector noise set.
///
/// `D'₀` carries the `[[tk]]` factor; `D'₁ = D₁`.
pub fn stability_constants_ds(g: &GeometryParams, delta: f64, k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let (_, d1) = stability_constants_l2(g, delta)?;
    let thr = ric_threshold(g)?;
    let td = g.t - g.d;
    let g2 = g.gamma * g.gamma;
    let denom = (td + g2) * (thr - delta);
    let tk = bracket_int(g.t * k as f64)? as f64;
    let d0 = (2.0 * td * (td + g2) * tk).sqrt() / denom;
    Ok((d0, d1))
}

/// `[[ξ]]`: the integer satisfying `ξ ≤ [[ξ]] < ξ + 1`.
pub fn bracket_int(xi: f64) -> Result<u64> {
    if !(xi >= 0.0) {
        return Err(Error::param(format!("xi = {xi} must be nonnegative")));
    }
    let c = xi.ceil();
    Ok(c as u64)
}

/// The unweighted constants `(C₀, C₁, C'₀, C'₁)`.
///
/// Defined for `t > 1` and `δ < √((t−1)/t)`; `C'₁ = C₁`.
pub fn cz_constants(t: f64, delta: f64, k: usize) -> Result<(f64, f64, f64, f64)> {
    if !(t > 1.0) {
        return Err(Error::param(format!("t = {t} must exceed 1")));
    }
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let thr = ((t - 1.0) / t).sqrt();
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::param(format!("delta = {delta} outside [0, 1)")));
    }
    if delta >= thr {
        return Err(Error::domain(format!(
            "constants diverge: delta = {delta} is not below the threshold {thr}"
        )));
    }
    let denom = t * (thr - delta);
    let c0 = (2.0 * t * (t - 1.0) * (1.0 + delta)).sqrt() / denom;
    let c1 = (std::f64::consts::SQRT_2 * delta + (t * (thr - delta) * delta).sqrt()) / denom + 1.0;
    let c0_ds = (2.0 * t * t * (t - 1.0) * k as f64).sqrt() / denom;
    Ok((c0, c1, c0_ds, c1))
}

/// Comparison threshold `δ_a^ω = (a − γ²)/(a + γ²)`.
///
/// Nonpositive (but still well-defined) when `a ≤ γ²`.
pub fn fmsy_threshold(a: f64, omega: f64, rho: f64, alpha: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::param(format!("a = {a} must be nonnegative")));
    }
    let g = gamma(omega, rho, alpha)?;
    let g2 = g * g;
    Ok((a - g2) / (a + g2))
}

/// Comparison constants `(C''₀, C''₁)`.
pub fn fmsy_constants(
    a: f64,
    delta_ak: f64,
    delta_a1k: f64,
    omega: f64,
    rho: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::param(format!("a = {a} must be positive")));
    }
    for (name, d) in [("delta_ak", delta_ak), ("delta_(a+1)k", delta_a1k)] {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::param(format!("{name} = {d} outside [0, 1)")));
        }
    }
    let g = gamma(omega, rho, alpha)?;
    let ratio = g / a.sqrt();
    let denom = (1.0 - delta_a1k).sqrt() - ratio * (1.0 + delta_ak).sqrt();
    if denom <= 0.0 {
        return Err(Error::domain(format!(
            "constants diverge: denominator {denom} is nonpositive"
        )));
    }
    let c0 = (1.0 + ratio) / denom;
    let c1 = ((1.0 - delta_a1k).sqrt() + (1.0 + delta_ak).sqrt()) / (a.sqrt() * denom);
    Ok((c0, c1))
}

/// Comparison threshold `δ_2k < 1/(√2·γ + 1)`.
pub fn dirac_2k_threshold(omega: f64, rho: f64, alpha: f64) -> Result<f64> {
    let g = gamma(omega, rho, alpha)?;
    Ok(1.0 / (std::f64::consts::SQRT_2 * g + 1.0))
}

/// Noise-set kind selector shared by radii and error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    L2,
    Ds,
}

/// Gaussian-noise radius making the corresponding noise set hold with high
/// probability: `σ√(n + 2√(n·ln n))` for the l2 ball over n measurements,
/// `σ√(2·ln N)` for the Dantzig box over N columns. Natural logarithms.
pub fn gaussian_noise_radius(kind: BoundKind, dim: usize, sigma: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::param(format!("dimension {dim} must be at least 2")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::param(format!("sigma = {sigma} must be nonnegative")));
    }
    let d = dim as f64;
    Ok(match kind {
        BoundKind::L2 => sigma * (d + 2.0 * (d * d.ln()).sqrt()).sqrt(),
        BoundKind::Ds => sigma * (2.0 * d.ln()).sqrt(),
    })
}

/// Full right-hand side of the recovery error bound:
///
/// `D₀·(2ε) + D₁·2(ω‖x_{T₀ᶜ}‖₁ + (1−ω)‖x_{T̃ᶜ∩T₀ᶜ}‖₁)/√k`
///
/// with `(D'₀, D'₁)` in place of `(D₀, D₁)` for the Dantzig-selector kind.
pub fn error_bound_rhs(
    g: &GeometryParams,
    delta: f64,
    k: usize,
    eps: f64,
    x: &SparseSignal,
    t0: &IndexSet,
    t_tilde: &IndexSet,
    kind: BoundKind,
) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::param(format!("eps = {eps} must be nonnegative")));
    }
    let (d0, d1) = match kind {
        BoundKind::L2 => stability_constants_l2(g, delta)?,
        BoundKind::Ds => stability_constants_ds(g, delta, k)?,
    };
    let n = x.len();
    let t0c = t0.complement(n);
    let off_both = t_tilde.complement(n).intersection(&t0c);
    let tail = g.omega * x.l1_norm_on(&t0c) + (1.0 - g.omega) * x.l1_norm_on(&off_both);
    Ok(d0 * 2.0 * eps + d1 * 2.0 * tail / (k as f64).sqrt())
}

/// Column layout and parameters of a comparison sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub t: f64,
    pub rho: f64,
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub omega_steps: usize,
    /// When set, appends the `δ_a^ω, C''₀, C''₁` comparison columns.
    pub fmsy: Option<FmsyParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmsyParams {
    pub a: f64,
    pub delta_ak: f64,
    pub delta_a1k: f64,
}

/// One sweep row; `None` marks a diverged value (emitted as "inf").
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub alpha: f64,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.omega, r.alpha));
            for v in &r.values {
                match v {
                    Some(x) => out.push_str(&format!(",{x}")),
                    None => out.push_str(",inf"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Looks up a value column by header name at the row nearest to
    /// `(omega, alpha)`.
    pub fn value_at(&self, omega: f64, alpha: f64, column: &str) -> Option<f64> {
        let col = self.header.iter().position(|h| h == column)? - 2;
        self.rows
            .iter()
            .min_by(|a, b| {
                let da = (a.omega - omega).abs() + (a.alpha - alpha).abs();
                let db = (b.omega - omega).abs() + (b.alpha - alpha).abs();
                da.partial_cmp(&db).unwrap()
            })
            .and_then(|r| r.values[col])
    }
}

/// Evaluates the threshold/constant columns over an `(ω, α)` grid.
///
/// Diverged cells are emitted with an "inf" sentinel so tables stay
/// rectangular; library callers wanting hard failures use the individual
/// operations instead.
pub fn figure_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if spec.alphas.is_empty() || spec.omega_steps < 2 {
        return Err(Error::param(
            "sweep needs at least one alpha and two omega steps",
        ));
    }
    let mut header = vec![
        "omega".to_string(),
        "alpha".to_string(),
        "delta_t_omega".to_string(),
        "D0".to_string(),
        "D1".to_string(),
    ];
    if spec.fmsy.is_some() {
        header.extend(["delta_a_omega".to_string(), "C0pp".to_string(), "C1pp".to_string()]);
    }
    let mut rows = Vec::with_capacity(spec.alphas.len() * spec.omega_steps);
    for &alpha in &spec.alphas {
        for i in 0..spec.omega_steps {
            let omega = i as f64 / (spec.omega_steps - 1) as f64;
            let g = GeometryParams::new(spec.t, omega, spec.rho, alpha)?;
            let mut values = vec![
                ric_threshold(&g).ok(),
                stability_constants_l2(&g, spec.delta).ok().map(|c| c.0),
                stability_constants_l2(&g, spec.delta).ok().map(|c| c.1),
            ];
            if let Some(f) = &spec.fmsy {
                values.push(fmsy_threshold(f.a, omega, spec.rho, alpha).ok());
                let cpp = fmsy_constants(f.a, f.delta_ak, f.delta_a1k, omega, spec.rho, alpha).ok();
                values.push(cpp.map(|c| c.0));
                values.push(cpp.map(|c| c.1));
            }
            rows.push(SweepRow { omega, alpha, values });
        }
    }
    Ok(SweepTable { header, rows })
}
