//! Weighted l1 minimization under l2-ball and Dantzig-selector constraints.
//!
//! `solve_weighted_bp` handles `min ‖x‖₁,w s.t. ‖y − Ax‖₂ ≤ ε` and
//! `solve_weighted_ds` handles `min ‖x‖₁,w s.t. ‖Aᵀ(y − Ax)‖_∞ ≤ ε`, both
//! including the noiseless case `ε = 0` natively (as rank-reduced equality
//! constraints, not as a limit). Every `Optimal` report carries a
//! weak-duality certificate computed by this crate, independent of the
//! interior-point backend.

mod certificate;
mod conic;

pub use certificate::Certificate;

use clarabel::solver::SolverStatus;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{weighted_l1_norm, IndexSet, NoiseSet, ProblemInstance, SparseSignal, WeightVector};
use certificate::{kkt_candidate, DualTemplate, PenaltyNorm};
use conic::{solve_conic, ConicSolution, ResidualBlock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Constraint-violation tolerance for an `Optimal` status.
    pub feas_tol: f64,
    /// Relative objective-gap tolerance for an `Optimal` status.
    pub opt_tol: f64,
    pub max_iters: usize,
    /// Solves are pure functions of their inputs; kept as an explicit
    /// assertion of the contract.
    pub deterministic: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-8,
            max_iters: 50_000,
            deterministic: true,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("feas_tol", self.feas_tol), ("opt_tol", self.opt_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::param(format!("{name} = {v} outside (0, 1e-2]")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

/// Solver output with the optimality evidence used to grade it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub x_hat: SparseSignal,
    /// `‖x̂‖₁,w`
    pub objective: f64,
    pub feas_violation: f64,
    pub certificate: Certificate,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Rank-reduced equality system equivalent to `Ax = y` (l2 kind) or
/// `AᵀAx = Aᵀy` (Dantzig kind), plus the least-squares residual of `y`
/// against the range of `A`.
struct ReducedSystem {
    eq_lhs: DMatrix<f64>,
    eq_rhs: DVector<f64>,
    min_residual: f64,
}

fn reduce_rows(a: &DMatrix<f64>, y: &DVector<f64>) -> ReducedSystem {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.max();
    let tol = smax * f64::EPSILON * (a.nrows().max(a.ncols()) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let ur = u.columns(0, rank);
    let eq_lhs = vt.rows(0, rank).into_owned();
    let uty = ur.transpose() * y;
    // Σ V_rᵀ x = U_rᵀ y scaled to orthonormal rows: V_rᵀ x = Σ⁻¹ U_rᵀ y.
    let eq_rhs = DVector::from_fn(rank, |i, _| uty[i] / svd.singular_values[i]);
    let min_residual = (y - &ur * &uty).norm();
    ReducedSystem {
        eq_lhs,
        eq_rhs,
        min_residual,
    }
}

fn infeasible_report(inst: &ProblemInstance, residual: f64) -> Result<RecoveryReport> {
    Ok(RecoveryReport {
        x_hat: SparseSignal::zeros(inst.a.ncols())?,
        objective: 0.0,
        feas_violation: residual,
        certificate: Certificate {
            primal_residual: residual,
            dual_bound: 0.0,
            gap: 0.0,
            dual_residual: 0.0,
        },
        iterations: 0,
        status: SolveStatus::Infeasible,
    })
}

/// Solves the weighted basis-pursuit program over the l2 ball.
pub fn solve_weighted_bp(
    inst: &ProblemInstance,
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<RecoveryReport> {
    opts.validate()?;
    check_instance(inst, w, NoiseSet::L2Ball)?;
    let reduced = reduce_rows(&inst.a, &inst.y);
    let feas_slack = opts.feas_tol * (1.0 + inst.y.norm());
    if reduced.min_residual > inst.radius + feas_slack {
        return infeasible_report(inst, reduced.min_residual - inst.radius);
    }
    let (block, tpl) = if inst.radius == 0.0 {
        (
            ResidualBlock::Zero {
                eq_lhs: reduced.eq_lhs.clone(),
                eq_rhs: reduced.eq_rhs.clone(),
            },
            DualTemplate {
                mat: reduced.eq_lhs,
                rhs: reduced.eq_rhs,
                eps: 0.0,
                norm: PenaltyNorm::L2,
            },
        )
    } else {
        (
            ResidualBlock::Soc {
                a: inst.a.clone(),
                y: inst.y.clone(),
                eps: inst.radius,
            },
            DualTemplate {
                mat: inst.a.clone(),
                rhs: inst.y.clone(),
                eps: inst.radius,
                norm: PenaltyNorm::L2,
            },
        )
    };
    let sol = solve_conic(inst.a.ncols(), w.weights(), &block, opts)?;
    grade_solution(inst, w, opts, sol, tpl)
}

/// Solves the weighted Dantzig-selector program.
pub fn solve_weighted_ds(
    inst: &ProblemInstance,
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<RecoveryReport> {
    opts.validate()?;
    check_instance(inst, w, NoiseSet::DantzigBox)?;
    let (block, tpl) = if inst.radius == 0.0 {
        // A^T A x = A^T y is always consistent; same reduced rows as the
        // noiseless l2 program but without a consistency requirement.
        let reduced = reduce_rows(&inst.a, &inst.y);
        (
            ResidualBlock::Zero {
                eq_lhs: reduced.eq_lhs.clone(),
                eq_rhs: reduced.eq_rhs.clone(),
            },
            DualTemplate {
                mat: reduced.eq_lhs,
                rhs: reduced.eq_rhs,
                eps: 0.0,
                norm: PenaltyNorm::L1,
            },
        )
    } else {
        let gram = inst.a.transpose() * &inst.a;
        let aty = inst.a.transpose() * &inst.y;
        (
            ResidualBlock::Box {
                gram: gram.clone(),
                aty: aty.clone(),
                eps: inst.radius,
            },
            DualTemplate {
                mat: gram,
                rhs: aty,
                eps: inst.radius,
                norm: PenaltyNorm::L1,
            },
        )
    };
    let sol = solve_conic(inst.a.ncols(), w.weights(), &block, opts)?;
    grade_solution(inst, w, opts, sol, tpl)
}

/// Dispatches on the instance's noise set.
pub fn solve(
    inst: &ProblemInstance,
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<RecoveryReport> {
    match inst.noise_set {
        NoiseSet::L2Ball => solve_weighted_bp(inst, w, opts),
        NoiseSet::DantzigBox => solve_weighted_ds(inst, w, opts),
    }
}

fn check_instance(inst: &ProblemInstance, w: &WeightVector, expect: NoiseSet) -> Result<()> {
    if inst.noise_set != expect {
        return Err(Error::param(format!(
            "instance noise set {:?} does not match the solver entry point",
            inst.noise_set
        )));
    }
    if w.len() != inst.a.ncols() {
        return Err(Error::param(format!(
            "weight length {} does not match N = {}",
            w.len(),
            inst.a.ncols()
        )));
    }
    Ok(())
}

/// Constraint violation of a candidate point under the instance's noise set.
pub fn feasibility_violation(inst: &ProblemInstance, x: &DVector<f64>) -> f64 {
    let r = &inst.y - &inst.a * x;
    match inst.noise_set {
        NoiseSet::L2Ball => (r.norm() - inst.radius).max(0.0),
        NoiseSet::DantzigBox => {
            let c = inst.a.transpose() * r;
            (c.iter().fold(0.0_f64, |m, v| m.max(v.abs())) - inst.radius).max(0.0)
        }
    }
}

fn grade_solution(
    inst: &ProblemInstance,
    w: &WeightVector,
    opts: &SolverOptions,
    sol: ConicSolution,
    tpl: DualTemplate,
) -> Result<RecoveryReport> {
    if matches!(
        sol.status,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible
    ) {
        return infeasible_report(inst, feasibility_violation(inst, &DVector::zeros(inst.a.ncols())));
    }
    let x_hat = SparseSignal::from_dvector(&sol.x)?;
    let objective = weighted_l1_norm(&x_hat, w)?;
    let feas_violation = feasibility_violation(inst, &sol.x);

    let mut candidates = sol.dual_candidates;
    if let Some(kkt) = kkt_candidate(&tpl, w.weights(), &sol.x) {
        candidates.push(-&kkt);
        candidates.push(kkt);
    }
    let (dual_bound, dual_residual) = tpl.certified_bound(w.weights(), &candidates);
    let gap = objective - dual_bound;

    let optimal = feas_violation <= opts.feas_tol && gap <= opts.opt_tol * (1.0 + objective);
    Ok(RecoveryReport {
        x_hat,
        objective,
        feas_violation,
        certificate: Certificate {
            primal_residual: feas_violation,
            dual_bound,
            gap,
            dual_residual,
        },
        iterations: sol.iterations,
        status: if optimal {
            SolveStatus::Optimal
        } else {
            SolveStatus::MaxIters
        },
    })
}

/// Standalone optimality certificate for a candidate solution.
///
/// Reconstructs a dual from the active-set conditions at `x_hat`, forces it
/// into the weighted box, and reports the resulting primal residual, dual
/// lower bound, and gap. A near-optimal `x_hat` yields a near-zero gap; a
/// perturbed one yields a visibly positive gap.
pub fn optimality_certificate(
    inst: &ProblemInstance,
    w: &WeightVector,
    x_hat: &SparseSignal,
) -> Result<Certificate> {
    if x_hat.len() != inst.a.ncols() {
        return Err(Error::param("x_hat length does not match the instance"));
    }
    let x = x_hat.as_dvector();
    let tpl = match inst.noise_set {
        NoiseSet::L2Ball => {
            if inst.radius == 0.0 {
                let reduced = reduce_rows(&inst.a, &inst.y);
                DualTemplate {
                    mat: reduced.eq_lhs,
                    rhs: reduced.eq_rhs,
                    eps: 0.0,
                    norm: PenaltyNorm::L2,
                }
            } else {
                DualTemplate {
                    mat: inst.a.clone(),
                    rhs: inst.y.clone(),
                    eps: inst.radius,
                    norm: PenaltyNorm::L2,
                }
            }
        }
        NoiseSet::DantzigBox => {
            if inst.radius == 0.0 {
                let reduced = reduce_rows(&inst.a, &inst.y);
                DualTemplate {
                    mat: reduced.eq_lhs,
                    rhs: reduced.eq_rhs,
                    eps: 0.0,
                    norm: PenaltyNorm::L1,
                }
            } else {
                DualTemplate {
                    mat: inst.a.transpose() * &inst.a,
                    rhs: inst.a.transpose() * &inst.y,
                    eps: inst.radius,
                    norm: PenaltyNorm::L1,
                }
            }
        }
    };
    let mut candidates = Vec::new();
    if let Some(kkt) = kkt_candidate(&tpl, w.weights(), &x) {
        candidates.push(-&kkt);
        candidates.push(kkt);
    }
    // For an active l2 ball the optimal dual is parallel to the residual.
    if inst.noise_set == NoiseSet::L2Ball && inst.radius > 0.0 {
        let r = &inst.y - &inst.a * &x;
        if r.norm() > 0.0 {
            candidates.push(r);
        }
    }
    let (dual_bound, dual_residual) = tpl.certified_bound(w.weights(), &candidates);
    let objective = weighted_l1_norm(x_hat, w)?;
    Ok(Certificate {
        primal_residual: feasibility_violation(inst, &x),
        dual_bound,
        gap: objective - dual_bound,
        dual_residual,
    })
}

/// Both sides of the minimality cone inequality for `h = x̂ − x`:
///
/// `‖h_{T₀ᶜ}‖₁ ≤ ω‖h_{T₀}‖₁ + (1−ω)‖h_{(T₀∪T̃)∖T̃α}‖₁
///               + 2(ω‖x_{T₀ᶜ}‖₁ + (1−ω)‖x_{T̃ᶜ∩T₀ᶜ}‖₁)`
///
/// which every optimal x̂ of the weighted program satisfies. Useful as a
/// diagnostic: a violated inequality certifies that x̂ is not a minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeDiagnostic {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn cone_diagnostic(
    x: &SparseSignal,
    x_hat: &SparseSignal,
    t0: &IndexSet,
    t_tilde: &IndexSet,
    omega: f64,
    k: usize,
) -> Result<ConeDiagnostic> {
    if x.len() != x_hat.len() {
        return Err(Error::param("signal lengths differ"));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::param(format!("omega = {omega} outside [0, 1]")));
    }
    if t0.len() > k {
        return Err(Error::param(format!(
            "|T0| = {} exceeds k = {}",
            t0.len(),
            k
        )));
    }
    let n = x.len();
    let h = SparseSignal::new(
        x_hat
            .entries()
            .iter()
            .zip(x.entries())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let t0c = t0.complement(n);
    let t_alpha = t0.intersection(t_tilde);
    let union_minus = t0.union(t_tilde).difference(&t_alpha);
    let off_both = t_tilde.complement(n).intersection(&t0c);
    let lhs = h.l1_norm_on(&t0c);
    let rhs = omega * h.l1_norm_on(t0)
        + (1.0 - omega) * h.l1_norm_on(&union_minus)
        + 2.0 * (omega * x.l1_norm_on(&t0c) + (1.0 - omega) * x.l1_norm_on(&off_both));
    Ok(ConeDiagnostic {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_weights;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_instance(x_star: &[f64], noise: NoiseSet) -> (ProblemInstance, WeightVector) {
        let n = x_star.len();
        let a = DMatrix::identity(n, n);
        let y = DVector::from_column_slice(x_star);
        let inst = ProblemInstance::new(a, y, noise, 0.0).unwrap();
        let w = build_weights(&IndexSet::empty(), 1.0, n).unwrap();
        (inst, w)
    }

    fn gaussian_instance(
        n: usize,
        nn: usize,
        k: usize,
        seed: u64,
        noise: NoiseSet,
        eps: f64,
    ) -> (ProblemInstance, SparseSignal, IndexSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, nn, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) / (n as f64).sqrt()
        });
        let mut x = vec![0.0; nn];
        let mut pool: Vec<usize> = (0..nn).collect();
        for i in 0..k {
            let j = rng.random_range(0..pool.len());
            let idx = pool.swap_remove(j);
            x[idx] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let _ = i;
        }
        let xs = SparseSignal::new(x).unwrap();
        let y = &a * xs.as_dvector();
        let t0 = xs.support(0.0);
        (ProblemInstance::new(a, y, noise, eps).unwrap(), xs, t0)
    }

    #[test]
    fn identity_instance_is_recovered_exactly() {
        let x_star = [1.5, -2.0, 0.0, 0.25];
        for noise in [NoiseSet::L2Ball, NoiseSet::DantzigBox] {
            let (inst, w) = identity_instance(&x_star, noise);
            let rep = solve(&inst, &w, &SolverOptions::default()).unwrap();
            assert_eq!(rep.status, SolveStatus::Optimal, "{noise:?}");
            for (a, b) in rep.x_hat.entries().iter().zip(&x_star) {
                assert!((a - b).abs() < 1e-8, "{noise:?}: {a} vs {b}");
            }
            assert!(rep.certificate.gap <= 1e-8 * (1.0 + rep.objective));
        }
    }

    #[test]
    fn ds_with_huge_radius_returns_zero() {
        let (inst, _, _) = gaussian_instance(6, 10, 2, 3, NoiseSet::DantzigBox, 0.0);
        let aty = inst.a.transpose() * &inst.y;
        let eps = 1.5 * aty.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let inst = ProblemInstance::new(inst.a.clone(), inst.y.clone(), NoiseSet::DantzigBox, eps)
            .unwrap();
        let w = build_weights(&IndexSet::empty(), 1.0, 10).unwrap();
        let rep = solve_weighted_ds(&inst, &w, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!(rep.objective < 1e-8);
        assert!(rep.x_hat.as_dvector().norm() < 1e-7);
    }

    #[test]
    fn noiseless_gaussian_instances_recover_with_weights() {
        let mut hits = 0;
        for seed in 0..10 {
            let (inst, x_star, t0) = gaussian_instance(24, 48, 4, seed, NoiseSet::L2Ball, 0.0);
            // 3 of 4 support indices known: alpha = 0.75, rho = 1.
            let known: Vec<usize> = t0.iter().take(3).collect();
            let mut est = known;
            est.push((0..48).find(|i| !t0.contains(*i)).unwrap());
            let t_tilde = IndexSet::from_zero_based(&est, 48).unwrap();
            let w = build_weights(&t_tilde, 0.5, 48).unwrap();
            let rep = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
            let err = (rep.x_hat.as_dvector() - x_star.as_dvector()).norm();
            if rep.status == SolveStatus::Optimal && err <= 1e-6 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "only {hits}/10 noiseless recoveries");
    }

    #[test]
    fn omega_zero_stays_well_posed() {
        let (inst, x_star, t0) = gaussian_instance(20, 30, 3, 11, NoiseSet::L2Ball, 0.0);
        let t_tilde = IndexSet::from_zero_based(&t0.iter().collect::<Vec<_>>(), 30).unwrap();
        let w = build_weights(&t_tilde, 0.0, 30).unwrap();
        let rep = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        let err = (rep.x_hat.as_dvector() - x_star.as_dvector()).norm();
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn scaling_equivariance_of_the_argmin() {
        for &c in &[0.5, 3.0] {
            let (inst, _, _) = gaussian_instance(12, 20, 3, 17, NoiseSet::L2Ball, 0.05);
            let w = build_weights(&IndexSet::empty(), 1.0, 20).unwrap();
            let base = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
            let scaled_inst = ProblemInstance::new(
                &inst.a * c,
                &inst.y * c,
                NoiseSet::L2Ball,
                inst.radius * c,
            )
            .unwrap();
            let scaled = solve_weighted_bp(&scaled_inst, &w, &SolverOptions::default()).unwrap();
            let diff = (base.x_hat.as_dvector() - scaled.x_hat.as_dvector()).norm();
            assert!(diff < 1e-6, "c={c}: argmin moved by {diff}");
        }
    }

    #[test]
    fn infeasible_l2_instances_are_flagged() {
        // Zero matrix cannot reach y at all.
        let a = DMatrix::zeros(3, 5);
        let y = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let w = build_weights(&IndexSet::empty(), 1.0, 5).unwrap();
        for eps in [0.0, 0.5] {
            let inst = ProblemInstance::new(a.clone(), y.clone(), NoiseSet::L2Ball, eps).unwrap();
            let rep = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
            assert_eq!(rep.status, SolveStatus::Infeasible, "eps={eps}");
        }
        // With a big enough ball the zero point becomes feasible.
        let inst = ProblemInstance::new(a, y, NoiseSet::L2Ball, 2.0).unwrap();
        let rep = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!(rep.objective < 1e-9);
    }

    #[test]
    fn certificate_is_tight_at_the_identity_optimum() {
        let x_star = [2.0, -1.0, 0.0, 0.5, 0.0];
        for noise in [NoiseSet::L2Ball, NoiseSet::DantzigBox] {
            let (inst, w) = identity_instance(&x_star, noise);
            let x_hat = SparseSignal::new(x_star.to_vec()).unwrap();
            let cert = optimality_certificate(&inst, &w, &x_hat).unwrap();
            assert!(cert.gap.abs() <= 1e-10, "{noise:?}: gap {}", cert.gap);
            assert!(cert.primal_residual <= 1e-12);
        }
    }

    #[test]
    fn certificate_detects_suboptimality() {
        let x_star = [2.0, -1.0, 0.0, 0.5, 0.0];
        let (inst, w) = identity_instance(&x_star, NoiseSet::L2Ball);
        let perturbed = SparseSignal::new(vec![2.01, -0.99, 0.01, 0.51, -0.01]).unwrap();
        let cert = optimality_certificate(&inst, &w, &perturbed).unwrap();
        assert!(cert.gap > 1e-3 || cert.primal_residual > 1e-3);
    }

    #[test]
    fn cone_diagnostic_trivial_and_fuzzed() {
        let x = SparseSignal::new(vec![1.0, 0.0, -2.0, 0.0]).unwrap();
        let t0 = x.support(0.0);
        let tt = IndexSet::from_zero_based(&[0, 1], 4).unwrap();
        let d = cone_diagnostic(&x, &x, &t0, &tt, 0.5, 2).unwrap();
        assert_eq!(d.lhs, 0.0);
        assert!(d.holds);

        for seed in 0..20 {
            let (inst, x_star, t0) = gaussian_instance(16, 28, 3, 100 + seed, NoiseSet::L2Ball, 0.0);
            let est: Vec<usize> = t0.iter().take(2).chain(std::iter::once(5)).collect();
            let t_tilde = IndexSet::from_zero_based(&est, 28).unwrap();
            let w = build_weights(&t_tilde, 0.4, 28).unwrap();
            let rep = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
            let d = cone_diagnostic(&x_star, &rep.x_hat, &t0, &t_tilde, 0.4, 3).unwrap();
            assert!(d.holds, "seed {seed}: lhs={} rhs={}", d.lhs, d.rhs);
        }
    }

    #[test]
    fn cone_diagnostic_flags_inflated_off_support_mass() {
        // h concentrated off T0 with no compressibility slack: lhs > rhs.
        let n = 6;
        let x = SparseSignal::new(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let bogus = SparseSignal::new(vec![1.0, 1.0, 5.0, 5.0, 5.0, 5.0]).unwrap();
        let t0 = x.support(0.0);
        let t_tilde = IndexSet::from_zero_based(&[0, 1], n).unwrap();
        let d = cone_diagnostic(&x, &bogus, &t0, &t_tilde, 0.5, 2).unwrap();
        assert!(!d.holds);
    }

    #[test]
    fn rejects_mismatched_noise_set() {
        let (inst, w) = identity_instance(&[1.0, 2.0], NoiseSet::L2Ball);
        assert!(solve_weighted_ds(&inst, &w, &SolverOptions::default()).is_err());
        let bad = SolverOptions {
            opt_tol: 0.5,
            ..Default::default()
        };
        assert!(solve_weighted_bp(&inst, &w, &bad).is_err());
    }

    #[test]
    fn noisy_l2_solution_is_feasible_and_certified() {
        let (inst, x_star, _) = gaussian_instance(24, 40, 4, 23, NoiseSet::L2Ball, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let z = DVector::from_fn(24, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let eps = 0.05;
        let y = &inst.a * x_star.as_dvector() + z.normalize() * (0.99 * eps);
        let inst = ProblemInstance::new(inst.a.clone(), y, NoiseSet::L2Ball, eps).unwrap();
        let w = build_weights(&IndexSet::empty(), 1.0, 40).unwrap();
        let rep = solve_weighted_bp(&inst, &w, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!(rep.feas_violation <= 1e-8);
        assert!(rep.certificate.gap <= 1e-8 * (1.0 + rep.objective));
        assert!(rep.certificate.dual_bound > 0.0);
    }
}
