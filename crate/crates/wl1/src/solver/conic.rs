//! Conic reformulations of the weighted l1 programs.
//!
//! Both programs minimize `Σ w_i s_i` over `(x, s)` with `−s ≤ x ≤ s`,
//! differing only in the residual constraint block:
//!
//! * l2 ball, ε > 0: `(ε, y − Ax)` in a second-order cone;
//! * equality (ε = 0, both noise sets): rank-reduced rows `Ãx = ỹ` in the
//!   zero cone;
//! * Dantzig box, ε > 0: `‖Aᵀ(y − Ax)‖_∞ ≤ ε` as nonnegative rows.
//!
//! The interior-point backend is Clarabel; everything it returns is
//! re-validated by this crate's own certificate layer before a solve is
//! reported optimal.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
    SupportedConeT, ZeroConeT,
};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solver::SolverOptions;

/// Residual-block shape handed to the conic backend.
pub(crate) enum ResidualBlock {
    Soc {
        a: DMatrix<f64>,
        y: DVector<f64>,
        eps: f64,
    },
    Zero {
        eq_lhs: DMatrix<f64>,
        eq_rhs: DVector<f64>,
    },
    Box {
        gram: DMatrix<f64>,
        aty: DVector<f64>,
        eps: f64,
    },
}

pub(crate) struct ConicSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Candidate dual vectors for the residual block, sign-ambiguous; the
    /// certificate layer tries each and keeps the best valid bound.
    pub dual_candidates: Vec<DVector<f64>>,
}

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    fn new() -> Self {
        Triplets {
            rows: vec![],
            cols: vec![],
            vals: vec![],
        }
    }

    fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
    }

    fn push_dense_block(&mut self, r0: usize, c0: usize, m: &DMatrix<f64>) {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                self.push(r0 + i, c0 + j, m[(i, j)]);
            }
        }
    }
}

/// Solves `min Σ w_i s_i` subject to `|x| ≤ s` and the residual block.
pub(crate) fn solve_conic(
    n_signal: usize,
    w: &[f64],
    block: &ResidualBlock,
    opts: &SolverOptions,
) -> Result<ConicSolution> {
    let nvar = 2 * n_signal;
    let mut t = Triplets::new();
    let mut b: Vec<f64> = Vec::new();

    // |x| ≤ s as two nonnegative blocks: s − x ≥ 0 and s + x ≥ 0.
    for i in 0..n_signal {
        t.push(i, i, 1.0);
        t.push(i, n_signal + i, -1.0);
    }
    for i in 0..n_signal {
        t.push(n_signal + i, i, -1.0);
        t.push(n_signal + i, n_signal + i, -1.0);
    }
    b.extend(std::iter::repeat(0.0).take(2 * n_signal));

    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let base = 2 * n_signal;
    let residual_rows;
    match block {
        ResidualBlock::Soc { a, y, eps } => {
            let n_meas = a.nrows();
            b.push(*eps);
            for r in 0..n_meas {
                b.push(y[r]);
            }
            t.push_dense_block(base + 1, 0, a);
            cones.push(NonnegativeConeT(2 * n_signal));
            cones.push(SecondOrderConeT(n_meas + 1));
            residual_rows = base + 1..base + 1 + n_meas;
        }
        ResidualBlock::Zero { eq_lhs, eq_rhs } => {
            let r = eq_lhs.nrows();
            b.extend(eq_rhs.iter());
            t.push_dense_block(base, 0, eq_lhs);
            cones.push(NonnegativeConeT(2 * n_signal));
            cones.push(ZeroConeT(r));
            residual_rows = base..base + r;
        }
        ResidualBlock::Box { gram, aty, eps } => {
            let m = gram.nrows();
            for r in 0..m {
                b.push(aty[r] + eps);
            }
            for r in 0..m {
                b.push(eps - aty[r]);
            }
            t.push_dense_block(base, 0, gram);
            t.push_dense_block(base + m, 0, &(-gram));
            cones.push(NonnegativeConeT(2 * n_signal + 2 * m));
            residual_rows = base..base + 2 * m;
        }
    }

    let total_rows = b.len();
    let a_csc = CscMatrix::new_from_triplets(total_rows, nvar, t.rows, t.cols, t.vals);
    let p = CscMatrix::<f64>::zeros((nvar, nvar));
    let mut q = vec![0.0; nvar];
    q[n_signal..].copy_from_slice(w);

    let settings = DefaultSettings {
        verbose: false,
        max_iter: opts.max_iters.min(u32::MAX as usize) as u32,
        tol_gap_abs: (opts.opt_tol * 1e-2).max(1e-12),
        tol_gap_rel: (opts.opt_tol * 1e-2).max(1e-12),
        tol_feas: (opts.feas_tol * 1e-2).max(1e-12),
        ..Default::default()
    };

    let mut solver = DefaultSolver::new(&p, &q, &a_csc, &b, &cones, settings)
        .map_err(|e| Error::Solver(format!("backend rejected the program: {e:?}")))?;
    solver.solve();
    let sol = solver.solution;

    let x = DVector::from_iterator(n_signal, sol.x[..n_signal].iter().copied());
    let raw: Vec<f64> = residual_rows.map(|r| sol.z[r]).collect();
    let nu = DVector::from_vec(raw);
    let dual_candidates = match block {
        // Box duals enter as the difference of the two one-sided multipliers.
        ResidualBlock::Box { gram, .. } => {
            let m = gram.nrows();
            let diff =
                DVector::from_fn(m, |i, _| nu[i] - nu[m + i]);
            vec![diff.clone(), -diff]
        }
        _ => vec![nu.clone(), -nu],
    };

    Ok(ConicSolution {
        x,
        iterations: sol.iterations as usize,
        status: sol.status,
        dual_candidates,
    })
}
