use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{AffineExpr, SocProgram, SolveResult, SolveStatus};
use crate::netmodel::DEFAULT_ZERO_TOL;

pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;

/// Solves a [`SocProgram`]. Implementations must be deterministic and must
/// report breakdowns through [`SolveStatus::Failure`] instead of panicking.
pub trait ConicSolver: Send + Sync {
    fn solve(&self, prog: &SocProgram, tol: f64) -> SolveResult;
}

/// Interior-point backend.
#[derive(Debug, Clone)]
pub struct ClarabelSolver {
    pub max_iter: u32,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        ClarabelSolver { max_iter: 200 }
    }
}

/// Solves with the default backend.
pub fn solve(prog: &SocProgram, tol: f64) -> SolveResult {
    ClarabelSolver::default().solve(prog, tol)
}

/// Rows of `A x + s = b`, `s` in the cone product.
#[derive(Default)]
struct StandardForm {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl StandardForm {
    /// Appends a slack row `s_i = expr(x)`.
    fn push_slack(&mut self, expr: &AffineExpr) {
        let r = self.b.len();
        for &(j, a) in &expr.terms {
            self.rows.push(r);
            self.cols.push(j);
            self.vals.push(-a);
        }
        self.b.push(expr.constant);
    }

    fn push_cone(&mut self, head: &AffineExpr, tail: &[AffineExpr]) {
        self.push_slack(head);
        for e in tail {
            self.push_slack(e);
        }
        self.cones.push(if tail.is_empty() {
            SupportedConeT::NonnegativeConeT(1)
        } else {
            SupportedConeT::SecondOrderConeT(1 + tail.len())
        });
    }

    fn from_program(prog: &SocProgram) -> Self {
        let mut sf = StandardForm::default();
        if !prog.equalities.is_empty() {
            for e in &prog.equalities {
                sf.push_slack(e);
            }
            sf.cones.push(SupportedConeT::ZeroConeT(prog.equalities.len()));
        }
        for c in &prog.cones {
            sf.push_cone(&c.head, &c.tail);
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for c in &prog.rotated {
            // 2uw >= ||z||^2  <=>  ||(z, (u - w)/sqrt2)|| <= (u + w)/sqrt2
            let head = combine(&c.u, &c.w, r, r);
            let mut tail = c.tail.clone();
            tail.push(combine(&c.u, &c.w, r, -r));
            sf.push_cone(&head, &tail);
        }
        sf
    }
}

fn combine(a: &AffineExpr, b: &AffineExpr, ca: f64, cb: f64) -> AffineExpr {
    let mut terms: Vec<(usize, f64)> = a.terms.iter().map(|&(i, v)| (i, ca * v)).collect();
    terms.extend(b.terms.iter().map(|&(i, v)| (i, cb * v)));
    AffineExpr {
        terms,
        constant: ca * a.constant + cb * b.constant,
    }
}

fn failure(elapsed: Duration) -> SolveResult {
    SolveResult {
        status: SolveStatus::Failure,
        x: None,
        beamformer: None,
        objective: f64::NAN,
        achieved_tol: f64::INFINITY,
        solve_time: elapsed,
        iterations: 0,
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, prog: &SocProgram, tol: f64) -> SolveResult {
        let start = Instant::now();
        if !prog.is_well_formed() {
            return failure(start.elapsed());
        }
        let n = prog.num_vars();
        let sf = StandardForm::from_program(prog);
        let m = sf.b.len();
        let a = CscMatrix::new_from_triplets(m, n, sf.rows, sf.cols, sf.vals);
        let p = CscMatrix::zeros((n, n));
        let settings = DefaultSettings {
            verbose: false,
            max_iter: self.max_iter,
            tol_gap_abs: tol,
            tol_gap_rel: tol,
            tol_feas: tol,
            ..DefaultSettings::default()
        };
        let Ok(mut solver) = DefaultSolver::new(&p, &prog.objective, &a, &sf.b, &sf.cones, settings)
        else {
            return failure(start.elapsed());
        };
        solver.solve();

        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => SolveStatus::Inaccurate,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            _ => SolveStatus::Failure,
        };
        let info = &solver.info;
        let achieved_tol = info.res_primal.max(info.res_dual).max(info.gap_rel.min(info.gap_abs));
        let primal_ok = sol.x.iter().all(|v| v.is_finite());
        let (x, beamformer) = if matches!(status, SolveStatus::Optimal | SolveStatus::Inaccurate) && primal_ok {
            let bf = prog.layout.beamformer(&sol.x, DEFAULT_ZERO_TOL);
            (Some(sol.x.clone()), Some(bf))
        } else {
            (None, None)
        };
        let status = if x.is_none() && matches!(status, SolveStatus::Optimal | SolveStatus::Inaccurate) {
            SolveStatus::Failure
        } else {
            status
        };
        SolveResult {
            status,
            objective: if x.is_some() { prog.objective_value(&sol.x) } else { f64::NAN },
            x,
            beamformer,
            achieved_tol,
            solve_time: start.elapsed(),
            iterations: sol.iterations,
        }
    }
}
