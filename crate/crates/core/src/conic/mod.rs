//! Real-valued second-order-cone programs over vectorized complex
//! beamformers, the builders for every convex subproblem of the pipeline,
//! and the solver contract.
//!
//! Beamformer coordinates are stored `(Re, Im)` interleaved per antenna,
//! groups in BS-major order. Auxiliary epigraph variables follow the
//! beamformer block.

mod backend;
mod build;
mod embed;

use std::time::Duration;

use crate::netmodel::{BeamformingSolution, Complex, Dims, Task, TaskSet};

pub use backend::{solve, ClarabelSolver, ConicSolver, DEFAULT_SOLVER_TOL};
pub use build::{
    build_cb, build_feasibility, build_feasibility_with, build_mixed_l12, build_power_constraints,
    build_qos_constraints, build_refinement, build_refinement_with, build_stage1, ZeroBlocks,
};
pub use embed::{realify, to_complex, to_real, RealChannel};

/// Real or imaginary half of a complex coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Re,
    Im,
}

/// What a real variable of a program stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRole {
    Beam { task: Task, antenna: usize, part: Part },
    /// Epigraph of `||v_nk||`.
    GroupNorm(Task),
    /// Epigraph of `||v - v_prev||^2`.
    ProxEpigraph,
    /// Epigraph of `sum ||v_nk||^2 / eta_n`.
    PowerEpigraph,
}

/// Maps real variable indices to beamformer coordinates and auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    dims: Dims,
    active: Vec<Task>,
    offsets: Vec<Option<usize>>,
    aux: Vec<VarRole>,
}

impl VariableLayout {
    /// Layout over the beamformer groups not in `inactive`.
    pub fn new(dims: Dims, inactive: &TaskSet) -> Self {
        let mut offsets = vec![None; dims.num_groups()];
        let mut active = Vec::new();
        for task in dims.tasks() {
            if !inactive.contains(task) {
                offsets[dims.group_index(task)] = Some(2 * dims.antennas * active.len());
                active.push(task);
            }
        }
        VariableLayout {
            dims,
            active,
            offsets,
            aux: Vec::new(),
        }
    }

    pub fn full(dims: Dims) -> Self {
        Self::new(dims, &TaskSet::new())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn active_groups(&self) -> &[Task] {
        &self.active
    }

    pub fn is_active(&self, task: Task) -> bool {
        self.offsets[self.dims.group_index(task)].is_some()
    }

    pub fn num_beam_vars(&self) -> usize {
        2 * self.dims.antennas * self.active.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_beam_vars() + self.aux.len()
    }

    /// Index of `Re`/`Im` of antenna `antenna` of group `task`, if active.
    pub fn beam_index(&self, task: Task, antenna: usize, part: Part) -> Option<usize> {
        self.offsets[self.dims.group_index(task)].map(|o| {
            o + 2 * antenna
                + match part {
                    Part::Re => 0,
                    Part::Im => 1,
                }
        })
    }

    /// Real indices of an active group, `2L` entries.
    pub fn group_indices(&self, task: Task) -> Option<std::ops::Range<usize>> {
        self.offsets[self.dims.group_index(task)].map(|o| o + 0..o + 2 * self.dims.antennas)
    }

    pub(crate) fn push_aux(&mut self, role: VarRole) -> usize {
        self.aux.push(role);
        self.num_vars() - 1
    }

    pub fn role(&self, index: usize) -> Option<VarRole> {
        let beam = self.num_beam_vars();
        if index < beam {
            let per_group = 2 * self.dims.antennas;
            let task = self.active[index / per_group];
            let within = index % per_group;
            Some(VarRole::Beam {
                task,
                antenna: within / 2,
                part: if within % 2 == 0 { Part::Re } else { Part::Im },
            })
        } else {
            self.aux.get(index - beam).copied()
        }
    }

    pub fn aux_index(&self, role: VarRole) -> Option<usize> {
        self.aux
            .iter()
            .position(|r| *r == role)
            .map(|i| self.num_beam_vars() + i)
    }

    /// Regroups the beamformer block of a primal vector; inactive groups are zero.
    pub fn beamformer(&self, x: &[f64], zero_tol: f64) -> BeamformingSolution {
        let dims = self.dims;
        let mut v = vec![Complex::new(0.0, 0.0); dims.total_len()];
        for &task in &self.active {
            let range = self.group_indices(task).expect("active group");
            let g = dims.group_index(task);
            for (a, pair) in x[range].chunks_exact(2).enumerate() {
                v[g * dims.antennas + a] = Complex::new(pair[0], pair[1]);
            }
        }
        BeamformingSolution::new(dims, v, zero_tol).expect("layout matches dims")
    }

    /// Beamformer coordinates of `sol` in this layout's order (inactive
    /// groups dropped).
    pub fn beam_values(&self, sol: &BeamformingSolution) -> Vec<f64> {
        self.active
            .iter()
            .flat_map(|&t| sol.group(t).iter().flat_map(|z| [z.re, z.im]))
            .collect()
    }
}

/// Sparse affine function `a^T x + c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(index: usize, coeff: f64) -> Self {
        AffineExpr {
            terms: vec![(index, coeff)],
            constant: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(i, a)| a * x[*i]).sum::<f64>()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self
    }
}

/// `||tail|| <= head`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub head: AffineExpr,
    pub tail: Vec<AffineExpr>,
}

impl SocConstraint {
    pub fn dim(&self) -> usize {
        1 + self.tail.len()
    }

    /// `||tail|| - head`; nonpositive when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let t: f64 = self.tail.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        t - self.head.eval(x)
    }
}

/// `2 u w >= ||tail||^2` with `u, w >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedConeConstraint {
    pub u: AffineExpr,
    pub w: AffineExpr,
    pub tail: Vec<AffineExpr>,
}

impl RotatedConeConstraint {
    pub fn dim(&self) -> usize {
        2 + self.tail.len()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let t: f64 = self.tail.iter().map(|e| e.eval(x).powi(2)).sum();
        let (u, w) = (self.u.eval(x), self.w.eval(x));
        (t - 2.0 * u * w).max(-u).max(-w)
    }
}

/// Which subproblem a program encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramKind {
    ReweightedProx,
    Feasibility,
    Refinement,
}

/// Linear objective over SOC, rotated-SOC and linear equality constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SocProgram {
    pub kind: ProgramKind,
    pub layout: VariableLayout,
    pub objective: Vec<f64>,
    pub cones: Vec<SocConstraint>,
    pub rotated: Vec<RotatedConeConstraint>,
    /// Each expression must vanish.
    pub equalities: Vec<AffineExpr>,
}

impl SocProgram {
    pub fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    /// Checks that every referenced index exists and the objective length matches.
    pub fn is_well_formed(&self) -> bool {
        let n = self.num_vars();
        let ok_expr = |e: &AffineExpr| e.terms.iter().all(|(i, a)| *i < n && a.is_finite());
        self.objective.len() == n
            && self
                .cones
                .iter()
                .all(|c| ok_expr(&c.head) && c.tail.iter().all(ok_expr))
            && self
                .rotated
                .iter()
                .all(|c| ok_expr(&c.u) && ok_expr(&c.w) && c.tail.iter().all(ok_expr))
            && self.equalities.iter().all(ok_expr)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest constraint violation at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let cones = self.cones.iter().map(|c| c.violation(x));
        let rotated = self.rotated.iter().map(|c| c.violation(x));
        let eqs = self.equalities.iter().map(|e| e.eval(x).abs());
        cones.chain(rotated).chain(eqs).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Inaccurate,
    Failure,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Full primal vector, including auxiliaries.
    pub x: Option<Vec<f64>>,
    pub beamformer: Option<BeamformingSolution>,
    pub objective: f64,
    pub achieved_tol: f64,
    pub solve_time: Duration,
    pub iterations: u32,
}

impl SolveResult {
    pub fn has_primal(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::Inaccurate)
    }
}
