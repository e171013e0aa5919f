use super::embed::{realify, RealChannel};
use super::{
    AffineExpr, Part, ProgramKind, RotatedConeConstraint, SocConstraint, SocProgram, VarRole,
    VariableLayout,
};
use crate::netmodel::{BeamformingSolution, ChannelRealization, NetworkConfig, Task, TaskSet};

/// How groups forced to zero are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroBlocks {
    /// Dropped from the variable vector.
    #[default]
    Eliminate,
    /// Kept as variables and pinned by equalities.
    Pin,
}

/// `(Re, Im)` of `h_k^H v_l` over the active groups `(n, l)` of the layout.
fn inner_exprs(rc: &RealChannel, layout: &VariableLayout, k: usize, l: usize) -> [AffineExpr; 2] {
    let dims = layout.dims();
    let mut re = AffineExpr::default();
    let mut im = AffineExpr::default();
    for n in 0..dims.num_bs {
        let Some(range) = layout.group_indices(Task::new(n, l)) else {
            continue;
        };
        let (re_row, im_row) = rc.rows(n, k);
        for (j, idx) in range.enumerate() {
            if re_row[j] != 0.0 {
                re.terms.push((idx, re_row[j]));
            }
            if im_row[j] != 0.0 {
                im.terms.push((idx, im_row[j]));
            }
        }
    }
    [re, im]
}

/// One cone per user:
/// `||[h_k^H v_l (l != k); sigma_k]|| <= Re(h_k^H v_k) / sqrt(gamma_k)`.
pub fn build_qos_constraints(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    layout: &VariableLayout,
) -> Vec<SocConstraint> {
    let rc = realify(ch);
    let users = cfg.num_users;
    (0..users)
        .map(|k| {
            let [signal, _] = inner_exprs(&rc, layout, k, k);
            let mut tail = Vec::with_capacity(2 * (users - 1) + 1);
            for l in (0..users).filter(|l| *l != k) {
                tail.extend(inner_exprs(&rc, layout, k, l));
            }
            tail.push(AffineExpr::constant(cfg.noise_power[k].sqrt()));
            SocConstraint {
                head: signal.scaled(1.0 / cfg.gamma[k].sqrt()),
                tail,
            }
        })
        .collect()
}

/// One cone per BS: `||(v_n1, .., v_nK)|| <= sqrt(P_n^max)`.
pub fn build_power_constraints(cfg: &NetworkConfig, layout: &VariableLayout) -> Vec<SocConstraint> {
    (0..cfg.num_bs)
        .map(|n| {
            let tail = (0..cfg.num_users)
                .filter_map(|k| layout.group_indices(Task::new(n, k)))
                .flatten()
                .map(|i| AffineExpr::var(i, 1.0))
                .collect();
            SocConstraint {
                head: AffineExpr::constant(cfg.p_max[n].sqrt()),
                tail,
            }
        })
        .collect()
}

fn feasible_set(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    inactive: &TaskSet,
    zero_blocks: ZeroBlocks,
) -> (VariableLayout, Vec<SocConstraint>, Vec<AffineExpr>) {
    let dims = cfg.dims();
    let layout = match zero_blocks {
        ZeroBlocks::Eliminate => VariableLayout::new(dims, inactive),
        ZeroBlocks::Pin => VariableLayout::full(dims),
    };
    let mut cones = build_qos_constraints(ch, cfg, &layout);
    cones.extend(build_power_constraints(cfg, &layout));
    let equalities = match zero_blocks {
        ZeroBlocks::Eliminate => Vec::new(),
        ZeroBlocks::Pin => inactive
            .iter()
            .filter_map(|t| layout.group_indices(t))
            .flatten()
            .map(|i| AffineExpr::var(i, 1.0))
            .collect(),
    };
    (layout, cones, equalities)
}

/// Weighted group norm plus an optional proximal term:
/// `sum w_nk ||v_nk|| + (beta/2) ||v - v_prev||^2`.
fn reweighted(
    weights: &[f64],
    prox: Option<(&BeamformingSolution, f64)>,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> SocProgram {
    let dims = cfg.dims();
    assert_eq!(weights.len(), dims.num_groups(), "one weight per group");
    let (mut layout, mut cones, equalities) =
        feasible_set(ch, cfg, &TaskSet::new(), ZeroBlocks::Eliminate);

    let mut objective_terms = Vec::new();
    for task in dims.tasks() {
        let w = weights[dims.group_index(task)];
        if w == 0.0 {
            continue;
        }
        let t = layout.push_aux(VarRole::GroupNorm(task));
        objective_terms.push((t, w));
        let tail = layout
            .group_indices(task)
            .expect("full layout")
            .map(|i| AffineExpr::var(i, 1.0))
            .collect();
        cones.push(SocConstraint {
            head: AffineExpr::var(t, 1.0),
            tail,
        });
    }

    let mut rotated = Vec::new();
    if let Some((v_prev, beta)) = prox.filter(|(_, b)| *b > 0.0) {
        let s = layout.push_aux(VarRole::ProxEpigraph);
        objective_terms.push((s, beta / 2.0));
        let center = layout.beam_values(v_prev);
        // 2 * s * (1/2) >= ||v - v_prev||^2
        rotated.push(RotatedConeConstraint {
            u: AffineExpr::var(s, 1.0),
            w: AffineExpr::constant(0.5),
            tail: center
                .iter()
                .enumerate()
                .map(|(i, c)| AffineExpr {
                    terms: vec![(i, 1.0)],
                    constant: -c,
                })
                .collect(),
        });
    }

    let mut objective = vec![0.0; layout.num_vars()];
    for (i, c) in objective_terms {
        objective[i] = c;
    }
    SocProgram {
        kind: ProgramKind::ReweightedProx,
        layout,
        objective,
        cones,
        rotated,
        equalities,
    }
}

/// Reweighted proximal subproblem of the Stage-1 loop.
pub fn build_stage1(
    weights: &[f64],
    v_prev: &BeamformingSolution,
    beta: f64,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> SocProgram {
    reweighted(weights, Some((v_prev, beta)), ch, cfg)
}

/// Weighted mixed l1,2-norm program `min sum rho_nk ||v_nk||`.
pub fn build_mixed_l12(rho: &[f64], ch: &ChannelRealization, cfg: &NetworkConfig) -> SocProgram {
    reweighted(rho, None, ch, cfg)
}

/// Feasibility of the constraint set with the `inactive` groups forced to zero.
pub fn build_feasibility(
    inactive: &TaskSet,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> SocProgram {
    build_feasibility_with(inactive, ZeroBlocks::Eliminate, ch, cfg)
}

pub fn build_feasibility_with(
    inactive: &TaskSet,
    zero_blocks: ZeroBlocks,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> SocProgram {
    let (layout, cones, equalities) = feasible_set(ch, cfg, inactive, zero_blocks);
    SocProgram {
        kind: ProgramKind::Feasibility,
        objective: vec![0.0; layout.num_vars()],
        layout,
        cones,
        rotated: Vec::new(),
        equalities,
    }
}

/// Minimum transmit power `sum ||v_nk||^2 / eta_n` over a restricted support.
/// The objective is transmit power only; compute power of the selection is
/// a constant added by the caller.
pub fn build_refinement(
    inactive: &TaskSet,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> SocProgram {
    build_refinement_with(inactive, ZeroBlocks::Eliminate, ch, cfg)
}

pub fn build_refinement_with(
    inactive: &TaskSet,
    zero_blocks: ZeroBlocks,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> SocProgram {
    let (mut layout, cones, equalities) = feasible_set(ch, cfg, inactive, zero_blocks);
    let mut tail = Vec::with_capacity(layout.num_beam_vars());
    for &task in layout.active_groups() {
        let scale = 1.0 / cfg.eta[task.bs].sqrt();
        for a in 0..cfg.antennas {
            for part in [Part::Re, Part::Im] {
                let i = layout.beam_index(task, a, part).expect("active");
                tail.push(AffineExpr::var(i, scale));
            }
        }
    }
    let e = layout.push_aux(VarRole::PowerEpigraph);
    let mut objective = vec![0.0; layout.num_vars()];
    objective[e] = 1.0;
    SocProgram {
        kind: ProgramKind::Refinement,
        layout,
        objective,
        cones,
        rotated: vec![RotatedConeConstraint {
            u: AffineExpr::var(e, 1.0),
            w: AffineExpr::constant(0.5),
            tail,
        }],
        equalities,
    }
}

/// Coordinated beamforming: every BS serves every user.
pub fn build_cb(ch: &ChannelRealization, cfg: &NetworkConfig) -> SocProgram {
    build_refinement(&TaskSet::new(), ch, cfg)
}
