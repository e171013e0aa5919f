use gsbf_core::conic::{
    build_feasibility_with, build_refinement, build_refinement_with, solve, SolveStatus, ZeroBlocks,
};
use gsbf_core::netmodel::{
    generate_channels, generate_topology, ChannelRealization, Complex, NetworkConfig, Task, TaskSet,
};

/// Nested grid search over the four real coordinates of a one-user,
/// one-BS, two-antenna beamformer.
fn grid_minimum(h: [Complex; 2], gamma: f64, sigma2: f64, eta: f64, p_max: f64) -> f64 {
    let objective = |x: [f64; 4]| x.iter().map(|c| c * c).sum::<f64>() / eta;
    let feasible = |x: [f64; 4]| {
        let v = [Complex::new(x[0], x[1]), Complex::new(x[2], x[3])];
        let hv: Complex = h.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        hv.norm_sqr() >= gamma * sigma2 && x.iter().map(|c| c * c).sum::<f64>() <= p_max
    };
    let radius = p_max.sqrt();
    let mut center = [0.0; 4];
    let mut half = radius;
    let mut best = f64::INFINITY;
    let steps = 40;
    for _ in 0..5 {
        let step = 2.0 * half / steps as f64;
        let mut best_point = center;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    for l in 0..=steps {
                        let x = [
                            center[0] - half + i as f64 * step,
                            center[1] - half + j as f64 * step,
                            center[2] - half + k as f64 * step,
                            center[3] - half + l as f64 * step,
                        ];
                        let f = objective(x);
                        if f < best && feasible(x) {
                            best = f;
                            best_point = x;
                        }
                    }
                }
            }
        }
        center = best_point;
        half = 2.0 * step;
    }
    best
}

#[test]
fn refinement_matches_grid_search() {
    let h = [Complex::new(0.9, 0.2), Complex::new(-0.3, 0.5)];
    let mut cfg = NetworkConfig::homogeneous(1, 1, 2)
        .with_sinr_db(3.0)
        .with_uniform_p_max(4.0);
    cfg.noise_power = vec![1.0];
    let ch = ChannelRealization::from_blocks(cfg.dims(), h.to_vec()).unwrap();
    let r = solve(&build_refinement(&TaskSet::new(), &ch, &cfg), 1e-9);
    assert_eq!(r.status, SolveStatus::Optimal);
    let grid = grid_minimum(h, cfg.gamma[0], 1.0, cfg.eta[0], 4.0);
    assert!((r.objective - grid).abs() <= 1e-3 * grid, "solver {} grid {grid}", r.objective);
    // closed form |v|^2 = gamma sigma^2 / ||h||^2
    let h2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    assert!((r.objective - cfg.gamma[0] / h2 / cfg.eta[0]).abs() < 1e-6);
}

#[test]
fn eliminating_and_pinning_agree() {
    let cfg = NetworkConfig::homogeneous(2, 3, 2).with_sinr_db(-10.0);
    let ch = generate_channels(21, &generate_topology(21, &cfg), &cfg);
    let inactive: TaskSet = [Task::new(0, 1), Task::new(1, 2)].into_iter().collect();
    let a = solve(&build_refinement_with(&inactive, ZeroBlocks::Eliminate, &ch, &cfg), 1e-9);
    let b = solve(&build_refinement_with(&inactive, ZeroBlocks::Pin, &ch, &cfg), 1e-9);
    assert_eq!(a.status, SolveStatus::Optimal);
    assert_eq!(b.status, SolveStatus::Optimal);
    assert!((a.objective - b.objective).abs() < 1e-6);
    let pinned = b.beamformer.unwrap();
    for t in inactive.iter() {
        assert!(pinned.group_norm(t) < 1e-7);
    }
    let hard = cfg.clone().with_sinr_db(15.0);
    for cfg in [&cfg, &hard] {
        let status = |mode| solve(&build_feasibility_with(&inactive, mode, &ch, cfg), 1e-9).status;
        assert_eq!(status(ZeroBlocks::Eliminate), status(ZeroBlocks::Pin));
    }
}

#[test]
fn channel_scaling_scales_power() {
    // scaling every channel by c scales the minimum transmit power by 1/c^2
    let cfg = NetworkConfig::homogeneous(2, 2, 2).with_sinr_db(2.0).with_uniform_p_max(1e3);
    let ch = generate_channels(3, &generate_topology(3, &cfg), &cfg);
    let a = solve(&build_refinement(&TaskSet::new(), &ch, &cfg), 1e-9);
    let b = solve(&build_refinement(&TaskSet::new(), &ch.scaled(2.0), &cfg), 1e-9);
    assert!((a.objective / b.objective - 4.0).abs() < 1e-5);
}
