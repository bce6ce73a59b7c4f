// Scratch probe for solver debugging. Not part of the deliverable.
use plannetx::dynamics::State;
use plannetx::ocp::{free_road_params, OcpConfig, PlanParams, SqpSolver};
use plannetx::prediction::{forward_predict, LeadState};

fn main() {
    let cfg = OcpConfig::default();
    let mut s = SqpSolver::new(cfg.clone()).unwrap();

    let x0 = State::new(0.0, 25.0, 0.0, 0.0);
    let params = PlanParams {
        lead: forward_predict(&LeadState::new(40.0, 8.0, -2.0), 1.0, cfg.t_d, 31).unwrap(),
        v_max1: cfg.v_max,
        v_max2: cfg.v_max,
        s_change: 0.0,
    };
    let sol = s.solve(&x0, &params, None).unwrap();
    println!(
        "braking: status={:?} sqp={} ip={} kkt={:.3e} trace={:?}",
        sol.status, sol.sqp_iterations, sol.ip_iterations, sol.kkt_residual, sol.objective_trace
    );

    let x0 = State::new(0.0, 30.0, 0.0, 0.0);
    let mut p2 = free_road_params(&cfg, 0.0, 1e5);
    p2.v_max1 = 33.0;
    p2.v_max2 = 15.0;
    p2.s_change = 120.0;
    let sol = s.solve(&x0, &p2, None).unwrap();
    println!(
        "speed-limit: status={:?} sqp={} ip={} kkt={:.3e} trace={:?}",
        sol.status, sol.sqp_iterations, sol.ip_iterations, sol.kkt_residual, sol.objective_trace
    );
}
