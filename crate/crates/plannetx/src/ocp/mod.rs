//! The MPC expert: a longitudinal optimal control problem over the exact
//! integrator-chain dynamics, solved by sequential quadratic programming.
//!
//! Each SQP iteration freezes the speed-limit regime per stage from the
//! current iterate's positions, linearizes the quadratic braking term of the
//! safety-distance constraint, and solves the resulting convex QP (quadratic
//! slack penalties, linear dynamics as equalities) with the interior-point
//! method from [`qp`]. Full steps, no line search; the subproblems are
//! convex with the regime frozen.

pub mod qp;

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Control, DiscreteDynamics, State};
use crate::prediction::{LeadPrediction, LeadState};
use crate::{PlanError, Result};

use qp::{IneqRow, IpmOptions, QpSolution, StageQp, STAGE_VARS};

/// Weights, bounds, horizon, and solver knobs of the longitudinal OCP.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OcpConfig {
    /// Horizon length N (stages 0..=N).
    pub n_horizon: usize,
    /// Discretization time (s).
    pub t_d: f64,
    pub w_accel: f64,
    pub w_jerk: f64,
    pub w_snap: f64,
    pub w_progress: f64,
    /// Stage discount applied to the stage cost.
    pub gamma: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub j_min: f64,
    pub j_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Minimum bumper-to-bumper distance (m).
    pub d_min: f64,
    /// Reaction time in the braking-distance term (s).
    pub t_brake: f64,
    /// Braking capability |a| used in the distance constraint (m/s²).
    pub brake_capability: f64,
    pub w_slack_dist: f64,
    pub w_slack_terminal: f64,
    pub max_sqp_iters: usize,
    pub tol_step: f64,
    pub tol_kkt: f64,
    pub ip_max_iters: usize,
    pub ip_tol_gap: f64,
    pub ip_tol_feas: f64,
}

impl Default for OcpConfig {
    fn default() -> Self {
        OcpConfig {
            n_horizon: 30,
            t_d: 0.2,
            w_accel: 1.0,
            w_jerk: 0.5,
            w_snap: 0.1,
            w_progress: 0.5,
            gamma: 0.98,
            v_min: 0.0,
            v_max: 36.1,
            a_min: -4.0,
            a_max: 2.0,
            j_min: -2.5,
            j_max: 2.5,
            u_min: -10.0,
            u_max: 10.0,
            d_min: 5.0,
            t_brake: 0.5,
            brake_capability: 4.0,
            w_slack_dist: 1e3,
            w_slack_terminal: 1e2,
            max_sqp_iters: 30,
            tol_step: 1e-6,
            tol_kkt: 1e-6,
            ip_max_iters: 100,
            ip_tol_gap: 1e-9,
            ip_tol_feas: 1e-10,
        }
    }
}

impl OcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_horizon < 2 {
            return Err(PlanError::invalid("horizon must be at least 2 stages"));
        }
        if !(self.t_d > 0.0) {
            return Err(PlanError::invalid("t_d must be positive"));
        }
        for (name, w) in [
            ("w_accel", self.w_accel),
            ("w_jerk", self.w_jerk),
            ("w_snap", self.w_snap),
            ("w_progress", self.w_progress),
            ("w_slack_dist", self.w_slack_dist),
            ("w_slack_terminal", self.w_slack_terminal),
        ] {
            if !(w > 0.0) {
                return Err(PlanError::invalid(format!("{name} must be > 0, got {w}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(PlanError::invalid("gamma must be in (0, 1]"));
        }
        if !(self.v_min < self.v_max) || !(self.a_min < 0.0 && 0.0 < self.a_max)
            || !(self.j_min < 0.0 && 0.0 < self.j_max) || !(self.u_min < 0.0 && 0.0 < self.u_max)
        {
            return Err(PlanError::invalid("box bounds are inconsistent"));
        }
        if !(self.brake_capability > 0.0) {
            return Err(PlanError::invalid("brake_capability must be > 0"));
        }
        Ok(())
    }

    /// Times 0, t_d, …, (N−1)·t_d fed to the policy.
    pub fn stage_times(&self) -> Vec<f64> {
        (0..self.n_horizon).map(|k| k as f64 * self.t_d).collect()
    }
}

/// Per-solve parameters: the lead forward prediction (N+1 stages) plus the
/// speed-limit triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    pub lead: LeadPrediction,
    pub v_max1: f64,
    pub v_max2: f64,
    pub s_change: f64,
}

impl PlanParams {
    pub fn validate(&self, cfg: &OcpConfig) -> Result<()> {
        if self.lead.len() != cfg.n_horizon + 1 {
            return Err(PlanError::contract(format!(
                "lead prediction has {} stages, expected {}",
                self.lead.len(),
                cfg.n_horizon + 1
            )));
        }
        for (name, v) in [("v_max1", self.v_max1), ("v_max2", self.v_max2)] {
            if !(v >= cfg.v_min && v <= cfg.v_max) {
                return Err(PlanError::contract(format!(
                    "{name}={v} outside [{}, {}]",
                    cfg.v_min, cfg.v_max
                )));
            }
        }
        if !self.s_change.is_finite() {
            return Err(PlanError::contract("s_change must be finite"));
        }
        Ok(())
    }

    /// Stage-wise parameter tuple (lead state + speed-limit triple).
    pub fn stage_param(&self, k: usize) -> [f64; 6] {
        let l = &self.lead.stages[k];
        [l.s, l.v, l.a, self.v_max1, self.v_max2, self.s_change]
    }

    pub fn translated(&self, ds: f64) -> Self {
        PlanParams {
            lead: self.lead.translated(ds),
            v_max1: self.v_max1,
            v_max2: self.v_max2,
            s_change: self.s_change + ds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    InfeasibleQp,
}

/// Optimal trajectory and solver diagnostics.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub states: Vec<State>,
    pub controls: Vec<f64>,
    /// Distance-constraint slack per stage (N+1 values).
    pub slack_dist: Vec<f64>,
    /// Terminal-acceleration slack.
    pub slack_terminal: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub sqp_iterations: usize,
    pub ip_iterations: usize,
    pub status: SolveStatus,
    /// Merit value per SQP iterate (initial iterate first).
    pub objective_trace: Vec<f64>,
    /// Whether the merit decreased monotonically (within 1e-8) over the trace.
    pub monotone: bool,
    /// Set when the initial state had to be projected into the box bounds.
    pub x0_projected: bool,
}

impl OcpSolution {
    pub fn first_control(&self) -> f64 {
        self.controls[0]
    }

    /// Largest dynamics defect ‖x_{k+1} − A x_k − B u_k‖∞ over the horizon.
    pub fn dynamics_defect(&self, dynamics: &DiscreteDynamics) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.controls.len() {
            let pred = dynamics.a_d * self.states[k].as_vector()
                + dynamics.b_d * self.controls[k];
            worst = worst.max((self.states[k + 1].as_vector() - pred).abs().max());
        }
        worst
    }
}

/// Discounted stage cost γᵏ (w_a a² + w_j j² + w_u u² − w_s s).
pub fn stage_cost(x: &State, u: Control, k: usize, cfg: &OcpConfig) -> f64 {
    cfg.gamma.powi(k as i32)
        * (cfg.w_accel * x.a * x.a
            + cfg.w_jerk * x.j * x.j
            + cfg.w_snap * u.snap * u.snap
            - cfg.w_progress * x.s)
}

/// Safety-distance constraint value in max-form:
/// max((v² − v_lead²)/(2·brake) + v·t_brake, d_min) − (s_lead − s) ≤ 0.
pub fn dist_constraint(x: &State, lead: &LeadState, cfg: &OcpConfig) -> f64 {
    let braking = (x.v * x.v - lead.v * lead.v) / (2.0 * cfg.brake_capability)
        + x.v * cfg.t_brake;
    braking.max(cfg.d_min) - (lead.s - x.s)
}

/// Speed-limit constraint value v − v_max(s) ≤ 0 with the position-based
/// limit selector.
pub fn speedlimit_constraint(x: &State, params: &PlanParams) -> f64 {
    let limit = if x.s < params.s_change {
        params.v_max1
    } else {
        params.v_max2
    };
    x.v - limit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    VMax,
    VMin,
    AMax,
    AMin,
    JMax,
    JMin,
    UMax,
    UMin,
    DistBrake,
    DistMin,
    SlackNonneg,
    SpeedLimit,
    TermUpper,
    TermLower,
    TermSlackNonneg,
}

#[derive(Debug, Clone, Copy)]
struct RowMeta {
    kind: RowKind,
    stage: usize,
}

/// Current SQP iterate, always equality-consistent: states are the exact
/// rollout of the controls from the initial state.
#[derive(Debug, Clone)]
struct Iterate {
    states: Vec<State>,
    controls: Vec<f64>,
    slack_dist: Vec<f64>,
    slack_terminal: f64,
}

/// MPC expert solver. Holds per-instance workspaces; one instance per
/// thread, configuration shared immutably.
#[derive(Debug, Clone)]
pub struct SqpSolver {
    cfg: OcpConfig,
    dynamics: DiscreteDynamics,
}

impl SqpSolver {
    pub fn new(cfg: OcpConfig) -> Result<Self> {
        cfg.validate()?;
        let dynamics = DiscreteDynamics::new(cfg.t_d)?;
        Ok(SqpSolver { cfg, dynamics })
    }

    pub fn config(&self) -> &OcpConfig {
        &self.cfg
    }

    pub fn dynamics(&self) -> &DiscreteDynamics {
        &self.dynamics
    }

    fn rollout(&self, x0: &State, controls: &[f64]) -> Vec<State> {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(*x0);
        for &u in controls {
            let next = self.dynamics.step(states.last().unwrap(), Control::new(u));
            states.push(next);
        }
        states
    }

    /// Solve the OCP from `x0` with the given stage parameters, optionally
    /// warm-started from a previous solution (its controls and slacks seed
    /// the first SQP iterate).
    pub fn solve(
        &mut self,
        x0: &State,
        params: &PlanParams,
        warm: Option<&OcpSolution>,
    ) -> Result<OcpSolution> {
        params.validate(&self.cfg)?;
        if !x0.is_finite() {
            return Err(PlanError::invalid("initial state must be finite"));
        }
        let cfg = &self.cfg;
        let n = cfg.n_horizon;

        let x0_used = State::new(
            x0.s,
            x0.v.clamp(cfg.v_min, cfg.v_max),
            x0.a.clamp(cfg.a_min, cfg.a_max),
            x0.j.clamp(cfg.j_min, cfg.j_max),
        );
        let projected = x0_used != *x0;

        let mut iterate = match warm {
            Some(sol) if sol.controls.len() == n => Iterate {
                states: self.rollout(&x0_used, &sol.controls),
                controls: sol.controls.clone(),
                slack_dist: sol.slack_dist.clone(),
                slack_terminal: sol.slack_terminal,
            },
            _ => {
                let controls = vec![0.0; n];
                let states = self.rollout(&x0_used, &controls);
                let slack_dist = implied_dist_slacks(&states, params, cfg);
                let slack_terminal = states[n].a.abs();
                Iterate { states, controls, slack_dist, slack_terminal }
            }
        };

        let mut trace = vec![self.merit(&iterate, params)];
        let mut monotone = true;
        let mut ip_total = 0usize;
        let mut status = SolveStatus::MaxIter;
        let mut sqp_iterations = 0usize;
        let mut kkt = f64::INFINITY;
        let mut last_qp: Option<(QpSolution, Vec<RowMeta>, StageQp)> = None;

        for _ in 0..cfg.max_sqp_iters {
            sqp_iterations += 1;
            let (qp_data, meta) = self.build_qp(&x0_used, params, &iterate);
            let z_init = pack_iterate(&iterate, n);
            let opts = IpmOptions {
                max_iters: cfg.ip_max_iters,
                tol_feas: cfg.ip_tol_feas,
                tol_gap: cfg.ip_tol_gap,
                ..IpmOptions::default()
            };
            let qp_sol = qp::solve_qp(&qp_data, &z_init, &opts);
            ip_total += qp_sol.iterations;
            if !qp_sol.converged {
                status = SolveStatus::InfeasibleQp;
                last_qp = Some((qp_sol, meta, qp_data));
                break;
            }

            let new_iterate = self.unpack(&x0_used, &qp_sol.z, n);
            let step = step_norm(&iterate, &new_iterate);
            let merit = self.merit(&new_iterate, params);
            if merit > trace.last().unwrap() + 1e-8 * (1.0 + trace.last().unwrap().abs()) {
                monotone = false;
            }
            trace.push(merit);
            iterate = new_iterate;

            kkt = self.true_kkt(&x0_used, params, &iterate, &qp_data, &meta, &qp_sol);
            last_qp = Some((qp_sol, meta, qp_data));

            if step < cfg.tol_step && kkt < cfg.tol_kkt {
                status = SolveStatus::Converged;
                break;
            }
        }

        let objective = self.merit(&iterate, params);
        let _ = last_qp;
        // Report the smallest slacks admissible for the true constraints:
        // the QP slacks match them up to the interior-point tolerance, but
        // carry O(√μ) noise on inactive stages.
        let slack_dist = implied_dist_slacks(&iterate.states, params, cfg);
        let slack_terminal = iterate.states[cfg.n_horizon].a.abs();
        Ok(OcpSolution {
            states: iterate.states,
            controls: iterate.controls,
            slack_dist,
            slack_terminal,
            objective,
            kkt_residual: kkt,
            sqp_iterations,
            ip_iterations: ip_total,
            status,
            objective_trace: trace,
            monotone,
            x0_projected: projected,
        })
    }

    /// Merit function: cost plus slack penalties at the smallest slacks
    /// admissible for the true (non-linearized) constraints.
    fn merit(&self, it: &Iterate, params: &PlanParams) -> f64 {
        let cfg = &self.cfg;
        let mut obj = 0.0;
        for k in 0..it.controls.len() {
            obj += stage_cost(&it.states[k], Control::new(it.controls[k]), k, cfg);
        }
        for (k, slack) in implied_dist_slacks(&it.states, params, cfg).iter().enumerate() {
            let _ = k;
            obj += cfg.w_slack_dist * slack * slack;
        }
        let a_n = it.states[it.controls.len()].a;
        obj += cfg.w_slack_terminal * a_n * a_n;
        obj
    }

    fn build_qp(&self, x0: &State, params: &PlanParams, lin: &Iterate) -> (StageQp, Vec<RowMeta>) {
        let cfg = &self.cfg;
        let n = cfg.n_horizon;
        let n_stages = n + 1;
        let nz = STAGE_VARS * n_stages;
        let mut q_diag = vec![0.0; nz];
        let mut c = vec![0.0; nz];
        for k in 0..n {
            let off = STAGE_VARS * k;
            let g = cfg.gamma.powi(k as i32);
            q_diag[off + 2] = 2.0 * g * cfg.w_accel;
            q_diag[off + 3] = 2.0 * g * cfg.w_jerk;
            q_diag[off + 4] = 2.0 * g * cfg.w_snap;
            q_diag[off + 5] = 2.0 * cfg.w_slack_dist;
            c[off] = -g * cfg.w_progress;
        }
        let off_n = STAGE_VARS * n;
        q_diag[off_n + 4] = 2.0 * cfg.w_slack_dist;
        q_diag[off_n + 5] = 2.0 * cfg.w_slack_terminal;

        let mut ineqs = Vec::with_capacity(12 * n_stages);
        let mut meta = Vec::with_capacity(12 * n_stages);
        let push = |ineqs: &mut Vec<IneqRow>, meta: &mut Vec<RowMeta>, kind, stage, terms, rhs| {
            ineqs.push(IneqRow { stage, terms, rhs });
            meta.push(RowMeta { kind, stage });
        };

        for k in 0..=n {
            let zeta = zeta_index(k, n);
            if k >= 1 {
                push(&mut ineqs, &mut meta, RowKind::VMax, k, vec![(1, 1.0)], cfg.v_max);
                push(&mut ineqs, &mut meta, RowKind::VMin, k, vec![(1, -1.0)], -cfg.v_min);
                push(&mut ineqs, &mut meta, RowKind::AMax, k, vec![(2, 1.0)], cfg.a_max);
                push(&mut ineqs, &mut meta, RowKind::AMin, k, vec![(2, -1.0)], -cfg.a_min);
                push(&mut ineqs, &mut meta, RowKind::JMax, k, vec![(3, 1.0)], cfg.j_max);
                push(&mut ineqs, &mut meta, RowKind::JMin, k, vec![(3, -1.0)], -cfg.j_min);
            }
            if k < n {
                push(&mut ineqs, &mut meta, RowKind::UMax, k, vec![(4, 1.0)], cfg.u_max);
                push(&mut ineqs, &mut meta, RowKind::UMin, k, vec![(4, -1.0)], -cfg.u_min);
            }

            // Linearized braking branch of the distance constraint around
            // the iterate velocity v̄:
            //   s + (v̄/b + t_brake)·v − ζ ≤ (v̄² + v̂_lead²)/(2b) + ŝ_lead.
            let v_bar = lin.states[k].v;
            let lead = &params.lead.stages[k];
            let b = cfg.brake_capability;
            push(
                &mut ineqs,
                &mut meta,
                RowKind::DistBrake,
                k,
                vec![(0, 1.0), (1, v_bar / b + cfg.t_brake), (zeta, -1.0)],
                (v_bar * v_bar + lead.v * lead.v) / (2.0 * b) + lead.s,
            );
            push(
                &mut ineqs,
                &mut meta,
                RowKind::DistMin,
                k,
                vec![(0, 1.0), (zeta, -1.0)],
                lead.s - cfg.d_min,
            );
            push(&mut ineqs, &mut meta, RowKind::SlackNonneg, k, vec![(zeta, -1.0)], 0.0);

            if k >= 1 {
                // Regime frozen from the iterate's position.
                let limit = if lin.states[k].s < params.s_change {
                    params.v_max1
                } else {
                    params.v_max2
                };
                push(&mut ineqs, &mut meta, RowKind::SpeedLimit, k, vec![(1, 1.0)], limit);
            }
        }
        push(&mut ineqs, &mut meta, RowKind::TermUpper, n, vec![(2, 1.0), (5, -1.0)], 0.0);
        push(&mut ineqs, &mut meta, RowKind::TermLower, n, vec![(2, -1.0), (5, -1.0)], 0.0);
        push(&mut ineqs, &mut meta, RowKind::TermSlackNonneg, n, vec![(5, -1.0)], 0.0);

        let qp_data = StageQp {
            n_stages,
            q_diag,
            c,
            a_mat: self.dynamics.a_d,
            b_vec: self.dynamics.b_d,
            x0: x0.as_vector(),
            ineqs,
        };
        (qp_data, meta)
    }

    fn unpack(&self, x0: &State, z: &[f64], n: usize) -> Iterate {
        let mut controls = Vec::with_capacity(n);
        for k in 0..n {
            controls.push(z[STAGE_VARS * k + 4]);
        }
        let states = self.rollout(x0, &controls);
        let mut slack_dist = Vec::with_capacity(n + 1);
        for k in 0..=n {
            slack_dist.push(z[STAGE_VARS * k + zeta_index(k, n)].max(0.0));
        }
        let slack_terminal = z[STAGE_VARS * n + 5].max(0.0);
        Iterate { states, controls, slack_dist, slack_terminal }
    }

    /// KKT residual of the true (non-linearized, true-regime) problem at the
    /// iterate, using the multipliers of the last QP.
    fn true_kkt(
        &self,
        _x0: &State,
        params: &PlanParams,
        it: &Iterate,
        qp_data: &StageQp,
        meta: &[RowMeta],
        sol: &QpSolution,
    ) -> f64 {
        let cfg = &self.cfg;
        let n = cfg.n_horizon;
        let z = pack_iterate(it, n);
        let nz = z.len();

        // Stationarity: ∇f + Âᵀy + Σ λ_i ∇h_i.
        let mut grad = vec![0.0; nz];
        for i in 0..nz {
            grad[i] = qp_data.q_diag[i] * z[i] + qp_data.c[i];
        }
        for r in 0..4 {
            grad[r] += sol.y[r];
        }
        for k in 0..n {
            let off_k = STAGE_VARS * k;
            let off_k1 = STAGE_VARS * (k + 1);
            for r in 0..4 {
                let yv = sol.y[4 + 4 * k + r];
                grad[off_k1 + r] += yv;
                for cidx in 0..4 {
                    grad[off_k + cidx] -= self.dynamics.a_d[(r, cidx)] * yv;
                }
                grad[off_k + 4] -= self.dynamics.b_d[r] * yv;
            }
        }

        let mut feas = 0.0_f64;
        let mut comp = 0.0_f64;
        for (i, m) in meta.iter().enumerate() {
            let k = m.stage;
            let off = STAGE_VARS * k;
            let st = &it.states[k];
            let zeta = zeta_index(k, n);
            let lam = sol.lambda[i];
            // Constraint value in h(z) ≤ 0 form and its gradient terms.
            let (value, terms): (f64, Vec<(usize, f64)>) = match m.kind {
                RowKind::DistBrake => {
                    let lead = &params.lead.stages[k];
                    let b = cfg.brake_capability;
                    let h = (st.v * st.v - lead.v * lead.v) / (2.0 * b)
                        + st.v * cfg.t_brake
                        - (lead.s - st.s)
                        - z[off + zeta];
                    (
                        h,
                        vec![(off, 1.0), (off + 1, st.v / b + cfg.t_brake), (off + zeta, -1.0)],
                    )
                }
                RowKind::SpeedLimit => {
                    let limit = if st.s < params.s_change {
                        params.v_max1
                    } else {
                        params.v_max2
                    };
                    (st.v - limit, vec![(off + 1, 1.0)])
                }
                _ => {
                    let row = &qp_data.ineqs[i];
                    let v: f64 = row.terms.iter().map(|(vi, c)| c * z[off + vi]).sum();
                    (
                        v - row.rhs,
                        row.terms.iter().map(|(vi, c)| (off + vi, *c)).collect(),
                    )
                }
            };
            for (idx, coeff) in terms {
                grad[idx] += lam * coeff;
            }
            feas = feas.max(value);
            comp = comp.max((lam * value).abs());
        }

        let stat = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        stat.max(feas.max(0.0)).max(comp)
    }
}

fn zeta_index(stage: usize, n: usize) -> usize {
    if stage < n {
        5
    } else {
        4
    }
}

fn pack_iterate(it: &Iterate, n: usize) -> Vec<f64> {
    let mut z = vec![0.0; STAGE_VARS * (n + 1)];
    for k in 0..=n {
        let off = STAGE_VARS * k;
        let x = it.states[k];
        z[off] = x.s;
        z[off + 1] = x.v;
        z[off + 2] = x.a;
        z[off + 3] = x.j;
        if k < n {
            z[off + 4] = it.controls[k];
        }
        z[off + zeta_index(k, n)] = it.slack_dist[k];
    }
    z[STAGE_VARS * n + 5] = it.slack_terminal;
    z
}

/// Smallest admissible distance slacks for the true constraints at the
/// given states: ζ_k = max(0, h1, h2).
fn implied_dist_slacks(states: &[State], params: &PlanParams, cfg: &OcpConfig) -> Vec<f64> {
    states
        .iter()
        .zip(&params.lead.stages)
        .map(|(st, lead)| dist_constraint(st, lead, cfg).max(0.0))
        .collect()
}

fn step_norm(a: &Iterate, b: &Iterate) -> f64 {
    let mut worst = 0.0_f64;
    for (ua, ub) in a.controls.iter().zip(&b.controls) {
        worst = worst.max((ua - ub).abs());
    }
    for (xa, xb) in a.states.iter().zip(&b.states) {
        worst = worst.max((xa.as_vector() - xb.as_vector()).abs().max());
    }
    for (za, zb) in a.slack_dist.iter().zip(&b.slack_dist) {
        worst = worst.max((za - zb).abs());
    }
    worst.max((a.slack_terminal - b.slack_terminal).abs())
}

/// Convenience constructor for a "no lead" parameter set: a stationary
/// virtual lead far beyond the reachable horizon and an inactive limit.
pub fn free_road_params(cfg: &OcpConfig, x0_s: f64, lead_distance: f64) -> PlanParams {
    let lead = LeadState::new(x0_s + lead_distance, 0.0, 0.0);
    PlanParams {
        lead: crate::prediction::forward_predict(&lead, 1.0, cfg.t_d, cfg.n_horizon + 1)
            .expect("valid prediction"),
        v_max1: cfg.v_max,
        v_max2: cfg.v_max,
        s_change: x0_s,
    }
}
