//! Convex QP subproblem solver: a Mehrotra predictor-corrector primal-dual
//! interior-point method specialized to the stage-structured form
//!
//!     min ½ zᵀ diag(q) z + cᵀ z
//!     s.t. x_0 = x̄_0,  x_{k+1} = A x_k + B u_k      (equalities)
//!          stage-local inequality rows  g·w_k ≤ rhs
//!
//! with six variables per stage. The Newton KKT system is solved with a
//! banded LDLᵀ factorization of the quasi-definite regularized matrix in a
//! stage-interleaved ordering (bandwidth 9), followed by iterative
//! refinement against the unregularized system.

use nalgebra::{SMatrix, SVector};

/// Variables per stage block.
pub const STAGE_VARS: usize = 6;

/// One stage-local inequality row: Σ coeff·w_stage[idx] ≤ rhs.
#[derive(Debug, Clone)]
pub struct IneqRow {
    pub stage: usize,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Stage-structured convex QP data.
#[derive(Debug, Clone)]
pub struct StageQp {
    /// Number of stage blocks (horizon length N + 1).
    pub n_stages: usize,
    /// Diagonal of the quadratic cost, length 6·n_stages.
    pub q_diag: Vec<f64>,
    /// Linear cost, length 6·n_stages.
    pub c: Vec<f64>,
    pub a_mat: SMatrix<f64, 4, 4>,
    pub b_vec: SVector<f64, 4>,
    pub x0: SVector<f64, 4>,
    pub ineqs: Vec<IneqRow>,
}


impl StageQp {
    pub fn n_vars(&self) -> usize {
        STAGE_VARS * self.n_stages
    }

    pub fn n_eq(&self) -> usize {
        4 * self.n_stages
    }

    #[inline]
    pub fn offset(&self, stage: usize) -> usize {
        STAGE_VARS * stage
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub max_iters: usize,
    /// Relative tolerance on equality/inequality/stationarity residuals.
    pub tol_feas: f64,
    /// Tolerance on the average complementarity product.
    pub tol_gap: f64,
    pub reg_primal: f64,
    pub reg_dual: f64,
    pub refine_steps: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            max_iters: 100,
            tol_feas: 1e-10,
            tol_gap: 1e-9,
            reg_primal: 1e-10,
            reg_dual: 1e-10,
            refine_steps: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: Vec<f64>,
    /// Equality multipliers: 4 for the initial state, then 4 per dynamics row.
    pub y: Vec<f64>,
    /// Inequality multipliers, one per row.
    pub lambda: Vec<f64>,
    /// Inequality slacks, one per row.
    pub slack: Vec<f64>,
    pub iterations: usize,
    pub mu: f64,
    pub res_eq: f64,
    pub res_ineq: f64,
    pub res_stat: f64,
    pub converged: bool,
}

/// Symmetric banded matrix in lower-band storage with LDLᵀ factorization.
/// `data[i·(bw+1) + d]` holds M[i][i−d].
pub(crate) struct BandLdl {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandLdl {
    pub(crate) fn new(n: usize, bw: usize) -> Self {
        BandLdl {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub(crate) fn zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j && i - j <= self.bw);
        self.data[i * (self.bw + 1) + (i - j)] += v;
    }

    pub(crate) fn copy_from(&mut self, other: &BandLdl) {
        self.data.copy_from_slice(&other.data);
    }

    /// In-place LDLᵀ. No pivoting: intended for quasi-definite systems.
    pub(crate) fn factorize(&mut self) -> bool {
        let w = self.bw + 1;
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.bw);
            for j in jmin..i {
                let mut sum = self.data[i * w + (i - j)];
                for k in jmin..j {
                    sum -= self.data[i * w + (i - k)]
                        * self.data[k * w]
                        * self.data[j * w + (j - k)];
                }
                let d = self.data[j * w];
                self.data[i * w + (i - j)] = sum / d;
            }
            let mut dsum = self.data[i * w];
            for k in jmin..i {
                let l = self.data[i * w + (i - k)];
                dsum -= l * l * self.data[k * w];
            }
            if dsum == 0.0 || !dsum.is_finite() {
                return false;
            }
            self.data[i * w] = dsum;
        }
        true
    }

    pub(crate) fn solve_in_place(&self, r: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.bw);
            let mut v = r[i];
            for k in jmin..i {
                v -= self.data[i * w + (i - k)] * r[k];
            }
            r[i] = v;
        }
        for i in 0..self.n {
            r[i] /= self.data[i * w];
        }
        for i in (0..self.n).rev() {
            let mmax = (i + self.bw).min(self.n - 1);
            let mut v = r[i];
            for m in (i + 1)..=mmax {
                v -= self.data[m * w + (m - i)] * r[m];
            }
            r[i] = v;
        }
    }
}

/// Half-bandwidth of the interleaved KKT ordering.
const KKT_BW: usize = 9;

/// Mapping between (primal variable / equality row) indices and the
/// interleaved band ordering [y_init, w_0, y_0, w_1, y_1, …, w_N].
struct KktLayout {
    n_stages: usize,
}

impl KktLayout {
    fn dim(&self) -> usize {
        // 4 init duals + per earlier stage (6 vars + 4 duals) + final 6 vars.
        10 * self.n_stages
    }

    #[inline]
    fn primal(&self, idx: usize) -> usize {
        let stage = idx / STAGE_VARS;
        let within = idx % STAGE_VARS;
        4 + 10 * stage + within
    }

    #[inline]
    fn dual(&self, row: usize) -> usize {
        if row < 4 {
            row
        } else {
            let k = (row - 4) / 4;
            let r = (row - 4) % 4;
            4 + 10 * k + 6 + r
        }
    }
}

struct Workspace {
    kkt: BandLdl,
    template: BandLdl,
    rhs: Vec<f64>,
    sol: Vec<f64>,
    resid: Vec<f64>,
    r_d: Vec<f64>,
    r_e: Vec<f64>,
    r_g: Vec<f64>,
    r_c: Vec<f64>,
    dz: Vec<f64>,
    dy: Vec<f64>,
    dlam: Vec<f64>,
    dt: Vec<f64>,
    dz_cc: Vec<f64>,
    dy_cc: Vec<f64>,
    dlam_cc: Vec<f64>,
    dt_cc: Vec<f64>,
    d_scale: Vec<f64>,
}

/// Solve the stage QP starting from the (equality-consistent) primal guess.
pub fn solve_qp(qp: &StageQp, z_init: &[f64], opts: &IpmOptions) -> QpSolution {
    let nz = qp.n_vars();
    let ne = qp.n_eq();
    let mi = qp.ineqs.len();
    assert_eq!(z_init.len(), nz);

    let layout = KktLayout { n_stages: qp.n_stages };
    let dim = layout.dim();
    let mut ws = Workspace {
        kkt: BandLdl::new(dim, KKT_BW),
        template: BandLdl::new(dim, KKT_BW),
        rhs: vec![0.0; dim],
        sol: vec![0.0; dim],
        resid: vec![0.0; dim],
        r_d: vec![0.0; nz],
        r_e: vec![0.0; ne],
        r_g: vec![0.0; mi],
        r_c: vec![0.0; mi],
        dz: vec![0.0; nz],
        dy: vec![0.0; ne],
        dlam: vec![0.0; mi],
        dt: vec![0.0; mi],
        dz_cc: vec![0.0; nz],
        dy_cc: vec![0.0; ne],
        dlam_cc: vec![0.0; mi],
        dt_cc: vec![0.0; mi],
        d_scale: vec![0.0; mi],
    };

    build_template(qp, opts, &layout, &mut ws.template);

    let mut z = z_init.to_vec();
    let mut y = vec![0.0; ne];

    // Starting point: one Newton solve from (z, y=0, λ=e, t=e) taken with a
    // full step, then the complementarity pair shifted positive. This buys
    // equality-dual (co-state) estimates of the right magnitude, without
    // which badly violated slack penalties stall the first iterations.
    let mut lam = vec![1.0; mi];
    let mut t = vec![1.0; mi];
    {
        residuals(qp, &z, &y, &lam, &t, &mut ws.r_d, &mut ws.r_e, &mut ws.r_g);
        for i in 0..mi {
            ws.r_c[i] = lam[i] * t[i];
        }
        ws.kkt.copy_from(&ws.template);
        for (i, row) in qp.ineqs.iter().enumerate() {
            ws.d_scale[i] = 1.0;
            let off = qp.offset(row.stage);
            for (ai, av) in &row.terms {
                for (bi, bv) in &row.terms {
                    let p = layout.primal(off + ai);
                    let q = layout.primal(off + bi);
                    if p >= q {
                        ws.kkt.add(p, q, av * bv);
                    }
                }
            }
        }
        if ws.kkt.factorize() {
            solve_newton(qp, opts, &layout, &mut ws, &lam, &t);
            for i in 0..nz {
                z[i] += ws.dz[i];
            }
            for r in 0..ne {
                y[r] += ws.dy[r];
            }
            for i in 0..mi {
                lam[i] += ws.dlam[i];
                t[i] += ws.dt[i];
            }
            if mi > 0 {
                let t_shift = t.iter().cloned().fold(f64::INFINITY, f64::min);
                let l_shift = lam.iter().cloned().fold(f64::INFINITY, f64::min);
                let dt = (-1.5 * t_shift).max(0.0) + 1e-3;
                let dl = (-1.5 * l_shift).max(0.0) + 1e-3;
                t.iter_mut().for_each(|v| *v += dt);
                lam.iter_mut().for_each(|v| *v += dl);
                let dot: f64 = t.iter().zip(&lam).map(|(a, b)| a * b).sum();
                let t2 = 0.5 * dot / lam.iter().sum::<f64>();
                let l2 = 0.5 * dot / t.iter().sum::<f64>();
                t.iter_mut().for_each(|v| *v += t2);
                lam.iter_mut().for_each(|v| *v += l2);
            }
        } else {
            let gz = ineq_values(qp, &z);
            for i in 0..mi {
                t[i] = (qp.ineqs[i].rhs - gz[i]).max(1e-2);
                lam[i] = (1.0 / t[i]).clamp(1e-8, 1e8);
            }
        }
    }

    let c_scale = 1.0 + qp.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let b_scale = 1.0 + qp.x0.abs().max();
    let h_scale = 1.0 + qp.ineqs.iter().fold(0.0_f64, |m, r| m.max(r.rhs.abs()));

    let mut best = QpSolution {
        z: z.clone(),
        y: y.clone(),
        lambda: lam.clone(),
        slack: t.clone(),
        iterations: 0,
        mu: f64::INFINITY,
        res_eq: f64::INFINITY,
        res_ineq: f64::INFINITY,
        res_stat: f64::INFINITY,
        converged: false,
    };
    let mut stall = 0usize;

    for iter in 0..opts.max_iters {
        residuals(qp, &z, &y, &lam, &t, &mut ws.r_d, &mut ws.r_e, &mut ws.r_g);
        let mu = if mi > 0 {
            lam.iter().zip(&t).map(|(l, s)| l * s).sum::<f64>() / mi as f64
        } else {
            0.0
        };
        let res_stat = inf_norm(&ws.r_d) / c_scale;
        let res_eq = inf_norm(&ws.r_e) / b_scale;
        let res_ineq = inf_norm(&ws.r_g) / h_scale;

        if std::env::var_os("PLANNETX_QP_DEBUG").is_some() {
            eprintln!(
                "ipm iter {iter}: mu={mu:.3e} stat={res_stat:.3e} eq={res_eq:.3e} ineq={res_ineq:.3e}"
            );
        }
        let score = res_stat.max(res_eq).max(res_ineq).max(mu);
        let best_score = best.res_stat.max(best.res_eq).max(best.res_ineq).max(best.mu);
        if score < best_score {
            best = QpSolution {
                z: z.clone(),
                y: y.clone(),
                lambda: lam.clone(),
                slack: t.clone(),
                iterations: iter,
                mu,
                res_eq,
                res_ineq,
                res_stat,
                converged: false,
            };
        }
        if score < 0.99 * best_score {
            stall = 0;
        } else {
            stall += 1;
        }

        if res_stat < opts.tol_feas.max(1e-11)
            && res_eq < opts.tol_feas
            && res_ineq < opts.tol_feas
            && mu < opts.tol_gap
        {
            best.converged = true;
            best.iterations = iter + 1;
            return best;
        }
        if stall > 30 {
            break;
        }

        // Assemble the barrier-weighted KKT matrix.
        ws.kkt.copy_from(&ws.template);
        for (i, row) in qp.ineqs.iter().enumerate() {
            ws.d_scale[i] = lam[i] / t[i];
            let off = qp.offset(row.stage);
            for (ai, av) in &row.terms {
                for (bi, bv) in &row.terms {
                    let p = layout.primal(off + ai);
                    let q = layout.primal(off + bi);
                    if p >= q {
                        ws.kkt.add(p, q, ws.d_scale[i] * av * bv);
                    }
                }
            }
        }
        if !ws.kkt.factorize() {
            break;
        }

        // Predictor (affine scaling) direction: r_c = ΛTe.
        for i in 0..mi {
            ws.r_c[i] = lam[i] * t[i];
        }
        solve_newton(qp, opts, &layout, &mut ws, &lam, &t);
        std::mem::swap(&mut ws.dz, &mut ws.dz_cc);
        std::mem::swap(&mut ws.dy, &mut ws.dy_cc);
        std::mem::swap(&mut ws.dlam, &mut ws.dlam_cc);
        std::mem::swap(&mut ws.dt, &mut ws.dt_cc);
        // (affine direction now lives in the _cc buffers)

        let alpha_aff_p = step_length(&t, &ws.dt_cc).min(1.0);
        let alpha_aff_d = step_length(&lam, &ws.dlam_cc).min(1.0);
        let mu_aff = if mi > 0 {
            (0..mi)
                .map(|i| {
                    (lam[i] + alpha_aff_d * ws.dlam_cc[i]) * (t[i] + alpha_aff_p * ws.dt_cc[i])
                })
                .sum::<f64>()
                / mi as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 {
            (mu_aff / mu).powi(3).clamp(0.0, 1.0)
        } else {
            0.0
        };

        // Corrector: r_c = ΛTe − σμe + ΔΛ_aff ΔT_aff e.
        for i in 0..mi {
            ws.r_c[i] = lam[i] * t[i] - sigma * mu + ws.dlam_cc[i] * ws.dt_cc[i];
        }
        solve_newton(qp, opts, &layout, &mut ws, &lam, &t);

        let tau = 0.995;
        let alpha_p = (tau * step_length(&t, &ws.dt)).min(1.0);
        let alpha_d = (tau * step_length(&lam, &ws.dlam)).min(1.0);

        if std::env::var_os("PLANNETX_QP_DEBUG").is_some() {
            let alpha = alpha_p.min(alpha_d);
            // Verify the Newton equations for the corrector direction.
            let mut e1 = 0.0_f64;
            let mut tmp = vec![0.0; nz];
            for i in 0..nz {
                tmp[i] = qp.q_diag[i] * ws.dz[i] + ws.r_d[i];
            }
            for r in 0..4 {
                tmp[r] += ws.dy[r];
            }
            for k in 0..qp.n_stages - 1 {
                for r in 0..4 {
                    let dyv = ws.dy[4 + 4 * k + r];
                    tmp[qp.offset(k + 1) + r] += dyv;
                    for cidx in 0..4 {
                        tmp[qp.offset(k) + cidx] -= qp.a_mat[(r, cidx)] * dyv;
                    }
                    tmp[qp.offset(k) + 4] -= qp.b_vec[r] * dyv;
                }
            }
            for (i, row) in qp.ineqs.iter().enumerate() {
                let off = qp.offset(row.stage);
                for (vi, coeff) in &row.terms {
                    tmp[off + vi] += coeff * ws.dlam[i];
                }
            }
            for v in &tmp {
                e1 = e1.max(v.abs());
            }
            let mut e4 = 0.0_f64;
            for i in 0..mi {
                e4 = e4.max((t[i] * ws.dlam[i] + lam[i] * ws.dt[i] + ws.r_c[i]).abs());
            }
            let mut block_p = (f64::INFINITY, usize::MAX);
            let mut block_d = (f64::INFINITY, usize::MAX);
            for i in 0..mi {
                if ws.dt[i] < 0.0 && -t[i] / ws.dt[i] < block_p.0 {
                    block_p = (-t[i] / ws.dt[i], i);
                }
                if ws.dlam[i] < 0.0 && -lam[i] / ws.dlam[i] < block_d.0 {
                    block_d = (-lam[i] / ws.dlam[i], i);
                }
            }
            eprintln!(
                "  newton: stat_err={e1:.3e} comp_err={e4:.3e} alpha={alpha:.3e} sigma={sigma:.3e} blk_p={:?} blk_d={:?}",
                block_p, block_d
            );
        }

        for i in 0..nz {
            z[i] += alpha_p * ws.dz[i];
        }
        for i in 0..ne {
            y[i] += alpha_d * ws.dy[i];
        }
        for i in 0..mi {
            lam[i] = (lam[i] + alpha_d * ws.dlam[i]).max(1e-300);
            t[i] = (t[i] + alpha_p * ws.dt[i]).max(1e-300);
        }
    }

    best
}

/// Solve one Newton system with the current factorization and the
/// complementarity residual in `ws.r_c`; writes the direction into
/// `ws.dz/dy/dlam/dt`.
fn solve_newton(
    qp: &StageQp,
    opts: &IpmOptions,
    layout: &KktLayout,
    ws: &mut Workspace,
    lam: &[f64],
    t: &[f64],
) {
    let nz = qp.n_vars();
    let ne = qp.n_eq();

    // rhs1 = −r_d − Gᵀ((Λ r_g − r_c)/t), rhs2 = −r_e.
    let mut rhs1 = vec![0.0; nz];
    for i in 0..nz {
        rhs1[i] = -ws.r_d[i];
    }
    for (i, row) in qp.ineqs.iter().enumerate() {
        let w = (lam[i] * ws.r_g[i] - ws.r_c[i]) / t[i];
        let off = qp.offset(row.stage);
        for (vi, coeff) in &row.terms {
            rhs1[off + vi] -= coeff * w;
        }
    }

    ws.rhs.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..nz {
        ws.rhs[layout.primal(i)] = rhs1[i];
    }
    for r in 0..ne {
        ws.rhs[layout.dual(r)] = -ws.r_e[r];
    }

    ws.sol.copy_from_slice(&ws.rhs);
    ws.kkt.solve_in_place(&mut ws.sol);

    // Iterative refinement against the unregularized KKT operator.
    for _ in 0..opts.refine_steps {
        kkt_apply(qp, layout, &ws.d_scale, &ws.sol, &mut ws.resid);
        let mut worst = 0.0_f64;
        for i in 0..ws.resid.len() {
            ws.resid[i] = ws.rhs[i] - ws.resid[i];
            worst = worst.max(ws.resid[i].abs());
        }
        if worst < 1e-13 {
            break;
        }
        ws.kkt.solve_in_place(&mut ws.resid);
        for i in 0..ws.sol.len() {
            ws.sol[i] += ws.resid[i];
        }
    }

    for i in 0..nz {
        ws.dz[i] = ws.sol[layout.primal(i)];
    }
    for r in 0..ne {
        ws.dy[r] = ws.sol[layout.dual(r)];
    }
    // Δt = −r_g − GΔz ; Δλ = −(r_c + Λ Δt)/t.
    for (i, row) in qp.ineqs.iter().enumerate() {
        let off = qp.offset(row.stage);
        let mut gdz = 0.0;
        for (vi, coeff) in &row.terms {
            gdz += coeff * ws.dz[off + vi];
        }
        ws.dt[i] = -ws.r_g[i] - gdz;
        ws.dlam[i] = -(ws.r_c[i] + lam[i] * ws.dt[i]) / t[i];
    }
}

/// Unregularized KKT operator applied to a vector in band layout.
fn kkt_apply(qp: &StageQp, layout: &KktLayout, d_scale: &[f64], v: &[f64], out: &mut [f64]) {
    let nz = qp.n_vars();
    out.iter_mut().for_each(|o| *o = 0.0);

    // Primal rows: (Q + GᵀDG) z + Âᵀ y.
    for i in 0..nz {
        out[layout.primal(i)] += qp.q_diag[i] * v[layout.primal(i)];
    }
    for (i, row) in qp.ineqs.iter().enumerate() {
        let off = qp.offset(row.stage);
        let mut gz = 0.0;
        for (vi, coeff) in &row.terms {
            gz += coeff * v[layout.primal(off + vi)];
        }
        let w = d_scale[i] * gz;
        for (vi, coeff) in &row.terms {
            out[layout.primal(off + vi)] += coeff * w;
        }
    }
    // Equality coupling. Init rows: x_0 − x̄0.
    for r in 0..4 {
        let yb = layout.dual(r);
        out[layout.primal(r)] += v[yb];
        out[yb] += v[layout.primal(r)];
    }
    // Dynamics rows k: x_{k+1} − A x_k − B u_k.
    let n = qp.n_stages - 1;
    for k in 0..n {
        for r in 0..4 {
            let row = 4 + 4 * k + r;
            let yb = layout.dual(row);
            let mut az = v[layout.primal(qp.offset(k + 1) + r)];
            for cidx in 0..4 {
                az -= qp.a_mat[(r, cidx)] * v[layout.primal(qp.offset(k) + cidx)];
            }
            az -= qp.b_vec[r] * v[layout.primal(qp.offset(k) + 4)];
            out[yb] += az;

            let yv = v[yb];
            out[layout.primal(qp.offset(k + 1) + r)] += yv;
            for cidx in 0..4 {
                out[layout.primal(qp.offset(k) + cidx)] -= qp.a_mat[(r, cidx)] * yv;
            }
            out[layout.primal(qp.offset(k) + 4)] -= qp.b_vec[r] * yv;
        }
    }
}

/// Constant part of the KKT matrix: cost diagonal, regularization, and
/// equality coupling blocks.
fn build_template(qp: &StageQp, opts: &IpmOptions, layout: &KktLayout, band: &mut BandLdl) {
    band.zero();
    let nz = qp.n_vars();
    let ne = qp.n_eq();
    for i in 0..nz {
        let b = layout.primal(i);
        band.add(b, b, qp.q_diag[i] + opts.reg_primal);
    }
    for r in 0..ne {
        let b = layout.dual(r);
        band.add(b, b, -opts.reg_dual);
    }
    // Init rows: coefficient I on x_0.
    for r in 0..4 {
        let yb = layout.dual(r);
        let pb = layout.primal(r);
        band.add(pb.max(yb), pb.min(yb), 1.0);
    }
    // Dynamics rows.
    let n = qp.n_stages - 1;
    for k in 0..n {
        for r in 0..4 {
            let yb = layout.dual(4 + 4 * k + r);
            for cidx in 0..4 {
                let pb = layout.primal(qp.offset(k) + cidx);
                let v = -qp.a_mat[(r, cidx)];
                if v != 0.0 {
                    band.add(yb.max(pb), yb.min(pb), v);
                }
            }
            let ub = layout.primal(qp.offset(k) + 4);
            band.add(yb.max(ub), yb.min(ub), -qp.b_vec[r]);
            let xb = layout.primal(qp.offset(k + 1) + r);
            band.add(xb.max(yb), xb.min(yb), 1.0);
        }
    }
}

fn residuals(
    qp: &StageQp,
    z: &[f64],
    y: &[f64],
    lam: &[f64],
    t: &[f64],
    r_d: &mut [f64],
    r_e: &mut [f64],
    r_g: &mut [f64],
) {
    let nz = qp.n_vars();
    for i in 0..nz {
        r_d[i] = qp.q_diag[i] * z[i] + qp.c[i];
    }
    for (i, row) in qp.ineqs.iter().enumerate() {
        let off = qp.offset(row.stage);
        for (vi, coeff) in &row.terms {
            r_d[off + vi] += coeff * lam[i];
        }
    }
    // Equality residuals and Âᵀy.
    for r in 0..4 {
        r_e[r] = z[r] - qp.x0[r];
        r_d[r] += y[r];
    }
    let n = qp.n_stages - 1;
    for k in 0..n {
        let off_k = qp.offset(k);
        let off_k1 = qp.offset(k + 1);
        for r in 0..4 {
            let row = 4 + 4 * k + r;
            let mut v = z[off_k1 + r];
            for cidx in 0..4 {
                v -= qp.a_mat[(r, cidx)] * z[off_k + cidx];
            }
            v -= qp.b_vec[r] * z[off_k + 4];
            r_e[row] = v;

            let yv = y[row];
            r_d[off_k1 + r] += yv;
            for cidx in 0..4 {
                r_d[off_k + cidx] -= qp.a_mat[(r, cidx)] * yv;
            }
            r_d[off_k + 4] -= qp.b_vec[r] * yv;
        }
    }
    for (i, row) in qp.ineqs.iter().enumerate() {
        let off = qp.offset(row.stage);
        let mut gz = 0.0;
        for (vi, coeff) in &row.terms {
            gz += coeff * z[off + vi];
        }
        r_g[i] = gz + t[i] - row.rhs;
    }
}

/// Values of the inequality left-hand sides g·z.
pub fn ineq_values(qp: &StageQp, z: &[f64]) -> Vec<f64> {
    qp.ineqs
        .iter()
        .map(|row| {
            let off = qp.offset(row.stage);
            row.terms.iter().map(|(vi, c)| c * z[off + vi]).sum()
        })
        .collect()
}

fn step_length(v: &[f64], dv: &[f64]) -> f64 {
    let mut alpha = 1.0_f64;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-v[i] / dv[i]);
        }
    }
    alpha
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_ldl_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 40 + trial;
            let bw = 9;
            let mut band = BandLdl::new(n, bw);
            let mut dense = DMatrix::<f64>::zeros(n, n);
            // Random quasi-definite banded matrix: alternate sign blocks.
            for i in 0..n {
                let sign = if i % 10 < 6 { 1.0 } else { -1.0 };
                let d = sign * (1.0 + rng.gen::<f64>());
                band.add(i, i, d);
                dense[(i, i)] = d;
                for j in i.saturating_sub(bw)..i {
                    if rng.gen::<f64>() < 0.4 {
                        let v = rng.gen_range(-0.3..0.3);
                        band.add(i, j, v);
                        dense[(i, j)] = v;
                        dense[(j, i)] = v;
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut x = rhs.clone();
            assert!(band.factorize());
            band.solve_in_place(&mut x);
            let lu = dense.clone().lu();
            let x_ref = lu.solve(&DVector::from_vec(rhs)).unwrap();
            for i in 0..n {
                assert!(
                    (x[i] - x_ref[i]).abs() < 1e-8 * (1.0 + x_ref[i].abs()),
                    "mismatch at {i}: {} vs {}",
                    x[i],
                    x_ref[i]
                );
            }
        }
    }

    fn toy_qp(n_stages: usize) -> (StageQp, Vec<f64>) {
        // Double-integrator-like chain with light costs and a few boxes.
        let t = 0.2;
        let dynamics = crate::dynamics::DiscreteDynamics::new(t).unwrap();
        let nz = STAGE_VARS * n_stages;
        let mut q = vec![0.0; nz];
        let mut c = vec![0.0; nz];
        for k in 0..n_stages {
            let off = STAGE_VARS * k;
            q[off + 2] = 2.0;
            q[off + 3] = 1.0;
            q[off + 4] = 0.2;
            q[off + 5] = 10.0;
            c[off] = -0.5;
        }
        let mut ineqs = Vec::new();
        for k in 0..n_stages {
            ineqs.push(IneqRow { stage: k, terms: vec![(4, 1.0)], rhs: 5.0 });
            ineqs.push(IneqRow { stage: k, terms: vec![(4, -1.0)], rhs: 5.0 });
            ineqs.push(IneqRow { stage: k, terms: vec![(1, 1.0)], rhs: 30.0 });
            ineqs.push(IneqRow { stage: k, terms: vec![(1, -1.0)], rhs: 0.0 });
            ineqs.push(IneqRow { stage: k, terms: vec![(5, -1.0)], rhs: 0.0 });
        }
        let x0 = nalgebra::SVector::from([0.0, 10.0, 0.0, 0.0]);
        let qp = StageQp {
            n_stages,
            q_diag: q,
            c,
            a_mat: dynamics.a_d,
            b_vec: dynamics.b_d,
            x0,
            ineqs,
        };
        // Equality-consistent start: coast from x0 with u = 0.
        let mut z = vec![0.0; nz];
        let mut x = x0;
        for k in 0..n_stages {
            for i in 0..4 {
                z[STAGE_VARS * k + i] = x[i];
            }
            x = dynamics.a_d * x;
        }
        (qp, z)
    }

    /// The returned point must satisfy the KKT conditions of the QP itself:
    /// primal/dual feasibility, stationarity, complementarity.
    #[test]
    fn ipm_satisfies_kkt_conditions() {
        let (qp, z0) = toy_qp(12);
        let sol = solve_qp(&qp, &z0, &IpmOptions::default());
        assert!(sol.converged, "IPM failed: {sol:?}");
        assert!(sol.res_stat < 1e-9);
        assert!(sol.res_eq < 1e-9);
        assert!(sol.res_ineq < 1e-9);
        assert!(sol.mu < 1e-8);
        let gz = ineq_values(&qp, &sol.z);
        for i in 0..qp.ineqs.len() {
            assert!(gz[i] <= qp.ineqs[i].rhs + 1e-7, "primal infeasible row {i}");
            assert!(sol.lambda[i] >= -1e-12, "negative multiplier {i}");
            let product = (sol.lambda[i] * (gz[i] - qp.ineqs[i].rhs)).abs();
            assert!(product < 1e-6, "complementarity row {i}: {product}");
        }
    }

    /// Cross-check against a dense LU solve of the same barrier-free problem
    /// when no inequality is active: drop all rows, solve [Q Âᵀ; Â 0].
    #[test]
    fn matches_dense_equality_solve_when_inactive() {
        let (mut qp, z0) = toy_qp(8);
        // Push the boxes far out so nothing activates.
        for row in &mut qp.ineqs {
            if row.terms[0].0 != 5 {
                row.rhs = 1e4;
            }
        }
        let sol = solve_qp(&qp, &z0, &IpmOptions::default());
        assert!(sol.converged);

        let nz = qp.n_vars();
        let ne = qp.n_eq();
        let mut kkt = DMatrix::<f64>::zeros(nz + ne, nz + ne);
        for i in 0..nz {
            kkt[(i, i)] = qp.q_diag[i];
        }
        // ζ ≥ 0 active at 0 is equivalent to fixing ζ = 0 here (q > 0, c = 0),
        // so substitute the unconstrained ζ stationary point ζ = 0 directly.
        let mut rhs = DVector::<f64>::zeros(nz + ne);
        for i in 0..nz {
            rhs[i] = -qp.c[i];
        }
        for r in 0..4 {
            kkt[(nz + r, r)] = 1.0;
            kkt[(r, nz + r)] = 1.0;
            rhs[nz + r] = qp.x0[r];
        }
        for k in 0..qp.n_stages - 1 {
            for r in 0..4 {
                let row = nz + 4 + 4 * k + r;
                kkt[(row, STAGE_VARS * (k + 1) + r)] = 1.0;
                kkt[(STAGE_VARS * (k + 1) + r, row)] = 1.0;
                for cidx in 0..4 {
                    kkt[(row, STAGE_VARS * k + cidx)] = -qp.a_mat[(r, cidx)];
                    kkt[(STAGE_VARS * k + cidx, row)] = -qp.a_mat[(r, cidx)];
                }
                kkt[(row, STAGE_VARS * k + 4)] = -qp.b_vec[r];
                kkt[(STAGE_VARS * k + 4, row)] = -qp.b_vec[r];
            }
        }
        let x_ref = kkt.lu().solve(&rhs).expect("dense KKT solvable");
        for i in 0..nz {
            // Slack entries (index 5 within each stage) sit on a degenerate
            // ζ = 0, λ = 0 face and only converge to O(√μ); skip them.
            if i % STAGE_VARS == 5 {
                continue;
            }
            assert!(
                (sol.z[i] - x_ref[i]).abs() < 1e-6,
                "z[{i}]: {} vs {}",
                sol.z[i],
                x_ref[i]
            );
        }
    }

    #[test]
    fn far_away_rhs_is_handled() {
        let (mut qp, z0) = toy_qp(10);
        for row in &mut qp.ineqs {
            if row.terms[0].0 == 1 && row.terms[0].1 > 0.0 {
                row.rhs = 1e6;
            }
        }
        let sol = solve_qp(&qp, &z0, &IpmOptions::default());
        assert!(sol.converged, "badly scaled rhs broke the IPM: {sol:?}");
        assert!(sol.mu < 1e-8);
    }
}
