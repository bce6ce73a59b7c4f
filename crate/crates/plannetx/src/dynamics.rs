//! Exact zero-order-hold discretization of the quadruple-integrator
//! longitudinal model d⁴s/dt⁴ = u and the one-step affine transition.
//!
//! The continuous system is an integrator chain over [s, v, a, j] driven by
//! the snap u, so the matrix exponential terminates after four terms and the
//! discretization is exact for piecewise constant inputs.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::{PlanError, Result};

/// Longitudinal ego state: position, velocity, acceleration, jerk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Position of the vehicle front (m).
    pub s: f64,
    /// Velocity (m/s).
    pub v: f64,
    /// Acceleration (m/s²).
    pub a: f64,
    /// Jerk (m/s³).
    pub j: f64,
}

impl State {
    pub const DIM: usize = 4;

    pub fn new(s: f64, v: f64, a: f64, j: f64) -> Self {
        State { s, v, a, j }
    }

    pub fn zero() -> Self {
        State::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn as_vector(&self) -> SVector<f64, 4> {
        SVector::from([self.s, self.v, self.a, self.j])
    }

    pub fn from_vector(v: &SVector<f64, 4>) -> Self {
        State::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.v.is_finite() && self.a.is_finite() && self.j.is_finite()
    }

    /// Shift the position by `ds`, leaving derivatives untouched.
    pub fn translated(&self, ds: f64) -> Self {
        State::new(self.s + ds, self.v, self.a, self.j)
    }
}

/// Snap input of the integrator chain (m/s⁴).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub snap: f64,
}

impl Control {
    pub fn new(snap: f64) -> Self {
        Control { snap }
    }
}

impl From<f64> for Control {
    fn from(snap: f64) -> Self {
        Control { snap }
    }
}

/// Exact discrete-time transition x_{k+1} = A_d x_k + B_d u_k.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDynamics {
    pub t_d: f64,
    pub a_d: SMatrix<f64, 4, 4>,
    pub b_d: SVector<f64, 4>,
}

impl DiscreteDynamics {
    /// Discretize the integrator chain with step `t_d` (zero-order hold).
    ///
    /// A_d[i][k] = t_d^(k−i)/(k−i)! for k ≥ i, B_d = [t⁴/24, t³/6, t²/2, t]ᵀ.
    pub fn new(t_d: f64) -> Result<Self> {
        if !t_d.is_finite() || t_d <= 0.0 {
            return Err(PlanError::invalid(format!(
                "discretization time must be positive and finite, got {t_d}"
            )));
        }
        let mut a_d = SMatrix::<f64, 4, 4>::zeros();
        for i in 0..4 {
            let mut term = 1.0;
            for k in i..4 {
                a_d[(i, k)] = term;
                term *= t_d / (k - i + 1) as f64;
            }
        }
        let b_d = SVector::from([
            t_d.powi(4) / 24.0,
            t_d.powi(3) / 6.0,
            t_d.powi(2) / 2.0,
            t_d,
        ]);
        Ok(DiscreteDynamics { t_d, a_d, b_d })
    }

    /// One exact transition step.
    pub fn step(&self, x: &State, u: Control) -> State {
        let next = self.a_d * x.as_vector() + self.b_d * u.snap;
        State::from_vector(&next)
    }

    /// Constant Jacobians of `step`: (∂x_{k+1}/∂x_k, ∂x_{k+1}/∂u_k).
    pub fn jacobians(&self) -> (&SMatrix<f64, 4, 4>, &SVector<f64, 4>) {
        (&self.a_d, &self.b_d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Truncated-series matrix exponential of the continuous-time pair
    /// (A_c, B_c). Independent of the factorial construction above; the
    /// series terminates because A_c is nilpotent of index 4.
    fn series_oracle(t: f64) -> (SMatrix<f64, 4, 4>, SVector<f64, 4>) {
        let mut a_c = SMatrix::<f64, 4, 4>::zeros();
        a_c[(0, 1)] = 1.0;
        a_c[(1, 2)] = 1.0;
        a_c[(2, 3)] = 1.0;
        let b_c = SVector::from([0.0, 0.0, 0.0, 1.0]);

        let mut a_d = SMatrix::<f64, 4, 4>::identity();
        let mut term = SMatrix::<f64, 4, 4>::identity();
        let mut fact = 1.0;
        for m in 1..=6 {
            term *= a_c;
            fact *= m as f64;
            a_d += term * (t.powi(m as i32) / fact);
        }
        // B_d = ∫₀ᵗ exp(A τ) B dτ = Σ A^m B t^{m+1}/(m+1)!
        let mut b_d = b_c * t;
        let mut apow = SMatrix::<f64, 4, 4>::identity();
        let mut fact = 1.0;
        for m in 1..=6 {
            apow *= a_c;
            fact *= (m + 1) as f64;
            b_d += apow * b_c * (t.powi(m as i32 + 1) / fact);
        }
        (a_d, b_d)
    }

    #[test]
    fn unit_step_matches_factorial_series() {
        let dyn1 = DiscreteDynamics::new(1.0).unwrap();
        let row0: Vec<f64> = (0..4).map(|k| dyn1.a_d[(0, k)]).collect();
        assert_eq!(row0, vec![1.0, 1.0, 0.5, 1.0 / 6.0]);
        let expect_b = [1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0];
        for i in 0..4 {
            assert_abs_diff_eq!(dyn1.b_d[i], expect_b[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn matches_series_oracle_across_steps() {
        for &t in &[0.05, 0.1, 0.2, 0.5] {
            let d = DiscreteDynamics::new(t).unwrap();
            let (a_o, b_o) = series_oracle(t);
            assert!((d.a_d - a_o).abs().max() < 1e-12, "A_d mismatch at t_d={t}");
            assert!((d.b_d - b_o).abs().max() < 1e-12, "B_d mismatch at t_d={t}");
        }
    }

    #[test]
    fn constant_velocity_coasts() {
        let d = DiscreteDynamics::new(0.2).unwrap();
        let x = d.step(&State::new(0.0, 10.0, 0.0, 0.0), Control::new(0.0));
        assert_abs_diff_eq!(x.s, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.v, 10.0, epsilon = 1e-15);
        assert_eq!(x.a, 0.0);
        assert_eq!(x.j, 0.0);
    }

    #[test]
    fn snap_impulse_from_rest() {
        let d = DiscreteDynamics::new(0.2).unwrap();
        let x = d.step(&State::zero(), Control::new(24.0));
        assert_abs_diff_eq!(x.s, 0.0016, epsilon = 1e-12);
        assert_abs_diff_eq!(x.v, 0.032, epsilon = 1e-12);
        assert_abs_diff_eq!(x.a, 0.48, epsilon = 1e-12);
        assert_abs_diff_eq!(x.j, 4.8, epsilon = 1e-12);
    }

    #[test]
    fn braking_step_matches_oracle() {
        let d = DiscreteDynamics::new(0.2).unwrap();
        let x = d.step(&State::new(100.0, 20.0, -1.0, 0.0), Control::new(0.0));
        assert_abs_diff_eq!(x.s, 103.98, epsilon = 1e-12);
        assert_abs_diff_eq!(x.v, 19.8, epsilon = 1e-12);
        assert_abs_diff_eq!(x.a, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.j, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn semigroup_property() {
        let d1 = DiscreteDynamics::new(0.2).unwrap();
        let d2 = DiscreteDynamics::new(0.4).unwrap();
        let composed = d1.a_d * d1.a_d;
        assert!((composed - d2.a_d).abs().max() < 1e-12);

        let d3 = DiscreteDynamics::new(0.15).unwrap();
        let d4 = DiscreteDynamics::new(0.35).unwrap();
        let d5 = DiscreteDynamics::new(0.5).unwrap();
        assert!((d3.a_d * d4.a_d - d5.a_d).abs().max() < 1e-12);
    }

    #[test]
    fn step_is_affine() {
        let d = DiscreteDynamics::new(0.2).unwrap();
        let x1 = State::new(3.0, -1.0, 0.5, 0.2);
        let x2 = State::new(-7.0, 4.0, -0.25, 1.0);
        let sum = State::from_vector(&(x1.as_vector() + x2.as_vector()));
        let lhs = d.step(&sum, Control::new(1.5 + (-0.5))).as_vector();
        let rhs = d.step(&x1, Control::new(1.5)).as_vector()
            + d.step(&x2, Control::new(-0.5)).as_vector()
            - d.step(&State::zero(), Control::new(0.0)).as_vector();
        assert!((lhs - rhs).abs().max() < 1e-12);
    }

    #[test]
    fn constant_snap_matches_polynomial_response() {
        // From rest with u ≡ 1 the closed-form response after n steps of
        // size t is s = (n t)⁴/24, v = (n t)³/6, a = (n t)²/2, j = n t.
        let t = 0.1;
        let d = DiscreteDynamics::new(t).unwrap();
        let mut x = State::zero();
        for _ in 0..25 {
            x = d.step(&x, Control::new(1.0));
        }
        let total = 25.0 * t;
        assert_abs_diff_eq!(x.j, total, epsilon = 1e-12);
        assert_abs_diff_eq!(x.a, total * total / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.v, total.powi(3) / 6.0, epsilon = 1e-11);
        assert_abs_diff_eq!(x.s, total.powi(4) / 24.0, epsilon = 1e-11);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let d = DiscreteDynamics::new(0.2).unwrap();
        let x0 = State::new(12.0, 7.0, -0.5, 0.3);
        let u0 = 1.7;
        let h = 1e-6;
        for col in 0..4 {
            let mut plus = x0.as_vector();
            let mut minus = x0.as_vector();
            plus[col] += h;
            minus[col] -= h;
            let fd = (d.step(&State::from_vector(&plus), Control::new(u0)).as_vector()
                - d.step(&State::from_vector(&minus), Control::new(u0)).as_vector())
                / (2.0 * h);
            for row in 0..4 {
                assert_abs_diff_eq!(fd[row], d.a_d[(row, col)], epsilon = 1e-8);
            }
        }
        let fd_u = (d.step(&x0, Control::new(u0 + h)).as_vector()
            - d.step(&x0, Control::new(u0 - h)).as_vector())
            / (2.0 * h);
        for row in 0..4 {
            assert_abs_diff_eq!(fd_u[row], d.b_d[row], epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_bad_discretization_time() {
        assert!(DiscreteDynamics::new(0.0).is_err());
        assert!(DiscreteDynamics::new(-0.1).is_err());
        assert!(DiscreteDynamics::new(f64::NAN).is_err());
    }
}
