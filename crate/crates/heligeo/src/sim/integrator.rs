//! Fourth-order Runge–Kutta–Munthe-Kaas stepping on `SO(3) × ℝᴺ`.
//!
//! The attitude obeys `Ṙ = R ω̂` where `ω` is the first three components of
//! the vector state. Stages are formed in the Lie algebra: each stage rotation
//! is `R · exp(θᵢ)` with `θᵢ` built from earlier stage increments corrected by
//! the inverse differential of the exponential, and the step composes
//! `R ← R · exp(h · Σ bᵢ κᵢ)`. Every attitude produced is a product of exact
//! rotations, so orthonormality only drifts by rounding.

use nalgebra::SVector;

use crate::so3::{Rotation, Vec3};

/// `dexp⁻¹_u(v)` for the right-trivialised exponential, truncated after the
/// second bracket (enough for fourth order).
pub fn dexp_inv(u: &Vec3, v: &Vec3) -> Vec3 {
    let uv = u.cross(v);
    v + uv * 0.5 + u.cross(&uv) / 12.0
}

fn rate<const N: usize>(x: &SVector<f64, N>) -> Vec3 {
    x.fixed_rows::<3>(0).into_owned()
}

/// One RKMK4 step of size `h` (negative `h` integrates backwards).
///
/// `f(t, R, x)` returns `ẋ`; the attitude is driven by `x[0..3]`.
pub fn rkmk4_step<const N: usize, F>(
    r: &Rotation,
    x: &SVector<f64, N>,
    t: f64,
    h: f64,
    mut f: F,
) -> (Rotation, SVector<f64, N>)
where
    F: FnMut(f64, &Rotation, &SVector<f64, N>) -> SVector<f64, N>,
{
    let k1 = f(t, r, x);
    let kappa1 = rate(x);

    let theta2 = kappa1 * (h / 2.0);
    let x2 = x + k1 * (h / 2.0);
    let r2 = r.right_exp(&theta2);
    let k2 = f(t + h / 2.0, &r2, &x2);
    let kappa2 = dexp_inv(&theta2, &rate(&x2));

    let theta3 = kappa2 * (h / 2.0);
    let x3 = x + k2 * (h / 2.0);
    let r3 = r.right_exp(&theta3);
    let k3 = f(t + h / 2.0, &r3, &x3);
    let kappa3 = dexp_inv(&theta3, &rate(&x3));

    let theta4 = kappa3 * h;
    let x4 = x + k3 * h;
    let r4 = r.right_exp(&theta4);
    let k4 = f(t + h, &r4, &x4);
    let kappa4 = dexp_inv(&theta4, &rate(&x4));

    let theta = (kappa1 + kappa2 * 2.0 + kappa3 * 2.0 + kappa4) * (h / 6.0);
    let x_next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    (r.right_exp(&theta), x_next)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    use super::*;
    use crate::model::{fuselage_accel, kinetic_energy, BodyState, HeliParams};
    use crate::so3::exp_so3;

    fn free_rigid(p: &HeliParams) -> impl FnMut(f64, &Rotation, &Vector3<f64>) -> Vector3<f64> + '_ {
        move |_, r, w| fuselage_accel(p, &BodyState { r: *r, w: *w }, &Vec3::zeros())
    }

    fn integrate(p: &HeliParams, w0: Vec3, h: f64, steps: usize) -> (Rotation, Vec3) {
        let (mut r, mut w) = (Rotation::identity(), w0);
        for i in 0..steps {
            (r, w) = rkmk4_step(&r, &w, i as f64 * h, h, free_rigid(p));
        }
        (r, w)
    }

    #[test]
    fn equilibrium_is_fixed() {
        let p = HeliParams::reference_helicopter();
        let (r, w) = integrate(&p, Vec3::zeros(), 1e-3, 100);
        assert_eq!(r, Rotation::identity());
        assert_eq!(w, Vec3::zeros());
    }

    #[test]
    fn pure_spin_reaches_half_turn() {
        let p = HeliParams::reference_helicopter();
        let h = PI / 3000.0;
        let (r, w) = integrate(&p, Vec3::new(1.0, 0.0, 0.0), h, 3000);
        let expected = exp_so3(&Vec3::new(PI, 0.0, 0.0));
        assert!((r.matrix() - expected.matrix()).amax() < 1e-8);
        assert_eq!(w, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn backward_step_undoes_forward_step() {
        let p = HeliParams::reference_helicopter();
        let r0 = exp_so3(&Vec3::new(0.2, 0.4, -0.1));
        let w0 = Vec3::new(1.5, -0.7, 2.0);
        let (r1, w1) = rkmk4_step(&r0, &w0, 0.0, 1e-3, free_rigid(&p));
        let (r2, w2) = rkmk4_step(&r1, &w1, 1e-3, -1e-3, free_rigid(&p));
        assert!((r2.matrix() - r0.matrix()).amax() < 1e-13);
        assert_relative_eq!(w2, w0, epsilon = 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let p = HeliParams::reference_helicopter();
        let w0 = Vec3::new(2.0, 1.0, -3.0);
        let horizon = 1.0;
        let error = |h: f64| {
            let steps = (horizon / h).round() as usize;
            let (r, w) = integrate(&p, w0, h, steps);
            let (rr, wr) = integrate(&p, w0, h / 32.0, steps * 32);
            (r.matrix() - rr.matrix()).norm() + (w - wr).norm()
        };
        let ratio = error(0.02) / error(0.01);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn torque_free_energy_and_orthonormality() {
        let p = HeliParams::reference_helicopter();
        let w0 = Vec3::new(1.0, 0.5, -0.8);
        let (r, w) = integrate(&p, w0, 1e-3, 10_000);
        let e0 = kinetic_energy(&p, &w0);
        assert!(((kinetic_energy(&p, &w) - e0) / e0).abs() < 1e-8);
        assert!(r.orthonormality_error() < 1e-9);
    }
}
