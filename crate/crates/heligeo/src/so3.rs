//! Rotation-group primitives and the attitude tracking-error geometry.
//!
//! Attitudes are rotation matrices mapping body-frame vectors into the spatial
//! frame. The tracking error between a current attitude `R` and a desired
//! attitude `Rd` is measured through the configuration error `Re = Rdᵀ R`:
//!
//! * `psi = ½ tr(I − Re)`, ranging over `[0, 2]` (the value 2 is reached at a
//!   half turn),
//! * `e_R = ½ (Re − Reᵀ)^∨`, whose norm is `sin θ` for the error angle `θ`,
//! * `e_w = ω − Rᵀ Rd ω_d`, the velocity error after transporting the desired
//!   body rate into the current body frame.
//!
//! Along any motion `d psi/dt = e_R · e_w` and `d e_R/dt = B(Re) e_w` with the
//! transport matrix `B(Re) = ½ (tr(Reᵀ) I − Reᵀ)`.

use std::ops::Mul;

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Tolerance on `‖mᵀm − I‖_F` and `|det m − 1|` accepted by [`Rotation::from_matrix`].
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Tolerance on the symmetric part accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

/// Below this rotation-vector norm [`exp_so3`] switches to its series form.
pub const EXP_SERIES_THRESHOLD: f64 = 1e-6;

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Wraps `m` after checking orthonormality and orientation.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NotRotation {
                ortho: f64::NAN,
                det: f64::NAN,
            });
        }
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if ortho > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::NotRotation { ortho, det });
        }
        Ok(Rotation(m))
    }

    /// Rotation by `angle` radians about `axis` (normalised internally).
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        exp_so3(&(axis * (angle / n)))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// `‖mᵀm − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// Z-Y-X (yaw-pitch-roll) Euler angles in radians, returned as
    /// `(roll, pitch, yaw)`.
    ///
    /// When `|pitch|` exceeds 89.9° yaw is reported as zero and the combined
    /// roll/yaw rotation is folded into roll.
    pub fn euler_zyx(&self) -> (f64, f64, f64) {
        let m = &self.0;
        let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
        if pitch.abs() > 89.9_f64.to_radians() {
            let roll = if pitch > 0.0 {
                m[(0, 1)].atan2(m[(1, 1)])
            } else {
                (-m[(0, 1)]).atan2(m[(1, 1)])
            };
            return (roll, pitch, 0.0);
        }
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        (roll, pitch, yaw)
    }

    /// `self · exp(v)`.
    pub fn right_exp(&self, v: &Vec3) -> Self {
        Rotation(self.0 * exp_so3(v).0)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;

    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Maps `v` to the skew-symmetric matrix with `hat(v) w = v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. The input is antisymmetrised first; a symmetric part
/// larger than [`SKEW_TOL`] (max-abs entry) is rejected.
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let sym = (m + m.transpose()) * 0.5;
    let asym = sym.amax();
    if !(asym <= SKEW_TOL) {
        return Err(Error::NotSkewSymmetric(asym));
    }
    Ok(vee_unchecked(m))
}

/// Extracts the axial vector of the antisymmetric part of `m`.
pub(crate) fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Exponential map `so(3) → SO(3)` (Rodrigues).
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(v);
    let k2 = k * k;
    let (a, b) = if theta < EXP_SERIES_THRESHOLD {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rotation(Mat3::identity() + k * a + k2 * b)
}

/// Configuration error `½ (3 − tr Re)`.
pub fn psi_config(re: &Rotation) -> f64 {
    0.5 * (3.0 - re.0.trace())
}

/// Tracking error function `psi(R, Rd) = psi_config(Rdᵀ R)`.
pub fn psi(r: &Rotation, rd: &Rotation) -> f64 {
    psi_config(&(rd.transpose() * *r))
}

/// `e_R = ½ (Rdᵀ R − Rᵀ Rd)^∨`.
pub fn attitude_error(r: &Rotation, rd: &Rotation) -> Vec3 {
    let re = rd.0.transpose() * r.0;
    vee_unchecked(&(re - re.transpose())) * 0.5
}

/// `e_w = ω − Rᵀ Rd ω_d`.
pub fn velocity_error(r: &Rotation, w: &Vec3, rd: &Rotation, wd: &Vec3) -> Vec3 {
    w - r.0.transpose() * (rd.0 * wd)
}

/// `B(Re) = ½ (tr(Reᵀ) I − Reᵀ)`, so that `d e_R/dt = B(Rdᵀ R) e_w`.
///
/// The spectral norm never exceeds one and equals one only at `Re = I`.
pub fn transport_matrix(re: &Rotation) -> Mat3 {
    let ret = re.0.transpose();
    (Mat3::identity() * ret.trace() - ret) * 0.5
}

/// Tracking errors between a body attitude/rate and a desired one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorState {
    pub psi: f64,
    pub e_r: Vec3,
    pub e_w: Vec3,
}

impl ErrorState {
    pub fn new(r: &Rotation, w: &Vec3, rd: &Rotation, wd: &Vec3) -> Self {
        ErrorState {
            psi: psi(r, rd),
            e_r: attitude_error(r, rd),
            e_w: velocity_error(r, w, rd, wd),
        }
    }

    /// Inside the open sublevel set `psi < 2`.
    pub fn in_sublevel(&self) -> bool {
        self.psi < 2.0
    }
}

/// Constants with `b1 ‖e_R‖² ≤ psi ≤ b2 ‖e_R‖²` on `{psi ≤ 2 − margin}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticBounds {
    pub b1: f64,
    pub b2: f64,
}

/// Number of error angles swept when certifying [`quadratic_bounds`].
pub const BOUND_SWEEP_POINTS: usize = 100_000;

/// Returns `b1 = ½`, `b2 = 1/margin` after certifying the sandwich on a dense
/// sweep of single-axis error angles.
///
/// Conjugation invariance of both `psi` and `‖e_R‖` means the angle of the
/// error rotation is the only free variable, so the one-dimensional sweep
/// covers every attitude pair.
pub fn quadratic_bounds(margin: f64) -> Result<QuadraticBounds> {
    if !(margin > 0.0 && margin < 2.0) {
        return Err(Error::InvalidMargin(margin));
    }
    let bounds = QuadraticBounds {
        b1: 0.5,
        b2: 1.0 / margin,
    };
    // psi = 1 − cos θ ≤ 2 − margin  ⇔  cos θ ≥ margin − 1
    let theta_max = (margin - 1.0).acos();
    for i in 0..=BOUND_SWEEP_POINTS {
        let theta = theta_max * i as f64 / BOUND_SWEEP_POINTS as f64;
        let psi = 1.0 - theta.cos();
        let er2 = theta.sin().powi(2);
        let slack = 1e-14 * (1.0 + psi);
        if bounds.b1 * er2 > psi + slack || psi > bounds.b2 * er2 + slack {
            return Err(Error::BoundCertification { angle: theta });
        }
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-10.0..10.0f64).prop_map(Vec3::from)
    }

    fn rotation() -> impl Strategy<Value = Rotation> {
        (prop::array::uniform3(-1.0..1.0f64), 0.0..PI).prop_map(|(a, angle)| {
            let axis = Vec3::from(a);
            if axis.norm() < 1e-3 {
                Rotation::identity()
            } else {
                Rotation::about_axis(&axis, angle)
            }
        })
    }

    #[test]
    fn hat_matches_displayed_layout() {
        let m = hat(&Vec3::new(1.0, 2.0, 3.0));
        let expected = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(m, expected);
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
    }

    #[test]
    fn vee_examples() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&v)).unwrap(), v);
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
        let (a, b, c) = (0.3, -1.2, 7.5);
        let m = Mat3::new(0.0, -c, b, c, 0.0, -a, -b, a, 0.0);
        assert_eq!(vee(&m).unwrap(), Vec3::new(a, b, c));
    }

    #[test]
    fn vee_rejects_symmetric_part() {
        let m = hat(&Vec3::new(1.0, 0.0, 0.0)) + Mat3::identity() * 1e-6;
        assert!(matches!(vee(&m), Err(Error::NotSkewSymmetric(_))));
        let drift = hat(&Vec3::new(1.0, 0.0, 0.0)) + Mat3::identity() * 1e-12;
        assert!(vee(&drift).is_ok());
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_so3(&Vec3::zeros()), Rotation::identity());
        let r = exp_so3(&Vec3::new(FRAC_PI_2, 0.0, 0.0));
        assert!(r.matrix()[(1, 1)].abs() < 1e-15);
        assert_relative_eq!(r.matrix()[(1, 2)], -1.0, epsilon = 1e-15);
        assert_relative_eq!(r.matrix()[(2, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_series_branch_is_continuous() {
        let axis = Vec3::new(0.2, -0.5, 0.8).normalize();
        let below = exp_so3(&(axis * (EXP_SERIES_THRESHOLD * 0.999)));
        let above = exp_so3(&(axis * (EXP_SERIES_THRESHOLD * 1.001)));
        assert!((below.matrix() - above.matrix()).norm() < 1e-8);
        assert!(below.orthonormality_error() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_config(&Rotation::identity()), 0.0);
        assert_relative_eq!(psi_config(&exp_so3(&Vec3::new(PI, 0.0, 0.0))), 2.0, epsilon = 1e-15);
        assert_relative_eq!(
            psi_config(&exp_so3(&Vec3::new(FRAC_PI_2, 0.0, 0.0))),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn attitude_error_examples() {
        let r = exp_so3(&Vec3::new(0.4, -0.2, 0.9));
        assert_eq!(attitude_error(&r, &r), Vec3::zeros());
        let r = exp_so3(&Vec3::new(30f64.to_radians(), 0.0, 0.0));
        let e = attitude_error(&r, &Rotation::identity());
        assert_relative_eq!(e, Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn velocity_error_examples() {
        let r = exp_so3(&Vec3::new(0.1, 0.2, 0.3));
        let w = Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(velocity_error(&r, &w, &r, &w), Vec3::zeros(), epsilon = 1e-15);
        let e = velocity_error(&r, &w, &r, &Vec3::new(0.4, 0.0, 0.0));
        assert_relative_eq!(e, Vec3::new(0.6, 0.0, 0.0), epsilon = 1e-15);

        let r = exp_so3(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        let wd = Vec3::new(1.0, 0.0, 0.0);
        let e = velocity_error(&r, &Vec3::zeros(), &Rotation::identity(), &wd);
        let oracle = -(r.matrix().transpose() * wd);
        assert_relative_eq!(e, oracle, epsilon = 1e-15);
        assert_relative_eq!(e, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn transport_identity_case() {
        assert_eq!(transport_matrix(&Rotation::identity()), Mat3::identity());
    }

    /// Central finite difference of `e_R` along `R(t) = R0 exp(tω)`,
    /// `Rd(t) = Rd0 exp(tω_d)` against `B e_w`.
    fn transport_fd_error(r0: &Rotation, w: &Vec3, rd0: &Rotation, wd: &Vec3) -> f64 {
        let h = 1e-5;
        let at = |t: f64| {
            let r = r0.right_exp(&(w * t));
            let rd = rd0.right_exp(&(wd * t));
            attitude_error(&r, &rd)
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let an = transport_matrix(&(rd0.transpose() * *r0)) * velocity_error(r0, w, rd0, wd);
        (fd - an).norm() / an.norm().max(1e-3)
    }

    #[test]
    fn transport_matches_finite_difference_at_quarter_turn() {
        let re = exp_so3(&Vec3::new(FRAC_PI_2, 0.0, 0.0));
        let b = transport_matrix(&re);
        let expected = (Mat3::identity() - re.matrix().transpose()) * 0.5;
        assert_relative_eq!(b, expected, epsilon = 1e-15);
        let err = transport_fd_error(
            &re,
            &Vec3::new(0.3, -1.1, 0.7),
            &Rotation::identity(),
            &Vec3::new(-0.2, 0.5, 0.9),
        );
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn quadratic_bounds_examples() {
        assert!(matches!(quadratic_bounds(0.0), Err(Error::InvalidMargin(_))));
        assert!(matches!(quadratic_bounds(-1.0), Err(Error::InvalidMargin(_))));
        let b = quadratic_bounds(0.1).unwrap();
        assert_eq!(b, QuadraticBounds { b1: 0.5, b2: 10.0 });
        let near_identity = quadratic_bounds(1.999).unwrap();
        assert_relative_eq!(near_identity.b2, 0.5, epsilon = 1e-3);
    }

    /// Independent oracle: `psi = 1 − cos θ`, `‖e_R‖² = sin² θ`.
    #[test]
    fn lower_bound_half_holds_everywhere() {
        for i in 0..=10_000 {
            let theta = PI * i as f64 / 10_000.0;
            assert!(0.5 * theta.sin().powi(2) <= 1.0 - theta.cos() + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn hat_is_cross_product(v in vec3(), w in vec3()) {
            let lhs = hat(&v) * w;
            prop_assert!((lhs - v.cross(&w)).norm() <= 1e-12 * (1.0 + v.norm() * w.norm()));
        }

        #[test]
        fn vee_hat_roundtrip_is_exact(v in vec3()) {
            prop_assert_eq!(vee(&hat(&v)).unwrap(), v);
        }

        #[test]
        fn exp_inverse_symmetry(v in vec3()) {
            let p = exp_so3(&v) * exp_so3(&(-v));
            prop_assert!((p.matrix() - Mat3::identity()).amax() < 1e-12);
        }

        #[test]
        fn exp_is_orthonormal(v in vec3()) {
            let r = exp_so3(&v);
            prop_assert!(Rotation::from_matrix(*r.matrix()).is_ok());
        }

        #[test]
        fn conjugation_identity(r in rotation(), x in vec3()) {
            let lhs = vee(&(r.matrix() * hat(&x) * r.matrix().transpose())).unwrap();
            prop_assert!((lhs - r * x).amax() < 1e-12);
        }

        #[test]
        fn attitude_error_is_antisymmetric(a in rotation(), b in rotation()) {
            let d = attitude_error(&a, &b) + attitude_error(&b, &a);
            prop_assert!(d.amax() < 1e-15);
        }

        #[test]
        fn attitude_error_norm_is_sine_of_angle(a in rotation(), b in rotation()) {
            let theta = (b.transpose() * a).angle();
            prop_assert!((attitude_error(&a, &b).norm() - theta.sin()).abs() < 1e-12);
        }

        #[test]
        fn transport_spectral_norm_below_one(re in rotation()) {
            let b = transport_matrix(&re);
            let ev = crate::lyapunov::eig_sym(&(b.transpose() * b)).unwrap();
            prop_assert!(ev[2].sqrt() <= 1.0 + 1e-12);
        }

        #[test]
        fn transport_matches_finite_difference(
            r0 in rotation(), rd0 in rotation(),
            w in prop::array::uniform3(-2.0..2.0f64),
            wd in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let err = transport_fd_error(&r0, &Vec3::from(w), &rd0, &Vec3::from(wd));
            prop_assert!(err < 1e-4, "relative error {}", err);
        }

        #[test]
        fn psi_zero_iff_equal(a in rotation()) {
            prop_assert!(psi(&a, &a).abs() < 1e-9);
        }
    }
}
