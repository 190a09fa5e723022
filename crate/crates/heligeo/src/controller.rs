//! Geometric tracking law for the fuselage and the backstepping input that
//! drives the rotor moment onto it.
//!
//! The fuselage law
//!
//! ```text
//! M_d = −k_R e_R − k_ω e_ω + ω × Jω − J (ω̂ Rᵀ Rd ω_d − Rᵀ Rd ω̇_d)
//! ```
//!
//! turns the rigid-body error dynamics into `J ė_ω = −k_R e_R − k_ω e_ω`. The
//! rotor cannot apply `M_d` instantly, so with `e_M = M − M_d` the virtual
//! input
//!
//! ```text
//! u = Ṁ_d + A M_d − e_ω − ε J⁻¹ e_R
//! ```
//!
//! gives `ė_M = −A e_M − e_ω − ε J⁻¹ e_R`, which cancels the cross terms of
//! the composite Lyapunov function.

use crate::error::{Error, Result};
use crate::lyapunov::eig_sym;
use crate::model::{fuselage_accel, rotor_matrix, servo_from_input, BodyState, FullState, HeliParams, ServoCmd};
use crate::reference::RefSample;
use crate::so3::{psi, transport_matrix, ErrorState, Mat3, Rotation, Vec3};

/// Default attitude gain.
pub const DEFAULT_K_R: f64 = 20.0;
/// Default rate gain.
pub const DEFAULT_K_W: f64 = 5.0;
/// Default `ε` as a fraction of [`eps_bound`].
pub const DEFAULT_EPS_FRACTION: f64 = 0.5;
/// Lower quadratic-bound constant used for the gain gate.
pub const DEFAULT_B1: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k_r: f64,
    pub k_w: f64,
    pub eps: f64,
}

impl Gains {
    /// Checked constructor: requires positive gains and `ε < eps_bound`.
    pub fn new(k_r: f64, k_w: f64, eps: f64, p: &HeliParams, b1: f64) -> Result<Self> {
        let g = Gains { k_r, k_w, eps };
        g.validate(p, b1)?;
        Ok(g)
    }

    /// `ε = fraction · eps_bound(k_R, k_ω)`.
    pub fn with_eps_fraction(k_r: f64, k_w: f64, fraction: f64, p: &HeliParams, b1: f64) -> Result<Self> {
        positive_gains(k_r, k_w)?;
        let bound = eps_bound(k_r, k_w, &p.inertia_matrix(), b1);
        Self::new(k_r, k_w, fraction * bound, p, b1)
    }

    /// `k_R = 20`, `k_ω = 5`, `ε` at half the bound.
    pub fn defaults_for(p: &HeliParams) -> Self {
        Self::with_eps_fraction(DEFAULT_K_R, DEFAULT_K_W, DEFAULT_EPS_FRACTION, p, DEFAULT_B1)
            .expect("default gains are valid for any positive inertia")
    }

    pub fn validate(&self, p: &HeliParams, b1: f64) -> Result<()> {
        positive_gains(self.k_r, self.k_w)?;
        if !(self.eps > 0.0) {
            return Err(Error::InvalidGains(format!("eps must be positive, got {}", self.eps)));
        }
        let bound = eps_bound(self.k_r, self.k_w, &p.inertia_matrix(), b1);
        if !(self.eps < bound) {
            return Err(Error::InvalidGains(format!(
                "eps = {} is not below the bound {bound}",
                self.eps
            )));
        }
        Ok(())
    }
}

fn positive_gains(k_r: f64, k_w: f64) -> Result<()> {
    if !(k_r > 0.0 && k_r.is_finite() && k_w > 0.0 && k_w.is_finite()) {
        return Err(Error::InvalidGains(format!(
            "k_R and k_w must be positive, got {k_r} and {k_w}"
        )));
    }
    Ok(())
}

/// Upper bound on `ε` keeping the Lyapunov bound matrices positive definite:
///
/// ```text
/// min{ k_ω, √(2 k_R b1 λ_min(J)), 4 k_R k_ω λ_min(J)² / (k_ω² λ_max(J) + 4 k_R λ_min(J)²) }
/// ```
pub fn eps_bound(k_r: f64, k_w: f64, inertia: &Mat3, b1: f64) -> f64 {
    let ev = eig_sym(inertia).expect("inertia must be symmetric");
    let (jmin, jmax) = (ev[0], ev[2]);
    let cross = 4.0 * k_r * k_w * jmin * jmin / (k_w * k_w * jmax + 4.0 * k_r * jmin * jmin);
    k_w.min((2.0 * k_r * b1 * jmin).sqrt()).min(cross)
}

/// Everything the backstepping law computes at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CtrlDebug {
    pub m_d: Vec3,
    pub m_d_dot: Vec3,
    pub e_m: Vec3,
    pub u: Vec3,
    pub servo: ServoCmd,
}

/// Reference quantities expressed in the current body frame.
struct Transported {
    /// `Q = Rᵀ Rd`.
    q: Mat3,
    wd: Vec3,
    wd_dot: Vec3,
}

impl Transported {
    fn new(r: &Rotation, reference: &RefSample) -> Self {
        let q = r.matrix().transpose() * reference.rd.matrix();
        Transported {
            wd: q * reference.wd,
            wd_dot: q * reference.wd_dot,
            q,
        }
    }
}

/// Fuselage tracking moment `M_d`.
pub fn desired_moment(g: &Gains, p: &HeliParams, s: &BodyState, reference: &RefSample) -> Vec3 {
    let err = ErrorState::new(&s.r, &s.w, &reference.rd, &reference.wd);
    let tr = Transported::new(&s.r, reference);
    let jw = s.w.component_mul(&p.inertia);
    let feedforward = s.w.cross(&tr.wd) - tr.wd_dot;
    -err.e_r * g.k_r - err.e_w * g.k_w + s.w.cross(&jw) - feedforward.component_mul(&p.inertia)
}

/// Analytic time derivative of [`desired_moment`] given the body angular
/// acceleration `w_dot`.
pub fn desired_moment_rate(
    g: &Gains,
    p: &HeliParams,
    s: &BodyState,
    w_dot: &Vec3,
    reference: &RefSample,
) -> Vec3 {
    let w = &s.w;
    let err = ErrorState::new(&s.r, w, &reference.rd, &reference.wd);
    let tr = Transported::new(&s.r, reference);
    let re = reference.rd.transpose() * s.r;

    let e_r_dot = transport_matrix(&re) * err.e_w;
    let e_w_dot = w_dot - tr.wd_dot + w.cross(&tr.wd);

    let wd_jerk = tr.q * reference.wd_ddot;
    let wd_cross = tr.q * reference.wd.cross(&reference.wd_dot);
    // d/dt (ω̂ Q ω_d − Q ω̇_d)
    let feedforward_dot = w_dot.cross(&tr.wd) - w.cross(&w.cross(&tr.wd)) + w.cross(&tr.wd_dot) * 2.0
        - wd_cross
        - wd_jerk;

    let jw = w.component_mul(&p.inertia);
    let jw_dot = w_dot.component_mul(&p.inertia);
    -e_r_dot * g.k_r - e_w_dot * g.k_w + w_dot.cross(&jw) + w.cross(&jw_dot)
        - feedforward_dot.component_mul(&p.inertia)
}

/// Backstepping input with an externally supplied angular acceleration.
pub fn backstepping_input_with_accel(
    g: &Gains,
    p: &HeliParams,
    s: &FullState,
    reference: &RefSample,
    w_dot: &Vec3,
) -> CtrlDebug {
    let body = &s.body;
    let err = ErrorState::new(&body.r, &body.w, &reference.rd, &reference.wd);
    let m_d = desired_moment(g, p, body, reference);
    let m_d_dot = desired_moment_rate(g, p, body, w_dot, reference);
    let u = m_d_dot + rotor_matrix(p) * m_d - err.e_w - err.e_r.component_div(&p.inertia) * g.eps;
    CtrlDebug {
        m_d,
        m_d_dot,
        e_m: s.rotor.m - m_d,
        u,
        servo: servo_from_input(p, &u, &body.w),
    }
}

/// Backstepping input with `ω̇` taken from the model at the current rotor moment.
pub fn backstepping_input(g: &Gains, p: &HeliParams, s: &FullState, reference: &RefSample) -> CtrlDebug {
    let w_dot = fuselage_accel(p, &s.body, &s.rotor.m);
    backstepping_input_with_accel(g, p, s, reference, &w_dot)
}

/// Static inversion `u = A M_d`, ignoring the rotor lag. Diagnostic only.
pub fn naive_input(g: &Gains, p: &HeliParams, s: &FullState, reference: &RefSample) -> CtrlDebug {
    let body = &s.body;
    let m_d = desired_moment(g, p, body, reference);
    let w_dot = fuselage_accel(p, body, &s.rotor.m);
    let u = rotor_matrix(p) * m_d;
    CtrlDebug {
        m_d,
        m_d_dot: desired_moment_rate(g, p, body, &w_dot, reference),
        e_m: s.rotor.m - m_d,
        u,
        servo: servo_from_input(p, &u, &body.w),
    }
}

/// Both sides of a region-of-attraction inequality `lhs < rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoaMargin {
    pub lhs: f64,
    pub rhs: f64,
}

impl RoaMargin {
    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }
}

/// `k_R ψ(0) + ½ λ_max(J) ‖e_ω(0)‖² < 2 k_R`.
pub fn roa_rigid_margin(g: &Gains, p: &HeliParams, s0: &BodyState, ref0: &RefSample) -> RoaMargin {
    let err = ErrorState::new(&s0.r, &s0.w, &ref0.rd, &ref0.wd);
    RoaMargin {
        lhs: g.k_r * err.psi + 0.5 * p.inertia_max() * err.e_w.norm_squared(),
        rhs: 2.0 * g.k_r,
    }
}

pub fn roa_rigid(g: &Gains, p: &HeliParams, s0: &BodyState, ref0: &RefSample) -> bool {
    roa_rigid_margin(g, p, s0, ref0).holds()
}

/// `k_R ψ(0) + ½ λ_max(J) ‖e_ω(0)‖² + ½ ‖e_M(0)‖² + ε ‖e_R(0)‖ ‖e_ω(0)‖ < 2 k_R`.
pub fn roa_full_margin(g: &Gains, p: &HeliParams, s0: &FullState, ref0: &RefSample) -> RoaMargin {
    let body = &s0.body;
    let err = ErrorState::new(&body.r, &body.w, &ref0.rd, &ref0.wd);
    let e_m = s0.rotor.m - desired_moment(g, p, body, ref0);
    RoaMargin {
        lhs: g.k_r * psi(&body.r, &ref0.rd)
            + 0.5 * p.inertia_max() * err.e_w.norm_squared()
            + 0.5 * e_m.norm_squared()
            + g.eps * err.e_r.norm() * err.e_w.norm(),
        rhs: 2.0 * g.k_r,
    }
}

pub fn roa_full(g: &Gains, p: &HeliParams, s0: &FullState, ref0: &RefSample) -> bool {
    roa_full_margin(g, p, s0, ref0).holds()
}
