//! Coupled rotor-fuselage dynamics.
//!
//! The fuselage is a rigid body driven by the rotor moment `M`:
//!
//! ```text
//! Ṙ = R ω̂
//! J ω̇ + ω × Jω = M
//! ```
//!
//! The main rotor's first-order tip-path-plane flapping and the tail rotor
//! lag are rewritten in moment coordinates as `Ṁ = −A M + u`, with
//! `A = diag(1/τ_m, 1/τ_m, 1/τ_t)` and the virtual input `u` built from the
//! servo commands and the body rate (see [`input_from_servo`]).

use crate::error::{Error, Result};
use crate::so3::{hat, Mat3, Rotation, Vec3};

/// Small-flap envelope (rad) outside which the linear flapping model is suspect.
pub const FLAP_ENVELOPE: f64 = 0.35;

/// Tolerance on `K_β = h·T + k_β` when the hover thrust is given.
pub const STIFFNESS_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeliParams {
    /// Principal moments of inertia `(J_xx, J_yy, J_zz)`, kg·m².
    pub inertia: Vec3,
    /// Main rotor flapping time constant, s.
    pub tau_m: f64,
    /// Tail rotor (plus servo) time constant, s.
    pub tau_t: f64,
    /// Blade hub spring stiffness `k_β`, N·m/rad.
    pub k_beta: f64,
    /// Rotor hub height above the centre of mass, m.
    pub hub_height: f64,
    /// Hover thrust, N. Only used for the stiffness consistency check.
    pub thrust_hover: Option<f64>,
    /// Equivalent hub stiffness `K_β = h·T + k_β`, N·m/rad.
    pub hub_stiffness: f64,
    /// Tail rotor moment per unit tail collective, N·m/rad.
    pub tail_gain: f64,
    /// Optional servo deflection limit, rad.
    pub servo_limit: Option<f64>,
    /// Clamp servo commands to `servo_limit` instead of only flagging them.
    pub servo_clamp: bool,
}

impl HeliParams {
    /// The 10 kg class flybarless helicopter used throughout the examples.
    ///
    /// Tail-rotor constants are not part of the identified set; `τ_t = 0.02 s`
    /// and `K_t = 10 N·m/rad` stand in for a tail that is much faster than the
    /// main rotor.
    pub fn reference_helicopter() -> Self {
        let k_beta = 129.09;
        let hub_stiffness = 137.7;
        let hub_height = 0.174;
        HeliParams {
            inertia: Vec3::new(0.095, 0.397, 0.303),
            tau_m: 0.06,
            tau_t: 0.02,
            k_beta,
            hub_height,
            thrust_hover: Some((hub_stiffness - k_beta) / hub_height),
            hub_stiffness,
            tail_gain: 10.0,
            servo_limit: None,
            servo_clamp: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        positive("J_xx", self.inertia.x)?;
        positive("J_yy", self.inertia.y)?;
        positive("J_zz", self.inertia.z)?;
        positive("tau_m", self.tau_m)?;
        positive("tau_t", self.tau_t)?;
        positive("K_beta", self.hub_stiffness)?;
        positive("K_t", self.tail_gain)?;
        if !self.k_beta.is_finite() || !self.hub_height.is_finite() {
            return Err(Error::InvalidParams("k_beta and h must be finite".into()));
        }
        if let Some(thrust) = self.thrust_hover {
            let implied = self.hub_height * thrust + self.k_beta;
            if (self.hub_stiffness - implied).abs() > STIFFNESS_CONSISTENCY_TOL {
                return Err(Error::InvalidParams(format!(
                    "K_beta = {} disagrees with h·T + k_beta = {implied}",
                    self.hub_stiffness
                )));
            }
        }
        if let Some(limit) = self.servo_limit {
            positive("servo limit", limit)?;
        }
        Ok(())
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.inertia)
    }

    pub fn inertia_inverse(&self) -> Mat3 {
        Mat3::from_diagonal(&self.inertia.map(|j| 1.0 / j))
    }

    pub fn inertia_min(&self) -> f64 {
        self.inertia.min()
    }

    pub fn inertia_max(&self) -> f64 {
        self.inertia.max()
    }

    /// `λ_min(A) = 1 / max(τ_m, τ_t)`.
    pub fn rotor_rate_min(&self) -> f64 {
        1.0 / self.tau_m.max(self.tau_t)
    }
}

impl Default for HeliParams {
    fn default() -> Self {
        Self::reference_helicopter()
    }
}

/// Fuselage attitude and body angular velocity (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub r: Rotation,
    pub w: Vec3,
}

/// Applied rotor moment in moment coordinates, N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotorState {
    pub m: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FullState {
    pub body: BodyState,
    pub rotor: RotorState,
    pub t: f64,
}

impl FullState {
    pub fn is_finite(&self) -> bool {
        self.body.r.matrix().iter().all(|x| x.is_finite())
            && self.body.w.iter().all(|x| x.is_finite())
            && self.rotor.m.iter().all(|x| x.is_finite())
            && self.t.is_finite()
    }
}

/// Servo commands, rad.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ServoCmd {
    /// Lateral cyclic.
    pub theta_a: f64,
    /// Longitudinal cyclic.
    pub theta_b: f64,
    /// Tail collective.
    pub theta_t: f64,
}

impl ServoCmd {
    pub fn max_abs(&self) -> f64 {
        self.theta_a.abs().max(self.theta_b.abs()).max(self.theta_t.abs())
    }

    pub fn exceeds(&self, limit: f64) -> bool {
        self.max_abs() > limit
    }

    pub fn clamped(&self, limit: f64) -> Self {
        ServoCmd {
            theta_a: self.theta_a.clamp(-limit, limit),
            theta_b: self.theta_b.clamp(-limit, limit),
            theta_t: self.theta_t.clamp(-limit, limit),
        }
    }
}

/// Tip-path-plane tilt, rad.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlapState {
    /// Longitudinal tilt.
    pub a: f64,
    /// Lateral tilt.
    pub b: f64,
}

impl FlapState {
    pub fn within_envelope(&self) -> bool {
        self.a.abs() < FLAP_ENVELOPE && self.b.abs() < FLAP_ENVELOPE
    }
}

/// `A = diag(1/τ_m, 1/τ_m, 1/τ_t)`.
pub fn rotor_matrix(p: &HeliParams) -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(1.0 / p.tau_m, 1.0 / p.tau_m, 1.0 / p.tau_t))
}

/// `ω̇ = J⁻¹ (M − ω × Jω)`.
pub fn fuselage_accel(p: &HeliParams, s: &BodyState, m: &Vec3) -> Vec3 {
    let jw = s.w.component_mul(&p.inertia);
    (m - s.w.cross(&jw)).component_div(&p.inertia)
}

/// `Ṁ = −A M + u`.
pub fn rotor_rate(p: &HeliParams, r: &RotorState, u: &Vec3) -> Vec3 {
    u - rotor_matrix(p) * r.m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub r_dot: Mat3,
    pub w_dot: Vec3,
    pub m_dot: Vec3,
}

pub fn full_derivative(p: &HeliParams, s: &FullState, u: &Vec3) -> Derivative {
    Derivative {
        r_dot: s.body.r.matrix() * hat(&s.body.w),
        w_dot: fuselage_accel(p, &s.body, &s.rotor.m),
        m_dot: rotor_rate(p, &s.rotor, u),
    }
}

/// Rotational kinetic energy `½ ω·Jω`.
pub fn kinetic_energy(p: &HeliParams, w: &Vec3) -> f64 {
    0.5 * w.dot(&w.component_mul(&p.inertia))
}

/// Flap angles producing the roll/pitch components of `m`.
pub fn flap_from_moment(p: &HeliParams, m: &Vec3) -> FlapState {
    FlapState {
        a: m.y / p.hub_stiffness,
        b: m.x / p.hub_stiffness,
    }
}

/// Roll/pitch moment generated by a tilted tip-path plane; the yaw
/// component is left at zero.
pub fn moment_from_flap(p: &HeliParams, f: &FlapState) -> Vec3 {
    Vec3::new(p.hub_stiffness * f.b, p.hub_stiffness * f.a, 0.0)
}

/// Servo commands that realise the virtual input `u` at body rate `w`.
pub fn servo_from_input(p: &HeliParams, u: &Vec3, w: &Vec3) -> ServoCmd {
    ServoCmd {
        theta_a: p.tau_m * (u.y / p.hub_stiffness + w.y),
        theta_b: p.tau_m * (u.x / p.hub_stiffness + w.x),
        theta_t: p.tau_t * u.z / p.tail_gain,
    }
}

/// `u = [K_β(θ_b/τ_m − ω_x), K_β(θ_a/τ_m − ω_y), K_t θ_t/τ_t]`.
pub fn input_from_servo(p: &HeliParams, c: &ServoCmd, w: &Vec3) -> Vec3 {
    Vec3::new(
        p.hub_stiffness * (c.theta_b / p.tau_m - w.x),
        p.hub_stiffness * (c.theta_a / p.tau_m - w.y),
        p.tail_gain * c.theta_t / p.tau_t,
    )
}

/// One sample of a flapping trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlapSample {
    pub t: f64,
    pub w: Vec3,
    pub m: Vec3,
    pub servo: ServoCmd,
}

/// Maximum residual (rad/s) of the tip-path-plane equations
///
/// ```text
/// ȧ = −ω_y − a/τ_m + θ_a/τ_m
/// ḃ = −ω_x − b/τ_m + θ_b/τ_m
/// ```
///
/// with `(a, b)` reconstructed from the moment history and `ȧ, ḃ` taken by
/// central differences. Small residuals certify that the moment-coordinate
/// model reproduces the flap-coordinate one.
pub fn flap_dynamics_check(p: &HeliParams, samples: &[FlapSample]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::TraceTooShort {
            len: samples.len(),
            min: 3,
        });
    }
    let flaps: Vec<FlapState> = samples.iter().map(|s| flap_from_moment(p, &s.m)).collect();
    let mut worst = 0.0f64;
    for i in 1..samples.len() - 1 {
        let dt = samples[i + 1].t - samples[i - 1].t;
        let a_dot = (flaps[i + 1].a - flaps[i - 1].a) / dt;
        let b_dot = (flaps[i + 1].b - flaps[i - 1].b) / dt;
        let (s, f) = (&samples[i], &flaps[i]);
        let ra = a_dot - (-s.w.y - f.a / p.tau_m + s.servo.theta_a / p.tau_m);
        let rb = b_dot - (-s.w.x - f.b / p.tau_m + s.servo.theta_b / p.tau_m);
        worst = worst.max(ra.abs()).max(rb.abs());
    }
    Ok(worst)
}
