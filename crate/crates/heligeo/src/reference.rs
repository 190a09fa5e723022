//! Attitude reference trajectories.
//!
//! Every built-in reference rotates about a single fixed body axis `n` on top
//! of a constant offset: `Rd(t) = offset · exp(θ(t) n)`. Because `n̂` commutes
//! with `exp(θ n̂)`, the body rate and its derivatives are exact multiples of
//! the axis (`ω_d = θ̇ n`, `ω̇_d = θ̈ n`, `ω̈_d = θ⃛ n`).

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::so3::{exp_so3, hat, vee_unchecked, Rotation, Vec3};

/// Desired attitude and its body-rate derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RefSample {
    pub rd: Rotation,
    pub wd: Vec3,
    pub wd_dot: Vec3,
    pub wd_ddot: Vec3,
}

/// Anything that can be sampled as a reference.
pub trait Reference {
    fn sample(&self, t: f64) -> RefSample;
}

impl<F: Fn(f64) -> RefSample> Reference for F {
    fn sample(&self, t: f64) -> RefSample {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefKind {
    /// Hold `offset`.
    Constant,
    /// `θ(t) = amplitude · sin(2π · frequency · t)`.
    Sinusoid { amplitude: f64, frequency: f64 },
    /// Degree-7 blend from 0 to `target` over `[start, start + rise_time]`.
    SmoothStep {
        target: f64,
        start: f64,
        rise_time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSpec {
    pub kind: RefKind,
    pub axis: Vec3,
    pub offset: Rotation,
}

impl RefSpec {
    pub fn constant(offset: Rotation) -> Self {
        RefSpec {
            kind: RefKind::Constant,
            axis: Vec3::x(),
            offset,
        }
    }

    /// Sinusoid of `amplitude` rad at `frequency` Hz about `axis`.
    pub fn sinusoid(axis: Vec3, amplitude: f64, frequency: f64) -> Result<Self> {
        let spec = RefSpec {
            kind: RefKind::Sinusoid {
                amplitude,
                frequency,
            },
            axis: unit_axis(&axis)?,
            offset: Rotation::identity(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn smooth_step(axis: Vec3, target: f64, start: f64, rise_time: f64) -> Result<Self> {
        let spec = RefSpec {
            kind: RefKind::SmoothStep {
                target,
                start,
                rise_time,
            },
            axis: unit_axis(&axis)?,
            offset: Rotation::identity(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The roll-tracking reference: 20° at 1 Hz about the body x axis.
    pub fn roll_sinusoid() -> Self {
        RefSpec {
            kind: RefKind::Sinusoid {
                amplitude: 20f64.to_radians(),
                frequency: 1.0,
            },
            axis: Vec3::x(),
            offset: Rotation::identity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !((self.axis.norm() - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidReference(format!(
                "axis must be a unit vector, has norm {}",
                self.axis.norm()
            )));
        }
        match self.kind {
            RefKind::Constant => Ok(()),
            RefKind::Sinusoid {
                amplitude,
                frequency,
            } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidReference("amplitude must be finite".into()));
                }
                if !(frequency > 0.0 && frequency.is_finite()) {
                    return Err(Error::InvalidReference(format!(
                        "frequency must be positive, got {frequency}"
                    )));
                }
                Ok(())
            }
            RefKind::SmoothStep {
                target,
                start,
                rise_time,
            } => {
                if !target.is_finite() || !start.is_finite() {
                    return Err(Error::InvalidReference("step target and start must be finite".into()));
                }
                if !(rise_time > 0.0 && rise_time.is_finite()) {
                    return Err(Error::InvalidReference(format!(
                        "rise time must be positive, got {rise_time}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Angle about the axis and its first three time derivatives.
    fn angle_derivatives(&self, t: f64) -> [f64; 4] {
        match self.kind {
            RefKind::Constant => [0.0; 4],
            RefKind::Sinusoid {
                amplitude,
                frequency,
            } => {
                let w = TAU * frequency;
                let (s, c) = (w * t).sin_cos();
                [
                    amplitude * s,
                    amplitude * w * c,
                    -amplitude * w * w * s,
                    -amplitude * w * w * w * c,
                ]
            }
            RefKind::SmoothStep {
                target,
                start,
                rise_time,
            } => {
                let x = (t - start) / rise_time;
                if x <= 0.0 {
                    [0.0; 4]
                } else if x >= 1.0 {
                    [target, 0.0, 0.0, 0.0]
                } else {
                    let b = septic_blend(x);
                    [
                        target * b[0],
                        target * b[1] / rise_time,
                        target * b[2] / rise_time.powi(2),
                        target * b[3] / rise_time.powi(3),
                    ]
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<RefSample> {
        self.validate()?;
        if !(t >= 0.0) {
            return Err(Error::InvalidReference(format!("time must be non-negative, got {t}")));
        }
        Ok(self.sample(t))
    }
}

impl Reference for RefSpec {
    fn sample(&self, t: f64) -> RefSample {
        let [theta, rate, accel, jerk] = self.angle_derivatives(t);
        RefSample {
            rd: self.offset * exp_so3(&(self.axis * theta)),
            wd: self.axis * rate,
            wd_dot: self.axis * accel,
            wd_ddot: self.axis * jerk,
        }
    }
}

fn unit_axis(axis: &Vec3) -> Result<Vec3> {
    let n = axis.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidReference("axis must be non-zero".into()));
    }
    Ok(axis / n)
}

/// `s(x) = 35x⁴ − 84x⁵ + 70x⁶ − 20x⁷` and its first three derivatives; the
/// first three derivatives vanish at both ends.
fn septic_blend(x: f64) -> [f64; 4] {
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    [
        x4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x))),
        x3 * (140.0 + x * (-420.0 + x * (420.0 - 140.0 * x))),
        x2 * (420.0 + x * (-1680.0 + x * (2100.0 - 840.0 * x))),
        x * (840.0 + x * (-5040.0 + x * (8400.0 - 4200.0 * x))),
    ]
}

/// Step used for the central differences in [`validate_feasibility`].
pub const FEASIBILITY_FD_STEP: f64 = 1e-6;
/// Relative tolerance for the finite-difference consistency checks.
pub const FEASIBILITY_TOL: f64 = 1e-5;
/// Default bound on `|Δω̈_d| / dt` between consecutive samples, rad/s⁴.
pub const DEFAULT_JERK_RATE_BOUND: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    /// Max relative error of `Ṙd` (finite difference) against `Rd ω̂_d`.
    pub kinematic_residual: f64,
    /// Max relative error of the `ω_d → ω̇_d → ω̈_d` derivative chain.
    pub derivative_residual: f64,
    /// Max of `|ω̈_d(t_{i+1}) − ω̈_d(t_i)| / dt`.
    pub max_jerk_rate: f64,
    pub samples: usize,
    pub failures: Vec<String>,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn relative(fd: f64, reference: f64) -> f64 {
    fd / reference.max(1.0)
}

/// Samples `reference` on `[0, horizon]` every `dt` and checks kinematic
/// consistency, the derivative chain, and continuity of `ω̈_d`.
pub fn validate_feasibility<R: Reference + ?Sized>(
    reference: &R,
    horizon: f64,
    dt: f64,
    jerk_rate_bound: f64,
) -> Result<FeasibilityReport> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidReference(format!(
            "horizon and dt must be positive, got {horizon} and {dt}"
        )));
    }
    let h = FEASIBILITY_FD_STEP;
    let n = (horizon / dt).round() as usize;
    let mut report = FeasibilityReport {
        samples: n + 1,
        ..Default::default()
    };
    let mut prev_jerk: Option<Vec3> = None;
    for i in 0..=n {
        // Keep the difference stencil inside t ≥ 0.
        let t = (i as f64 * dt).max(h);
        let lo = reference.sample(t - h);
        let mid = reference.sample(t);
        let hi = reference.sample(t + h);

        let rd_dot = (hi.rd.matrix() - lo.rd.matrix()) / (2.0 * h);
        let expected = mid.rd.matrix() * hat(&mid.wd);
        let kin = relative((rd_dot - expected).norm(), expected.norm());
        // Orientation jumps show up as a non-skew generator.
        let generator = mid.rd.matrix().transpose() * rd_dot;
        let skew = vee_unchecked(&generator);
        let kin = kin.max(relative((generator - hat(&skew)).norm(), skew.norm()));
        report.kinematic_residual = report.kinematic_residual.max(kin);

        // A derivative may legitimately kink at a blend boundary, so the
        // best of the central and one-sided stencils is taken.
        let best = |f: fn(&RefSample) -> Vec3, df: &Vec3| {
            let (l, m, u) = (f(&lo), f(&mid), f(&hi));
            [(u - l) / (2.0 * h), (u - m) / h, (m - l) / h]
                .iter()
                .map(|fd| relative((fd - df).norm(), df.norm()))
                .fold(f64::INFINITY, f64::min)
        };
        let chain = best(|s| s.wd, &mid.wd_dot).max(best(|s| s.wd_dot, &mid.wd_ddot));
        report.derivative_residual = report.derivative_residual.max(chain);

        let jerk = reference.sample(i as f64 * dt).wd_ddot;
        if let Some(prev) = prev_jerk {
            report.max_jerk_rate = report.max_jerk_rate.max((jerk - prev).norm() / dt);
        }
        prev_jerk = Some(jerk);
    }
    let finite = report.kinematic_residual.is_finite() && report.derivative_residual.is_finite();
    if !finite || report.kinematic_residual >= FEASIBILITY_TOL {
        report.failures.push(format!(
            "attitude kinematics: residual {:.3e} ≥ {FEASIBILITY_TOL:.0e}",
            report.kinematic_residual
        ));
    }
    if !finite || report.derivative_residual >= FEASIBILITY_TOL {
        report.failures.push(format!(
            "rate derivatives: residual {:.3e} ≥ {FEASIBILITY_TOL:.0e}",
            report.derivative_residual
        ));
    }
    if !(report.max_jerk_rate < jerk_rate_bound) {
        report.failures.push(format!(
            "second derivative of desired rate jumps: {:.3e} rad/s⁴ ≥ {jerk_rate_bound:.0e}",
            report.max_jerk_rate
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn constant_reference_is_static() {
        let offset = exp_so3(&Vec3::new(0.2, -0.1, 0.4));
        let spec = RefSpec::constant(offset);
        for t in [0.0, 0.5, 10.0] {
            let s = spec.eval(t).unwrap();
            assert_eq!(s.rd, offset * Rotation::identity());
            assert_eq!(s.wd, Vec3::zeros());
            assert_eq!(s.wd_dot, Vec3::zeros());
            assert_eq!(s.wd_ddot, Vec3::zeros());
        }
        let report = validate_feasibility(&spec, 2.0, 1e-2, DEFAULT_JERK_RATE_BOUND).unwrap();
        assert_eq!(report.kinematic_residual, 0.0);
        assert_eq!(report.derivative_residual, 0.0);
        assert_eq!(report.max_jerk_rate, 0.0);
        assert!(report.passed());
    }

    #[test]
    fn roll_sinusoid_initial_rate() {
        let s = RefSpec::roll_sinusoid().eval(0.0).unwrap();
        assert_eq!(s.rd, Rotation::identity());
        let expected = 20f64.to_radians() * TAU;
        assert_relative_eq!(s.wd, Vec3::new(expected, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(s.wd.x, 2.1932, epsilon = 1e-4);
    }

    #[test]
    fn sinusoid_is_feasible() {
        let spec = RefSpec::sinusoid(Vec3::new(1.0, 2.0, -0.5), 0.4, 1.3).unwrap();
        let report = validate_feasibility(&spec, 3.0, 1e-3, DEFAULT_JERK_RATE_BOUND).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert!(report.kinematic_residual < 1e-5);
        assert!(report.derivative_residual < 1e-5);
    }

    #[test]
    fn smooth_step_is_feasible_and_settles() {
        let spec = RefSpec::smooth_step(Vec3::y(), 0.8, 0.25, 1.0).unwrap();
        let report = validate_feasibility(&spec, 1.5, 1e-3, DEFAULT_JERK_RATE_BOUND).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        let end = spec.eval(1.3).unwrap();
        assert_relative_eq!(end.rd.angle(), 0.8, epsilon = 1e-14);
        assert_eq!(end.wd, Vec3::zeros());
    }

    #[test]
    fn septic_blend_boundary_values() {
        assert_eq!(septic_blend(0.0), [0.0; 4]);
        let one = septic_blend(1.0);
        assert_relative_eq!(one[0], 1.0);
        for d in &one[1..] {
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn hard_step_is_rejected() {
        let step = |t: f64| RefSample {
            rd: exp_so3(&Vec3::new(if t < 0.5 { 0.0 } else { 0.3 }, 0.0, 0.0)),
            ..Default::default()
        };
        let report = validate_feasibility(&step, 1.0, 1e-3, DEFAULT_JERK_RATE_BOUND).unwrap();
        assert!(!report.passed());
        assert!(report.failures[0].starts_with("attitude kinematics"));
    }

    #[test]
    fn c1_blend_fails_continuity() {
        // Cubic smoothstep over 0.5 s: continuous rate, but θ⃛ jumps by
        // 12·target/T³ = 48 rad/s³ at both ends.
        let cubic = |t: f64| {
            let (target, rise) = (0.5, 0.5);
            let x = (t / rise).clamp(0.0, 1.0);
            let inside = t > 0.0 && t < rise;
            let on = |v: f64| if inside { v } else { 0.0 };
            RefSample {
                rd: exp_so3(&Vec3::new(target * (3.0 * x * x - 2.0 * x * x * x), 0.0, 0.0)),
                wd: Vec3::new(on(target * (6.0 * x - 6.0 * x * x) / rise), 0.0, 0.0),
                wd_dot: Vec3::new(on(target * (6.0 - 12.0 * x) / rise.powi(2)), 0.0, 0.0),
                wd_ddot: Vec3::new(on(-12.0 * target / rise.powi(3)), 0.0, 0.0),
            }
        };
        let report = validate_feasibility(&cubic, 1.5, 1e-3, DEFAULT_JERK_RATE_BOUND).unwrap();
        assert!(report.kinematic_residual < FEASIBILITY_TOL);
        assert!(report.failures.iter().any(|f| f.starts_with("second derivative")));
    }

    #[test]
    fn invalid_specs() {
        assert!(RefSpec::sinusoid(Vec3::zeros(), 0.1, 1.0).is_err());
        assert!(RefSpec::sinusoid(Vec3::x(), 0.1, 0.0).is_err());
        assert!(RefSpec::smooth_step(Vec3::x(), 0.1, 0.0, 0.0).is_err());
        let mut spec = RefSpec::roll_sinusoid();
        spec.axis = Vec3::new(2.0, 0.0, 0.0);
        assert!(spec.eval(0.0).is_err());
        assert!(RefSpec::roll_sinusoid().eval(-1.0).is_err());
        assert!(validate_feasibility(&RefSpec::roll_sinusoid(), 0.0, 1e-3, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn sinusoid_is_periodic(t in 0.0..5.0f64, f in 0.2..3.0f64) {
            let spec = RefSpec::sinusoid(Vec3::new(0.3, -0.2, 0.9), 0.5, f).unwrap();
            let a = spec.eval(t).unwrap();
            let b = spec.eval(t + 1.0 / f).unwrap();
            prop_assert!((a.rd.matrix() - b.rd.matrix()).amax() < 1e-12);
            prop_assert!((a.wd - b.wd).amax() < 1e-12 * (1.0 + a.wd.amax()) * 10.0);
        }

        #[test]
        fn derivatives_match_finite_differences(t in 0.01..4.0f64) {
            let spec = RefSpec::roll_sinusoid();
            let h = 1e-6;
            let lo = spec.sample(t - h);
            let mid = spec.sample(t);
            let hi = spec.sample(t + h);
            let rd_dot = (hi.rd.matrix() - lo.rd.matrix()) / (2.0 * h);
            let expected = mid.rd.matrix() * hat(&mid.wd);
            prop_assert!((rd_dot - expected).norm() / expected.norm().max(1.0) < 1e-5);
            let wdd = (hi.wd_dot - lo.wd_dot) / (2.0 * h);
            prop_assert!((wdd - mid.wd_ddot).norm() / mid.wd_ddot.norm().max(1.0) < 1e-5);
        }
    }
}
