//! Scenario configuration.
//!
//! Files are flat `key = value` lines with `#` comments. Keys are namespaced:
//!
//! ```text
//! # roll tracking
//! params.tau_m = 0.06
//! gains.k_R = 20
//! ref.kind = sinusoid
//! ref.amplitude_deg = 20
//! initial.roll_deg = 150
//! sim.duration = 10
//! ```
//!
//! Anything not set keeps the roll-tracking default. Vectors are written as
//! three comma-separated numbers, angles at this boundary are in degrees.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::controller::{eps_bound, Gains, DEFAULT_B1, DEFAULT_EPS_FRACTION, DEFAULT_K_R, DEFAULT_K_W};
use crate::error::{Error, Result};
use crate::model::{FullState, HeliParams, RotorState, BodyState};
use crate::reference::{RefKind, RefSpec, Reference};
use crate::so3::{exp_so3, quadratic_bounds, QuadraticBounds, Vec3};

/// Default sublevel margin `δ`; the bound `ψ ≤ 2 − δ` must cover the
/// initial condition for `b₂ = 1/δ` to apply.
pub const DEFAULT_SUBLEVEL_MARGIN: f64 = 0.1;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DURATION: f64 = 10.0;
pub const DEFAULT_ZOH_HZ: f64 = 250.0;
pub const DEFAULT_ACCEL_FILTER_HZ: f64 = 50.0;
/// Largest admissible step, s.
pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerMode {
    /// Control evaluated at every integrator stage.
    Continuous,
    /// Servo commands updated at `rate_hz` and held in between.
    ZeroOrderHold { rate_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlLaw {
    Backstepping,
    /// `u = A M_d`, ignoring the rotor lag.
    Naive,
}

/// Source of the angular acceleration fed to `Ṁ_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccelFeedback {
    /// Exact, from the model at the current rotor moment.
    Model,
    /// Backward difference of `ω` through a first-order low-pass at `cutoff_hz`.
    Filtered { cutoff_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    /// Axis-angle attitude, rad.
    pub attitude: Vec3,
    /// Body rate, rad/s.
    pub rate: Vec3,
    /// Rotor moment, N·m.
    pub moment: Vec3,
}

impl InitialCondition {
    pub fn state(&self) -> FullState {
        FullState {
            body: BodyState {
                r: exp_so3(&self.attitude),
                w: self.rate,
            },
            rotor: RotorState { m: self.moment },
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: HeliParams,
    pub gains: Gains,
    pub reference: RefSpec,
    pub initial: InitialCondition,
    pub dt: f64,
    pub duration: f64,
    pub mode: ControllerMode,
    pub law: ControlLaw,
    pub accel_feedback: AccelFeedback,
    /// Spacing of recorded samples, s.
    pub output_interval: f64,
    pub output: Option<PathBuf>,
    pub emit_certificates: bool,
    pub sublevel_margin: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::roll_tracking()
    }
}

impl SimConfig {
    /// Reference helicopter, 150° roll and 57°/s roll rate at rest rotor,
    /// tracking a 20° 1 Hz roll sinusoid for 10 s.
    pub fn roll_tracking() -> Self {
        let params = HeliParams::reference_helicopter();
        SimConfig {
            gains: Gains::defaults_for(&params),
            params,
            reference: RefSpec::roll_sinusoid(),
            initial: InitialCondition {
                attitude: Vec3::new(150f64.to_radians(), 0.0, 0.0),
                rate: Vec3::new(57f64.to_radians(), 0.0, 0.0),
                moment: Vec3::zeros(),
            },
            dt: DEFAULT_DT,
            duration: DEFAULT_DURATION,
            mode: ControllerMode::Continuous,
            law: ControlLaw::Backstepping,
            accel_feedback: AccelFeedback::Model,
            output_interval: DEFAULT_DT,
            output: None,
            emit_certificates: false,
            sublevel_margin: DEFAULT_SUBLEVEL_MARGIN,
        }
    }

    /// Same as [`roll_tracking`](Self::roll_tracking) but holding level
    /// attitude from a 150° roll at rest.
    pub fn regulation() -> Self {
        let mut cfg = Self::roll_tracking();
        cfg.reference = RefSpec::constant(Default::default());
        cfg.initial.rate = Vec3::zeros();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.gains.validate(&self.params, DEFAULT_B1)?;
        self.reference.validate()?;
        let bad = |msg: String| Err(Error::config(0, msg));
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad(format!("sim.dt must lie in (0, {MAX_DT}], got {}", self.dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("sim.duration must be positive, got {}", self.duration));
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return bad(format!("sim.output_interval must be positive, got {}", self.output_interval));
        }
        if let ControllerMode::ZeroOrderHold { rate_hz } = self.mode {
            if !(rate_hz > 0.0 && rate_hz.is_finite()) {
                return bad(format!("sim.zoh_hz must be positive, got {rate_hz}"));
            }
        }
        if let AccelFeedback::Filtered { cutoff_hz } = self.accel_feedback {
            if !(cutoff_hz > 0.0 && cutoff_hz.is_finite()) {
                return bad(format!("sim.accel_filter_hz must be positive, got {cutoff_hz}"));
            }
        }
        if !self.initial.attitude.iter().chain(&self.initial.rate).chain(&self.initial.moment).all(|x| x.is_finite()) {
            return bad("initial condition must be finite".into());
        }
        quadratic_bounds(self.sublevel_margin)?;
        Ok(())
    }

    /// `b₁` and `b₂` for the configured sublevel margin.
    pub fn quadratic_bounds(&self) -> Result<QuadraticBounds> {
        quadratic_bounds(self.sublevel_margin)
    }

    pub fn initial_state(&self) -> FullState {
        self.initial.state()
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Steps between recorded samples (at least one).
    pub fn decimation(&self) -> usize {
        ((self.output_interval / self.dt).round() as usize).max(1)
    }

    pub fn reference_at(&self, t: f64) -> crate::reference::RefSample {
        self.reference.sample(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ConfigFile::load(path)?.build()
    }

    pub fn parse(text: &str) -> Result<Self> {
        ConfigFile::parse(text)?.build()
    }
}

/// Parsed `key = value` pairs, kept in file order so that later lines and
/// command-line overrides win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    /// 1-based source line, 0 for overrides.
    line: usize,
    key: String,
    value: String,
}

/// Gain settings as written; `ε` is resolved once the parameters are known.
struct GainSpec {
    k_r: f64,
    k_w: f64,
    eps: Option<f64>,
    eps_fraction: f64,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::config(line, "empty key or value"));
            }
            entries.push(Entry {
                line,
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Appends an override that takes precedence over earlier settings.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push(Entry {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        });
    }

    /// Last value written for `key`, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    /// Applies all entries on top of [`SimConfig::roll_tracking`].
    ///
    /// Only syntax and key names are checked here; call
    /// [`SimConfig::validate`] before running.
    pub fn build(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::roll_tracking();
        let mut gains = GainSpec {
            k_r: DEFAULT_K_R,
            k_w: DEFAULT_K_W,
            eps: None,
            eps_fraction: DEFAULT_EPS_FRACTION,
        };
        let mut ref_kind = "sinusoid".to_string();
        let mut amplitude = 20f64.to_radians();
        let mut frequency = 1.0;
        let mut target = 20f64.to_radians();
        let mut start = 0.0;
        let mut rise_time = 1.0;
        let mut zoh_hz = DEFAULT_ZOH_HZ;
        let mut zoh = false;
        let mut filter_hz = DEFAULT_ACCEL_FILTER_HZ;
        let mut filtered = false;

        for e in &self.entries {
            let err = |msg: String| Error::config(e.line, format!("{}: {msg}", e.key));
            let num = || parse_num(&e.value).map_err(err);
            let vec = || parse_vec(&e.value).map_err(err);
            let flag = || parse_bool(&e.value).map_err(err);
            let p = &mut cfg.params;
            match e.key.as_str() {
                "params.J_xx" => p.inertia.x = num()?,
                "params.J_yy" => p.inertia.y = num()?,
                "params.J_zz" => p.inertia.z = num()?,
                "params.tau_m" => p.tau_m = num()?,
                "params.tau_t" => p.tau_t = num()?,
                "params.k_beta" => p.k_beta = num()?,
                "params.h" => p.hub_height = num()?,
                "params.T_hover" => p.thrust_hover = optional(&e.value).map_err(err)?,
                "params.K_beta" => p.hub_stiffness = num()?,
                "params.K_t" => p.tail_gain = num()?,
                "params.servo_limit_deg" => {
                    p.servo_limit = optional(&e.value).map_err(err)?.map(f64::to_radians)
                }
                "params.servo_clamp" => p.servo_clamp = flag()?,
                "gains.k_R" => gains.k_r = num()?,
                "gains.k_w" => gains.k_w = num()?,
                "gains.eps" => gains.eps = Some(num()?),
                "gains.eps_fraction" => {
                    gains.eps = None;
                    gains.eps_fraction = num()?;
                }
                "gains.sublevel_margin" => cfg.sublevel_margin = num()?,
                "ref.kind" => ref_kind = e.value.clone(),
                "ref.axis" => cfg.reference.axis = vec()?,
                "ref.amplitude_deg" => amplitude = num()?.to_radians(),
                "ref.frequency_hz" => frequency = num()?,
                "ref.target_deg" => target = num()?.to_radians(),
                "ref.start" => start = num()?,
                "ref.rise_time" => rise_time = num()?,
                "ref.offset_deg" => cfg.reference.offset = exp_so3(&vec()?.map(f64::to_radians)),
                "initial.attitude_deg" => cfg.initial.attitude = vec()?.map(f64::to_radians),
                "initial.roll_deg" => cfg.initial.attitude = Vec3::new(num()?.to_radians(), 0.0, 0.0),
                "initial.rate_dps" => cfg.initial.rate = vec()?.map(f64::to_radians),
                "initial.roll_rate_dps" => cfg.initial.rate = Vec3::new(num()?.to_radians(), 0.0, 0.0),
                "initial.moment" => cfg.initial.moment = vec()?,
                "sim.dt" => cfg.dt = num()?,
                "sim.duration" => cfg.duration = num()?,
                "sim.mode" => {
                    zoh = match e.value.as_str() {
                        "continuous" => false,
                        "zoh" => true,
                        other => return Err(err(format!("expected continuous or zoh, got `{other}`"))),
                    }
                }
                "sim.zoh_hz" => zoh_hz = num()?,
                "sim.controller" => {
                    cfg.law = match e.value.as_str() {
                        "backstepping" => ControlLaw::Backstepping,
                        "naive" => ControlLaw::Naive,
                        other => return Err(err(format!("expected backstepping or naive, got `{other}`"))),
                    }
                }
                "sim.accel_feedback" => {
                    filtered = match e.value.as_str() {
                        "model" => false,
                        "filtered" => true,
                        other => return Err(err(format!("expected model or filtered, got `{other}`"))),
                    }
                }
                "sim.accel_filter_hz" => filter_hz = num()?,
                "sim.output_interval" => cfg.output_interval = num()?,
                "sim.emit_certificates" => cfg.emit_certificates = flag()?,
                "sim.output" => cfg.output = Some(PathBuf::from(&e.value)),
                _ => return Err(Error::config(e.line, format!("unknown key `{}`", e.key))),
            }
        }

        let axis_norm = cfg.reference.axis.norm();
        if axis_norm > 0.0 && axis_norm.is_finite() {
            cfg.reference.axis /= axis_norm;
        }
        cfg.reference.kind = match ref_kind.as_str() {
            "constant" => RefKind::Constant,
            "sinusoid" => RefKind::Sinusoid {
                amplitude,
                frequency,
            },
            "smooth_step" => RefKind::SmoothStep {
                target,
                start,
                rise_time,
            },
            other => {
                return Err(Error::config(
                    0,
                    format!("ref.kind: expected constant, sinusoid or smooth_step, got `{other}`"),
                ))
            }
        };
        cfg.mode = if zoh {
            ControllerMode::ZeroOrderHold { rate_hz: zoh_hz }
        } else {
            ControllerMode::Continuous
        };
        cfg.accel_feedback = if filtered {
            AccelFeedback::Filtered { cutoff_hz: filter_hz }
        } else {
            AccelFeedback::Model
        };
        let eps = gains.eps.unwrap_or_else(|| {
            gains.eps_fraction * eps_bound(gains.k_r, gains.k_w, &cfg.params.inertia_matrix(), DEFAULT_B1)
        });
        cfg.gains = Gains {
            k_r: gains.k_r,
            k_w: gains.k_w,
            eps,
        };
        Ok(cfg)
    }
}

fn parse_num(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a finite number, got `{s}`"))
}

fn optional(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

fn parse_vec(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{s}`"));
    }
    Ok(Vec3::new(parse_num(parts[0])?, parse_num(parts[1])?, parse_num(parts[2])?))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}
