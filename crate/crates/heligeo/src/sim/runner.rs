//! Closed-loop rollouts.

use nalgebra::Vector6;

use crate::controller::{backstepping_input_with_accel, naive_input, roa_full_margin, CtrlDebug};
use crate::error::{Error, Result};
use crate::model::{fuselage_accel, input_from_servo, rotor_rate, BodyState, FullState, RotorState, ServoCmd};
use crate::reference::{RefSample, Reference};
use crate::so3::{Rotation, Vec3};

use super::config::{AccelFeedback, ConfigFile, ControlLaw, ControllerMode, SimConfig};
use super::integrator::rkmk4_step;
use super::trace::{Sample, Trace};

/// Body rate beyond which a run is declared divergent, rad/s.
pub const DIVERGENCE_RATE: f64 = 1e3;

/// A control law: `(cfg, state, reference, ω̇ estimate) → controller output`.
pub type ControlLawFn = dyn Fn(&SimConfig, &FullState, &RefSample, &Vec3) -> CtrlDebug + Sync;

/// The law selected by `cfg.law`.
pub fn configured_control(cfg: &SimConfig, s: &FullState, r: &RefSample, w_dot: &Vec3) -> CtrlDebug {
    match cfg.law {
        ControlLaw::Backstepping => backstepping_input_with_accel(&cfg.gains, &cfg.params, s, r, w_dot),
        ControlLaw::Naive => naive_input(&cfg.gains, &cfg.params, s, r),
    }
}

fn pack(s: &FullState) -> Vector6<f64> {
    let (w, m) = (s.body.w, s.rotor.m);
    Vector6::new(w.x, w.y, w.z, m.x, m.y, m.z)
}

fn unpack(r: Rotation, x: &Vector6<f64>, t: f64) -> FullState {
    FullState {
        body: BodyState {
            r,
            w: x.fixed_rows::<3>(0).into_owned(),
        },
        rotor: RotorState {
            m: x.fixed_rows::<3>(3).into_owned(),
        },
        t,
    }
}

fn applied_servo(cfg: &SimConfig, servo: ServoCmd) -> ServoCmd {
    match cfg.params.servo_limit {
        Some(limit) if cfg.params.servo_clamp => servo.clamped(limit),
        _ => servo,
    }
}

/// Input actually reaching the rotor for controller output `c` at rate `w`.
fn applied_input(cfg: &SimConfig, c: &CtrlDebug, w: &Vec3) -> Vec3 {
    match cfg.params.servo_limit {
        Some(limit) if cfg.params.servo_clamp && c.servo.exceeds(limit) => {
            input_from_servo(&cfg.params, &c.servo.clamped(limit), w)
        }
        _ => c.u,
    }
}

fn check_state(s: &FullState) -> std::result::Result<(), String> {
    if !s.is_finite() {
        return Err("non-finite state".into());
    }
    let rate = s.body.w.norm();
    if rate > DIVERGENCE_RATE {
        return Err(format!("body rate {rate:.3e} rad/s exceeds {DIVERGENCE_RATE:e}"));
    }
    Ok(())
}

/// One continuous-mode step of size `h` (either sign) with exact `ω̇`
/// feedback and the configured law. No divergence check.
pub fn step_by(cfg: &SimConfig, s: &FullState, h: f64) -> FullState {
    let p = &cfg.params;
    let f = |t: f64, r: &Rotation, x: &Vector6<f64>| {
        let st = unpack(*r, x, t);
        let reference = cfg.reference.sample(t);
        let w_dot = fuselage_accel(p, &st.body, &st.rotor.m);
        let c = configured_control(cfg, &st, &reference, &w_dot);
        let m_dot = rotor_rate(p, &st.rotor, &applied_input(cfg, &c, &st.body.w));
        Vector6::new(w_dot.x, w_dot.y, w_dot.z, m_dot.x, m_dot.y, m_dot.z)
    };
    let (r, x) = rkmk4_step(&s.body.r, &pack(s), s.t, h, f);
    unpack(r, &x, s.t + h)
}

/// One continuous-mode step of size `cfg.dt` with exact `ω̇` feedback and
/// the configured law.
pub fn step(cfg: &SimConfig, s: &FullState) -> Result<FullState> {
    let p = &cfg.params;
    let next = step_by(cfg, s, cfg.dt);
    check_state(&next).map_err(|reason| Error::Diverged {
        t: next.t,
        reason,
        partial: Box::new(Trace::new(
            cfg.params,
            cfg.gains,
            roa_full_margin(&cfg.gains, p, s, &cfg.reference.sample(s.t)),
            cfg.emit_certificates,
        )),
    })?;
    Ok(next)
}

/// Backward-difference `ω̇` estimate through a first-order low-pass.
#[derive(Debug, Clone, Copy)]
struct AccelFilter {
    cutoff_hz: f64,
    estimate: Vec3,
    prev_w: Vec3,
    prev_t: f64,
}

impl AccelFilter {
    fn update(&mut self, w: &Vec3, t: f64) {
        let h = t - self.prev_t;
        if h > 0.0 {
            let raw = (w - self.prev_w) / h;
            let alpha = 1.0 - (-std::f64::consts::TAU * self.cutoff_hz * h).exp();
            self.estimate += (raw - self.estimate) * alpha;
            self.prev_w = *w;
            self.prev_t = t;
        }
    }
}

/// Stateful stepper covering every controller mode.
pub struct Simulator<'a> {
    cfg: &'a SimConfig,
    law: &'a ControlLawFn,
    state: FullState,
    step_index: usize,
    /// Held servo command under ZOH.
    held: Option<ServoCmd>,
    updates: usize,
    filter: Option<AccelFilter>,
}

impl<'a> Simulator<'a> {
    pub fn new(cfg: &'a SimConfig, law: &'a ControlLawFn) -> Self {
        let state = cfg.initial_state();
        let filter = match cfg.accel_feedback {
            AccelFeedback::Model => None,
            AccelFeedback::Filtered { cutoff_hz } => Some(AccelFilter {
                cutoff_hz,
                estimate: fuselage_accel(&cfg.params, &state.body, &state.rotor.m),
                prev_w: state.body.w,
                prev_t: state.t,
            }),
        };
        let mut sim = Simulator {
            cfg,
            law,
            state,
            step_index: 0,
            held: None,
            updates: 0,
            filter,
        };
        sim.sample_instant();
        sim
    }

    pub fn state(&self) -> &FullState {
        &self.state
    }

    fn accel_estimate(&self, s: &FullState) -> Vec3 {
        match &self.filter {
            Some(f) => f.estimate,
            None => fuselage_accel(&self.cfg.params, &s.body, &s.rotor.m),
        }
    }

    /// Controller sampling at the current state: refreshes the acceleration
    /// filter and, under ZOH, the held command when an update is due.
    fn sample_instant(&mut self) {
        let t = self.state.t;
        match self.cfg.mode {
            ControllerMode::Continuous => {
                if let Some(f) = &mut self.filter {
                    f.update(&self.state.body.w, t);
                }
            }
            ControllerMode::ZeroOrderHold { rate_hz } => {
                let due = self.updates as f64 / rate_hz;
                if t >= due - 0.5 * self.cfg.dt {
                    if let Some(f) = &mut self.filter {
                        f.update(&self.state.body.w, t);
                    }
                    let c = self.evaluate(&self.state);
                    self.held = Some(applied_servo(self.cfg, c.servo));
                    self.updates += 1;
                }
            }
        }
    }

    fn evaluate(&self, s: &FullState) -> CtrlDebug {
        let reference = self.cfg.reference.sample(s.t);
        (self.law)(self.cfg, s, &reference, &self.accel_estimate(s))
    }

    /// The sample recorded for the current state.
    pub fn sample(&self) -> Sample {
        let reference = self.cfg.reference.sample(self.state.t);
        let ctrl = (self.law)(self.cfg, &self.state, &reference, &self.accel_estimate(&self.state));
        let servo = self.held.unwrap_or_else(|| applied_servo(self.cfg, ctrl.servo));
        Sample {
            state: self.state,
            reference,
            ctrl,
            servo,
        }
    }

    /// Advances one step of `cfg.dt`. Returns the divergence reason if the
    /// new state is unusable (the state is still updated).
    pub fn advance(&mut self) -> std::result::Result<(), String> {
        let cfg = self.cfg;
        let p = &cfg.params;
        let held = self.held;
        let f = |t: f64, r: &Rotation, x: &Vector6<f64>| {
            let st = unpack(*r, x, t);
            let w_dot = fuselage_accel(p, &st.body, &st.rotor.m);
            let u = match held {
                Some(servo) => input_from_servo(p, &servo, &st.body.w),
                None => applied_input(cfg, &self.evaluate(&st), &st.body.w),
            };
            let m_dot = rotor_rate(p, &st.rotor, &u);
            Vector6::new(w_dot.x, w_dot.y, w_dot.z, m_dot.x, m_dot.y, m_dot.z)
        };
        let (r, x) = rkmk4_step(&self.state.body.r, &pack(&self.state), self.state.t, cfg.dt, f);
        self.step_index += 1;
        self.state = unpack(r, &x, self.step_index as f64 * cfg.dt);
        check_state(&self.state)?;
        self.sample_instant();
        Ok(())
    }
}

/// Validates `cfg` and runs it with the configured law.
pub fn run(cfg: &SimConfig) -> Result<Trace> {
    cfg.validate()?;
    run_with_law(cfg, &configured_control)
}

/// Runs `cfg` with an arbitrary control law. No validation is done.
pub fn run_with_law(cfg: &SimConfig, law: &ControlLawFn) -> Result<Trace> {
    let s0 = cfg.initial_state();
    let roa = roa_full_margin(&cfg.gains, &cfg.params, &s0, &cfg.reference.sample(0.0));
    let mut trace = Trace::new(cfg.params, cfg.gains, roa, cfg.emit_certificates);
    let steps = cfg.steps();
    let every = cfg.decimation();
    let mut sim = Simulator::new(cfg, law);
    trace.push(sim.sample());
    for k in 1..=steps {
        if let Err(reason) = sim.advance() {
            return Err(Error::Diverged {
                t: sim.state().t,
                reason,
                partial: Box::new(trace),
            });
        }
        if k % every == 0 {
            trace.push(sim.sample());
        }
    }
    Ok(trace)
}

/// Runs one scenario per value of `key`, concurrently.
pub fn sweep(base: &ConfigFile, key: &str, values: &[String]) -> Vec<(String, Result<Trace>)> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|value| {
                scope.spawn(move || {
                    let mut file = base.clone();
                    file.set(key, value);
                    let result = file.build().and_then(|cfg| run(&cfg));
                    (value.clone(), result)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let mut cfg = SimConfig::regulation();
        cfg.initial.attitude = Vec3::zeros();
        cfg.duration = 0.1;
        let trace = run(&cfg).unwrap();
        let last = trace.samples.last().unwrap().state;
        assert_eq!(last.body.r, Rotation::identity());
        assert_eq!(last.body.w, Vec3::zeros());
        assert_eq!(last.rotor.m, Vec3::zeros());
    }

    #[test]
    fn free_step_matches_simulator() {
        let cfg = SimConfig::roll_tracking();
        let mut sim = Simulator::new(&cfg, &configured_control);
        let mut s = cfg.initial_state();
        for _ in 0..50 {
            s = step(&cfg, &s).unwrap();
            sim.advance().unwrap();
        }
        let other = sim.state();
        assert!((s.t - other.t).abs() < 1e-15);
        assert!((s.body.r.matrix() - other.body.r.matrix()).amax() < 1e-13);
        assert!((s.body.w - other.body.w).amax() < 1e-12);
        assert!((s.rotor.m - other.rotor.m).amax() < 1e-12);
    }

    #[test]
    fn decimation_and_time_grid() {
        let mut cfg = SimConfig::roll_tracking();
        cfg.duration = 0.1;
        cfg.output_interval = 0.01;
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.len(), 11);
        let t = trace.times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((t[10] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn divergence_returns_partial_trace() {
        let mut cfg = SimConfig::roll_tracking();
        cfg.duration = 5.0;
        let flipped = |cfg: &SimConfig, s: &FullState, r: &RefSample, w_dot: &Vec3| {
            let mut c = configured_control(cfg, s, r, w_dot);
            c.u = -c.u * 50.0;
            c
        };
        match run_with_law(&cfg, &flipped) {
            Err(Error::Diverged { t, partial, .. }) => {
                assert!(t < 5.0);
                assert!(!partial.is_empty());
            }
            other => panic!("expected divergence, got {:?}", other.map(|t| t.len())),
        }
    }

    #[test]
    fn sweep_runs_each_value() {
        let mut base = ConfigFile::default();
        base.set("sim.duration", 0.05);
        let values = vec!["15".to_string(), "25".to_string(), "oops".to_string()];
        let results = sweep(&base, "gains.k_R", &values);
        assert_eq!(results.len(), 3);
        assert!(results[0].1.is_ok() && results[1].1.is_ok());
        assert!(matches!(results[2].1, Err(Error::Config { .. })));
        let a = results[0].1.as_ref().unwrap();
        assert_eq!(a.gains.k_r, 15.0);
    }
}
