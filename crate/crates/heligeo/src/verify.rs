//! Property suite: finite-difference oracles, conservation probes and trace
//! certificates.
//!
//! Each measurement is a plain function so tests can pin their own limits;
//! [`run_suite`] bundles them with the default limits for `heligeo verify`.

use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::{desired_moment, desired_moment_rate, eps_bound, Gains, DEFAULT_B1};
use crate::error::Result;
use crate::lyapunov::{bound_matrices, check_decay, fit_exponential, v1_sandwich, DecayReport, ExpFit, FitOptions};
use crate::lyapunov::lyap_v1;
use crate::model::{flap_dynamics_check, flap_from_moment, fuselage_accel, kinetic_energy, BodyState, FullState, HeliParams};
use crate::reference::{RefSample, Reference};
use crate::sim::{rkmk4_step, run, step_by, SimConfig, Trace};
use crate::so3::{
    attitude_error, exp_so3, hat, psi, quadratic_bounds, transport_matrix, vee, ErrorState, Rotation, Vec3,
};

/// Seed shared by every randomised check.
pub const SEED: u64 = 0x5eed_4e11;

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED)
}

fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

/// Rotation with a uniformly random axis and angle in `[0, π)`.
fn random_rotation(rng: &mut impl Rng) -> Rotation {
    loop {
        let v = random_vec(rng, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return exp_so3(&(v / n * rng.random_range(0.0..std::f64::consts::PI)));
        }
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

// ---------------------------------------------------------------- scenario

/// Tracking and flapping figures for a roll-tracking run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    /// Largest `|roll − roll_d|` after `settle`, deg.
    pub max_roll_error_deg: f64,
    /// Largest `|a|` over the whole run, rad.
    pub max_abs_a: f64,
    /// Largest `|b|` after `settle`, deg.
    pub steady_b_deg: f64,
    /// Largest `|b|` over the whole run, deg.
    pub max_b_deg: f64,
    pub settle: f64,
}

fn wrap_deg(x: f64) -> f64 {
    (x + 180.0).rem_euclid(360.0) - 180.0
}

/// Roll error and flap figures of `trace` after `settle` seconds.
pub fn tracking_report(trace: &Trace, settle: f64) -> TrackingReport {
    let mut r = TrackingReport {
        max_roll_error_deg: 0.0,
        max_abs_a: 0.0,
        steady_b_deg: 0.0,
        max_b_deg: 0.0,
        settle,
    };
    for s in &trace.samples {
        let flap = flap_from_moment(&trace.params, &s.state.rotor.m);
        let b = flap.b.to_degrees().abs();
        r.max_abs_a = r.max_abs_a.max(flap.a.abs());
        r.max_b_deg = r.max_b_deg.max(b);
        if s.state.t > settle {
            let roll = s.state.body.r.euler_zyx().0.to_degrees();
            let roll_d = s.reference.rd.euler_zyx().0.to_degrees();
            r.max_roll_error_deg = r.max_roll_error_deg.max(wrap_deg(roll - roll_d).abs());
            r.steady_b_deg = r.steady_b_deg.max(b);
        }
    }
    r
}

/// Runs `cfg` and reports the wall-clock time alongside the trace.
pub fn timed_run(cfg: &SimConfig) -> Result<(Trace, f64)> {
    let start = Instant::now();
    let trace = run(cfg)?;
    Ok((trace, start.elapsed().as_secs_f64()))
}

/// Certificate figures along a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub decay: DecayReport,
    /// `(name, positive definite)` for `M₁, M₂, W₁, W`.
    pub definiteness: [(&'static str, bool); 4],
    /// `ψ` stayed below 2 from the first in-sublevel sample on.
    pub forward_invariant: bool,
    pub max_psi_after_entry: f64,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.decay.passed() && self.definiteness.iter().all(|(_, pd)| *pd) && self.forward_invariant
    }
}

pub fn certificate_report(trace: &Trace, sublevel_margin: f64) -> Result<CertificateReport> {
    let certs = trace.certificates();
    let decay = check_decay(&certs)?;
    let qb = quadratic_bounds(sublevel_margin)?;
    let bounds = bound_matrices(&trace.gains, &trace.params, qb.b1, qb.b2);
    let entry = certs.iter().position(|c| c.in_sublevel);
    let max_psi_after_entry = entry
        .map(|i| certs[i..].iter().map(|c| c.psi).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    Ok(CertificateReport {
        decay,
        definiteness: bounds.definiteness(),
        forward_invariant: entry.is_some() && max_psi_after_entry < 2.0,
        max_psi_after_entry,
    })
}

/// Fits the exponential envelope to `ψ` along `trace`.
pub fn psi_fit(trace: &Trace, opts: &FitOptions) -> Result<ExpFit> {
    let t = trace.times();
    let psi: Vec<f64> = trace.rows().map(|r| r.psi).collect();
    fit_exponential(&t, &psi, opts)
}

// ------------------------------------------------------- closed-loop identities

/// Largest residuals of the closed-loop error dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `J ė_ω + k_R e_R + k_ω e_ω` with `M = M_d` applied directly, N·m.
    pub rigid: f64,
    /// `J ė_ω + k_R e_R + k_ω e_ω − e_M` with the rotor in the loop, N·m.
    pub fuselage: f64,
    /// `ė_M + A e_M + e_ω + ε J⁻¹ e_R`, N·m/s.
    pub rotor: f64,
}

fn central<T>(xs: &[T], i: usize, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Div<f64, Output = T> + Copy,
{
    (xs[i + 1] - xs[i - 1]) / (2.0 * h)
}

/// Residuals of the three error-dynamics identities along `cfg`, sampled at
/// every step of size `cfg.dt` for `cfg.duration` seconds.
pub fn identity_residuals(cfg: &SimConfig) -> IdentityReport {
    let (p, g, h) = (&cfg.params, &cfg.gains, cfg.dt);
    let steps = cfg.steps();
    let reference = |t: f64| cfg.reference.sample(t);
    let errors = |s: &BodyState, r: &RefSample| ErrorState::new(&s.r, &s.w, &r.rd, &r.wd);

    // Rigid body driven straight by M_d.
    let mut body = cfg.initial_state().body;
    let mut e_w = Vec::with_capacity(steps + 1);
    let mut e_r = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * h;
        let err = errors(&body, &reference(t));
        e_w.push(err.e_w);
        e_r.push(err.e_r);
        let f = |t: f64, r: &Rotation, w: &Vector3<f64>| {
            let s = BodyState { r: *r, w: *w };
            fuselage_accel(p, &s, &desired_moment(g, p, &s, &reference(t)))
        };
        (body.r, body.w) = rkmk4_step(&body.r, &body.w, t, h, f);
    }
    let mut rigid: f64 = 0.0;
    for i in 1..steps {
        let res = central(&e_w, i, h).component_mul(&p.inertia) + e_r[i] * g.k_r + e_w[i] * g.k_w;
        rigid = rigid.max(res.norm());
    }

    // Full loop.
    let mut s = cfg.initial_state();
    let (mut e_w, mut e_r, mut e_m) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..=steps {
        let r = reference(s.t);
        let err = errors(&s.body, &r);
        e_w.push(err.e_w);
        e_r.push(err.e_r);
        e_m.push(s.rotor.m - desired_moment(g, p, &s.body, &r));
        if k < steps {
            s = step_by(cfg, &s, h);
            s.t = (k + 1) as f64 * h;
        }
    }
    let a_diag = Vec3::new(1.0 / p.tau_m, 1.0 / p.tau_m, 1.0 / p.tau_t);
    let (mut fuselage, mut rotor): (f64, f64) = (0.0, 0.0);
    for i in 1..steps {
        let res = central(&e_w, i, h).component_mul(&p.inertia) + e_r[i] * g.k_r + e_w[i] * g.k_w - e_m[i];
        fuselage = fuselage.max(res.norm());
        let res = central(&e_m, i, h)
            + e_m[i].component_mul(&a_diag)
            + e_w[i]
            + e_r[i].component_div(&p.inertia) * g.eps;
        rotor = rotor.max(res.norm());
    }
    IdentityReport { rigid, fuselage, rotor }
}

/// Finite-difference checks at points of a closed-loop trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// `Ṁ_d` analytic vs central difference, relative to `max(‖Ṁ_d‖, 1)`.
    pub md_rate: f64,
    /// `ψ̇` vs `e_R · e_ω`, relative to `max(|e_R·e_ω|, 1)`.
    pub psi_rate: f64,
    /// `ė_R` vs `B e_ω`, relative to `max(‖B e_ω‖, 1)`.
    pub er_rate: f64,
    pub points: usize,
}

/// Evaluates the rate identities at `points` states spread over the first
/// `span` seconds of `cfg`, differencing with step `h` in both directions.
pub fn rate_checks(cfg: &SimConfig, span: f64, points: usize, h: f64) -> RateReport {
    let (p, g) = (&cfg.params, &cfg.gains);
    let every = ((span / points as f64) / cfg.dt).round().max(1.0) as usize;
    let mut s = cfg.initial_state();
    let mut report = RateReport {
        md_rate: 0.0,
        psi_rate: 0.0,
        er_rate: 0.0,
        points: 0,
    };
    let mut k = 0;
    while report.points < points {
        if k % every == 0 {
            let lo = step_by(cfg, &s, -h);
            let hi = step_by(cfg, &s, h);
            let at = |x: &FullState| cfg.reference.sample(x.t);
            let (r_lo, r_mid, r_hi) = (at(&lo), at(&s), at(&hi));

            let w_dot = fuselage_accel(p, &s.body, &s.rotor.m);
            let analytic = desired_moment_rate(g, p, &s.body, &w_dot, &r_mid);
            let fd = (desired_moment(g, p, &hi.body, &r_hi) - desired_moment(g, p, &lo.body, &r_lo)) / (2.0 * h);
            report.md_rate = report.md_rate.max(rel((fd - analytic).norm(), analytic.norm()));

            let err = ErrorState::new(&s.body.r, &s.body.w, &r_mid.rd, &r_mid.wd);
            let psi_dot = err.e_r.dot(&err.e_w);
            let fd = (psi(&hi.body.r, &r_hi.rd) - psi(&lo.body.r, &r_lo.rd)) / (2.0 * h);
            report.psi_rate = report.psi_rate.max(rel((fd - psi_dot).abs(), psi_dot.abs()));

            let re = r_mid.rd.transpose() * s.body.r;
            let er_dot = transport_matrix(&re) * err.e_w;
            let fd = (attitude_error(&hi.body.r, &r_hi.rd) - attitude_error(&lo.body.r, &r_lo.rd)) / (2.0 * h);
            report.er_rate = report.er_rate.max(rel((fd - er_dot).norm(), er_dot.norm()));
            report.points += 1;
        }
        s = step_by(cfg, &s, cfg.dt);
        k += 1;
        s.t = k as f64 * cfg.dt;
    }
    report
}

/// Flap-coordinate residual on a run of `cfg` recorded at every step, and
/// the same residual with the hub stiffness used for reconstruction
/// scaled by `stiffness_scale`.
pub fn flap_residuals(cfg: &SimConfig, stiffness_scale: f64) -> Result<(f64, f64)> {
    let mut cfg = cfg.clone();
    cfg.output_interval = cfg.dt;
    let trace = run(&cfg)?;
    let samples = trace.flap_samples();
    let nominal = flap_dynamics_check(&cfg.params, &samples)?;
    let mut wrong = cfg.params;
    wrong.hub_stiffness *= stiffness_scale;
    Ok((nominal, flap_dynamics_check(&wrong, &samples)?))
}

// ----------------------------------------------------------------- geometry

/// Largest `‖vee(hat(x)) − x‖` over `n` random vectors (exactly zero when
/// the round trip is exact).
pub fn hat_vee_roundtrip(n: usize) -> f64 {
    let mut rng = rng();
    (0..n)
        .map(|_| {
            let x = random_vec(&mut rng, 10.0);
            (vee(&hat(&x)).expect("hat is skew") - x).amax()
        })
        .fold(0.0, f64::max)
}

/// Largest `‖[R x̂ Rᵀ]^∨ − R x‖` over `n` random pairs.
pub fn conjugation_error(n: usize) -> f64 {
    let mut rng = rng();
    (0..n)
        .map(|_| {
            let r = random_rotation(&mut rng);
            let x = random_vec(&mut rng, 1.0);
            let m = r.matrix() * hat(&x) * r.matrix().transpose();
            (vee(&m).expect("conjugate of skew is skew") - r.matrix() * x).amax()
        })
        .fold(0.0, f64::max)
}

/// Counts of failed sandwich inequalities over `n` random error states with
/// `ψ ≤ 2 − margin`: `b₁‖e_R‖² ≤ ψ ≤ b₂‖e_R‖²` and `z₁ᵀM₁z₁ ≤ V₁ ≤ z₁ᵀM₂z₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub samples: usize,
    pub psi_violations: usize,
    pub v1_violations: usize,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.psi_violations == 0 && self.v1_violations == 0
    }
}

pub fn sandwich_check(p: &HeliParams, g: &Gains, margin: f64, n: usize) -> Result<SandwichReport> {
    let qb = quadratic_bounds(margin)?;
    let bounds = bound_matrices(g, p, qb.b1, qb.b2);
    let mut rng = rng();
    let mut report = SandwichReport {
        samples: 0,
        psi_violations: 0,
        v1_violations: 0,
    };
    let slack = |x: f64| 1e-12 * (1.0 + x.abs());
    while report.samples < n {
        let r = random_rotation(&mut rng);
        let rd = random_rotation(&mut rng);
        let err = ErrorState::new(&r, &random_vec(&mut rng, 3.0), &rd, &random_vec(&mut rng, 3.0));
        if err.psi > 2.0 - margin {
            continue;
        }
        report.samples += 1;
        let er2 = err.e_r.norm_squared();
        if qb.b1 * er2 > err.psi + slack(err.psi) || err.psi > qb.b2 * er2 + slack(err.psi) {
            report.psi_violations += 1;
        }
        // With ω_d = 0 the body rate is the rate error itself.
        let body = BodyState { r, w: err.e_w };
        let reference = RefSample {
            rd,
            ..Default::default()
        };
        let v1 = lyap_v1(g, p, &body, &reference);
        let (lo, hi) = v1_sandwich(&bounds, &err);
        if lo > v1 + slack(v1) || v1 > hi + slack(v1) {
            report.v1_violations += 1;
        }
    }
    Ok(report)
}

// --------------------------------------------------------------- integrator

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorReport {
    /// Largest `‖RᵀR − I‖_F` over a closed-loop run.
    pub orthonormality: f64,
    /// Relative kinetic-energy drift of a torque-free body.
    pub energy_drift: f64,
    /// `err(h) / err(h/2)` for the torque-free body (16 for fourth order).
    pub convergence_ratio: f64,
    /// Pure spin `ω = e_x` after π s against the closed form.
    pub spin_error: f64,
}

fn torque_free(p: &HeliParams, w0: Vec3, h: f64, steps: usize) -> (Rotation, Vec3) {
    let (mut r, mut w) = (Rotation::identity(), w0);
    for i in 0..steps {
        (r, w) = rkmk4_step(&r, &w, i as f64 * h, h, |_, r, w| {
            fuselage_accel(p, &BodyState { r: *r, w: *w }, &Vec3::zeros())
        });
    }
    (r, w)
}

/// Integrator quality over `horizon` seconds at `dt`.
pub fn integrator_report(cfg: &SimConfig, horizon: f64) -> Result<IntegratorReport> {
    let p = &cfg.params;
    let steps = (horizon / cfg.dt).round() as usize;

    let mut closed = cfg.clone();
    closed.duration = horizon;
    let trace = run(&closed)?;
    let orthonormality = trace
        .samples
        .iter()
        .map(|s| s.state.body.r.orthonormality_error())
        .fold(0.0, f64::max);

    let w0 = Vec3::new(1.0, 0.5, -0.8);
    let (_, w) = torque_free(p, w0, cfg.dt, steps);
    let e0 = kinetic_energy(p, &w0);
    let energy_drift = ((kinetic_energy(p, &w) - e0) / e0).abs();

    let w0 = Vec3::new(2.0, 1.0, -3.0);
    let error = |h: f64| {
        let n = (1.0 / h).round() as usize;
        let (r, w) = torque_free(p, w0, h, n);
        let (rr, wr) = torque_free(p, w0, h / 32.0, n * 32);
        (r.matrix() - rr.matrix()).norm() + (w - wr).norm()
    };
    let convergence_ratio = error(0.02) / error(0.01);

    let pi = std::f64::consts::PI;
    let (r, _) = torque_free(p, Vec3::x(), pi / 3000.0, 3000);
    let spin_error = (r.matrix() - exp_so3(&Vec3::new(pi, 0.0, 0.0)).matrix()).amax();

    Ok(IntegratorReport {
        orthonormality,
        energy_drift,
        convergence_ratio,
        spin_error,
    })
}

// ---------------------------------------------------------------- gain gate

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainGateReport {
    pub samples: usize,
    /// Gains with `ε ≥ eps_bound` that were wrongly accepted.
    pub wrongly_accepted: usize,
    /// Gains with `ε = 0.9 eps_bound` that were wrongly rejected.
    pub wrongly_rejected: usize,
}

impl GainGateReport {
    pub fn passed(&self) -> bool {
        self.wrongly_accepted == 0 && self.wrongly_rejected == 0
    }
}

/// Random `(k_R, k_ω) ∈ [0.1, 100]²` against the gain gate.
pub fn gain_gate_sweep(p: &HeliParams, n: usize) -> GainGateReport {
    let mut rng = rng();
    let mut report = GainGateReport {
        samples: n,
        wrongly_accepted: 0,
        wrongly_rejected: 0,
    };
    for _ in 0..n {
        let k_r = rng.random_range(0.1..100.0);
        let k_w = rng.random_range(0.1..100.0);
        let bound = eps_bound(k_r, k_w, &p.inertia_matrix(), DEFAULT_B1);
        for over in [1.0, 1.0 + rng.random_range(0.0..1.0)] {
            if Gains::new(k_r, k_w, over * bound, p, DEFAULT_B1).is_ok() {
                report.wrongly_accepted += 1;
            }
        }
        if Gains::new(k_r, k_w, 0.9 * bound, p, DEFAULT_B1).is_err() {
            report.wrongly_rejected += 1;
        }
    }
    report
}

/// Smallest `k_R` for which the rigid region-of-attraction inequality holds
/// at the initial condition of `cfg`.
pub fn roa_rigid_threshold(cfg: &SimConfig) -> f64 {
    let s0 = cfg.initial_state();
    let ref0 = cfg.reference.sample(0.0);
    let err = ErrorState::new(&s0.body.r, &s0.body.w, &ref0.rd, &ref0.wd);
    0.5 * cfg.params.inertia_max() * err.e_w.norm_squared() / (2.0 - err.psi)
}

// ------------------------------------------------------------------- suite

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn below(name: &'static str, value: f64, limit: f64) -> Check {
    check(name, value < limit, format!("{value:.3e} < {limit:.0e}"))
}

/// Runs every property check. `quick` shortens the sample counts and the
/// identity horizon.
pub fn run_suite(quick: bool) -> Vec<Check> {
    let mut out = Vec::new();
    let scale = |full: usize, q: usize| if quick { q } else { full };
    let scenario = SimConfig::roll_tracking();
    let p = scenario.params;
    let g = scenario.gains;

    out.push(check(
        "hat/vee round trip",
        hat_vee_roundtrip(scale(10_000, 1_000)) == 0.0,
        "exact".into(),
    ));
    out.push(below("conjugation identity", conjugation_error(scale(10_000, 1_000)), 1e-12));
    match sandwich_check(&p, &g, scenario.sublevel_margin, scale(1_000_000, 20_000)) {
        Ok(s) => out.push(check(
            "quadratic bounds sandwich",
            s.passed(),
            format!("{} samples, {} ψ / {} V1 violations", s.samples, s.psi_violations, s.v1_violations),
        )),
        Err(e) => out.push(check("quadratic bounds sandwich", false, e.to_string())),
    }

    let rates = rate_checks(&scenario, 3.0, scale(60, 15), 1e-5);
    out.push(below("psi rate", rates.psi_rate, 1e-4));
    out.push(below("e_R rate", rates.er_rate, 1e-4));
    out.push(below("M_d rate", rates.md_rate, 1e-4));

    let mut fine = scenario.clone();
    fine.dt = 1e-4;
    fine.duration = if quick { 0.5 } else { 2.0 };
    let ids = identity_residuals(&fine);
    out.push(below("rigid error dynamics", ids.rigid, 1e-3));
    out.push(below("fuselage error dynamics", ids.fuselage, 1e-3));
    out.push(below("rotor error dynamics", ids.rotor, 1e-3));
    match flap_residuals(&fine, 1.1) {
        Ok((nominal, wrong)) => {
            out.push(below("flap dynamics", nominal, 1e-3));
            out.push(check(
                "flap check detects stiffness error",
                wrong >= 10.0 * nominal,
                format!("{wrong:.3e} vs {nominal:.3e}"),
            ));
        }
        Err(e) => out.push(check("flap dynamics", false, e.to_string())),
    }

    match integrator_report(&scenario, if quick { 2.0 } else { 10.0 }) {
        Ok(r) => {
            out.push(below("orthonormality drift", r.orthonormality, 1e-9));
            out.push(below("energy drift", r.energy_drift, 1e-8));
            out.push(check(
                "fourth-order convergence",
                (12.0..=20.0).contains(&r.convergence_ratio),
                format!("ratio {:.2}", r.convergence_ratio),
            ));
            out.push(below("pure spin", r.spin_error, 1e-8));
        }
        Err(e) => out.push(check("integrator", false, e.to_string())),
    }

    let mut tracking = scenario.clone();
    if quick {
        tracking.duration = 3.0;
    }
    match run(&tracking) {
        Ok(trace) => {
            let t = tracking_report(&trace, 1.5);
            out.push(below("roll error after 1.5 s (deg)", t.max_roll_error_deg, 2.0));
            out.push(below("longitudinal flap (rad)", t.max_abs_a, 1e-9));
            match certificate_report(&trace, tracking.sublevel_margin) {
                Ok(c) => {
                    out.push(check(
                        "decay certificate",
                        c.decay.passed(),
                        format!("{} samples, {} violations", c.decay.checked, c.decay.violations.len()),
                    ));
                    out.push(check(
                        "bound matrices positive definite",
                        c.definiteness.iter().all(|(_, pd)| *pd),
                        format!("{:?}", c.definiteness),
                    ));
                    out.push(check(
                        "sublevel set forward invariant",
                        c.forward_invariant,
                        format!("max ψ {:.4}", c.max_psi_after_entry),
                    ));
                }
                Err(e) => out.push(check("decay certificate", false, e.to_string())),
            }
        }
        Err(e) => out.push(check("roll tracking", false, e.to_string())),
    }

    match run(&SimConfig::regulation()).and_then(|t| psi_fit(&t, &FitOptions::default())) {
        Ok(fit) => out.push(check(
            "exponential envelope",
            fit.passed(),
            format!("β {:.3}, envelope ratio {:.4}", fit.beta, fit.max_envelope_ratio),
        )),
        Err(e) => out.push(check("exponential envelope", false, e.to_string())),
    }

    let gate = gain_gate_sweep(&p, scale(1_000, 100));
    out.push(check(
        "gain gate",
        gate.passed(),
        format!(
            "{} samples, {} accepted above bound, {} rejected at 0.9",
            gate.samples, gate.wrongly_accepted, gate.wrongly_rejected
        ),
    ));
    out
}
