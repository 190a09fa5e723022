//! Lyapunov certificates for the closed loop.
//!
//! With `z₁ = [‖e_ω‖, ‖e_R‖]` and `z = [‖e_ω‖, ‖e_R‖, ‖e_M‖]`:
//!
//! * `V₁ = ½ e_ω·J e_ω + k_R ψ + ε e_R·e_ω` satisfies `z₁ᵀM₁z₁ ≤ V₁ ≤ z₁ᵀM₂z₁`
//!   inside the sublevel set and `V̇₁ ≤ −z₁ᵀW₁z₁` for the rigid body,
//! * `V = V₁ + ½‖e_M‖²` satisfies `V̇ ≤ −zᵀWz` for the rotor-fuselage loop.
//!
//! The functions here evaluate those quantities along simulated traces, so
//! that the inequalities can be checked numerically rather than assumed.

mod eig;

use nalgebra::Matrix2;

pub use eig::{eig_sym, eig_sym2, is_positive_definite2, is_positive_definite3, SYMMETRY_TOL};

use crate::controller::{desired_moment, Gains};
use crate::error::{Error, Result};
use crate::model::{rotor_matrix, BodyState, FullState, HeliParams};
use crate::reference::RefSample;
use crate::so3::{ErrorState, Mat3};

/// `½ e_ω·J e_ω + k_R ψ + ε e_R·e_ω`.
pub fn lyap_v1(g: &Gains, p: &HeliParams, s: &BodyState, reference: &RefSample) -> f64 {
    let err = ErrorState::new(&s.r, &s.w, &reference.rd, &reference.wd);
    v1_from_errors(g, p, &err)
}

fn v1_from_errors(g: &Gains, p: &HeliParams, err: &ErrorState) -> f64 {
    0.5 * err.e_w.dot(&err.e_w.component_mul(&p.inertia)) + g.k_r * err.psi + g.eps * err.e_r.dot(&err.e_w)
}

/// `V₁ + ½ ‖M − M_d‖²`.
pub fn lyap_v(g: &Gains, p: &HeliParams, s: &FullState, reference: &RefSample) -> f64 {
    let e_m = s.rotor.m - desired_moment(g, p, &s.body, reference);
    lyap_v1(g, p, &s.body, reference) + 0.5 * e_m.norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundMatrices {
    pub m1: Matrix2<f64>,
    pub m2: Matrix2<f64>,
    pub w1: Matrix2<f64>,
    pub w: Mat3,
}

impl BoundMatrices {
    /// Positive definiteness of `(M₁, M₂, W₁, W)` in that order.
    pub fn definiteness(&self) -> [(&'static str, bool); 4] {
        [
            ("M1", is_positive_definite2(&self.m1)),
            ("M2", is_positive_definite2(&self.m2)),
            ("W1", is_positive_definite2(&self.w1)),
            ("W", is_positive_definite3(&self.w)),
        ]
    }

    pub fn all_positive_definite(&self) -> bool {
        self.definiteness().iter().all(|(_, pd)| *pd)
    }
}

fn inertia_extremes(p: &HeliParams) -> (f64, f64) {
    let ev = eig_sym(&p.inertia_matrix()).expect("diagonal inertia is symmetric");
    (ev[0], ev[2])
}

fn rigid_decay_matrix(g: &Gains, p: &HeliParams) -> Matrix2<f64> {
    let (jmin, jmax) = inertia_extremes(p);
    let coupling = -g.eps * g.k_w / (2.0 * jmin);
    Matrix2::new(g.k_w - g.eps, coupling, coupling, g.eps * g.k_r / jmax)
}

/// `W`: the rigid-body block `W₁` bordered by `λ_min(A)`.
pub fn decay_matrix(g: &Gains, p: &HeliParams) -> Mat3 {
    let a_min = eig_sym(&rotor_matrix(p)).expect("diagonal rotor matrix is symmetric")[0];
    let mut w = Mat3::zeros();
    w.fixed_view_mut::<2, 2>(0, 0).copy_from(&rigid_decay_matrix(g, p));
    w[(2, 2)] = a_min;
    w
}

pub fn bound_matrices(g: &Gains, p: &HeliParams, b1: f64, b2: f64) -> BoundMatrices {
    let (jmin, jmax) = inertia_extremes(p);
    let half_eps = 0.5 * g.eps;
    BoundMatrices {
        m1: Matrix2::new(0.5 * jmin, -half_eps, -half_eps, g.k_r * b1),
        m2: Matrix2::new(0.5 * jmax, half_eps, half_eps, g.k_r * b2),
        w1: rigid_decay_matrix(g, p),
        w: decay_matrix(g, p),
    }
}

fn quad2(m: &Matrix2<f64>, a: f64, b: f64) -> f64 {
    m[(0, 0)] * a * a + 2.0 * m[(0, 1)] * a * b + m[(1, 1)] * b * b
}

/// `z₁ᵀM₁z₁` and `z₁ᵀM₂z₁` for the given errors.
pub fn v1_sandwich(bounds: &BoundMatrices, err: &ErrorState) -> (f64, f64) {
    let (a, b) = (err.e_w.norm(), err.e_r.norm());
    (quad2(&bounds.m1, a, b), quad2(&bounds.m2, a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateSample {
    pub t: f64,
    pub v1: f64,
    pub v: f64,
    /// Finite-difference `dV/dt` (filled by [`certificate_trace`]).
    pub v_dot: f64,
    /// `zᵀWz`.
    pub zwz: f64,
    pub psi: f64,
    pub in_sublevel: bool,
}

impl CertificateSample {
    pub fn evaluate(g: &Gains, p: &HeliParams, w: &Mat3, s: &FullState, reference: &RefSample) -> Self {
        let err = ErrorState::new(&s.body.r, &s.body.w, &reference.rd, &reference.wd);
        let e_m = s.rotor.m - desired_moment(g, p, &s.body, reference);
        let v1 = v1_from_errors(g, p, &err);
        let z = nalgebra::Vector3::new(err.e_w.norm(), err.e_r.norm(), e_m.norm());
        CertificateSample {
            t: s.t,
            v1,
            v: v1 + 0.5 * e_m.norm_squared(),
            v_dot: 0.0,
            zwz: z.dot(&(w * z)),
            psi: err.psi,
            in_sublevel: err.in_sublevel(),
        }
    }
}

/// Evaluates certificate samples along a state history and fills `v_dot` by
/// central differences (second-order one-sided at the ends).
pub fn certificate_trace<'a, I>(g: &Gains, p: &HeliParams, history: I) -> Vec<CertificateSample>
where
    I: IntoIterator<Item = (&'a FullState, &'a RefSample)>,
{
    let w = decay_matrix(g, p);
    let mut out: Vec<CertificateSample> = history
        .into_iter()
        .map(|(s, r)| CertificateSample::evaluate(g, p, &w, s, r))
        .collect();
    fill_v_dot(&mut out);
    out
}

fn fill_v_dot(trace: &mut [CertificateSample]) {
    let n = trace.len();
    if n < 3 {
        return;
    }
    let v: Vec<f64> = trace.iter().map(|c| c.v).collect();
    let t: Vec<f64> = trace.iter().map(|c| c.t).collect();
    for i in 1..n - 1 {
        trace[i].v_dot = (v[i + 1] - v[i - 1]) / (t[i + 1] - t[i - 1]);
    }
    trace[0].v_dot = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (t[2] - t[0]);
    trace[n - 1].v_dot = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (t[n - 1] - t[n - 3]);
}

/// Relative slack applied to the decay inequality: `1e-3 · (1 + |V̇|)`.
pub const DECAY_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayViolation {
    pub t: f64,
    pub v_dot: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayReport {
    pub checked: usize,
    /// Largest `V̇ + zᵀWz − slack` seen (negative when every sample passes).
    pub worst_excess: f64,
    pub violations: Vec<DecayViolation>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `V̇ ≤ −zᵀWz + slack` at every in-sublevel sample.
pub fn check_decay(trace: &[CertificateSample]) -> Result<DecayReport> {
    if trace.len() < 3 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: 3,
        });
    }
    let mut report = DecayReport {
        worst_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    for c in trace.iter().filter(|c| c.in_sublevel) {
        report.checked += 1;
        let slack = DECAY_SLACK * (1.0 + c.v_dot.abs());
        let excess = c.v_dot + c.zwz - slack;
        report.worst_excess = report.worst_excess.max(excess);
        if !(excess <= 0.0) {
            report.violations.push(DecayViolation {
                t: c.t,
                v_dot: c.v_dot,
                bound: -c.zwz,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// The fit window opens once `ψ` first drops below this value.
    pub window_start_psi: f64,
    /// Samples with `ψ` at or below this level are treated as rounding noise.
    pub noise_floor: f64,
    /// Relative tolerance on the envelope check.
    pub envelope_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window_start_psi: 0.5,
            noise_floor: 1e-10,
            envelope_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    /// Envelope amplitude: the least-squares amplitude raised, if needed, to
    /// cover every sample in the fit window.
    pub alpha: f64,
    /// Amplitude from the least-squares line alone.
    pub alpha_ls: f64,
    pub beta: f64,
    pub window: (f64, f64),
    /// Largest `ψ / min{2, α e^{−βt}}` over all samples above the noise floor.
    pub max_envelope_ratio: f64,
    pub tolerance: f64,
}

impl ExpFit {
    pub fn envelope_holds(&self) -> bool {
        self.max_envelope_ratio <= 1.0 + self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.beta > 0.0 && self.envelope_holds()
    }
}

/// Fits `ψ(t) ≈ α e^{−βt}` by least squares on `log ψ` over the
/// post-transient window, then checks `ψ(t) ≤ min{2, α e^{−βt}}·(1 + tol)`.
pub fn fit_exponential(times: &[f64], psi: &[f64], opts: &FitOptions) -> Result<ExpFit> {
    if times.len() != psi.len() {
        return Err(Error::NoFitWindow("time and psi series differ in length".into()));
    }
    let start = psi
        .iter()
        .position(|&v| v < opts.window_start_psi)
        .ok_or_else(|| Error::NoFitWindow(format!("psi never drops below {}", opts.window_start_psi)))?;
    let end = psi
        .iter()
        .rposition(|&v| v > opts.noise_floor)
        .filter(|&e| e > start)
        .ok_or_else(|| Error::NoFitWindow("fit window is empty above the noise floor".into()))?;
    let window = start..=end;
    let n = (end - start + 1) as f64;
    let logs: Vec<f64> = psi[window.clone()].iter().map(|v| v.max(1e-16).ln()).collect();
    let ts = &times[window.clone()];
    let t_mean = ts.iter().sum::<f64>() / n;
    let l_mean = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, l) in ts.iter().zip(&logs) {
        sxy += (t - t_mean) * (l - l_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    if !(sxx > 0.0) {
        return Err(Error::NoFitWindow("fit window spans no time".into()));
    }
    let slope = sxy / sxx;
    let beta = -slope;
    let alpha_ls = (l_mean - slope * t_mean).exp();
    let alpha = ts
        .iter()
        .zip(&psi[window])
        .map(|(t, v)| v * (beta * t).exp())
        .fold(alpha_ls, f64::max);
    let max_envelope_ratio = times
        .iter()
        .zip(psi)
        .filter(|(_, v)| **v > opts.noise_floor)
        .map(|(t, v)| v / 2f64.min(alpha * (-beta * t).exp()))
        .fold(0.0, f64::max);
    Ok(ExpFit {
        alpha,
        alpha_ls,
        beta,
        window: (times[start], times[end]),
        max_envelope_ratio,
        tolerance: opts.envelope_tol,
    })
}
