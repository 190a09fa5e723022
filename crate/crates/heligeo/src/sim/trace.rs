//! Recorded rollouts and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::controller::{CtrlDebug, Gains, RoaMargin};
use crate::error::Result;
use crate::lyapunov::{certificate_trace, lyap_v, lyap_v1, CertificateSample};
use crate::model::{flap_from_moment, FlapSample, FullState, HeliParams, ServoCmd};
use crate::reference::RefSample;
use crate::so3::ErrorState;

/// One recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: FullState,
    pub reference: RefSample,
    /// Controller quantities evaluated at `state`.
    pub ctrl: CtrlDebug,
    /// Servo command actually applied (held value under ZOH, clamped if
    /// clamping is on).
    pub servo: ServoCmd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub params: HeliParams,
    pub gains: Gains,
    pub samples: Vec<Sample>,
    /// Region-of-attraction inequality at `t = 0`.
    pub roa: RoaMargin,
    /// Recorded samples whose applied servo command exceeded the limit.
    pub servo_limit_hits: usize,
    /// Recorded samples with a flap angle outside the small-angle envelope.
    pub flap_envelope_hits: usize,
    pub emit_certificates: bool,
}

impl Trace {
    pub fn new(params: HeliParams, gains: Gains, roa: RoaMargin, emit_certificates: bool) -> Self {
        Trace {
            params,
            gains,
            samples: Vec::new(),
            roa,
            servo_limit_hits: 0,
            flap_envelope_hits: 0,
            emit_certificates,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn roa_full(&self) -> bool {
        self.roa.holds()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        self.samples.iter().map(|s| TraceRow::new(&self.params, &self.gains, s))
    }

    pub fn flap_samples(&self) -> Vec<FlapSample> {
        self.samples
            .iter()
            .map(|s| FlapSample {
                t: s.state.t,
                w: s.state.body.w,
                m: s.state.rotor.m,
                servo: s.servo,
            })
            .collect()
    }

    /// Certificate samples with finite-difference `V̇`.
    pub fn certificates(&self) -> Vec<CertificateSample> {
        certificate_trace(
            &self.gains,
            &self.params,
            self.samples.iter().map(|s| (&s.state, &s.reference)),
        )
    }

    pub(crate) fn push(&mut self, sample: Sample) {
        if let Some(limit) = self.params.servo_limit {
            if sample.servo.exceeds(limit) {
                self.servo_limit_hits += 1;
            }
        }
        if !flap_from_moment(&self.params, &sample.state.rotor.m).within_envelope() {
            self.flap_envelope_hits += 1;
        }
        self.samples.push(sample);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = BASE_COLUMNS.join(",");
        if self.emit_certificates {
            header.push(',');
            header.push_str(&CERTIFICATE_COLUMNS.join(","));
        }
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for row in self.rows() {
            line.clear();
            for (i, v) in row.base().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format_sig9(*v));
            }
            if self.emit_certificates {
                line.push(',');
                line.push_str(&format_sig9(row.v1));
                line.push(',');
                line.push_str(&format_sig9(row.v));
                line.push_str(if row.in_sublevel { ",1" } else { ",0" });
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Writes `trace` to `path`.
pub fn emit_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

pub const BASE_COLUMNS: [&str; 24] = [
    "t",
    "roll_deg",
    "pitch_deg",
    "yaw_deg",
    "wx_dps",
    "wy_dps",
    "wz_dps",
    "Mx",
    "My",
    "Mz",
    "Md_x",
    "Md_y",
    "Md_z",
    "eM_x",
    "eM_y",
    "eM_z",
    "flap_a_deg",
    "flap_b_deg",
    "servo_a_deg",
    "servo_b_deg",
    "servo_t_deg",
    "psi",
    "eR_norm",
    "ew_norm",
];

/// Appended when certificates are requested.
pub const CERTIFICATE_COLUMNS: [&str; 3] = ["V1", "V", "in_sublevel"];

/// One CSV row in reporting units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub w_dps: [f64; 3],
    pub m: [f64; 3],
    pub m_d: [f64; 3],
    pub e_m: [f64; 3],
    pub flap_a_deg: f64,
    pub flap_b_deg: f64,
    pub servo_deg: [f64; 3],
    pub psi: f64,
    pub e_r_norm: f64,
    pub e_w_norm: f64,
    pub v1: f64,
    pub v: f64,
    pub in_sublevel: bool,
}

impl TraceRow {
    pub fn new(p: &HeliParams, g: &Gains, s: &Sample) -> Self {
        let st = &s.state;
        let (roll, pitch, yaw) = st.body.r.euler_zyx();
        let err = ErrorState::new(&st.body.r, &st.body.w, &s.reference.rd, &s.reference.wd);
        let flap = flap_from_moment(p, &st.rotor.m);
        let arr = |v: &crate::so3::Vec3| [v.x, v.y, v.z];
        TraceRow {
            t: st.t,
            roll_deg: roll.to_degrees(),
            pitch_deg: pitch.to_degrees(),
            yaw_deg: yaw.to_degrees(),
            w_dps: arr(&st.body.w.map(f64::to_degrees)),
            m: arr(&st.rotor.m),
            m_d: arr(&s.ctrl.m_d),
            e_m: arr(&s.ctrl.e_m),
            flap_a_deg: flap.a.to_degrees(),
            flap_b_deg: flap.b.to_degrees(),
            servo_deg: [
                s.servo.theta_a.to_degrees(),
                s.servo.theta_b.to_degrees(),
                s.servo.theta_t.to_degrees(),
            ],
            psi: err.psi,
            e_r_norm: err.e_r.norm(),
            e_w_norm: err.e_w.norm(),
            v1: lyap_v1(g, p, &st.body, &s.reference),
            v: lyap_v(g, p, st, &s.reference),
            in_sublevel: err.in_sublevel(),
        }
    }

    /// The 24 base columns in header order.
    pub fn base(&self) -> [f64; 24] {
        let [wx, wy, wz] = self.w_dps;
        let [mx, my, mz] = self.m;
        let [dx, dy, dz] = self.m_d;
        let [ex, ey, ez] = self.e_m;
        let [sa, sb, st] = self.servo_deg;
        [
            self.t,
            self.roll_deg,
            self.pitch_deg,
            self.yaw_deg,
            wx,
            wy,
            wz,
            mx,
            my,
            mz,
            dx,
            dy,
            dz,
            ex,
            ey,
            ez,
            self.flap_a_deg,
            self.flap_b_deg,
            sa,
            sb,
            st,
            self.psi,
            self.e_r_norm,
            self.e_w_norm,
        ]
    }
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros
/// dropped, exponent form outside `[1e-4, 1e9)`.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
