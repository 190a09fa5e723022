//! One line per acceptance criterion, then a single assertion over all of
//! them so every line is printed even when one fails.

use heligeo::lyapunov::FitOptions;
use heligeo::sim::SimConfig;
use heligeo::verify::*;

struct Line {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn scenario_reproduction() -> Line {
    let cfg = SimConfig::roll_tracking();
    let (trace, secs) = timed_run(&cfg).unwrap();
    let r = tracking_report(&trace, 1.5);
    Line {
        id: 1,
        name: "roll tracking error < 2 deg after 1.5 s, 10 s rollout < 5 s",
        passed: r.max_roll_error_deg < 2.0 && secs < 5.0 && trace.times().last() == Some(&10.0),
        detail: format!("error {:.4} deg, runtime {secs:.3} s", r.max_roll_error_deg),
    }
}

fn flap_amplitude() -> Line {
    let trace = heligeo::sim::run(&SimConfig::roll_tracking()).unwrap();
    let r = tracking_report(&trace, 5.0);
    Line {
        id: 2,
        name: "steady |b| in [0.4, 2.0] deg, |a| < 1e-9 rad",
        passed: (0.4..=2.0).contains(&r.steady_b_deg) && r.max_abs_a < 1e-9,
        detail: format!("steady |b| {:.4} deg, max |a| {:.1e} rad", r.steady_b_deg, r.max_abs_a),
    }
}

fn certificates() -> Line {
    let cfg = SimConfig::roll_tracking();
    let trace = heligeo::sim::run(&cfg).unwrap();
    let c = certificate_report(&trace, cfg.sublevel_margin).unwrap();
    Line {
        id: 3,
        name: "decay certificate, PD bound matrices, forward invariance",
        passed: c.decay.violations.is_empty()
            && c.decay.checked > 0
            && c.definiteness.iter().all(|(_, pd)| *pd)
            && c.forward_invariant,
        detail: format!(
            "{} samples, {} violations, {:?}, max psi {:.4}",
            c.decay.checked,
            c.decay.violations.len(),
            c.definiteness,
            c.max_psi_after_entry
        ),
    }
}

fn identities() -> Line {
    let mut cfg = SimConfig::roll_tracking();
    cfg.dt = 1e-4;
    cfg.duration = 2.0;
    let ids = identity_residuals(&cfg);
    let rates = rate_checks(&SimConfig::roll_tracking(), 3.0, 60, 1e-5);
    Line {
        id: 4,
        name: "closed-loop error dynamics < 1e-3, M_d rate relative error < 1e-4",
        passed: ids.rigid < 1e-3 && ids.fuselage < 1e-3 && ids.rotor < 1e-3 && rates.md_rate < 1e-4,
        detail: format!(
            "rigid {:.2e}, fuselage {:.2e}, rotor {:.2e}, M_d rate {:.2e}",
            ids.rigid, ids.fuselage, ids.rotor, rates.md_rate
        ),
    }
}

fn geometry() -> Line {
    let cfg = SimConfig::roll_tracking();
    let roundtrip = hat_vee_roundtrip(10_000);
    let conj = conjugation_error(10_000);
    let mut fd = cfg.clone();
    fd.dt = 1e-5;
    let rates = rate_checks(&fd, 3.0, 60, 1e-5);
    let sandwich = sandwich_check(&cfg.params, &cfg.gains, cfg.sublevel_margin, 1_000_000).unwrap();
    Line {
        id: 5,
        name: "hat/vee exact, conjugation 1e-12, psi/e_R rates 1e-4, 1e6-sample sandwich",
        passed: roundtrip == 0.0
            && conj < 1e-12
            && rates.psi_rate < 1e-4
            && rates.er_rate < 1e-4
            && sandwich.samples == 1_000_000
            && sandwich.passed(),
        detail: format!(
            "round trip {roundtrip:e}, conjugation {conj:.1e}, psi rate {:.1e}, e_R rate {:.1e}, sandwich {}/{}",
            rates.psi_rate,
            rates.er_rate,
            sandwich.psi_violations,
            sandwich.v1_violations
        ),
    }
}

fn integrator() -> Line {
    let r = integrator_report(&SimConfig::roll_tracking(), 10.0).unwrap();
    Line {
        id: 6,
        name: "orthonormality < 1e-9, energy drift < 1e-8, convergence ratio 16 +/- 4",
        passed: r.orthonormality < 1e-9
            && r.energy_drift < 1e-8
            && (12.0..=20.0).contains(&r.convergence_ratio)
            && r.spin_error < 1e-8,
        detail: format!(
            "orthonormality {:.1e}, energy {:.1e}, ratio {:.2}, spin {:.1e}",
            r.orthonormality, r.energy_drift, r.convergence_ratio, r.spin_error
        ),
    }
}

fn exponential_witness() -> Line {
    let trace = heligeo::sim::run(&SimConfig::regulation()).unwrap();
    let opts = FitOptions {
        envelope_tol: 0.05,
        ..FitOptions::default()
    };
    let fit = psi_fit(&trace, &opts).unwrap();
    Line {
        id: 7,
        name: "regulation fit beta > 0, psi <= min(2, alpha exp(-beta t)) * 1.05",
        passed: fit.beta > 0.0 && fit.max_envelope_ratio <= 1.05,
        detail: format!(
            "alpha {:.3}, beta {:.4}, envelope ratio {:.4}",
            fit.alpha, fit.beta, fit.max_envelope_ratio
        ),
    }
}

fn gain_gate() -> Line {
    let cfg = SimConfig::roll_tracking();
    let gate = gain_gate_sweep(&cfg.params, 1_000);
    let threshold = roa_rigid_threshold(&cfg);
    Line {
        id: 8,
        name: "gain gate over random (k_R, k_w), ROA threshold k_R ~ 2.13",
        passed: gate.passed() && (threshold - 2.13).abs() < 5e-3,
        detail: format!(
            "{} samples, {} wrongly accepted, {} wrongly rejected, threshold {threshold:.4}",
            gate.samples, gate.wrongly_accepted, gate.wrongly_rejected
        ),
    }
}

#[test]
fn acceptance() {
    let lines = [
        scenario_reproduction(),
        flap_amplitude(),
        certificates(),
        identities(),
        geometry(),
        integrator(),
        exponential_witness(),
        gain_gate(),
    ];
    for l in &lines {
        println!(
            "criterion {}: {} - {} ({})",
            l.id,
            if l.passed { "PASS" } else { "FAIL" },
            l.name,
            l.detail
        );
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
