use heligeo::controller::CtrlDebug;
use heligeo::lyapunov::check_decay;
use heligeo::model::FullState;
use heligeo::reference::RefSample;
use heligeo::sim::{configured_control, run, run_with_law, AccelFeedback, ControlLaw, ControllerMode, SimConfig, Trace};
use heligeo::so3::Vec3;
use heligeo::verify::{flap_residuals, identity_residuals, rate_checks, tracking_report};
use heligeo::Error;

fn fine(duration: f64) -> SimConfig {
    let mut cfg = SimConfig::roll_tracking();
    cfg.dt = 1e-4;
    cfg.duration = duration;
    cfg
}

#[test]
fn error_dynamics_identities_hold() {
    let ids = identity_residuals(&fine(1.0));
    assert!(ids.rigid < 1e-3, "{ids:?}");
    assert!(ids.fuselage < 1e-3, "{ids:?}");
    assert!(ids.rotor < 1e-3, "{ids:?}");
}

#[test]
fn identities_hold_off_axis_with_second_order_residuals() {
    let at = |dt: f64| {
        let mut cfg = SimConfig::parse(
            "ref.kind = smooth_step\nref.axis = 0.3, 1, -0.2\nref.target_deg = 40\nref.rise_time = 1\n\
             initial.attitude_deg = 20, -60, 35\ninitial.rate_dps = 30, -10, 45\ninitial.moment = 1, -2, 0.5\n",
        )
        .unwrap();
        cfg.dt = dt;
        cfg.duration = 1.0;
        cfg
    };
    let coarse = identity_residuals(&at(1e-4));
    let fine = identity_residuals(&at(5e-5));
    // The fast initial rotor transient dominates; what remains is the
    // central-difference truncation, which must shrink fourfold.
    for (c, f) in [(coarse.rigid, fine.rigid), (coarse.fuselage, fine.fuselage), (coarse.rotor, fine.rotor)] {
        assert!(f < 1e-3, "{fine:?}");
        assert!((3.0..5.0).contains(&(c / f)), "{coarse:?} vs {fine:?}");
    }
    let rates = rate_checks(&at(1e-3), 1.0, 20, 1e-5);
    assert!(rates.md_rate < 1e-4 && rates.psi_rate < 1e-4 && rates.er_rate < 1e-4, "{rates:?}");
}

#[test]
fn desired_moment_rate_matches_finite_difference() {
    let rates = rate_checks(&SimConfig::roll_tracking(), 3.0, 40, 1e-5);
    assert!(rates.md_rate < 1e-4, "{rates:?}");
}

#[test]
fn flap_coordinates_reproduce_moment_model() {
    let (nominal, wrong) = flap_residuals(&fine(1.0), 1.1).unwrap();
    assert!(nominal < 1e-3, "{nominal}");
    assert!(wrong >= 10.0 * nominal, "{wrong} vs {nominal}");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let mut cfg = SimConfig::roll_tracking();
    cfg.duration = 2.0;
    cfg.emit_certificates = true;
    let a = run(&cfg).unwrap().to_csv_string();
    let b = run(&cfg).unwrap().to_csv_string();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2002);
    assert!(a.lines().all(|l| l.split(',').count() == 27));
}

#[test]
fn zero_order_hold_at_250_hz_tracks() {
    let mut cfg = SimConfig::roll_tracking();
    cfg.mode = ControllerMode::ZeroOrderHold { rate_hz: 250.0 };
    let trace = run(&cfg).unwrap();
    let report = tracking_report(&trace, 1.5);
    assert!(report.max_roll_error_deg < 4.0, "{report:?}");
}

#[test]
fn filtered_acceleration_still_tracks() {
    let mut cfg = SimConfig::roll_tracking();
    cfg.accel_feedback = AccelFeedback::Filtered { cutoff_hz: 50.0 };
    let trace = run(&cfg).unwrap();
    let report = tracking_report(&trace, 2.0);
    assert!(report.max_roll_error_deg < 4.0, "{report:?}");
}

#[test]
fn naive_inversion_leaves_a_rotor_lag() {
    let mut cfg = SimConfig::roll_tracking();
    cfg.duration = 6.0;
    let lag = |trace: &Trace| {
        trace
            .samples
            .iter()
            .filter(|s| s.state.t > 4.0)
            .map(|s| s.ctrl.e_m.norm())
            .fold(0.0, f64::max)
    };
    let backstepping = lag(&run(&cfg).unwrap());
    cfg.law = ControlLaw::Naive;
    let naive = lag(&run(&cfg).unwrap());
    assert!(backstepping < 1e-3, "{backstepping}");
    assert!(naive > 100.0 * backstepping, "{naive} vs {backstepping}");
}

fn flipped(cfg: &SimConfig, s: &FullState, r: &RefSample, w_dot: &Vec3) -> CtrlDebug {
    let mut c = configured_control(cfg, s, r, w_dot);
    c.u = -c.u;
    c
}

#[test]
fn sign_flipped_input_violates_decay() {
    let mut cfg = SimConfig::roll_tracking();
    cfg.duration = 0.5;
    let trace: Trace = match run_with_law(&cfg, &flipped) {
        Ok(t) => t,
        Err(Error::Diverged { partial, .. }) => *partial,
        Err(e) => panic!("{e}"),
    };
    let report = check_decay(&trace.certificates()).unwrap();
    assert!(!report.violations.is_empty());
}

#[test]
fn servo_limit_is_flagged_and_optionally_clamped() {
    let mut cfg = SimConfig::parse("params.servo_limit_deg = 2\nsim.duration = 2").unwrap();
    let flagged = run(&cfg).unwrap();
    assert!(flagged.servo_limit_hits > 0);
    cfg.params.servo_clamp = true;
    let clamped = run(&cfg).unwrap();
    let limit = 2f64.to_radians();
    assert!(clamped.samples.iter().all(|s| s.servo.max_abs() <= limit + 1e-15));
    assert_ne!(flagged.samples.last(), clamped.samples.last());
}
