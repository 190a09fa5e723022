use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heligeo::controller::{eps_bound, roa_full_margin, roa_rigid_margin, DEFAULT_B1};
use heligeo::lyapunov::bound_matrices;
use heligeo::sim::{emit_csv, run, sweep, ConfigFile, ControlLaw, SimConfig, Trace};
use heligeo::verify::run_suite;
use heligeo::Error;

const OK: u8 = 0;
const VERIFY_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "heligeo", version, about = "Geometric backstepping attitude control for a small helicopter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario and write its trace as CSV.
    Sim {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides `sim.output`. Stdout if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Hold the controller output at this rate instead of evaluating it continuously.
        #[arg(long, value_name = "HZ")]
        zoh: Option<f64>,
        /// Replace backstepping with the static inversion u = A M_d.
        #[arg(long)]
        naive: bool,
    },
    /// Check the configured gains against the gain bound and the bound matrices.
    GainsCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the property suite.
    Verify {
        /// Smaller sample counts and shorter horizons.
        #[arg(long)]
        quick: bool,
    },
    /// Run one scenario per value of a config key, concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Directory for the per-value CSV files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Sim {
            config,
            out,
            dt,
            duration,
            zoh,
            naive,
        } => sim(&config, out, dt, duration, zoh, naive),
        Command::GainsCheck { config } => gains_check(&config),
        Command::Verify { quick } => verify(quick),
        Command::Sweep {
            config,
            key,
            values,
            out_dir,
        } => sweep_cmd(&config, &key, &values, &out_dir),
    };
    ExitCode::from(code)
}

fn config_error(e: &Error) -> u8 {
    eprintln!("error: {e}");
    CONFIG_ERROR
}

fn warn_about(trace: &Trace) {
    if !trace.roa_full() {
        eprintln!(
            "warning: initial condition is outside the certified region ({:.3} >= {:.3}); running anyway",
            trace.roa.lhs, trace.roa.rhs
        );
    }
    if trace.servo_limit_hits > 0 {
        eprintln!("warning: servo limit exceeded in {} recorded samples", trace.servo_limit_hits);
    }
    if trace.flap_envelope_hits > 0 {
        eprintln!(
            "warning: flap angle outside the small-angle envelope in {} recorded samples",
            trace.flap_envelope_hits
        );
    }
}

fn write_trace(trace: &Trace, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => emit_csv(trace, path),
        None => trace.write_csv(std::io::stdout().lock()),
    }
}

fn sim(config: &Path, out: Option<PathBuf>, dt: Option<f64>, duration: Option<f64>, zoh: Option<f64>, naive: bool) -> u8 {
    let mut file = match ConfigFile::load(config) {
        Ok(f) => f,
        Err(e) => return config_error(&e),
    };
    if let Some(dt) = dt {
        file.set("sim.dt", dt);
    }
    if let Some(duration) = duration {
        file.set("sim.duration", duration);
    }
    if let Some(hz) = zoh {
        file.set("sim.mode", "zoh");
        file.set("sim.zoh_hz", hz);
    }
    let mut cfg = match file.build() {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    if naive {
        cfg.law = ControlLaw::Naive;
    }
    let out = out.or_else(|| cfg.output.clone());
    match run(&cfg) {
        Ok(trace) => {
            warn_about(&trace);
            if let Err(e) = write_trace(&trace, out.as_deref()) {
                eprintln!("error: {e}");
                return CONFIG_ERROR;
            }
            OK
        }
        Err(Error::Diverged { t, reason, partial }) => {
            eprintln!("error: diverged at t = {t:.4} s: {reason}");
            if let Err(e) = write_trace(&partial, out.as_deref()) {
                eprintln!("error: {e}");
            }
            DIVERGED
        }
        Err(e) => config_error(&e),
    }
}

fn gains_check(config: &Path) -> u8 {
    let cfg = match SimConfig::load(config) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    if let Err(e) = cfg.params.validate() {
        return config_error(&e);
    }
    let qb = match cfg.quadratic_bounds() {
        Ok(q) => q,
        Err(e) => return config_error(&e),
    };
    let (p, g) = (&cfg.params, &cfg.gains);
    let bound = eps_bound(g.k_r, g.k_w, &p.inertia_matrix(), DEFAULT_B1);
    println!("k_R = {}, k_w = {}, eps = {}", g.k_r, g.k_w, g.eps);
    println!("eps_bound = {bound}");
    let gate = g.validate(p, DEFAULT_B1);
    match &gate {
        Ok(()) => println!("gain gate: ok (eps = {:.3} eps_bound)", g.eps / bound),
        Err(e) => println!("gain gate: REJECTED ({e})"),
    }
    let bounds = bound_matrices(g, p, qb.b1, qb.b2);
    for (name, pd) in bounds.definiteness() {
        println!("{name}: {}", if pd { "positive definite" } else { "NOT positive definite" });
    }
    let s0 = cfg.initial_state();
    let ref0 = cfg.reference_at(0.0);
    let full = roa_full_margin(g, p, &s0, &ref0);
    let rigid = roa_rigid_margin(g, p, &s0.body, &ref0);
    println!("roa_rigid: {} (lhs {:.4}, needs < {:.4})", rigid.holds(), rigid.lhs, rigid.rhs);
    println!("roa_full: {} (lhs {:.4}, needs < {:.4})", full.holds(), full.lhs, full.rhs);
    if gate.is_ok() && bounds.all_positive_definite() {
        OK
    } else {
        VERIFY_FAILED
    }
}

fn verify(quick: bool) -> u8 {
    let checks = run_suite(quick);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        OK
    } else {
        VERIFY_FAILED
    }
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn sweep_cmd(config: &Path, key: &str, values: &[String], out_dir: &Path) -> u8 {
    let file = match ConfigFile::load(config) {
        Ok(f) => f,
        Err(e) => return config_error(&e),
    };
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let mut code = OK;
    for (value, result) in sweep(&file, key, values) {
        let path = out_dir.join(format!("{stem}_{}_{}.csv", sanitize(key), sanitize(&value)));
        let trace = match result {
            Ok(trace) => {
                warn_about(&trace);
                trace
            }
            Err(Error::Diverged { t, reason, partial }) => {
                eprintln!("{key} = {value}: diverged at t = {t:.4} s: {reason}");
                code = code.max(DIVERGED);
                *partial
            }
            Err(e) => {
                eprintln!("{key} = {value}: {e}");
                code = code.max(CONFIG_ERROR);
                continue;
            }
        };
        match emit_csv(&trace, &path) {
            Ok(()) => println!("{key} = {value}: {} rows -> {}", trace.len(), path.display()),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = code.max(CONFIG_ERROR);
            }
        }
    }
    code
}
