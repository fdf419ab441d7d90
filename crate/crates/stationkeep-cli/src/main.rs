//! Batch front end: `simulate` runs one scenario and exports run.csv and
//! summary.json, `certify` evaluates the stability certificates, `sweep`
//! re-runs a scenario over a list of parameter values.
//!
//! Exit codes: 0 success, 1 configuration error, 2 divergence during
//! integration, 3 a hard certificate gate failed.

use clap::{Parser, Subcommand};
use stationkeep::certificates::Certificate;
use stationkeep::export::{summary_json, write_run_csv, write_sweep_csv};
use stationkeep::regulator::RegulatorError;
use stationkeep::runner::{metrics, run_sweep, PreparedScenario, SimError, SweepParam};
use stationkeep::scenario::{ControllerKind, Scenario};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "stationkeep",
    version,
    about = "Station-keeping simulation for a 3-DOF surface vessel under sinusoidal disturbances"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one closed-loop simulation; writes run.csv and summary.json
    Simulate {
        /// scenario JSON file
        #[arg(long)]
        config: PathBuf,
        /// output directory (created if missing)
        #[arg(long)]
        out: PathBuf,
        /// override the integration step
        #[arg(long)]
        dt: Option<f64>,
        /// override the horizon
        #[arg(long = "t-final")]
        t_final: Option<f64>,
        /// override the controller kind (adaptive-observer, adaptive-oracle,
        /// ideal-known-gamma, open-loop)
        #[arg(long)]
        controller: Option<String>,
        /// reserved for future stochastic inputs; accepted and ignored
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate all stability certificates; JSON on stdout, table on stderr
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// additionally write certificates.json into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per value of a parameter; writes sweep.csv
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// one of: kappa, L, Q_scale, q1, q2, q3
        #[arg(long)]
        param: String,
        /// comma-separated list, e.g. "50,100,200"
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    match Cli::parse().cmd {
        Cmd::Simulate {
            config,
            out,
            dt,
            t_final,
            controller,
            seed,
        } => cmd_simulate(&config, &out, dt, t_final, controller.as_deref(), seed),
        Cmd::Certify { config, out } => cmd_certify(&config, out.as_deref()),
        Cmd::Sweep {
            config,
            param,
            values,
            out,
        } => cmd_sweep(&config, &param, &values, &out),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        1
    })?;
    Scenario::from_json(&text).map_err(|e| {
        eprintln!("error: {e}");
        1
    })
}

fn sim_error_code(e: &SimError) -> i32 {
    match e {
        SimError::Diverged { .. } | SimError::NonFinite { .. } => 2,
        _ => 1,
    }
}

fn cmd_simulate(
    config: &Path,
    out: &Path,
    dt: Option<f64>,
    t_final: Option<f64>,
    controller: Option<&str>,
    seed: Option<u64>,
) -> i32 {
    if seed.is_some() {
        eprintln!("note: --seed is reserved and currently ignored");
    }
    let mut scenario = match load_scenario(config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(dt) = dt {
        if dt.is_nan() || dt <= 0.0 {
            eprintln!("error: --dt must be > 0, got {dt}");
            return 1;
        }
        scenario.dt = dt;
    }
    if let Some(tf) = t_final {
        if tf.is_nan() || tf <= 0.0 {
            eprintln!("error: --t-final must be > 0, got {tf}");
            return 1;
        }
        scenario.t_final = tf;
    }
    if let Some(kind) = controller {
        match ControllerKind::parse(kind) {
            Some(k) => scenario.kind = k,
            None => {
                eprintln!(
                    "error: unknown controller {kind:?} (expected adaptive-observer, adaptive-oracle, ideal-known-gamma or open-loop)"
                );
                return 1;
            }
        }
    }
    let prepared = match PreparedScenario::new(scenario) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return sim_error_code(&e);
        }
    };
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    let log = match prepared.run() {
        Ok(log) => log,
        Err(e) => {
            eprintln!("error: {e}");
            return sim_error_code(&e);
        }
    };
    let m = metrics(&log);
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return 1;
    }
    let csv_path = out.join("run.csv");
    let result = fs::File::create(&csv_path)
        .and_then(|f| {
            let mut w = std::io::BufWriter::new(f);
            write_run_csv(&log, &mut w)?;
            w.flush()
        })
        .and_then(|_| {
            let summary = summary_json(
                &prepared.scenario,
                &m,
                &prepared.certificates,
                &prepared.warnings,
            );
            fs::write(
                out.join("summary.json"),
                serde_json::to_string_pretty(&summary).expect("summary serializes"),
            )
        });
    if let Err(e) = result {
        eprintln!("error: writing outputs to {}: {e}", out.display());
        return 1;
    }
    println!(
        "{} rows -> {}; tail max ||x_e|| = {:.6e}{}",
        log.t.len(),
        csv_path.display(),
        m.eps_tail_max,
        m.q_tilde_final
            .map(|q| format!(
                ", |q_tilde| = ({:.3e}, {:.3e}, {:.3e})",
                q[0].abs(),
                q[1].abs(),
                q[2].abs()
            ))
            .unwrap_or_default()
    );
    0
}

fn print_certificates(certs: &[Certificate]) {
    for cert in certs {
        let status = if cert.passed {
            "PASS"
        } else if cert.hard_passed() {
            "WARN"
        } else {
            "FAIL"
        };
        eprintln!("[{status}] {}", cert.name);
        for c in &cert.checks {
            let rel = match c.bound {
                stationkeep::certificates::Bound::Below => "<",
                stationkeep::certificates::Bound::Above => ">",
            };
            eprintln!(
                "    {} {}: {:.6e} {rel} {:.3e}{}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                if c.hard { "" } else { " (soft)" }
            );
        }
        for (k, v) in &cert.info {
            eprintln!("         {k} = {v:.6e}");
        }
    }
}

fn cmd_certify(config: &Path, out: Option<&Path>) -> i32 {
    let scenario = match load_scenario(config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let certs: Vec<Certificate> = match PreparedScenario::new(scenario) {
        Ok(p) => {
            for w in &p.warnings {
                eprintln!("warning: {w}");
            }
            p.certificates.clone()
        }
        Err(SimError::Regulator(RegulatorError::NotHurwitz { a0, a1, a2, max_re })) => {
            eprintln!("internal model polynomial s^3 + {a2}s^2 + {a1}s + {a0} is not Hurwitz");
            vec![Certificate::from_checks(
                "internal_model_hurwitz",
                vec![stationkeep::certificates::Check::from_value(
                    "max_eigenvalue_real_part",
                    max_re,
                    0.0,
                    stationkeep::certificates::Bound::Below,
                    true,
                )],
                vec![],
            )]
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    print_certificates(&certs);
    let doc = serde_json::json!({ "certificates": certs });
    let text = serde_json::to_string_pretty(&doc).expect("certificates serialize");
    println!("{text}");
    if let Some(dir) = out {
        if let Err(e) =
            fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("certificates.json"), &text))
        {
            eprintln!("error: writing certificates.json: {e}");
            return 1;
        }
    }
    let hard_ok = certs.iter().all(|c| c.hard_passed());
    if hard_ok {
        0
    } else {
        eprintln!("certificate hard gates failed");
        3
    }
}

fn cmd_sweep(config: &Path, param: &str, values: &str, out: &Path) -> i32 {
    let scenario = match load_scenario(config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let param = match SweepParam::parse(param) {
        Some(p) => p,
        None => {
            eprintln!(
                "error: unknown sweep parameter {param:?} (expected kappa, L, Q_scale, q1, q2 or q3)"
            );
            return 1;
        }
    };
    let mut list = Vec::new();
    for token in values.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token.parse::<f64>() {
            Ok(v) => list.push(v),
            Err(_) => {
                eprintln!("error: --values entry {token:?} is not a number");
                return 1;
            }
        }
    }
    if list.is_empty() {
        eprintln!("error: --values list is empty");
        return 1;
    }
    let points = match run_sweep(&scenario, param, &list) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return sim_error_code(&e);
        }
    };
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return 1;
    }
    let path = out.join("sweep.csv");
    let result = fs::File::create(&path).and_then(|f| {
        let mut w = std::io::BufWriter::new(f);
        write_sweep_csv(&points, &mut w)?;
        w.flush()
    });
    if let Err(e) = result {
        eprintln!("error: writing {}: {e}", path.display());
        return 1;
    }
    println!("{} sweep points -> {}", points.len(), path.display());
    0
}
