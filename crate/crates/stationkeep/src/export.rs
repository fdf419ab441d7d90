//! CSV and JSON exporters for run logs, summaries and sweeps.
//!
//! The run CSV is RFC-4180 style: fixed header, comma-separated, CRLF record
//! ends, numbers printed with 12 significant digits. Columns that a
//! controller kind does not produce stay blank.

use crate::certificates::Certificate;
use crate::runner::{Metrics, RunLog, SweepPoint};
use crate::scenario::Scenario;
use std::io::{self, Write};

/// Fixed column order of `run.csv`.
pub const RUN_CSV_HEADER: &str =
    "t,X,Y,Phi,Xe,Ye,Phie,tau1,tau2,tau3,taud1,taud2,taud3,qhat1,qhat2,qhat3,qtil1,qtil2,qtil3,obs_err,V";

/// 12 significant digits, scientific form.
pub fn fmt_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

fn push_vec3(fields: &mut Vec<String>, v: &[f64; 3]) {
    for x in v {
        fields.push(fmt_sig12(*x));
    }
}

fn push_opt3(fields: &mut Vec<String>, col: &Option<Vec<[f64; 3]>>, k: usize) {
    match col {
        Some(rows) => push_vec3(fields, &rows[k]),
        None => fields.extend([String::new(), String::new(), String::new()]),
    }
}

fn push_opt1(fields: &mut Vec<String>, col: &Option<Vec<f64>>, k: usize) {
    match col {
        Some(rows) => fields.push(fmt_sig12(rows[k])),
        None => fields.push(String::new()),
    }
}

/// Write the sampled run log with the fixed header.
pub fn write_run_csv<W: Write>(log: &RunLog, out: &mut W) -> io::Result<()> {
    write!(out, "{RUN_CSV_HEADER}\r\n")?;
    for k in 0..log.t.len() {
        let mut fields: Vec<String> = Vec::with_capacity(21);
        fields.push(fmt_sig12(log.t[k]));
        push_vec3(&mut fields, &log.x[k]);
        push_vec3(&mut fields, &log.x_e[k]);
        push_vec3(&mut fields, &log.tau[k]);
        push_vec3(&mut fields, &log.tau_d[k]);
        push_opt3(&mut fields, &log.q_hat, k);
        push_opt3(&mut fields, &log.q_til, k);
        push_opt1(&mut fields, &log.obs_err, k);
        push_opt1(&mut fields, &log.v_lyap, k);
        write!(out, "{}\r\n", fields.join(","))?;
    }
    Ok(())
}

/// The run summary: scenario echo, metrics, certificates, warnings.
pub fn summary_json(
    scenario: &Scenario,
    metrics: &Metrics,
    certificates: &[Certificate],
    warnings: &[String],
) -> serde_json::Value {
    serde_json::json!({
        "controller_kind": scenario.kind.as_str(),
        "dt": scenario.dt,
        "t_final": scenario.t_final,
        "log_stride": scenario.log_stride,
        "x_r": scenario.x_r,
        "q_true": scenario.exo.q,
        "kappa": scenario.observer.kappa,
        "sat_limit": scenario.observer.sat_limit,
        "metrics": metrics,
        "certificates": certificates,
        "warnings": warnings,
    })
}

/// Fixed column order of `sweep.csv`.
pub const SWEEP_CSV_HEADER: &str =
    "param,value,eps_tail_max,final_x_e_norm,settle_time,qtil1,qtil2,qtil3,obs_err2_avg,v_violations,z2hat_max_abs";

/// Write one metrics row per sweep value.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: &mut W) -> io::Result<()> {
    write!(out, "{SWEEP_CSV_HEADER}\r\n")?;
    for p in points {
        let m = &p.metrics;
        let mut fields = vec![
            p.param.clone(),
            fmt_sig12(p.value),
            fmt_sig12(m.eps_tail_max),
            fmt_sig12(m.final_x_e_norm),
        ];
        fields.push(m.settle_time.map(fmt_sig12).unwrap_or_default());
        match m.q_tilde_final {
            Some(q) => push_vec3(&mut fields, &q),
            None => fields.extend([String::new(), String::new(), String::new()]),
        }
        fields.push(m.obs_err2_avg.map(fmt_sig12).unwrap_or_default());
        fields.push(m.v_violations.map(|v| v.to_string()).unwrap_or_default());
        fields.push(m.z2hat_max_abs.map(fmt_sig12).unwrap_or_default());
        write!(out, "{}\r\n", fields.join(","))?;
    }
    Ok(())
}
