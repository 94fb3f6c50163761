//! One function per command. Each writes its artifacts and returns a short
//! JSON summary for stdout.

use std::io::Write;

use lyap_core::config::{coordinate_amplitudes, typical_scale, Command, ConfigError, RunConfig};
use lyap_core::exponents::{
    epsilon_sweep, gaussian_fisher_check, moment_lyapunov, SweepOptions, SweepReport,
};
use lyap_core::projective::{initial_condition, qr_spectrum, shear_bound_check, SpectrumOptions};
use lyap_core::sde::{energy_balance, integrate};
use lyap_core::spanning::{
    build_dk, build_hk, check_distinctness, recheck_violation, sl_certificate, verify_sl_generation,
    zn_propagation, HkChart,
};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::artifacts::OutDir;

pub enum Failure {
    Config(String),
    Compute(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("i/o error: {e}"))
    }
}

fn compute<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Compute(e.to_string())
}

pub fn execute(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    match cfg.command {
        Command::Simulate => simulate(cfg, out),
        Command::Spectrum => spectrum(cfg, out),
        Command::Sweep => sweep(cfg, out),
        Command::Moment => moment(cfg, out),
        Command::FisherCheck => fisher(cfg, out),
        Command::VerifyHk => verify_hk(cfg, out),
        Command::VerifyDistinctness => verify_distinctness(cfg, out),
        Command::VerifyZn => verify_zn(cfg, out),
        Command::ShearCheck => shear(cfg, out),
    }
}

fn simulate(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let ic = cfg.integrator_config(&model)?;
    let (x0, _) = initial_condition(model.dim(), ic.seed, typical_scale(&model));
    let traj = integrate(&model, &x0, &ic).map_err(compute)?;
    traj.write_csv(out.csv("trajectory.csv")?)?;
    traj.write_binary(out.raw("trajectory.bin")?)?;
    let samples: Vec<DVector<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t > ic.burn_in)
        .map(|(_, x)| x.clone())
        .collect();
    let budget = energy_balance(&model, &samples).map_err(compute)?;
    let summary = json!({
        "samples": traj.len(),
        "mean_energy": budget.mean_energy,
        "predicted_energy": budget.predicted_energy(model.epsilon()),
        "energy_residual": budget.residual,
    });
    out.write_json("energy.json", json!({ "energy_balance": budget, "fingerprint": model.fingerprint() }))?;
    Ok(summary)
}

fn spectrum(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let ic = cfg.integrator_config(&model)?;
    let mut opts = SpectrumOptions::new(model.dim(), 4);
    if let Some(s) = &cfg.spectrum {
        opts.m_vectors = s.m_vectors.unwrap_or(model.dim());
        opts.n_seeds = s.n_seeds;
        opts.reorth_every = s.reorth_every;
        opts.cond_trigger = s.cond_trigger;
    }
    let rep = qr_spectrum(&model, None, &ic, &opts).map_err(compute)?;
    let summary = rep.summary_json();
    out.write_json("spectrum.json", json!({ "summary": summary, "report": rep }))?;
    Ok(summary)
}

fn sweep(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let ic = cfg.integrator_config(&model)?;
    let sec = cfg.sweep.as_ref().expect("validated");
    let opts = SweepOptions {
        n_seeds: sec.n_seeds,
        full_spectrum: sec.full_spectrum,
    };
    if sec.epsilons.windows(2).any(|w| w[1] >= w[0]) || sec.epsilons.iter().any(|e| *e <= 0.0) {
        return Err(Failure::Config("sweep epsilons must be positive and strictly descending".into()));
    }
    let mut csv = out.csv("sweep.csv")?;
    writeln!(csv, "epsilon,lambda1,stderr,ratio,lambda_sum,minus_eps_trA")?;
    let mut rows = Vec::new();
    for &eps in &sec.epsilons {
        let one = epsilon_sweep(&model, &[eps], &ic, opts).map_err(compute)?;
        let row = one.rows.into_iter().next().expect("one row");
        let sum = row.lambda_sum.as_ref().map_or(String::new(), |s| s.value.to_string());
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.epsilon, row.lambda1.value, row.lambda1.stderr, row.ratio, sum, row.minus_eps_tr_a
        )?;
        csv.flush()?;
        log::info!("sweep eps = {eps}: ratio {}", row.ratio);
        rows.push(row);
    }
    let rep = SweepReport::from_rows(rows).map_err(compute)?;
    let summary = json!({
        "ratios": rep.rows.iter().map(|r| r.ratio).collect::<Vec<_>>(),
        "trend": rep.trend.difference,
        "trend_stderr": rep.trend.stderr,
        "trend_sigmas": rep.trend.sigmas(),
    });
    out.write_json("sweep.json", json!({ "summary": summary, "report": rep, "fingerprint": model.fingerprint() }))?;
    Ok(summary)
}

fn moment(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let ic = cfg.integrator_config(&model)?;
    let sec = cfg.moment.as_ref().expect("validated");
    let est = moment_lyapunov(&model, &ic, &sec.p, sec.ensemble).map_err(compute)?;
    let mut csv = out.csv("moment.csv")?;
    writeln!(csv, "p,lambda,stderr")?;
    for e in &est {
        writeln!(csv, "{},{},{}", e.p, e.value, e.stderr)?;
    }
    csv.flush()?;
    let summary = json!(est.iter().map(|e| json!({"p": e.p, "lambda": e.value, "stderr": e.stderr})).collect::<Vec<_>>());
    out.write_json("moment.json", json!({ "estimates": est, "fingerprint": model.fingerprint() }))?;
    Ok(summary)
}

fn fisher(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let (a, q) = coordinate_amplitudes(&model)?;
    let check = gaussian_fisher_check(&a, &q, model.epsilon()).map_err(compute)?;
    let summary = serde_json::to_value(check).expect("json");
    out.write_json("fisher.json", json!({ "check": check, "fingerprint": model.fingerprint() }))?;
    Ok(summary)
}

fn verify_hk(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let fam = build_hk(&model).map_err(compute)?;
    let dk = if matches!(fam.chart, HkChart::Lattice { .. }) {
        build_dk(&fam).map_err(compute)?;
        Some("closed form equals [H^k, H^-k] for every k")
    } else {
        None
    };
    let depth = cfg.closure.as_ref().map_or(64, |c| c.max_depth);
    let closure = verify_sl_generation(&fam, depth).map_err(compute)?;
    let cert = sl_certificate(&fam, &closure);
    out.write_json("hk.json", json!({ "family": fam }))?;
    out.write_json("sl_certificate.json", json!({ "certificate": cert, "dk_check": dk }))?;
    Ok(json!({ "dim": closure.dim, "saturated": closure.saturated, "dk_check": dk }))
}

fn verify_distinctness(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let sec = cfg.distinctness.as_ref().expect("validated");
    let rep = check_distinctness(sec.truncation, &sec.r).map_err(compute)?;
    let mut reproduced = Vec::with_capacity(rep.violations.len());
    for q in &rep.violations {
        reproduced.push(recheck_violation(sec.truncation, &sec.r, q).map_err(compute)?);
    }
    let mut cert = rep.certificate_json();
    cert["violations_reproduced"] = json!(reproduced.iter().all(|&b| b));
    cert["counts_consistent"] = json!(rep.counts_consistent());
    out.write_json("distinctness.json", cert)?;
    Ok(json!({
        "examined": rep.examined,
        "excluded": rep.excluded,
        "satisfied": rep.satisfied,
        "violations": rep.violations.len(),
    }))
}

fn verify_zn(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let gc = cfg.model.as_ref().and_then(|m| m.gnse_config()).expect("validated");
    let z = zn_propagation(&gc).map_err(compute)?;
    let summary = z.summary_json(&gc);
    out.write_json("zn.json", json!({ "summary": summary, "sets": z.sets }))?;
    Ok(summary)
}

fn shear(cfg: &RunConfig, out: &mut OutDir) -> Result<Value, Failure> {
    let model = cfg.build_model()?;
    let sec = cfg.shear.as_ref().expect("validated");
    let n = model.dim();
    let x0 = match &sec.x0 {
        Some(v) if v.len() == n => DVector::from_column_slice(v),
        Some(v) => {
            return Err(Failure::Config(format!("shear x0 has {} entries, model has {n}", v.len())))
        }
        None => {
            let mut x = DVector::zeros(n);
            x[0] = 1.0;
            x[1] = 1.0;
            x
        }
    };
    let rep = shear_bound_check(&model, &x0, sec.horizon, sec.dt, sec.sample_every).map_err(compute)?;
    let mut csv = out.csv("shear.csv")?;
    writeln!(csv, "t,lhs,rhs,residual")?;
    for s in &rep.samples {
        writeln!(csv, "{},{},{},{}", s.t, s.lhs, s.rhs, s.residual)?;
    }
    csv.flush()?;
    let summary = json!({
        "max_residual": rep.max_residual,
        "bound_holds": rep.all_satisfied,
        "energy_drift": rep.energy_drift,
    });
    out.write_json("shear.json", json!({ "summary": summary, "report": rep }))?;
    Ok(summary)
}
