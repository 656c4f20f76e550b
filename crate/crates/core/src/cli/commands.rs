use super::csv::{format_number, opt_number, render, CsvTable};
use super::{CliError, OutputOptions, RunConfig};
use crate::asymptotics::{drift, drift_classical, find_drift_peak, variance_rate_eddy};
use crate::mc::{estimate_drift, estimate_variance_rate};
use crate::model::Model;
use crate::sorting::{fanout_angle, fanout_angle_stderr, predicted_drift_vector, simulate_sorting};

fn status_of(e: &crate::Error) -> &'static str {
    match e {
        crate::Error::Accuracy { .. } => "accuracy-failure",
        crate::Error::Divergence { .. } => "divergence",
        _ => "error",
    }
}

fn emit(text: String, output: &OutputOptions) -> Result<String, CliError> {
    match &output.path {
        Some(p) => {
            std::fs::write(p, text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn finish(
    header: &[String],
    table: CsvTable,
    footers: &[CsvTable],
    output: &OutputOptions,
    failure: Option<crate::Error>,
) -> Result<String, CliError> {
    let table = match &output.columns {
        Some(cols) => table.select(cols)?,
        None => table,
    };
    let text = emit(render(header, &table, footers), output)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(text),
    }
}

fn mc_columns(cfg: &RunConfig) -> [String; 4] {
    [
        cfg.sim.n_traj.to_string(),
        format_number(cfg.sim.t_total),
        format_number(cfg.sim.dt),
        cfg.sim.master_seed.to_string(),
    ]
}

/// Drift against `lambda`: asymptotic value, quadrature error and, when
/// enabled, the Monte Carlo estimate with its standard error.
pub fn cmd_sweep(cfg: &RunConfig, header: &[String], output: &OutputOptions) -> Result<String, CliError> {
    if cfg.lambda_sweep.is_empty() {
        return Err(CliError::Usage("empty lambda sweep".into()));
    }
    let mut table = CsvTable::new(&[
        "lambda",
        "v_asymptotic",
        "quad_error",
        "v_mc",
        "mc_stderr",
        "n_traj",
        "t_total",
        "dt",
        "seed",
        "status",
    ]);
    let mut failure = None;
    for &lambda in &cfg.lambda_sweep {
        let params = cfg.params.with_lambda(lambda);
        let mut status = "ok";
        let (v, err) = match drift(cfg.model, &params, &cfg.wave, &cfg.quad) {
            Ok(d) => (Some(d.value), Some(d.error)),
            Err(e) => {
                status = status_of(&e);
                let best = match e {
                    crate::Error::Accuracy { best, .. } if best.is_finite() => Some(best),
                    _ => None,
                };
                failure.get_or_insert(e);
                (best, None)
            }
        };
        let (m, se) = if cfg.mc {
            match estimate_drift(&cfg.sim, &params, &cfg.wave) {
                Ok(d) => (Some(d.mean), Some(d.stderr)),
                Err(e) => {
                    status = status_of(&e);
                    failure.get_or_insert(e);
                    (None, None)
                }
            }
        } else {
            (None, None)
        };
        let mut row = vec![format_number(lambda), opt_number(v), opt_number(err), opt_number(m), opt_number(se)];
        row.extend(mc_columns(cfg));
        row.push(status.into());
        table.push(row);
    }
    finish(header, table, &[], output, failure)
}

/// Eddy-model long-time variance rate against `lambda`.
pub fn cmd_variance(cfg: &RunConfig, header: &[String], output: &OutputOptions) -> Result<String, CliError> {
    if cfg.model != Model::Eddy {
        return Err(CliError::Usage("the variance rate is available for the eddy model only".into()));
    }
    if cfg.lambda_sweep.is_empty() {
        return Err(CliError::Usage("empty lambda sweep".into()));
    }
    let mut table = CsvTable::new(&[
        "lambda",
        "variance_rate_asymptotic",
        "quad_error",
        "rate_mc",
        "mc_stderr",
        "n_traj",
        "t_total",
        "dt",
        "seed",
        "status",
    ]);
    let mut failure = None;
    for &lambda in &cfg.lambda_sweep {
        let params = cfg.params.with_lambda(lambda);
        let mut status = "ok";
        let (v, err) = match variance_rate_eddy(&params, &cfg.wave, &cfg.quad) {
            Ok(r) => (Some(r.value), Some(r.error)),
            Err(e) => {
                status = status_of(&e);
                failure.get_or_insert(e);
                (None, None)
            }
        };
        let (m, se) = if cfg.mc {
            match estimate_variance_rate(&cfg.sim, &params, &cfg.wave) {
                Ok(r) => (Some(r.rate), Some(r.stderr)),
                Err(e) => {
                    status = status_of(&e);
                    failure.get_or_insert(e);
                    (None, None)
                }
            }
        } else {
            (None, None)
        };
        let mut row = vec![format_number(lambda), opt_number(v), opt_number(err), opt_number(m), opt_number(se)];
        row.extend(mc_columns(cfg));
        row.push(status.into());
        table.push(row);
    }
    finish(header, table, &[], output, failure)
}

/// Drift maximum over `[lambda_min, lambda_max]`, reported next to the
/// white-noise limit.
pub fn cmd_peak(cfg: &RunConfig, header: &[String], output: &OutputOptions) -> Result<String, CliError> {
    let (lo, hi) = cfg.lambda_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!("invalid lambda range [{lo}, {hi}]")));
    }
    let peak = find_drift_peak(cfg.model, &cfg.params, &cfg.wave, cfg.lambda_range, &cfg.quad)?;
    let classical = drift_classical(&cfg.params, &cfg.wave)?.value;
    let mut report = String::new();
    for h in header {
        report.push_str(&format!("# {h}\n"));
    }
    report.push_str(&format!("model = {}\n", cfg.model));
    report.push_str(&format!("lambda_min = {}\n", format_number(lo)));
    report.push_str(&format!("lambda_max = {}\n", format_number(hi)));
    report.push_str(&format!("interior_peak = {}\n", peak.interior));
    if peak.interior {
        report.push_str(&format!("lambda_star = {}\n", format_number(peak.lambda)));
        report.push_str(&format!("drift_star = {}\n", format_number(peak.drift)));
    } else {
        report.push_str("result = no interior peak\n");
        report.push_str(&format!("lambda_max_drift = {}\n", format_number(peak.lambda)));
        report.push_str(&format!("max_drift = {}\n", format_number(peak.drift)));
    }
    report.push_str(&format!("drift_classical = {}\n", format_number(classical)));
    if let Some(p) = &output.path {
        std::fs::write(p, &report)?;
    }
    Ok(report)
}

/// Predicted and simulated drift vectors of each species in the planar
/// wave field, followed by the pairwise fan-out angles.
pub fn cmd_sort_demo(cfg: &RunConfig, header: &[String], output: &OutputOptions) -> Result<String, CliError> {
    if cfg.species.is_empty() {
        return Err(CliError::Usage("no species given".into()));
    }
    if cfg.field.waves.is_empty() {
        return Err(CliError::Usage("no waves given".into()));
    }
    let predicted = cfg
        .species
        .iter()
        .map(|s| predicted_drift_vector(s, &cfg.field, &cfg.quad))
        .collect::<crate::Result<Vec<_>>>()?;
    let simulated = if cfg.mc {
        Some(simulate_sorting(&cfg.species, &cfg.field, &cfg.sim)?)
    } else {
        None
    };

    let mut table = CsvTable::new(&[
        "species",
        "lambda",
        "predicted_vx",
        "predicted_vy",
        "mc_vx",
        "mc_vy",
        "mc_stderr_x",
        "mc_stderr_y",
    ]);
    for (i, s) in cfg.species.iter().enumerate() {
        let mc = simulated.as_ref().map(|v| &v[i]);
        table.push(vec![
            s.label.clone(),
            format_number(s.params.lambda),
            format_number(predicted[i][0]),
            format_number(predicted[i][1]),
            opt_number(mc.map(|e| e.drift[0])),
            opt_number(mc.map(|e| e.drift[1])),
            opt_number(mc.map(|e| e.stderr[0])),
            opt_number(mc.map(|e| e.stderr[1])),
        ]);
    }

    let mut footers = Vec::new();
    if cfg.species.len() > 1 {
        let mut angles = CsvTable::new(&[
            "species_a",
            "species_b",
            "angle_predicted",
            "angle_mc",
            "angle_mc_stderr",
        ]);
        for i in 0..cfg.species.len() {
            for j in i + 1..cfg.species.len() {
                let pred = fanout_angle(predicted[i], predicted[j]).ok();
                let (mc, se) = match &simulated {
                    Some(v) => (
                        fanout_angle(v[i].drift, v[j].drift).ok(),
                        Some(fanout_angle_stderr(v[i].drift, v[i].stderr, v[j].drift, v[j].stderr)),
                    ),
                    None => (None, None),
                };
                angles.push(vec![
                    cfg.species[i].label.clone(),
                    cfg.species[j].label.clone(),
                    opt_number(pred),
                    opt_number(mc),
                    opt_number(se.filter(|s| s.is_finite())),
                ]);
            }
        }
        footers.push(angles);
    }
    finish(header, table, &footers, output, None)
}
