//! Flat `key = value` configuration with optional `[command]` sections.
//!
//! ```text
//! # shared by every command
//! epsilon = 0.2
//! sigma = 1
//!
//! [sweep]
//! model = eddy
//! lambda_min = 0.05
//! lambda_max = 50
//! lambda_points = 20
//! ```
//!
//! Resolution order for a command: built-in defaults, top-level keys, the
//! command's section, then command-line overrides.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::CliError;
use crate::asymptotics::log_grid;
use crate::mc::SimConfig;
use crate::model::{Model, PhasePolicy, ReducedParams, WaveSpec};
use crate::quadrature::QuadratureSettings;
use crate::sorting::{DirectedWave, SpeciesSpec, WaveField2D};

/// Every key understood in a config file or as a `--key value` override.
pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "lambda",
    "sigma",
    "epsilon",
    "u",
    "k",
    "omega",
    "phase",
    "lambdas",
    "lambda_min",
    "lambda_max",
    "lambda_points",
    "mc",
    "dt",
    "t_total",
    "n_traj",
    "seed",
    "scheme",
    "rel_tol",
    "envelope_cutoff",
    "max_panels",
    "species",
    "waves",
];

pub const COMMANDS: &[&str] = &["sweep", "variance", "peak", "sort"];

/// Parsed, not yet resolved, configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub global: BTreeMap<String, String>,
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn check_key(key: &str, line: usize) -> Result<(), CliError> {
    if CONFIG_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("line {line}: unknown key '{key}'")))
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !COMMANDS.contains(&name.as_str()) {
                    return Err(CliError::Usage(format!("line {line_no}: unknown section [{name}]")));
                }
                section = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {line_no}: expected key = value")))?;
            let key = normalize_key(key);
            check_key(&key, line_no)?;
            let map = match &section {
                Some(s) => cfg.sections.entry(s.clone()).or_default(),
                None => &mut cfg.global,
            };
            map.insert(key, value.trim().to_string());
        }
        Ok(cfg)
    }

    /// Defaults, then top-level keys, then the command's section, then `overrides`.
    pub fn resolve(
        &self,
        command: &str,
        overrides: &[(String, String)],
    ) -> Result<BTreeMap<String, String>, CliError> {
        let mut map = defaults(command);
        map.extend(self.global.clone());
        if let Some(s) = self.sections.get(command) {
            map.extend(s.clone());
        }
        for (k, v) in overrides {
            let k = normalize_key(k);
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("unknown option --{k}")));
            }
            map.insert(k, v.clone());
        }
        Ok(map)
    }
}

fn defaults(command: &str) -> BTreeMap<String, String> {
    let mut m: BTreeMap<String, String> = [
        ("model", "eddy"),
        ("lambda", "1"),
        ("sigma", "1"),
        ("epsilon", "0.2"),
        ("u", "1"),
        ("k", "1"),
        ("omega", "1"),
        ("phase", "uniform"),
        ("lambda_min", "0.05"),
        ("lambda_max", "50"),
        ("lambda_points", "20"),
        ("mc", "false"),
        ("dt", "0.001"),
        ("t_total", "1000"),
        ("n_traj", "256"),
        ("seed", "24301"),
        ("scheme", "euler"),
        ("rel_tol", "1e-8"),
        ("envelope_cutoff", "40"),
        ("max_panels", "1000000"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    match command {
        "variance" => {
            m.insert("epsilon".into(), "0.5".into());
        }
        "peak" => {
            m.insert("lambda_min".into(), "0.01".into());
            m.insert("lambda_max".into(), "1000".into());
        }
        "sort" => {
            m.insert("model".into(), "inertia".into());
            m.insert("epsilon".into(), "0.1".into());
            m.insert("mc".into(), "true".into());
            m.insert("n_traj".into(), "500".into());
            m.insert("species".into(), "heavy:0.5, light:5".into());
            m.insert("waves".into(), "45:2.25:0.5:0.5; -45:6.75:1:3".into());
        }
        _ => {}
    }
    m
}

/// Fully typed configuration of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub params: ReducedParams,
    pub wave: WaveSpec,
    pub lambda_sweep: Vec<f64>,
    pub lambda_range: (f64, f64),
    pub mc: bool,
    pub sim: SimConfig,
    pub quad: QuadratureSettings,
    pub species: Vec<SpeciesSpec>,
    pub field: WaveField2D,
}

fn get<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str, CliError> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| CliError::Usage(format!("missing key '{key}'")))
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: cannot parse '{v}'")))
}

fn num<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    parse_num(key, get(map, key)?)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!("{key}: expected true/false, got '{v}'"))),
    }
}

fn parse_phase(v: &str) -> Result<PhasePolicy, CliError> {
    if v.trim().eq_ignore_ascii_case("uniform") {
        Ok(PhasePolicy::Uniform)
    } else {
        Ok(PhasePolicy::Fixed(parse_num("phase", v)?))
    }
}

/// `label:lambda` entries separated by commas.
fn parse_species(v: &str, base: &ReducedParams, model: Model) -> Result<Vec<SpeciesSpec>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|entry| {
            let (label, lambda) = entry
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("species: expected label:lambda, got '{entry}'")))?;
            Ok(SpeciesSpec {
                label: label.trim().to_string(),
                params: base.with_lambda(parse_num("species", lambda)?),
                model,
            })
        })
        .collect()
}

/// `angle_deg:u:k:omega` entries separated by semicolons.
fn parse_waves(v: &str, phase: PhasePolicy) -> Result<WaveField2D, CliError> {
    let waves = v
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|entry| {
            let parts: Vec<f64> = entry
                .split(':')
                .map(|p| parse_num("waves", p))
                .collect::<Result<_, _>>()?;
            let [angle, u, k, omega] = parts[..] else {
                return Err(CliError::Usage(format!(
                    "waves: expected angle_deg:u:k:omega, got '{entry}'"
                )));
            };
            let spec = WaveSpec {
                u,
                k,
                omega,
                phase,
            };
            Ok(DirectedWave::at_angle(angle.to_radians(), spec))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    WaveField2D::new(waves).map_err(|e| CliError::Usage(e.to_string()))
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let usage = |e: crate::Error| CliError::Usage(e.to_string());
        let model: Model = get(map, "model")?.parse().map_err(usage)?;
        let params = ReducedParams::new(num(map, "lambda")?, num(map, "sigma")?, num(map, "epsilon")?)
            .map_err(usage)?;
        let phase = parse_phase(get(map, "phase")?)?;
        let wave = WaveSpec {
            u: num(map, "u")?,
            k: num(map, "k")?,
            omega: num(map, "omega")?,
            phase,
        };
        wave.validate().map_err(usage)?;

        let lambda_range: (f64, f64) = (num(map, "lambda_min")?, num(map, "lambda_max")?);
        let lambda_sweep = match map.get("lambdas") {
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_num("lambdas", s))
                .collect::<Result<Vec<f64>, _>>()?,
            None => {
                let n: usize = num(map, "lambda_points")?;
                let (lo, hi) = lambda_range;
                if !(lo > 0.0 && hi >= lo) {
                    return Err(CliError::Usage(format!(
                        "lambda range must satisfy 0 < lambda_min <= lambda_max, got [{lo}, {hi}]"
                    )));
                }
                log_grid(lo, hi, n)
            }
        };
        if lambda_sweep.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliError::Usage("sweep values must be positive".into()));
        }
        if lambda_sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("sweep values must be strictly ascending".into()));
        }

        let sim = SimConfig {
            dt: num(map, "dt")?,
            t_total: num(map, "t_total")?,
            n_traj: num(map, "n_traj")?,
            master_seed: num(map, "seed")?,
            scheme: get(map, "scheme")?.parse().map_err(usage)?,
            model,
        };
        sim.validate().map_err(usage)?;
        let quad = QuadratureSettings {
            rel_tol: num(map, "rel_tol")?,
            envelope_cutoff: num(map, "envelope_cutoff")?,
            max_panels: num(map, "max_panels")?,
        };
        quad.validate().map_err(usage)?;

        let species = match map.get("species") {
            Some(v) => parse_species(v, &params, model)?,
            None => Vec::new(),
        };
        let field = match map.get("waves") {
            Some(v) => parse_waves(v, phase)?,
            None => WaveField2D::default(),
        };

        Ok(RunConfig {
            model,
            params,
            wave,
            lambda_sweep,
            lambda_range,
            mc: parse_bool("mc", get(map, "mc")?)?,
            sim,
            quad,
            species,
            field,
        })
    }
}
