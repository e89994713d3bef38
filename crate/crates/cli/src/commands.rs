//! Command execution: a manifest in, a summary and tables out.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use weakqms_core::algebra::{LocalOperator, Site};
use weakqms_core::certificates::{
    bound_curves, derive_parameters, finite_range_parameters, order_majorant, truncation_tail, BoundMode,
    BoundParameters,
};
use weakqms_core::expansion::{correlation_estimate, stationary_expectation};
use weakqms_core::finite_volume::{
    fit_decay_rate, relaxation_profile, spectral_gap, stationary_state, truncated_correlation, StationaryState,
};
use weakqms_core::generators::{check_qms_generator, interaction_norm, ProfileSet, SpectralProfile};
use weakqms_core::linalg::C64;
use weakqms_core::models::{currents, fourier_scaling, self_consistent_profile, HeatBathChain, NewtonOptions};
use weakqms_core::Error;

use crate::error::CliError;
use crate::manifest::{CommandBlock, Factor, Manifest, ModeSpec, ParameterBlock};
use crate::model::{build_model, named_operator, observable, BuiltModel};
use crate::output::{cell, float, Table};

/// Certificate constants as written to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParameters {
    pub mode: ModeSpec,
    pub l: f64,
    pub l_prime: f64,
    pub l_dprime: f64,
    pub g: f64,
    pub g_prime: f64,
    pub epsilon: f64,
    pub m: f64,
    pub k: f64,
    pub c: f64,
    pub lemma_factor: f64,
    pub ratio: f64,
}

impl From<&BoundParameters> for ResolvedParameters {
    fn from(p: &BoundParameters) -> Self {
        let mode = match p.mode {
            BoundMode::Theorem => ModeSpec::Theorem,
            BoundMode::General => ModeSpec::General,
            BoundMode::FiniteRange => ModeSpec::FiniteRange,
        };
        ResolvedParameters {
            mode,
            l: p.l,
            l_prime: p.l_prime,
            l_dprime: p.l_dprime,
            g: p.g,
            g_prime: p.g_prime,
            epsilon: p.epsilon,
            m: p.m,
            k: p.k,
            c: p.c,
            lemma_factor: p.lemma_factor,
            ratio: p.ratio(),
        }
    }
}

/// A comparable scalar: a value with an optional certified error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub key: String,
    /// `[re, im]`.
    pub value: [f64; 2],
    pub bound: Option<f64>,
}

impl Estimate {
    fn new(key: impl Into<String>, value: C64, bound: Option<f64>) -> Self {
        Estimate { key: key.into(), value: [value.re, value.im], bound }
    }

    fn real(key: impl Into<String>, value: f64, bound: Option<f64>) -> Self {
        Estimate { key: key.into(), value: [value, 0.0], bound }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub manifest_sha256: String,
    pub manifest: Manifest,
    /// The certificate behind every bound in this run.
    pub parameters: Option<ResolvedParameters>,
    pub result: Value,
    pub estimates: Vec<Estimate>,
    /// File names of the tables, relative to the output directory.
    pub artifacts: Vec<String>,
}

/// What a command computed, before it is wrapped in a [`Summary`].
#[derive(Debug, Clone)]
struct Outcome {
    result: Value,
    estimates: Vec<Estimate>,
    tables: Vec<Table>,
}

/// Builds the certificate from a parameter block, filling unset rates,
/// amplitudes and interaction norms from the model.
///
/// # Errors
/// `Manifest` when a decay length is missing; `Core` hypothesis errors
/// when the certificate is infeasible.
pub fn resolve_parameters(block: &ParameterBlock, model: &BuiltModel) -> Result<BoundParameters, CliError> {
    let g = block.g.unwrap_or_else(|| model.profiles.min_gap());
    let m = block.m.unwrap_or_else(|| model.profiles.max_amplitude());
    let norm_at = |l: f64| block.epsilon.unwrap_or_else(|| interaction_norm(&model.interactions, l));
    match block.mode {
        ModeSpec::FiniteRange => {
            let l_prime = block.l_prime.ok_or_else(|| CliError::Manifest("finite_range mode needs l_prime".into()))?;
            Ok(finite_range_parameters(l_prime, g, block.g_prime, norm_at(l_prime), m)?)
        }
        ModeSpec::Theorem | ModeSpec::General => {
            let l = match (block.l, block.inv_l) {
                (Some(l), None) => l,
                (None, Some(inv)) => 1.0 / inv,
                _ => return Err(CliError::Manifest("give exactly one of l and inv_l".into())),
            };
            let mode = if block.mode == ModeSpec::General { BoundMode::General } else { BoundMode::Theorem };
            Ok(derive_parameters(l, g, block.g_prime, norm_at(l), m, mode)?)
        }
    }
}

fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

fn profile_json(p: &SpectralProfile) -> Value {
    let qms = check_qms_generator(&p.generator);
    json!({
        "gap": p.gap,
        "amplitude_m": p.amplitude_m,
        "rate": p.rate_used,
        "qms": {
            "identity_residual": qms.identity_residual,
            "hermiticity_residual": qms.hermiticity_residual,
            "ccp_min_eigenvalue": qms.ccp_min_eigenvalue,
            "verdict": qms.verdict,
        },
    })
}

fn validate(model: &BuiltModel, params: Option<&BoundParameters>) -> Outcome {
    let profiles: Vec<(String, &SpectralProfile)> = match &model.profiles {
        ProfileSet::Uniform(p) => vec![("all".into(), p)],
        ProfileSet::PerSite(map) => map.iter().map(|(s, p)| (s.to_string(), p)).collect(),
    };
    let mut table = Table::new("sites", &["site", "gap", "amplitude_m", "qms_verdict"]);
    let mut verdict = true;
    let mut sites = Vec::new();
    for (site, p) in &profiles {
        let qms = check_qms_generator(&p.generator);
        verdict &= qms.verdict && p.gap > 0.0;
        table.push(vec![site.clone(), float(p.gap), float(p.amplitude_m), qms.verdict.to_string()]);
        let mut entry = profile_json(p);
        entry["site"] = json!(site);
        sites.push(entry);
    }
    let (gap, m) = (model.profiles.min_gap(), model.profiles.max_amplitude());
    let result = json!({
        "gap": gap,
        "amplitude_m": m,
        "sites": sites,
        "interaction_norm": params.map(|p| interaction_norm(&model.interactions, p.l)),
        "verdict": if verdict { "pass" } else { "fail" },
    });
    let estimates = vec![Estimate::real("gap", gap, None), Estimate::real("amplitude_m", m, None)];
    Outcome { result, estimates, tables: vec![table] }
}

fn gap(model: &BuiltModel) -> Result<Outcome, CliError> {
    let gen = model.lattice.assemble(&model.volume)?;
    let value = spectral_gap(&gen)?;
    let result = json!({
        "volume": model.volume.to_string(),
        "gap": value,
        "single_site_gap": model.profiles.min_gap(),
    });
    Ok(Outcome { result, estimates: vec![Estimate::real("gap", value, None)], tables: vec![] })
}

fn evolve(
    model: &BuiltModel,
    a: &LocalOperator,
    times: &[f64],
    params: Option<&BoundParameters>,
) -> Result<Outcome, CliError> {
    let gen = model.lattice.assemble(&model.volume)?;
    let curves = params.map(|p| bound_curves(p, a.support().len(), None));
    let profile = relaxation_profile(&gen, a, times, curves.as_ref())?;
    let mut table = Table::new("relaxation", &["t", "distance", "bound"]);
    let mut estimates = Vec::new();
    for r in &profile.rows {
        table.push(vec![float(r.t), float(r.value), cell(r.bound)]);
        estimates.push(Estimate::real(format!("t={}", float(r.t)), r.value, r.bound));
    }
    let result = json!({
        "stationary_value": complex(profile.stationary_value),
        "fit": profile.fit.map(|f| json!({ "rate": f.rate, "intercept": f.intercept, "points": f.points })),
        "dominated": profile.dominated,
    });
    Ok(Outcome { result, estimates, tables: vec![table] })
}

fn unique_state(model: &BuiltModel) -> Result<StationaryState, CliError> {
    let state = stationary_state(&model.lattice.assemble(&model.volume)?)?;
    if !state.is_unique() {
        return Err(Error::DegenerateKernel { multiplicity: state.kernel_dimension }.into());
    }
    Ok(state)
}

fn stationary(
    model: &BuiltModel,
    factors: &[Factor],
    a: &LocalOperator,
    params: Option<&BoundParameters>,
) -> Result<Outcome, CliError> {
    let state = unique_state(model)?;
    let value = state.expectation(a)?;
    let distance = a.support().distance_to_complement(&model.volume);
    let bound = params.map(|p| bound_curves(p, a.support().len(), None).volume(distance as f64) * a.norm());
    let mut tables = Vec::new();
    if let [factor] = factors {
        let mut table = Table::new("sites", &["site", "re", "im"]);
        let m = named_operator(&factor.op, model.q)?;
        for site in &model.volume {
            let z = state.expectation(&LocalOperator::on_site(site.clone(), m.clone())?)?;
            table.push(vec![site.to_string(), float(z.re), float(z.im)]);
        }
        tables.push(table);
    }
    let result = json!({
        "value": complex(value),
        "volume": model.volume.to_string(),
        "distance_to_boundary": distance,
        "volume_bound": bound,
        "kernel_dimension": state.kernel_dimension,
        "residual": state.residual,
        "min_eigenvalue": state.min_eigenvalue,
    });
    Ok(Outcome { result, estimates: vec![Estimate::new("expectation", value, bound)], tables })
}

fn require(params: Option<&BoundParameters>, command: &str) -> Result<BoundParameters, CliError> {
    params.copied().ok_or_else(|| CliError::Manifest(format!("{command} needs a [parameters] block")))
}

fn expand(
    model: &BuiltModel,
    a: &LocalOperator,
    n_max: usize,
    weight_floor: f64,
    params: &BoundParameters,
) -> Result<Outcome, CliError> {
    let v = stationary_expectation(a, &model.profiles, &model.interactions, n_max, weight_floor, params)?;
    let mut table = Table::new("orders", &["order", "re", "im", "majorant"]);
    for (k, s) in v.order_sums.iter().enumerate() {
        let majorant = order_majorant(params, k, a.support().len()) * a.norm();
        table.push(vec![k.to_string(), float(s.re), float(s.im), float(majorant)]);
    }
    let result = json!({
        "value": complex(v.value),
        "truncation_bound": v.truncation_bound,
        "order_used": v.order_used,
        "diagram_count": v.diagram_count,
        "pruned_mass": v.pruned_mass,
        "order_sums": v.order_sums.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
    });
    let estimates = vec![Estimate::new("expectation", v.value, Some(v.truncation_bound))];
    Ok(Outcome { result, estimates, tables: vec![table] })
}

fn correlations(
    model: &BuiltModel,
    op: &str,
    distances: &[u64],
    n_max: Option<usize>,
    params: Option<&BoundParameters>,
) -> Result<Outcome, CliError> {
    let m = named_operator(op, model.q)?;
    let origin = model.volume.first().cloned().ok_or_else(|| CliError::Manifest("empty volume".into()))?;
    let at = |d: u64| -> Result<LocalOperator, CliError> {
        let site = Site::new(origin.offset(&[d as i64]).coords().to_vec());
        if !model.volume.contains(&site) {
            return Err(CliError::Manifest(format!("distance {d} leaves the volume {}", model.volume)));
        }
        Ok(LocalOperator::on_site(site, m.clone())?)
    };
    let state = unique_state(model)?;
    let a = at(0)?;
    let curves = params.map(|p| bound_curves(p, 1, Some(1)));
    let mut table =
        Table::new("correlations", &["d", "re", "im", "abs", "bound", "expansion_re", "expansion_im", "expansion_bound"]);
    let mut estimates = Vec::new();
    let (mut ds, mut mags) = (Vec::new(), Vec::new());
    for &d in distances {
        let b = at(d)?;
        let exact = truncated_correlation(&state, &a, &b)?;
        let bound = curves.and_then(|c| c.correlation(d as f64)).map(|x| x * a.norm() * b.norm());
        let expansion = match (n_max, params) {
            (Some(n), Some(p)) => Some(correlation_estimate(&a, &b, &model.profiles, &model.interactions, n, 0.0, p)?),
            (Some(_), None) => return Err(CliError::Manifest("expanded correlations need [parameters]".into())),
            _ => None,
        };
        table.push(vec![
            d.to_string(),
            float(exact.re),
            float(exact.im),
            float(exact.norm()),
            cell(bound),
            cell(expansion.as_ref().map(|v| v.value.re)),
            cell(expansion.as_ref().map(|v| v.value.im)),
            cell(expansion.as_ref().map(|v| v.truncation_bound)),
        ]);
        estimates.push(Estimate::new(format!("d={d}"), exact, bound));
        ds.push(d as f64);
        mags.push(exact.norm());
    }
    let dominated = curves.map(|_| estimates.iter().zip(&mags).all(|(e, m)| e.bound.is_some_and(|b| *m <= b)));
    let fit = fit_decay_rate(&ds, &mags);
    let result = json!({
        "origin": origin.to_string(),
        "slope": fit.map(|f| -f.rate),
        "dominated": dominated,
    });
    Ok(Outcome { result, estimates, tables: vec![table] })
}

fn bounds(params: &BoundParameters, x_size: usize, times: &[f64], distances: &[f64]) -> Outcome {
    let curves = bound_curves(params, x_size, Some(x_size));
    let mut table = Table::new("bounds", &["kind", "x", "value"]);
    for &t in times {
        table.push(vec!["relaxation".into(), float(t), float(curves.relaxation(t))]);
    }
    for &d in distances {
        table.push(vec!["volume".into(), float(d), float(curves.volume(d))]);
        table.push(vec!["correlation".into(), float(d), cell(curves.correlation(d))]);
    }
    let tails: Vec<Value> =
        (0..=6).map(|n| json!({ "n_max": n, "tail": truncation_tail(params, n, x_size).ok() })).collect();
    let result = json!({ "x_size": x_size, "truncation_tails": tails });
    let estimates = vec![Estimate::real("k", params.k, None), Estimate::real("l_prime", params.l_prime, None)];
    Outcome { result, estimates, tables: vec![table] }
}

fn heatbath(model: &BuiltModel, command: &str) -> Result<HeatBathChain, CliError> {
    model.heatbath.clone().ok_or_else(|| CliError::Manifest(format!("{command} needs the heatbath preset")))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn transport(chain: &HeatBathChain, t_left: f64, t_right: f64) -> Result<Outcome, CliError> {
    let equilibrium = currents(chain, &chain.stationary()?)?;
    let sol = self_consistent_profile(chain, t_left, t_right, NewtonOptions::default())?;
    let r = &sol.report;
    let mut sites = Table::new("profile", &["site", "temperature", "bath_current", "conservation_residual"]);
    for x in 0..chain.n() {
        sites.push(vec![
            (x + 1).to_string(),
            float(sol.temperatures[x]),
            float(r.bath_currents[x]),
            float(r.conservation_residuals[x]),
        ]);
    }
    let mut bonds = Table::new("bonds", &["from", "to", "current"]);
    for (k, j) in r.bond_currents.iter().enumerate() {
        bonds.push(vec![(k + 1).to_string(), (k + 2).to_string(), float(*j)]);
    }
    let n = chain.n();
    let result = json!({
        "input_temperatures": {
            "gibbs_residual": if chain.temperatures.windows(2).all(|w| w[0] == w[1]) { Some(chain.gibbs_residual()?) } else { None },
            "max_current": max_abs(&equilibrium.bond_currents).max(max_abs(&equilibrium.bath_currents)),
        },
        "j_sc": sol.j_sc,
        "iterations": sol.iterations,
        "residual_trace": sol.residual_trace,
        "max_bulk_bath_current": max_abs(&r.bath_currents[1..n - 1]),
        "max_conservation_residual": max_abs(&r.conservation_residuals),
        "temperatures": sol.temperatures,
    });
    Ok(Outcome { result, estimates: vec![Estimate::real("j_sc", sol.j_sc, None)], tables: vec![sites, bonds] })
}

fn scaling(chain: &HeatBathChain, t_left: f64, t_right: f64, sizes: &[usize]) -> Result<Outcome, CliError> {
    let rows = fourier_scaling(chain, t_left, t_right, sizes, NewtonOptions::default())?;
    let mut table =
        Table::new("scaling", &["n", "j_sc", "j_sc_times_n", "max_step", "max_step_times_n", "mean_conductivity"]);
    let mut profile = Table::new("profiles", &["n", "site", "temperature"]);
    let mut estimates = Vec::new();
    for r in &rows {
        let mean = (!r.conductivities.is_empty())
            .then(|| r.conductivities.iter().sum::<f64>() / r.conductivities.len() as f64);
        table.push(vec![
            r.n.to_string(),
            float(r.j_sc),
            float(r.j_sc_times_n),
            float(r.max_temperature_step),
            float(r.max_step_times_n),
            cell(mean),
        ]);
        for (x, t) in r.temperatures.iter().enumerate() {
            profile.push(vec![r.n.to_string(), (x + 1).to_string(), float(*t)]);
        }
        estimates.push(Estimate::real(format!("j_sc_times_n@{}", r.n), r.j_sc_times_n, None));
    }
    let products: Vec<f64> = rows.iter().map(|r| r.j_sc_times_n).collect();
    let mean = products.iter().sum::<f64>() / products.len().max(1) as f64;
    let spread = products.iter().map(|p| (p - mean).abs()).fold(0.0, f64::max) / mean.abs();
    let result = json!({ "relative_spread_j_sc_times_n": spread });
    Ok(Outcome { result, estimates, tables: vec![table, profile] })
}

/// Runs the manifest's command. No files are touched.
///
/// # Errors
/// `Manifest` for unusable input, `Core` for library failures.
pub fn execute(manifest: &Manifest, manifest_sha256: &str) -> Result<(Summary, Vec<Table>), CliError> {
    let model = build_model(&manifest.model)?;
    let params = manifest.parameters.as_ref().map(|p| resolve_parameters(p, &model)).transpose()?;
    let p = params.as_ref();
    let obs = manifest.command.observable().map(|f| observable(f, model.q)).transpose()?;
    let outcome = match &manifest.command {
        CommandBlock::Validate => validate(&model, p),
        CommandBlock::Gap => gap(&model)?,
        CommandBlock::Evolve { times, .. } => evolve(&model, obs.as_ref().expect("observable"), times, p)?,
        CommandBlock::Stationary { observable } => {
            stationary(&model, observable, obs.as_ref().expect("observable"), p)?
        }
        CommandBlock::Expand { n_max, weight_floor, .. } => {
            let params = require(p, "expand")?;
            expand(&model, obs.as_ref().expect("observable"), *n_max, weight_floor.unwrap_or(0.0), &params)?
        }
        CommandBlock::Correlations { op, distances, n_max } => correlations(&model, op, distances, *n_max, p)?,
        CommandBlock::Bounds { x_size, times, distances } => {
            bounds(&require(p, "bounds")?, x_size.unwrap_or(1), times, distances)
        }
        CommandBlock::Transport { t_left, t_right } => transport(&heatbath(&model, "transport")?, *t_left, *t_right)?,
        CommandBlock::Scaling { t_left, t_right, sizes } => {
            scaling(&heatbath(&model, "scaling")?, *t_left, *t_right, sizes)?
        }
    };
    let summary = Summary {
        command: manifest.command.name().into(),
        manifest_sha256: manifest_sha256.into(),
        manifest: manifest.clone(),
        parameters: params.as_ref().map(ResolvedParameters::from),
        result: outcome.result,
        estimates: outcome.estimates,
        artifacts: outcome.tables.iter().map(Table::file_name).collect(),
    };
    Ok((summary, outcome.tables))
}
