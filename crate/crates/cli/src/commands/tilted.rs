//! `tilted`: first gap of the tilted model and the tilted contact dynamics.

use std::sync::Arc;

use anyhow::{Context, Result};
use gfc_core::contact::{rk4_step, tilted_contact_field, Frozen, PsiFunction};
use gfc_core::spectral::{tilted_gap, DEFAULT_DEGENERACY_TOL};
use gfc_core::thermo::moment_observables;
use gfc_core::{
    expand, lambda1_sensitivity, slow_group, slowest_field, vector_field, ContactHamiltonian, ThermoPoint64,
};
use serde_json::{json, Value};

use super::{all_pass, checks_json, map_maybe_parallel, report_failures, Check, Model};
use crate::config::RunConfig;
use crate::output::{num, nums, write_json};

/// Central-difference step for `∂λ̃_1/∂q`.
pub const SENSITIVITY_STEP: f64 = 1e-3;

struct Row {
    q: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
    sensitivity: Vec<f64>,
    field_difference: f64,
    flow_difference: f64,
}

pub fn run(cfg: &RunConfig) -> Result<bool> {
    let model = Model::build(cfg)?;
    let spec = model.spectrum(cfg.modes)?;
    let phi0 = model.initial_state(&cfg.initial, &spec)?;
    let coeffs = expand(&phi0, &spec, cfg.beta)?.coefficients;
    let group = slow_group(&spec, DEFAULT_DEGENERACY_TOL)?;
    let gamma = spec.eigenvalue(group[0]) / cfg.beta;
    let bar0 = slowest_field(&coeffs, &group, &spec, 0.0)?;
    let psi_fn = PsiFunction::new(model.obs.clone(), model.gibbs.clone());
    let steps = cfg.steps()?;

    let one = |q: &Vec<f64>| -> Result<Row> {
        let ctx = || format!("tilted model at q = {q:?}");
        let (lambda1, lambda2) = tilted_gap(&cfg.potential, &model.grid, &model.obs, q).with_context(ctx)?;
        let sensitivity =
            lambda1_sensitivity(&cfg.potential, &model.grid, &model.obs, q, SENSITIVITY_STEP).with_context(ctx)?;
        let psi = Frozen::at(&psi_fn, q)?;
        let (z0, p0) = moment_observables(&bar0, q, &model.obs, &model.gibbs)?;
        let start = ThermoPoint64::new(p0, q.clone(), z0)?;

        let tilted_field = tilted_contact_field(cfg.beta, lambda1, &sensitivity, psi.value(), psi.gradient(), &start)?;
        let plain = ContactHamiltonian::relaxation(gamma, Arc::new(psi.clone()))?;
        let plain_field = vector_field(&plain, &start)?;
        let field_difference = tilted_field
            .q_dot
            .iter()
            .zip(&plain_field.q_dot)
            .chain(tilted_field.p_dot.iter().zip(&plain_field.p_dot))
            .fold((tilted_field.z_dot - plain_field.z_dot).abs(), |m, (a, b)| {
                m.max((a - b).abs())
            });

        let tilted = ContactHamiltonian::Tilted {
            beta: cfg.beta,
            lambda1: Arc::new(Frozen::new(q.clone(), lambda1, sensitivity.clone())),
            psi: Arc::new(psi),
        };
        let (mut a, mut b) = (start.clone(), start);
        let mut flow_difference = 0.0f64;
        for _ in 0..steps {
            a = rk4_step(&tilted, &a, cfg.time.dt)?;
            b = rk4_step(&plain, &b, cfg.time.dt)?;
            flow_difference = flow_difference.max(a.pz_distance(&b));
        }
        Ok(Row {
            q: q.clone(),
            lambda1,
            lambda2,
            sensitivity,
            field_difference,
            flow_difference,
        })
    };
    let rows = map_maybe_parallel(&cfg.q_points, cfg.parallel, one)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let scale = cfg.tolerance_scale;
    let mut checks = Vec::new();
    if let Some(mu) = cfg.gaussian_mu() {
        let exact = cfg.beta / mu;
        for r in &rows {
            let tag = format!("{:?}", r.q);
            let sens = r.sensitivity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let reference = "Gaussian tilted gap beta/mu";
            checks.push(Check::at_most(
                format!("lambda1_tilde q={tag}"),
                reference,
                (r.lambda1 - exact).abs(),
                1e-3 * scale,
            ));
            checks.push(Check::at_most(
                format!("lambda1_tilde_slope q={tag}"),
                reference,
                sens,
                1e-3 * scale,
            ));
            checks.push(Check::at_most(
                format!("tilted_vs_plain_field q={tag}"),
                "tilted contact field reduces to relaxation",
                r.field_difference,
                1e-3 * scale,
            ));
            checks.push(Check::at_most(
                format!("tilted_vs_plain_flow q={tag}"),
                "tilted contact field reduces to relaxation",
                r.flow_difference,
                1e-3 * scale,
            ));
        }
    }
    let table: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "q": nums(&r.q),
                "lambda1": num(r.lambda1),
                "lambda2": num(r.lambda2),
                "sensitivity": nums(&r.sensitivity),
                "field_difference": num(r.field_difference),
                "max_flow_difference": num(r.flow_difference),
            })
        })
        .collect();
    let doc = json!({
        "beta": num(cfg.beta),
        "potential": cfg.potential_label,
        "lambda1_untilted": num(spec.eigenvalue(group[0])),
        "sensitivity_step": num(SENSITIVITY_STEP),
        "t_final": num(steps as f64 * cfg.time.dt),
        "table": Value::Array(table),
        "checks": checks_json(&checks),
        "pass": all_pass(&checks),
    });
    write_json(&cfg.out_dir, "tilted.json", &doc)?;
    report_failures(&checks);
    Ok(all_pass(&checks))
}
