//! `contact`: slowest-mode observables against the contact relaxation flow.

use std::sync::Arc;

use anyhow::{Context, Result};
use gfc_core::contact::{rk4_step, EquivalenceReport, Frozen, PsiFunction};
use gfc_core::spectral::DEFAULT_DEGENERACY_TOL;
use gfc_core::{equivalence_check, expand, slow_group, ContactHamiltonian, ThermoPoint64};
use serde_json::{json, Value};

use super::{all_pass, checks_json, component, map_maybe_parallel, report_failures, Check, Model};
use crate::config::RunConfig;
use crate::output::{num, nums, write_json, Cell, Csv};

struct Run {
    report: EquivalenceReport<f64>,
    rk4: Vec<ThermoPoint64>,
    hamiltonian: Vec<f64>,
    max_rk4: f64,
}

pub fn run(cfg: &RunConfig) -> Result<bool> {
    let model = Model::build(cfg)?;
    let spec = model.spectrum(cfg.modes)?;
    let phi0 = model.initial_state(&cfg.initial, &spec)?;
    let coeffs = expand(&phi0, &spec, cfg.beta)?.coefficients;
    let group = slow_group(&spec, DEFAULT_DEGENERACY_TOL)?;
    let times = cfg.checkpoint_times();
    let steps = cfg.steps()?;
    let m = cfg.time.checkpoints;
    let marks: Vec<usize> = (0..=m)
        .map(|k| ((k * steps) as f64 / m as f64).round() as usize)
        .collect();
    let psi_fn = PsiFunction::new(model.obs.clone(), model.gibbs.clone());

    let one = |q: &Vec<f64>| -> Result<Run> {
        let report = equivalence_check(&model.gibbs, &model.obs, &spec, &coeffs, &group, q, &times)
            .with_context(|| format!("equivalence check at q = {q:?}"))?;
        let psi = Frozen::at(&psi_fn, q)?;
        let h = ContactHamiltonian::relaxation(report.gamma, Arc::new(psi))?;
        let mut pt = report.fokker_planck[0].clone();
        let mut rk4 = Vec::with_capacity(marks.len());
        let mut hamiltonian = Vec::with_capacity(marks.len());
        let mut done = 0;
        for &mark in &marks {
            while done < mark {
                pt = rk4_step(&h, &pt, cfg.time.dt)?;
                done += 1;
            }
            hamiltonian.push(h.value(&pt)?);
            rk4.push(pt.clone());
        }
        let max_rk4 = rk4
            .iter()
            .zip(&report.contact)
            .map(|(a, b)| a.pz_distance(b))
            .fold(0.0, f64::max);
        Ok(Run {
            report,
            rk4,
            hamiltonian,
            max_rk4,
        })
    };
    let runs = map_maybe_parallel(&cfg.q_points, cfg.parallel, one)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let dim = cfg.observables.len();
    let mut header: Vec<String> = (0..dim).map(|j| component("q", j)).collect();
    header.extend(["t", "z_fp", "z_contact", "z_rk4", "hamiltonian"].map(String::from));
    for side in ["p_fp_", "p_contact_", "p_rk4_"] {
        header.extend((0..dim).map(|j| component(side, j)));
    }
    let mut csv = Csv::new(&header);
    for r in &runs {
        let rep = &r.report;
        for (k, &t) in rep.times.iter().enumerate() {
            let mut row: Vec<Cell> = rep.q.iter().map(|&v| Cell::F(v)).collect();
            let (a, b, c) = (&rep.fokker_planck[k], &rep.contact[k], &r.rk4[k]);
            row.extend([
                Cell::F(t),
                Cell::F(a.z),
                Cell::F(b.z),
                Cell::F(c.z),
                Cell::F(r.hamiltonian[k]),
            ]);
            for pt in [a, b, c] {
                row.extend(pt.p.iter().map(|&v| Cell::F(v)));
            }
            csv.row(&row);
        }
    }

    let scale = cfg.tolerance_scale;
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut checks = Vec::new();
    let mut entries = Vec::new();
    for r in &runs {
        let rep = &r.report;
        let tag = format!("{:?}", rep.q);
        let bound = rep.initial_offset * (-rep.gamma * t_end).exp() * (1.0 + 1e-6);
        let local = vec![
            Check::at_most(
                format!("z_discrepancy q={tag}"),
                "slowest-mode Fokker-Planck equals contact relaxation",
                rep.max_z_discrepancy,
                1e-10 * scale,
            ),
            Check::at_most(
                format!("p_discrepancy q={tag}"),
                "slowest-mode Fokker-Planck equals contact relaxation",
                rep.max_p_discrepancy,
                1e-10 * scale,
            ),
            Check::at_most(
                format!("rk4_vs_closed_form q={tag}"),
                "integral curve of the contact Hamiltonian vector field",
                r.max_rk4,
                1e-8 * scale,
            ),
            Check::at_most(
                format!("legendrian_offset q={tag}"),
                "flow converges to the Legendrian submanifold",
                rep.final_offset_contact,
                bound * scale,
            ),
        ];
        entries.push(json!({
            "q": nums(&rep.q),
            "gamma": num(rep.gamma),
            "psi": num(rep.psi),
            "grad_psi": nums(&rep.grad_psi),
            "max_z_discrepancy": num(rep.max_z_discrepancy),
            "max_p_discrepancy": num(rep.max_p_discrepancy),
            "max_rk4_discrepancy": num(r.max_rk4),
            "initial_offset": num(rep.initial_offset),
            "final_offset_fp": num(rep.final_offset_fp),
            "final_offset_contact": num(rep.final_offset_contact),
            "legendrian_bound": num(bound),
            "pass": all_pass(&local),
        }));
        checks.extend(local);
    }
    let fold = |f: &dyn Fn(&Run) -> f64| runs.iter().map(f).fold(0.0, f64::max);
    let doc = json!({
        "beta": num(cfg.beta),
        "potential": cfg.potential_label,
        "slow_group": group,
        "t_final": num(t_end),
        "samples": times.len(),
        "max_z_discrepancy": num(fold(&|r| r.report.max_z_discrepancy)),
        "max_p_discrepancy": num(fold(&|r| r.report.max_p_discrepancy)),
        "max_rk4_discrepancy": num(fold(&|r| r.max_rk4)),
        "runs": Value::Array(entries),
        "checks": checks_json(&checks),
        "pass": all_pass(&checks),
    });
    csv.write(&cfg.out_dir, "contact.csv")?;
    write_json(&cfg.out_dir, "equivalence.json", &doc)?;
    report_failures(&checks);
    Ok(all_pass(&checks))
}
