//! `verify`: every checkable claim on the configured model, one report.
//!
//! Claims with closed-form oracles (eigenvalue, Hermite ladder, ψ_G, tilted
//! gap, first-mode value) are checked only for `h = x²/(2 mu)` with `B = [x]`.

use std::f64::consts::PI;
use std::sync::Arc;

use anyhow::{Context, Result};
use gfc_core::contact::{alt_z_flows, tilted_contact_field, GeneratingFunction, PsiFunction};
use gfc_core::evolution::{band_limited_state, sample};
use gfc_core::spectral::{tilted_gap, DEFAULT_DEGENERACY_TOL};
use gfc_core::{
    codiff, d, equivalence_check, expand, lambda1_sensitivity, laplacian, legendrian, propagate, psi_g, slow_group,
    slowest_field, vector_field, ContactHamiltonian, CrankNicolson, Field1, Spectrum64, ThermoPoint64,
};
use serde_json::{json, Value};

use super::convergence::{order_checks, study};
use super::{all_pass, checks_json, map_maybe_parallel, report_failures, Check, Model};
use crate::config::RunConfig;
use crate::output::{num, write_json};

/// Amplitudes of the eight-mode state used for the evolution cross-check.
pub const EVOLUTION_AMPLITUDES: [f64; 7] = [0.1, -0.08, 0.06, 0.05, -0.04, 0.03, -0.02];
/// Amplitude of the slow mode in the state used for the contact checks.
pub const SLOW_AMPLITUDE: f64 = 0.2;
/// Bound on the constant `C` in `residual ≤ C dx²` for the identities.
pub const IDENTITY_CONSTANT: f64 = 100.0;
const GRAM_MODES: usize = 16;
const ADJOINT_PAIRS: usize = 20;

/// Reported alongside the checks without gating the exit status.
struct Info {
    name: &'static str,
    paper_ref: &'static str,
    value: f64,
    note: String,
}

impl Info {
    fn to_json(&self) -> Value {
        json!({"name": self.name, "paper_ref": self.paper_ref, "value": num(self.value), "note": self.note})
    }
}

struct Report {
    checks: Vec<Check>,
    info: Vec<Info>,
}

impl Report {
    fn push(&mut self, c: Check) {
        log::debug!(
            "{} residual {:e} tolerance {:e} pass {}",
            c.name,
            c.residual,
            c.tolerance,
            c.pass
        );
        self.checks.push(c);
    }
}

pub fn run(cfg: &RunConfig) -> Result<bool> {
    let model = Model::build(cfg)?;
    let spec = model.spectrum(cfg.modes.max(GRAM_MODES))?;
    let s = cfg.tolerance_scale;
    let mut r = Report {
        checks: Vec::new(),
        info: Vec::new(),
    };

    spectral_checks(&model, &spec, s, &mut r)?;
    evolution_checks(cfg, &model, &spec, s, &mut r)?;
    contact_checks(cfg, &model, &spec, s, &mut r)?;
    identity_checks(cfg, s, &mut r)?;
    if let Some(mu) = cfg.gaussian_mu() {
        gaussian_checks(cfg, &model, &spec, mu, s, &mut r)?;
    }

    let pass = all_pass(&r.checks);
    let doc = json!({
        "beta": num(cfg.beta),
        "potential": cfg.potential_label,
        "domain": {"min": num(cfg.domain.min), "max": num(cfg.domain.max), "n": cfg.domain.n},
        "tolerance_scale": num(s),
        "checks": checks_json(&r.checks),
        "informational": Value::Array(r.info.iter().map(Info::to_json).collect()),
        "pass": pass,
    });
    write_json(&cfg.out_dir, "verify.json", &doc)?;
    report_failures(&r.checks);
    log::info!(
        "verify: {} of {} checks pass",
        r.checks.iter().filter(|c| c.pass).count(),
        r.checks.len()
    );
    Ok(pass)
}

fn spectral_checks(model: &Model, spec: &Spectrum64, s: f64, r: &mut Report) -> Result<()> {
    let basis = "orthonormal eigenbasis of the weighted Laplacian";
    r.push(Check::at_most(
        "gram_residual_16",
        basis,
        spec.gram_residual_of(GRAM_MODES),
        1e-10 * s,
    ));
    r.push(Check::at_most("lambda0", basis, spec.eigenvalue(0).abs(), 1e-10 * s));
    let phi0_dev = spec.mode(0).values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    r.push(Check::at_most("phi0_constant", basis, phi0_dev, 1e-8 * s));

    // Deterministic smooth pairs; the identity is exact for any input.
    let grid = &model.grid;
    let mids = grid.midpoints();
    let mut worst = 0.0f64;
    for k in 1..=ADJOINT_PAIRS {
        let kf = k as f64;
        let phi = grid.tabulate(|x| (0.37 * kf * x + kf).sin() + 0.1 * kf * (0.2 * x).cos());
        let alpha = Field1(mids.iter().map(|&x| (0.53 * kf * x - 0.5 * kf).cos()).collect());
        let lhs = model.gibbs.inner0(&codiff(&alpha, &model.gibbs)?, &phi)?;
        let rhs = model.gibbs.inner1(&alpha, &d(&phi, grid)?)?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }
    r.push(Check::at_most(
        "adjointness",
        "co-differential is the adjoint of d in the weighted inner product",
        worst,
        1e-12 * s,
    ));
    Ok(())
}

fn evolution_checks(cfg: &RunConfig, model: &Model, spec: &Spectrum64, s: f64, r: &mut Report) -> Result<()> {
    let phi0 = band_limited_state(spec, &EVOLUTION_AMPLITUDES)?;
    let coeffs = expand(&phi0, spec, cfg.beta)?.coefficients;
    let cn = CrankNicolson::new(&laplacian(&model.gibbs), cfg.beta, cfg.time.dt)?;
    let steps = (1.0 / cfg.time.dt).round() as usize;
    let every = (steps / 100).max(1);
    let m0 = phi0.mass(&model.gibbs)?;
    let mut cur = phi0;
    let mut prev = sample(&cur, &model.gibbs)?;
    let (mut drift, mut rise, mut drop) = (0.0f64, 0.0f64, 0.0f64);
    for step in 1..=steps {
        cur = cn.step(&cur)?;
        drift = drift.max((cur.mass(&model.gibbs)? - m0).abs());
        if step % every == 0 {
            let next = sample(&cur, &model.gibbs)?;
            rise = rise.max(next.lyapunov - prev.lyapunov);
            drop = drop.max(prev.free_energy - next.free_energy);
            prev = next;
        }
    }
    let spectral = propagate(&coeffs, spec, steps as f64 * cfg.time.dt)?;
    let diff = cur.phi.sub(&spectral.phi).sup_norm();
    r.push(Check::at_most(
        "spectral_vs_crank_nicolson",
        "eigenfunction expansion solves the weighted-Laplacian diffusion",
        diff,
        1e-4 * s,
    ));
    r.push(Check::at_most(
        "mass_drift",
        "mass conservation of the diffusion",
        drift,
        1e-10 * s,
    ));
    r.push(Check::at_most(
        "lyapunov_nonincreasing",
        "Lyapunov function of the Fokker-Planck flow",
        rise,
        1e-12 * s,
    ));
    r.push(Check::at_most(
        "free_energy_nondecreasing",
        "free energy along the Wasserstein gradient flow",
        drop,
        1e-10 * s,
    ));
    Ok(())
}

fn contact_checks(cfg: &RunConfig, model: &Model, spec: &Spectrum64, s: f64, r: &mut Report) -> Result<()> {
    let phi0 = band_limited_state(spec, &[SLOW_AMPLITUDE])?;
    let coeffs = expand(&phi0, spec, cfg.beta)?.coefficients;
    let group = slow_group(spec, DEFAULT_DEGENERACY_TOL)?;
    let times = cfg.checkpoint_times();
    let t_end = cfg.time.t_final;
    let reports = map_maybe_parallel(&cfg.q_points, cfg.parallel, |q| {
        equivalence_check(&model.gibbs, &model.obs, spec, &coeffs, &group, q, &times)
            .with_context(|| format!("equivalence at q = {q:?}"))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for rep in &reports {
        let tag = format!("{:?}", rep.q);
        let worst = rep.max_z_discrepancy.max(rep.max_p_discrepancy);
        r.push(Check::at_most(
            format!("equivalence q={tag}"),
            "approximate Fokker-Planck equation and contact Hamiltonian flow",
            worst,
            1e-10 * s,
        ));
        let leg = legendrian(&rep.q, &model.obs, &model.gibbs)?;
        let dist = rep.contact.last().map_or(0.0, |p| p.pz_distance(&leg));
        let bound = rep.initial_offset * (-rep.gamma * t_end).exp() * (1.0 + 1e-6);
        r.push(Check::at_most(
            format!("legendrian_convergence q={tag}"),
            "flow state is on the Legendrian submanifold in the limit",
            dist,
            bound * s,
        ));
    }

    let alt_times = [1.0, 2.0, 4.0, 10.0];
    let alt = alt_z_flows(&model.gibbs, spec, &coeffs, &group, &alt_times)?;
    r.push(Check::at_most(
        "energy_z_ode",
        "energy as the contact z coordinate",
        alt.max_energy_discrepancy,
        1e-8 * s,
    ));
    let res: Vec<f64> = alt.free_energy_residual.iter().map(|v| v.abs()).collect();
    let worst_step = res[..3]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    r.push(Check::below(
        "free_energy_residual_decreasing",
        "free energy as the contact z coordinate",
        worst_step,
        0.0,
    ));
    r.push(Check::at_most(
        "free_energy_residual_t10",
        "free energy as the contact z coordinate",
        res[3],
        1e-6 * s,
    ));
    Ok(())
}

fn identity_checks(cfg: &RunConfig, s: f64, r: &mut Report) -> Result<()> {
    let st = study(cfg)?;
    for c in order_checks(&st, s) {
        r.push(c);
    }
    for (k, name) in st.identities.names.iter().enumerate() {
        let c = st
            .identities
            .dx
            .iter()
            .zip(&st.identities.residuals)
            .map(|(dx, res)| res[k] / (dx * dx))
            .fold(0.0f64, f64::max);
        r.push(Check::at_most(
            format!("second_order_constant {name}"),
            "discrete operator identities",
            c,
            IDENTITY_CONSTANT * s,
        ));
    }
    r.info.push(Info {
        name: "lambda1_observed_order",
        paper_ref: "Gaussian first eigenvalue beta/mu",
        value: st.lambda1_order,
        note: "the flux-form weighted Laplacian reproduces the Gaussian first mode to fourth order; the second-order target is recorded here without gating".into(),
    });
    Ok(())
}

fn gaussian_checks(cfg: &RunConfig, model: &Model, spec: &Spectrum64, mu: f64, s: f64, r: &mut Report) -> Result<()> {
    let beta = cfg.beta;
    let exact = beta / mu;
    let l1 = spec.eigenvalue(1);
    let gauss = "Gaussian example, first eigenvalue beta/mu";
    r.push(Check::at_most(
        "lambda1_vs_beta_over_mu",
        gauss,
        (l1 - exact).abs() / exact,
        1e-4 * s,
    ));
    let ladder = (1..=5)
        .map(|k| (spec.eigenvalue(k) / l1 - k as f64).abs() / k as f64)
        .fold(0.0f64, f64::max);
    r.push(Check::at_most(
        "hermite_ladder",
        "Gaussian spectrum lambda_s = s beta/mu",
        ladder,
        1e-3 * s,
    ));

    let mut psi_err = 0.0f64;
    for k in -10..=10 {
        let q = k as f64 * 0.1;
        let v = psi_g(&[q], &model.obs, &model.gibbs, 0)?.value;
        psi_err = psi_err.max((v - (mu * q * q / (2.0 * beta)).exp()).abs());
    }
    r.push(Check::at_most(
        "psi_g_closed_form",
        "Gaussian generating function",
        psi_err,
        1e-8 * s,
    ));

    let phi0 = band_limited_state(spec, &[SLOW_AMPLITUDE])?;
    let coeffs = expand(&phi0, spec, beta)?.coefficients;
    let x = model.grid.tabulate(|x| x);
    let phi1 = spec.mode(1);
    let kappa = model.gibbs.inner0(phi1, &x)? / model.gibbs.inner0(&x, &x)?;
    let c = coeffs.get(1) * kappa;
    let mut mean_err = 0.0f64;
    for k in 0..=100 {
        let t = k as f64 * 0.1;
        let bar = slowest_field(&coeffs, &[1], spec, t)?;
        let e = model.gibbs.inner0(&bar.phi, &x)?;
        let want = c * (mu / beta) * (-t / mu).exp();
        mean_err = mean_err.max((e - want).abs() / want.abs());
    }
    r.push(Check::at_most(
        "mean_position_decay",
        "average of the momentum x in the Gaussian example",
        mean_err,
        1e-6 * s,
    ));
    let i1 = model.grid.nearest(1.0);
    r.info.push(Info {
        name: "pointwise_mode_amplitude",
        paper_ref: "average of the momentum x in the Gaussian example",
        value: coeffs.get(1) * phi1[i1],
        note: format!(
            "a_0^1 phi_1(1); the slope-based amplitude c = {:.17e} is used in the check since the discrete mode is linear only up to O(dx^2)",
            c
        ),
    });

    tilted_checks(cfg, model, spec, exact, s, r)?;

    let v = phi1[i1];
    let want = (beta / mu).sqrt();
    r.push(Check::at_most(
        "phi1_at_one",
        "first eigenfunction of the Gaussian example",
        (v - want).abs(),
        1e-4 * s,
    ));
    let printed = (beta.powi(3) / (2.0 * PI * mu.powi(3))).powf(0.25);
    r.info.push(Info {
        name: "phi1_at_one_printed_formula_deviation",
        paper_ref: "first eigenfunction of the Gaussian example",
        value: (v - printed).abs(),
        note: format!(
            "computed phi_1(1) = {v:.17e} matches sqrt(beta/mu) = {want:.17e}; the printed closed form (beta^3/(2 pi mu^3))^(1/4) = {printed:.17e} omits the 1/Z_G factor of the normalized Gibbs density, so it normalizes against the unnormalized weight"
        ),
    });
    Ok(())
}

fn tilted_checks(cfg: &RunConfig, model: &Model, spec: &Spectrum64, exact: f64, s: f64, r: &mut Report) -> Result<()> {
    let beta = cfg.beta;
    let reference = "Gaussian tilted gap beta/mu";
    let mut gap_err = 0.0f64;
    let mut slope = 0.0f64;
    for q in [-1.0, 0.0, 1.0] {
        let (l1, _) = tilted_gap(&cfg.potential, &model.grid, &model.obs, &[q])?;
        let g = lambda1_sensitivity(&cfg.potential, &model.grid, &model.obs, &[q], 1e-3)?;
        gap_err = gap_err.max((l1 - exact).abs());
        slope = slope.max(g[0].abs());
    }
    r.push(Check::at_most("tilted_lambda1", reference, gap_err, 1e-3 * s));
    r.push(Check::at_most("tilted_lambda1_slope", reference, slope, 1e-3 * s));

    let psi = PsiFunction::new(model.obs.clone(), model.gibbs.clone());
    let gamma = spec.eigenvalue(1) / beta;
    let plain = ContactHamiltonian::relaxation(gamma, Arc::new(psi.clone()))?;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let kf = k as f64;
        let q = (0.9 * kf + 0.3).sin();
        let pt = ThermoPoint64::new(vec![1.7 * (1.3 * kf).cos()], vec![q], 1.5 + 1.4 * (2.1 * kf).sin())?;
        let (l1, _) = tilted_gap(&cfg.potential, &model.grid, &model.obs, &[q])?;
        let dl = lambda1_sensitivity(&cfg.potential, &model.grid, &model.obs, &[q], 1e-3)?;
        let (pv, pg) = psi.eval(&[q])?;
        let a = tilted_contact_field(beta, l1, &dl, pv, &pg, &pt)?;
        let b = vector_field(&plain, &pt)?;
        worst = worst
            .max((a.z_dot - b.z_dot).abs())
            .max((a.p_dot[0] - b.p_dot[0]).abs());
    }
    r.push(Check::at_most(
        "tilted_vs_relaxation_field",
        "tilted contact field reduces to relaxation",
        worst,
        1e-3 * s,
    ));
    Ok(())
}
