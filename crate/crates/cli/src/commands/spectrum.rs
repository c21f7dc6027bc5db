//! `spectrum`: eigenvalues of the weighted Laplacian.

use anyhow::Result;

use super::{all_pass, report_failures, Check, Model};
use crate::config::RunConfig;
use crate::output::{Cell, Csv};

pub fn run(cfg: &RunConfig) -> Result<bool> {
    let model = Model::build(cfg)?;
    let spec = model.spectrum(cfg.modes)?;
    let l1 = spec.eigenvalue(1);
    let mut csv = Csv::new(&["s", "lambda", "lambda_over_lambda1", "rate", "eigen_residual"].map(String::from));
    for s in 0..spec.len() {
        let l = spec.eigenvalue(s);
        csv.row(&[
            Cell::I(s),
            Cell::F(l),
            Cell::F(l / l1),
            Cell::F(l / cfg.beta),
            Cell::F(spec.residuals()[s]),
        ]);
    }
    csv.write(&cfg.out_dir, "spectrum.csv")?;

    let scale = cfg.tolerance_scale;
    let mut checks = vec![
        Check::at_most(
            "gram_residual",
            "orthonormal eigenbasis",
            spec.gram_residual(),
            1e-10 * scale,
        ),
        Check::at_most(
            "lambda0",
            "zero mode of the weighted Laplacian",
            spec.eigenvalue(0).abs(),
            1e-10 * scale,
        ),
    ];
    if let Some(mu) = cfg.gaussian_mu() {
        let exact = cfg.beta / mu;
        checks.push(Check::at_most(
            "lambda1_vs_beta_over_mu",
            "Gaussian first eigenvalue beta/mu",
            (l1 - exact).abs() / exact,
            1e-4 * scale,
        ));
    }
    report_failures(&checks);
    Ok(all_pass(&checks))
}
