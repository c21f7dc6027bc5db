//! Grid-refinement studies and observed convergence orders.

use crate::error::{Error, Result};
use crate::geometry::{Field0, Grid};
use crate::model::{Expr, GibbsState, PotentialSpec};
use crate::operators::{identity_residuals, IdentityResiduals};
use crate::scalar::Real;
use crate::spectral::spectrum_of;

/// Grid sizes used by the refinement studies (successive halving of `dx`).
pub const STUDY_SIZES: [usize; 4] = [251, 501, 1001, 2001];

/// Least-squares slope of `ln err` against `ln dx`.
pub fn fit_order(dx: &[f64], err: &[f64]) -> Result<f64> {
    if dx.len() != err.len() || dx.len() < 2 {
        return Err(Error::Invalid(format!(
            "order fit needs at least two matching samples, got {} and {}",
            dx.len(),
            err.len()
        )));
    }
    if let Some(i) = dx.iter().chain(err).position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositive {
            what: "order-fit sample",
            index: i % dx.len(),
            x: f64::NAN,
        });
    }
    let xs: Vec<f64> = dx.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `log2(err_k / err_{k+1})` for consecutive halvings.
pub fn log2_ratios(err: &[f64]) -> Vec<f64> {
    err.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// One row of the Gaussian eigenvalue study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda1Sample {
    pub n: usize,
    pub dx: f64,
    pub lambda1: f64,
    pub rel_error: f64,
}

/// `λ_1` of `h = x²/(2 mu)` on `[-half_width, half_width]` against `beta/mu`.
pub fn gaussian_lambda1<T: Real>(beta: T, mu: T, half_width: T, n: usize) -> Result<Lambda1Sample> {
    let grid = Grid::new(-half_width, half_width, n)?;
    let gibbs = GibbsState::new(&PotentialSpec::quadratic(mu, beta)?, &grid)?;
    let spec = spectrum_of(&gibbs, 2)?;
    let exact = (beta / mu).to_f64_lossy();
    let lambda1 = spec.eigenvalue(1).to_f64_lossy();
    Ok(Lambda1Sample {
        n,
        dx: grid.dx().to_f64_lossy(),
        lambda1,
        rel_error: (lambda1 - exact).abs() / exact,
    })
}

/// Identity residuals for a test field given as an expression in `x`.
pub fn identity_sample<T: Real>(
    potential: &PotentialSpec<T>,
    field: &Expr,
    x_min: T,
    x_max: T,
    n: usize,
) -> Result<IdentityResiduals<T>> {
    let grid = Grid::new(x_min, x_max, n)?;
    let gibbs = GibbsState::new(potential, &grid)?;
    let phi: Field0<T> = grid.tabulate(|x| field.eval(x));
    phi.check_finite("test field")?;
    identity_residuals(&phi, &gibbs)
}

/// Per-identity columns of a refinement study with their fitted orders.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityStudy {
    pub names: [&'static str; 5],
    pub dx: Vec<f64>,
    pub residuals: Vec<[f64; 5]>,
    pub orders: [f64; 5],
}

impl IdentityStudy {
    pub const NAMES: [&'static str; 5] = [
        "laplacian_vs_beta_l",
        "li_rhs_vs_laplacian",
        "fp_rhs_vs_laplacian",
        "d_dagger_d_direct_vs_expanded",
        "fp_plus_witten_vs_drift",
    ];

    /// Assembles a study from per-grid samples (any order of `n`).
    pub fn from_samples<T: Real>(samples: &[IdentityResiduals<T>]) -> Result<Self> {
        let mut rows: Vec<(f64, [f64; 5])> = samples
            .iter()
            .map(|s| {
                (
                    s.dx.to_f64_lossy(),
                    [
                        s.laplacian_vs_l.to_f64_lossy(),
                        s.li_vs_laplacian.to_f64_lossy(),
                        s.fp_vs_laplacian.to_f64_lossy(),
                        s.d_dagger_d.to_f64_lossy(),
                        s.sign_difference.to_f64_lossy(),
                    ],
                )
            })
            .collect();
        rows.sort_by(|a, b| b.0.total_cmp(&a.0));
        let dx: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let residuals: Vec<[f64; 5]> = rows.iter().map(|r| r.1).collect();
        let mut orders = [0.0; 5];
        for (k, o) in orders.iter_mut().enumerate() {
            let col: Vec<f64> = residuals.iter().map(|r| r[k]).collect();
            *o = fit_order(&dx, &col)?;
        }
        Ok(Self {
            names: Self::NAMES,
            dx,
            residuals,
            orders,
        })
    }
}
