//! Commands and the pieces they share.

pub mod contact;
pub mod convergence;
pub mod evolve;
pub mod spectrum;
pub mod tilted;
pub mod verify;

use anyhow::{Context, Result};
use gfc_core::evolution::band_limited_state;
use gfc_core::{Expr, GibbsState64, Grid64, ObservableSet64, Spectrum64, StateField64};
use serde_json::{json, Value};

use crate::config::{Initial, RunConfig};
use crate::output::num;

/// Grid, Gibbs state and observables built from a configuration.
pub struct Model {
    pub grid: Grid64,
    pub gibbs: GibbsState64,
    pub obs: ObservableSet64,
}

impl Model {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let d = cfg.domain;
        let grid = Grid64::new(d.min, d.max, d.n).context("building the grid")?;
        let gibbs = GibbsState64::new(&cfg.potential, &grid).context("building the Gibbs state")?;
        let exprs: Vec<&str> = cfg.observables.iter().map(String::as_str).collect();
        let obs = ObservableSet64::from_expressions(&exprs, &grid).context("tabulating observables")?;
        Ok(Self { grid, gibbs, obs })
    }

    pub fn spectrum(&self, k: usize) -> Result<Spectrum64> {
        gfc_core::spectrum_of(&self.gibbs, k).with_context(|| format!("computing {k} eigenpairs"))
    }

    /// `Phi_0` from the configured initial condition.
    pub fn initial_state(&self, initial: &Initial, spec: &Spectrum64) -> Result<StateField64> {
        match initial {
            Initial::Amplitudes(a) => band_limited_state(spec, a).context("building the band-limited initial state"),
            Initial::Expression(src) => {
                let e = Expr::parse(src).context("parsing initial.expression")?;
                let phi = self.grid.tabulate(|x| e.eval(x));
                phi.check_finite("initial state")
                    .context("tabulating initial.expression")?;
                Ok(StateField64::new(phi, 0.0))
            }
        }
    }
}

/// One gated check of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub paper_ref: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual <= tolerance` (and the residual is finite).
    pub fn at_most(name: impl Into<String>, paper_ref: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            paper_ref: paper_ref.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }

    /// Passes when `residual < tolerance` strictly.
    pub fn below(name: impl Into<String>, paper_ref: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            pass: residual.is_finite() && residual < tolerance,
            ..Self::at_most(name, paper_ref, residual, tolerance)
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "paper_ref": self.paper_ref,
            "residual": num(self.residual),
            "tolerance": num(self.tolerance),
            "pass": self.pass,
        })
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

pub fn checks_json(checks: &[Check]) -> Value {
    Value::Array(checks.iter().map(Check::to_json).collect())
}

/// Logs every failing check at warn level.
pub fn report_failures(checks: &[Check]) {
    for c in checks.iter().filter(|c| !c.pass) {
        log::warn!(
            "check failed: {} residual {:e} tolerance {:e}",
            c.name,
            c.residual,
            c.tolerance
        );
    }
}

/// Maps `f` over `items`, in parallel when asked; order is preserved.
pub fn map_maybe_parallel<I, O, F>(items: &[I], parallel: bool, f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    use rayon::prelude::*;
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Column label for component `j` of a q or p vector.
pub fn component(prefix: &str, j: usize) -> String {
    format!("{prefix}{j}")
}
