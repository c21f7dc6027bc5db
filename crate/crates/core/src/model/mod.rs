//! Potentials, observables and the Gibbs state they induce on a grid.

mod expr;

pub use expr::{BinOp, Expr, Func};

use crate::error::{Error, Result};
use crate::geometry::{Field0, Grid};
use crate::scalar::Real;

/// Shape of the potential `h`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind<T> {
    /// `h(x) = x² / (2 mu)`.
    Quadratic {
        mu: T,
    },
    /// `h(x) = c_0 + c_1 x + c_2 x² + ...`.
    Polynomial(Vec<T>),
    Expression(Expr),
    /// Node values on a specific grid.
    Tabulated(Vec<T>),
}

/// A potential together with its inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<T> {
    kind: PotentialKind<T>,
    beta: T,
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(Error::Invalid(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(())
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(kind: PotentialKind<T>, beta: T) -> Result<Self> {
        check_beta(beta)?;
        if let PotentialKind::Quadratic { mu } = &kind {
            if !(*mu > T::zero() && mu.is_finite()) {
                return Err(Error::Invalid(format!("mass mu must be positive, got {mu}")));
            }
        }
        Ok(Self { kind, beta })
    }

    pub fn quadratic(mu: T, beta: T) -> Result<Self> {
        Self::new(PotentialKind::Quadratic { mu }, beta)
    }

    /// Parses `src` into an expression potential.
    pub fn expression(src: &str, beta: T) -> Result<Self> {
        Self::new(PotentialKind::Expression(parse_potential(src)?), beta)
    }

    pub fn kind(&self) -> &PotentialKind<T> {
        &self.kind
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn with_beta(&self, beta: T) -> Result<Self> {
        Self::new(self.kind.clone(), beta)
    }

    /// Node values of `h`; fails if any value is not finite.
    pub fn tabulate(&self, grid: &Grid<T>) -> Result<Field0<T>> {
        let h = match &self.kind {
            PotentialKind::Quadratic { mu } => {
                let two_mu = *mu + *mu;
                grid.tabulate(|x| x * x / two_mu)
            }
            PotentialKind::Polynomial(c) => grid.tabulate(|x| c.iter().rev().fold(T::zero(), |acc, &ck| acc * x + ck)),
            PotentialKind::Expression(e) => grid.tabulate(|x| e.eval(x)),
            PotentialKind::Tabulated(v) => {
                if v.len() != grid.n() {
                    return Err(Error::SizeMismatch {
                        what: "tabulated potential",
                        expected: grid.n(),
                        found: v.len(),
                    });
                }
                Field0(v.clone())
            }
        };
        h.check_finite("potential")?;
        Ok(h)
    }
}

/// Parses a potential or observable expression in the variable `x`.
pub fn parse_potential(src: &str) -> Result<Expr> {
    Expr::parse(src)
}

/// Observables `B_1..B_n` tabulated once on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet<T> {
    names: Vec<String>,
    values: Vec<Field0<T>>,
}

impl<T: Real> ObservableSet<T> {
    pub fn new(names: Vec<String>, values: Vec<Field0<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("at least one observable is required".into()));
        }
        if names.len() != values.len() {
            return Err(Error::SizeMismatch {
                what: "observable names",
                expected: values.len(),
                found: names.len(),
            });
        }
        let n = values[0].len();
        for v in &values {
            if v.len() != n {
                return Err(Error::SizeMismatch {
                    what: "observable",
                    expected: n,
                    found: v.len(),
                });
            }
            v.check_finite("observable")?;
        }
        Ok(Self { names, values })
    }

    pub fn from_expressions(exprs: &[&str], grid: &Grid<T>) -> Result<Self> {
        let mut values = Vec::with_capacity(exprs.len());
        for src in exprs {
            let e = Expr::parse(src)?;
            values.push(grid.tabulate(|x| e.eval(x)));
        }
        Self::new(exprs.iter().map(|s| s.to_string()).collect(), values)
    }

    /// Number of observables `n`.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Field0<T>] {
        &self.values
    }

    pub fn get(&self, j: usize) -> &Field0<T> {
        &self.values[j]
    }

    /// `q·B` at every node.
    pub fn contract(&self, q: &[T]) -> Result<Field0<T>> {
        if q.len() != self.dim() {
            return Err(Error::SizeMismatch {
                what: "field vector q",
                expected: self.dim(),
                found: q.len(),
            });
        }
        let n = self.values[0].len();
        Ok(Field0(
            (0..n)
                .map(|i| {
                    q.iter()
                        .zip(&self.values)
                        .fold(T::zero(), |acc, (&qj, b)| acc + qj * b[i])
                })
                .collect(),
        ))
    }
}

/// Normalized Gibbs weight `rho_G = exp(-beta h) / Z_G` on a grid.
#[derive(Debug, Clone)]
pub struct GibbsState<T> {
    grid: Grid<T>,
    beta: T,
    h: Field0<T>,
    rho: Vec<T>,
    log_rho: Vec<T>,
    rho_bar: Vec<T>,
    mass: Vec<T>,
    log_z: T,
}

impl<T: Real> GibbsState<T> {
    /// Tabulates the potential, exponentiates relative to `min h`, and
    /// renormalizes so the trapezoid mass is one.
    pub fn new(potential: &PotentialSpec<T>, grid: &Grid<T>) -> Result<Self> {
        let h = potential.tabulate(grid)?;
        Self::from_tabulated(h, potential.beta(), grid)
    }

    pub fn from_tabulated(h: Field0<T>, beta: T, grid: &Grid<T>) -> Result<Self> {
        check_beta(beta)?;
        if h.len() != grid.n() {
            return Err(Error::SizeMismatch {
                what: "tabulated potential",
                expected: grid.n(),
                found: h.len(),
            });
        }
        h.check_finite("potential")?;
        let h_min = h.values().iter().fold(T::infinity(), |m, &v| m.min(v));
        let w = grid.weights();
        let unnorm: Vec<T> = h.values().iter().map(|&v| (-beta * (v - h_min)).exp()).collect();
        let z_shift: T = unnorm.iter().zip(w).map(|(&r, &wi)| r * wi).sum();
        if !(z_shift > T::zero() && z_shift.is_finite()) {
            return Err(Error::Overflow(format!("partition sum is {z_shift}")));
        }
        let mut rho: Vec<T> = unnorm.iter().map(|&r| r / z_shift).collect();
        // second pass absorbs the rounding of the first division
        let m: T = rho.iter().zip(w).map(|(&r, &wi)| r * wi).sum();
        for r in &mut rho {
            *r = *r / m;
        }
        let log_z_shift = z_shift.ln() + m.ln();
        if let Some(index) = rho.iter().position(|&r| !(r > T::zero())) {
            return Err(Error::NonPositive {
                what: "Gibbs weight (exp(-beta h) underflows; narrow the domain)",
                index,
                x: grid.nodes()[index].to_f64_lossy(),
            });
        }
        let log_rho = h.values().iter().map(|&v| -beta * (v - h_min) - log_z_shift).collect();
        let half = T::lit(0.5);
        let rho_bar = rho.windows(2).map(|p| (p[0] + p[1]) * half).collect();
        let mass = rho.iter().zip(w).map(|(&r, &wi)| r * wi).collect();
        Ok(Self {
            grid: grid.clone(),
            beta,
            h,
            rho,
            log_rho,
            rho_bar,
            mass,
            log_z: log_z_shift - beta * h_min,
        })
    }

    /// Unit weight (`h = 0`); its co-derivative is the unweighted one.
    pub fn flat(grid: &Grid<T>) -> Self {
        Self::from_tabulated(Field0::constant(grid.n(), T::zero()), T::one(), grid)
            .expect("flat weight is always valid")
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Tabulated potential `h`.
    pub fn h(&self) -> &Field0<T> {
        &self.h
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn log_rho(&self) -> &[T] {
        &self.log_rho
    }

    /// Edge weights `(rho_i + rho_{i+1}) / 2`.
    pub fn rho_bar(&self) -> &[T] {
        &self.rho_bar
    }

    /// Node masses `w_i rho_i`.
    pub fn mass_weights(&self) -> &[T] {
        &self.mass
    }

    /// Partition value `Z_G` (trapezoid quadrature of `exp(-beta h)`).
    pub fn partition(&self) -> T {
        self.log_z.exp()
    }

    pub fn log_partition(&self) -> T {
        self.log_z
    }

    pub fn rho_field(&self) -> Field0<T> {
        Field0(self.rho.clone())
    }
}

/// `h̃ = h - beta⁻¹ q·B`, tabulated on `grid`.
pub fn tilt<T: Real>(
    potential: &PotentialSpec<T>,
    q: &[T],
    observables: &ObservableSet<T>,
    grid: &Grid<T>,
) -> Result<PotentialSpec<T>> {
    let h = potential.tabulate(grid)?;
    let qb = observables.contract(q)?;
    if qb.len() != grid.n() {
        return Err(Error::SizeMismatch {
            what: "observables on grid",
            expected: grid.n(),
            found: qb.len(),
        });
    }
    let inv_beta = potential.beta().recip();
    let tilted = h.zip_map(&qb, |hi, b| hi - inv_beta * b);
    PotentialSpec::new(PotentialKind::Tabulated(tilted.into_inner()), potential.beta())
}
