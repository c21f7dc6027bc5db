//! One-dimensional discrete exterior calculus on a uniform grid.
//!
//! 0-forms live on nodes, 1-forms on the staggered edges `x_{i+1/2}`.
//! The weighted co-derivative is built as the exact discrete adjoint of `d`
//! under the Gibbs-weighted inner products, so
//! `<codiff(a), f>_G == <a, d(f)>_G` holds up to round-off, and the
//! weighted Laplacian `codiff . d` annihilates constants exactly.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::model::GibbsState;
use crate::scalar::Real;

/// Uniform grid on `[x_min, x_max]` with trapezoid node weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    x_min: T,
    x_max: T,
    dx: T,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid(format!("grid needs at least 3 nodes, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Invalid(format!(
                "grid bounds must be finite with x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        let cells = T::from_usize_lossy(n - 1);
        let dx = (x_max - x_min) / cells;
        let nodes = (0..n)
            .map(|i| {
                // Symmetric construction keeps x_{n-1-i} == -x_i bit-for-bit on symmetric domains.
                let a = T::from_usize_lossy(i) / cells;
                let b = T::from_usize_lossy(n - 1 - i) / cells;
                x_min * b + x_max * a
            })
            .collect();
        let mut weights = vec![dx; n];
        let half = dx / (T::one() + T::one());
        weights[0] = half;
        weights[n - 1] = half;
        Ok(Self {
            x_min,
            x_max,
            dx,
            nodes,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Trapezoid weights: `dx` inside, `dx/2` at both ends.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Edge midpoints `x_{i+1/2}`, `n - 1` of them.
    pub fn midpoints(&self) -> Vec<T> {
        let half = T::lit(0.5);
        self.nodes.windows(2).map(|w| (w[0] + w[1]) * half).collect()
    }

    /// Tabulates `f` at the nodes.
    pub fn tabulate(&self, f: impl Fn(T) -> T) -> Field0<T> {
        Field0(self.nodes.iter().map(|&x| f(x)).collect())
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: T) -> usize {
        let t = ((x - self.x_min) / self.dx).round();
        t.max(T::zero()).to_usize().unwrap_or(0).min(self.n() - 1)
    }

    /// Piecewise-linear interpolation of node values at `x` (clamped to the domain).
    pub fn interpolate(&self, f: &Field0<T>, x: T) -> T {
        let n = self.n();
        let t = ((x - self.x_min) / self.dx).max(T::zero());
        let i = t.floor().to_usize().unwrap_or(0).min(n - 2);
        let frac = (t - T::from_usize_lossy(i)).min(T::one());
        f[i] * (T::one() - frac) + f[i + 1] * frac
    }
}

/// Node values of a 0-form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field0<T>(pub Vec<T>);

/// Edge values of a 1-form, one per edge `x_{i+1/2}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field1<T>(pub Vec<T>);

macro_rules! field_common {
    ($name:ident) => {
        impl<T: Real> $name<T> {
            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn values(&self) -> &[T] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<T> {
                self.0
            }

            pub fn constant(len: usize, v: T) -> Self {
                Self(vec![v; len])
            }

            pub fn map(&self, f: impl Fn(T) -> T) -> Self {
                Self(self.0.iter().map(|&v| f(v)).collect())
            }

            pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
                Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
            }

            pub fn scale(&self, s: T) -> Self {
                self.map(|v| v * s)
            }

            pub fn add(&self, other: &Self) -> Self {
                self.zip_map(other, |a, b| a + b)
            }

            pub fn sub(&self, other: &Self) -> Self {
                self.zip_map(other, |a, b| a - b)
            }

            pub fn sup_norm(&self) -> T {
                self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
            }

            pub fn check_finite(&self, what: &'static str) -> Result<()> {
                match self.0.iter().position(|v| !v.is_finite()) {
                    Some(index) => Err(Error::NonFinite { what, index }),
                    None => Ok(()),
                }
            }
        }

        impl<T> Index<usize> for $name<T> {
            type Output = T;
            fn index(&self, i: usize) -> &T {
                &self.0[i]
            }
        }

        impl<T> IndexMut<usize> for $name<T> {
            fn index_mut(&mut self, i: usize) -> &mut T {
                &mut self.0[i]
            }
        }

        impl<T> From<Vec<T>> for $name<T> {
            fn from(v: Vec<T>) -> Self {
                Self(v)
            }
        }
    };
}

field_common!(Field0);
field_common!(Field1);

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::SizeMismatch { what, expected, found });
    }
    Ok(())
}

/// Exterior derivative: `(df)_{i+1/2} = (f_{i+1} - f_i) / dx`.
pub fn d<T: Real>(f: &Field0<T>, grid: &Grid<T>) -> Result<Field1<T>> {
    check_len("0-form", grid.n(), f.len())?;
    let inv_dx = grid.dx().recip();
    Ok(Field1(f.0.windows(2).map(|w| (w[1] - w[0]) * inv_dx).collect()))
}

/// Weighted co-derivative, the `<.,.>_G` adjoint of [`d`] with zero flux
/// through both ends of the domain.
pub fn codiff<T: Real>(alpha: &Field1<T>, gibbs: &GibbsState<T>) -> Result<Field0<T>> {
    let n = gibbs.grid().n();
    check_len("1-form", n - 1, alpha.len())?;
    let rho = gibbs.rho();
    let rho_bar = gibbs.rho_bar();
    let w = gibbs.grid().weights();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let right = if i + 1 < n { rho_bar[i] * alpha[i] } else { T::zero() };
        let left = if i > 0 {
            rho_bar[i - 1] * alpha[i - 1]
        } else {
            T::zero()
        };
        out.push(-(right - left) / (w[i] * rho[i]));
    }
    Ok(Field0(out))
}

/// Borrowed form of either rank, for the rank-checked [`inner`].
#[derive(Debug, Clone, Copy)]
pub enum FormRef<'a, T> {
    Zero(&'a Field0<T>),
    One(&'a Field1<T>),
}

impl<T> FormRef<'_, T> {
    fn rank(&self) -> usize {
        match self {
            FormRef::Zero(_) => 0,
            FormRef::One(_) => 1,
        }
    }
}

/// Gibbs-weighted inner product of two forms of equal rank.
pub fn inner<T: Real>(a: FormRef<'_, T>, b: FormRef<'_, T>, gibbs: &GibbsState<T>) -> Result<T> {
    match (a, b) {
        (FormRef::Zero(a), FormRef::Zero(b)) => gibbs.inner0(a, b),
        (FormRef::One(a), FormRef::One(b)) => gibbs.inner1(a, b),
        (a, b) => Err(Error::RankMismatch {
            left: a.rank(),
            right: b.rank(),
        }),
    }
}

impl<T: Real> GibbsState<T> {
    /// `sum_i w_i rho_i a_i b_i`.
    pub fn inner0(&self, a: &Field0<T>, b: &Field0<T>) -> Result<T> {
        let n = self.grid().n();
        check_len("0-form", n, a.len())?;
        check_len("0-form", n, b.len())?;
        Ok(self
            .mass_weights()
            .iter()
            .zip(a.values().iter().zip(b.values()))
            .map(|(&m, (&x, &y))| m * x * y)
            .sum())
    }

    /// `sum_e dx rho_bar_e a_e b_e`.
    pub fn inner1(&self, a: &Field1<T>, b: &Field1<T>) -> Result<T> {
        let n = self.grid().n();
        check_len("1-form", n - 1, a.len())?;
        check_len("1-form", n - 1, b.len())?;
        let s: T = self
            .rho_bar()
            .iter()
            .zip(a.values().iter().zip(b.values()))
            .map(|(&r, (&x, &y))| r * x * y)
            .sum();
        Ok(s * self.grid().dx())
    }

    /// `||f||_G`.
    pub fn norm0(&self, f: &Field0<T>) -> Result<T> {
        Ok(self.inner0(f, f)?.sqrt())
    }

    /// `<f, 1>_G`, the discrete mass of `rho_G f`.
    pub fn mass(&self, f: &Field0<T>) -> Result<T> {
        check_len("0-form", self.grid().n(), f.len())?;
        Ok(self.mass_weights().iter().zip(f.values()).map(|(&m, &v)| m * v).sum())
    }
}

/// The weighted Laplacian `codiff . d` stored as a tridiagonal matrix.
///
/// Row `i` couples node `i` to its neighbours through the edge weights
/// `rho_bar`. The off-diagonals are `-rho_bar_{i±1/2} / (w_i rho_i dx)` and
/// the diagonal is minus their sum.
#[derive(Debug, Clone)]
pub struct WeightedLaplacian<T> {
    sub: Vec<T>,
    diag: Vec<T>,
    sup: Vec<T>,
    mass: Vec<T>,
    rho_bar: Vec<T>,
    dx: T,
}

impl<T: Real> WeightedLaplacian<T> {
    pub fn new(gibbs: &GibbsState<T>) -> Self {
        let grid = gibbs.grid();
        let n = grid.n();
        let dx = grid.dx();
        let mass = gibbs.mass_weights().to_vec();
        let rho_bar = gibbs.rho_bar().to_vec();
        let mut sub = vec![T::zero(); n];
        let mut sup = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        for i in 0..n {
            let scale = (mass[i] * dx).recip();
            if i > 0 {
                sub[i] = -rho_bar[i - 1] * scale;
            }
            if i + 1 < n {
                sup[i] = -rho_bar[i] * scale;
            }
            diag[i] = -(sub[i] + sup[i]);
        }
        Self {
            sub,
            diag,
            sup,
            mass,
            rho_bar,
            dx,
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Sub-diagonal, `sub[i] = A[i][i-1]` (`sub[0] == 0`).
    pub fn sub(&self) -> &[T] {
        &self.sub
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    /// Super-diagonal, `sup[i] = A[i][i+1]` (`sup[n-1] == 0`).
    pub fn sup(&self) -> &[T] {
        &self.sup
    }

    /// Node masses `w_i rho_i`, the diagonal of the symmetrizer `D`.
    pub fn mass_weights(&self) -> &[T] {
        &self.mass
    }

    /// Applies the operator in flux form; a constant input gives exactly zero.
    pub fn apply(&self, f: &Field0<T>) -> Result<Field0<T>> {
        let n = self.n();
        check_len("0-form", n, f.len())?;
        let flux: Vec<T> = (0..n - 1).map(|e| self.rho_bar[e] * (f[e + 1] - f[e])).collect();
        Ok(Field0(
            (0..n)
                .map(|i| {
                    let right = if i + 1 < n { flux[i] } else { T::zero() };
                    let left = if i > 0 { flux[i - 1] } else { T::zero() };
                    -(right - left) / (self.mass[i] * self.dx)
                })
                .collect(),
        ))
    }

    /// Symmetric tridiagonal `D^{1/2} A D^{-1/2}` as `(diag, offdiag)`.
    pub fn symmetrized(&self) -> (Vec<T>, Vec<T>) {
        let off = (0..self.n() - 1)
            .map(|e| -self.rho_bar[e] / (self.dx * (self.mass[e] * self.mass[e + 1]).sqrt()))
            .collect();
        (self.diag.clone(), off)
    }
}

/// Builds `Δ_G = codiff . d` for the given Gibbs state.
pub fn laplacian<T: Real>(gibbs: &GibbsState<T>) -> WeightedLaplacian<T> {
    WeightedLaplacian::new(gibbs)
}
