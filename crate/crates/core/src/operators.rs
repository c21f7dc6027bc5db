//! Alternative forms of the relaxation operator and the identities tying
//! them to `Δ_G`.
//!
//! The unweighted co-derivative is `codiff` against a flat Gibbs state.
//! First derivatives live on edges; the metric pairing of two 1-forms at a
//! node is the mean of the products on its adjacent edges.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{codiff, d, laplacian, Field0, Field1, Grid};
use crate::model::GibbsState;
use crate::scalar::Real;

/// Named operator variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorVariant {
    FpRhs,
    LBetaH,
    DeltaW,
    DDaggerD,
    LiRhs,
}

impl OperatorVariant {
    pub const ALL: [OperatorVariant; 5] = [
        OperatorVariant::FpRhs,
        OperatorVariant::LBetaH,
        OperatorVariant::DeltaW,
        OperatorVariant::DDaggerD,
        OperatorVariant::LiRhs,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            OperatorVariant::FpRhs => "fp_rhs",
            OperatorVariant::LBetaH => "L_beta_h",
            OperatorVariant::DeltaW => "delta_W",
            OperatorVariant::DDaggerD => "D_dagger_D",
            OperatorVariant::LiRhs => "li_rhs",
        }
    }
}

impl fmt::Display for OperatorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for OperatorVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown operator variant `{s}`")))
    }
}

fn flat_codiff<T: Real>(alpha: &Field1<T>, grid: &Grid<T>) -> Result<Field0<T>> {
    codiff(alpha, &GibbsState::flat(grid))
}

/// Unweighted `d†d`.
pub fn flat_laplacian<T: Real>(f: &Field0<T>, grid: &Grid<T>) -> Result<Field0<T>> {
    flat_codiff(&d(f, grid)?, grid)
}

/// Node value of `g(a♯, b♯)`: mean of `a_e b_e` over the adjacent edges.
pub fn metric_pairing<T: Real>(a: &Field1<T>, b: &Field1<T>) -> Result<Field0<T>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::SizeMismatch {
            what: "1-form",
            expected: a.len(),
            found: b.len(),
        });
    }
    let m = a.len();
    let prod: Vec<T> = a.values().iter().zip(b.values()).map(|(&x, &y)| x * y).collect();
    let half = T::lit(0.5);
    Ok(Field0(
        (0..=m)
            .map(|i| match i {
                0 => prod[0],
                _ if i == m => prod[m - 1],
                _ => half * (prod[i - 1] + prod[i]),
            })
            .collect(),
    ))
}

fn edge_mean<T: Real>(f: &Field0<T>) -> Field1<T> {
    let half = T::lit(0.5);
    Field1(f.values().windows(2).map(|w| half * (w[0] + w[1])).collect())
}

fn check_n<T: Real>(f: &Field0<T>, gibbs: &GibbsState<T>) -> Result<()> {
    if f.len() != gibbs.grid().n() {
        return Err(Error::SizeMismatch {
            what: "0-form",
            expected: gibbs.grid().n(),
            found: f.len(),
        });
    }
    Ok(())
}

/// Conservative Fokker-Planck right-hand side
/// `-codiff(beta⁻¹ dρ + ρ̄ dh)` with the unweighted co-derivative.
pub fn fp_rhs<T: Real>(rho: &Field0<T>, gibbs: &GibbsState<T>) -> Result<Field0<T>> {
    check_n(rho, gibbs)?;
    let grid = gibbs.grid();
    let inv_beta = gibbs.beta().recip();
    let drho = d(rho, grid)?;
    let dh = d(gibbs.h(), grid)?;
    let rho_bar = edge_mean(rho);
    let flux = Field1(
        (0..drho.len())
            .map(|e| inv_beta * drho[e] + rho_bar[e] * dh[e])
            .collect(),
    );
    Ok(flat_codiff(&flux, grid)?.scale(-T::one()))
}

/// `L_{beta,h} Phi = beta⁻¹ d†d Phi + g(dPhi, dh)`.
pub fn l_beta_h<T: Real>(phi: &Field0<T>, gibbs: &GibbsState<T>) -> Result<Field0<T>> {
    check_n(phi, gibbs)?;
    let grid = gibbs.grid();
    let lap = flat_laplacian(phi, grid)?;
    let drift = metric_pairing(&d(phi, grid)?, &d(gibbs.h(), grid)?)?;
    let inv_beta = gibbs.beta().recip();
    Ok(lap.zip_map(&drift, |a, b| inv_beta * a + b))
}

/// Right-hand side of the ground-state-transformed equation, `-L_{beta,h} Phi`.
pub fn li_rhs<T: Real>(phi: &Field0<T>, gibbs: &GibbsState<T>) -> Result<Field0<T>> {
    Ok(l_beta_h(phi, gibbs)?.scale(-T::one()))
}

/// Witten derivative `e^{beta h} d e^{-beta h}` as an exact conjugation by
/// the node weights: `(d_W f)_e = (rho_{i+1} f_{i+1} - rho_i f_i) / (dx rhō_e)`.
pub fn witten_d<T: Real>(f: &Field0<T>, gibbs: &GibbsState<T>) -> Result<Field1<T>> {
    check_n(f, gibbs)?;
    let rho = gibbs.rho();
    let inv_dx = gibbs.grid().dx().recip();
    Ok(Field1(
        gibbs
            .rho_bar()
            .iter()
            .enumerate()
            .map(|(e, &rb)| (rho[e + 1] * f[e + 1] - rho[e] * f[e]) * inv_dx / rb)
            .collect(),
    ))
}

/// `Δ_W f = d† d_W f` with the unweighted co-derivative.
pub fn delta_w<T: Real>(f: &Field0<T>, gibbs: &GibbsState<T>) -> Result<Field0<T>> {
    flat_codiff(&witten_d(f, gibbs)?, gibbs.grid())
}

/// `D†D f` evaluated directly and through its expansion
/// `d†d f + beta f d†dh + beta² f g(dh, dh)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DDaggerD<T> {
    pub direct: Field0<T>,
    pub expanded: Field0<T>,
}

pub fn d_dagger_d<T: Real>(f: &Field0<T>, gibbs: &GibbsState<T>) -> Result<DDaggerD<T>> {
    check_n(f, gibbs)?;
    let grid = gibbs.grid();
    let n = grid.n();
    let beta = gibbs.beta();
    let h = gibbs.h();
    let inv_dx = grid.dx().recip();
    let h_edge = edge_mean(h);
    // D f = e^{-beta h} d (e^{beta h} f), each exponent taken relative to the edge
    let df = Field1(
        (0..n - 1)
            .map(|e| {
                let up = (beta * (h[e + 1] - h_edge[e])).exp();
                let down = (beta * (h[e] - h_edge[e])).exp();
                (up * f[e + 1] - down * f[e]) * inv_dx
            })
            .collect(),
    );
    // D† a = e^{beta h} d† (e^{-beta h} a), relative to the node
    let w = grid.weights();
    let direct = Field0(
        (0..n)
            .map(|i| {
                let right = if i + 1 < n {
                    (beta * (h[i] - h_edge[i])).exp() * df[i]
                } else {
                    T::zero()
                };
                let left = if i > 0 {
                    (beta * (h[i] - h_edge[i - 1])).exp() * df[i - 1]
                } else {
                    T::zero()
                };
                -(right - left) / w[i]
            })
            .collect(),
    );
    let dh = d(h, grid)?;
    let lap_f = flat_laplacian(f, grid)?;
    let lap_h = flat_laplacian(h, grid)?;
    let g_hh = metric_pairing(&dh, &dh)?;
    let expanded = Field0(
        (0..n)
            .map(|i| lap_f[i] + beta * f[i] * lap_h[i] + beta * beta * f[i] * g_hh[i])
            .collect(),
    );
    Ok(DDaggerD { direct, expanded })
}

/// Output of [`witten_variants`]; `secondary` carries the expanded form of
/// `D†D` and is empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantOutput<T> {
    pub primary: Field0<T>,
    pub secondary: Option<Field0<T>>,
}

/// Dispatches on the variant tag.
pub fn witten_variants<T: Real>(
    f: &Field0<T>,
    gibbs: &GibbsState<T>,
    tag: OperatorVariant,
) -> Result<VariantOutput<T>> {
    let single = |primary| VariantOutput {
        primary,
        secondary: None,
    };
    Ok(match tag {
        OperatorVariant::FpRhs => single(fp_rhs(f, gibbs)?),
        OperatorVariant::LBetaH => single(l_beta_h(f, gibbs)?),
        OperatorVariant::DeltaW => single(delta_w(f, gibbs)?),
        OperatorVariant::LiRhs => single(li_rhs(f, gibbs)?),
        OperatorVariant::DDaggerD => {
            let r = d_dagger_d(f, gibbs)?;
            VariantOutput {
                primary: r.direct,
                secondary: Some(r.expanded),
            }
        }
    })
}

/// Max interior residual of each identity for one grid and one test field,
/// relative to the interior sup norm of the reference side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals<T> {
    pub dx: T,
    /// `Δ_G Phi` vs `beta L_{beta,h} Phi`.
    pub laplacian_vs_l: T,
    /// `li_rhs(Phi)` vs `-beta⁻¹ Δ_G Phi`.
    pub li_vs_laplacian: T,
    /// `fp_rhs(rho_G Phi)` vs `-beta⁻¹ rho_G Δ_G Phi`.
    pub fp_vs_laplacian: T,
    /// `D†D` direct vs expanded.
    pub d_dagger_d: T,
    /// `fp_rhs(rho) + beta⁻¹ Δ_W rho` vs `-2 d†(rhō dh)`.
    pub sign_difference: T,
}

fn interior_max<T: Real>(a: &Field0<T>, b: &Field0<T>) -> T {
    let n = a.len();
    (1..n - 1).fold(T::zero(), |m, i| m.max((a[i] - b[i]).abs()))
}

// Interior residual relative to the interior sup norm of the reference `b`.
fn interior_rel<T: Real>(a: &Field0<T>, b: &Field0<T>) -> T {
    let n = b.len();
    let scale = (1..n - 1).fold(T::zero(), |m, i| m.max(b[i].abs()));
    interior_max(a, b) / scale.max(T::min_positive_value())
}

/// Evaluates every identity on `phi` (node values on the Gibbs grid).
pub fn identity_residuals<T: Real>(phi: &Field0<T>, gibbs: &GibbsState<T>) -> Result<IdentityResiduals<T>> {
    check_n(phi, gibbs)?;
    let grid = gibbs.grid();
    let beta = gibbs.beta();
    let inv_beta = beta.recip();
    let lap_g = laplacian(gibbs).apply(phi)?;
    let l = l_beta_h(phi, gibbs)?;
    let li = li_rhs(phi, gibbs)?;
    let rho = Field0(gibbs.rho().to_vec());
    let rho_phi = rho.zip_map(phi, |r, p| r * p);
    let fp = fp_rhs(&rho_phi, gibbs)?;
    let fp_want = rho.zip_map(&lap_g, |r, a| -inv_beta * r * a);
    let ddd = d_dagger_d(phi, gibbs)?;

    let lhs = fp_rhs(&rho_phi, gibbs)?.add(&delta_w(&rho_phi, gibbs)?.scale(inv_beta));
    let dh = d(gibbs.h(), grid)?;
    let flux = edge_mean(&rho_phi)
        .0
        .iter()
        .zip(dh.values())
        .map(|(&r, &g)| r * g)
        .collect();
    let rhs = flat_codiff(&Field1(flux), grid)?.scale(-T::lit(2.0));

    Ok(IdentityResiduals {
        dx: grid.dx(),
        laplacian_vs_l: interior_rel(&lap_g, &l.scale(beta)),
        li_vs_laplacian: interior_rel(&li, &lap_g.scale(-inv_beta)),
        fp_vs_laplacian: interior_rel(&fp, &fp_want),
        d_dagger_d: interior_rel(&ddd.direct, &ddd.expanded),
        sign_difference: interior_rel(&lhs, &rhs),
    })
}
