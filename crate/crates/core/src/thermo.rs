//! Moment generating functions and the contact coordinates they induce.
//!
//! Every quadrature of `e^{q·B}` factors out `e^m` with
//! `m = max_i (ln rho_G,i + q·B_i)` so wide domains do not overflow.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::evolution::StateField;
use crate::geometry::{Field0, Grid};
use crate::model::{GibbsState, ObservableSet};
use crate::scalar::Real;

/// A point `(p, q, z)` of `T*R^n x R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoPoint<T> {
    pub p: Vec<T>,
    pub q: Vec<T>,
    pub z: T,
}

impl<T: Real> ThermoPoint<T> {
    pub fn new(p: Vec<T>, q: Vec<T>, z: T) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::SizeMismatch {
                what: "momenta p",
                expected: q.len(),
                found: p.len(),
            });
        }
        let pt = Self { p, q, z };
        if !pt.is_finite() {
            return Err(Error::NonFinite {
                what: "thermodynamic point",
                index: 0,
            });
        }
        Ok(pt)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.p.iter().chain(&self.q).all(|v| v.is_finite())
    }

    /// Euclidean distance in the `(p, z)` coordinates; `q` is ignored.
    pub fn pz_distance(&self, other: &Self) -> T {
        let dz = self.z - other.z;
        self.p
            .iter()
            .zip(&other.p)
            .fold(dz * dz, |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }
}

/// Scaled quadrature weights `w_i rho_G,i e^{q·B_i - m}` and the factor `e^m`.
#[derive(Debug, Clone)]
pub struct TiltedWeights<T> {
    weights: Vec<T>,
    log_scale: T,
}

impl<T: Real> TiltedWeights<T> {
    pub fn new(q: &[T], observables: &ObservableSet<T>, gibbs: &GibbsState<T>) -> Result<Self> {
        let qb = observables.contract(q)?;
        let n = gibbs.grid().n();
        if qb.len() != n {
            return Err(Error::SizeMismatch {
                what: "observables on grid",
                expected: n,
                found: qb.len(),
            });
        }
        let e: Vec<T> = gibbs.log_rho().iter().zip(qb.values()).map(|(&l, &b)| l + b).collect();
        let m = e.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        if !m.is_finite() {
            return Err(Error::Overflow(format!("exponent q·B is {m}")));
        }
        let weights = e
            .iter()
            .zip(gibbs.grid().weights())
            .map(|(&ei, &w)| w * (ei - m).exp())
            .collect();
        Ok(Self { weights, log_scale: m })
    }

    pub fn log_scale(&self) -> T {
        self.log_scale
    }

    /// `sum_i w_i rho_G,i e^{q·B_i} f_i`.
    pub fn integrate(&self, f: impl Fn(usize) -> T) -> Result<T> {
        let s: T = self.weights.iter().enumerate().map(|(i, &w)| w * f(i)).sum();
        let v = s * self.log_scale.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!(
                "moment quadrature overflows (log scale {})",
                self.log_scale
            )));
        }
        Ok(v)
    }
}

/// `ψ_G(q)` and, depending on the requested order, its gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiG<T> {
    pub value: T,
    pub gradient: Option<Vec<T>>,
    pub hessian: Option<Vec<Vec<T>>>,
}

/// `ψ_G(q) = <e^{q·B}, 1>_G` with derivatives up to `order` (0, 1 or 2),
/// each by direct quadrature.
pub fn psi_g<T: Real>(q: &[T], observables: &ObservableSet<T>, gibbs: &GibbsState<T>, order: u8) -> Result<PsiG<T>> {
    if order > 2 {
        return Err(Error::Invalid(format!(
            "derivative order must be 0, 1 or 2, got {order}"
        )));
    }
    let tw = TiltedWeights::new(q, observables, gibbs)?;
    let value = tw.integrate(|_| T::one())?;
    let b = observables.values();
    let gradient = if order >= 1 {
        Some(b.iter().map(|bj| tw.integrate(|i| bj[i])).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let hessian = if order >= 2 {
        let mut h = vec![vec![T::zero(); b.len()]; b.len()];
        for j in 0..b.len() {
            for k in j..b.len() {
                let v = tw.integrate(|i| b[j][i] * b[k][i])?;
                h[j][k] = v;
                h[k][j] = v;
            }
        }
        Some(h)
    } else {
        None
    };
    Ok(PsiG {
        value,
        gradient,
        hessian,
    })
}

/// `z = <Phi, e^{q·B}>_G` and `p_j = <Phi, B_j e^{q·B}>_G`.
pub fn moment_observables<T: Real>(
    state: &StateField<T>,
    q: &[T],
    observables: &ObservableSet<T>,
    gibbs: &GibbsState<T>,
) -> Result<(T, Vec<T>)> {
    let tw = TiltedWeights::new(q, observables, gibbs)?;
    moments_with(&tw, &state.phi, observables)
}

/// Same as [`moment_observables`] against precomputed weights.
pub fn moments_with<T: Real>(
    tw: &TiltedWeights<T>,
    phi: &Field0<T>,
    observables: &ObservableSet<T>,
) -> Result<(T, Vec<T>)> {
    if phi.len() != tw.weights.len() {
        return Err(Error::SizeMismatch {
            what: "0-form",
            expected: tw.weights.len(),
            found: phi.len(),
        });
    }
    let z = tw.integrate(|i| phi[i])?;
    let p = observables
        .values()
        .iter()
        .map(|bj| tw.integrate(|i| bj[i] * phi[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok((z, p))
}

/// The equilibrium point `(∇ψ_G(q), q, ψ_G(q))` on the Legendrian submanifold.
pub fn legendrian<T: Real>(q: &[T], observables: &ObservableSet<T>, gibbs: &GibbsState<T>) -> Result<ThermoPoint<T>> {
    let psi = psi_g(q, observables, gibbs, 1)?;
    ThermoPoint::new(psi.gradient.unwrap_or_default(), q.to_vec(), psi.value)
}

/// `sum_i w_i B_i rho_i` for a density `rho`.
pub fn expectation<T: Real>(rho: &Field0<T>, b: &Field0<T>, grid: &Grid<T>) -> Result<T> {
    let n = grid.n();
    for (what, f) in [("density", rho), ("observable", b)] {
        if f.len() != n {
            return Err(Error::SizeMismatch {
                what,
                expected: n,
                found: f.len(),
            });
        }
    }
    Ok(grid
        .weights()
        .iter()
        .zip(rho.values().iter().zip(b.values()))
        .map(|(&w, (&r, &bi))| w * r * bi)
        .sum())
}

/// `E_t[B] = <Phi_t, B>_G`, the expectation under `rho_G Phi_t`.
pub fn state_expectation<T: Real>(state: &StateField<T>, b: &Field0<T>, gibbs: &GibbsState<T>) -> Result<T> {
    gibbs.inner0(&state.phi, b)
}

/// Smallest eigenvalue of a symmetric matrix (evaluated in `f64`).
pub fn min_eigenvalue<T: Real>(m: &[Vec<T>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return f64::NAN;
    }
    let dm = DMatrix::from_fn(n, n, |i, j| m[i][j].to_f64_lossy());
    dm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{band_limited_state, expand, propagate, slowest_field};
    use crate::model::PotentialSpec;
    use crate::spectral::spectrum_of;

    fn gaussian(n: usize) -> (GibbsState<f64>, ObservableSet<f64>) {
        let grid = Grid::<f64>::new(-10.0, 10.0, n).unwrap();
        let gibbs = GibbsState::new(&PotentialSpec::quadratic(1.0, 1.0).unwrap(), &grid).unwrap();
        let obs = ObservableSet::from_expressions(&["x"], &grid).unwrap();
        (gibbs, obs)
    }

    #[test]
    fn psi_examples() {
        let (g, b) = gaussian(2001);
        let p0 = psi_g(&[0.0], &b, &g, 1).unwrap();
        assert!((p0.value - 1.0).abs() < 1e-14);
        assert!((p0.gradient.unwrap()[0] - g.inner0(b.get(0), &Field0::constant(2001, 1.0)).unwrap()).abs() < 1e-15);
        let e = 0.5f64.exp();
        let p1 = psi_g(&[1.0], &b, &g, 2).unwrap();
        assert!((p1.value - e).abs() < 1e-8, "{}", p1.value);
        assert!((p1.gradient.as_ref().unwrap()[0] - e).abs() < 1e-8);
        // d²/dq² e^{q²/2} = (1 + q²) e^{q²/2}
        assert!((p1.hessian.as_ref().unwrap()[0][0] - 2.0 * e).abs() < 1e-7);
        assert!(psi_g(&[1.0], &b, &g, 3).is_err());
        assert!(psi_g(&[1.0, 2.0], &b, &g, 0).is_err());
    }

    #[test]
    fn log_sum_exp_guard_survives_large_fields() {
        // e^{q B} alone overflows at x = 6; the tilted Gibbs weight does not
        let grid = Grid::<f64>::new(-6.0, 6.0, 1201).unwrap();
        let g = GibbsState::new(&PotentialSpec::expression("x^4/4", 1.0).unwrap(), &grid).unwrap();
        let b = ObservableSet::from_expressions(&["x^3"], &grid).unwrap();
        assert!((4.0f64 * 216.0).exp().is_infinite());
        let p = psi_g(&[4.0], &b, &g, 1).unwrap();
        let shift = 500.0;
        let manual: f64 = (0..grid.n())
            .map(|i| grid.weights()[i] * (g.log_rho()[i] + 4.0 * b.get(0)[i] - shift).exp())
            .sum();
        let want = shift + manual.ln();
        assert!((p.value.ln() - want).abs() < 1e-10 * want, "{} vs {want}", p.value.ln());
        assert!(matches!(psi_g(&[6.0], &b, &g, 0), Err(Error::Overflow(_))));
    }

    #[test]
    fn gradient_matches_finite_differences_and_hessian_is_psd() {
        let grid = Grid::<f64>::new(-6.0, 6.0, 1201).unwrap();
        let g = GibbsState::new(&PotentialSpec::expression("x^4/4 + x/2", 1.5).unwrap(), &grid).unwrap();
        let b = ObservableSet::from_expressions(&["x", "x^2", "sin(x)"], &grid).unwrap();
        let h = 1e-5;
        for q in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [-1.0, 0.1, 0.0]] {
            let p = psi_g(&q, &b, &g, 2).unwrap();
            let grad = p.gradient.unwrap();
            for j in 0..3 {
                let mut qp = q;
                let mut qm = q;
                qp[j] += h;
                qm[j] -= h;
                let fd = (psi_g(&qp, &b, &g, 0).unwrap().value - psi_g(&qm, &b, &g, 0).unwrap().value) / (2.0 * h);
                assert!(
                    (fd - grad[j]).abs() <= 1e-6 * grad[j].abs().max(1.0),
                    "{q:?} {j}: {fd} vs {}",
                    grad[j]
                );
            }
            assert!(min_eigenvalue(&p.hessian.unwrap()) >= -1e-10);
        }
    }

    #[test]
    fn moment_observable_examples() {
        let (g, b) = gaussian(2001);
        let spec = spectrum_of(&g, 4).unwrap();
        let one = StateField::equilibrium(2001);
        let (z, p) = moment_observables(&one, &[0.7], &b, &g).unwrap();
        let psi = psi_g(&[0.7], &b, &g, 1).unwrap();
        assert_eq!(z, psi.value);
        assert_eq!(p, psi.gradient.unwrap());

        let st = band_limited_state(&spec, &[0.2, 0.1]).unwrap();
        let (z, p) = moment_observables(&st, &[0.0], &b, &g).unwrap();
        assert!((z - 1.0).abs() < 1e-12);
        assert!((p[0] - state_expectation(&st, b.get(0), &g).unwrap()).abs() < 1e-14);

        // slowest mode: p(t) = c (μ/β) e^{-t/μ} with c = a¹ φ_1(1)
        let c = expand(&st, &spec, 1.0).unwrap().coefficients;
        let cc = c.get(1) * spec.mode(1)[g.grid().nearest(1.0)];
        for t in [0.0, 1.0, 3.0] {
            let bar = slowest_field(&c, &[1], &spec, t).unwrap();
            let (_, p) = moment_observables(&bar, &[0.0], &b, &g).unwrap();
            let want = cc * (-t).exp();
            assert!((p[0] - want).abs() <= 1e-4 * want.abs(), "{t}: {} vs {want}", p[0]);
        }
    }

    #[test]
    fn legendrian_examples() {
        let (g, b) = gaussian(2001);
        let l0 = legendrian(&[0.0], &b, &g).unwrap();
        assert!(l0.p[0].abs() < 1e-12);
        assert!((l0.z - 1.0).abs() < 1e-14);
        let l1 = legendrian(&[1.0], &b, &g).unwrap();
        assert!((l1.p[0] - 1.6487212707).abs() < 1e-8);
        assert!((l1.z - 1.6487212707).abs() < 1e-8);
    }

    #[test]
    fn expectation_examples() {
        let (g, _) = gaussian(2001);
        let grid = g.grid();
        let rho = g.rho_field();
        assert!((expectation(&rho, &Field0::constant(2001, 1.0), grid).unwrap() - 1.0).abs() < 1e-14);
        assert!(expectation(&rho, &grid.tabulate(|x| x), grid).unwrap().abs() < 1e-10);
        assert!((expectation(&rho, &grid.tabulate(|x| x * x), grid).unwrap() - 1.0).abs() < 1e-6);
        assert!(expectation(&Field0(vec![1.0; 3]), &rho, grid).is_err());
    }

    #[test]
    fn mode_expectations_are_coefficients() {
        let (g, _) = gaussian(1001);
        let spec = spectrum_of(&g, 8).unwrap();
        let st = band_limited_state(&spec, &[0.1, 0.05, -0.05, 0.02]).unwrap();
        let c = expand(&st, &spec, 1.0).unwrap().coefficients;
        let t = 0.6;
        let phi_t = propagate(&c, &spec, t).unwrap();
        let at = c.advance(t);
        for s in 0..8 {
            let e = state_expectation(&phi_t, spec.mode(s), &g).unwrap();
            assert!((e - at.get(s)).abs() <= 1e-10, "{s}");
        }
    }

    #[test]
    fn full_and_slowest_expectations_share_asymptotics() {
        let (g, b) = gaussian(1001);
        let spec = spectrum_of(&g, 8).unwrap();
        let st = band_limited_state(&spec, &[0.1, 0.08, 0.06, 0.04]).unwrap();
        let c = expand(&st, &spec, 1.0).unwrap().coefficients;
        let x2 = g.grid().tabulate(|x| x * x);
        let mut prev = f64::INFINITY;
        for t in [1.0, 2.0, 4.0, 8.0] {
            let full = state_expectation(&propagate(&c, &spec, t).unwrap(), &x2, &g).unwrap();
            let bar = state_expectation(&slowest_field(&c, &[1], &spec, t).unwrap(), &x2, &g).unwrap();
            let gap = (full - bar).abs();
            let bound = (-spec.eigenvalue(2) * t).exp();
            assert!(gap <= bound, "{t}: {gap}");
            assert!(gap < prev);
            prev = gap;
        }
        let _ = b;
    }

    #[test]
    fn point_validation() {
        assert!(ThermoPoint::new(vec![1.0], vec![], 0.0).is_err());
        assert!(ThermoPoint::new(vec![f64::NAN], vec![0.0], 0.0).is_err());
        let a = ThermoPoint::new(vec![3.0], vec![0.0], 0.0).unwrap();
        let b = ThermoPoint::new(vec![0.0], vec![9.0], 4.0).unwrap();
        assert_eq!(a.pz_distance(&b), 5.0);
    }
}
