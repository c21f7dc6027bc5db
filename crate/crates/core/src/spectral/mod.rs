//! Eigenpairs of the weighted Laplacian.
//!
//! Eigenvalues come from Sturm bisection on the symmetrized matrix
//! `D^{1/2} A D^{-1/2}`. Eigenvectors are then obtained by inverse iteration
//! on `A` itself, which keeps node values accurate in the far tails where
//! `rho_G` is tiny and mapping back through `D^{-1/2}` would amplify noise.

pub mod tridiag;

use crate::error::{Error, Result};
use crate::geometry::{laplacian, Field0, Grid, WeightedLaplacian};
use crate::model::{tilt, GibbsState, ObservableSet, PotentialSpec};
use crate::scalar::Real;

use tridiag::{smallest_eigenvalues, TridiagonalLu};

/// Relative tolerance for grouping eigenvalues as degenerate.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
/// Number of modes computed when none is requested.
pub const DEFAULT_MODES: usize = 32;
/// Residual bound `||A phi - lambda phi||_G` accepted per eigenpair.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;
/// Guard against `lambda_1 ≈ 0` in relative comparisons.
pub const GAP_FLOOR: f64 = 1e-14;

const MAX_INVERSE_ITERATIONS: usize = 12;

/// Ascending eigenpairs with `<.,.>_G`-orthonormal modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    eigenvalues: Vec<T>,
    modes: Vec<Field0<T>>,
    residuals: Vec<T>,
    gram_residual: T,
    degeneracy_groups: Vec<Vec<usize>>,
    mass: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, s: usize) -> T {
        self.eigenvalues[s]
    }

    pub fn modes(&self) -> &[Field0<T>] {
        &self.modes
    }

    pub fn mode(&self, s: usize) -> &Field0<T> {
        &self.modes[s]
    }

    /// `||Δ_G phi_s - lambda_s phi_s||_G` per mode.
    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    /// `max |<phi_s, phi_t>_G - delta_st|` over the computed modes.
    pub fn gram_residual(&self) -> T {
        self.gram_residual
    }

    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.degeneracy_groups
    }

    /// Node masses `w_i rho_i` defining `<.,.>_G`.
    pub fn mass_weights(&self) -> &[T] {
        &self.mass
    }

    pub fn inner(&self, a: &Field0<T>, b: &Field0<T>) -> T {
        weighted_dot(&self.mass, a.values(), b.values())
    }

    /// Gram residual of the first `m` modes only.
    pub fn gram_residual_of(&self, m: usize) -> T {
        gram_residual(&self.mass, &self.modes[..m.min(self.len())])
    }

    /// Builds a spectrum from explicit data (used for constructed test cases).
    pub fn from_parts(eigenvalues: Vec<T>, modes: Vec<Field0<T>>, mass: Vec<T>) -> Result<Self> {
        if eigenvalues.len() != modes.len() {
            return Err(Error::SizeMismatch {
                what: "modes",
                expected: eigenvalues.len(),
                found: modes.len(),
            });
        }
        let gram = gram_residual(&mass, &modes);
        let groups = group_degenerate(&eigenvalues, T::lit(DEFAULT_DEGENERACY_TOL));
        Ok(Self {
            residuals: vec![T::zero(); eigenvalues.len()],
            eigenvalues,
            modes,
            gram_residual: gram,
            degeneracy_groups: groups,
            mass,
        })
    }
}

fn weighted_dot<T: Real>(mass: &[T], a: &[T], b: &[T]) -> T {
    mass.iter().zip(a.iter().zip(b)).map(|(&m, (&x, &y))| m * x * y).sum()
}

fn gram_residual<T: Real>(mass: &[T], modes: &[Field0<T>]) -> T {
    let mut worst = T::zero();
    for (s, a) in modes.iter().enumerate() {
        for (t, b) in modes.iter().enumerate().skip(s) {
            let target = if s == t { T::one() } else { T::zero() };
            worst = worst.max((weighted_dot(mass, a.values(), b.values()) - target).abs());
        }
    }
    worst
}

fn group_degenerate<T: Real>(eigenvalues: &[T], rel_tol: T) -> Vec<Vec<usize>> {
    let floor = T::lit(GAP_FLOOR);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (s, &lam) in eigenvalues.iter().enumerate() {
        if let Some(g) = groups.last_mut() {
            let head = eigenvalues[g[0]];
            if (lam - head).abs() <= rel_tol * head.abs().max(floor) {
                g.push(s);
                continue;
            }
        }
        groups.push(vec![s]);
    }
    groups
}

// Deterministic start vector with components in [0.5, 1.5).
fn start_vector<T: Real>(n: usize, seed: usize) -> Vec<T> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15 ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            T::lit(0.5 + (state >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect()
}

// Largest-magnitude entry positive; near-ties go to the rightmost node.
fn fix_sign<T: Real>(v: &mut [T]) {
    let big = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let cut = big * (T::one() - T::lit(1e-6));
    if let Some(pivot) = v.iter().rposition(|x| x.abs() >= cut) {
        if v[pivot] < T::zero() {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Computes the `k` smallest eigenpairs of `lap`; each must reach
/// `||Δ_G phi - lambda phi||_G <= tol`.
pub fn eigendecompose<T: Real>(lap: &WeightedLaplacian<T>, k: usize, tol: T) -> Result<Spectrum<T>> {
    let n = lap.n();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("mode count must be in 1..={n}, got {k}")));
    }
    if !(tol > T::zero()) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (sdiag, soff) = lap.symmetrized();
    let shifts = smallest_eigenvalues(&sdiag, &soff, k);
    let mass = lap.mass_weights().to_vec();
    let norm = sdiag.iter().fold(T::zero(), |m, &v| m.max(v.abs() + v.abs()));
    let perturb = T::epsilon() * norm.max(T::one());

    let mut eigenvalues = Vec::with_capacity(k);
    let mut modes: Vec<Field0<T>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let shifted_diag = |sigma: T| lap.diag().iter().map(|&v| v - sigma).collect::<Vec<_>>();

    for (s, &sigma) in shifts.iter().enumerate() {
        let lu = TridiagonalLu::factor(lap.sub(), &shifted_diag(sigma), lap.sup(), Some(perturb))?;
        let mut v = start_vector::<T>(n, s);
        let mut best: Option<(T, T, Vec<T>)> = None;
        for it in 0..MAX_INVERSE_ITERATIONS {
            lu.solve_in_place(&mut v);
            // two Gram-Schmidt sweeps against the modes already accepted
            for _ in 0..2 {
                for m in &modes {
                    let c = weighted_dot(&mass, &v, m.values());
                    for (x, &y) in v.iter_mut().zip(m.values()) {
                        *x = *x - c * y;
                    }
                }
            }
            let nrm = weighted_dot(&mass, &v, &v).sqrt();
            if !(nrm > T::zero() && nrm.is_finite()) {
                return Err(Error::NoConvergence {
                    what: "inverse iteration",
                    iterations: it + 1,
                    residual: f64::NAN,
                });
            }
            for x in v.iter_mut() {
                *x = *x / nrm;
            }
            let phi = Field0(v.clone());
            let av = lap.apply(&phi)?;
            let lam = weighted_dot(&mass, av.values(), &v);
            let r: Vec<T> = av.values().iter().zip(&v).map(|(&a, &x)| a - lam * x).collect();
            let res = weighted_dot(&mass, &r, &r).sqrt();
            let improved = best.as_ref().is_none_or(|(_, b, _)| res < *b);
            if improved {
                best = Some((lam, res, v.clone()));
            }
            if it >= 1 && (res <= tol * T::lit(1e-2) || !improved) {
                break;
            }
        }
        let (lam, res, mut vec) = best.expect("at least one iteration");
        if !(res <= tol) {
            return Err(Error::NoConvergence {
                what: "inverse iteration",
                iterations: MAX_INVERSE_ITERATIONS,
                residual: res.to_f64_lossy(),
            });
        }
        fix_sign(&mut vec);
        eigenvalues.push(lam);
        residuals.push(res);
        modes.push(Field0(vec));
    }

    // Rayleigh quotients can reorder nearly equal shifts; keep ascending order.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[a]
            .partial_cmp(&eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| eigenvalues[i]).collect();
    let modes: Vec<Field0<T>> = order.iter().map(|&i| modes[i].clone()).collect();
    let residuals: Vec<T> = order.iter().map(|&i| residuals[i]).collect();

    let gram = gram_residual(&mass, &modes);
    let groups = group_degenerate(&eigenvalues, T::lit(DEFAULT_DEGENERACY_TOL));
    Ok(Spectrum {
        eigenvalues,
        modes,
        residuals,
        gram_residual: gram,
        degeneracy_groups: groups,
        mass,
    })
}

/// Convenience: Gibbs state -> Laplacian -> `k` eigenpairs at the default tolerance.
pub fn spectrum_of<T: Real>(gibbs: &GibbsState<T>, k: usize) -> Result<Spectrum<T>> {
    eigendecompose(&laplacian(gibbs), k, T::lit(DEFAULT_EIGEN_TOL))
}

/// Indices `s >= 1` whose eigenvalue coincides with `lambda_1` to `rel_tol`.
pub fn slow_group<T: Real>(spec: &Spectrum<T>, rel_tol: T) -> Result<Vec<usize>> {
    if spec.len() < 2 {
        return Err(Error::Invalid("slowest-mode group needs at least two modes".into()));
    }
    let lam = spec.eigenvalues();
    let scale = lam[1].abs().max(T::lit(GAP_FLOOR));
    let band = rel_tol * scale;
    // lambda_1 must clear both the zero-mode band and the degeneracy band
    if lam[1] - lam[0] <= band.max(T::lit(1e-10)) {
        return Err(Error::VanishingGap {
            lambda0: lam[0].to_f64_lossy(),
            lambda1: lam[1].to_f64_lossy(),
        });
    }
    Ok((1..spec.len()).filter(|&s| (lam[s] - lam[1]).abs() <= band).collect())
}

/// First two nonzero eigenvalues `(λ̃_1, λ̃_2)` of the tilted model at `q`.
pub fn tilted_gap<T: Real>(
    potential: &PotentialSpec<T>,
    grid: &Grid<T>,
    observables: &ObservableSet<T>,
    q: &[T],
) -> Result<(T, T)> {
    let tilted = tilt(potential, q, observables, grid)?;
    let gibbs = GibbsState::new(&tilted, grid)?;
    let spec = spectrum_of(&gibbs, 3)?;
    Ok((spec.eigenvalue(1), spec.eigenvalue(2)))
}

/// Central-difference estimate of `∂λ̃_1/∂q^j` for every `j`.
pub fn lambda1_sensitivity<T: Real>(
    potential: &PotentialSpec<T>,
    grid: &Grid<T>,
    observables: &ObservableSet<T>,
    q: &[T],
    h_step: T,
) -> Result<Vec<T>> {
    if q.len() != observables.dim() {
        return Err(Error::SizeMismatch {
            what: "field vector q",
            expected: observables.dim(),
            found: q.len(),
        });
    }
    if !(h_step > T::zero()) {
        return Err(Error::Invalid(format!("step must be positive, got {h_step}")));
    }
    let rel = T::lit(DEFAULT_DEGENERACY_TOL);
    let lambda1_at = |qq: &[T]| -> Result<T> {
        let (l1, l2) = tilted_gap(potential, grid, observables, qq)?;
        if (l2 - l1).abs() <= rel * l1.abs().max(T::lit(GAP_FLOOR)) {
            return Err(Error::DegenerateEigenvalue {
                lambda1: l1.to_f64_lossy(),
                lambda2: l2.to_f64_lossy(),
            });
        }
        Ok(l1)
    };
    let mut grad = Vec::with_capacity(q.len());
    for j in 0..q.len() {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[j] = plus[j] + h_step;
        minus[j] = minus[j] - h_step;
        let (lp, lm) = (lambda1_at(&plus)?, lambda1_at(&minus)?);
        grad.push((lp - lm) / (h_step + h_step));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::d;

    fn gaussian(n: usize, beta: f64, mu: f64) -> GibbsState<f64> {
        let grid = Grid::new(-10.0, 10.0, n).unwrap();
        GibbsState::new(&PotentialSpec::quadratic(mu, beta).unwrap(), &grid).unwrap()
    }

    #[test]
    fn gaussian_spectrum() {
        let g = gaussian(2001, 1.0, 1.0);
        let spec = spectrum_of(&g, 8).unwrap();
        let lam = spec.eigenvalues();
        assert!(lam[0].abs() <= 1e-10);
        assert!((lam[1] - 1.0).abs() <= 1e-4);
        for (s, &l) in lam.iter().enumerate().take(6) {
            assert!((l - s as f64).abs() <= 1e-3 * (s as f64).max(1.0), "{s}: {l}");
        }
        assert!(spec.gram_residual() <= 1e-10);
        let one_err = spec.mode(0).values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        assert!(one_err <= 1e-8, "{one_err}");
        assert!(spec.residuals().iter().all(|&r| r <= DEFAULT_EIGEN_TOL));
        // φ_1 ∝ +x with the orthonormal scale sqrt(β/μ)
        let i1 = g.grid().nearest(1.0);
        assert!((spec.mode(1)[i1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rayleigh_identity_and_sign_convention() {
        let g = gaussian(1001, 2.0, 1.0);
        let spec = spectrum_of(&g, 6).unwrap();
        for s in 0..6 {
            let phi = spec.mode(s);
            let dphi = d(phi, g.grid()).unwrap();
            let e = g.inner1(&dphi, &dphi).unwrap();
            assert!((e - spec.eigenvalue(s)).abs() <= 1e-8 * spec.eigenvalue(s).max(1.0));
            let big = phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let pivot = phi
                .values()
                .iter()
                .rposition(|v| v.abs() >= big * (1.0 - 1e-6))
                .unwrap();
            assert!(phi[pivot] > 0.0);
        }
    }

    #[test]
    fn neumann_flat_weight() {
        let grid = Grid::new(0.0, 1.0, 401).unwrap();
        let g = GibbsState::new(&PotentialSpec::expression("0", 1.0).unwrap(), &grid).unwrap();
        let spec = spectrum_of(&g, 3).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let dx = grid.dx();
        assert!((spec.eigenvalue(1) - pi2).abs() <= 2.0 * pi2 * pi2 * dx * dx / 12.0);
        // φ_1 ∝ cos(πx), normalized: sqrt(2) cos(πx) up to sign
        let phi = spec.mode(1);
        let c = phi[0].signum();
        for (i, &x) in grid.nodes().iter().enumerate() {
            assert!((phi[i] - c * 2f64.sqrt() * (std::f64::consts::PI * x).cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn deterministic() {
        let g = gaussian(501, 1.0, 1.0);
        let a = spectrum_of(&g, 10).unwrap();
        let b = spectrum_of(&g, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mode_count_validation() {
        let g = gaussian(11, 1.0, 1.0);
        let lap = laplacian(&g);
        assert!(eigendecompose(&lap, 0, 1e-8).is_err());
        assert!(eigendecompose(&lap, 12, 1e-8).is_err());
        let full = eigendecompose(&lap, 11, 1e-6).unwrap();
        assert_eq!(full.len(), 11);
    }

    fn constructed(lams: &[f64]) -> Spectrum<f64> {
        let n = lams.len();
        let modes = (0..n)
            .map(|s| Field0((0..n).map(|i| if i == s { 1.0 } else { 0.0 }).collect()))
            .collect();
        Spectrum::from_parts(lams.to_vec(), modes, vec![1.0; n]).unwrap()
    }

    #[test]
    fn slow_group_examples() {
        assert_eq!(
            slow_group(&constructed(&[0.0, 1.0, 1.0 + 1e-12, 2.0]), 1e-8).unwrap(),
            vec![1, 2]
        );
        assert_eq!(slow_group(&constructed(&[0.0, 1.0, 2.0, 3.0]), 1e-8).unwrap(), vec![1]);
        assert!(matches!(
            slow_group(&constructed(&[0.0, 1e-13, 2.0]), 1e-8),
            Err(Error::VanishingGap { .. })
        ));
        assert!(slow_group(&constructed(&[0.0]), 1e-8).is_err());
        let g = gaussian(1001, 1.0, 1.0);
        assert_eq!(slow_group(&spectrum_of(&g, 4).unwrap(), 1e-8).unwrap(), vec![1]);
        assert_eq!(
            constructed(&[0.0, 1.0, 1.0 + 1e-12, 2.0]).degeneracy_groups(),
            &[vec![0], vec![1, 2], vec![3]]
        );
    }

    #[test]
    fn tilted_gaussian_sensitivity_vanishes() {
        let grid = Grid::<f64>::new(-10.0, 10.0, 1001).unwrap();
        let spec = PotentialSpec::quadratic(1.0, 1.0).unwrap();
        let obs = ObservableSet::from_expressions(&["x"], &grid).unwrap();
        for q in [0.0, 1.0] {
            let g = lambda1_sensitivity(&spec, &grid, &obs, &[q], 0.05).unwrap();
            assert!(g[0].abs() <= 1e-3, "{q}: {}", g[0]);
        }
        assert!(lambda1_sensitivity(&spec, &grid, &obs, &[0.0, 0.0], 0.05).is_err());
    }

    #[test]
    fn quartic_sensitivity_converges_under_step_halving() {
        let grid = Grid::<f64>::new(-5.0, 5.0, 801).unwrap();
        let spec = PotentialSpec::expression("x^4/4", 1.0).unwrap();
        let obs = ObservableSet::from_expressions(&["x"], &grid).unwrap();
        let coarse = lambda1_sensitivity(&spec, &grid, &obs, &[0.5], 0.1).unwrap()[0];
        let mid = lambda1_sensitivity(&spec, &grid, &obs, &[0.5], 0.05).unwrap()[0];
        let fine = lambda1_sensitivity(&spec, &grid, &obs, &[0.5], 0.025).unwrap()[0];
        assert!(fine.is_finite() && fine.abs() > 1e-3);
        // central differences: successive changes shrink by ~4
        let (d1, d2) = ((coarse - mid).abs(), (mid - fine).abs());
        assert!(d2 < d1 * 0.5, "{coarse} {mid} {fine}");
    }

    #[test]
    fn tilted_eigenvalues_nonnegative() {
        let grid = Grid::<f64>::new(-6.0, 6.0, 601).unwrap();
        let spec = PotentialSpec::expression("x^4/4 - x^2", 1.0).unwrap();
        let obs = ObservableSet::from_expressions(&["x", "x^2"], &grid).unwrap();
        let tilted = tilt(&spec, &[0.7, -0.3], &obs, &grid).unwrap();
        let sp = spectrum_of(&GibbsState::new(&tilted, &grid).unwrap(), 8).unwrap();
        assert!(sp.eigenvalues().iter().all(|&l| l >= -1e-10));
    }
}
