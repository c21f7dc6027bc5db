//! Time evolution of the transformed state `Phi_t = rho_t / rho_G`.
//!
//! Two independent paths: the eigenfunction expansion, where each mode decays
//! as `exp(-lambda_s t / beta)`, and a Crank-Nicolson stepper on the
//! tridiagonal `Δ_G`.

use crate::error::{Error, Result};
use crate::geometry::{d, Field0, WeightedLaplacian};
use crate::model::GibbsState;
use crate::scalar::Real;
use crate::spectral::tridiag::TridiagonalLu;
use crate::spectral::Spectrum;

/// Densities below this contribute nothing to the entropy (`x ln x -> 0`).
pub const ENTROPY_CUTOFF: f64 = 1e-300;

/// `Phi_t` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField<T> {
    pub phi: Field0<T>,
    pub t: T,
}

impl<T: Real> StateField<T> {
    pub fn new(phi: Field0<T>, t: T) -> Self {
        Self { phi, t }
    }

    /// Equilibrium `Phi = 1`.
    pub fn equilibrium(n: usize) -> Self {
        Self::new(Field0::constant(n, T::one()), T::zero())
    }

    /// `<Phi_t, 1>_G`.
    pub fn mass(&self, gibbs: &GibbsState<T>) -> Result<T> {
        gibbs.mass(&self.phi)
    }
}

/// Expansion coefficients `a_t^s` together with the rates that move them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients<T> {
    a: Vec<T>,
    eigenvalues: Vec<T>,
    beta: T,
    t: T,
}

impl<T: Real> ModeCoefficients<T> {
    pub fn new(a: Vec<T>, eigenvalues: Vec<T>, beta: T, t: T) -> Result<Self> {
        if a.len() != eigenvalues.len() {
            return Err(Error::SizeMismatch {
                what: "mode coefficients",
                expected: eigenvalues.len(),
                found: a.len(),
            });
        }
        Ok(Self {
            a,
            eigenvalues,
            beta,
            t,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.a
    }

    pub fn get(&self, s: usize) -> T {
        self.a[s]
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Reference time of the coefficients.
    pub fn time(&self) -> T {
        self.t
    }

    /// Decay rate `lambda_s / beta` of mode `s`.
    pub fn rate(&self, s: usize) -> T {
        self.eigenvalues[s] / self.beta
    }

    /// Coefficients after a further time `dt`. Negative `dt` is allowed but
    /// amplifies every nonzero mode.
    pub fn advance(&self, dt: T) -> Self {
        if dt < T::zero() {
            log::warn!("propagating backwards in time by {dt}; nonzero modes grow");
        }
        let a = self
            .a
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&a, &lam)| a * (-lam / self.beta * dt).exp())
            .collect();
        Self {
            a,
            eigenvalues: self.eigenvalues.clone(),
            beta: self.beta,
            t: self.t + dt,
        }
    }

    /// `sum_s a^s phi_s`.
    pub fn reconstruct(&self, spec: &Spectrum<T>) -> Result<Field0<T>> {
        if spec.len() < self.len() {
            return Err(Error::SizeMismatch {
                what: "spectrum modes",
                expected: self.len(),
                found: spec.len(),
            });
        }
        let n = spec.mode(0).len();
        let mut out = vec![T::zero(); n];
        for (s, &a) in self.a.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(spec.mode(s).values()) {
                *o = *o + a * p;
            }
        }
        Ok(Field0(out))
    }
}

/// Coefficients of `Phi_0` and the reconstruction residual
/// `||Phi_0 - sum_s a^s phi_s||_G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion<T> {
    pub coefficients: ModeCoefficients<T>,
    pub residual: T,
}

/// `a^s = <Phi, phi_s>_G` for every mode of `spec`.
pub fn expand<T: Real>(state: &StateField<T>, spec: &Spectrum<T>, beta: T) -> Result<Expansion<T>> {
    let phi = &state.phi;
    if phi.len() != spec.mass_weights().len() {
        return Err(Error::SizeMismatch {
            what: "0-form",
            expected: spec.mass_weights().len(),
            found: phi.len(),
        });
    }
    phi.check_finite("state")?;
    let a: Vec<T> = spec.modes().iter().map(|m| spec.inner(phi, m)).collect();
    let coefficients = ModeCoefficients::new(a, spec.eigenvalues().to_vec(), beta, state.t)?;
    let rest = phi.sub(&coefficients.reconstruct(spec)?);
    let residual = spec.inner(&rest, &rest).sqrt();
    Ok(Expansion { coefficients, residual })
}

/// `Phi_t = sum_s a_0^s exp(-lambda_s t / beta) phi_s`, with `t` measured
/// from the coefficients' reference time.
pub fn propagate<T: Real>(coeffs: &ModeCoefficients<T>, spec: &Spectrum<T>, t: T) -> Result<StateField<T>> {
    let at = coeffs.advance(t);
    Ok(StateField::new(at.reconstruct(spec)?, at.t))
}

/// Keeps `a^0` and the slowest group, zeroing every other coefficient.
pub fn project_slowest<T: Real>(coeffs: &ModeCoefficients<T>, group: &[usize]) -> Result<ModeCoefficients<T>> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if let Some(&s) = group.iter().find(|&&s| s == 0 || s >= coeffs.len()) {
        return Err(Error::Invalid(format!("slowest group index {s} out of range")));
    }
    let a = (0..coeffs.len())
        .map(|s| {
            if s == 0 || group.contains(&s) {
                coeffs.a[s]
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(ModeCoefficients { a, ..coeffs.clone() })
}

/// `Phī_t = 1 + sum_{s in group} a_t^s phi_s`, with `t` measured from the
/// coefficients' reference time.
pub fn slowest_field<T: Real>(
    coeffs: &ModeCoefficients<T>,
    group: &[usize],
    spec: &Spectrum<T>,
    t: T,
) -> Result<StateField<T>> {
    let projected = project_slowest(coeffs, group)?.advance(t);
    let n = spec.mode(0).len();
    let mut out = vec![T::one(); n];
    for &s in group {
        let a = projected.a[s];
        for (o, &p) in out.iter_mut().zip(spec.mode(s).values()) {
            *o = *o + a * p;
        }
    }
    Ok(StateField::new(Field0(out), projected.t))
}

/// `1 + sum_s c_s phi_s / ||phi_s||_inf` for `s = 1..=c.len()`; stays
/// positive whenever `sum |c_s| < 1`.
pub fn band_limited_state<T: Real>(spec: &Spectrum<T>, amplitudes: &[T]) -> Result<StateField<T>> {
    if amplitudes.len() >= spec.len() {
        return Err(Error::SizeMismatch {
            what: "band-limited amplitudes",
            expected: spec.len() - 1,
            found: amplitudes.len(),
        });
    }
    let n = spec.mode(0).len();
    let mut out = vec![T::one(); n];
    for (j, &c) in amplitudes.iter().enumerate() {
        let m = spec.mode(j + 1);
        let scale = c / m.sup_norm();
        for (o, &p) in out.iter_mut().zip(m.values()) {
            *o = *o + scale * p;
        }
    }
    Ok(StateField::new(Field0(out), T::zero()))
}

/// Crank-Nicolson stepper for `dPhi/dt = -beta⁻¹ Δ_G Phi` with a fixed step.
#[derive(Debug, Clone)]
pub struct CrankNicolson<T> {
    lap: WeightedLaplacian<T>,
    lu: TridiagonalLu<T>,
    half: T,
    dt: T,
}

impl<T: Real> CrankNicolson<T> {
    pub fn new(lap: &WeightedLaplacian<T>, beta: T, dt: T) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
        }
        let half = dt / (beta + beta);
        let scale = |v: &[T]| v.iter().map(|&x| half * x).collect::<Vec<_>>();
        let diag: Vec<T> = lap.diag().iter().map(|&x| T::one() + half * x).collect();
        let lu = TridiagonalLu::factor(&scale(lap.sub()), &diag, &scale(lap.sup()), None)?;
        Ok(Self {
            lap: lap.clone(),
            lu,
            half,
            dt,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// One step: `(I + dt/(2 beta) A) Phi' = (I - dt/(2 beta) A) Phi`.
    pub fn step(&self, state: &StateField<T>) -> Result<StateField<T>> {
        let a_phi = self.lap.apply(&state.phi)?;
        let mut rhs: Vec<T> = state
            .phi
            .values()
            .iter()
            .zip(a_phi.values())
            .map(|(&p, &a)| p - self.half * a)
            .collect();
        self.lu.solve_in_place(&mut rhs);
        let next = Field0(rhs);
        next.check_finite("Crank-Nicolson state")?;
        Ok(StateField::new(next, state.t + self.dt))
    }

    pub fn run(&self, state: &StateField<T>, steps: usize) -> Result<StateField<T>> {
        let mut cur = state.clone();
        for _ in 0..steps {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }
}

/// `Υ = (beta/2) <dPhi, dPhi>_G`.
pub fn lyapunov<T: Real>(state: &StateField<T>, gibbs: &GibbsState<T>) -> Result<T> {
    let dphi = d(&state.phi, gibbs.grid())?;
    Ok(gibbs.beta() * T::lit(0.5) * gibbs.inner1(&dphi, &dphi)?)
}

/// A field together with the mass correction `m - 1` that was divided out.
#[derive(Debug, Clone, PartialEq)]
pub struct Renormalized<T> {
    pub field: Field0<T>,
    pub correction: T,
}

fn renormalize<T: Real>(field: Vec<T>, mass: T) -> Renormalized<T> {
    let correction = mass - T::one();
    let tol = T::lit(4.0) * T::epsilon();
    if correction.abs() > tol {
        Renormalized {
            field: Field0(field.into_iter().map(|v| v / mass).collect()),
            correction,
        }
    } else {
        Renormalized {
            field: Field0(field),
            correction: T::zero(),
        }
    }
}

/// `rho = rho_G Phi`, rescaled to unit mass if it drifted.
pub fn density<T: Real>(state: &StateField<T>, gibbs: &GibbsState<T>) -> Result<Renormalized<T>> {
    let mass = state.mass(gibbs)?;
    let rho: Vec<T> = gibbs
        .rho()
        .iter()
        .zip(state.phi.values())
        .map(|(&g, &p)| g * p)
        .collect();
    Ok(renormalize(rho, mass))
}

/// `Phi = rho / rho_G`, rescaled to unit mass if it drifted. Rejects `rho <= 0`.
pub fn ground_state_transform<T: Real>(rho: &Field0<T>, gibbs: &GibbsState<T>, t: T) -> Result<(StateField<T>, T)> {
    let n = gibbs.grid().n();
    if rho.len() != n {
        return Err(Error::SizeMismatch {
            what: "density",
            expected: n,
            found: rho.len(),
        });
    }
    if let Some(index) = rho.values().iter().position(|&r| !(r > T::zero())) {
        return Err(Error::NonPositive {
            what: "density",
            index,
            x: gibbs.grid().nodes()[index].to_f64_lossy(),
        });
    }
    let phi: Vec<T> = rho.values().iter().zip(gibbs.rho()).map(|(&r, &g)| r / g).collect();
    let mass = gibbs.mass(&Field0(phi.clone()))?;
    let r = renormalize(phi, mass);
    Ok((StateField::new(r.field, t), r.correction))
}

/// Free energy `F = beta⁻¹ S - H` with entropy `S` and energy `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy<T> {
    pub free_energy: T,
    pub entropy: T,
    pub energy: T,
}

pub fn free_energy<T: Real>(state: &StateField<T>, gibbs: &GibbsState<T>) -> Result<FreeEnergy<T>> {
    let n = gibbs.grid().n();
    if state.phi.len() != n {
        return Err(Error::SizeMismatch {
            what: "0-form",
            expected: n,
            found: state.phi.len(),
        });
    }
    let cutoff = T::lit(ENTROPY_CUTOFF);
    let w = gibbs.grid().weights();
    let h = gibbs.h();
    let mut entropy = T::zero();
    let mut energy = T::zero();
    for i in 0..n {
        let rho = gibbs.rho()[i] * state.phi[i];
        if rho < T::zero() && gibbs.rho()[i] > cutoff && -rho > cutoff {
            return Err(Error::NonPositive {
                what: "density in entropy",
                index: i,
                x: gibbs.grid().nodes()[i].to_f64_lossy(),
            });
        }
        energy = energy + w[i] * h[i] * rho;
        if rho > cutoff {
            entropy = entropy - w[i] * rho * rho.ln();
        }
    }
    Ok(FreeEnergy {
        free_energy: entropy / gibbs.beta() - energy,
        entropy,
        energy,
    })
}

/// One row of a trajectory report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub mass: T,
    pub lyapunov: T,
    pub free_energy: T,
    pub entropy: T,
    pub energy: T,
}

pub fn sample<T: Real>(state: &StateField<T>, gibbs: &GibbsState<T>) -> Result<TrajectorySample<T>> {
    let f = free_energy(state, gibbs)?;
    Ok(TrajectorySample {
        t: state.t,
        mass: state.mass(gibbs)?,
        lyapunov: lyapunov(state, gibbs)?,
        free_energy: f.free_energy,
        entropy: f.entropy,
        energy: f.energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{laplacian, Grid};
    use crate::model::PotentialSpec;
    use crate::spectral::{slow_group, spectrum_of, DEFAULT_DEGENERACY_TOL};

    struct Setup {
        gibbs: GibbsState<f64>,
        spec: Spectrum<f64>,
    }

    fn gaussian(n: usize, k: usize) -> Setup {
        let grid = Grid::<f64>::new(-10.0, 10.0, n).unwrap();
        let gibbs = GibbsState::new(&PotentialSpec::quadratic(1.0, 1.0).unwrap(), &grid).unwrap();
        let spec = spectrum_of(&gibbs, k).unwrap();
        Setup { gibbs, spec }
    }

    fn band(spec: &Spectrum<f64>) -> StateField<f64> {
        band_limited_state(spec, &[0.1, -0.08, 0.06, 0.05, -0.04, 0.03, -0.02]).unwrap()
    }

    #[test]
    fn expand_examples() {
        let s = gaussian(801, 10);
        let one = StateField::equilibrium(801);
        let e = expand(&one, &s.spec, 1.0).unwrap();
        assert!((e.coefficients.get(0) - 1.0).abs() < 1e-8);
        assert!(e.coefficients.values()[1..].iter().all(|a| a.abs() < 1e-8));

        let phi = Field0::constant(801, 1.0).add(&s.spec.mode(2).scale(0.3));
        let e = expand(&StateField::new(phi, 0.0), &s.spec, 1.0).unwrap();
        assert!((e.coefficients.get(2) - 0.3).abs() < 1e-8);
        assert!((e.coefficients.get(0) - 1.0).abs() < 1e-8);
        assert!(e.coefficients.get(1).abs() < 1e-8);

        let e = expand(&band(&s.spec), &s.spec, 1.0).unwrap();
        assert!(e.residual <= 1e-9, "{}", e.residual);
    }

    #[test]
    fn propagate_examples() {
        let s = gaussian(2001, 4);
        let phi = Field0::constant(2001, 1.0).add(&s.spec.mode(1).scale(0.2));
        let c = expand(&StateField::new(phi, 0.0), &s.spec, 1.0).unwrap().coefficients;
        let at = c.advance(2f64.ln());
        assert!((at.get(0) - c.get(0)).abs() <= 1e-15);
        // λ_1 ≈ 1 to O(dx^4); the closed form forces a half
        assert!((at.get(1) - 0.1).abs() < 1e-7, "{}", at.get(1));
        let two = c.advance(0.3).advance(0.5);
        let once = c.advance(0.8);
        for (a, b) in two.values().iter().zip(once.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let st = propagate(&c, &s.spec, 0.8).unwrap();
        assert_eq!(st.t, 0.8);
    }

    #[test]
    fn projection_examples() {
        let c = ModeCoefficients::<f64>::new(vec![1.0, 0.2, 0.05, 0.01], vec![0.0, 1.0, 2.0, 3.0], 1.0, 0.0).unwrap();
        let p = project_slowest(&c, &[1]).unwrap();
        assert_eq!(p.values(), &[1.0, 0.2, 0.0, 0.0]);
        assert_eq!(project_slowest(&p, &[1]).unwrap(), p);
        assert!(matches!(project_slowest(&c, &[]), Err(Error::EmptyGroup)));
        // commuting diagram
        let a = project_slowest(&c.advance(0.7), &[1]).unwrap();
        let b = project_slowest(&c, &[1]).unwrap().advance(0.7);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn slowest_field_satisfies_modified_diffusion() {
        let s = gaussian(2001, 8);
        let lap = laplacian(&s.gibbs);
        let c = expand(&band(&s.spec), &s.spec, 1.0).unwrap().coefficients;
        let group = slow_group(&s.spec, DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(group, vec![1]);
        let bar = slowest_field(&c, &group, &s.spec, 0.5).unwrap();
        let lhs = lap.apply(&bar.phi).unwrap();
        let lam = s.spec.eigenvalue(1);
        for (l, p) in lhs.values().iter().zip(bar.phi.values()) {
            assert!((l - lam * (p - 1.0)).abs() <= 1e-6);
        }
    }

    #[test]
    fn crank_nicolson_examples() {
        let s = gaussian(2001, 8);
        let lap = laplacian(&s.gibbs);
        let cn = CrankNicolson::new(&lap, 1.0, 1e-3).unwrap();
        let one = StateField::equilibrium(2001);
        let next = cn.step(&one).unwrap();
        assert!(next.phi.values().iter().all(|&v| (v - 1.0).abs() <= 1e-14));

        let phi1 = StateField::new(s.spec.mode(1).clone(), 0.0);
        let stepped = cn.step(&phi1).unwrap();
        let exact = s.spec.mode(1).scale((-s.spec.eigenvalue(1) * 1e-3).exp());
        let err = stepped.phi.sub(&exact).sup_norm();
        assert!(err <= 1e-9, "{err}");

        let phi0 = band(&s.spec);
        let m0 = phi0.mass(&s.gibbs).unwrap();
        let c = expand(&phi0, &s.spec, 1.0).unwrap().coefficients;
        let mut cur = phi0.clone();
        let mut worst_mass = 0.0f64;
        for _ in 0..1000 {
            cur = cn.step(&cur).unwrap();
            worst_mass = worst_mass.max((cur.mass(&s.gibbs).unwrap() - m0).abs());
        }
        assert!(worst_mass <= 1e-10, "{worst_mass}");
        let spectral = propagate(&c, &s.spec, 1.0).unwrap();
        let diff = cur.phi.sub(&spectral.phi).sup_norm();
        assert!(diff <= 1e-4, "{diff}");
        assert!(CrankNicolson::new(&lap, 1.0, 0.0).is_err());
    }

    #[test]
    fn lyapunov_examples_and_monotonicity() {
        let s = gaussian(2001, 8);
        assert_eq!(lyapunov(&StateField::equilibrium(2001), &s.gibbs).unwrap(), 0.0);
        let phi = Field0::constant(2001, 1.0).add(&s.spec.mode(1).scale(0.1));
        let v = lyapunov(&StateField::new(phi, 0.0), &s.gibbs).unwrap();
        assert!((v - 0.005).abs() <= 1e-6, "{v}");

        let cn = CrankNicolson::new(&laplacian(&s.gibbs), 1.0, 1e-2).unwrap();
        let mut cur = band(&s.spec);
        let mut prev = sample(&cur, &s.gibbs).unwrap();
        for _ in 0..100 {
            cur = cn.run(&cur, 5).unwrap();
            let next = sample(&cur, &s.gibbs).unwrap();
            assert!(next.lyapunov <= prev.lyapunov + 1e-12);
            assert!(next.free_energy >= prev.free_energy - 1e-10);
            prev = next;
        }
    }

    #[test]
    fn density_round_trip() {
        let s = gaussian(501, 4);
        let eq = density(&StateField::equilibrium(501), &s.gibbs).unwrap();
        assert_eq!(eq.field.values(), s.gibbs.rho());
        assert_eq!(eq.correction, 0.0);
        let st = band_limited_state(&s.spec, &[0.2, 0.1]).unwrap();
        let rho = density(&st, &s.gibbs).unwrap().field;
        let (back, _) = ground_state_transform(&rho, &s.gibbs, 0.0).unwrap();
        let rho2 = density(&back, &s.gibbs).unwrap().field;
        for (a, b) in rho.values().iter().zip(rho2.values()) {
            assert!((a - b).abs() <= 1e-14);
        }
        let mut bad = rho.clone();
        bad[3] = -1.0;
        assert!(matches!(
            ground_state_transform(&bad, &s.gibbs, 0.0),
            Err(Error::NonPositive { index: 3, .. })
        ));
        // doubled mass is divided out and reported
        let r = density(&StateField::new(Field0::constant(501, 2.0), 0.0), &s.gibbs).unwrap();
        assert!((r.correction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_slowest_density_closed_form() {
        let s = gaussian(2001, 4);
        let st = band_limited_state(&s.spec, &[0.2]).unwrap();
        let c = expand(&st, &s.spec, 1.0).unwrap().coefficients;
        let bar = slowest_field(&c, &[1], &s.spec, 1.0).unwrap();
        let rho = density(&bar, &s.gibbs).unwrap().field;
        let cc = c.get(1) * s.spec.mode(1)[s.gibbs.grid().nearest(1.0)];
        let z = (2.0 * std::f64::consts::PI).sqrt();
        for (i, &x) in s.gibbs.grid().nodes().iter().enumerate().step_by(50) {
            let exact = (-x * x / 2.0).exp() / z * (1.0 + cc * x * (-1.0f64).exp());
            let scale = (-x * x / 2.0).exp() / z;
            // far tails carry the O(dx²) curvature of the discrete mode
            let tol = if x.abs() <= 5.0 { 1e-4 } else { 1e-2 };
            assert!((rho[i] - exact).abs() <= tol * scale, "{x}: {} vs {exact}", rho[i]);
        }
    }

    #[test]
    fn free_energy_examples() {
        let s = gaussian(2001, 2);
        let f = free_energy(&StateField::equilibrium(2001), &s.gibbs).unwrap();
        let entropy = 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5;
        assert!((f.entropy - entropy).abs() < 1e-6, "{}", f.entropy);
        assert!((f.energy - 0.5).abs() < 1e-6);
        assert!((f.free_energy - (entropy - 0.5)).abs() < 1e-6);

        let grid = Grid::<f64>::new(0.0, 1.0, 101).unwrap();
        let flat = GibbsState::flat(&grid);
        let f = free_energy(&StateField::equilibrium(101), &flat).unwrap();
        assert!(f.entropy.abs() < 1e-14);

        let mut phi = Field0::constant(2001, 1.0);
        phi[1000] = -1.0;
        assert!(free_energy(&StateField::new(phi, 0.0), &s.gibbs).is_err());
    }

    #[test]
    fn spectral_gap_bound_and_slowest_fidelity() {
        let s = gaussian(2001, 10);
        let st = band(&s.spec);
        let c = expand(&st, &s.spec, 1.0).unwrap().coefficients;
        let one = Field0::constant(2001, 1.0);
        let d0 = s.gibbs.norm0(&st.phi.sub(&one)).unwrap();
        let tail: f64 = (2..c.len()).map(|k| c.get(k).abs() * s.spec.mode(k).sup_norm()).sum();
        for t in [0.5, 1.0, 2.0, 4.0] {
            let phi_t = propagate(&c, &s.spec, t).unwrap();
            let dt = s.gibbs.norm0(&phi_t.phi.sub(&one)).unwrap();
            assert!(dt <= d0 * (-s.spec.eigenvalue(1) * t).exp() + 1e-8);
            let bar = slowest_field(&c, &[1], &s.spec, t).unwrap();
            let gap = phi_t.phi.sub(&bar.phi).sup_norm();
            assert!(gap <= tail * (-s.spec.eigenvalue(2) * t).exp() + 1e-8, "{t}: {gap}");
        }
    }

    #[test]
    fn f32_evolution_smoke() {
        let grid = Grid::<f32>::new(-6.0, 6.0, 201).unwrap();
        let gibbs = GibbsState::new(&PotentialSpec::quadratic(1.0f32, 1.0).unwrap(), &grid).unwrap();
        let cn = CrankNicolson::new(&laplacian(&gibbs), 1.0, 1e-2).unwrap();
        let one = StateField::<f32>::equilibrium(201);
        let out = cn.run(&one, 10).unwrap();
        assert!((out.mass(&gibbs).unwrap() - 1.0f32).abs() < 1e-4);
    }
}
