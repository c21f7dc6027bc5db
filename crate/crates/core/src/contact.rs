//! Contact Hamiltonian dynamics on `T*R^n x R` and the harness comparing it
//! with slowest-mode Fokker-Planck observables.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evolution::{slowest_field, ModeCoefficients, StateField};
use crate::model::{GibbsState, ObservableSet, PotentialSpec};
use crate::scalar::Real;
use crate::spectral::{lambda1_sensitivity, tilted_gap, Spectrum};
use crate::thermo::{moments_with, ThermoPoint, TiltedWeights};

/// Relative step of the central differences used by the general form.
pub const GENERAL_FD_STEP: f64 = 1e-6;

/// A scalar function of `q` with its gradient.
pub trait GeneratingFunction<T>: Send + Sync {
    fn eval(&self, q: &[T]) -> Result<(T, Vec<T>)>;
}

impl<T, F> GeneratingFunction<T> for F
where
    F: Fn(&[T]) -> Result<(T, Vec<T>)> + Send + Sync,
{
    fn eval(&self, q: &[T]) -> Result<(T, Vec<T>)> {
        self(q)
    }
}

/// `ψ_G` evaluated by quadrature against a Gibbs state.
#[derive(Debug, Clone)]
pub struct PsiFunction<T> {
    observables: ObservableSet<T>,
    gibbs: GibbsState<T>,
}

impl<T: Real> PsiFunction<T> {
    pub fn new(observables: ObservableSet<T>, gibbs: GibbsState<T>) -> Self {
        Self { observables, gibbs }
    }
}

impl<T: Real> GeneratingFunction<T> for PsiFunction<T> {
    fn eval(&self, q: &[T]) -> Result<(T, Vec<T>)> {
        let tw = TiltedWeights::new(q, &self.observables, &self.gibbs)?;
        let value = tw.integrate(|_| T::one())?;
        let grad = self
            .observables
            .values()
            .iter()
            .map(|b| tw.integrate(|i| b[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok((value, grad))
    }
}

/// `λ̃_1(q)` of the tilted model with a central-difference gradient.
#[derive(Debug, Clone)]
pub struct TiltedLambda<T> {
    potential: PotentialSpec<T>,
    grid: crate::geometry::Grid<T>,
    observables: ObservableSet<T>,
    h_step: T,
}

impl<T: Real> TiltedLambda<T> {
    pub fn new(
        potential: PotentialSpec<T>,
        grid: crate::geometry::Grid<T>,
        observables: ObservableSet<T>,
        h_step: T,
    ) -> Self {
        Self {
            potential,
            grid,
            observables,
            h_step,
        }
    }
}

impl<T: Real> GeneratingFunction<T> for TiltedLambda<T> {
    fn eval(&self, q: &[T]) -> Result<(T, Vec<T>)> {
        let (l1, _) = tilted_gap(&self.potential, &self.grid, &self.observables, q)?;
        let grad = lambda1_sensitivity(&self.potential, &self.grid, &self.observables, q, self.h_step)?;
        Ok((l1, grad))
    }
}

/// Value and gradient recorded at one `q`. Both forms here keep `q` fixed
/// along the flow, so expensive functions can be evaluated once.
#[derive(Debug, Clone, PartialEq)]
pub struct Frozen<T> {
    q: Vec<T>,
    value: T,
    gradient: Vec<T>,
}

impl<T: Real> Frozen<T> {
    pub fn new(q: Vec<T>, value: T, gradient: Vec<T>) -> Self {
        Self { q, value, gradient }
    }

    pub fn at(f: &dyn GeneratingFunction<T>, q: &[T]) -> Result<Self> {
        let (value, gradient) = f.eval(q)?;
        Ok(Self::new(q.to_vec(), value, gradient))
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn gradient(&self) -> &[T] {
        &self.gradient
    }
}

impl<T: Real> GeneratingFunction<T> for Frozen<T> {
    fn eval(&self, q: &[T]) -> Result<(T, Vec<T>)> {
        if q != self.q.as_slice() {
            return Err(Error::Invalid(format!(
                "frozen function recorded at q = {:?} evaluated at {:?}",
                self.q, q
            )));
        }
        Ok((self.value, self.gradient.clone()))
    }
}

type GeneralFn<T> = Arc<dyn Fn(&ThermoPoint<T>) -> T + Send + Sync>;

/// Contact Hamiltonians used by the engine.
#[derive(Clone)]
pub enum ContactHamiltonian<T> {
    /// `H = rate (ψ(q) - z)`.
    Relaxation {
        rate: T,
        psi: Arc<dyn GeneratingFunction<T>>,
    },
    /// `H = beta⁻¹ λ̃_1(q) (ψ(q) - z)`.
    Tilted {
        beta: T,
        lambda1: Arc<dyn GeneratingFunction<T>>,
        psi: Arc<dyn GeneratingFunction<T>>,
    },
    /// Arbitrary `H(p, q, z)`; partials by central differences.
    General(GeneralFn<T>),
}

impl<T> std::fmt::Debug for ContactHamiltonian<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ContactHamiltonian::Relaxation { .. } => "Relaxation",
            ContactHamiltonian::Tilted { .. } => "Tilted",
            ContactHamiltonian::General(_) => "General",
        })
    }
}

/// `(∂H/∂p, ∂H/∂q, ∂H/∂z)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials<T> {
    pub dp: Vec<T>,
    pub dq: Vec<T>,
    pub dz: T,
}

/// Tangent vector `(q̇, ṗ, ż)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent<T> {
    pub q_dot: Vec<T>,
    pub p_dot: Vec<T>,
    pub z_dot: T,
}

impl<T: Real> Tangent<T> {
    pub fn sup_norm(&self) -> T {
        self.q_dot
            .iter()
            .chain(&self.p_dot)
            .fold(self.z_dot.abs(), |m, v| m.max(v.abs()))
    }
}

fn check_dim<T>(what: &'static str, expected: usize, v: &[T]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::SizeMismatch {
            what,
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

impl<T: Real> ContactHamiltonian<T> {
    pub fn relaxation(rate: T, psi: Arc<dyn GeneratingFunction<T>>) -> Result<Self> {
        if !(rate > T::zero() && rate.is_finite()) {
            return Err(Error::Invalid(format!("relaxation rate must be positive, got {rate}")));
        }
        Ok(Self::Relaxation { rate, psi })
    }

    pub fn value(&self, pt: &ThermoPoint<T>) -> Result<T> {
        match self {
            Self::Relaxation { rate, psi } => {
                let (v, _) = psi.eval(&pt.q)?;
                Ok(*rate * (v - pt.z))
            }
            Self::Tilted { beta, lambda1, psi } => {
                let (l, _) = lambda1.eval(&pt.q)?;
                let (v, _) = psi.eval(&pt.q)?;
                Ok(l / *beta * (v - pt.z))
            }
            Self::General(h) => Ok(h(pt)),
        }
    }

    pub fn partials(&self, pt: &ThermoPoint<T>) -> Result<Partials<T>> {
        let n = pt.dim();
        let out = match self {
            Self::Relaxation { rate, psi } => {
                let (_, g) = psi.eval(&pt.q)?;
                check_dim("generating gradient", n, &g)?;
                Partials {
                    dp: vec![T::zero(); n],
                    dq: g.iter().map(|&gj| *rate * gj).collect(),
                    dz: -*rate,
                }
            }
            Self::Tilted { beta, lambda1, psi } => {
                let (l, lg) = lambda1.eval(&pt.q)?;
                let (v, g) = psi.eval(&pt.q)?;
                check_dim("eigenvalue gradient", n, &lg)?;
                check_dim("generating gradient", n, &g)?;
                let inv = beta.recip();
                Partials {
                    dp: vec![T::zero(); n],
                    dq: (0..n).map(|j| inv * (lg[j] * (v - pt.z) + l * g[j])).collect(),
                    dz: -l * inv,
                }
            }
            Self::General(h) => {
                let step = |c: T| T::lit(GENERAL_FD_STEP) * (T::one() + c.abs());
                let central = |perturb: &dyn Fn(&mut ThermoPoint<T>, T), c: T| {
                    let s = step(c);
                    let mut plus = pt.clone();
                    let mut minus = pt.clone();
                    perturb(&mut plus, s);
                    perturb(&mut minus, -s);
                    (h(&plus) - h(&minus)) / (s + s)
                };
                let dp = (0..n).map(|j| central(&|x, s| x.p[j] = x.p[j] + s, pt.p[j])).collect();
                let dq = (0..n).map(|j| central(&|x, s| x.q[j] = x.q[j] + s, pt.q[j])).collect();
                let dz = central(&|x, s| x.z = x.z + s, pt.z);
                Partials { dp, dq, dz }
            }
        };
        if !out.dz.is_finite() || out.dp.iter().chain(&out.dq).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "Hamiltonian partial derivative",
                index: 0,
            });
        }
        Ok(out)
    }
}

/// `q̇ = -∂H/∂p`, `ṗ = ∂H/∂q + p ∂H/∂z`, `ż = H - p·∂H/∂p`.
pub fn vector_field<T: Real>(h: &ContactHamiltonian<T>, pt: &ThermoPoint<T>) -> Result<Tangent<T>> {
    let d = h.partials(pt)?;
    let hv = h.value(pt)?;
    if !hv.is_finite() {
        return Err(Error::NonFinite {
            what: "Hamiltonian value",
            index: 0,
        });
    }
    let p_dh: T = pt.p.iter().zip(&d.dp).map(|(&p, &g)| p * g).sum();
    Ok(Tangent {
        q_dot: d.dp.iter().map(|&g| -g).collect(),
        p_dot: d.dq.iter().zip(&pt.p).map(|(&g, &p)| g + p * d.dz).collect(),
        z_dot: hv - p_dh,
    })
}

/// Exact relaxation flow towards `(∇ψ, q, ψ)` at rate `gamma`.
pub fn flow_closed_form<T: Real>(
    pt0: &ThermoPoint<T>,
    gamma: T,
    psi: T,
    grad_psi: &[T],
    t: T,
) -> Result<ThermoPoint<T>> {
    check_dim("generating gradient", pt0.dim(), grad_psi)?;
    if t < T::zero() {
        log::warn!("closed-form contact flow evaluated at negative time {t}");
    }
    let decay = (-gamma * t).exp();
    let p = pt0
        .p
        .iter()
        .zip(grad_psi)
        .map(|(&p0, &g)| g + (p0 - g) * decay)
        .collect();
    Ok(ThermoPoint {
        p,
        q: pt0.q.clone(),
        z: psi + (pt0.z - psi) * decay,
    })
}

/// Samples `(t, point)` of an integral curve with `H` at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactTrajectory<T> {
    pub times: Vec<T>,
    pub points: Vec<ThermoPoint<T>>,
    pub hamiltonian: Vec<T>,
}

impl<T: Real> ContactTrajectory<T> {
    pub fn last(&self) -> &ThermoPoint<T> {
        self.points.last().expect("trajectory holds the initial point")
    }
}

fn axpy<T: Real>(pt: &ThermoPoint<T>, k: &Tangent<T>, s: T) -> ThermoPoint<T> {
    ThermoPoint {
        p: pt.p.iter().zip(&k.p_dot).map(|(&a, &b)| a + s * b).collect(),
        q: pt.q.iter().zip(&k.q_dot).map(|(&a, &b)| a + s * b).collect(),
        z: pt.z + s * k.z_dot,
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<T: Real>(h: &ContactHamiltonian<T>, pt: &ThermoPoint<T>, dt: T) -> Result<ThermoPoint<T>> {
    let half = dt * T::lit(0.5);
    let k1 = vector_field(h, pt)?;
    let k2 = vector_field(h, &axpy(pt, &k1, half))?;
    let k3 = vector_field(h, &axpy(pt, &k2, half))?;
    let k4 = vector_field(h, &axpy(pt, &k3, dt))?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let comb = |a: T, b: T, c: T, d: T| sixth * (a + two * b + two * c + d);
    let next = ThermoPoint {
        p: (0..pt.dim())
            .map(|j| pt.p[j] + comb(k1.p_dot[j], k2.p_dot[j], k3.p_dot[j], k4.p_dot[j]))
            .collect(),
        q: (0..pt.dim())
            .map(|j| pt.q[j] + comb(k1.q_dot[j], k2.q_dot[j], k3.q_dot[j], k4.q_dot[j]))
            .collect(),
        z: pt.z + comb(k1.z_dot, k2.z_dot, k3.z_dot, k4.z_dot),
    };
    if !next.is_finite() {
        return Err(Error::NonFinite {
            what: "contact trajectory state",
            index: 0,
        });
    }
    Ok(next)
}

/// Integrates `steps` fixed RK4 steps, recording every state.
pub fn flow_rk4<T: Real>(
    h: &ContactHamiltonian<T>,
    pt0: &ThermoPoint<T>,
    dt: T,
    steps: usize,
) -> Result<ContactTrajectory<T>> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let mut times = vec![T::zero()];
    let mut points = vec![pt0.clone()];
    let mut hamiltonian = vec![h.value(pt0)?];
    let mut cur = pt0.clone();
    for k in 1..=steps {
        cur = rk4_step(h, &cur, dt)?;
        times.push(dt * T::from_usize_lossy(k));
        hamiltonian.push(h.value(&cur)?);
        points.push(cur.clone());
    }
    Ok(ContactTrajectory {
        times,
        points,
        hamiltonian,
    })
}

/// The tilted system at fixed `q`:
/// `ṗ_j = beta⁻¹ λ̃_1 (∂_j ψ - p_j) + beta⁻¹ ∂_j λ̃_1 (ψ - z)`,
/// `ż = beta⁻¹ λ̃_1 (ψ - z)`, `q̇ = 0`.
pub fn tilted_contact_field<T: Real>(
    beta: T,
    lambda1: T,
    lambda1_grad: &[T],
    psi: T,
    grad_psi: &[T],
    pt: &ThermoPoint<T>,
) -> Result<Tangent<T>> {
    if !(lambda1 > T::zero()) {
        return Err(Error::Invalid(format!(
            "tilted eigenvalue must be positive, got {lambda1}"
        )));
    }
    let n = pt.dim();
    check_dim("eigenvalue gradient", n, lambda1_grad)?;
    check_dim("generating gradient", n, grad_psi)?;
    let inv = beta.recip();
    Ok(Tangent {
        q_dot: vec![T::zero(); n],
        p_dot: (0..n)
            .map(|j| inv * lambda1 * (grad_psi[j] - pt.p[j]) + inv * lambda1_grad[j] * (psi - pt.z))
            .collect(),
        z_dot: inv * lambda1 * (psi - pt.z),
    })
}

/// Slowest-mode Fokker-Planck observables side by side with the contact flow.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<T> {
    pub q: Vec<T>,
    pub gamma: T,
    pub psi: T,
    pub grad_psi: Vec<T>,
    pub times: Vec<T>,
    pub fokker_planck: Vec<ThermoPoint<T>>,
    pub contact: Vec<ThermoPoint<T>>,
    pub max_z_discrepancy: T,
    pub max_p_discrepancy: T,
    /// `(p, z)` distance of the start from the Legendrian point.
    pub initial_offset: T,
    /// Same distance at the last sample, for each side.
    pub final_offset_fp: T,
    pub final_offset_contact: T,
}

/// Compares `(z̄, p̄)(t)` from the projected expansion with the closed-form
/// contact flow at `gamma = beta⁻¹ λ_1`. Both use one `ψ_G` quadrature.
#[allow(clippy::too_many_arguments)]
pub fn equivalence_check<T: Real>(
    gibbs: &GibbsState<T>,
    observables: &ObservableSet<T>,
    spec: &Spectrum<T>,
    coeffs: &ModeCoefficients<T>,
    group: &[usize],
    q: &[T],
    times: &[T],
) -> Result<EquivalenceReport<T>> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let gamma = spec.eigenvalue(group[0]) / gibbs.beta();
    let tw = TiltedWeights::new(q, observables, gibbs)?;
    let ones = crate::geometry::Field0::constant(gibbs.grid().n(), T::one());
    let (psi, grad_psi) = moments_with(&tw, &ones, observables)?;
    let bar0 = slowest_field(coeffs, group, spec, T::zero())?;
    let (z0, p0) = moments_with(&tw, &bar0.phi, observables)?;
    let start = ThermoPoint::new(p0, q.to_vec(), z0)?;
    let eq = ThermoPoint::new(grad_psi.clone(), q.to_vec(), psi)?;

    let mut fp = Vec::with_capacity(times.len());
    let mut ct = Vec::with_capacity(times.len());
    let mut max_z = T::zero();
    let mut max_p = T::zero();
    for &t in times {
        let bar = slowest_field(coeffs, group, spec, t)?;
        let (z, p) = moments_with(&tw, &bar.phi, observables)?;
        let a = ThermoPoint::new(p, q.to_vec(), z)?;
        let b = flow_closed_form(&start, gamma, psi, &grad_psi, t)?;
        max_z = max_z.max((a.z - b.z).abs());
        for (x, y) in a.p.iter().zip(&b.p) {
            max_p = max_p.max((*x - *y).abs());
        }
        fp.push(a);
        ct.push(b);
    }
    let final_offset_fp = fp.last().map_or(T::zero(), |a| a.pz_distance(&eq));
    let final_offset_contact = ct.last().map_or(T::zero(), |b| b.pz_distance(&eq));
    Ok(EquivalenceReport {
        q: q.to_vec(),
        gamma,
        psi,
        grad_psi,
        times: times.to_vec(),
        fokker_planck: fp,
        contact: ct,
        max_z_discrepancy: max_z,
        max_p_discrepancy: max_p,
        initial_offset: start.pz_distance(&eq),
        final_offset_fp,
        final_offset_contact,
    })
}

/// Alternative choices of `z`: the energy `<Phī_t, h>_G` and the free energy.
#[derive(Debug, Clone, PartialEq)]
pub struct AltZReport<T> {
    pub times: Vec<T>,
    /// Equilibrium energy `<1, h>_G`.
    pub energy_equilibrium: T,
    pub energy_ode: Vec<T>,
    pub energy_quadrature: Vec<T>,
    pub max_energy_discrepancy: T,
    /// Non-closure term `beta⁻¹ <1, ln Phī_t>_G` of the free-energy choice.
    pub free_energy_residual: Vec<T>,
}

/// Largest RK4 substep used for the energy ODE.
pub const ENERGY_SUBSTEP: f64 = 1e-3;

/// Integrates `ż = -beta⁻¹ λ_1 (z - <1,h>_G)` and checks it against direct
/// quadrature, and evaluates the free-energy residual at each time in
/// `times` (ascending, starting at or after zero).
pub fn alt_z_flows<T: Real>(
    gibbs: &GibbsState<T>,
    spec: &Spectrum<T>,
    coeffs: &ModeCoefficients<T>,
    group: &[usize],
    times: &[T],
) -> Result<AltZReport<T>> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < T::zero()) {
        return Err(Error::Invalid("times must be ascending and nonnegative".into()));
    }
    let gamma = spec.eigenvalue(group[0]) / gibbs.beta();
    let h = gibbs.h();
    let ones = crate::geometry::Field0::constant(gibbs.grid().n(), T::one());
    let e_eq = gibbs.inner0(&ones, h)?;
    let energy_at = |st: &StateField<T>| gibbs.inner0(&st.phi, h);

    let rhs = |z: T| -gamma * (z - e_eq);
    let mut z = energy_at(&slowest_field(coeffs, group, spec, T::zero())?)?;
    let mut t_cur = T::zero();
    let max_sub = T::lit(ENERGY_SUBSTEP);
    let mut energy_ode = Vec::with_capacity(times.len());
    let mut energy_quadrature = Vec::with_capacity(times.len());
    let mut residual = Vec::with_capacity(times.len());
    let mut worst = T::zero();
    for &t in times {
        let span = t - t_cur;
        if span > T::zero() {
            let steps = (span / max_sub).ceil().to_usize().unwrap_or(1).max(1);
            let dt = span / T::from_usize_lossy(steps);
            let half = dt * T::lit(0.5);
            for _ in 0..steps {
                let k1 = rhs(z);
                let k2 = rhs(z + half * k1);
                let k3 = rhs(z + half * k2);
                let k4 = rhs(z + dt * k3);
                z = z + dt / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4);
            }
            t_cur = t;
        }
        let bar = slowest_field(coeffs, group, spec, t)?;
        let direct = energy_at(&bar)?;
        worst = worst.max((z - direct).abs());
        energy_ode.push(z);
        energy_quadrature.push(direct);

        if let Some(index) = bar.phi.values().iter().position(|&v| !(v > T::zero())) {
            return Err(Error::NonPositive {
                what: "slowest-mode state in the free-energy logarithm",
                index,
                x: gibbs.grid().nodes()[index].to_f64_lossy(),
            });
        }
        let log_phi = bar.phi.map(|v| v.ln());
        residual.push(gibbs.mass(&log_phi)? / gibbs.beta());
    }
    Ok(AltZReport {
        times: times.to_vec(),
        energy_equilibrium: e_eq,
        energy_ode,
        energy_quadrature,
        max_energy_discrepancy: worst,
        free_energy_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{band_limited_state, expand};
    use crate::geometry::Grid;
    use crate::spectral::spectrum_of;
    use crate::thermo::legendrian;

    fn quad_psi() -> Arc<dyn GeneratingFunction<f64>> {
        // ψ(q) = e^{q²/2}, the Gaussian generating function
        Arc::new(|q: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = (q[0] * q[0] / 2.0).exp();
            Ok((v, vec![q[0] * v]))
        })
    }

    fn pt(p: f64, q: f64, z: f64) -> ThermoPoint<f64> {
        ThermoPoint::new(vec![p], vec![q], z).unwrap()
    }

    struct Setup {
        gibbs: GibbsState<f64>,
        obs: ObservableSet<f64>,
        spec: Spectrum<f64>,
    }

    fn gaussian(potential: &str) -> Setup {
        model(potential, 10.0)
    }

    fn model(potential: &str, half_width: f64) -> Setup {
        let grid = Grid::<f64>::new(-half_width, half_width, 2001).unwrap();
        let gibbs = GibbsState::new(&PotentialSpec::expression(potential, 1.0).unwrap(), &grid).unwrap();
        let obs = ObservableSet::from_expressions(&["x"], &grid).unwrap();
        let spec = spectrum_of(&gibbs, 6).unwrap();
        Setup { gibbs, obs, spec }
    }

    #[test]
    fn vector_field_examples() {
        let h = ContactHamiltonian::relaxation(1.0, quad_psi()).unwrap();
        let v = vector_field(&h, &pt(0.3, 0.4, 2.0)).unwrap();
        assert_eq!(v.q_dot, vec![0.0]);
        let q = 0.8f64;
        let psi = (q * q / 2.0).exp();
        let eq = vector_field(&h, &pt(q * psi, q, psi)).unwrap();
        assert!(eq.sup_norm() <= 1e-12);

        let g = ContactHamiltonian::General(Arc::new(|x: &ThermoPoint<f64>| x.p[0]));
        let v = vector_field(&g, &pt(0.7, 0.1, 3.0)).unwrap();
        assert!((v.q_dot[0] + 1.0).abs() < 1e-9);
        assert!(v.z_dot.abs() < 1e-9);
        assert!(v.p_dot[0].abs() < 1e-9);
        assert!(ContactHamiltonian::<f64>::relaxation(0.0, quad_psi()).is_err());
    }

    #[test]
    fn general_form_matches_relaxation() {
        let rate = 1.7;
        let psi = quad_psi();
        let psi2 = psi.clone();
        let rel = ContactHamiltonian::relaxation(rate, psi).unwrap();
        let gen = ContactHamiltonian::General(Arc::new(move |x: &ThermoPoint<f64>| {
            rate * (psi2.eval(&x.q).unwrap().0 - x.z)
        }));
        for x in [pt(0.1, 0.2, 0.3), pt(-1.0, 0.9, 2.0)] {
            let a = vector_field(&rel, &x).unwrap();
            let b = vector_field(&gen, &x).unwrap();
            assert!((a.z_dot - b.z_dot).abs() < 1e-9);
            assert!((a.p_dot[0] - b.p_dot[0]).abs() < 1e-6);
            assert!(b.q_dot[0].abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_examples() {
        let x0 = pt(0.4, 0.3, 2.0);
        assert_eq!(flow_closed_form(&x0, 1.0, 1.0, &[0.5], 0.0).unwrap(), x0);
        let x = flow_closed_form(&x0, 1.0, 1.0, &[0.5], 2f64.ln()).unwrap();
        assert!((x.z - 1.5).abs() < 1e-15);
        assert!((x.p[0] - 0.45).abs() < 1e-15);
        let far = flow_closed_form(&x0, 1.0, 1.0, &[0.5], 30.0).unwrap();
        let eq = pt(0.5, 0.3, 1.0);
        assert!(far.pz_distance(&eq) <= x0.pz_distance(&eq) * (-30.0f64).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn rate_sets_the_time_scale() {
        let x0 = pt(0.4, 0.3, 2.0);
        let gamma = 2.5;
        for t in [0.1, 1.0, 3.0] {
            let a = flow_closed_form(&x0, gamma, 1.0, &[0.5], t).unwrap();
            let b = flow_closed_form(&x0, 1.0, 1.0, &[0.5], gamma * t).unwrap();
            assert!(a.pz_distance(&b) <= 1e-12);
        }
    }

    #[test]
    fn rk4_matches_closed_form_and_contact_form() {
        let h = ContactHamiltonian::relaxation(1.0, quad_psi()).unwrap();
        let x0 = pt(0.4, 0.3, 2.0);
        let tr = flow_rk4(&h, &x0, 1e-3, 1000).unwrap();
        let (psi, g) = quad_psi().eval(&[0.3]).unwrap();
        let exact = flow_closed_form(&x0, 1.0, psi, &g, 1.0).unwrap();
        assert!((tr.last().z - exact.z).abs() <= 1e-10);
        assert!((tr.last().p[0] - exact.p[0]).abs() <= 1e-10);
        // α(X_H) = ż - p q̇ = H at every sample
        for (x, &hv) in tr.points.iter().zip(&tr.hamiltonian) {
            let v = vector_field(&h, x).unwrap();
            let alpha = v.z_dot - x.p[0] * v.q_dot[0];
            assert!((alpha - hv).abs() <= 1e-9);
        }
        // a Legendrian start stays put
        let eq = pt(g[0], 0.3, psi);
        let tr = flow_rk4(&h, &eq, 1e-2, 1000).unwrap();
        assert!(tr.points.iter().all(|x| x.pz_distance(&eq) <= 1e-9));
        assert!(flow_rk4(&h, &eq, 0.0, 1).is_err());
    }

    #[test]
    fn tilted_form_reduces_to_relaxation() {
        let q = [0.6];
        let (psi, g) = quad_psi().eval(&q).unwrap();
        let lam = Frozen::new(q.to_vec(), 2.0, vec![0.0]);
        let tilted = ContactHamiltonian::Tilted {
            beta: 2.0,
            lambda1: Arc::new(lam),
            psi: quad_psi(),
        };
        let rel = ContactHamiltonian::relaxation(1.0, quad_psi()).unwrap();
        let x0 = pt(0.1, 0.6, 3.0);
        let a = flow_rk4(&tilted, &x0, 1e-2, 200).unwrap();
        let b = flow_rk4(&rel, &x0, 1e-2, 200).unwrap();
        assert!(a.last().pz_distance(b.last()) <= 1e-14);
        let t = tilted_contact_field(2.0, 2.0, &[0.0], psi, &g, &x0).unwrap();
        let r = vector_field(&rel, &x0).unwrap();
        assert!((t.z_dot - r.z_dot).abs() <= 1e-15 && (t.p_dot[0] - r.p_dot[0]).abs() <= 1e-15);
        let on = tilted_contact_field(2.0, 2.0, &[0.7], psi, &g, &pt(g[0], 0.6, psi)).unwrap();
        assert!(on.sup_norm() <= 1e-12);
        // with a nonzero eigenvalue gradient the tilted Hamiltonian reproduces the field
        let lam = Frozen::new(q.to_vec(), 2.0, vec![0.7]);
        let tilted = ContactHamiltonian::Tilted {
            beta: 2.0,
            lambda1: Arc::new(lam),
            psi: quad_psi(),
        };
        let v = vector_field(&tilted, &x0).unwrap();
        let w = tilted_contact_field(2.0, 2.0, &[0.7], psi, &g, &x0).unwrap();
        assert!((v.p_dot[0] - w.p_dot[0]).abs() <= 1e-14 && (v.z_dot - w.z_dot).abs() <= 1e-14);
        assert!(tilted_contact_field(2.0, 0.0, &[0.0], psi, &g, &x0).is_err());
    }

    #[test]
    fn frozen_rejects_other_points() {
        let f = Frozen::new(vec![1.0], 2.0, vec![0.0]);
        assert!(f.eval(&[1.0]).is_ok());
        assert!(f.eval(&[1.5]).is_err());
    }

    #[test]
    fn equivalence_examples() {
        let s = gaussian("x^2/2");
        let st = band_limited_state(&s.spec, &[0.2]).unwrap();
        let c = expand(&st, &s.spec, 1.0).unwrap().coefficients;
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let r = equivalence_check(&s.gibbs, &s.obs, &s.spec, &c, &[1], &[0.5], &times).unwrap();
        assert!(r.max_z_discrepancy <= 1e-10, "{}", r.max_z_discrepancy);
        assert!(r.max_p_discrepancy <= 1e-10, "{}", r.max_p_discrepancy);
        let leg = legendrian(&[0.5], &s.obs, &s.gibbs).unwrap();
        let end = r.contact.last().unwrap();
        assert!(end.pz_distance(&leg) <= r.initial_offset * (-r.gamma * 10.0).exp() * (1.0 + 1e-6));

        let eq = StateField::equilibrium(2001);
        let c = expand(&eq, &s.spec, 1.0).unwrap().coefficients;
        let r = equivalence_check(&s.gibbs, &s.obs, &s.spec, &c, &[1], &[0.5], &times).unwrap();
        for (a, b) in r.fokker_planck.iter().zip(&r.contact) {
            assert!(a.pz_distance(&leg) <= 1e-8 && b.pz_distance(&leg) <= 1e-8);
        }
        assert!(equivalence_check(&s.gibbs, &s.obs, &s.spec, &c, &[], &[0.5], &times).is_err());
    }

    #[test]
    fn alt_z_energy_and_free_energy() {
        let times = [0.0, 1.0, 2.0, 4.0, 10.0];
        // asymmetric potential so the energy actually relaxes
        let s = model("x^4/4 + x/2", 5.0);
        let st = band_limited_state(&s.spec, &[0.2]).unwrap();
        let c = expand(&st, &s.spec, 1.0).unwrap().coefficients;
        let r = alt_z_flows(&s.gibbs, &s.spec, &c, &[1], &times).unwrap();
        assert!(r.max_energy_discrepancy <= 1e-8, "{}", r.max_energy_discrepancy);
        assert!((r.energy_quadrature[0] - r.energy_equilibrium).abs() > 1e-3);
        let res: Vec<f64> = r.free_energy_residual.iter().map(|v| v.abs()).collect();
        assert!(res[1] > res[2] && res[2] > res[3]);
        assert!(res[4] <= 1e-6);

        let g = gaussian("x^2/2");
        let eq = StateField::equilibrium(2001);
        let c = expand(&eq, &g.spec, 1.0).unwrap().coefficients;
        let r = alt_z_flows(&g.gibbs, &g.spec, &c, &[1], &times).unwrap();
        assert!((r.energy_equilibrium - 0.5).abs() < 1e-6);
        assert!(r.energy_ode.iter().all(|&z| (z - r.energy_equilibrium).abs() <= 1e-12));

        // energy decays like e^{-t} relative to ½ for the Gaussian
        let st = band_limited_state(&g.spec, &[0.1, 0.1]).unwrap();
        let c = expand(&st, &g.spec, 1.0).unwrap().coefficients;
        let grp = [1usize];
        let r = alt_z_flows(&g.gibbs, &g.spec, &c, &grp, &times).unwrap();
        let d0 = r.energy_ode[0] - 0.5;
        for (k, &t) in times.iter().enumerate() {
            let want = d0 * (-g.spec.eigenvalue(1) * t).exp();
            assert!((r.energy_ode[k] - 0.5 - want).abs() <= 1e-6, "{t}");
        }

        let bad = ModeCoefficients::new(
            vec![1.0, 5.0, 0.0, 0.0, 0.0, 0.0],
            g.spec.eigenvalues().to_vec(),
            1.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            alt_z_flows(&g.gibbs, &g.spec, &bad, &[1], &[0.0]),
            Err(Error::NonPositive { .. })
        ));
    }
}
