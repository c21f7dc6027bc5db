//! Relaxation engine for overdamped Langevin dynamics in one dimension.
//!
//! The Fokker-Planck density `rho_t = rho_G Phi_t` is evolved through the
//! weighted Laplacian `Δ_G = codiff . d`, expanded in its eigenmodes,
//! projected onto the slowest mode, and compared against the exponential
//! relaxation flow of a contact Hamiltonian on `T*R^n x R`.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

// `!(a > b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod convergence;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod model;
pub mod operators;
pub mod scalar;
pub mod spectral;
pub mod thermo;

pub use contact::{equivalence_check, flow_closed_form, flow_rk4, vector_field, ContactHamiltonian};
pub use error::{Error, Result};
pub use evolution::{expand, project_slowest, propagate, slowest_field, CrankNicolson, ModeCoefficients, StateField};
pub use geometry::{codiff, d, inner, laplacian, Field0, Field1, FormRef, Grid, WeightedLaplacian};
pub use model::{parse_potential, tilt, Expr, GibbsState, ObservableSet, PotentialKind, PotentialSpec};
pub use operators::OperatorVariant;
pub use scalar::Real;
pub use spectral::{eigendecompose, lambda1_sensitivity, slow_group, spectrum_of, Spectrum};
pub use thermo::{legendrian, moment_observables, psi_g, ThermoPoint};

pub type Grid64 = Grid<f64>;
pub type Field0f64 = Field0<f64>;
pub type Field1f64 = Field1<f64>;
pub type GibbsState64 = GibbsState<f64>;
pub type PotentialSpec64 = PotentialSpec<f64>;
pub type ObservableSet64 = ObservableSet<f64>;
pub type WeightedLaplacian64 = WeightedLaplacian<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type StateField64 = StateField<f64>;
pub type ModeCoefficients64 = ModeCoefficients<f64>;
pub type ThermoPoint64 = ThermoPoint<f64>;
