//! Exact and consistent discretization of scalar predefined-time stable
//! systems built on class-K¹ functions.
//!
//! * [`k1`]: the K¹ catalog, with [`special`] functions and [`invert`] for
//!   the families without a closed-form inverse.
//! * [`continuous`]: closed-form solution and settling time.
//! * [`discretize`]: exact, consistent and explicit Euler step maps.
//! * [`sim`]: fixed-step runs, metrics, comparison-lemma checks.
//! * [`quad`]: tanh-sinh quadrature used by the verification suites.

pub mod continuous;
pub mod discretize;
pub mod error;
pub mod invert;
pub mod k1;
pub mod quad;
pub mod sim;
pub mod special;

pub use continuous::{exact_solution, settling_time, sign, vector_field, SystemParams};
pub use discretize::{
    consistent_perturbed_step, controller_u, euler_perturbed_step, euler_step, exact_step,
    exact_step_via_transform, ControlParams, Perturbation, PerturbationKind,
};
pub use error::{Error, Result};
pub use invert::invert_monotone;
pub use k1::{make_k1, K1Family, K1Function};
pub use sim::{compute_metrics, run, Metrics, Model, Sample, Scheme, Termination, Trajectory};
pub use special::{regularized_beta_i, regularized_gamma_p};
