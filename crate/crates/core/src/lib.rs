//! Linear-Gaussian state estimation with an information-theoretic view of
//! the measurement update.
//!
//! The Kalman gain `K = Σ Hᵀ (H Σ Hᵀ + R)⁻¹` is the gain that maximizes the
//! mutual information between the predicted state and the measurement,
//! `½ ln(det Σ_prior / det Σ_post)`. Besides the usual filter this crate
//! provides that objective, its gradient and curvature, a gradient-ascent
//! solver that recovers the closed-form gain, and the Gaussian entropy and
//! mutual-information functionals (Shannon and Rényi) they rest on.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`linops`] | symmetric matrices, Cholesky, log-determinants |
//! | [`model`] | state-space model, validation, time update |
//! | [`filter`] | gain, Joseph-form measurement update |
//! | [`information`] | entropies, mutual information |
//! | [`gainopt`] | MI as a function of the gain, ascent, curvature |
//! | [`sim`] | seeded trajectories, filter runs, NEES |

pub mod error;
pub mod filter;
pub mod gainopt;
pub mod information;
pub mod instances;
pub mod linops;
pub mod model;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use filter::{kalman_gain, update_joseph, update_optimal, GainMatrix, UpdateRecord};
pub use gainopt::{
    concavity_check, maximize_mi, mi_gradient, mi_of_gain, ConcavityReport, MiObjective,
    OptimizationTrace, OptimizerSettings, StepRule,
};
pub use information::{
    entropy_gaussian, mutual_information_joint, renyi_entropy, renyi_mutual_information, update_mi,
    JointGaussian, RenyiOrder,
};
pub use linops::{is_spd, log_det_spd, schur_det_check, SymMatrix};
pub use model::{predict, GaussianBelief, StateSpaceModel, Violation};
pub use sim::{generate, run_filter, FilterRun, FilterSummary, Scenario, Trajectory};

pub use nalgebra;
