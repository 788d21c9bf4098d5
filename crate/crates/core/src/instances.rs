//! Seeded random problem instances for property checks and verification.

use nalgebra::{DMatrix, DVector};

use crate::filter::GainMatrix;
use crate::gainopt::MiObjective;
use crate::information::JointGaussian;
use crate::linops::SymMatrix;
use crate::model::{predict, GaussianBelief, StateSpaceModel};
use crate::rng::GaussianStream;

/// Entries uniform in `[-1, 1]`.
pub fn random_matrix(g: &mut GaussianStream, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| g.uniform_in(-1.0, 1.0))
}

/// `B Bᵀ + floor·I` with `B` uniform in `[-1, 1]`.
pub fn random_spd(g: &mut GaussianStream, n: usize, floor: f64) -> SymMatrix {
    let b = random_matrix(g, n, n);
    SymMatrix::symmetrize(&b * b.transpose() + DMatrix::identity(n, n) * floor)
}

/// One measurement-update problem: a valid model and the predicted
/// covariance `Σ_{k|k-1} = Φ Σ Φᵀ + Γ Q Γᵀ` it meets.
#[derive(Debug, Clone)]
pub struct UpdateInstance {
    pub model: StateSpaceModel,
    pub prior: GaussianBelief,
}

impl UpdateInstance {
    pub fn objective(&self) -> MiObjective {
        MiObjective::from_model(self.prior.cov(), &self.model).expect("instance is valid")
    }
}

/// `n ∈ 1..=4`, `m ∈ 1..=3`, `Γ = I`; random SPD `Σ`, `Q`; random `Φ`,
/// `H`; `R = A Aᵀ + 0.1 I`.
pub fn random_update_instance(g: &mut GaussianStream) -> UpdateInstance {
    let n = g.int_in(1, 4);
    let m = g.int_in(1, 3);
    let model = StateSpaceModel::new(
        random_matrix(g, n, n),
        DMatrix::identity(n, n),
        random_matrix(g, m, n),
        random_spd(g, n, 0.1),
        random_spd(g, m, 0.1),
    )
    .expect("random model is valid by construction");
    let mean = DVector::from_vec(g.normals(n));
    let before = GaussianBelief::new(mean, random_spd(g, n, 0.1)).expect("SPD by construction");
    let prior = predict(&before, &model).expect("Σ + ΓQΓᵀ with SPD Σ and Q stays SPD");
    UpdateInstance { model, prior }
}

/// Random SPD joint covariance with `nx, ny ∈ 1..=max_dim`.
pub fn random_joint(g: &mut GaussianStream, max_dim: usize) -> JointGaussian {
    let nx = g.int_in(1, max_dim);
    let ny = g.int_in(1, max_dim);
    let full = random_spd(g, nx + ny, 0.1);
    JointGaussian::from_full(&full, nx).expect("SPD by construction")
}

/// Gain with entries uniform in `[-scale, scale]`.
pub fn random_gain(g: &mut GaussianStream, n: usize, m: usize, scale: f64) -> GainMatrix {
    GainMatrix::new(random_matrix(g, n, m) * scale).expect("finite")
}
