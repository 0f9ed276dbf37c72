//! Kernel SVM classification: kernels, the SMO dual solver and
//! one-vs-one multiclass voting.

pub mod kernel;
pub mod multiclass;
pub mod smo;

pub use kernel::{gram_matrix, kernel_eval, KernelConfig, KernelKind};
pub use multiclass::{
    label_pairs, resolve_votes, train_multiclass, Ballot, ModelFile, MulticlassModel, PairModel,
};
pub use smo::{
    dual_objective, flat_gram, kkt_violation, predict_binary, smo_train_binary, solve_dual,
    BinaryModel, DualSolution, SmoParams,
};
