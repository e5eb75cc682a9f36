//! Littlewood-Paley blocks, Besov and Chemin-Lerner norms.

mod besov;
mod chemin_lerner;
mod decomposition;
mod functionals;
mod partition;

pub use besov::{
    besov_norm, block_norms, block_norms_with, lr_norm, vector_besov_norm, vector_block_norms, BesovParams,
    BlockNorms,
};
pub use chemin_lerner::{time_norm, CheminLernerAccumulator};
pub use decomposition::{block, decompose, high_pass, partial_sum, DyadicDecomposition};
pub use functionals::{b_gamma_norm, log_interpolation_check, low_gradient_norms, v_prime};
pub use partition::{BlockWeights, PartitionOfUnity};
