//! Bony paraproduct calculus: paraproducts, remainders, commutators and the
//! product laws.

mod commutator;
mod paraproduct;
mod product_laws;

pub use commutator::{
    commutator, commutator_blocks, commutator_estimate, commutator_split, kernel_commutator, r1_window, r5_lowest,
    CommutatorIndices, CommutatorSample, CommutatorSplit,
};
pub use paraproduct::{bony_decomposition, paraproduct, remainder};
pub use product_laws::{product_law_check, ProductLawCase};
