//! Exact six-vertex model on a `2N × N` lattice with domain wall boundary
//! and a reflecting end: the partition function, the Type I and Type II
//! boundary two-point functions, and an operator-contraction oracle for each.

pub mod cli;
pub mod detkit;
pub mod error;
pub mod jets;
pub mod monodromy;
pub mod partition;
pub mod scalar;
pub mod type_one;
pub mod type_two;
pub mod vertex;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/vertex.md")]
    mod vertex {}
    #[doc = include_str!("../../../book/src/monodromy.md")]
    mod monodromy {}
    #[doc = include_str!("../../../book/src/partition.md")]
    mod partition {}
    #[doc = include_str!("../../../book/src/jets.md")]
    mod jets {}
    #[doc = include_str!("../../../book/src/type_one.md")]
    mod type_one {}
    #[doc = include_str!("../../../book/src/type_two.md")]
    mod type_two {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
