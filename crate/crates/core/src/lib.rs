pub mod bilinear;
pub mod bounds;
pub mod combinatorics;
pub mod contraction;
pub mod error;
pub mod expansion;
pub mod sim;
pub mod tensors;

pub use error::{Error, Result};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/symmetric-tensors.md")]
    pub mod symmetric_tensors {}
    #[doc = include_str!("../../../book/src/contractions.md")]
    pub mod contractions {}
    #[doc = include_str!("../../../book/src/encodings.md")]
    pub mod encodings {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    pub mod expansion {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub mod bounds {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
