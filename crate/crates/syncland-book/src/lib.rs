//! Runs the code listings of the guide in `book/` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}
#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}
#[doc = include_str!("../../../book/src/kuramoto.md")]
pub mod kuramoto {}
#[doc = include_str!("../../../book/src/circulant.md")]
pub mod circulant {}
#[doc = include_str!("../../../book/src/sweeps.md")]
pub mod sweeps {}
