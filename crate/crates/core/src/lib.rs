//! Pseudo-classical path ensembles for entangled photon pairs.
//!
//! - [`hilbert`]: finite-dimensional kets, operators and linear algebra.
//! - [`singlet`]: weak-value paths of the two-photon singlet for a CSCO.
//! - [`repframe`]: pseudo-probability matrices between path ensembles.
//! - [`hidden_circle`]: the one-dimensional hidden-variable model on a circle.
//! - [`measurement`]: device-plus-pair dynamics and pointer models.

pub mod hidden_circle;
pub mod hilbert;
pub mod measurement;
pub mod repframe;
pub mod singlet;

pub use hilbert::{KetVector, LinearOperator};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hilbert.md")]
    mod hilbert {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/repframe.md")]
    mod repframe {}
    #[doc = include_str!("../../../book/src/hidden_circle.md")]
    mod hidden_circle {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
