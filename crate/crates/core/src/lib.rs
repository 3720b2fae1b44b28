//! Spectra of trapped atom pairs: radial eigenstates, scattering lengths,
//! the regularized pseudopotential model and photoassociation transition
//! strengths.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

pub mod banded;
pub mod bspline;
pub mod error;
pub mod interp;
pub mod pipeline;
pub mod potentials;
pub mod pseudo;
pub mod quadrature;
pub mod radial;
pub mod rootfind;
pub mod scattering;
pub mod special;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};
