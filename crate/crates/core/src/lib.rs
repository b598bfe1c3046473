// SPDX-License-Identifier: Apache-2.0

//! Intertwining calculus for one-dimensional diffusion operators
//! `−L = −d²/dx² + V' d/dx` and the eigenvalue bounds it yields, checked
//! against a finite-difference spectral oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod numeric;
pub mod potential;
pub mod schrodinger;
pub mod spectra;
mod textual;
pub mod weights;

pub use bounds::{BoundReport, Family, Status};
pub use error::{Error, Result};
pub use potential::{EssProbe, Potential, PotentialSpec};
pub use schrodinger::{compute_m, flat_potential_gap, flat_potential_with_zero, Form, SchrodingerPotential, TestFunction};
pub use spectra::{Grid, SpectrumResult, TabulatedFunction, TridiagonalOperator};
pub use weights::{Weight, WeightSpec};
