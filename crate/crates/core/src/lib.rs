//! Minimal heteroclinic orbits and heteroclinic double layers for
//! double-well potentials, computed by minimizing discrete action
//! functionals, together with the checks their theory predicts.

pub mod abstract_orbit;
pub mod effective;
pub mod error;
pub mod exec;
pub mod field;
pub mod fit;
pub mod fourth_order;
pub mod grid;
pub mod heteroclinic;
pub mod io;
pub mod layer2d;
pub mod optimize;
pub mod potential;
pub mod precond;
pub mod probe;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::Field2D;
pub use grid::{Grid1D, Grid2D};
pub use potential::PotentialDescriptor;
