//! Discrete Plateau problems on cell complexes.
//!
//! The crate models polyhedral chains over discrete normed abelian groups on
//! dyadic cubical grids and their simplicial refinements. On top of the chain
//! layer it provides:
//!
//! - mass, size, flat norm and minimal fillings ([`chain`], [`flatnorm`]);
//! - integral and modular homology through Smith normal form, relative
//!   homology and spanning conditions ([`homology`]);
//! - the anisotropic functional on polyhedral sets ([`functional`]);
//! - a radial-projection deformation engine that pushes PL chains onto grid
//!   skeleta with homotopy certificates ([`deform`]);
//! - exact solvers for both sides of the size / spanning-set infimum
//!   comparison ([`plateau`]).
//!
//! Batch and Monte Carlo loops run on rayon when the `parallel` feature is
//! enabled (the default); see [`exec`].

pub mod chain;
pub mod coeff;
pub mod complex;
pub mod deform;
pub mod error;
pub mod exec;
pub mod flatnorm;
pub mod functional;
pub mod geometry;
pub mod homology;
pub mod intmat;
pub mod io;
pub mod lp;
pub mod plateau;
mod program;
pub mod rng;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
pub use program::Arith;
