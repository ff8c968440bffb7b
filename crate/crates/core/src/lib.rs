//! Entropic Monge–Kantorovich quantiles and ranks for data on the unit sphere.

pub mod depth;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod harmonics;
pub mod io;
pub mod maps;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{Rotation3, TangentVector, UnitVector3};
