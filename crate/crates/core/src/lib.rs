//! Numerical laboratory for big Hankel operators on vector-valued Fock spaces
//! with radial weights `e^{−Ψ(|z|²)}`.

pub mod berezin;
pub mod config;
pub mod error;
pub mod grid;
pub mod hankel;
pub mod identities;
pub mod kernel;
pub mod linalg;
pub mod mixed;
pub mod multi_index;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod schatten;
pub mod symbols;
pub mod weights;

pub use error::{Error, Result};
pub use multi_index::{MultiIndex, C64};
pub use weights::{WeightFamily, WeightModel};
