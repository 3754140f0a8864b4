//! Decision procedures for forking, dividing and invariant independence over
//! ordered abelian groups built from finitely many Archimedean slots.

pub mod block_theory;
pub mod congruence;
pub mod cut_analysis;
pub mod error;
pub mod extension_space;
pub mod goldens;
pub mod intlin;
pub mod lex_linear;
pub mod linalg;
pub mod numberfield;
pub mod oag_model;
pub mod par;
pub mod rational;
pub mod report;
pub mod sample;
pub mod scene;
pub mod selftest;
pub mod verdict;

pub use error::{OagError, Result};
