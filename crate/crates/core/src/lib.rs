//! Spectral analysis of continuum Schrödinger operators `-d²/dx² + V` whose
//! potential `V` concatenates finite pieces along a substitution sequence,
//! with the Fibonacci substitution as the main case.
//!
//! The pipeline runs from symbolic words ([`subshift`]) through the
//! concatenated potential ([`potential`]) and its transfer matrices
//! ([`transfer`]) to the Fibonacci trace map ([`tracemap`]), periodic
//! approximant band spectra ([`spectrum`]) and Lyapunov exponents
//! ([`lyapunov`]). [`models`] carries closed forms for the free,
//! piecewise-constant and Kronig-Penney cases.

pub mod error;
pub mod lyapunov;
pub mod models;
pub mod potential;
pub mod spectrum;
pub mod subshift;
pub mod tracemap;
pub mod transfer;

pub use error::{Error, Result};
pub use potential::{Model, PotentialPiece};
pub use subshift::{Substitution, Word};
pub use transfer::{EnergyGrid, ScaledMatrix, TransferMatrix};
