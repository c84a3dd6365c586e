//! Decides whether a quantum state and a finite set of projectors admit a
//! noncontextual hidden-variables model.
//!
//! The pipeline maps every projector to a `{0,1}`-valued random variable,
//! computes the probabilities quantum mechanics fixes (products of mutually
//! commuting projectors), and asks whether one joint distribution over all
//! variables reproduces them. Infeasibility is reported with a violated
//! quadrilateral (CH/CHSH-type) inequality or a Farkas certificate.
//!
//! Alongside the feasibility check the crate evaluates finite hidden-variable
//! models, quantum CHSH values with a settings search, and entropy
//! inequalities for composite systems.

pub mod bell;
pub mod classical_prob;
pub mod entropy;
mod error;
pub mod hilbert;
pub mod lp;
pub mod quantum_prob;
pub mod rvr;

pub use error::{Error, Result};
