//! Realization theory for affine linear parameter-varying state-space
//! (LPV-SSA) models: sub-Markov parameters, Hankel matrices, Ho-Kalman
//! realization, minimality, reduction and Kalman decomposition, and
//! simulation in discrete and continuous time.

pub mod error;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod model;
pub mod realize;
pub mod reduce;
pub mod signal;
pub mod sim;
pub mod words;

pub use error::{Error, Result};
pub use hankel::{build_hankel, HankelFinite};
pub use markov::{sub_markov, BlockDims, ModelOracle, SubMarkovBlock, SubMarkovOracle};
pub use model::{InitialState, LpvSsa, ModelParts, SwitchedModel, TimeDomain};
pub use signal::SampledSignal;
pub use sim::Trajectory;
pub use words::Word;
