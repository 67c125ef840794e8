//! Randomized k-matching and k-factor search on random multigraphs with a
//! minimum-degree constraint, together with the truncated-Poisson numerics
//! that drive the degree model and a grid certifier for the drift
//! inequalities.

pub mod augment;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod io;
pub mod matching;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod tinf;

pub use graph::{EdgeId, GraphError, MultiGraph};
pub use matching::{KMatching, MatchingError};
pub use par::Exec;
