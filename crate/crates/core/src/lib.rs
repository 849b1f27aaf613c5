//! Opinion-leader detection on directed social graphs.
//!
//! The pipeline embeds nodes ([`embed`]), ranks them by influence
//! ([`rank`]), checks seed quality with SIR spreading ([`sir`]) and
//! combines complementary leader lists ([`analysis`]).

pub mod analysis;
pub mod embed;
pub mod error;
pub mod graph;
pub mod rank;
pub mod seed;
pub mod sir;

pub use error::{Error, Result};
pub use graph::{DirectedGraph, GraphBuilder, NodeId};
