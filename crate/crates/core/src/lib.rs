//! Information-usage analysis of adaptive data analysis.
//!
//! An analyst looks at many noisy statistics and reports one of them. How
//! biased the reported value is depends on how much the choice of index
//! depends on the noise, measured as the mutual information `I(T; phi)`.

pub mod bounds;
pub mod classify;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod infotheory;
pub mod lars;
pub mod multistep;
pub mod rng;
pub mod selection;
pub mod stats;

pub use error::{Error, Result};
