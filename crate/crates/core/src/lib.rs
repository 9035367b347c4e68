//! Enumeration and statistics of multiplicative epsilon-approximates of real
//! matrices: approximate streams, data packets, diagonal-flow visits, return
//! times and the closed-form constants their counts are compared against.

pub mod cf;
pub mod config;
pub mod ddouble;
pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod norms;
pub mod packet;
pub mod returns;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Approximate, Decomposition, NormKind, NormSpec, Params, Precision, Provenance, Setup, Target,
};
