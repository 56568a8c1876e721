//! Table-to-text generation with dynamic content planning: data model and
//! plan extraction, a four-component neural generator (record encoder,
//! pointer planner, plan-gated decoder with conditional copy, record
//! reconstructor), joint training with verified gradients, beam-search
//! inference, a template baseline, and extractive evaluation (RG/CS/CO/BLEU).

pub mod config;
pub mod corpus;
pub mod decoder;
pub mod dynamic;
pub mod encoder;
pub mod error;
pub mod lstm;
pub mod model;
pub mod params;
pub mod planner;
pub mod plans;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub mod reconstruct;
pub mod training;
pub mod eval;
pub mod inference;
pub mod template;
