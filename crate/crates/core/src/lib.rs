//! Intuitionistic fuzzy cognitive maps for interpretable image
//! classification: fuzzy-set algebra, map reasoning, region features,
//! data-driven map construction, classification with linguistic
//! explanations, and the on-disk pack and model formats.

pub mod cluster;
pub mod error;
pub mod features;
pub mod ifs;
pub mod inference;
pub mod model;
pub mod pack;
pub mod reasoning;
pub mod training;

pub use error::{Error, Result};
