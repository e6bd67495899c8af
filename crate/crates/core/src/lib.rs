//! Proximodistal exploration in reaching: a weighted-averaging policy search
//! over planar arms, the campaign statistics that expose the order in which
//! joints are freed, and static analyses of joint sensitivity and
//! interaction.

pub mod analysis;
pub mod arm;
pub mod config;
pub mod cost;
pub mod demo;
pub mod dtw;
pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod policy;
pub mod svg;

pub use error::{Error, Result};
