//! Achievable-region computation and coding-scheme simulation for a
//! two-user multiple-access channel in which one user communicates covertly.

pub mod channel;
pub mod cli;
pub mod codingsim;
pub mod presets;
pub mod probability;
pub mod region;
pub mod registry;
