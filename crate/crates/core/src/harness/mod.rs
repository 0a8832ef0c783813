//! Worked example, synthetic instances and experiment drivers.

pub mod example;
pub mod experiments;
pub mod supply_chain;
