pub mod adversaries;
pub mod catalog;
pub mod harness;
pub mod learners;
pub mod logic;
pub mod pairing;
pub mod reductions;
pub mod structures;
