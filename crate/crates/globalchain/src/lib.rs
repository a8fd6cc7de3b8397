//! Simulator and global-pulse compiler for globally controlled three-species
//! spin chains.

pub mod cli;
pub mod clifford;
pub mod compiler;
pub mod densesim;
pub mod error;
pub mod exec;
pub mod layout;
pub mod pauli;
pub mod pulse;
pub mod qec;
pub mod stabsim;
pub mod threshold;
pub mod verify;
