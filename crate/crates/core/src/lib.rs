pub mod bits;
pub mod cli;
pub mod combinatorics;
pub mod confusion;
pub mod construct;
pub mod decoder;
pub mod error;
pub mod format;
pub mod matrix;
pub mod search;
pub mod simulator;
pub mod verify;
