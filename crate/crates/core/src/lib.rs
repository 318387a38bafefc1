pub mod arith;
pub mod error;
pub mod surd;
pub mod enumerate;
pub mod units;
pub mod verify;
pub mod cli;
