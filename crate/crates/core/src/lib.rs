#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod checks;
pub mod ddpg;
pub mod energy;
pub mod env;
pub mod error;
pub mod fed;
pub mod mfris;
pub mod numerics;
pub mod runner;

pub use error::{Error, Result};
