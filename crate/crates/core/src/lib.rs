// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beambook;
pub mod beamformers;
pub mod channel;
pub mod error;
pub mod harness;
pub mod music;
pub mod numerics;
pub mod power_iter;
pub mod rng;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, C64};
