#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocks;
pub mod dynamics;
pub mod error;
pub mod mlf;
pub mod observables;
pub mod run;
pub mod unitarization;

pub use error::{Error, Result};
