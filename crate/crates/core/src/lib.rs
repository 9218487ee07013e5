#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config_space;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod fluid;
pub mod fokker_planck;
pub mod model;
pub mod spectral;
