// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classical;
pub mod error;
pub mod fluctuation;
pub mod modes;
pub mod numerics;
pub mod oracle;
pub mod params;
pub mod profile;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{make_params, ModelParams, ParamMap};
