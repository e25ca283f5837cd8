#![allow(clippy::needless_range_loop, clippy::type_complexity, clippy::wrong_self_convention)]

pub mod arith;
pub mod classfield;
pub mod curve;
pub mod error;
pub mod explorer;
pub mod galois;
pub mod isogeny;
pub mod linalg;
pub mod pairing_model;

pub use error::{Error, Result};
