pub mod error;
pub mod geometry;
pub mod level;
pub mod magic;
pub mod net;
pub mod potential;
pub mod scaling;
pub mod unionfind;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{rotate, rotate_about, Vec2};
