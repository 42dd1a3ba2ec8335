pub mod cli;
pub mod config;
pub mod error;
pub mod feller;
pub mod fracapprox;
pub mod kernels;
pub mod ode;
pub mod quad;
pub mod resolvent;
pub mod scale;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
