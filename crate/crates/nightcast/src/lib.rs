//! Command-line tools, file formats and the live HTTP service around
//! [`nightcast_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod parallel;
pub mod service;

pub use error::{Error, Result};
pub use nightcast_core as core;
