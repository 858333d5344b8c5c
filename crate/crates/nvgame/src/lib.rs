//! File formats, a thread-pool executor and the command-line front end for
//! [`nvgame_core`].

pub mod cli;
pub mod error;
pub mod format;
pub mod io;
pub mod parallel;

pub use error::CliError;
pub use nvgame_core;
