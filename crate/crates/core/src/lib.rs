//! Robust newsvendor cooperative games over Frechet classes of joint demand
//! distributions.
//!
//! The crate is `no_std` and only needs an allocator. Parallel work goes
//! through the [`exec::Executor`] trait so callers can plug in a thread pool.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coalition;
pub mod coop;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod lp;
pub mod newsvendor;
pub mod robust;
pub mod search;
pub mod stress;

pub use coalition::Coalition;
pub use error::{Error, Result};
