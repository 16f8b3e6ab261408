#![no_std]
extern crate alloc;

pub mod benchmarks;
pub mod expr;
pub mod interval;
pub mod linalg;
pub mod lp;
pub mod metrics;
mod math;
pub mod observers;
pub mod rangebound;
pub mod setcore;
pub mod sysmodel;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
