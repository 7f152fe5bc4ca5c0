//! Allocations of indivisible goods that minimize K-approval envy.
//!
//! An agent K-approval envies another when she envies her and at least K
//! agents, herself included, agree from their own preferences that her
//! bundle is worth strictly less. The crate provides the envy measures,
//! an exact minimum-K search, a mixed-integer model exporter, the
//! polynomial house-allocation algorithm, instance generators and an
//! experiment harness.

pub mod dynamics;
pub mod envy;
pub mod error;
pub mod experiment;
pub mod gen;
pub mod hap;
pub mod io;
pub mod mip;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
