//! Ordinal ranks of well-founded trees and the derivative-oscillation
//! rank of differentiable functions on the unit interval.

pub mod cli;
pub mod error;
pub mod lazy;
pub mod ordinal;
pub mod rational;
pub mod realfunc;
pub mod reduction;
pub mod kwengine;
pub mod selftest;
pub mod simpson;
pub mod treeschema;

pub use error::{Error, Result};
pub use ordinal::Ordinal;
pub use treeschema::{ChildEntry, FamilyGen, NodeAddress, TreeSchema};
