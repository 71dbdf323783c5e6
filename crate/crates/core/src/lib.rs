//! Region analysis for maxout networks.
//!
//! * [`net`]: architectures, parameters, evaluation and per-region affine maps.
//! * [`feas`]: feasibility of linear systems (phase-one simplex).
//! * [`enumerate`]: exact enumeration of activation regions and decision-boundary
//!   pieces, plus the grid-gradient approximation.
//! * [`init`]: parameter samplers and deterministic constructions.
//! * [`bounds`]: closed-form counts and bounds, and a Monte Carlo estimate of the
//!   gradient constant.
//!
//! Network, feasibility and enumeration code is generic over [`Scalar`] (`f32`/`f64`);
//! the aliases below fix the default `f64` instantiation.

pub mod bounds;
pub mod enumerate;
pub mod error;
pub mod feas;
pub mod init;
pub mod net;
pub mod rng;
pub mod scalar;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Network = net::Network<f64>;
pub type Network32 = net::Network<f32>;
pub type Parameters = net::Parameters<f64>;
pub type AffineMap = net::AffineMap<f64>;
pub type InequalitySystem = feas::InequalitySystem<f64>;
pub type Region = enumerate::Region<f64>;
