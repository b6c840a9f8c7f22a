//! Guidance, navigation and control toolkit for small-body surface access.
//!
//! The crate evaluates the exact exterior gravity of a constant-density
//! polyhedron, propagates spacecraft motion in the asteroid's rotating frame,
//! generates and tracks quadratic-acceleration descent profiles, controls
//! attitude with a saturating three-wheel reaction-wheel set, and plans
//! ballistic hops by shooting on the launch velocity.
//!
//! Sign conventions: the gravitational potential `U` is positive and the
//! acceleration is `g = grad U`, pointing toward the body.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod environment;
pub mod frames;
pub mod gravity;
pub mod guidance;
pub mod hop;
pub mod mesh;

pub use nalgebra::{Matrix3, UnitQuaternion, Vector3};

/// Newtonian constant of gravitation, m^3 kg^-1 s^-2.
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_30e-11;
