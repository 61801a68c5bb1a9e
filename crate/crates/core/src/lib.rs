//! Horizontal convex analysis on Carnot groups.
//!
//! The crate works in exponential coordinates on two step-2/step-3 models,
//! the Heisenberg group `H^1` and the Engel group, and provides:
//!
//! * group arithmetic, dilations, gauge norms and horizontal planes
//!   ([`group`]);
//! * sampled verification of H-convexity, H-semiconvexity and
//!   H-subdifferential membership ([`hconvex`]);
//! * cost functions, c H-subdifferentials, the plane-restricted Fenchel
//!   transform and c H-convexity ([`cost`]);
//! * c H-cyclic monotonicity and Rockafellar potentials on finite pair sets
//!   ([`monotone`]);
//! * exact discrete horizontal transport on the Heisenberg group
//!   ([`transport`]).
//!
//! Every randomized check derives the randomness of sample `i` from
//! `(seed, i)`, so verdicts do not depend on the number of threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod field;
pub mod group;
pub mod hconvex;
pub mod io;
pub mod monotone;
pub mod sampling;
pub mod transport;

pub use cost::{BuiltinCost, CostFunction, FnCost, SquareGrid};
pub use error::{Error, Result};
pub use field::{BuiltinField, FnField, Polynomial, ScalarField};
pub use group::{GroupModel, GroupPoint, HorizontalVector, LayeredVector};
pub use hconvex::{SemiconvexityReport, Verdict};
pub use monotone::{CycleWitness, HGraph, MonotonePairSet, MonotoneReport, PotentialTable};
pub use sampling::{Region, Sampling};
pub use transport::{DiscreteMeasure, TransportInstance, TransportPlan};
