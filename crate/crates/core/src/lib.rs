//! Conflict-based search for multi-agent path finding in continuous time.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cbs;
pub mod ccbs;
pub mod error;
pub mod geometry;
pub mod map_graph;
pub mod sipp;
pub mod validator;

pub use ccbs::{solve, ConflictHeuristic, SolveOutcome, SolveStatus, Solution, SolverConfig, Stats};
pub use error::{Error, Result};
pub use geometry::{Action, ActionKind, Interval, MotionSegment, Point2, TimedAction, VertexId};
pub use map_graph::{Agent, Graph, Instance};
pub use sipp::{Constraint, Plan};
pub use validator::{validate, ValidationReport};
