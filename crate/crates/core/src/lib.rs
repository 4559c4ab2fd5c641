//! Batched differentiable task-and-motion planning for planar arms.
//!
//! The solver searches over discrete plan skeletons and, for each skeleton,
//! jointly optimizes a batch of candidate continuous parameter assignments
//! ("particles") against a penalty relaxation of the skeleton's constraint
//! network. Particles are initialized by composing conditional samplers over
//! constraint subgraphs, optimized with Adam, and scored by a plan
//! feasibility heuristic that orders the skeleton queue.

pub mod costs;
pub mod domain;
pub mod geometry;

pub use costs::{CostConfig, CostTermKind};
pub use domain::{Domain, GoalCostSpec, GroundAction, State, TampProblem, World};
pub use geometry::{Box2, KinematicChain, Pose2, SphereSet};
