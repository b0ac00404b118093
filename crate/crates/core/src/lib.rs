//! Reachability analysis for hybrid automata with linear dynamics.
//!
//! Reachable sets are represented through support functions and
//! over-approximated by template polytopes. Three breadth-first exploration
//! engines are provided: a sequential one, a lock-free parallel one with
//! random scattering of successors, and a task-parallel one that splits post
//! operations into atomic tasks and balances them by precomputed cost.

pub mod numerics;
pub mod geometry;
pub mod automaton;
pub mod postc;
pub mod postd;
pub mod cost;
pub mod engines;
