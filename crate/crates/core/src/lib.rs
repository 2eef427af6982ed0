//! Reinforcement-learning agents for elastic resource management.
//!
//! The central agent, MDP_DT, keeps a full MDP model whose states are the
//! leaves of a decision tree. Leaves are split when a two-sample test finds
//! that experiences inside a state behave differently along some parameter.

pub mod agents;
pub mod env;
pub mod harness;
pub mod model;
pub mod split;
pub mod stats;
pub mod tree;
