//! Communication graph design for decentralized learning over wireless
//! broadcast networks.
//!
//! The pipeline turns an undirected base topology into a directed
//! activated graph that is cheap to schedule (few collision-free slots per
//! iteration) while mixing fast enough for push-sum SGD:
//!
//! 1. [`spanning::min_degree_spanning_tree`] finds a low-degree spanning tree,
//! 2. [`spanning::distance_augmentation_order`] adds `K` distance-reducing edges,
//! 3. [`design::orient_edges`] orients the result into a strongly connected digraph,
//! 4. [`design::augment_links`] activates extra links that fit existing slots.
//!
//! [`design::sweep_k`] picks `K`, [`schedule`] builds the slot assignment,
//! [`mixing`] and [`theory`] turn the graph into weights and iteration
//! bounds, and [`sim`] runs the resulting algorithm on synthetic problems.

pub mod design;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod mixing;
pub mod schedule;
pub mod sim;
pub mod spanning;
pub mod theory;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
