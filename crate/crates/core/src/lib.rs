//! Placement compiler for spiking neural networks targeting multi-core
//! neuromorphic fabrics with a three-level (R0/R1/R2) routing hierarchy.
//!
//! The pipeline is pure and allocation-only, so the crate builds without
//! `std`:
//!
//! 1. [`placer::assign_cores`] groups neurons into cores by clique extraction.
//! 2. [`placer::compute_distance_map`] derives the inter-core quasi-metric.
//! 3. [`placer::compile`] picks an R1 layout and places every connection
//!    at R0, R1, R2, on a programmable synapse, or flags it unplaceable.
//! 4. [`fabric::synthesize_tables`] turns the placement into per-neuron
//!    routing rows, which [`simulator`] replays through the router tree.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod clique;
pub mod error;
pub mod experiments;
pub mod fabric;
pub mod netmodel;
pub mod placer;
pub mod report;
pub mod simulator;

pub use error::{Error, Result};
pub use fabric::{FabricConfig, FabricTopology, RouterLevel, RoutingTables};
pub use netmodel::{DecayProfile, Edge, EdgeSign, NetworkModel};
pub use placer::{Compilation, CoreAssignment, DistanceMap, PlacementResult};
