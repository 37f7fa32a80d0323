//! Exact query evaluation on tree-like uncertain data.
//!
//! The crate is `no_std` (with `alloc`). It covers uncertain relational
//! instances (TID, c-, pc- and pcc-instances) with brute-force possible-world
//! oracles, tree decompositions of incidence graphs, compilation of unions of
//! conjunctive queries into deterministic bag automata, lineage circuits
//! obtained by running those automata on uncertain instances, junction-tree
//! message passing on the circuits, probabilistic XML documents, and labeled
//! partial orders with a positive relational algebra.
//!
//! IO, timings and the command-line front-end live in the `uncertain` crate.
#![cfg_attr(not(test), no_std)]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod circuits;
pub mod graph;
pub mod instances;
pub mod porder;
pub mod prob;
pub mod prxml;
pub mod query;
pub mod treedec;
pub mod weight;

mod lexer;

pub use circuits::{Circuit, Gate, GateId};
pub use graph::Graph;
pub use instances::{
    Annotation, CInstance, Event, Fact, Instance, PCCInstance, PCInstance, Schema, TIDInstance,
    Valuation,
};
pub use query::{BagAutomaton, Query, QueryAutomaton};
pub use treedec::TreeDecomposition;
pub use weight::Weight;

/// Default cap on the number of events brute-force oracles accept.
pub const DEFAULT_MAX_EVENTS: usize = 20;
