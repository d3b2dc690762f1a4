//! Cross-network friendship analysis.
//!
//! Models users who hold accounts on two or more online social networks and
//! answers three kinds of questions about them:
//!
//! * which accounts belong to the same person ([`identity`]),
//! * how a person spreads and overlaps friendships across networks
//!   ([`measures`]),
//! * whether a missing friendship can be predicted from the other network
//!   ([`features`], [`prediction`], [`experiment`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command
//! line live in the companion `crossfriend` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod identity;
pub mod measures;
pub mod prediction;
pub mod special;

pub use error::{Error, Result};
pub use graph::{
    EdgeRecord, GraphBuilder, IngestConfig, IngestSummary, MultiNetworkGraph, Network, NetworkId, UserRef,
};
pub use identity::{AccountRecord, BigramVector, IdentityMap, MatchEdge, MatchMethod};
pub use measures::{LinkedUser, MaintenanceProfile, ProfileTable};
