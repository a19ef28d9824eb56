//! Relay-pair selection driven by the pair SINR of both hops.
//!
//! Every candidate link is a `(hop, pair)`; its SINR comes from the per-link
//! filter/signature terms in [`LinkTerms`]. Selectors walk the candidates in
//! decreasing SINR and return the first one the caller marks feasible.

mod complexity;
mod policy;
mod sinr;
mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::DetectorError;
use crate::signal::RelayPair;

pub use complexity::{count_complexity, ComplexityBounds};
pub use policy::{
    ExhaustiveSelector, FixedPairSelector, GreedySelector, PairSelector, RandomSelector, SelectionRequest,
    SelectorRegistry,
};
pub use sinr::{sinr_relay_dest_pair, sinr_source_relay_pair, HopLinks, LinkTerms, SelectionModel};
pub use table::{build_table, select_best, select_greedy, LinkSinrTable};

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("pair selection needs at least two relays, got {0}")]
    TooFewRelays(usize),
    #[error("relay pair {pair} out of range for {relays} relays")]
    PairOutOfRange { pair: RelayPair, relays: usize },
    #[error("degenerate SINR for pair {0}: zero noise and no interfering relays")]
    Degenerate(RelayPair),
    #[error("unknown selection policy `{0}`")]
    UnknownPolicy(String),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// Ordering `SourceRelay < RelayDest` is the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hop {
    SourceRelay,
    RelayDest,
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hop::SourceRelay => "sr",
            Hop::RelayDest => "rd",
        })
    }
}

/// Which hops a selection may choose from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HopScope {
    Both,
    RelayDestOnly,
}

impl HopScope {
    pub fn hops(self) -> &'static [Hop] {
        match self {
            HopScope::Both => &[Hop::SourceRelay, Hop::RelayDest],
            HopScope::RelayDestOnly => &[Hop::RelayDest],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSinrEntry {
    pub hop: Hop,
    pub pair: RelayPair,
    pub sinr: f64,
}

impl LinkSinrEntry {
    /// Descending SINR, then ascending `(hop, m, n)`.
    pub fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.sinr.total_cmp(&self.sinr).then_with(|| (self.hop, self.pair).cmp(&(other.hop, other.pair)))
    }
}

impl fmt::Display for LinkSinrEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{} sinr={:.4}", self.hop, self.pair, self.sinr)
    }
}

/// Arithmetic spent on selection. A complex multiply or add counts once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub multiplications: u64,
    pub additions: u64,
    /// Pair SINR evaluations.
    pub sinr_evaluations: u64,
}

impl OpCounter {
    pub fn mul(&mut self, n: u64) {
        self.multiplications += n;
    }

    pub fn add(&mut self, n: u64) {
        self.additions += n;
    }

    pub fn merge(&mut self, other: &OpCounter) {
        self.multiplications += other.multiplications;
        self.additions += other.additions;
        self.sinr_evaluations += other.sinr_evaluations;
    }
}
