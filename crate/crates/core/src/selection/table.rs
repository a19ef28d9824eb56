use crate::signal::RelayPair;

use super::{Hop, HopScope, LinkSinrEntry, OpCounter, SelectionError, SelectionModel};

/// Every candidate link of one epoch with a descending-SINR view.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSinrTable {
    entries: Vec<LinkSinrEntry>,
    order: Vec<usize>,
}

impl LinkSinrTable {
    pub fn from_entries(entries: Vec<LinkSinrEntry>) -> Self {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| entries[a].rank_cmp(&entries[b]));
        Self { entries, order }
    }

    pub fn entries(&self) -> &[LinkSinrEntry] {
        &self.entries
    }

    pub fn sorted(&self) -> impl Iterator<Item = &LinkSinrEntry> + '_ {
        self.order.iter().map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub(crate) fn build_scoped_table(
    model: &SelectionModel,
    sigma2: f64,
    scope: HopScope,
    counter: &mut OpCounter,
) -> Result<LinkSinrTable, SelectionError> {
    let relays = model.relays();
    if relays < 2 {
        return Err(SelectionError::TooFewRelays(relays));
    }
    let mut entries = Vec::with_capacity(relays * (relays - 1));
    for &hop in scope.hops() {
        for pair in RelayPair::all(relays) {
            let sinr = model.sinr(hop, pair, sigma2, counter)?;
            entries.push(LinkSinrEntry { hop, pair, sinr });
        }
    }
    Ok(LinkSinrTable::from_entries(entries))
}

/// All `L(L-1)/2` pairs on both hops.
pub fn build_table(
    model: &SelectionModel,
    sigma2: f64,
    counter: &mut OpCounter,
) -> Result<LinkSinrTable, SelectionError> {
    build_scoped_table(model, sigma2, HopScope::Both, counter)
}

/// Highest-SINR entry that passes `feasible`, falling back down the sorted
/// order. `None` means no link can be used this epoch.
pub fn select_best(table: &LinkSinrTable, feasible: &dyn Fn(Hop, RelayPair) -> bool) -> Option<LinkSinrEntry> {
    table.sorted().find(|e| feasible(e.hop, e.pair)).copied()
}

/// Two-stage search: fix the relay with the strongest single link on any
/// allowed hop, then evaluate only the pairs containing it.
pub fn select_greedy(
    model: &SelectionModel,
    sigma2: f64,
    scope: HopScope,
    feasible: &dyn Fn(Hop, RelayPair) -> bool,
    counter: &mut OpCounter,
) -> Result<Option<LinkSinrEntry>, SelectionError> {
    let relays = model.relays();
    if relays < 2 {
        return Err(SelectionError::TooFewRelays(relays));
    }
    let mut anchor: Option<(f64, usize)> = None;
    for &hop in scope.hops() {
        let terms = model.hop(hop);
        for relay in 0..relays {
            let q = terms.relay_quality(relay, counter);
            // strict > keeps the earliest (hop, relay) on ties
            if anchor.is_none_or(|(best, _)| q > best) {
                anchor = Some((q, relay));
            }
        }
    }
    let (_, anchor) = anchor.expect("at least one hop in scope");
    let mut entries = Vec::with_capacity(scope.hops().len() * (relays - 1));
    for &hop in scope.hops() {
        for other in (0..relays).filter(|&l| l != anchor) {
            let pair = RelayPair::new(anchor, other).expect("distinct relays");
            let sinr = model.sinr(hop, pair, sigma2, counter)?;
            entries.push(LinkSinrEntry { hop, pair, sinr });
        }
    }
    Ok(select_best(&LinkSinrTable::from_entries(entries), feasible))
}
