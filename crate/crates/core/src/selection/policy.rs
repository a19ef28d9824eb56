use std::collections::BTreeMap;

use rand::{Rng, RngCore};

use crate::signal::RelayPair;

use super::table::build_scoped_table;
use super::{select_best, select_greedy, Hop, HopScope, LinkSinrEntry, OpCounter, SelectionError, SelectionModel};

/// What a selector sees in one epoch.
pub struct SelectionRequest<'a> {
    pub model: &'a SelectionModel,
    pub sigma2: f64,
    pub scope: HopScope,
    pub feasible: &'a dyn Fn(Hop, RelayPair) -> bool,
}

/// A relay-pair selection strategy. Selectors may keep state across epochs
/// of one trial; a fresh instance is created per trial.
pub trait PairSelector: Send {
    fn name(&self) -> &'static str;

    fn select(
        &mut self,
        request: &SelectionRequest<'_>,
        rng: &mut dyn RngCore,
        counter: &mut OpCounter,
    ) -> Result<Option<LinkSinrEntry>, SelectionError>;
}

/// Evaluates every pair on every allowed hop.
#[derive(Debug, Default)]
pub struct ExhaustiveSelector;

impl PairSelector for ExhaustiveSelector {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn select(
        &mut self,
        request: &SelectionRequest<'_>,
        _rng: &mut dyn RngCore,
        counter: &mut OpCounter,
    ) -> Result<Option<LinkSinrEntry>, SelectionError> {
        let table = build_scoped_table(request.model, request.sigma2, request.scope, counter)?;
        Ok(select_best(&table, request.feasible))
    }
}

#[derive(Debug, Default)]
pub struct GreedySelector;

impl PairSelector for GreedySelector {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn select(
        &mut self,
        request: &SelectionRequest<'_>,
        _rng: &mut dyn RngCore,
        counter: &mut OpCounter,
    ) -> Result<Option<LinkSinrEntry>, SelectionError> {
        select_greedy(request.model, request.sigma2, request.scope, request.feasible, counter)
    }
}

/// Uniform choice among the feasible links, ignoring SINR.
#[derive(Debug, Default)]
pub struct RandomSelector;

impl PairSelector for RandomSelector {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(
        &mut self,
        request: &SelectionRequest<'_>,
        rng: &mut dyn RngCore,
        counter: &mut OpCounter,
    ) -> Result<Option<LinkSinrEntry>, SelectionError> {
        let relays = request.model.relays();
        if relays < 2 {
            return Err(SelectionError::TooFewRelays(relays));
        }
        let candidates: Vec<(Hop, RelayPair)> = request
            .scope
            .hops()
            .iter()
            .flat_map(|&hop| RelayPair::all(relays).map(move |pair| (hop, pair)))
            .filter(|&(hop, pair)| (request.feasible)(hop, pair))
            .collect();
        if candidates.is_empty() {
            return Ok(None);
        }
        let (hop, pair) = candidates[rng.random_range(0..candidates.len())];
        let sinr = request.model.sinr(hop, pair, request.sigma2, counter)?;
        Ok(Some(LinkSinrEntry { hop, pair, sinr }))
    }
}

/// Round-robin over the consecutive pairs (1,2), (3,4), ...; no SINR
/// ranking. On both hops the cycle visits `sr` then `rd` of each pair.
#[derive(Debug, Default)]
pub struct FixedPairSelector {
    cursor: usize,
}

impl PairSelector for FixedPairSelector {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn select(
        &mut self,
        request: &SelectionRequest<'_>,
        _rng: &mut dyn RngCore,
        counter: &mut OpCounter,
    ) -> Result<Option<LinkSinrEntry>, SelectionError> {
        let relays = request.model.relays();
        if relays < 2 {
            return Err(SelectionError::TooFewRelays(relays));
        }
        let cycle: Vec<(Hop, RelayPair)> = RelayPair::consecutive(relays)
            .flat_map(|pair| request.scope.hops().iter().map(move |&hop| (hop, pair)))
            .collect();
        for step in 0..cycle.len() {
            let index = (self.cursor + step) % cycle.len();
            let (hop, pair) = cycle[index];
            if (request.feasible)(hop, pair) {
                self.cursor = index + 1;
                let sinr = request.model.sinr(hop, pair, request.sigma2, counter)?;
                return Ok(Some(LinkSinrEntry { hop, pair, sinr }));
            }
        }
        Ok(None)
    }
}

type SelectorFactory = fn() -> Box<dyn PairSelector>;

/// Selection policies by name.
#[derive(Clone)]
pub struct SelectorRegistry {
    factories: BTreeMap<&'static str, SelectorFactory>,
}

impl SelectorRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register("exhaustive", || Box::new(ExhaustiveSelector));
        registry.register("greedy", || Box::new(GreedySelector));
        registry.register("random", || Box::new(RandomSelector));
        registry.register("fixed", || Box::<FixedPairSelector>::default());
        registry
    }

    pub fn register(&mut self, name: &'static str, factory: SelectorFactory) {
        self.factories.insert(name, factory);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn PairSelector>, SelectionError> {
        self.factories.get(name).map(|f| f()).ok_or_else(|| SelectionError::UnknownPolicy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }
}

impl Default for SelectorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
