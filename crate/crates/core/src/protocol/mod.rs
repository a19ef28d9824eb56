//! Epoch state machine, transmission schemes and the Monte Carlo sweep.
//!
//! Schemes are trait objects kept in a [`SchemeRegistry`] and looked up by
//! the `scheme` name of a [`SimConfig`].

mod schemes;
mod settings;
mod sweep;
mod trial;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use schemes::{BufferedScheme, DirectScheme, NoSelectionScheme, NonBufferedScheme, SingleUserBoundScheme};
pub use settings::{ConfigError, SimConfig, SimError};
pub use sweep::{
    capacity_schedule, measure_delay, run_sweep, run_trial, run_trial_with, PacketSummary, SweepPoint, SweepResult,
};
pub use trial::{
    run_direct_trial, EpochMetrics, EpochMode, TrialSetup, TrialState, NOISELESS_MMSE_REGULARIZATION, RELAY_AMPLITUDE,
    SOURCE_AMPLITUDE,
};

use crate::signal::NoiseModel;

/// A complete transmission scheme: how one packet is carried from the
/// sources to the destination.
pub trait Scheme: Send + Sync {
    fn name(&self) -> &'static str;

    /// Scheme-specific configuration checks.
    fn validate(&self, config: &SimConfig) -> Result<(), ConfigError>;

    /// Whether the buffer settings affect this scheme.
    fn uses_buffers(&self) -> bool {
        false
    }

    /// Value of the `scheme` output column.
    fn label(&self, _config: &SimConfig) -> String {
        self.name().to_string()
    }

    /// Value of the `policy` output column.
    fn policy_label(&self, config: &SimConfig) -> String {
        config.policy.clone()
    }

    /// Runs one packet at noise level `noise` with buffer capacity `capacity`.
    fn run_trial(
        &self,
        config: &SimConfig,
        packet: usize,
        noise: NoiseModel,
        capacity: usize,
    ) -> Result<Vec<EpochMetrics>, SimError>;
}

/// Transmission schemes by name.
#[derive(Clone)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Arc<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self { schemes: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(BufferedScheme));
        registry.register(Arc::new(NonBufferedScheme));
        registry.register(Arc::new(NoSelectionScheme));
        registry.register(Arc::new(SingleUserBoundScheme));
        registry.register(Arc::new(DirectScheme));
        registry
    }

    pub fn register(&mut self, scheme: Arc<dyn Scheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Scheme>> {
        self.schemes.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.schemes.keys().copied()
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
