use crate::selection::SelectorRegistry;
use crate::signal::NoiseModel;

use super::trial::{run_direct_trial, EpochMetrics, TrialSetup, TrialState};
use super::{ConfigError, Scheme, SimConfig, SimError};

fn require_relay_pairs(config: &SimConfig) -> Result<(), ConfigError> {
    if config.relays < 2 {
        return Err(ConfigError::new(
            "relays",
            format!("relayed schemes need at least 2 relays, got {}", config.relays),
        ));
    }
    Ok(())
}

fn require_even_relays(config: &SimConfig, why: &str) -> Result<(), ConfigError> {
    if !config.relays.is_multiple_of(2) {
        return Err(ConfigError::new("relays", format!("{why} needs an even relay count, got {}", config.relays)));
    }
    Ok(())
}

fn validate_policy(config: &SimConfig) -> Result<(), ConfigError> {
    require_relay_pairs(config)?;
    if config.policy == "fixed" {
        require_even_relays(config, "the fixed pairing policy")?;
    }
    Ok(())
}

fn drive(
    mut state: TrialState,
    mut step: impl FnMut(&mut TrialState) -> Result<EpochMetrics, SimError>,
) -> Result<Vec<EpochMetrics>, SimError> {
    let cutoff = state.cutoff();
    let mut epochs = Vec::with_capacity(2 * state.blocks());
    while state.has_work() && state.epoch() < cutoff {
        epochs.push(step(&mut state)?);
    }
    Ok(epochs)
}

fn buffered_trial(
    config: &SimConfig,
    packet: usize,
    setup: TrialSetup,
    noise: NoiseModel,
    capacity: usize,
    policy: &str,
) -> Result<Vec<EpochMetrics>, SimError> {
    let selector = SelectorRegistry::builtin().create(policy)?;
    let state = TrialState::new(config, packet, setup, noise, capacity, selector)?;
    drive(state, TrialState::run_epoch)
}

/// Buffer-aided relaying: each epoch picks the best feasible link over
/// both hops.
#[derive(Debug, Default)]
pub struct BufferedScheme;

impl Scheme for BufferedScheme {
    fn name(&self) -> &'static str {
        "buffered"
    }

    fn validate(&self, config: &SimConfig) -> Result<(), ConfigError> {
        validate_policy(config)
    }

    fn uses_buffers(&self) -> bool {
        true
    }

    fn label(&self, config: &SimConfig) -> String {
        format!("buffered-{}", config.buffer.mode.name())
    }

    fn run_trial(
        &self,
        config: &SimConfig,
        packet: usize,
        noise: NoiseModel,
        capacity: usize,
    ) -> Result<Vec<EpochMetrics>, SimError> {
        buffered_trial(config, packet, TrialSetup::draw(config, packet)?, noise, capacity, &config.policy)
    }
}

/// Strict reception/transmission alternation; the pair is chosen on the
/// relay-destination hop only.
#[derive(Debug, Default)]
pub struct NonBufferedScheme;

impl Scheme for NonBufferedScheme {
    fn name(&self) -> &'static str {
        "non-buffered"
    }

    fn validate(&self, config: &SimConfig) -> Result<(), ConfigError> {
        validate_policy(config)
    }

    fn run_trial(
        &self,
        config: &SimConfig,
        packet: usize,
        noise: NoiseModel,
        _capacity: usize,
    ) -> Result<Vec<EpochMetrics>, SimError> {
        let selector = SelectorRegistry::builtin().create(&config.policy)?;
        let state = TrialState::new(config, packet, TrialSetup::draw(config, packet)?, noise, 0, selector)?;
        drive(state, TrialState::run_non_buffered_epoch)
    }
}

/// All relays decode, all consecutive pairs forward together.
#[derive(Debug, Default)]
pub struct NoSelectionScheme;

impl Scheme for NoSelectionScheme {
    fn name(&self) -> &'static str {
        "no-selection"
    }

    fn validate(&self, config: &SimConfig) -> Result<(), ConfigError> {
        require_relay_pairs(config)?;
        require_even_relays(config, "joint transmission by consecutive pairs")
    }

    fn policy_label(&self, _config: &SimConfig) -> String {
        "none".into()
    }

    fn run_trial(
        &self,
        config: &SimConfig,
        packet: usize,
        noise: NoiseModel,
        _capacity: usize,
    ) -> Result<Vec<EpochMetrics>, SimError> {
        // the selector is never consulted
        let selector = SelectorRegistry::builtin().create("fixed")?;
        let state = TrialState::new(config, packet, TrialSetup::draw(config, packet)?, noise, 0, selector)?;
        drive(state, TrialState::run_joint_epoch)
    }
}

/// Buffer-aided exhaustive selection for the first user alone, on the same
/// codes, channels and bits the multiuser schemes see.
#[derive(Debug, Default)]
pub struct SingleUserBoundScheme;

impl Scheme for SingleUserBoundScheme {
    fn name(&self) -> &'static str {
        "single-user-bound"
    }

    fn validate(&self, config: &SimConfig) -> Result<(), ConfigError> {
        require_relay_pairs(config)
    }

    fn uses_buffers(&self) -> bool {
        true
    }

    fn policy_label(&self, _config: &SimConfig) -> String {
        "exhaustive".into()
    }

    fn run_trial(
        &self,
        config: &SimConfig,
        packet: usize,
        noise: NoiseModel,
        capacity: usize,
    ) -> Result<Vec<EpochMetrics>, SimError> {
        let setup = TrialSetup::draw(config, packet)?.single_user();
        buffered_trial(config, packet, setup, noise, capacity, "exhaustive")
    }
}

/// Relay-free calibration link: unit-gain AWGN from every user to the
/// destination.
#[derive(Debug, Default)]
pub struct DirectScheme;

impl Scheme for DirectScheme {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn validate(&self, _config: &SimConfig) -> Result<(), ConfigError> {
        Ok(())
    }

    fn policy_label(&self, _config: &SimConfig) -> String {
        "none".into()
    }

    fn run_trial(
        &self,
        config: &SimConfig,
        packet: usize,
        noise: NoiseModel,
        _capacity: usize,
    ) -> Result<Vec<EpochMetrics>, SimError> {
        let setup = TrialSetup::draw(&SimConfig { relays: 0, ..config.clone() }, packet)?;
        run_direct_trial(config, packet, &setup, noise)
    }
}
