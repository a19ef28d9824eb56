use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buffer::{BufferError, BufferSettings};
use crate::detector::{DetectorError, DetectorKind};
use crate::dstc::DstcError;
use crate::selection::{SelectionError, SelectorRegistry};
use crate::signal::ModelError;

use super::SchemeRegistry;

/// A rejected configuration value, naming the offending key.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("configuration error in `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { key: key.into(), reason: reason.into() }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Dstc(#[from] DstcError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Buffer(#[from] BufferError),
    #[error("protocol invariant violated at epoch {epoch}: {detail}")]
    Invariant { epoch: u64, detail: String },
}

/// Experiment parameters. Defaults are the 3-user, 6-relay, N = 16
/// operating point with MMSE relays, a RAKE destination and J = 6.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub users: usize,
    pub relays: usize,
    /// Processing gain N.
    pub chips: usize,
    /// Symbols per user per packet (P); two symbols form one block.
    pub symbols: usize,
    pub packets: usize,
    pub snr_db: Vec<f64>,
    pub relay_detector: DetectorKind,
    pub dest_detector: DetectorKind,
    /// Selection policy name, see [`SelectorRegistry`].
    pub policy: String,
    /// Scheme name, see [`SchemeRegistry`].
    pub scheme: String,
    pub buffer: BufferSettings,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            users: 3,
            relays: 6,
            chips: 16,
            symbols: 1000,
            packets: 200,
            snr_db: (0..=8).map(|i| 2.0 * f64::from(i)).collect(),
            relay_detector: DetectorKind::Mmse,
            dest_detector: DetectorKind::Rake,
            policy: "exhaustive".into(),
            scheme: "buffered".into(),
            buffer: BufferSettings::default(),
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn blocks_per_packet(&self) -> usize {
        self.symbols / 2
    }

    /// Range and cross-field checks shared by every scheme.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.users == 0 {
            return Err(ConfigError::new("users", "must be at least 1"));
        }
        if self.chips == 0 {
            return Err(ConfigError::new("chips", "must be at least 1"));
        }
        if self.symbols < 2 || !self.symbols.is_multiple_of(2) {
            return Err(ConfigError::new("symbols", format!("must be a positive even count, got {}", self.symbols)));
        }
        if self.packets == 0 {
            return Err(ConfigError::new("packets", "must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(ConfigError::new("snr", "grid must contain at least one point"));
        }
        if let Some(bad) = self.snr_db.iter().find(|s| s.is_nan()) {
            return Err(ConfigError::new("snr", format!("{bad} is not a number")));
        }
        self.buffer.validate().map_err(|e| ConfigError::new("buffer", e.to_string()))?;
        let selectors = SelectorRegistry::builtin();
        if !selectors.contains(&self.policy) {
            let known: Vec<_> = selectors.names().collect();
            return Err(ConfigError::new(
                "policy",
                format!("unknown policy `{}` (known: {})", self.policy, known.join(", ")),
            ));
        }
        let schemes = SchemeRegistry::builtin();
        let scheme = schemes.get(&self.scheme).ok_or_else(|| {
            let known: Vec<_> = schemes.names().collect();
            ConfigError::new("scheme", format!("unknown scheme `{}` (known: {})", self.scheme, known.join(", ")))
        })?;
        scheme.validate(self)
    }
}
