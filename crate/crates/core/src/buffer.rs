//! Relay buffers and capacity policies.
//!
//! A [`BufferBlock`] is one epoch's worth of decoded symbols for all users
//! (two slots each). The relay pair that received a block stores a copy in
//! each of its two buffers under the same epoch tag; Alamouti forwarding
//! later needs both copies, so blocks leave buffers only in matched pairs
//! through [`pop_common`].

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Bpsk, ChannelRealization, RelayPair};

#[derive(Debug, Error, PartialEq)]
pub enum BufferError {
    #[error("buffer full ({capacity} blocks)")]
    Overflow { capacity: usize },
    #[error("epoch tag {tag} is not newer than the last stored tag {last}")]
    TagOrder { tag: u64, last: u64 },
    #[error("invalid buffer policy: {0}")]
    Policy(String),
    #[error("unknown buffer mode `{0}` (expected fixed, dynamic-snr or dynamic-power)")]
    UnknownMode(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BufferBlock {
    /// `symbols[k] = [b̂_k(2i-1), b̂_k(2i)]`
    pub symbols: Vec<[Bpsk; 2]>,
    pub epoch_tag: u64,
}

/// FIFO of blocks with an adjustable capacity `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelayBuffer {
    queue: VecDeque<BufferBlock>,
    capacity: usize,
}

impl RelayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { queue: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    /// Shrinking below the current occupancy keeps every stored block; the
    /// buffer just refuses pushes until it drains below the new capacity.
    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity;
    }

    pub fn tags(&self) -> impl Iterator<Item = u64> + '_ {
        self.queue.iter().map(|b| b.epoch_tag)
    }

    pub fn push(&mut self, block: BufferBlock) -> Result<(), BufferError> {
        if self.is_full() {
            return Err(BufferError::Overflow { capacity: self.capacity });
        }
        if let Some(last) = self.queue.back() {
            if block.epoch_tag <= last.epoch_tag {
                return Err(BufferError::TagOrder { tag: block.epoch_tag, last: last.epoch_tag });
            }
        }
        self.queue.push_back(block);
        Ok(())
    }

    fn remove_tag(&mut self, tag: u64) -> Option<BufferBlock> {
        let index = self.queue.iter().position(|b| b.epoch_tag == tag)?;
        self.queue.remove(index)
    }
}

/// Oldest epoch tag held by both buffers. Queues are tag-sorted, so this is
/// a merge walk.
pub fn common_tag(p: &RelayBuffer, q: &RelayBuffer) -> Option<u64> {
    let mut a = p.tags().peekable();
    let mut b = q.tags().peekable();
    while let (Some(&x), Some(&y)) = (a.peek(), b.peek()) {
        match x.cmp(&y) {
            std::cmp::Ordering::Equal => return Some(x),
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
        }
    }
    None
}

/// Removes and returns the oldest blocks sharing a tag in both buffers.
pub fn pop_common(p: &mut RelayBuffer, q: &mut RelayBuffer) -> Option<(BufferBlock, BufferBlock)> {
    let tag = common_tag(p, q)?;
    let a = p.remove_tag(tag).expect("tag found in p");
    let b = q.remove_tag(tag).expect("tag found in q");
    Some((a, b))
}

/// [`pop_common`] on two buffers of one relay bank.
pub fn pop_common_pair(buffers: &mut [RelayBuffer], pair: RelayPair) -> Option<(BufferBlock, BufferBlock)> {
    let (head, tail) = buffers.split_at_mut(pair.second());
    pop_common(&mut head[pair.first()], &mut tail[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferMode {
    Fixed,
    DynamicSnr,
    DynamicPower,
}

impl BufferMode {
    pub fn name(self) -> &'static str {
        match self {
            BufferMode::Fixed => "fixed",
            BufferMode::DynamicSnr => "dynamic-snr",
            BufferMode::DynamicPower => "dynamic-power",
        }
    }
}

impl fmt::Display for BufferMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BufferMode {
    type Err = BufferError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(BufferMode::Fixed),
            "dynamic-snr" | "snr" => Ok(BufferMode::DynamicSnr),
            "dynamic-power" | "power" => Ok(BufferMode::DynamicPower),
            other => Err(BufferError::UnknownMode(other.to_string())),
        }
    }
}

/// Parameters of the capacity policy. `size` is the initial capacity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferSettings {
    pub mode: BufferMode,
    pub size: usize,
    pub j_min: usize,
    pub j_max: usize,
    /// SNR step in dB.
    pub d1: f64,
    /// Capacity step per SNR step.
    pub d2: usize,
    /// Capacity step of the power-driven rule.
    pub d3: usize,
    /// Link power threshold of the power-driven rule.
    pub gamma: f64,
}

impl Default for BufferSettings {
    fn default() -> Self {
        Self { mode: BufferMode::Fixed, size: 6, j_min: 1, j_max: 12, d1: 2.0, d2: 2, d3: 2, gamma: 2.0e-4 }
    }
}

impl BufferSettings {
    pub fn validate(&self) -> Result<(), BufferError> {
        let fail = |msg: String| Err(BufferError::Policy(msg));
        if self.j_min < 1 {
            return fail("j_min must be at least 1".into());
        }
        if self.j_min > self.j_max {
            return fail(format!("j_min {} exceeds j_max {}", self.j_min, self.j_max));
        }
        if self.size < self.j_min || self.size > self.j_max {
            return fail(format!("buffer size {} outside [{}, {}]", self.size, self.j_min, self.j_max));
        }
        if !self.d1.is_finite() || self.d1 <= 0.0 {
            return fail(format!("d1 must be positive, got {}", self.d1));
        }
        if self.d2 == 0 || self.d3 == 0 {
            return fail("d2 and d3 must be positive".into());
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return fail(format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }
}

/// Capacity controller. Fixed mode never changes `J`; the SNR-driven rule
/// shrinks `J` by `d2` for every full `d1` dB of SNR increase; the
/// power-driven rule grows `J` by `d3` when the weakest link power is at or
/// below `γ` and shrinks it by `d3` otherwise. Results are clamped to
/// `[j_min, j_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicBufferPolicy {
    settings: BufferSettings,
    capacity: usize,
    snr_prev: Option<f64>,
}

impl DynamicBufferPolicy {
    pub fn new(settings: BufferSettings) -> Result<Self, BufferError> {
        settings.validate()?;
        Ok(Self { settings, capacity: settings.size, snr_prev: None })
    }

    /// Policy whose previous SNR is already known.
    pub fn with_previous_snr(settings: BufferSettings, snr_prev: f64) -> Result<Self, BufferError> {
        let mut policy = Self::new(settings)?;
        policy.snr_prev = Some(snr_prev);
        Ok(policy)
    }

    pub fn mode(&self) -> BufferMode {
        self.settings.mode
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn settings(&self) -> &BufferSettings {
        &self.settings
    }

    fn clamp(&self, j: i64) -> usize {
        j.clamp(self.settings.j_min as i64, self.settings.j_max as i64) as usize
    }

    pub fn resize_snr(&mut self, snr_db: f64) -> usize {
        let Some(prev) = self.snr_prev else {
            self.snr_prev = Some(snr_db);
            return self.capacity;
        };
        let steps = ((snr_db - prev) / self.settings.d1 + 1e-9).floor();
        if steps >= 1.0 {
            let shrink = steps as i64 * self.settings.d2 as i64;
            self.capacity = self.clamp(self.capacity as i64 - shrink);
            self.snr_prev = Some(prev + steps * self.settings.d1);
        } else if snr_db < prev {
            self.snr_prev = Some(snr_db);
        }
        self.capacity
    }

    /// Applies the power rule for a given weakest-link power.
    pub fn resize_for_min_power(&mut self, min_power: f64) -> usize {
        let step = self.settings.d3 as i64;
        let j = self.capacity as i64;
        self.capacity = if min_power <= self.settings.gamma { self.clamp(j + step) } else { self.clamp(j - step) };
        self.capacity
    }

    pub fn resize_power(&mut self, channels: &ChannelRealization) -> usize {
        self.resize_for_min_power(channels.min_link_power())
    }

    /// Hook run at each SNR grid point; only the SNR-driven mode reacts.
    pub fn on_snr_point(&mut self, snr_db: f64) -> usize {
        if self.settings.mode == BufferMode::DynamicSnr {
            self.resize_snr(snr_db)
        } else {
            self.capacity
        }
    }

    /// Hook run per channel realization; only the power-driven mode reacts.
    pub fn on_channel(&mut self, channels: &ChannelRealization) -> usize {
        if self.settings.mode == BufferMode::DynamicPower {
            self.resize_power(channels)
        } else {
            self.capacity
        }
    }
}
