//! Synchronous DS-CDMA signal model: spreading codes, quasi-static flat
//! fading, effective signatures and the chip-rate receive equations of the
//! source-relay and relay-destination hops.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::CVec;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("symbol {0} is not a BPSK value (expected +1 or -1)")]
    NotBpsk(f64),
    #[error("relay index {index} out of range for {relays} relays")]
    RelayIndex { index: usize, relays: usize },
    #[error("relay pair ({0}, {1}) must name two distinct relays")]
    InvalidPair(usize, usize),
    #[error("expected {expected} values, got {actual}")]
    Dimension { expected: usize, actual: usize },
}

fn parameter(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Parameter { name, reason: reason.into() }
}

/// A BPSK symbol, always exactly +1 or -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bpsk(i8);

impl Bpsk {
    pub const PLUS: Bpsk = Bpsk(1);
    pub const MINUS: Bpsk = Bpsk(-1);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if value == 1.0 {
            Ok(Self::PLUS)
        } else if value == -1.0 {
            Ok(Self::MINUS)
        } else {
            Err(ModelError::NotBpsk(value))
        }
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Self::PLUS
        } else {
            Self::MINUS
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_bit(rng.random())
    }

    pub fn value(self) -> f64 {
        f64::from(self.0)
    }

    pub fn complex(self) -> Complex64 {
        Complex64::new(self.value(), 0.0)
    }
}

impl std::ops::Neg for Bpsk {
    type Output = Bpsk;

    fn neg(self) -> Bpsk {
        Bpsk(-self.0)
    }
}

/// Two distinct relays, stored 0-based with `first < second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelayPair {
    first: usize,
    second: usize,
}

impl RelayPair {
    /// Builds a pair from two 0-based relay indices in either order.
    pub fn new(a: usize, b: usize) -> Result<Self, ModelError> {
        if a == b {
            return Err(ModelError::InvalidPair(a + 1, b + 1));
        }
        Ok(Self { first: a.min(b), second: a.max(b) })
    }

    pub fn first(self) -> usize {
        self.first
    }

    pub fn second(self) -> usize {
        self.second
    }

    pub fn contains(self, relay: usize) -> bool {
        self.first == relay || self.second == relay
    }

    /// All `L(L-1)/2` pairs in lexicographic order.
    pub fn all(relays: usize) -> impl Iterator<Item = RelayPair> {
        (0..relays).flat_map(move |m| ((m + 1)..relays).map(move |n| RelayPair { first: m, second: n }))
    }

    /// The consecutive pairing (1,2), (3,4), ... used when no selection runs.
    pub fn consecutive(relays: usize) -> impl Iterator<Item = RelayPair> {
        (0..relays / 2).map(|i| RelayPair { first: 2 * i, second: 2 * i + 1 })
    }
}

impl fmt::Display for RelayPair {
    // 1-based, the way relays are numbered in reports
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first + 1, self.second + 1)
    }
}

/// Unit-norm spreading sequence with chips `±1/√N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadingCode {
    chips: Vec<f64>,
}

impl SpreadingCode {
    /// Builds a code from ±1 signs, scaling each chip by `1/√N`.
    pub fn from_signs(signs: &[i8]) -> Result<Self, ModelError> {
        if signs.is_empty() {
            return Err(parameter("chips", "spreading code must have at least one chip"));
        }
        let scale = 1.0 / (signs.len() as f64).sqrt();
        let chips = signs
            .iter()
            .map(|&s| match s {
                1 => Ok(scale),
                -1 => Ok(-scale),
                other => Err(ModelError::NotBpsk(f64::from(other))),
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { chips })
    }

    pub fn chips(&self) -> &[f64] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }
}

/// Draws `users` independent codes of `chips` equiprobable ±1/√N chips.
pub fn generate_spreading_codes<R: Rng + ?Sized>(
    users: usize,
    chips: usize,
    rng: &mut R,
) -> Result<Vec<SpreadingCode>, ModelError> {
    if users == 0 {
        return Err(parameter("users", "at least one user is required"));
    }
    if chips == 0 {
        return Err(parameter("chips", "processing gain must be positive"));
    }
    Ok((0..users)
        .map(|_| {
            let signs: Vec<i8> = (0..chips).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            SpreadingCode::from_signs(&signs).expect("nonempty ±1 signs")
        })
        .collect())
}

/// Complex flat-fading coefficient of one link.
pub type FadingCoefficient = Complex64;

/// One quasi-static channel draw for both hops.
///
/// `source_relay[k][l]` is the coefficient from user `k` to relay `l`;
/// `relay_dest[l][k]` is the coefficient of user `k`'s stream from relay `l`
/// to the destination. Per user and per hop the powers over relays sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub source_relay: Vec<Vec<FadingCoefficient>>,
    pub relay_dest: Vec<Vec<FadingCoefficient>>,
}

impl ChannelRealization {
    pub fn users(&self) -> usize {
        self.source_relay.len()
    }

    pub fn relays(&self) -> usize {
        self.relay_dest.len()
    }

    /// Smallest `|h|²` over every user and relay on both hops.
    pub fn min_link_power(&self) -> f64 {
        self.source_relay
            .iter()
            .chain(self.relay_dest.iter())
            .flatten()
            .map(|h| h.norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }
}

fn draw_normalized<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<FadingCoefficient> {
    let raw: Vec<Complex64> = (0..count)
        .map(|_| {
            // (0, 1] amplitude, [0, 2π) phase
            let amplitude = 1.0 - rng.random::<f64>();
            let phase = 2.0 * PI * rng.random::<f64>();
            Complex64::from_polar(amplitude, phase)
        })
        .collect();
    let power: f64 = raw.iter().map(|h| h.norm_sqr()).sum();
    let scale = 1.0 / power.sqrt();
    raw.into_iter().map(|h| h * scale).collect()
}

/// Draws one realization for `users` users and `relays` relays.
pub fn draw_channels<R: Rng + ?Sized>(
    users: usize,
    relays: usize,
    rng: &mut R,
) -> Result<ChannelRealization, ModelError> {
    if users == 0 {
        return Err(parameter("users", "at least one user is required"));
    }
    if relays == 0 {
        return Err(parameter("relays", "at least one relay is required"));
    }
    let source_relay: Vec<Vec<_>> = (0..users).map(|_| draw_normalized(relays, rng)).collect();
    let per_user_dest: Vec<Vec<_>> = (0..users).map(|_| draw_normalized(relays, rng)).collect();
    let relay_dest = (0..relays).map(|l| per_user_dest.iter().map(|row| row[l]).collect()).collect();
    Ok(ChannelRealization { source_relay, relay_dest })
}

/// `amplitude · code · coefficient`, the N-vector a detector sees for one
/// user on one link.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveSignature {
    vector: CVec,
    amplitude: f64,
}

impl EffectiveSignature {
    pub fn new(amplitude: f64, code: &SpreadingCode, coefficient: FadingCoefficient) -> Self {
        let gain = coefficient * amplitude;
        Self { vector: code.chips().iter().map(|&c| gain * c).collect(), amplitude }
    }

    /// Wraps an arbitrary vector (unit amplitude); used for hand-built
    /// signatures in tests and for combined transmissions.
    pub fn from_vector(vector: CVec) -> Self {
        Self { vector, amplitude: 1.0 }
    }

    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn len(&self) -> usize {
        self.vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vector.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Zero-mean circularly-symmetric complex Gaussian noise of total variance
/// `σ²` per chip. A variance of exactly zero gives the noiseless model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self, ModelError> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(parameter("noise variance", format!("{variance} is not a finite nonnegative value")));
        }
        Ok(Self { variance })
    }

    /// `σ² = 10^(-snr/10)` for unit transmit power. `+inf` dB is noiseless.
    pub fn from_snr_db(snr_db: f64) -> Result<Self, ModelError> {
        Self::new(10f64.powf(-snr_db / 10.0))
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn is_noiseless(&self) -> bool {
        self.variance == 0.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> CVec {
        if self.is_noiseless() {
            return vec![Complex64::new(0.0, 0.0); len];
        }
        let sd = (self.variance / 2.0).sqrt();
        (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * sd, im * sd)
            })
            .collect()
    }
}

/// Effective signatures of every link for one channel realization.
#[derive(Clone, Debug)]
pub struct SignatureSet {
    /// `[k][l]`, user `k` to relay `l`.
    pub source_relay: Vec<Vec<EffectiveSignature>>,
    /// `[l][k]`, relay `l` to the destination for user `k`'s stream.
    pub relay_dest: Vec<Vec<EffectiveSignature>>,
    chips: usize,
}

impl SignatureSet {
    /// `source_amplitude` scales every user transmission; `relay_amplitude`
    /// scales each relay's share of an Alamouti block.
    pub fn new(
        codes: &[SpreadingCode],
        channels: &ChannelRealization,
        source_amplitude: f64,
        relay_amplitude: f64,
    ) -> Result<Self, ModelError> {
        if codes.len() != channels.users() {
            return Err(ModelError::Dimension { expected: channels.users(), actual: codes.len() });
        }
        let chips = codes.first().map_or(0, SpreadingCode::len);
        if codes.iter().any(|c| c.len() != chips) {
            return Err(parameter("chips", "all spreading codes must share one length"));
        }
        let source_relay = codes
            .iter()
            .zip(&channels.source_relay)
            .map(|(code, row)| row.iter().map(|&h| EffectiveSignature::new(source_amplitude, code, h)).collect())
            .collect();
        let relay_dest = channels
            .relay_dest
            .iter()
            .map(|row| {
                row.iter().zip(codes).map(|(&h, code)| EffectiveSignature::new(relay_amplitude, code, h)).collect()
            })
            .collect();
        Ok(Self { source_relay, relay_dest, chips })
    }

    pub fn users(&self) -> usize {
        self.source_relay.len()
    }

    pub fn relays(&self) -> usize {
        self.relay_dest.len()
    }

    pub fn chips(&self) -> usize {
        self.chips
    }

    /// Signatures of all users as seen at relay `l`.
    pub fn at_relay(&self, relay: usize) -> Vec<&EffectiveSignature> {
        self.source_relay.iter().map(|row| &row[relay]).collect()
    }

    fn check_relay(&self, relay: usize) -> Result<(), ModelError> {
        if relay >= self.relays() {
            return Err(ModelError::RelayIndex { index: relay + 1, relays: self.relays() });
        }
        Ok(())
    }
}

fn accumulate(acc: &mut [Complex64], signature: &[Complex64], symbol: Complex64) {
    for (a, h) in acc.iter_mut().zip(signature) {
        *a += h * symbol;
    }
}

/// Two-slot reception at relay `relay`:
/// `y(slot) = Σ_k h_{s_k r_l} b_k(slot) + n(slot)`, fresh noise per slot.
///
/// `symbols[k]` holds user `k`'s symbols for slots `2i-1` and `2i`.
pub fn receive_source_relay<R: Rng + ?Sized>(
    signatures: &SignatureSet,
    symbols: &[[Bpsk; 2]],
    relay: usize,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<[CVec; 2], ModelError> {
    signatures.check_relay(relay)?;
    if symbols.len() != signatures.users() {
        return Err(ModelError::Dimension { expected: signatures.users(), actual: symbols.len() });
    }
    let receive_slot = |slot: usize, rng: &mut R| {
        let mut y = noise.sample(signatures.chips(), rng);
        for (row, b) in signatures.source_relay.iter().zip(symbols) {
            accumulate(&mut y, row[relay].vector(), b[slot].complex());
        }
        y
    };
    let first = receive_slot(0, rng);
    let second = receive_slot(1, rng);
    Ok([first, second])
}

/// One relay pair's Alamouti contribution: `symbols[k] = [b̂_p(2i-1), b̂_q(2i)]`
/// as decoded by relay `p = pair.first()` and relay `q = pair.second()`.
#[derive(Clone, Copy, Debug)]
pub struct PairTransmission<'a> {
    pub pair: RelayPair,
    pub symbols: &'a [[Bpsk; 2]],
}

/// Two-slot DSTC reception from a relay pair:
///
/// * slot 1: `Σ_k h^k_p b̂_p(2i-1) + h^k_q b̂_q(2i) + n`
/// * slot 2: `Σ_k h^k_q b̂*_p(2i-1) − h^k_p b̂*_q(2i) + n`
pub fn receive_relay_dest<R: Rng + ?Sized>(
    signatures: &SignatureSet,
    pair: RelayPair,
    symbols: &[[Bpsk; 2]],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<[CVec; 2], ModelError> {
    receive_relay_dest_joint(signatures, &[PairTransmission { pair, symbols }], 1.0, noise, rng)
}

/// Several relay pairs transmitting Alamouti blocks in the same two slots,
/// each scaled by `scale`. The destination sees the superposition.
pub fn receive_relay_dest_joint<R: Rng + ?Sized>(
    signatures: &SignatureSet,
    transmissions: &[PairTransmission<'_>],
    scale: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<[CVec; 2], ModelError> {
    let chips = signatures.chips();
    let mut slot1 = noise.sample(chips, rng);
    let mut slot2 = noise.sample(chips, rng);
    for tx in transmissions {
        let (p, q) = (tx.pair.first(), tx.pair.second());
        signatures.check_relay(q)?;
        if tx.symbols.len() != signatures.users() {
            return Err(ModelError::Dimension { expected: signatures.users(), actual: tx.symbols.len() });
        }
        for (k, b) in tx.symbols.iter().enumerate() {
            let hp = signatures.relay_dest[p][k].vector();
            let hq = signatures.relay_dest[q][k].vector();
            let bp = b[0].complex() * scale;
            let bq = b[1].complex() * scale;
            accumulate(&mut slot1, hp, bp);
            accumulate(&mut slot1, hq, bq);
            accumulate(&mut slot2, hq, bp.conj());
            accumulate(&mut slot2, hp, -bq.conj());
        }
    }
    Ok([slot1, slot2])
}
