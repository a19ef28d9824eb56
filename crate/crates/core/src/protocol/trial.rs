//! One packet's worth of epochs.
//!
//! An epoch is two symbol slots. In a reception epoch the sources transmit
//! one block to the selected relay pair, which decodes it and buffers the
//! decisions under the epoch's tag. In a transmission epoch the selected
//! pair pops a commonly tagged block and forwards it as one Alamouti block.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::buffer::{common_tag, pop_common_pair, BufferBlock, RelayBuffer};
use crate::detector::{build_filter, detect, slice, DetectorKind, ReceiveFilter};
use crate::dstc::{build_effective_matrix, stack_slots, AlamoutiCombiner, EffectiveAlamoutiMatrix};
use crate::selection::{Hop, HopScope, LinkSinrEntry, OpCounter, PairSelector, SelectionModel, SelectionRequest};
use crate::signal::{
    draw_channels, generate_spreading_codes, receive_relay_dest, receive_relay_dest_joint, receive_source_relay, Bpsk,
    ChannelRealization, EffectiveSignature, NoiseModel, PairTransmission, RelayPair, SignatureSet, SpreadingCode,
};
use crate::CVec;

use super::{SimConfig, SimError};

pub const SOURCE_AMPLITUDE: f64 = 1.0;
/// Each relay of an Alamouti pair sends at half power.
pub const RELAY_AMPLITUDE: f64 = FRAC_1_SQRT_2;
/// Noise variance used to build MMSE filters when the channel is noiseless.
pub const NOISELESS_MMSE_REGULARIZATION: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Stream {
    Setup = 0,
    Noise = 1,
    Selection = 2,
}

/// Independent ChaCha stream per `(seed, packet, purpose)`.
pub(crate) fn stream_rng(seed: u64, packet: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(packet as u64 * 4 + stream as u64);
    rng
}

/// Codes, channels and source bits of one packet. Depends only on
/// `(seed, packet, users, relays, chips, symbols)`, so every scheme and SNR
/// point sees the same draws.
#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub codes: Vec<SpreadingCode>,
    pub channels: Option<ChannelRealization>,
    /// `source[block][k] = [b_k(2i-1), b_k(2i)]`
    pub source: Vec<Vec<[Bpsk; 2]>>,
}

impl TrialSetup {
    pub fn draw(config: &SimConfig, packet: usize) -> Result<Self, SimError> {
        let mut rng = stream_rng(config.seed, packet, Stream::Setup);
        let codes = generate_spreading_codes(config.users, config.chips, &mut rng)?;
        let channels =
            if config.relays > 0 { Some(draw_channels(config.users, config.relays, &mut rng)?) } else { None };
        let source = (0..config.blocks_per_packet())
            .map(|_| (0..config.users).map(|_| [Bpsk::random(&mut rng), Bpsk::random(&mut rng)]).collect())
            .collect();
        Ok(Self { codes, channels, source })
    }

    /// Keeps only the first user.
    pub fn single_user(mut self) -> Self {
        self.codes.truncate(1);
        if let Some(ch) = self.channels.as_mut() {
            ch.source_relay.truncate(1);
            for row in &mut ch.relay_dest {
                row.truncate(1);
            }
        }
        for block in &mut self.source {
            block.truncate(1);
        }
        self
    }

    pub fn users(&self) -> usize {
        self.codes.len()
    }

    pub fn blocks(&self) -> usize {
        self.source.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpochMode {
    Reception,
    Transmission,
    Idle,
}

/// Outcome of one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub mode: EpochMode,
    pub selected: Option<LinkSinrEntry>,
    /// Per-user bit errors of the block delivered this epoch; empty otherwise.
    pub bit_errors: Vec<u32>,
    /// Epochs between reception and delivery of the delivered block.
    pub delay: Option<u64>,
    pub occupancy: Vec<usize>,
    pub capacity: usize,
    /// Selection arithmetic spent this epoch.
    pub ops: OpCounter,
}

impl EpochMetrics {
    pub fn errors(&self) -> u64 {
        self.bit_errors.iter().map(|&e| u64::from(e)).sum()
    }

    pub fn delivered(&self) -> bool {
        self.mode == EpochMode::Transmission
    }
}

/// Bits that differ between decisions and the transmitted block.
fn count_errors(decided: &[[Bpsk; 2]], sent: &[[Bpsk; 2]]) -> Vec<u32> {
    decided.iter().zip(sent).map(|(d, s)| u32::from(d[0] != s[0]) + u32::from(d[1] != s[1])).collect()
}

fn pair_index(pair: RelayPair, relays: usize) -> usize {
    pair.first() * relays + pair.second()
}

/// A decoded block in transit in the non-buffered schemes.
#[derive(Clone, Debug)]
struct InFlight {
    pair: RelayPair,
    tag: u64,
    first: Vec<[Bpsk; 2]>,
    second: Vec<[Bpsk; 2]>,
    entry: Option<LinkSinrEntry>,
}

/// Mutable state of one trial: buffers, cached filters and random streams.
pub struct TrialState {
    epoch: u64,
    noise: NoiseModel,
    filter_sigma2: f64,
    dest_detector: DetectorKind,
    signatures: SignatureSet,
    model: SelectionModel,
    /// `[l][k]`
    relay_filters: Vec<Vec<ReceiveFilter>>,
    combiners: Vec<Option<AlamoutiCombiner>>,
    source: Vec<Vec<[Bpsk; 2]>>,
    next_block: usize,
    buffers: Vec<RelayBuffer>,
    pending: HashMap<u64, usize>,
    in_flight: Option<InFlight>,
    joint_decoded: Option<(u64, Vec<Vec<[Bpsk; 2]>>)>,
    selector: Box<dyn PairSelector>,
    noise_rng: ChaCha8Rng,
    selection_rng: ChaCha8Rng,
    counter: OpCounter,
    reported: OpCounter,
}

impl TrialState {
    pub fn new(
        config: &SimConfig,
        packet: usize,
        setup: TrialSetup,
        noise: NoiseModel,
        capacity: usize,
        selector: Box<dyn PairSelector>,
    ) -> Result<Self, SimError> {
        let channels = setup.channels.as_ref().ok_or_else(|| crate::signal::ModelError::Parameter {
            name: "relays",
            reason: "relayed schemes need at least two relays".into(),
        })?;
        let signatures = SignatureSet::new(&setup.codes, channels, SOURCE_AMPLITUDE, RELAY_AMPLITUDE)?;
        let filter_sigma2 = if noise.is_noiseless() { NOISELESS_MMSE_REGULARIZATION } else { noise.variance() };
        let mut counter = OpCounter::default();
        let model =
            SelectionModel::new(&signatures, config.relay_detector, config.dest_detector, filter_sigma2, &mut counter)?;
        let relays = signatures.relays();
        let relay_filters = (0..relays)
            .map(|l| {
                let at_relay = signatures.at_relay(l);
                (0..at_relay.len()).map(|k| build_filter(config.relay_detector, &at_relay, k, filter_sigma2)).collect()
            })
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        Ok(Self {
            epoch: 0,
            noise,
            filter_sigma2,
            dest_detector: config.dest_detector,
            model,
            relay_filters,
            combiners: vec![None; relays * relays],
            source: setup.source,
            next_block: 0,
            buffers: vec![RelayBuffer::new(capacity); relays],
            pending: HashMap::new(),
            in_flight: None,
            joint_decoded: None,
            selector,
            noise_rng: stream_rng(config.seed, packet, Stream::Noise),
            selection_rng: stream_rng(config.seed, packet, Stream::Selection),
            counter,
            reported: OpCounter::default(),
            signatures,
        })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn blocks(&self) -> usize {
        self.source.len()
    }

    pub fn buffers(&self) -> &[RelayBuffer] {
        &self.buffers
    }

    pub fn capacity(&self) -> usize {
        self.buffers.first().map_or(0, RelayBuffer::capacity)
    }

    pub fn sigma2(&self) -> f64 {
        self.noise.variance()
    }

    /// Source blocks not yet sent to any relay.
    pub fn unsent_blocks(&self) -> usize {
        self.source.len() - self.next_block
    }

    /// True while some block is unsent, buffered or in flight.
    pub fn has_work(&self) -> bool {
        self.next_block < self.source.len()
            || self.in_flight.is_some()
            || self.joint_decoded.is_some()
            || self.buffers.iter().any(|b| !b.is_empty())
    }

    /// Epoch budget `4·(P/2) + 4J`.
    pub fn cutoff(&self) -> u64 {
        4 * self.source.len() as u64 + 4 * self.capacity() as u64
    }

    fn invariant(&self, detail: impl Into<String>) -> SimError {
        SimError::Invariant { epoch: self.epoch, detail: detail.into() }
    }

    fn finish(
        &mut self,
        mode: EpochMode,
        selected: Option<LinkSinrEntry>,
        bit_errors: Vec<u32>,
        delay: Option<u64>,
    ) -> EpochMetrics {
        let mut ops = self.counter;
        ops.multiplications -= self.reported.multiplications;
        ops.additions -= self.reported.additions;
        ops.sinr_evaluations -= self.reported.sinr_evaluations;
        self.reported = self.counter;
        let metrics = EpochMetrics {
            epoch: self.epoch,
            mode,
            selected,
            bit_errors,
            delay,
            occupancy: self.buffers.iter().map(RelayBuffer::occupancy).collect(),
            capacity: self.capacity(),
            ops,
        };
        self.epoch += 1;
        metrics
    }

    /// Receives the block at relay `relay` and returns the per-user decisions.
    fn decode_at_relay(&mut self, relay: usize, block: usize) -> Result<Vec<[Bpsk; 2]>, SimError> {
        let [y1, y2] =
            receive_source_relay(&self.signatures, &self.source[block], relay, &self.noise, &mut self.noise_rng)?;
        self.relay_filters[relay].iter().map(|w| Ok([slice(detect(w, &y1)?), slice(detect(w, &y2)?)])).collect()
    }

    fn combiner(&mut self, pair: RelayPair) -> Result<&AlamoutiCombiner, SimError> {
        let index = pair_index(pair, self.signatures.relays());
        if self.combiners[index].is_none() {
            let matrices = (0..self.signatures.users())
                .map(|k| {
                    build_effective_matrix(
                        self.signatures.relay_dest[pair.first()][k].vector(),
                        self.signatures.relay_dest[pair.second()][k].vector(),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            self.combiners[index] = Some(AlamoutiCombiner::new(&matrices, self.dest_detector, self.filter_sigma2)?);
        }
        Ok(self.combiners[index].as_ref().expect("just built"))
    }

    /// Alamouti forwarding of a decoded block by `pair`; returns decisions.
    fn forward(
        &mut self,
        pair: RelayPair,
        first: &[[Bpsk; 2]],
        second: &[[Bpsk; 2]],
    ) -> Result<Vec<[Bpsk; 2]>, SimError> {
        let symbols: Vec<[Bpsk; 2]> = first.iter().zip(second).map(|(p, q)| [p[0], q[1]]).collect();
        let [s1, s2] = receive_relay_dest(&self.signatures, pair, &symbols, &self.noise, &mut self.noise_rng)?;
        let stacked = stack_slots(&s1, &s2);
        let soft = self.combiner(pair)?.detect(&stacked)?;
        Ok(soft.iter().map(|s| [slice(s[0]), slice(s[1])]).collect())
    }

    fn deliver(&mut self, tag: u64, decided: &[[Bpsk; 2]]) -> Result<(Vec<u32>, u64), SimError> {
        let block =
            self.pending.remove(&tag).ok_or_else(|| self.invariant(format!("no source block for tag {tag}")))?;
        Ok((count_errors(decided, &self.source[block]), self.epoch - tag))
    }

    /// Buffer-aided epoch: rank both hops, take the best feasible link.
    ///
    /// A source-relay pair is feasible while a block is unsent and both of
    /// its buffers have room; a relay-destination pair is feasible when its
    /// two buffers share an epoch tag.
    pub fn run_epoch(&mut self) -> Result<EpochMetrics, SimError> {
        let unsent = self.next_block < self.source.len();
        let buffers = &self.buffers;
        let feasible = |hop: Hop, pair: RelayPair| match hop {
            Hop::SourceRelay => unsent && !buffers[pair.first()].is_full() && !buffers[pair.second()].is_full(),
            Hop::RelayDest => common_tag(&buffers[pair.first()], &buffers[pair.second()]).is_some(),
        };
        let request = SelectionRequest {
            model: &self.model,
            sigma2: self.noise.variance(),
            scope: HopScope::Both,
            feasible: &feasible,
        };
        let choice = self.selector.select(&request, &mut self.selection_rng, &mut self.counter)?;
        let Some(entry) = choice else {
            return Ok(self.finish(EpochMode::Idle, None, Vec::new(), None));
        };
        let pair = entry.pair;
        match entry.hop {
            Hop::SourceRelay => {
                let block = self.next_block;
                let tag = self.epoch;
                for relay in [pair.first(), pair.second()] {
                    let symbols = self.decode_at_relay(relay, block)?;
                    self.buffers[relay]
                        .push(BufferBlock { symbols, epoch_tag: tag })
                        .map_err(|e| self.invariant(format!("reception into relay {}: {e}", relay + 1)))?;
                }
                self.pending.insert(tag, block);
                self.next_block += 1;
                Ok(self.finish(EpochMode::Reception, Some(entry), Vec::new(), None))
            }
            Hop::RelayDest => {
                let (bp, bq) = pop_common_pair(&mut self.buffers, pair)
                    .ok_or_else(|| self.invariant(format!("transmission from {pair} without a common block")))?;
                if bp.epoch_tag != bq.epoch_tag {
                    return Err(self.invariant("popped blocks with different tags"));
                }
                let decided = self.forward(pair, &bp.symbols, &bq.symbols)?;
                let (errors, delay) = self.deliver(bp.epoch_tag, &decided)?;
                Ok(self.finish(EpochMode::Transmission, Some(entry), errors, Some(delay)))
            }
        }
    }

    /// Non-buffered epoch: a reception to the pair the selector picks on
    /// relay-destination SINR alone, then the forwarding of that same block.
    pub fn run_non_buffered_epoch(&mut self) -> Result<EpochMetrics, SimError> {
        if let Some(flight) = self.in_flight.take() {
            let decided = self.forward(flight.pair, &flight.first, &flight.second)?;
            let (errors, delay) = self.deliver(flight.tag, &decided)?;
            return Ok(self.finish(EpochMode::Transmission, flight.entry, errors, Some(delay)));
        }
        if self.next_block >= self.source.len() {
            return Ok(self.finish(EpochMode::Idle, None, Vec::new(), None));
        }
        let everything = |_: Hop, _: RelayPair| true;
        let request = SelectionRequest {
            model: &self.model,
            sigma2: self.noise.variance(),
            scope: HopScope::RelayDestOnly,
            feasible: &everything,
        };
        let entry = self
            .selector
            .select(&request, &mut self.selection_rng, &mut self.counter)?
            .ok_or_else(|| self.invariant("selector returned no pair with every pair feasible"))?;
        let block = self.next_block;
        let tag = self.epoch;
        let first = self.decode_at_relay(entry.pair.first(), block)?;
        let second = self.decode_at_relay(entry.pair.second(), block)?;
        self.pending.insert(tag, block);
        self.next_block += 1;
        self.in_flight = Some(InFlight { pair: entry.pair, tag, first, second, entry: Some(entry) });
        Ok(self.finish(EpochMode::Reception, Some(entry), Vec::new(), None))
    }

    fn joint_combiner(&mut self, pairs: &[RelayPair], scale: f64) -> Result<AlamoutiCombiner, SimError> {
        let chips = self.signatures.chips();
        let matrices: Vec<EffectiveAlamoutiMatrix> = (0..self.signatures.users())
            .map(|k| {
                let mut hm: CVec = vec![Default::default(); chips];
                let mut hn: CVec = vec![Default::default(); chips];
                for pair in pairs {
                    let a: &EffectiveSignature = &self.signatures.relay_dest[pair.first()][k];
                    let b: &EffectiveSignature = &self.signatures.relay_dest[pair.second()][k];
                    for i in 0..chips {
                        hm[i] += a.vector()[i] * scale;
                        hn[i] += b.vector()[i] * scale;
                    }
                }
                build_effective_matrix(&hm, &hn)
            })
            .collect::<Result<_, _>>()?;
        Ok(AlamoutiCombiner::new(&matrices, self.dest_detector, self.filter_sigma2)?)
    }

    /// No-selection epoch: every relay decodes the block, then all
    /// consecutive pairs (1,2), (3,4), ... transmit it together, each scaled
    /// so the total relay power matches a single pair.
    pub fn run_joint_epoch(&mut self) -> Result<EpochMetrics, SimError> {
        let pairs: Vec<RelayPair> = RelayPair::consecutive(self.signatures.relays()).collect();
        if let Some((tag, decoded)) = self.joint_decoded.take() {
            let scale = 1.0 / (pairs.len() as f64).sqrt();
            let transmissions: Vec<Vec<[Bpsk; 2]>> = pairs
                .iter()
                .map(|pair| {
                    decoded[pair.first()].iter().zip(&decoded[pair.second()]).map(|(p, q)| [p[0], q[1]]).collect()
                })
                .collect();
            let txs: Vec<PairTransmission<'_>> =
                pairs.iter().zip(&transmissions).map(|(&pair, symbols)| PairTransmission { pair, symbols }).collect();
            let [s1, s2] = receive_relay_dest_joint(&self.signatures, &txs, scale, &self.noise, &mut self.noise_rng)?;
            let stacked = stack_slots(&s1, &s2);
            if self.combiners[0].is_none() {
                self.combiners[0] = Some(self.joint_combiner(&pairs, scale)?);
            }
            let soft = self.combiners[0].as_ref().expect("built above").detect(&stacked)?;
            let decided: Vec<[Bpsk; 2]> = soft.iter().map(|s| [slice(s[0]), slice(s[1])]).collect();
            let (errors, delay) = self.deliver(tag, &decided)?;
            return Ok(self.finish(EpochMode::Transmission, None, errors, Some(delay)));
        }
        if self.next_block >= self.source.len() {
            return Ok(self.finish(EpochMode::Idle, None, Vec::new(), None));
        }
        let block = self.next_block;
        let tag = self.epoch;
        let decoded =
            (0..self.signatures.relays()).map(|l| self.decode_at_relay(l, block)).collect::<Result<Vec<_>, _>>()?;
        self.pending.insert(tag, block);
        self.next_block += 1;
        self.joint_decoded = Some((tag, decoded));
        Ok(self.finish(EpochMode::Reception, None, Vec::new(), None))
    }
}

/// Direct-link calibration: every user transmits straight to the
/// destination over a unit AWGN channel, one block per epoch. No relays,
/// no fading and no selection. Blocks carry no relay delay, so `delay` is
/// left empty.
pub fn run_direct_trial(
    config: &SimConfig,
    packet: usize,
    setup: &TrialSetup,
    noise: NoiseModel,
) -> Result<Vec<EpochMetrics>, SimError> {
    let signatures: Vec<EffectiveSignature> = setup
        .codes
        .iter()
        .map(|code| EffectiveSignature::new(SOURCE_AMPLITUDE, code, num_complex::Complex64::new(1.0, 0.0)))
        .collect();
    let refs: Vec<&EffectiveSignature> = signatures.iter().collect();
    let filter_sigma2 = if noise.is_noiseless() { NOISELESS_MMSE_REGULARIZATION } else { noise.variance() };
    let filters = (0..refs.len())
        .map(|k| build_filter(config.dest_detector, &refs, k, filter_sigma2))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = stream_rng(config.seed, packet, Stream::Noise);
    let chips = setup.codes.first().map_or(0, SpreadingCode::len);
    let mut out = Vec::with_capacity(setup.blocks());
    for (epoch, block) in setup.source.iter().enumerate() {
        let mut slots: [CVec; 2] = [noise.sample(chips, &mut rng), noise.sample(chips, &mut rng)];
        for (slot, y) in slots.iter_mut().enumerate() {
            for (sig, b) in signatures.iter().zip(block) {
                for (yi, h) in y.iter_mut().zip(sig.vector()) {
                    *yi += h * b[slot].value();
                }
            }
        }
        let decided = filters
            .iter()
            .map(|w| Ok([slice(detect(w, &slots[0])?), slice(detect(w, &slots[1])?)]))
            .collect::<Result<Vec<_>, SimError>>()?;
        out.push(EpochMetrics {
            epoch: epoch as u64,
            mode: EpochMode::Transmission,
            selected: None,
            bit_errors: count_errors(&decided, block),
            delay: None,
            occupancy: Vec::new(),
            capacity: 0,
            ops: OpCounter::default(),
        });
    }
    Ok(out)
}
