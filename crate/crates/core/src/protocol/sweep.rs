use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buffer::{BufferMode, DynamicBufferPolicy};
use crate::selection::OpCounter;
use crate::signal::NoiseModel;

use super::trial::{EpochMetrics, TrialSetup};
use super::{Scheme, SchemeRegistry, SimConfig, SimError};

fn scheme_for(config: &SimConfig) -> Result<std::sync::Arc<dyn Scheme>, SimError> {
    config.validate()?;
    Ok(SchemeRegistry::builtin().get(&config.scheme).expect("validated scheme name"))
}

/// Buffer capacity of every packet at every grid point, `[snr][packet]`.
///
/// The SNR-driven rule runs once over the grid in order. The power-driven
/// rule restarts from the configured size at every grid point and is
/// applied to the packets' channel realizations in packet order.
pub fn capacity_schedule(config: &SimConfig) -> Result<Vec<Vec<usize>>, SimError> {
    let settings = config.buffer;
    let per_packet: Vec<usize> = match settings.mode {
        BufferMode::Fixed | BufferMode::DynamicSnr => vec![settings.size; config.packets],
        BufferMode::DynamicPower => {
            let mut policy = DynamicBufferPolicy::new(settings)?;
            let mut caps = Vec::with_capacity(config.packets);
            for packet in 0..config.packets {
                let setup = TrialSetup::draw(config, packet)?;
                caps.push(match &setup.channels {
                    Some(channels) => policy.on_channel(channels),
                    None => policy.capacity(),
                });
            }
            caps
        }
    };
    if settings.mode != BufferMode::DynamicSnr {
        return Ok(vec![per_packet; config.snr_db.len()]);
    }
    let mut policy = DynamicBufferPolicy::new(settings)?;
    Ok(config.snr_db.iter().map(|&snr| vec![policy.on_snr_point(snr); config.packets]).collect())
}

/// Runs one packet with an explicit noise level and buffer capacity.
pub fn run_trial_with(
    config: &SimConfig,
    packet: usize,
    noise: NoiseModel,
    capacity: usize,
) -> Result<Vec<EpochMetrics>, SimError> {
    scheme_for(config)?.run_trial(config, packet, noise, capacity)
}

/// Runs packet `packet` at `snr_db`, with the buffer capacity the sweep
/// would use there. An SNR off the grid is treated as a point appended
/// after the whole grid.
pub fn run_trial(config: &SimConfig, packet: usize, snr_db: f64) -> Result<Vec<EpochMetrics>, SimError> {
    let scheme = scheme_for(config)?;
    let noise = NoiseModel::from_snr_db(snr_db)?;
    let mut grid = config.clone();
    grid.packets = grid.packets.max(packet + 1);
    let position = grid.snr_db.iter().position(|&s| s == snr_db).unwrap_or_else(|| {
        grid.snr_db.push(snr_db);
        grid.snr_db.len() - 1
    });
    let capacity = capacity_schedule(&grid)?[position][packet];
    scheme.run_trial(config, packet, noise, capacity)
}

/// Mean epochs between reception and delivery over delivered blocks.
pub fn measure_delay(metrics: &[EpochMetrics]) -> Option<f64> {
    let delays: Vec<u64> = metrics.iter().filter_map(|m| m.delay).collect();
    if delays.is_empty() {
        return None;
    }
    Some(delays.iter().sum::<u64>() as f64 / delays.len() as f64)
}

/// Totals of one packet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketSummary {
    pub bit_errors: u64,
    pub bits: u64,
    pub delivered: u64,
    /// Delivered blocks that carry a relay delay.
    pub delayed: u64,
    pub delay_sum: u64,
    pub residual: u64,
    pub capacity: usize,
    pub ops: OpCounter,
}

impl PacketSummary {
    pub fn from_epochs(epochs: &[EpochMetrics], blocks: usize, users: usize, capacity: usize) -> Self {
        let mut s = PacketSummary { capacity, ..Default::default() };
        for m in epochs {
            s.ops.merge(&m.ops);
            if m.delivered() {
                s.delivered += 1;
                s.bit_errors += m.errors();
                s.bits += 2 * users as u64;
                if let Some(d) = m.delay {
                    s.delayed += 1;
                    s.delay_sum += d;
                }
            }
        }
        s.residual = blocks as u64 - s.delivered;
        s
    }
}

/// Aggregate of one SNR grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub scheme: String,
    pub policy: String,
    pub detector_relay: String,
    pub detector_dest: String,
    pub ber: f64,
    pub avg_delay_epochs: Option<f64>,
    pub avg_buffer_size: f64,
    pub residual_blocks: u64,
    pub mults: u64,
    pub adds: u64,
    pub bit_errors: u64,
    pub bits: u64,
    pub delivered_blocks: u64,
    pub sinr_evaluations: u64,
    pub packets: usize,
    /// Standard error of `ber`, treating packets as independent clusters.
    pub ber_std_error: f64,
    pub delay_std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Standard error of `Σx / Σy` with packets as clusters.
fn ratio_std_error(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    let total_y: f64 = pairs.iter().map(|p| p.1).sum();
    if n < 2 || total_y == 0.0 {
        return None;
    }
    let ratio = pairs.iter().map(|p| p.0).sum::<f64>() / total_y;
    let ss: f64 = pairs.iter().map(|&(x, y)| (x - ratio * y).powi(2)).sum();
    Some((ss * n as f64 / (n as f64 - 1.0)).sqrt() / total_y)
}

fn aggregate(config: &SimConfig, scheme: &dyn Scheme, snr_db: f64, packets: &[PacketSummary]) -> SweepPoint {
    let mut ops = OpCounter::default();
    let (mut errors, mut bits, mut delivered, mut delayed, mut delay_sum, mut residual) = (0, 0, 0, 0, 0, 0);
    let mut capacity = 0usize;
    for p in packets {
        errors += p.bit_errors;
        bits += p.bits;
        delivered += p.delivered;
        delayed += p.delayed;
        delay_sum += p.delay_sum;
        residual += p.residual;
        capacity += p.capacity;
        ops.merge(&p.ops);
    }
    let ber = if bits == 0 { 0.0 } else { errors as f64 / bits as f64 };
    let ber_pairs: Vec<(f64, f64)> = packets.iter().map(|p| (p.bit_errors as f64, p.bits as f64)).collect();
    let delay_pairs: Vec<(f64, f64)> = packets.iter().map(|p| (p.delay_sum as f64, p.delayed as f64)).collect();
    SweepPoint {
        snr_db,
        scheme: scheme.label(config),
        policy: scheme.policy_label(config),
        detector_relay: config.relay_detector.name().into(),
        detector_dest: config.dest_detector.name().into(),
        ber,
        avg_delay_epochs: (delayed > 0).then(|| delay_sum as f64 / delayed as f64),
        avg_buffer_size: if scheme.uses_buffers() { capacity as f64 / packets.len() as f64 } else { 0.0 },
        residual_blocks: residual,
        mults: ops.multiplications,
        adds: ops.additions,
        bit_errors: errors,
        bits,
        delivered_blocks: delivered,
        sinr_evaluations: ops.sinr_evaluations,
        packets: packets.len(),
        ber_std_error: ratio_std_error(&ber_pairs).unwrap_or(0.0),
        delay_std_error: if delayed > 0 { ratio_std_error(&delay_pairs) } else { None },
    }
}

/// Runs every packet at every grid point. Packets run in parallel; the
/// result does not depend on the thread count.
pub fn run_sweep(config: &SimConfig) -> Result<SweepResult, SimError> {
    let scheme = scheme_for(config)?;
    let schedule = capacity_schedule(config)?;
    let users = if scheme.name() == "single-user-bound" { 1 } else { config.users };
    let blocks = config.blocks_per_packet();
    let mut points = Vec::with_capacity(config.snr_db.len());
    for (&snr_db, capacities) in config.snr_db.iter().zip(&schedule) {
        let noise = NoiseModel::from_snr_db(snr_db)?;
        let packets = (0..config.packets)
            .into_par_iter()
            .map(|packet| {
                let capacity = capacities[packet];
                let epochs = scheme.run_trial(config, packet, noise, capacity)?;
                Ok(PacketSummary::from_epochs(&epochs, blocks, users, capacity))
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        points.push(aggregate(config, scheme.as_ref(), snr_db, &packets));
    }
    Ok(SweepResult { points })
}
