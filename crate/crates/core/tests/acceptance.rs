//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are pinned below.

mod common;

use std::time::Instant;

use bufdstc::buffer::{BufferMode, BufferSettings};
use bufdstc::detector::{mmse_filter, DetectorKind};
use bufdstc::dstc::build_effective_matrix;
use bufdstc::protocol::{run_sweep, SimConfig, SweepPoint, SweepResult};
use bufdstc::report::write_csv;
use bufdstc::selection::{
    build_table, count_complexity, select_best, select_greedy, sinr_relay_dest_pair, sinr_source_relay_pair, Hop,
    HopLinks, HopScope, OpCounter, PairSelector, SelectionModel, SelectionRequest, SelectorRegistry,
};
use bufdstc::signal::{draw_channels, generate_spreading_codes, EffectiveSignature, RelayPair, SignatureSet};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Binomial standard deviations allowed in the calibration check.
const CALIBRATION_SIGMAS: f64 = 3.0;
/// Monte Carlo band for the ordering and delay checks.
const BAND_SIGMAS: f64 = 2.0;
const SINR_RELATIVE_TOL: f64 = 1e-10;
const GRAM_TOL: f64 = 1e-12;
const MMSE_TOL: f64 = 1e-10;
const ORDERING_PACKETS: usize = 200;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn sweep(config: &SimConfig) -> SweepResult {
    run_sweep(config).unwrap_or_else(|e| panic!("sweep failed: {e}"))
}

fn operating_point() -> SimConfig {
    SimConfig { packets: ORDERING_PACKETS, ..SimConfig::default() }
}

/// `a ≤ b` within the combined Monte Carlo band.
fn not_worse(a: &SweepPoint, b: &SweepPoint) -> bool {
    a.ber <= b.ber + BAND_SIGMAS * a.ber_std_error.hypot(b.ber_std_error)
}

fn calibration() -> Outcome {
    let start = Instant::now();
    let config = SimConfig {
        scheme: "direct".into(),
        users: 1,
        symbols: 1000,
        packets: 1000,
        snr_db: vec![0.0, 4.0, 8.0],
        dest_detector: DetectorKind::Rake,
        ..SimConfig::default()
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for p in sweep(&config).points {
        let want = bpsk_awgn_ber(p.snr_db);
        let sigma = (want * (1.0 - want) / p.bits as f64).sqrt();
        let z = (p.ber - want) / sigma;
        ok &= p.bits >= 1_000_000 && z.abs() <= CALIBRATION_SIGMAS;
        detail.push(format!("{} dB: {:.4e} vs Q {:.4e} ({z:+.2}σ, {} bits)", p.snr_db, p.ber, want, p.bits));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    detail.push(format!("{secs:.1}s"));
    if ok {
        Ok(detail.join("; "))
    } else {
        Err(detail.join("; "))
    }
}

fn exactness() -> Outcome {
    let mut runs = 0;
    let mut cases =
        vec![("direct", "exhaustive", BufferMode::Fixed), ("no-selection", "exhaustive", BufferMode::Fixed)];
    for policy in ["exhaustive", "greedy", "random", "fixed"] {
        cases.push(("non-buffered", policy, BufferMode::Fixed));
        for mode in [BufferMode::Fixed, BufferMode::DynamicSnr, BufferMode::DynamicPower] {
            cases.push(("buffered", policy, mode));
        }
    }
    cases.push(("single-user-bound", "exhaustive", BufferMode::Fixed));
    for (scheme, policy, mode) in cases {
        let config = SimConfig {
            users: 1,
            symbols: 200,
            packets: 100,
            snr_db: vec![f64::INFINITY],
            scheme: scheme.into(),
            policy: policy.into(),
            buffer: BufferSettings { mode, ..BufferSettings::default() },
            seed: 77,
            ..SimConfig::default()
        };
        let p = &sweep(&config).points[0];
        if p.bit_errors != 0 || p.residual_blocks != 0 || p.delivered_blocks != 100 * 100 {
            return Err(format!(
                "{scheme}/{policy}/{}: {} errors, {} residual",
                mode.name(),
                p.bit_errors,
                p.residual_blocks
            ));
        }
        runs += 1;
    }
    Ok(format!("{runs} scheme/policy/buffer combinations x 100 trials, all error-free, no residuals"))
}

fn scheme_ordering() -> Outcome {
    let base = SimConfig { snr_db: vec![6.0, 8.0, 10.0], ..operating_point() };
    let with =
        |scheme: &str, policy: &str| sweep(&SimConfig { scheme: scheme.into(), policy: policy.into(), ..base.clone() });
    let chain = [
        ("BA-exh", with("buffered", "exhaustive")),
        ("BA-greedy", with("buffered", "greedy")),
        ("NB-exh", with("non-buffered", "exhaustive")),
        ("NB-random", with("non-buffered", "random")),
        ("no-sel", with("no-selection", "exhaustive")),
    ];
    let bound = with("single-user-bound", "exhaustive");
    let mut ok = true;
    let mut detail = Vec::new();
    for i in 0..base.snr_db.len() {
        let mut line = format!("{} dB:", base.snr_db[i]);
        for w in chain.windows(2) {
            let holds = not_worse(&w[0].1.points[i], &w[1].1.points[i]);
            ok &= holds;
            line += &format!(" {} {}", w[0].0, if holds { "≤" } else { ">" });
        }
        line += &format!(" {}", chain[4].0);
        let su = &bound.points[i];
        let below = chain.iter().all(|(_, r)| su.ber < r.points[i].ber);
        ok &= below;
        line += &format!(", single-user {:.4} {} all", su.ber, if below { "below" } else { "NOT below" });
        detail.push(line);
    }
    if ok {
        Ok(detail.join("; "))
    } else {
        Err(detail.join("; "))
    }
}

fn dynamic_buffer_ordering() -> Outcome {
    let base = operating_point();
    let mut ok = true;
    let mut detail = Vec::new();
    for policy in ["exhaustive", "greedy"] {
        let fixed = sweep(&SimConfig {
            policy: policy.into(),
            buffer: BufferSettings { size: 8, ..BufferSettings::default() },
            ..base.clone()
        });
        for mode in [BufferMode::DynamicSnr, BufferMode::DynamicPower] {
            let dynamic = sweep(&SimConfig {
                policy: policy.into(),
                buffer: BufferSettings { mode, size: 8, d1: 2.0, d2: 2, d3: 2, ..BufferSettings::default() },
                ..base.clone()
            });
            let violations: Vec<f64> = dynamic
                .points
                .iter()
                .zip(&fixed.points)
                .filter(|(d, f)| !not_worse(d, f))
                .map(|(d, _)| d.snr_db)
                .collect();
            ok &= violations.is_empty();
            let avg_j: Vec<String> = dynamic.points.iter().map(|p| format!("{:.1}", p.avg_buffer_size)).collect();
            detail.push(format!(
                "{policy}/{}: violations at {violations:?}, mean J [{}]",
                mode.name(),
                avg_j.join(" ")
            ));
        }
    }
    if ok {
        Ok(detail.join("; "))
    } else {
        Err(detail.join("; "))
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let users = rng.random_range(1..=3);
        let relays = rng.random_range(2..=6);
        let chips = rng.random_range(users.max(2)..=16);
        let sigma2 = rng.random_range(0.01..2.0);
        let kind = if rng.random_bool(0.5) { DetectorKind::Rake } else { DetectorKind::Mmse };
        let h: Vec<Vec<Vec<C>>> =
            (0..relays).map(|_| (0..users).map(|_| random_vector(&mut rng, chips, 0.5)).collect()).collect();
        let w: Vec<Vec<Vec<C>>> = h
            .iter()
            .map(|link| {
                (0..users)
                    .map(|k| if kind == DetectorKind::Rake { link[k].clone() } else { mmse_oracle(link, k, sigma2) })
                    .collect()
            })
            .collect();
        let per_relay: Vec<Vec<EffectiveSignature>> =
            h.iter().map(|link| link.iter().map(|v| EffectiveSignature::from_vector(v.clone())).collect()).collect();
        let links = HopLinks::build(&per_relay, kind, sigma2).map_err(|e| e.to_string())?;
        for pair in RelayPair::all(relays) {
            let want = pair_sinr_oracle(&h, &w, pair.first(), pair.second(), sigma2);
            for got in [sinr_source_relay_pair(&links, pair, sigma2), sinr_relay_dest_pair(&links, pair, sigma2)] {
                let got = got.map_err(|e| e.to_string())?;
                worst = worst.max((got - want).abs() / want.abs());
            }
        }
    }
    let mut mismatches = 0;
    for _ in 0..1000 {
        let model = random_model(&mut rng, 2);
        let (sr_ok, rd_ok) = (rng.random_bool(0.5), rng.random_bool(0.5));
        let feasible = move |hop: Hop, _: RelayPair| if hop == Hop::SourceRelay { sr_ok } else { rd_ok };
        let table = build_table(&model, 0.5, &mut OpCounter::default()).map_err(|e| e.to_string())?;
        let greedy = select_greedy(&model, 0.5, HopScope::Both, &feasible, &mut OpCounter::default())
            .map_err(|e| e.to_string())?;
        mismatches += usize::from(select_best(&table, &feasible) != greedy);
    }
    let detail = format!("worst relative SINR error {worst:.2e} over 100 instances; greedy/exhaustive mismatches at L=2: {mismatches}/1000");
    if worst <= SINR_RELATIVE_TOL && mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_model(rng: &mut ChaCha8Rng, relays: usize) -> SelectionModel {
    let users = rng.random_range(1..=3);
    let mut hop = |kind| {
        let per_relay: Vec<Vec<EffectiveSignature>> = (0..relays)
            .map(|_| (0..users).map(|_| EffectiveSignature::from_vector(random_vector(rng, 8, 0.5))).collect())
            .collect();
        HopLinks::build(&per_relay, kind, 0.5).expect("random links")
    };
    let sr = hop(DetectorKind::Mmse);
    let rd = hop(DetectorKind::Rake);
    SelectionModel::from_links(&sr, &rd, &mut OpCounter::default())
}

fn structural() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_gram: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=16);
        let (hm, hn) = (random_vector(&mut rng, len, 1.0), random_vector(&mut rng, len, 1.0));
        let g = build_effective_matrix(&hm, &hn).map_err(|e| e.to_string())?.gram();
        let scale = energy(&hm) + energy(&hn);
        let err = [(g[0][0] - scale).norm(), (g[1][1] - scale).norm(), g[0][1].norm(), g[1][0].norm()]
            .into_iter()
            .fold(0.0, f64::max)
            / scale;
        worst_gram = worst_gram.max(err);
    }
    let mut worst_mmse: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=16);
        let h = random_vector(&mut rng, len, 1.0);
        let sigma2 = rng.random_range(0.01..3.0);
        let sig = EffectiveSignature::from_vector(h.clone());
        let w = mmse_filter(&[&sig], 0, sigma2).map_err(|e| e.to_string())?;
        let d = energy(&h) + sigma2;
        for (wi, hi) in w.weights().iter().zip(&h) {
            worst_mmse = worst_mmse.max((wi - hi / d).norm() / (hi / d).norm());
        }
    }
    let detail = format!("Alamouti HᴴH deviation {worst_gram:.2e} (1000 pairs); K=1 MMSE deviation {worst_mmse:.2e}");
    if worst_gram <= GRAM_TOL && worst_mmse <= MMSE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn complexity() -> Outcome {
    let c = count_complexity(3, 16, 6);
    let mut detail =
        vec![format!("exhaustive mults {}, greedy mults {}", c.exhaustive_multiplications, c.greedy_multiplications)];
    let mut ok = c.exhaustive_multiplications == 60480 && c.greedy_multiplications == 34272;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let registry = SelectorRegistry::builtin();
    for relays in [2usize, 4, 6, 8] {
        let codes = generate_spreading_codes(3, 16, &mut rng).map_err(|e| e.to_string())?;
        let channels = draw_channels(3, relays, &mut rng).map_err(|e| e.to_string())?;
        let sigs =
            SignatureSet::new(&codes, &channels, 1.0, std::f64::consts::FRAC_1_SQRT_2).map_err(|e| e.to_string())?;
        let model = SelectionModel::new(&sigs, DetectorKind::Mmse, DetectorKind::Rake, 0.1, &mut OpCounter::default())
            .map_err(|e| e.to_string())?;
        let request = SelectionRequest { model: &model, sigma2: 0.1, scope: HopScope::Both, feasible: &|_, _| true };
        let count = |name: &str, rng: &mut ChaCha8Rng| -> Result<u64, String> {
            let mut selector: Box<dyn PairSelector> = registry.create(name).map_err(|e| e.to_string())?;
            let mut counter = OpCounter::default();
            selector.select(&request, rng, &mut counter).map_err(|e| e.to_string())?;
            Ok(counter.sinr_evaluations)
        };
        let greedy = count("greedy", &mut rng)?;
        let exhaustive = count("exhaustive", &mut rng)?;
        let l = relays as u64;
        ok &= greedy <= 2 * (l - 1) && exhaustive == l * (l - 1) && (l == 2 || 2 * (l - 1) < l * (l - 1));
        detail.push(format!("L={relays}: greedy {greedy}, exhaustive {exhaustive}"));
    }
    if ok {
        Ok(detail.join("; "))
    } else {
        Err(detail.join("; "))
    }
}

fn delay() -> Outcome {
    let base = SimConfig { snr_db: vec![4.0], ..operating_point() };
    let nb = sweep(&SimConfig { scheme: "non-buffered".into(), ..base.clone() });
    let nb_delay = nb.points[0].avg_delay_epochs;
    let mut ok = nb_delay == Some(1.0);
    let mut detail = vec![format!("non-buffered {nb_delay:?}")];
    let mut previous: Option<SweepPoint> = None;
    for j in [2usize, 6, 10] {
        let p = sweep(&SimConfig { buffer: BufferSettings { size: j, ..BufferSettings::default() }, ..base.clone() })
            .points
            .remove(0);
        let d = p.avg_delay_epochs.unwrap_or(0.0);
        ok &= d >= 1.0;
        if let Some(prev) = &previous {
            let band = BAND_SIGMAS * prev.delay_std_error.unwrap_or(0.0).hypot(p.delay_std_error.unwrap_or(0.0));
            ok &= prev.avg_delay_epochs.unwrap_or(0.0) <= d + band;
        }
        detail.push(format!("J={j}: {d:.3}±{:.3}", p.delay_std_error.unwrap_or(0.0)));
        previous = Some(p);
    }
    if ok {
        Ok(detail.join("; "))
    } else {
        Err(detail.join("; "))
    }
}

fn determinism() -> Outcome {
    let config =
        SimConfig { packets: 20, snr_db: vec![0.0, 6.0, 12.0], policy: "random".into(), ..SimConfig::default() };
    let render = || {
        let mut out = Vec::new();
        write_csv(&sweep(&config), &mut out).expect("in-memory write");
        out
    };
    let (a, b) = (render(), render());
    if a == b {
        Ok(format!("{} identical bytes", a.len()))
    } else {
        Err("CSV output differs between runs".into())
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("calibration", calibration),
        ("exactness", exactness),
        ("scheme-ordering", scheme_ordering),
        ("dynamic-buffer-ordering", dynamic_buffer_ordering),
        ("oracle-equivalence", oracle_equivalence),
        ("structural", structural),
        ("complexity", complexity),
        ("delay", delay),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
