use crate::detector::{build_filter, DetectorKind, ReceiveFilter};
use crate::linalg;
use crate::signal::{EffectiveSignature, RelayPair, SignatureSet};

use super::{Hop, OpCounter, SelectionError};

/// Filters and signatures of every `(user, relay)` link on one hop.
#[derive(Clone, Debug)]
pub struct HopLinks {
    /// `[k][l]`
    pub filters: Vec<Vec<ReceiveFilter>>,
    /// `[k][l]`
    pub signatures: Vec<Vec<EffectiveSignature>>,
}

impl HopLinks {
    /// `per_relay[l][k]` is user `k`'s signature at relay link `l`. Filters at
    /// link `l` see every user on that link, so MMSE uses the covariance
    /// `Σ_k h_{kl} h_{kl}ᴴ + σ² I`.
    pub fn build(
        per_relay: &[Vec<EffectiveSignature>],
        kind: DetectorKind,
        sigma2: f64,
    ) -> Result<Self, SelectionError> {
        let users = per_relay.first().map_or(0, Vec::len);
        let mut filters = vec![Vec::with_capacity(per_relay.len()); users];
        let mut signatures = vec![Vec::with_capacity(per_relay.len()); users];
        for link in per_relay {
            let refs: Vec<&EffectiveSignature> = link.iter().collect();
            for k in 0..users {
                filters[k].push(build_filter(kind, &refs, k, sigma2)?);
                signatures[k].push(link[k].clone());
            }
        }
        Ok(Self { filters, signatures })
    }

    pub fn users(&self) -> usize {
        self.filters.len()
    }

    pub fn relays(&self) -> usize {
        self.filters.first().map_or(0, Vec::len)
    }

    /// Per-link scalars `wᴴ ρ w` and `wᴴ w`, where `ρ = hᴴ h`.
    pub fn terms(&self, counter: &mut OpCounter) -> LinkTerms {
        let chips = self.signatures.first().and_then(|row| row.first()).map_or(0, |s| s.len()) as u64;
        let mut power = Vec::with_capacity(self.users());
        let mut filter_energy = Vec::with_capacity(self.users());
        for (filters, sigs) in self.filters.iter().zip(&self.signatures) {
            let mut p_row = Vec::with_capacity(filters.len());
            let mut e_row = Vec::with_capacity(filters.len());
            for (w, h) in filters.iter().zip(sigs) {
                let rho = linalg::inner(h.vector(), h.vector()).re;
                let energy = linalg::norm_sqr(w.weights());
                // ρ and wᴴw: N products and N-1 sums each; then ρ·wᴴw
                counter.mul(2 * chips + 1);
                counter.add(2 * chips.saturating_sub(1));
                p_row.push(rho * energy);
                e_row.push(energy);
            }
            power.push(p_row);
            filter_energy.push(e_row);
        }
        LinkTerms { power, filter_energy }
    }
}

/// Scalar link terms a pair SINR is assembled from, indexed `[k][l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkTerms {
    pub power: Vec<Vec<f64>>,
    pub filter_energy: Vec<Vec<f64>>,
}

impl LinkTerms {
    pub fn relays(&self) -> usize {
        self.power.first().map_or(0, Vec::len)
    }

    /// Σ_k over the two selected links, over the remaining links, and
    /// σ² times the selected filter energies.
    pub fn pair_sinr(&self, pair: RelayPair, sigma2: f64, counter: &mut OpCounter) -> Result<f64, SelectionError> {
        let relays = self.relays();
        let (m, n) = (pair.first(), pair.second());
        if n >= relays {
            return Err(SelectionError::PairOutOfRange { pair, relays });
        }
        let users = self.power.len() as u64;
        let mut numerator = 0.0;
        let mut interference = 0.0;
        let mut energy = 0.0;
        for (p_row, e_row) in self.power.iter().zip(&self.filter_energy) {
            numerator += p_row[m] + p_row[n];
            energy += e_row[m] + e_row[n];
            for (l, p) in p_row.iter().enumerate() {
                if l != m && l != n {
                    interference += p;
                }
            }
        }
        let denominator = interference + sigma2 * energy;
        counter.mul(2);
        counter.add(2 * users + 2 * users + users * (relays as u64 - 2) + 1);
        counter.sinr_evaluations += 1;
        if denominator == 0.0 {
            return Err(SelectionError::Degenerate(pair));
        }
        Ok(numerator / denominator)
    }

    /// Single-link quality of relay `l`: the numerator contribution alone.
    pub fn relay_quality(&self, relay: usize, counter: &mut OpCounter) -> f64 {
        counter.add(self.power.len().saturating_sub(1) as u64);
        self.power.iter().map(|row| row[relay]).sum()
    }
}

fn checked_pair_sinr(links: &HopLinks, pair: RelayPair, sigma2: f64) -> Result<f64, SelectionError> {
    if links.relays() < 2 {
        return Err(SelectionError::TooFewRelays(links.relays()));
    }
    let mut scratch = OpCounter::default();
    links.terms(&mut scratch).pair_sinr(pair, sigma2, &mut scratch)
}

/// SINR of the combined source-relay paths into relays `m` and `n`.
pub fn sinr_source_relay_pair(links: &HopLinks, pair: RelayPair, sigma2: f64) -> Result<f64, SelectionError> {
    checked_pair_sinr(links, pair, sigma2)
}

/// SINR of the combined relay-destination paths out of relays `m` and `n`.
pub fn sinr_relay_dest_pair(links: &HopLinks, pair: RelayPair, sigma2: f64) -> Result<f64, SelectionError> {
    checked_pair_sinr(links, pair, sigma2)
}

/// Cached link terms for both hops of one channel realization.
#[derive(Clone, Debug)]
pub struct SelectionModel {
    pub source_relay: LinkTerms,
    pub relay_dest: LinkTerms,
}

impl SelectionModel {
    /// `filter_sigma2` builds MMSE filters and must be positive for MMSE.
    pub fn new(
        signatures: &SignatureSet,
        relay_detector: DetectorKind,
        dest_detector: DetectorKind,
        filter_sigma2: f64,
        counter: &mut OpCounter,
    ) -> Result<Self, SelectionError> {
        let sr_per_relay: Vec<Vec<EffectiveSignature>> = (0..signatures.relays())
            .map(|l| signatures.source_relay.iter().map(|row| row[l].clone()).collect())
            .collect();
        let sr = HopLinks::build(&sr_per_relay, relay_detector, filter_sigma2)?;
        let rd = HopLinks::build(&signatures.relay_dest, dest_detector, filter_sigma2)?;
        Ok(Self::from_links(&sr, &rd, counter))
    }

    pub fn from_links(source_relay: &HopLinks, relay_dest: &HopLinks, counter: &mut OpCounter) -> Self {
        Self { source_relay: source_relay.terms(counter), relay_dest: relay_dest.terms(counter) }
    }

    pub fn relays(&self) -> usize {
        self.source_relay.relays()
    }

    pub fn hop(&self, hop: Hop) -> &LinkTerms {
        match hop {
            Hop::SourceRelay => &self.source_relay,
            Hop::RelayDest => &self.relay_dest,
        }
    }

    /// Pair SINR with the zero-denominator case mapped to `+inf`.
    pub fn sinr(&self, hop: Hop, pair: RelayPair, sigma2: f64, counter: &mut OpCounter) -> Result<f64, SelectionError> {
        match self.hop(hop).pair_sinr(pair, sigma2, counter) {
            Err(SelectionError::Degenerate(_)) => Ok(f64::INFINITY),
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn unit(n: usize, i: usize, scale: f64) -> EffectiveSignature {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[i] = Complex64::new(scale, 0.0);
        EffectiveSignature::from_vector(v)
    }

    fn two_relay_single_user(scale: f64, kind: DetectorKind, sigma2: f64) -> HopLinks {
        let per_relay = vec![vec![unit(2, 0, scale)], vec![unit(2, 1, scale)]];
        HopLinks::build(&per_relay, kind, sigma2).unwrap()
    }

    #[test]
    fn unit_norm_rake_pair() {
        let links = two_relay_single_user(1.0, DetectorKind::Rake, 1.0);
        let pair = RelayPair::new(0, 1).unwrap();
        assert!((sinr_source_relay_pair(&links, pair, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((sinr_source_relay_pair(&links, pair, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((sinr_relay_dest_pair(&links, pair, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_amplitude_scales_by_amplitude_squared() {
        let pair = RelayPair::new(0, 1).unwrap();
        let base = sinr_relay_dest_pair(&two_relay_single_user(1.0, DetectorKind::Rake, 0.7), pair, 0.7).unwrap();
        let doubled = sinr_relay_dest_pair(&two_relay_single_user(2.0, DetectorKind::Rake, 0.7), pair, 0.7).unwrap();
        assert!((doubled / base - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_without_interferers_is_degenerate() {
        let links = two_relay_single_user(1.0, DetectorKind::Rake, 1.0);
        let pair = RelayPair::new(0, 1).unwrap();
        assert_eq!(sinr_source_relay_pair(&links, pair, 0.0), Err(SelectionError::Degenerate(pair)));
        let mut counter = OpCounter::default();
        let model = SelectionModel::from_links(&links, &links, &mut counter);
        assert_eq!(model.sinr(Hop::SourceRelay, pair, 0.0, &mut counter).unwrap(), f64::INFINITY);
    }

    #[test]
    fn single_relay_and_out_of_range_pairs_error() {
        let per_relay = vec![vec![unit(2, 0, 1.0)]];
        let links = HopLinks::build(&per_relay, DetectorKind::Rake, 1.0).unwrap();
        let pair = RelayPair::new(0, 1).unwrap();
        assert_eq!(sinr_source_relay_pair(&links, pair, 1.0), Err(SelectionError::TooFewRelays(1)));
        let links = two_relay_single_user(1.0, DetectorKind::Rake, 1.0);
        assert!(matches!(
            sinr_source_relay_pair(&links, RelayPair::new(0, 2).unwrap(), 1.0),
            Err(SelectionError::PairOutOfRange { .. })
        ));
    }

    #[test]
    fn sinr_decreases_with_noise_when_interference_is_empty() {
        let links = two_relay_single_user(0.8, DetectorKind::Rake, 1.0);
        let pair = RelayPair::new(0, 1).unwrap();
        let mut last = f64::INFINITY;
        for sigma2 in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
            let s = sinr_source_relay_pair(&links, pair, sigma2).unwrap();
            assert!(s < last);
            last = s;
        }
    }
}
