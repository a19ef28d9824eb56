//! Distributed Alamouti coding over a relay pair.
//!
//! Relay `p` carries the first-slot symbol and relay `q` the second-slot
//! symbol of a block. The destination stacks the two received slots as
//! `[y(2i-1); y(2i)*]`, which turns the two receive equations into
//! `y = Σ_k H_k b_k + n` with the 2N×2 effective matrix
//! `H_k = [[h_p, h_q], [h_q*, -h_p*]]`.

use num_complex::Complex64;
use thiserror::Error;

use crate::detector::{mmse_weights, DetectorError, DetectorKind};
use crate::linalg;
use crate::signal::Bpsk;
use crate::CVec;

#[derive(Debug, Error, PartialEq)]
pub enum DstcError {
    #[error("signature lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("received vector has {actual} samples, expected {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// 2×2 transmitted symbol matrix; rows are time slots, columns relays.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlamoutiBlock {
    pub matrix: [[Complex64; 2]; 2],
}

impl AlamoutiBlock {
    /// `Bᴴ B`.
    pub fn gram(&self) -> [[Complex64; 2]; 2] {
        let m = &self.matrix;
        let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..2).map(|r| m[r][i].conj() * m[r][j]).sum();
            }
        }
        g
    }
}

/// `[[b1, -b2*], [b2, b1*]]`.
pub fn alamouti_encode(b1: Bpsk, b2: Bpsk) -> AlamoutiBlock {
    let (b1, b2) = (b1.complex(), b2.complex());
    AlamoutiBlock { matrix: [[b1, -b2.conj()], [b2, b1.conj()]] }
}

/// The 2N×2 matrix `[[h_m, h_n], [h_n*, -h_m*]]`, stored by column.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveAlamoutiMatrix {
    columns: [CVec; 2],
}

impl EffectiveAlamoutiMatrix {
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.columns[j]
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    /// `Hᴴ H`.
    pub fn gram(&self) -> [[Complex64; 2]; 2] {
        let c = &self.columns;
        [
            [linalg::inner(&c[0], &c[0]), linalg::inner(&c[0], &c[1])],
            [linalg::inner(&c[1], &c[0]), linalg::inner(&c[1], &c[1])],
        ]
    }

    /// `H b` for a BPSK pair.
    pub fn apply(&self, b: [Bpsk; 2]) -> CVec {
        self.columns[0].iter().zip(&self.columns[1]).map(|(x, y)| x * b[0].value() + y * b[1].value()).collect()
    }
}

pub fn build_effective_matrix(h_m: &[Complex64], h_n: &[Complex64]) -> Result<EffectiveAlamoutiMatrix, DstcError> {
    if h_m.len() != h_n.len() {
        return Err(DstcError::LengthMismatch(h_m.len(), h_n.len()));
    }
    let first = h_m.iter().copied().chain(h_n.iter().map(|x| x.conj())).collect();
    let second = h_n.iter().copied().chain(h_m.iter().map(|x| -x.conj())).collect();
    Ok(EffectiveAlamoutiMatrix { columns: [first, second] })
}

/// `[y1; y2*]`.
pub fn stack_slots(slot1: &[Complex64], slot2: &[Complex64]) -> CVec {
    slot1.iter().copied().chain(slot2.iter().map(|x| x.conj())).collect()
}

/// Per-user combining filters for one set of effective matrices.
#[derive(Clone, Debug)]
pub struct AlamoutiCombiner {
    filters: Vec<[CVec; 2]>,
}

impl AlamoutiCombiner {
    /// RAKE uses the columns of `H_k` directly. MMSE solves
    /// `(Σ_j Σ_c c cᴴ + σ² I) w = c` over every user's two columns.
    pub fn new(matrices: &[EffectiveAlamoutiMatrix], kind: DetectorKind, sigma2: f64) -> Result<Self, DstcError> {
        let filters = match kind {
            DetectorKind::Rake => matrices.iter().map(|h| h.columns.clone()).collect(),
            DetectorKind::Mmse => {
                let columns: Vec<&[Complex64]> = matrices.iter().flat_map(|h| [h.column(0), h.column(1)]).collect();
                let mut solved = mmse_weights(&columns, &columns, sigma2)?.into_iter();
                matrices
                    .iter()
                    .map(|_| {
                        let a = solved.next().expect("two columns per user");
                        let b = solved.next().expect("two columns per user");
                        [a, b]
                    })
                    .collect()
            }
        };
        Ok(Self { filters })
    }

    pub fn users(&self) -> usize {
        self.filters.len()
    }

    /// Two soft values per user.
    pub fn detect(&self, stacked: &[Complex64]) -> Result<Vec<[Complex64; 2]>, DstcError> {
        self.filters
            .iter()
            .map(|[a, b]| {
                if a.len() != stacked.len() {
                    return Err(DstcError::Dimension { expected: a.len(), actual: stacked.len() });
                }
                Ok([linalg::inner(a, stacked), linalg::inner(b, stacked)])
            })
            .collect()
    }
}

/// One-shot destination detection of every user's symbol pair.
pub fn alamouti_detect(
    stacked: &[Complex64],
    matrices: &[EffectiveAlamoutiMatrix],
    kind: DetectorKind,
    sigma2: f64,
) -> Result<Vec<[Complex64; 2]>, DstcError> {
    AlamoutiCombiner::new(matrices, kind, sigma2)?.detect(stacked)
}
