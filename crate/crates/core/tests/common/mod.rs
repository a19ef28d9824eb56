//! Independent reference computations shared by the integration tests.
//! Nothing here calls the filter, SINR or selection code under test.
#![allow(dead_code)]

use bufdstc::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn random_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<C> {
    (0..len).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale).collect()
}

pub fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn energy(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Gaussian elimination with partial pivoting on a dense complex system.
pub fn solve(mut a: Vec<Vec<C>>, mut b: Vec<C>) -> Vec<C> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            let delta = factor * b[col];
            b[row] -= delta;
        }
    }
    let mut x = vec![C::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let tail: C = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// `(Σ_k h_k h_kᴴ + σ² I)⁻¹ h_target`
pub fn mmse_oracle(columns: &[Vec<C>], target: usize, sigma2: f64) -> Vec<C> {
    let n = columns[target].len();
    let mut r = vec![vec![C::new(0.0, 0.0); n]; n];
    for h in columns {
        for i in 0..n {
            for j in 0..n {
                r[i][j] += h[i] * h[j].conj();
            }
        }
    }
    for (i, row) in r.iter_mut().enumerate() {
        row[i] += sigma2;
    }
    solve(r, columns[target].clone())
}

/// Pair SINR computed straight from signatures `h[l][k]` and filters
/// `w[l][k]`: every user's selected-link power over the other links'
/// power plus filtered noise.
pub fn pair_sinr_oracle(h: &[Vec<Vec<C>>], w: &[Vec<Vec<C>>], m: usize, n: usize, sigma2: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for l in 0..h.len() {
        for k in 0..h[l].len() {
            let term = energy(&h[l][k]) * energy(&w[l][k]);
            if l == m || l == n {
                num += term;
                den += sigma2 * energy(&w[l][k]);
            } else {
                den += term;
            }
        }
    }
    num / den
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Direct-link BPSK bit error rate at `snr_db`.
pub fn bpsk_awgn_ber(snr_db: f64) -> f64 {
    q_function((2.0 * 10f64.powf(snr_db / 10.0)).sqrt())
}
