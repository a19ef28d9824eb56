use serde::{Deserialize, Serialize};

/// Closed-form operation counts of exhaustive pair search and the upper
/// bounds of the greedy search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityBounds {
    pub exhaustive_multiplications: u64,
    pub exhaustive_additions: u64,
    pub greedy_multiplications: u64,
    pub greedy_additions: u64,
}

/// * exhaustive: `7KNL³ − 7KNL²` mults, `2KNL³ − 2KNL² + KL³ − KL² − 2L² + 2L` adds
/// * greedy: `21KNL² − 7KNL` mults, `6KNL² + 3KL² − 3KL − L + 1` adds
pub fn count_complexity(users: u64, chips: u64, relays: u64) -> ComplexityBounds {
    let (k, n, l) = (users, chips, relays);
    // factored so every intermediate stays nonnegative for l >= 1
    let l_minus_1 = l.saturating_sub(1);
    let exhaustive_multiplications = 7 * k * n * l * l * l_minus_1;
    let exhaustive_additions = l * l_minus_1 * (2 * k * n * l + k * l) - 2 * l * l_minus_1;
    let greedy_multiplications = 7 * k * n * l * (3 * l - 1);
    let greedy_additions = 6 * k * n * l * l + 3 * k * l * l_minus_1 + 1 - l;
    ComplexityBounds { exhaustive_multiplications, exhaustive_additions, greedy_multiplications, greedy_additions }
}
