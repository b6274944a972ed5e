//! Seeded random instances — families, automata, vectors, matrices — in
//! exact rational arithmetic, for randomized test suites and benchmarks.
//!
//! Every generator takes the caller's RNG, so suites derive one stream per
//! case and stay reproducible.

use rand_chacha::rand_core::RngCore;

use crate::betting::BettingAutomaton;
use crate::family::MatrixFamily;
use crate::linalg::{NonNegMatrix, NonNegVector};
use crate::rng::{uniform_range_i64, uniform_usize};
use crate::scalar::{int, rat, Mode, Scalar};
use crate::support::{reachability_graph, star_check};

/// Shape of a generated family.
#[derive(Clone, Copy, Debug)]
pub struct GenOptions {
    pub dim: usize,
    pub alphabet_size: usize,
    /// Chance (in percent) that an individual matrix entry is zeroed,
    /// which drives the variety of support structures.
    pub zero_percent: u32,
    /// When set, every row's letter-sum equals the alphabet size exactly;
    /// otherwise rows are randomly fair or strictly superfair.
    pub fair: bool,
}

impl Default for GenOptions {
    fn default() -> GenOptions {
        GenOptions { dim: 3, alphabet_size: 2, zero_percent: 35, fair: false }
    }
}

fn symbol_names(k: usize) -> Vec<String> {
    const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
    assert!(k <= DIGITS.len(), "alphabet too large for single-character symbols");
    DIGITS[..k].iter().map(|&c| (c as char).to_string()).collect()
}

fn small_rational(rng: &mut impl RngCore, zero_percent: u32) -> Scalar {
    if uniform_usize(rng, 100) < zero_percent as usize {
        return int(0);
    }
    let den = [4i64, 6, 8, 10, 12][uniform_usize(rng, 5)];
    let num = uniform_range_i64(rng, 1, den);
    rat(num, den)
}

/// Random superfair family: raw non-negative rational entries, then each
/// row rescaled so its letter-sum is exactly k (fair row) or a rational
/// fraction of k in [1/2, 1) (strictly superfair row). All-zero rows stay
/// zero, giving sudden-death structure.
pub fn random_superfair_family(rng: &mut impl RngCore, opts: &GenOptions) -> MatrixFamily {
    let m = opts.dim;
    let k = opts.alphabet_size;
    let mut raw: Vec<Vec<Scalar>> = (0..k)
        .map(|_| (0..m * m).map(|_| small_rational(rng, opts.zero_percent)).collect())
        .collect();
    for i in 0..m {
        let mut sum = int(0);
        for letter in raw.iter() {
            for j in 0..m {
                sum = sum + &letter[i * m + j];
            }
        }
        if sum.is_zero() {
            continue;
        }
        let theta = if opts.fair || uniform_usize(rng, 2) == 0 {
            int(1)
        } else {
            // Strict rescale in [1/2, 1).
            rat(uniform_range_i64(rng, 4, 7), 8)
        };
        let factor = (int(k as i64) * &theta) / &sum;
        for letter in raw.iter_mut() {
            for j in 0..m {
                letter[i * m + j] = &letter[i * m + j] * &factor;
            }
        }
    }
    let matrices: Vec<NonNegMatrix> = raw
        .into_iter()
        .map(|data| NonNegMatrix::new(m, m, data).expect("generated entries are non-negative"))
        .collect();
    MatrixFamily::new(symbol_names(k), matrices, Mode::Exact)
        .expect("generated family is well-formed")
}

/// Random superfair family whose index reachability graph is strongly
/// connected. Rejection-samples; after many misses the zero probability is
/// lowered so termination is guaranteed in practice.
pub fn random_star_family(rng: &mut impl RngCore, opts: &GenOptions) -> MatrixFamily {
    let mut opts = *opts;
    for attempt in 0.. {
        let f = random_superfair_family(rng, &opts);
        if star_check(&reachability_graph(&f)) {
            return f;
        }
        if attempt % 50 == 49 && opts.zero_percent > 5 {
            opts.zero_percent -= 5;
        }
    }
    unreachable!("rejection sampling terminates")
}

/// Random non-negative rational vector; entries are zeroed with the given
/// percent chance (the all-zero draw is rerolled to keep the vector usable).
pub fn random_nonneg_vector(rng: &mut impl RngCore, m: usize, zero_percent: u32) -> NonNegVector {
    loop {
        let entries: Vec<Scalar> = (0..m).map(|_| small_rational(rng, zero_percent)).collect();
        let v = NonNegVector::new(entries).expect("generated entries are non-negative");
        if !v.is_zero() {
            return v;
        }
    }
}

/// Random strictly positive rational vector.
pub fn random_positive_vector(rng: &mut impl RngCore, m: usize) -> NonNegVector {
    let entries: Vec<Scalar> = (0..m).map(|_| small_rational(rng, 0)).collect();
    NonNegVector::new(entries).expect("generated entries are positive")
}

/// Random strictly positive rational matrix.
pub fn random_positive_matrix(rng: &mut impl RngCore, m: usize) -> NonNegMatrix {
    let data: Vec<Scalar> = (0..m * m).map(|_| small_rational(rng, 0)).collect();
    NonNegMatrix::new(m, m, data).expect("generated entries are positive")
}

/// Random probabilistic betting automaton with exactly fair bets: every
/// transition row is a rational distribution, every bet row sums to the
/// alphabet size.
pub fn random_automaton(
    rng: &mut impl RngCore,
    states: usize,
    alphabet_size: usize,
) -> BettingAutomaton {
    let names: Vec<String> = (0..states).map(|s| format!("s{s}")).collect();
    let alphabet = symbol_names(alphabet_size);
    let mut delta = Vec::with_capacity(states);
    let mut gamma = Vec::with_capacity(states);
    for s in 0..states {
        let mut per_letter = Vec::with_capacity(alphabet_size);
        for _ in 0..alphabet_size {
            let mut weights: Vec<i64> =
                (0..states).map(|_| uniform_range_i64(rng, 0, 6)).collect();
            if weights.iter().all(|&w| w == 0) {
                weights[s] = 1;
            }
            let total: i64 = weights.iter().sum();
            per_letter.push(weights.into_iter().map(|w| rat(w, total)).collect::<Vec<Scalar>>());
        }
        delta.push(per_letter);

        let mut bets: Vec<i64> =
            (0..alphabet_size).map(|_| uniform_range_i64(rng, 0, 6)).collect();
        if bets.iter().all(|&b| b == 0) {
            bets = vec![1; alphabet_size];
        }
        let total: i64 = bets.iter().sum();
        gamma.push(
            bets.into_iter()
                .map(|b| rat(b * alphabet_size as i64, total))
                .collect::<Vec<Scalar>>(),
        );
    }
    BettingAutomaton::new(names, alphabet, 0, delta, gamma, Mode::Exact)
        .expect("generated automaton is well-formed")
}
