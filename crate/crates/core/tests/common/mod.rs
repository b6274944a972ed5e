//! Randomized property suites shared by the `properties` test target and the
//! acceptance gate. Every suite runs at least `CASES` seeded cases in exact
//! arithmetic and panics on the first violation.

// Each test binary exercises its own subset of the suites.
#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use normbet_core::classify::{betting_subspace, live};
use normbet_core::generate::{
    random_nonneg_vector, random_positive_matrix, random_positive_vector, random_superfair_family,
    GenOptions,
};
use normbet_core::geometry::{birkhoff_tau, hilbert_distance_or_inf};
use normbet_core::linalg::SpanBasis;
use normbet_core::rng::{derive_seed, uniform_range_i64, uniform_usize};
use normbet_core::support::act_set;
use normbet_core::{IndexSet, MatrixFamily, Mode, NonNegVector, Scalar};

pub const CASES: usize = 1000;

/// Tolerance for inequalities whose sides pass through `ln` once.
const LOG_SLACK: f64 = 1e-9;

fn rng_for(suite: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(0xBEEF_CAFE, suite))
}

fn random_family(rng: &mut ChaCha12Rng) -> MatrixFamily {
    let opts = GenOptions {
        dim: 2 + uniform_usize(rng, 3),
        alphabet_size: 2 + uniform_usize(rng, 2),
        zero_percent: uniform_usize(rng, 7) as u32 * 10,
        fair: rng.next_u64() % 2 == 0,
    };
    random_superfair_family(rng, &opts)
}

fn positive_rational(rng: &mut ChaCha12Rng) -> Scalar {
    Mode::Exact.from_ratio(uniform_range_i64(rng, 1, 12), uniform_range_i64(rng, 1, 12))
}

/// A second vector with exactly the support of `v`.
fn same_support_vector(rng: &mut ChaCha12Rng, v: &NonNegVector) -> NonNegVector {
    let entries: Vec<Scalar> = v
        .entries()
        .iter()
        .map(|e| if e.is_zero() { Mode::Exact.zero() } else { positive_rational(rng) })
        .collect();
    NonNegVector::new(entries).expect("entries are non-negative")
}

fn random_word(rng: &mut ChaCha12Rng, k: usize, max_len: usize) -> Vec<usize> {
    let len = uniform_usize(rng, max_len + 1);
    (0..len).map(|_| uniform_usize(rng, k)).collect()
}

fn random_subset(rng: &mut ChaCha12Rng, dim: usize) -> IndexSet {
    let mut set = IndexSet::default();
    for i in 0..dim {
        if rng.next_u64() % 2 == 0 {
            set.insert(i);
        }
    }
    set
}

/// The projective (Hilbert) distance between two same-support vectors never
/// grows under the action of any matrix in a superfair family, and the image
/// supports stay equal.
pub fn hilbert_non_expansion() {
    let mut rng = rng_for(1);
    let mut done = 0;
    let mut attempts = 0;
    while done < CASES {
        attempts += 1;
        assert!(attempts < 40 * CASES, "too many degenerate draws");
        let f = random_family(&mut rng);
        let u = random_nonneg_vector(&mut rng, f.dim(), 30);
        let v = same_support_vector(&mut rng, &u);
        let w = random_word(&mut rng, f.size(), 4);
        let ui = f.apply_word(&u, &w);
        let vi = f.apply_word(&v, &w);
        assert_eq!(
            ui.support(f.mode()),
            vi.support(f.mode()),
            "same-support inputs must keep equal supports (case {done})"
        );
        if ui.is_zero() {
            continue; // both died; no distance to compare
        }
        let before = hilbert_distance_or_inf(&u, &v, f.mode());
        let after = hilbert_distance_or_inf(&ui, &vi, f.mode());
        assert!(
            after <= before + LOG_SLACK,
            "projective distance grew: {before} -> {after} (case {done})"
        );
        done += 1;
    }
}

/// On norm-one vectors the L1 distance is bounded by the projective distance.
pub fn norm_bounded_by_hilbert() {
    let mut rng = rng_for(2);
    for case in 0..CASES {
        let dim = 2 + uniform_usize(&mut rng, 4);
        let u = random_nonneg_vector(&mut rng, dim, 25);
        let v = same_support_vector(&mut rng, &u);
        let u = u.normalized().unwrap();
        let v = v.normalized().unwrap();
        let l1: Scalar = u
            .entries()
            .iter()
            .zip(v.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(Mode::Exact.zero(), |acc, d| acc + d);
        let dh = hilbert_distance_or_inf(&u, &v, Mode::Exact);
        assert!(
            l1.to_f64() <= dh + LOG_SLACK,
            "L1 {} exceeds projective distance {dh} (case {case})",
            l1.to_f64()
        );
    }
}

/// Strictly positive matrices contract the projective metric, and the
/// contraction coefficient from the matrix's cross-ratios really bounds the
/// observed ratio.
pub fn birkhoff_contraction() {
    let mut rng = rng_for(3);
    let mut done = 0;
    let mut attempts = 0;
    while done < CASES {
        attempts += 1;
        assert!(attempts < 40 * CASES, "too many degenerate draws");
        let dim = 2 + uniform_usize(&mut rng, 3);
        let m = random_positive_matrix(&mut rng, dim);
        let tau = birkhoff_tau(&m, Mode::Exact).unwrap();
        assert!((0.0..1.0).contains(&tau), "tau {tau} outside [0,1) (case {done})");
        let u = random_positive_vector(&mut rng, dim);
        let v = random_positive_vector(&mut rng, dim);
        let before = hilbert_distance_or_inf(&u, &v, Mode::Exact);
        if before == 0.0 {
            continue; // projectively equal; the ratio is undefined
        }
        let after = hilbert_distance_or_inf(&m.vec_mul(&u), &m.vec_mul(&v), Mode::Exact);
        assert!(
            after <= tau * before + LOG_SLACK,
            "contraction ratio {} exceeds tau {tau} (case {done})",
            after / before
        );
        done += 1;
    }
}

/// The averaged next-step value of log-capital plus cumulative risk never
/// exceeds today's value (whenever every branch stays alive).
pub fn risk_supermartingale() {
    let mut rng = rng_for(4);
    let mut done = 0;
    let mut attempts = 0;
    'outer: while done < CASES {
        attempts += 1;
        assert!(attempts < 40 * CASES, "too many degenerate draws");
        let f = random_family(&mut rng);
        let v = random_nonneg_vector(&mut rng, f.dim(), 30);
        let w = random_word(&mut rng, f.size(), 5);
        let l_w = f.log_capital(&v, &w).unwrap();
        if !l_w.is_finite() {
            continue;
        }
        let g_w = f.cumulative_risk(&v, &w).unwrap();
        if g_w.dead_prefix {
            continue;
        }
        let mut avg = 0.0;
        for a in 0..f.size() {
            let mut wa = w.clone();
            wa.push(a);
            let l_wa = f.log_capital(&v, &wa).unwrap();
            if !l_wa.is_finite() {
                continue 'outer;
            }
            let g_wa = f.cumulative_risk(&v, &wa).unwrap();
            avg += (l_wa + g_wa.value) / f.size() as f64;
        }
        assert!(
            avg <= l_w + g_w.value + LOG_SLACK,
            "averaged log-capital plus risk rose: {avg} > {} (case {done})",
            l_w + g_w.value
        );
        done += 1;
    }
}

/// The live part of a vector is subadditive, homogeneous, bounded by the
/// norm, and controls one-step norm changes.
pub fn live_inequalities() {
    let mut rng = rng_for(5);
    for case in 0..CASES {
        let f = random_family(&mut rng);
        let space = betting_subspace(&f);
        let u = random_nonneg_vector(&mut rng, f.dim(), 30);
        let v = random_nonneg_vector(&mut rng, f.dim(), 30);
        let live_u = live(&f, &space, &u).unwrap();
        let live_v = live(&f, &space, &v).unwrap();

        // 0 <= Live(u) <= ||u||, exactly.
        assert!(live_u >= Mode::Exact.zero(), "negative live part (case {case})");
        assert!(live_u <= u.norm1(), "live part exceeds norm (case {case})");

        // Subadditive: Live(u + v) <= Live(u) + Live(v).
        let live_sum = live(&f, &space, &u.add(&v)).unwrap();
        assert!(
            live_sum <= &live_u + &live_v,
            "live part superadditive: {live_sum} > {live_u} + {live_v} (case {case})"
        );

        // Homogeneous: Live(c u) = c Live(u), exactly.
        let c = positive_rational(&mut rng);
        let live_scaled = live(&f, &space, &u.scale(&c)).unwrap();
        assert!(
            live_scaled == &c * &live_u,
            "live part not homogeneous: {live_scaled} != {c} * {live_u} (case {case})"
        );

        // One-step norm change: | ||u M_a|| - ||u|| | <= |A| Live(u).
        let bound = Mode::Exact.from_i64(f.size() as i64) * &live_u;
        for a in 0..f.size() {
            let change = (f.matrix(a).vec_mul(&u).norm1() - u.norm1()).abs();
            assert!(
                change <= bound,
                "one-step change {change} exceeds |A| Live = {bound} (case {case})"
            );
        }
    }
}

/// Vectors at small projective distance, with equal norm and support, have
/// close live parts: |Live(u) - Live(v)| <= 3 eps ||u||.
pub fn live_projective_continuity() {
    let mut rng = rng_for(6);
    let mut done = 0;
    let mut attempts = 0;
    while done < CASES {
        attempts += 1;
        assert!(attempts < 40 * CASES, "too many degenerate draws");
        let f = random_family(&mut rng);
        let space = betting_subspace(&f);
        let u = random_nonneg_vector(&mut rng, f.dim(), 25);
        // Multiplicative wiggle by factors in [9/10, 11/10], renormalized to
        // keep the norm equal; the support is untouched.
        let entries: Vec<Scalar> = u
            .entries()
            .iter()
            .map(|e| {
                let wiggle =
                    Mode::Exact.from_ratio(9 + uniform_range_i64(&mut rng, 0, 2), 10);
                e * &wiggle
            })
            .collect();
        let v = NonNegVector::new(entries).unwrap();
        if v.is_zero() {
            continue;
        }
        let v = v.scale(&(u.norm1() / v.norm1()));
        let eps = hilbert_distance_or_inf(&u, &v, f.mode());
        if !(eps.is_finite() && eps > 0.0) {
            continue;
        }
        let gap = (live(&f, &space, &u).unwrap() - live(&f, &space, &v).unwrap()).abs();
        let bound = 3.0 * eps * u.norm1().to_f64();
        assert!(
            gap.to_f64() <= bound + LOG_SLACK,
            "live parts {} apart at projective distance {eps} (case {done})",
            gap.to_f64()
        );
        done += 1;
    }
}

/// The support action distributes over unions and preserves inclusion.
pub fn support_action_union_compatibility() {
    let mut rng = rng_for(7);
    for case in 0..CASES {
        let f = random_family(&mut rng);
        let e1 = random_subset(&mut rng, f.dim());
        let e2 = random_subset(&mut rng, f.dim());
        let w = random_word(&mut rng, f.size(), 6);
        let act_union = act_set(&f, e1.union(e2), &w).unwrap();
        let a1 = act_set(&f, e1, &w).unwrap();
        let a2 = act_set(&f, e2, &w).unwrap();
        assert_eq!(act_union, a1.union(a2), "union not preserved (case {case})");
        // Monotone: e1 is a subset of e1 union e2.
        let bigger = act_set(&f, e1.union(e2), &w).unwrap();
        assert_eq!(a1.union(bigger), bigger, "inclusion not preserved (case {case})");
    }
}

/// The betting subspace stabilizes within dim - 1 rounds of products and is
/// closed under every letter.
pub fn span_stabilization_depth() {
    let mut rng = rng_for(8);
    for case in 0..CASES {
        let f = random_family(&mut rng);
        let space = betting_subspace(&f);
        let deepest = space.depths.iter().copied().max().unwrap_or(0);
        assert!(
            deepest < f.dim(),
            "span still growing at depth {deepest} with {} states (case {case})",
            f.dim()
        );
        assert!(space.dim() <= f.dim(), "subspace larger than the space (case {case})");

        let mut span = SpanBasis::new(f.dim(), f.mode());
        for b in &space.basis {
            span.insert(b);
        }
        for b in &space.basis {
            for a in 0..f.size() {
                let image = f.matrix(a).mat_vec_signed(b);
                assert!(
                    span.contains(&image),
                    "basis image left the span on letter {a} (case {case})"
                );
            }
        }
    }
}
