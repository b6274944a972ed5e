//! The trichotomy decision: against normal input, a superfair family either
//! dies (Case 0), ruins exponentially while staying positive (Case 1), or
//! stabilizes to a positive constant (Case 2).
//!
//! Under strong connectivity of the index graph the decision is:
//! - Case 0 iff the support automaton has only the dead bottom component;
//! - otherwise compute the fixed direction x of a pseudo-mixing word and the
//!   betting subspace V; Case 2 iff x is orthogonal to V (the family never
//!   bets once aligned with x), else Case 1 with a witness word z where the
//!   one-step risk at x.z is strictly positive.
//!
//! Without strong connectivity, every strongly connected component of the
//! index graph is classified separately and the leakage structure between
//! components is reported, together with an empirical contraction probe.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num::BigRational;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::family::{FairnessKind, FairnessVerdict, MatrixFamily};
use crate::geometry::hilbert_distance_or_inf;
use crate::linalg::{dot, norm1_signed, IndexSet, NonNegMatrix, NonNegVector, SignedVec, SpanBasis};
use crate::rng::{derive_seed, uniform_usize};
use crate::scalar::{rational_candidates, Mode, Scalar, DEFAULT_EPS};
use crate::simplex::lp_max_capped;
use crate::support::{
    build_support_automaton, bscc_structure, is_pseudo_mixing, pseudo_mixing_word,
    reachability_graph,
};
use crate::{Error, Result};

/// The unique unit direction fixed by a pseudo-mixing word.
#[derive(Clone, Debug)]
pub struct FixedDirection {
    pub x: NonNegVector,
    /// Hilbert distance between x.w and x: exactly 0 on the exact path,
    /// the final iteration gap on the float path.
    pub residual: f64,
    pub iterations: usize,
    /// Whether x was obtained by an exactly verified eigen-solve.
    pub exact: bool,
}

/// Span of all betting moves: V = sum_a span{M_w (I - M_a) 1 : |w| <= m-1}.
/// A non-negative vector orthogonal to V is "non-betting": every one-letter
/// product preserves its norm, along every word.
#[derive(Clone, Debug)]
pub struct BettingSubspace {
    pub basis: Vec<SignedVec>,
    pub per_letter_dims: Vec<usize>,
    /// Word length at which each letter's span stabilized.
    pub depths: Vec<usize>,
}

impl BettingSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub enum Case {
    Case0,
    Case1 {
        /// Shortest word z with positive risk at x.z, when the bounded
        /// search finds one. The orthogonality test is the decision; the
        /// witness is evidence.
        witness: Option<Vec<usize>>,
        delta_at_witness: Option<f64>,
    },
    Case2 {
        live_x: Scalar,
    },
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::Case0 => "0",
            Case::Case1 { .. } => "1",
            Case::Case2 { .. } => "2",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Certificates {
    /// True iff every step of the verdict was carried out in exact
    /// arithmetic (including the fixed-direction eigen-solve).
    pub exact: bool,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub case: Case,
    pub f_set: Option<IndexSet>,
    pub pseudo_mixing: Option<Vec<usize>>,
    pub x: Option<FixedDirection>,
    pub certificates: Certificates,
}

impl Classification {
    pub fn to_json(&self, f: &MatrixFamily) -> Value {
        let word = |w: &Vec<usize>| f.word_to_string(w);
        let mut out = json!({
            "case": self.case.label(),
            "certificates": {
                "exact": self.certificates.exact,
                "residual": self.certificates.residual,
                "iterations": self.certificates.iterations,
            },
        });
        if let Some(fs) = self.f_set {
            out["F"] = json!(fs.to_labels());
        }
        if let Some(w) = &self.pseudo_mixing {
            out["pseudo_mixing_word"] = json!(word(w));
        }
        if let Some(fd) = &self.x {
            out["x"] = fd.x.to_json();
        }
        match &self.case {
            Case::Case1 { witness, delta_at_witness } => {
                if let Some(z) = witness {
                    out["witness"] = json!(word(z));
                }
                if let Some(d) = delta_at_witness {
                    out["delta_at_witness"] = json!(d);
                }
            }
            Case::Case2 { live_x } => {
                out["live_x"] = live_x.to_json();
            }
            Case::Case0 => {}
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Fixed direction
// ---------------------------------------------------------------------------

const FLOAT_FIXPOINT_TOL: f64 = 1e-12;
const FLOAT_FIXPOINT_MAX_ITERS: usize = 1_000_000;

/// The unique unit vector with support F fixed (as a direction) by a word
/// that pseudo-mixes F. Exact mode first attempts an exactly verified
/// eigen-solve of the reduced positive block; if the dominant eigenvalue is
/// irrational (or the family is float), a certified float iteration is used
/// and flagged.
pub fn fixed_direction(f: &MatrixFamily, fset: IndexSet, w: &[usize]) -> Result<FixedDirection> {
    if !is_pseudo_mixing(f, w, fset)? {
        return Err(Error::NotPseudoMixing);
    }
    if fset.is_empty() {
        return Err(Error::ZeroVector);
    }
    if f.mode().is_exact() {
        let mw = f.word_matrix(w);
        if let Some(x) = exact_fixed_direction(f, fset, &mw) {
            // Defensive fixed-point check: x M_w = ||x M_w|| x exactly.
            let xw = f.apply_word(&x, w);
            if xw != x.scale(&xw.norm1()) {
                return Err(Error::InternalContradiction(
                    "eigen-solve produced a non-fixed direction".into(),
                ));
            }
            return Ok(FixedDirection { x, residual: 0.0, iterations: 0, exact: true });
        }
    }
    float_fixed_direction(f, fset, w)
}

/// Exactly verified Perron solve on the reduced block. Returns None when no
/// rational candidate eigenvalue verifies.
fn exact_fixed_direction(f: &MatrixFamily, fset: IndexSet, mw: &NonNegMatrix) -> Option<NonNegVector> {
    let mode = Mode::Exact;
    let mut eprime = IndexSet::EMPTY;
    for i in fset.iter() {
        if mw.row_support(i, mode) == fset {
            eprime.insert(i);
        }
    }
    if eprime.is_empty() {
        return None;
    }
    let b = mw.submatrix(eprime, fset);
    let c = mw.submatrix(eprime, eprime);
    let r = eprime.len();

    let mut candidates: Vec<BigRational> = Vec::new();
    if r == 1 {
        if let Scalar::Exact(v) = c.get(0, 0) {
            candidates.push(v.clone());
        }
    } else {
        let estimate = power_estimate(&c);
        candidates.extend(rational_candidates(estimate, 1_000_000_000_000, 24));
    }
    for cand in candidates {
        let lambda = Scalar::Exact(cand);
        let Some(y) = positive_left_nullvector(&c, &lambda) else { continue };
        // x = y B embedded on F; strictly positive since y > 0 and B > 0.
        let xf = b.vec_mul_signed(&y);
        let m = f.dim();
        let mut entries = vec![mode.zero(); m];
        for (pos, j) in fset.iter().enumerate() {
            entries[j] = xf[pos].clone();
        }
        let x = NonNegVector::new(entries).ok()?;
        return x.normalized().ok();
    }
    None
}

/// Float power iteration estimating the dominant eigenvalue of a positive
/// matrix (left action, 1-norm normalization).
fn power_estimate(c: &NonNegMatrix) -> f64 {
    let r = c.rows();
    let cf = c.to_float();
    let mut y = vec![1.0f64 / r as f64; r];
    let mut lambda = 1.0f64;
    for _ in 0..2000 {
        let mut next = vec![0.0f64; r];
        for (i, &yi) in y.iter().enumerate() {
            for j in 0..r {
                next[j] += yi * cf.get(i, j).to_f64();
            }
        }
        let norm: f64 = next.iter().sum();
        if norm <= 0.0 {
            return 0.0;
        }
        for v in &mut next {
            *v /= norm;
        }
        if (norm - lambda).abs() <= 1e-15 * norm.max(1.0) {
            return norm;
        }
        lambda = norm;
        y = next;
    }
    lambda
}

/// Left eigenvector of C at eigenvalue lambda, exactly: the right nullspace
/// of (C - lambda I)^T must be one-dimensional and strictly signed.
fn positive_left_nullvector(c: &NonNegMatrix, lambda: &Scalar) -> Option<SignedVec> {
    let r = c.rows();
    let mode = Mode::Exact;
    let mut rows: Vec<SignedVec> = Vec::with_capacity(r);
    for j in 0..r {
        let mut row: SignedVec = Vec::with_capacity(r);
        for i in 0..r {
            let mut v = c.get(i, j).clone();
            if i == j {
                v = v - lambda;
            }
            row.push(v);
        }
        rows.push(row);
    }
    let ns = crate::linalg::right_nullspace(&rows, r, mode);
    if ns.len() != 1 {
        return None;
    }
    let v = &ns[0];
    if v.iter().all(|e| e.is_positive()) {
        return Some(v.clone());
    }
    if v.iter().all(|e| e.is_negative()) {
        return Some(v.iter().map(|e| -e).collect());
    }
    None
}

/// Certified float iteration v -> normalize(v M_w) from the uniform
/// direction on F, stopping when consecutive iterates are within
/// FLOAT_FIXPOINT_TOL in Hilbert distance.
fn float_fixed_direction(f: &MatrixFamily, fset: IndexSet, w: &[usize]) -> Result<FixedDirection> {
    let ff = f.to_float();
    let fmode = ff.mode();
    let m = f.dim();
    let share = Scalar::Float(1.0 / fset.len() as f64);
    let mut entries = vec![fmode.zero(); m];
    for i in fset.iter() {
        entries[i] = share.clone();
    }
    let mut v = NonNegVector::new(entries)?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0usize;
    while iterations < FLOAT_FIXPOINT_MAX_ITERS {
        let next = ff.apply_word(&v, w).normalized()?;
        residual = hilbert_distance_or_inf(&v, &next, fmode);
        v = next;
        iterations += 1;
        if residual < FLOAT_FIXPOINT_TOL {
            break;
        }
    }
    Ok(FixedDirection { x: v, residual, iterations, exact: false })
}

// ---------------------------------------------------------------------------
// Betting subspace and Live
// ---------------------------------------------------------------------------

/// Basis of V by breadth-first span closure from each 1_a = (I - M_a) 1.
pub fn betting_subspace(f: &MatrixFamily) -> BettingSubspace {
    let m = f.dim();
    let mode = f.mode();
    let ones: SignedVec = vec![mode.one(); m];
    let mut total = SpanBasis::new(m, mode);
    let mut per_letter_dims = Vec::with_capacity(f.size());
    let mut depths = Vec::with_capacity(f.size());
    for a in 0..f.size() {
        let ma_one = f.matrix(a).mat_vec_signed(&ones);
        let seed: SignedVec = (0..m).map(|i| &ones[i] - &ma_one[i]).collect();
        let mut sa = SpanBasis::new(m, mode);
        let mut frontier = Vec::new();
        if sa.insert(&seed) {
            frontier.push(seed);
        }
        let mut depth = 0usize;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for v in &frontier {
                for bsym in 0..f.size() {
                    let mv = f.matrix(bsym).mat_vec_signed(v);
                    if sa.insert(&mv) {
                        next.push(mv);
                    }
                }
            }
            if !next.is_empty() {
                depth += 1;
            }
            frontier = next;
        }
        per_letter_dims.push(sa.dim());
        depths.push(depth);
        for row in sa.rows() {
            total.insert(row);
        }
    }
    BettingSubspace { basis: total.rows().to_vec(), per_letter_dims, depths }
}

/// Live(v) = ||v|| - max{||s|| : 0 <= s <= v, s orthogonal to V}: the part
/// of the capital that is still exposed to betting.
pub fn live(f: &MatrixFamily, v_space: &BettingSubspace, v: &NonNegVector) -> Result<Scalar> {
    if v.is_zero() {
        return Ok(f.mode().zero());
    }
    let (frozen, _) = lp_max_capped(v, &v_space.basis, f.mode())?;
    Ok(v.norm1() - frozen)
}

/// Is x orthogonal to every basis vector of V, under the relevant tolerance?
fn orthogonal_to(x: &NonNegVector, basis: &[SignedVec], exact: bool, eps: f64) -> bool {
    for b in basis {
        let d = dot(x.entries(), b);
        if exact {
            if !d.is_zero() {
                return false;
            }
        } else {
            let scale = norm1_signed(b).to_f64().max(1.0);
            if d.to_f64().abs() > eps * scale {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Star-case classification
// ---------------------------------------------------------------------------

const WITNESS_SEARCH_NODES: usize = 200_000;

/// Classify a superfair family whose index graph is strongly connected.
pub fn classify_star(f: &MatrixFamily) -> Result<Classification> {
    f.require_superfair()?;
    let aut = build_support_automaton(f);
    if !aut.star {
        return Err(Error::StarViolated);
    }
    let bs = bscc_structure(&aut)?;
    let exact_mode = f.mode().is_exact();
    let Some(_) = bs.nonnull_bscc.as_ref() else {
        // Every trajectory is eventually absorbed by the dead state.
        return Ok(Classification {
            case: Case::Case0,
            f_set: None,
            pseudo_mixing: None,
            x: None,
            certificates: Certificates { exact: exact_mode, residual: 0.0, iterations: 0 },
        });
    };
    let fset = bs.minimal_member.expect("non-null component has a minimal member");
    let w = pseudo_mixing_word(f, &aut, &bs, fset)?;
    let fd = fixed_direction(f, fset, &w)?;
    let v_space = betting_subspace(f);
    let exact = exact_mode && fd.exact;
    let eps = match f.mode() {
        Mode::Exact => DEFAULT_EPS,
        Mode::Float { eps } => eps,
    };
    let certificates =
        Certificates { exact, residual: fd.residual, iterations: fd.iterations };

    if orthogonal_to(&fd.x, &v_space.basis, exact, eps) {
        let live_x = live(f, &v_space, &fd.x)?;
        return Ok(Classification {
            case: Case::Case2 { live_x },
            f_set: Some(fset),
            pseudo_mixing: Some(w),
            x: Some(fd),
            certificates,
        });
    }

    let cap = 4 * f.dim() + w.len();
    let (witness, delta_at_witness) = witness_search(f, &fd.x, cap);
    Ok(Classification {
        case: Case::Case1 { witness, delta_at_witness },
        f_set: Some(fset),
        pseudo_mixing: Some(w),
        x: Some(fd),
        certificates,
    })
}

/// Breadth-first search for the shortest word z with positive risk at x.z,
/// deduplicating states by normalized direction.
fn witness_search(
    f: &MatrixFamily,
    x: &NonNegVector,
    max_len: usize,
) -> (Option<Vec<usize>>, Option<f64>) {
    let key_of = |v: &NonNegVector| -> String {
        let keys: Vec<String> = v.entries().iter().map(Scalar::key).collect();
        keys.join(";")
    };
    let start = match x.normalized() {
        Ok(v) => v,
        Err(_) => return (None, None),
    };
    let mut seen: HashSet<String> = HashSet::from([key_of(&start)]);
    let mut queue: VecDeque<(NonNegVector, Vec<usize>)> = VecDeque::from([(start, Vec::new())]);
    let mut expanded = 0usize;
    while let Some((dir, word)) = queue.pop_front() {
        match f.delta_risk(&dir) {
            Ok(r) if !r.is_zero => return (Some(word), Some(r.value)),
            Ok(_) => {}
            Err(_) => continue, // dead direction: nothing to witness
        }
        if word.len() >= max_len || expanded >= WITNESS_SEARCH_NODES {
            continue;
        }
        expanded += 1;
        for a in 0..f.size() {
            let child = f.matrix(a).vec_mul(&dir);
            let Ok(child) = child.normalized() else { continue };
            if seen.insert(key_of(&child)) {
                let mut next_word = word.clone();
                next_word.push(a);
                queue.push_back((child, next_word));
            }
        }
    }
    (None, None)
}

// ---------------------------------------------------------------------------
// Contraction probe
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct ProbeParams {
    pub word_len: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ProbeParams {
    fn default() -> ProbeParams {
        ProbeParams { word_len: 100, trials: 1000, seed: 0x5EED }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeReport {
    /// -(1/N) ln(median worst-case factor); infinite when the median
    /// trajectory dies outright.
    pub alpha_hat: f64,
    /// Fraction of sampled words whose worst-case Live factor is <= 1.
    pub fraction_contracting: f64,
    pub word_len: usize,
    pub trials: usize,
    pub seed: u64,
}

impl ProbeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "alpha_hat": if self.alpha_hat.is_finite() {
                json!(self.alpha_hat)
            } else {
                json!("infinite")
            },
            "fraction_contracting": self.fraction_contracting,
            "word_len": self.word_len,
            "trials": self.trials,
            "seed": self.seed,
        })
    }
}

/// Sample random words z of the given length and measure how much they
/// shrink Live, in the worst case over basis start vectors. Float-valued
/// throughout (this is an empirical estimator, not a certificate); results
/// are bit-reproducible for a fixed seed.
pub fn live_contraction_probe(f: &MatrixFamily, params: &ProbeParams) -> Result<ProbeReport> {
    if params.trials == 0 || params.word_len == 0 {
        return Err(Error::Malformed("probe needs at least one trial and one letter".into()));
    }
    let ff = f.to_float();
    let fmode = ff.mode();
    let v_space = betting_subspace(f);
    let basis_f: Vec<SignedVec> = v_space
        .basis
        .iter()
        .map(|row| row.iter().map(Scalar::to_float_scalar).collect())
        .collect();
    let m = f.dim();
    let mut live_e = vec![0.0f64; m];
    for (i, le) in live_e.iter_mut().enumerate() {
        let e = NonNegVector::basis(m, i, fmode);
        let (frozen, _) = lp_max_capped(&e, &basis_f, fmode)?;
        *le = (1.0 - frozen.to_f64()).max(0.0);
    }
    if live_e.iter().all(|&l| l <= 1e-12) {
        return Err(Error::DegenerateLiveCone);
    }

    let factors: Vec<f64> = (0..params.trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = ChaCha12Rng::from_seed(derive_seed(params.seed, t as u64));
            let word: Vec<usize> =
                (0..params.word_len).map(|_| uniform_usize(&mut rng, f.size())).collect();
            let mut worst = 0.0f64;
            for i in 0..m {
                if live_e[i] <= 1e-12 {
                    continue;
                }
                let mut u = NonNegVector::basis(m, i, fmode);
                let mut log_norm = 0.0f64;
                let mut dead = false;
                for &a in &word {
                    u = ff.matrix(a).vec_mul(&u);
                    let n = u.norm1().to_f64();
                    if n <= 0.0 {
                        dead = true;
                        break;
                    }
                    log_norm += n.ln();
                    u = u.scale(&Scalar::Float(1.0 / n));
                }
                let factor = if dead {
                    0.0
                } else {
                    let (frozen, _) = lp_max_capped(&u, &basis_f, fmode)?;
                    let live_u = (1.0 - frozen.to_f64()).max(0.0);
                    live_u * log_norm.exp() / live_e[i]
                };
                worst = worst.max(factor);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;

    let contracting = factors.iter().filter(|&&x| x <= 1.0 + 1e-12).count();
    let mut sorted = factors;
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("factors are never NaN"));
    let median = sorted[sorted.len() / 2];
    let alpha_hat = if median > 0.0 {
        -median.ln() / params.word_len as f64
    } else {
        f64::INFINITY
    };
    Ok(ProbeReport {
        alpha_hat,
        fraction_contracting: contracting as f64 / params.trials as f64,
        word_len: params.word_len,
        trials: params.trials,
        seed: params.seed,
    })
}

// ---------------------------------------------------------------------------
// General classification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ComponentReport {
    /// Topological position in the condensation.
    pub index: usize,
    /// Global indices of this component.
    pub states: IndexSet,
    pub fairness: FairnessVerdict,
    pub classification: Classification,
}

#[derive(Clone, Debug)]
pub struct GeneralReport {
    /// Components in topological order.
    pub condensation: Vec<IndexSet>,
    pub components: Vec<ComponentReport>,
    /// Edges between distinct components (positions in `condensation`).
    pub leakage_edges: Vec<(usize, usize)>,
    /// True when at least two components land in different cases.
    pub mixed: bool,
    pub probe: Option<ProbeReport>,
    /// Set when the probe was skipped because the family never bets.
    pub probe_note: Option<String>,
}

impl GeneralReport {
    pub fn to_json(&self, f: &MatrixFamily) -> Value {
        let mut out = json!({
            "case": "general",
            "condensation": self.condensation.iter().map(|c| c.to_labels()).collect::<Vec<_>>(),
            "mixed": self.mixed,
            "leakage_edges": self.leakage_edges,
            "components": self.components.iter().map(|c| {
                let sub = f.restrict(c.states).expect("component restriction");
                json!({
                    "index": c.index,
                    "states": c.states.to_labels(),
                    "fairness": c.fairness.to_json(),
                    "classification": c.classification.to_json(&sub),
                })
            }).collect::<Vec<_>>(),
        });
        if let Some(p) = &self.probe {
            out["probe"] = p.to_json();
        }
        if let Some(note) = &self.probe_note {
            out["probe_note"] = json!(note);
        }
        out
    }
}

/// Classify without the strong-connectivity hypothesis: per-component
/// verdicts over the condensation of the index graph, plus the whole-family
/// contraction probe.
pub fn classify_general(f: &MatrixFamily, probe: Option<&ProbeParams>) -> Result<GeneralReport> {
    f.require_superfair()?;
    let g = reachability_graph(f);
    let mut components = Vec::new();
    let mut labels: BTreeSet<&'static str> = BTreeSet::new();
    for (index, &scc) in g.sccs.iter().enumerate() {
        let sub = f.restrict(scc)?;
        let fairness = sub.validate();
        let classification = classify_star(&sub)?;
        if fairness.kind == FairnessKind::SuperfairStrict
            && matches!(classification.case, Case::Case2 { .. })
        {
            return Err(Error::InternalContradiction(format!(
                "strictly superfair component {} classified as stabilizing",
                scc
            )));
        }
        labels.insert(classification.case.label());
        components.push(ComponentReport { index, states: scc, fairness, classification });
    }
    let mixed = labels.len() >= 2;
    let (probe_report, probe_note) = match probe {
        None => (None, None),
        Some(p) => match live_contraction_probe(f, p) {
            Ok(r) => (Some(r), None),
            Err(Error::DegenerateLiveCone) => (
                None,
                Some("live cone is degenerate: the family never bets from any start".to_string()),
            ),
            Err(e) => return Err(e),
        },
    };
    Ok(GeneralReport {
        condensation: g.sccs.clone(),
        components,
        leakage_edges: g.condensation_edges.clone(),
        mixed,
        probe: probe_report,
        probe_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scalar::{int, rat};

    #[test]
    fn subspace_shapes() {
        // Single-state family: betting moves span the whole 1-dim space.
        let v0 = betting_subspace(&presets::case0_family());
        assert_eq!(v0.dim(), 1);
        assert_eq!(v0.per_letter_dims, vec![1, 1]);

        // A family that never bets: M_0 = M_1 = I on one state.
        let never = MatrixFamily::new(
            vec!["0".into(), "1".into()],
            vec![
                NonNegMatrix::identity(1, Mode::Exact),
                NonNegMatrix::identity(1, Mode::Exact),
            ],
            Mode::Exact,
        )
        .unwrap();
        let vn = betting_subspace(&never);
        assert_eq!(vn.dim(), 0);

        // The four-state stabilizing family: x is orthogonal to V.
        let f2 = presets::case2_family();
        let v2 = betting_subspace(&f2);
        let x = NonNegVector::new(vec![rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]).unwrap();
        for b in &v2.basis {
            assert!(dot(x.entries(), b).is_zero(), "x not orthogonal to {b:?}");
        }

        // Depth bound: stabilization within m - 1 multiplications.
        for (f, name) in [
            (presets::case0_family(), "one-state"),
            (presets::case1_default_family(), "two-state"),
            (presets::case2_family(), "four-state"),
        ] {
            let vs = betting_subspace(&f);
            for (a, &d) in vs.depths.iter().enumerate() {
                assert!(d <= f.dim().saturating_sub(1), "{name} letter {a} depth {d}");
            }
        }
    }

    #[test]
    fn fixed_direction_goldens() {
        let f2 = presets::case2_family();
        let full = IndexSet::full(4);
        let w = f2.parse_word("10").unwrap();
        let fd = fixed_direction(&f2, full, &w).unwrap();
        assert!(fd.exact);
        assert_eq!(fd.residual, 0.0);
        assert_eq!(fd.x.entries(), &[rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]);

        let f1 = presets::case1_default_family();
        let both = IndexSet::full(2);
        let fd1 = fixed_direction(&f1, both, &[0]).unwrap();
        assert!(fd1.exact);
        assert_eq!(fd1.x.entries(), &[rat(3, 10), rat(7, 10)]);

        // Non-pseudo-mixing words are rejected.
        assert!(matches!(
            fixed_direction(&f2, full, &[1]),
            Err(Error::NotPseudoMixing)
        ));
    }

    #[test]
    fn fixed_direction_float_agrees() {
        let f2 = presets::case2_family().to_float();
        let full = IndexSet::full(4);
        let w = vec![1, 0];
        let fd = fixed_direction(&f2, full, &w).unwrap();
        assert!(!fd.exact);
        assert!(fd.residual < 1e-11);
        let expected = [0.2, 0.25, 0.3, 0.25];
        for (got, want) in fd.x.entries().iter().zip(expected) {
            assert!((got.to_f64() - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn classify_trichotomy_on_presets() {
        let c0 = classify_star(&presets::case0_family()).unwrap();
        assert!(matches!(c0.case, Case::Case0));
        assert!(c0.certificates.exact);

        let c1 = classify_star(&presets::case1_default_family()).unwrap();
        match &c1.case {
            Case::Case1 { witness, delta_at_witness } => {
                // The fixed direction itself already has positive risk.
                assert_eq!(witness.as_ref().map(Vec::len), Some(0));
                let expected = -0.5 * 0.84f64.ln();
                assert!((delta_at_witness.unwrap() - expected).abs() < 1e-12);
            }
            other => panic!("expected ruin case, got {other:?}"),
        }
        assert!(c1.certificates.exact);

        let c2 = classify_star(&presets::case2_family()).unwrap();
        match &c2.case {
            Case::Case2 { live_x } => assert!(live_x.is_zero()),
            other => panic!("expected stabilizing case, got {other:?}"),
        }
        let fd = c2.x.as_ref().unwrap();
        assert_eq!(fd.x.entries(), &[rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]);
        assert_eq!(c2.f_set, Some(IndexSet::full(4)));
    }

    #[test]
    fn boundary_parameters_never_bet() {
        // p1 = p2 = 1/2: the two-state automaton's bets cancel exactly.
        let f = presets::case1_family(rat(1, 2), rat(1, 2)).unwrap();
        let c = classify_star(&f).unwrap();
        assert!(matches!(c.case, Case::Case2 { .. }));
        let x = &c.x.as_ref().unwrap().x;
        assert_eq!(x.entries(), &[rat(1, 2), rat(1, 2)]);

        // Brute force: risk at x.z is zero for every word up to length 6.
        for len in 0..=6usize {
            for code in 0..(1usize << len) {
                let z: Vec<usize> = (0..len).map(|i| (code >> i) & 1).collect();
                let xz = f.apply_word(x, &z);
                let r = f.delta_risk(&xz).unwrap();
                assert!(r.is_zero, "risk at word {z:?}");
            }
        }
    }

    #[test]
    fn live_goldens() {
        let f1 = presets::case1_default_family();
        let v1 = betting_subspace(&f1);
        for v in [
            NonNegVector::new(vec![rat(1, 3), rat(2, 3)]).unwrap(),
            NonNegVector::basis(2, 0, Mode::Exact),
            NonNegVector::new(vec![int(2), int(5)]).unwrap(),
        ] {
            let l = live(&f1, &v1, &v).unwrap();
            assert_eq!(l, v.norm1(), "live should equal the whole norm");
        }

        let f2 = presets::case2_family();
        let v2 = betting_subspace(&f2);
        let x = NonNegVector::new(vec![rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]).unwrap();
        assert!(live(&f2, &v2, &x).unwrap().is_zero());
        assert!(live(&f2, &v2, &NonNegVector::zero(4, Mode::Exact)).unwrap().is_zero());
        // Basis vectors are not aligned with x, so some capital stays live.
        let e0 = NonNegVector::basis(4, 0, Mode::Exact);
        assert!(live(&f2, &v2, &e0).unwrap().is_positive());
    }

    #[test]
    fn probe_behaviors() {
        let params = ProbeParams { word_len: 50, trials: 200, seed: 11 };
        let r1 = live_contraction_probe(&presets::case1_default_family(), &params).unwrap();
        assert!(r1.alpha_hat > 0.0, "{r1:?}");
        // At 50 letters the per-word log drift (about -0.054 per step) is
        // still comparable to its standard deviation, so a sizable minority
        // of words expand; the fraction climbs toward 1 with word length.
        assert!(r1.fraction_contracting > 0.6, "{r1:?}");
        let longer = live_contraction_probe(
            &presets::case1_default_family(),
            &ProbeParams { word_len: 200, trials: 200, seed: 11 },
        )
        .unwrap();
        assert!(longer.fraction_contracting > r1.fraction_contracting, "{longer:?}");
        assert!(longer.fraction_contracting > 0.9, "{longer:?}");

        let r0 = live_contraction_probe(
            &presets::case0_family(),
            &ProbeParams { word_len: 10, trials: 400, seed: 3 },
        )
        .unwrap();
        assert!(r0.fraction_contracting > 0.99, "{r0:?}");

        // Identical seeds reproduce bit-identical results.
        let again = live_contraction_probe(&presets::case1_default_family(), &params).unwrap();
        assert_eq!(r1.alpha_hat, again.alpha_hat);
        assert_eq!(r1.fraction_contracting, again.fraction_contracting);

        // A family that never bets has no live mass anywhere.
        let never = MatrixFamily::new(
            vec!["0".into(), "1".into()],
            vec![
                NonNegMatrix::identity(2, Mode::Exact),
                NonNegMatrix::identity(2, Mode::Exact),
            ],
            Mode::Exact,
        )
        .unwrap();
        assert!(matches!(
            live_contraction_probe(&never, &params),
            Err(Error::DegenerateLiveCone)
        ));
    }

    #[test]
    fn general_report_on_block_diagonal() {
        let f = presets::case1_default_family()
            .block_diagonal(&presets::case2_family())
            .unwrap();
        let report = classify_general(&f, None).unwrap();
        assert_eq!(report.condensation.len(), 2);
        assert!(report.mixed);
        assert!(report.leakage_edges.is_empty());
        // The two blocks are unconnected so their topological order is not
        // pinned; match components by their state sets.
        for c in &report.components {
            let expected = if c.states == IndexSet::from_indices(&[0, 1]) { "1" } else { "2" };
            assert_eq!(c.classification.case.label(), expected, "component {}", c.states);
        }
    }

    #[test]
    fn general_report_on_leakage() {
        let f = presets::leakage_family();
        let report = classify_general(
            &f,
            Some(&ProbeParams { word_len: 60, trials: 150, seed: 5 }),
        )
        .unwrap();
        assert_eq!(report.condensation.len(), 2);
        assert_eq!(report.leakage_edges, vec![(0, 1)]);
        assert!(report.mixed);

        // The leaking component is strictly superfair and must be ruin, not
        // stabilization; its fixed direction is (5/19, 14/19).
        let first = &report.components[0];
        assert_eq!(first.fairness.kind, FairnessKind::SuperfairStrict);
        assert_eq!(first.classification.case.label(), "1");
        let x = &first.classification.x.as_ref().unwrap().x;
        assert_eq!(x.entries(), &[rat(5, 19), rat(14, 19)]);

        let second = &report.components[1];
        assert_eq!(second.classification.case.label(), "2");

        let probe = report.probe.unwrap();
        assert!(probe.fraction_contracting > 0.9, "{probe:?}");
    }

    #[test]
    fn single_component_general_matches_star() {
        let f = presets::case2_family();
        let report = classify_general(&f, None).unwrap();
        assert_eq!(report.condensation.len(), 1);
        assert!(!report.mixed);
        assert_eq!(report.components[0].classification.case.label(), "2");
        assert_eq!(
            report.components[0].classification.x.as_ref().unwrap().x.entries(),
            classify_star(&f).unwrap().x.as_ref().unwrap().x.entries()
        );
    }
}
