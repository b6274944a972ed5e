//! The action of words on index subsets and its deterministic automaton.
//!
//! For a set E of indices, `E . w = supp(1_E M_w)`: which coordinates can be
//! reached from E through positive entries of the word product. Tracking E
//! instead of the vector itself turns support evolution into a finite
//! automaton whose bottom strongly connected components (BSCCs) control the
//! long-run behavior: trajectories either get absorbed by the null BSCC
//! (death) or keep revisiting a unique non-null BSCC, where pseudo-mixing
//! words force directions to contract.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde_json::{json, Value};

use crate::family::MatrixFamily;
use crate::linalg::{right_nullspace, IndexSet, SignedVec};
use crate::scalar::{Mode, Scalar};
use crate::{Error, Result};

/// One-letter support action.
fn act_letter(f: &MatrixFamily, e: IndexSet, a: usize) -> IndexSet {
    let mut out = IndexSet::EMPTY;
    for i in e.iter() {
        out = out.union(f.matrix(a).row_support(i, f.mode()));
    }
    out
}

/// `E . w` for an arbitrary subset and word.
pub fn act_set(f: &MatrixFamily, e: IndexSet, w: &[usize]) -> Result<IndexSet> {
    if !e.is_subset_of(IndexSet::full(f.dim())) {
        return Err(Error::Malformed("index set exceeds the family dimension".into()));
    }
    let mut cur = e;
    for &a in w {
        if a >= f.size() {
            return Err(Error::UnknownSymbol(format!("symbol index {a}")));
        }
        cur = act_letter(f, cur, a);
    }
    Ok(cur)
}

/// Deterministic automaton of the support action, restricted to the states
/// reachable from singletons.
#[derive(Clone, Debug)]
pub struct SupportAutomaton {
    alphabet_size: usize,
    pub states: Vec<IndexSet>,
    /// transitions[state][symbol] -> state.
    transitions: Vec<Vec<usize>>,
    pub contains_null: bool,
    /// Whether every index can reach every other through positive entries
    /// (strong connectivity of the index reachability graph).
    pub star: bool,
    index: HashMap<IndexSet, usize>,
}

impl SupportAutomaton {
    /// Assemble from explicit parts (used by tests and tools).
    pub fn from_parts(
        states: Vec<IndexSet>,
        transitions: Vec<Vec<usize>>,
        star: bool,
    ) -> Result<SupportAutomaton> {
        if states.is_empty() || transitions.len() != states.len() {
            return Err(Error::Malformed("one transition row per state required".into()));
        }
        let k = transitions[0].len();
        if k == 0 || transitions.iter().any(|r| r.len() != k) {
            return Err(Error::Malformed("ragged transition table".into()));
        }
        if transitions.iter().flatten().any(|&t| t >= states.len()) {
            return Err(Error::Malformed("transition target out of range".into()));
        }
        let mut index = HashMap::new();
        for (i, &s) in states.iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(Error::Malformed("duplicate automaton state".into()));
            }
        }
        let contains_null = index.contains_key(&IndexSet::EMPTY);
        Ok(SupportAutomaton { alphabet_size: k, states, transitions, contains_null, star, index })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_index(&self, e: IndexSet) -> Option<usize> {
        self.index.get(&e).copied()
    }

    pub fn step(&self, state: usize, a: usize) -> usize {
        self.transitions[state][a]
    }

    pub fn run_word(&self, state: usize, w: &[usize]) -> usize {
        w.iter().fold(state, |s, &a| self.transitions[s][a])
    }

    /// Shortest word from `from` to any state satisfying `pred`, expanding
    /// symbols in declared order (so the result is lexicographically least
    /// among shortest). None if unreachable.
    pub fn shortest_word_to(&self, from: usize, pred: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        if pred(from) {
            return Some(Vec::new());
        }
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            for a in 0..self.alphabet_size {
                let t = self.transitions[s][a];
                if seen[t] {
                    continue;
                }
                seen[t] = true;
                prev[t] = Some((s, a));
                if pred(t) {
                    let mut word = Vec::new();
                    let mut cur = t;
                    while let Some((p, sym)) = prev[cur] {
                        word.push(sym);
                        cur = p;
                    }
                    word.reverse();
                    return Some(word);
                }
                queue.push_back(t);
            }
        }
        None
    }
}

/// BFS closure of the support action from all singletons.
pub fn build_support_automaton(f: &MatrixFamily) -> SupportAutomaton {
    let star = star_check(&reachability_graph(f));
    let mut states: Vec<IndexSet> = Vec::new();
    let mut index: HashMap<IndexSet, usize> = HashMap::new();
    let mut intern = |e: IndexSet, states: &mut Vec<IndexSet>, queue: &mut VecDeque<usize>| {
        *index.entry(e).or_insert_with(|| {
            states.push(e);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    let mut queue = VecDeque::new();
    for i in 0..f.dim() {
        intern(IndexSet::singleton(i), &mut states, &mut queue);
    }
    let mut transitions: Vec<Vec<usize>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let e = states[s];
        let row: Vec<usize> = (0..f.size())
            .map(|a| intern(act_letter(f, e, a), &mut states, &mut queue))
            .collect();
        if transitions.len() <= s {
            transitions.resize(states.len(), Vec::new());
        }
        transitions[s] = row;
    }
    transitions.truncate(states.len());
    let contains_null = index.contains_key(&IndexSet::EMPTY);
    SupportAutomaton {
        alphabet_size: f.size(),
        states,
        transitions,
        contains_null,
        star,
        index,
    }
}

/// SCC decomposition (iterative Tarjan). Returns the components in
/// *topological* order (edges point from earlier to later components) plus
/// the component id of each node under that order.
fn scc_decomposition(n: usize, adj: &dyn Fn(usize) -> Vec<usize>) -> (Vec<Vec<usize>>, Vec<usize>) {
    const UNSET: usize = usize::MAX;
    let mut indexes = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut counter = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();

    // Explicit DFS frames: (node, resolved neighbor list, cursor).
    let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    for root in 0..n {
        if indexes[root] != UNSET {
            continue;
        }
        indexes[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, adj(root), 0));

        while !call.is_empty() {
            let frame = call.last_mut().expect("non-empty call stack");
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if indexes[w] == UNSET {
                    indexes[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, adj(w), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(indexes[w]);
                }
            } else {
                if low[v] == indexes[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
                call.pop();
                if let Some(parent) = call.last_mut() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                }
            }
        }
    }

    // Tarjan emits sinks first; flip to sources-first.
    components.reverse();
    let mut comp_of = vec![0usize; n];
    for (c, comp) in components.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    (components, comp_of)
}

#[derive(Clone, Debug)]
pub struct BsccStructure {
    /// All SCCs, topologically ordered (sources first), as state indices.
    pub sccs: Vec<Vec<usize>>,
    /// The SCCs with no outgoing edges.
    pub bsccs: Vec<Vec<usize>>,
    pub null_bscc_present: bool,
    /// The unique BSCC not equal to {empty set}, when exactly one exists.
    pub nonnull_bscc: Option<Vec<usize>>,
    /// An inclusion-minimal member across all non-null BSCCs (smallest
    /// bitmask among the minimal ones, for determinism).
    pub minimal_member: Option<IndexSet>,
}

impl BsccStructure {
    pub fn to_json(&self, aut: &SupportAutomaton) -> Value {
        let set_json = |e: IndexSet| json!(e.to_labels());
        json!({
            "states": aut.states.iter().map(|&e| set_json(e)).collect::<Vec<_>>(),
            "sccs": self.sccs.iter()
                .map(|c| c.iter().map(|&s| set_json(aut.states[s])).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "bsccs": self.bsccs.iter()
                .map(|c| c.iter().map(|&s| set_json(aut.states[s])).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "null_bscc_present": self.null_bscc_present,
            "nonnull_bscc": self.nonnull_bscc.as_ref()
                .map(|c| c.iter().map(|&s| set_json(aut.states[s])).collect::<Vec<_>>()),
            "minimal_member": self.minimal_member.map(set_json),
        })
    }
}

/// SCC/BSCC analysis of the automaton.
pub fn bscc_structure(aut: &SupportAutomaton) -> Result<BsccStructure> {
    let n = aut.len();
    let adj = |s: usize| -> Vec<usize> {
        let mut out: Vec<usize> = aut.transitions[s].clone();
        out.sort_unstable();
        out.dedup();
        out
    };
    let (sccs, comp_of) = scc_decomposition(n, &adj);
    let mut bsccs = Vec::new();
    for (c, comp) in sccs.iter().enumerate() {
        let leaves = comp
            .iter()
            .flat_map(|&s| aut.transitions[s].iter().copied())
            .any(|t| comp_of[t] != c);
        if !leaves {
            bsccs.push(comp.clone());
        }
    }
    let null_state = aut.state_index(IndexSet::EMPTY);
    let null_bscc_present =
        bsccs.iter().any(|c| c.len() == 1 && Some(c[0]) == null_state);
    let nonnull: Vec<&Vec<usize>> = bsccs
        .iter()
        .filter(|c| !(c.len() == 1 && Some(c[0]) == null_state))
        .collect();
    if aut.star && nonnull.len() > 1 {
        return Err(Error::InternalContradiction(format!(
            "{} distinct non-null bottom components under strong connectivity; \
             support thresholds are likely inconsistent",
            nonnull.len()
        )));
    }
    let nonnull_bscc = if nonnull.len() == 1 { Some(nonnull[0].clone()) } else { None };
    let minimal_member = {
        let members: Vec<IndexSet> =
            nonnull.iter().flat_map(|c| c.iter().map(|&s| aut.states[s])).collect();
        members
            .iter()
            .filter(|&&e| !members.iter().any(|&o| o != e && o.is_subset_of(e)))
            .min_by_key(|e| e.0)
            .copied()
    };
    Ok(BsccStructure { sccs, bsccs, null_bscc_present, nonnull_bscc, minimal_member })
}

/// A word sending every state into some BSCC. Built by scanning states in
/// ascending bitmask order and extending with the shortest rescue word
/// whenever the word so far leaves a state outside all BSCCs.
pub fn synchronizing_word(aut: &SupportAutomaton) -> Vec<usize> {
    let n = aut.len();
    let adj = |s: usize| -> Vec<usize> {
        let mut out: Vec<usize> = aut.transitions[s].clone();
        out.sort_unstable();
        out.dedup();
        out
    };
    let (sccs, comp_of) = scc_decomposition(n, &adj);
    let mut in_bscc = vec![false; n];
    for (c, comp) in sccs.iter().enumerate() {
        let bottom = !comp
            .iter()
            .flat_map(|&s| aut.transitions[s].iter().copied())
            .any(|t| comp_of[t] != c);
        if bottom {
            for &s in comp {
                in_bscc[s] = true;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| aut.states[s].0);
    let mut word = Vec::new();
    for s in order {
        let cur = aut.run_word(s, &word);
        if in_bscc[cur] {
            continue;
        }
        let z = aut
            .shortest_word_to(cur, |t| in_bscc[t])
            .expect("every state reaches a bottom component");
        word.extend(z);
    }
    word
}

/// True iff w stabilizes E and every singleton of E maps to E or dies.
pub fn is_pseudo_mixing(f: &MatrixFamily, w: &[usize], e: IndexSet) -> Result<bool> {
    if act_set(f, e, w)? != e {
        return Ok(false);
    }
    for i in e.iter() {
        let img = act_set(f, IndexSet::singleton(i), w)?;
        if img != e && !img.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Budget for the short-certificate search before falling back to the
/// constructive (possibly long) word.
const SHORT_SEARCH_NODES: usize = 100_000;

/// A word pseudo-mixing E. Tries a breadth-first search for a short
/// certificate (up to length 2 * dim) and falls back to the constructive
/// u y v word through the minimal member.
pub fn pseudo_mixing_word(
    f: &MatrixFamily,
    aut: &SupportAutomaton,
    bs: &BsccStructure,
    e: IndexSet,
) -> Result<Vec<usize>> {
    if !aut.star {
        return Err(Error::StarViolated);
    }
    let bscc = bs.nonnull_bscc.as_ref().ok_or(Error::NotInBscc)?;
    let e_idx = aut.state_index(e).ok_or(Error::NotInBscc)?;
    if !bscc.contains(&e_idx) {
        return Err(Error::NotInBscc);
    }

    if let Some(w) = short_pseudo_mixing_search(f, e, 2 * f.dim())? {
        return Ok(w);
    }

    // Constructive fallback: y = sync word extended to fix F pseudo-mixes F;
    // u, v conjugate E through F inside the strongly connected BSCC.
    let fset = bs.minimal_member.ok_or(Error::NotInBscc)?;
    let f_idx = aut.state_index(fset).expect("minimal member is a state");
    let sync = synchronizing_word(aut);
    let after = aut.run_word(f_idx, &sync);
    let back = aut
        .shortest_word_to(after, |t| t == f_idx)
        .ok_or(Error::NotPseudoMixing)?;
    let mut y = sync;
    y.extend(back);
    if !is_pseudo_mixing(f, &y, fset)? {
        return Err(Error::InternalContradiction(
            "constructed stabilizer fails the pseudo-mixing check".into(),
        ));
    }
    let u = aut.shortest_word_to(e_idx, |t| t == f_idx).ok_or(Error::NotPseudoMixing)?;
    let v = aut.shortest_word_to(f_idx, |t| t == e_idx).ok_or(Error::NotPseudoMixing)?;
    let mut w = u;
    w.extend(y);
    w.extend(v);
    if !is_pseudo_mixing(f, &w, e)? {
        return Err(Error::InternalContradiction(
            "conjugated word fails the pseudo-mixing check".into(),
        ));
    }
    Ok(w)
}

/// Deduplicated BFS over the singleton-image signature; returns the
/// lexicographically least shortest certificate within the length budget.
fn short_pseudo_mixing_search(
    f: &MatrixFamily,
    e: IndexSet,
    max_len: usize,
) -> Result<Option<Vec<usize>>> {
    let members: Vec<usize> = e.iter().collect();
    let start: Vec<IndexSet> = members.iter().map(|&i| IndexSet::singleton(i)).collect();
    let accept = |sig: &[IndexSet]| {
        sig.iter().all(|&s| s == e || s.is_empty()) && sig.iter().any(|&s| s == e)
    };
    if accept(&start) {
        return Ok(Some(Vec::new()));
    }
    let mut seen: HashSet<Vec<IndexSet>> = HashSet::from([start.clone()]);
    let mut queue: VecDeque<(Vec<IndexSet>, Vec<usize>)> = VecDeque::from([(start, Vec::new())]);
    let mut expanded = 0usize;
    while let Some((sig, word)) = queue.pop_front() {
        if word.len() >= max_len || expanded >= SHORT_SEARCH_NODES {
            continue;
        }
        expanded += 1;
        for a in 0..f.size() {
            let next: Vec<IndexSet> = sig.iter().map(|&s| act_letter(f, s, a)).collect();
            let mut next_word = word.clone();
            next_word.push(a);
            if accept(&next) {
                return Ok(Some(next_word));
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, next_word));
            }
        }
    }
    Ok(None)
}

/// Stationary distribution of the uniform-symbol Markov chain on a BSCC:
/// P(E, E') = #{a : E . a = E'} / |alphabet|. Solved exactly regardless of
/// the family's mode, since the transition counts are integers.
pub fn stationary_distribution(
    aut: &SupportAutomaton,
    bscc: &[usize],
) -> Result<BTreeMap<IndexSet, Scalar>> {
    let n = bscc.len();
    if n == 0 {
        return Err(Error::Malformed("empty component".into()));
    }
    let mut local = HashMap::new();
    for (i, &s) in bscc.iter().enumerate() {
        if s >= aut.len() || local.insert(s, i).is_some() {
            return Err(Error::Malformed("component states must be distinct automaton states".into()));
        }
    }
    let k = aut.alphabet_size as i64;
    let mut counts = vec![vec![0i64; n]; n];
    for (i, &s) in bscc.iter().enumerate() {
        for a in 0..aut.alphabet_size {
            let t = aut.transitions[s][a];
            match local.get(&t) {
                Some(&j) => counts[i][j] += 1,
                None => {
                    return Err(Error::Malformed(
                        "component is not closed under transitions".into(),
                    ))
                }
            }
        }
    }
    // Right nullspace of (P^T - I), always in exact arithmetic.
    let mode = Mode::Exact;
    let mut rows: Vec<SignedVec> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row: SignedVec = Vec::with_capacity(n);
        for (i, c) in counts.iter().enumerate() {
            let mut v = mode.from_ratio(c[j], k);
            if i == j {
                v = v - mode.one();
            }
            row.push(v);
        }
        rows.push(row);
    }
    let ns = right_nullspace(&rows, n, mode);
    if ns.len() != 1 {
        return Err(Error::NumericalFailure(format!(
            "stationary solve found {} independent solutions, expected 1",
            ns.len()
        )));
    }
    let v = &ns[0];
    let mut sum = mode.zero();
    for x in v {
        sum = sum + x;
    }
    if sum.is_zero() {
        return Err(Error::NumericalFailure("stationary solution sums to zero".into()));
    }
    let mut out = BTreeMap::new();
    for (i, &s) in bscc.iter().enumerate() {
        let p = &v[i] / &sum;
        if !p.is_positive() {
            return Err(Error::NumericalFailure(
                "stationary distribution has a non-positive entry".into(),
            ));
        }
        out.insert(aut.states[s], p);
    }
    Ok(out)
}

/// Directed graph on indices with an edge i -> j whenever some matrix has a
/// positive (i, j) entry.
#[derive(Clone, Debug)]
pub struct ReachabilityGraph {
    pub dim: usize,
    /// adjacency[i] = set of successors of i.
    pub adjacency: Vec<IndexSet>,
    /// SCCs in topological order (all edges point forward).
    pub sccs: Vec<IndexSet>,
    /// scc_of[i] = position of i's component in `sccs`.
    pub scc_of: Vec<usize>,
    /// Deduplicated edges between distinct components.
    pub condensation_edges: Vec<(usize, usize)>,
}

pub fn reachability_graph(f: &MatrixFamily) -> ReachabilityGraph {
    let dim = f.dim();
    let mut adjacency = vec![IndexSet::EMPTY; dim];
    for (i, adj) in adjacency.iter_mut().enumerate() {
        for a in 0..f.size() {
            *adj = adj.union(f.matrix(a).row_support(i, f.mode()));
        }
    }
    let neighbor_list = |i: usize| -> Vec<usize> { adjacency[i].iter().collect() };
    let (comps, scc_of) = scc_decomposition(dim, &neighbor_list);
    let sccs: Vec<IndexSet> = comps.iter().map(|c| IndexSet::from_indices(c)).collect();
    let mut condensation_edges = Vec::new();
    for i in 0..dim {
        for j in adjacency[i].iter() {
            let (ci, cj) = (scc_of[i], scc_of[j]);
            if ci != cj && !condensation_edges.contains(&(ci, cj)) {
                condensation_edges.push((ci, cj));
            }
        }
    }
    condensation_edges.sort_unstable();
    ReachabilityGraph { dim, adjacency, sccs, scc_of, condensation_edges }
}

/// True iff every entry position can be made positive by some word, i.e.
/// the reachability graph is strongly connected.
pub fn star_check(g: &ReachabilityGraph) -> bool {
    g.sccs.len() == 1
}

/// DOT rendering of the support automaton. BSCC members are double-circled,
/// the empty state is shaded.
pub fn support_automaton_dot(
    aut: &SupportAutomaton,
    f: &MatrixFamily,
    bs: &BsccStructure,
) -> String {
    let mut in_bscc = vec![false; aut.len()];
    for comp in &bs.bsccs {
        for &s in comp {
            in_bscc[s] = true;
        }
    }
    let mut out = String::from("digraph support {\n  rankdir=LR;\n");
    for (i, &e) in aut.states.iter().enumerate() {
        let label = if e.is_empty() { "(dead)".to_string() } else { e.to_string() };
        let shape = if in_bscc[i] { "doublecircle" } else { "circle" };
        let fill = if e.is_empty() { ", style=filled, fillcolor=lightgray" } else { "" };
        out.push_str(&format!("  n{i} [label=\"{label}\", shape={shape}{fill}];\n"));
    }
    for (i, row) in aut.transitions.iter().enumerate() {
        for (a, &t) in row.iter().enumerate() {
            out.push_str(&format!("  n{i} -> n{t} [label=\"{}\"];\n", f.alphabet()[a]));
        }
    }
    out.push_str("}\n");
    out
}

/// DOT rendering of the index reachability graph, one cluster per SCC.
pub fn reachability_dot(g: &ReachabilityGraph) -> String {
    let mut out = String::from("digraph reachability {\n");
    for (c, comp) in g.sccs.iter().enumerate() {
        out.push_str(&format!("  subgraph cluster_{c} {{\n    label=\"component {c}\";\n"));
        for i in comp.iter() {
            out.push_str(&format!("    v{i} [label=\"{}\"];\n", i + 1));
        }
        out.push_str("  }\n");
    }
    for i in 0..g.dim {
        for j in g.adjacency[i].iter() {
            out.push_str(&format!("  v{i} -> v{j};\n"));
        }
    }
    out.push_str("}\n");
    out
}
