//! Probabilistic finite betting automata.
//!
//! An automaton bets a fraction gamma(s, a) of its capital on each next
//! symbol a and moves stochastically per delta(s, a). The bets are
//! constrained by sum_a gamma(s, a) = |A|, which makes the induced matrix
//! family (M_a = D_a T_a) fair: expected capital against any fixed sequence
//! is exactly the 1-norm of e_initial * M_word.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::family::{scalar_from_json, MatrixFamily};
use crate::linalg::{NonNegMatrix, NonNegVector};
use crate::rng::{derive_seed, uniform_f64};
use crate::scalar::{Mode, Scalar, DEFAULT_EPS};
use crate::sequences::SequenceSource;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct BettingAutomaton {
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: usize,
    /// delta[s][a][s'] = transition probability.
    delta: Vec<Vec<Vec<Scalar>>>,
    /// gamma[s][a] = bet placed on symbol a in state s.
    gamma: Vec<Vec<Scalar>>,
    mode: Mode,
}

#[derive(Clone, Debug)]
pub struct ValidationIssue {
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CapitalEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl CapitalEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "mean": self.mean,
            "std_error": self.std_error,
            "trials": self.trials,
            "seed": self.seed,
        })
    }
}

impl BettingAutomaton {
    /// Shape-checks only; numeric invariants are reported by [`validate`].
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        initial: usize,
        delta: Vec<Vec<Vec<Scalar>>>,
        gamma: Vec<Vec<Scalar>>,
        mode: Mode,
    ) -> Result<BettingAutomaton> {
        let m = states.len();
        let k = alphabet.len();
        if m == 0 || k == 0 {
            return Err(Error::Malformed("automaton needs at least one state and symbol".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || states[..i].contains(s) {
                return Err(Error::Malformed(format!("bad or duplicate state name {s:?}")));
            }
        }
        for (i, s) in alphabet.iter().enumerate() {
            if s.is_empty() || alphabet[..i].contains(s) {
                return Err(Error::Malformed(format!("bad or duplicate symbol {s:?}")));
            }
        }
        if initial >= m {
            return Err(Error::Malformed("initial state out of range".into()));
        }
        if delta.len() != m
            || delta.iter().any(|row| row.len() != k || row.iter().any(|p| p.len() != m))
        {
            return Err(Error::Malformed("delta must be state x symbol x state".into()));
        }
        if gamma.len() != m || gamma.iter().any(|row| row.len() != k) {
            return Err(Error::Malformed("gamma must be state x symbol".into()));
        }
        Ok(BettingAutomaton { states, alphabet, initial, delta, gamma, mode })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn gamma(&self, s: usize, a: usize) -> &Scalar {
        &self.gamma[s][a]
    }

    pub fn delta(&self, s: usize, a: usize) -> &[Scalar] {
        &self.delta[s][a]
    }

    /// Every violated invariant, with its location. Empty means valid.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let k = self.alphabet.len();
        let eps = self.mode.eps();
        let one = self.mode.one();
        let k_scalar = self.mode.from_i64(k as i64);
        let close = |x: &Scalar, target: &Scalar| match self.mode {
            Mode::Exact => x == target,
            Mode::Float { .. } => (x.to_f64() - target.to_f64()).abs() <= eps * k as f64,
        };
        for (s, name) in self.states.iter().enumerate() {
            for (a, sym) in self.alphabet.iter().enumerate() {
                let mut sum = self.mode.zero();
                for (t, p) in self.delta[s][a].iter().enumerate() {
                    if p.is_negative() || *p > one {
                        issues.push(ValidationIssue {
                            location: format!("delta({name}, {sym}, {})", self.states[t]),
                            message: format!("probability {p} outside [0, 1]"),
                        });
                    }
                    sum = sum + p;
                }
                if !close(&sum, &one) {
                    issues.push(ValidationIssue {
                        location: format!("delta({name}, {sym})"),
                        message: format!("row sums to {sum}, expected 1"),
                    });
                }
                if self.gamma[s][a].is_negative() {
                    issues.push(ValidationIssue {
                        location: format!("gamma({name}, {sym})"),
                        message: format!("bet {} is negative", self.gamma[s][a]),
                    });
                }
            }
            let mut bet_sum = self.mode.zero();
            for a in 0..k {
                bet_sum = bet_sum + &self.gamma[s][a];
            }
            if !close(&bet_sum, &k_scalar) {
                issues.push(ValidationIssue {
                    location: format!("gamma({name})"),
                    message: format!("bets sum to {bet_sum}, expected {k}"),
                });
            }
        }
        issues
    }

    pub fn validated(&self) -> Result<()> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(())
        } else {
            let lines: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
            Err(Error::Malformed(format!("invalid automaton: {}", lines.join("; "))))
        }
    }

    /// The induced fair family M_a(s, s') = gamma(s, a) delta(s, a)(s'),
    /// plus the start vector e_initial.
    pub fn to_matrix_family(&self) -> Result<(MatrixFamily, NonNegVector)> {
        self.validated()?;
        let m = self.states.len();
        let mut matrices = Vec::with_capacity(self.alphabet.len());
        for a in 0..self.alphabet.len() {
            let mut mat = NonNegMatrix::zero(m, m, self.mode);
            for s in 0..m {
                for t in 0..m {
                    mat.set(s, t, &self.gamma[s][a] * &self.delta[s][a][t]);
                }
            }
            matrices.push(mat);
        }
        let family = MatrixFamily::new(self.alphabet.clone(), matrices, self.mode)?;
        let start = NonNegVector::basis(m, self.initial, self.mode);
        Ok((family, start))
    }

    /// Exact expected capital after n symbols: evolve xi(s) = E[C | S = s] P(S = s).
    pub fn expected_capital(&self, src: &mut SequenceSource, n: usize) -> Result<Scalar> {
        self.validated()?;
        let m = self.states.len();
        let mut xi: Vec<Scalar> = (0..m)
            .map(|s| if s == self.initial { self.mode.one() } else { self.mode.zero() })
            .collect();
        for got in 0..n {
            let a = src
                .next_symbol()
                .ok_or(Error::SequenceTooShort { needed: n, got })?;
            if a >= self.alphabet.len() {
                return Err(Error::UnknownSymbol(format!("symbol index {a}")));
            }
            let mut next = vec![self.mode.zero(); m];
            for s in 0..m {
                if xi[s].is_zero() {
                    continue;
                }
                let weight = &xi[s] * &self.gamma[s][a];
                if weight.is_zero() {
                    continue;
                }
                for t in 0..m {
                    let p = &self.delta[s][a][t];
                    if !p.is_zero() {
                        next[t] = &next[t] + &(&weight * p);
                    }
                }
            }
            xi = next;
        }
        let mut total = self.mode.zero();
        for v in &xi {
            total = total + v;
        }
        Ok(total)
    }

    /// Monte Carlo estimate of the expected capital: independent sampled
    /// runs over the same symbol prefix. Float-valued internally;
    /// bit-reproducible for a given seed regardless of thread count.
    pub fn mc_capital(
        &self,
        src: &mut SequenceSource,
        n: usize,
        trials: u64,
        seed: u64,
    ) -> Result<CapitalEstimate> {
        self.validated()?;
        if trials == 0 {
            return Err(Error::Malformed("need at least one trial".into()));
        }
        let prefix = src.take_prefix(n)?;
        if let Some(&bad) = prefix.iter().find(|&&a| a >= self.alphabet.len()) {
            return Err(Error::UnknownSymbol(format!("symbol index {bad}")));
        }
        let m = self.states.len();
        let gamma_f: Vec<Vec<f64>> = self
            .gamma
            .iter()
            .map(|row| row.iter().map(Scalar::to_f64).collect())
            .collect();
        let delta_f: Vec<Vec<Vec<f64>>> = self
            .delta
            .iter()
            .map(|row| row.iter().map(|p| p.iter().map(Scalar::to_f64).collect()).collect())
            .collect();

        let capitals: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha12Rng::from_seed(derive_seed(seed, t));
                let mut state = self.initial;
                let mut capital = 1.0f64;
                for &a in &prefix {
                    capital *= gamma_f[state][a];
                    let u = uniform_f64(&mut rng);
                    let probs = &delta_f[state][a];
                    let mut acc = 0.0;
                    let mut chosen = m - 1;
                    for (next, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            chosen = next;
                            break;
                        }
                    }
                    state = chosen;
                }
                capital
            })
            .collect();

        // Deterministic single-pass moments over the index-ordered results.
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for (i, &c) in capitals.iter().enumerate() {
            let count = (i + 1) as f64;
            let d = c - mean;
            mean += d / count;
            m2 += d * (c - mean);
        }
        let std_error = if trials > 1 {
            (m2 / (trials as f64 - 1.0) / trials as f64).sqrt()
        } else {
            0.0
        };
        Ok(CapitalEstimate { mean, std_error, trials, seed })
    }

    // -- JSON interface -----------------------------------------------------

    pub fn from_json(v: &Value, mode_override: Option<Mode>) -> Result<BettingAutomaton> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Malformed("automaton JSON must be an object".into()))?;
        let mode = match mode_override {
            Some(m) => m,
            None => mode_field(obj)?,
        };
        let names = |key: &str| -> Result<Vec<String>> {
            obj.get(key)
                .and_then(|a| a.as_array())
                .ok_or_else(|| Error::Malformed(format!("missing {key:?} array")))?
                .iter()
                .map(|s| {
                    s.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Malformed(format!("{key:?} entries must be strings")))
                })
                .collect()
        };
        let states = names("states")?;
        let alphabet = names("alphabet")?;
        let initial_name = obj
            .get("initial")
            .and_then(|s| s.as_str())
            .ok_or_else(|| Error::Malformed("missing \"initial\" state name".into()))?;
        let initial = states
            .iter()
            .position(|s| s == initial_name)
            .ok_or_else(|| Error::Malformed(format!("initial state {initial_name:?} not in states")))?;
        let state_index = |name: &str| -> Result<usize> {
            states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::Malformed(format!("unknown state {name:?}")))
        };

        let delta_json = obj
            .get("delta")
            .and_then(|d| d.as_object())
            .ok_or_else(|| Error::Malformed("missing \"delta\" object".into()))?;
        let gamma_json = obj
            .get("gamma")
            .and_then(|d| d.as_object())
            .ok_or_else(|| Error::Malformed("missing \"gamma\" object".into()))?;
        for key in delta_json.keys().chain(gamma_json.keys()) {
            state_index(key)?;
        }

        let mut delta = vec![vec![vec![mode.zero(); states.len()]; alphabet.len()]; states.len()];
        let mut gamma = vec![vec![mode.zero(); alphabet.len()]; states.len()];
        for (s, state) in states.iter().enumerate() {
            let drow = delta_json
                .get(state)
                .and_then(|r| r.as_object())
                .ok_or_else(|| Error::Malformed(format!("missing delta rows for state {state:?}")))?;
            let grow = gamma_json
                .get(state)
                .and_then(|r| r.as_object())
                .ok_or_else(|| Error::Malformed(format!("missing gamma row for state {state:?}")))?;
            for (a, sym) in alphabet.iter().enumerate() {
                let cell = drow.get(sym).ok_or_else(|| {
                    Error::Malformed(format!("missing delta({state:?}, {sym:?})"))
                })?;
                let cell = cell.as_object().ok_or_else(|| {
                    Error::Malformed("delta cells must map target states to probabilities".into())
                })?;
                for (target, p) in cell {
                    delta[s][a][state_index(target)?] = scalar_from_json(p, mode)?;
                }
                let bet = grow.get(sym).ok_or_else(|| {
                    Error::Malformed(format!("missing gamma({state:?}, {sym:?})"))
                })?;
                gamma[s][a] = scalar_from_json(bet, mode)?;
            }
        }
        BettingAutomaton::new(states, alphabet, initial, delta, gamma, mode)
    }

    pub fn from_json_str(s: &str, mode_override: Option<Mode>) -> Result<BettingAutomaton> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| Error::Malformed(format!("invalid JSON: {e}")))?;
        BettingAutomaton::from_json(&v, mode_override)
    }

    pub fn to_json(&self) -> Value {
        let mut delta = Map::new();
        let mut gamma = Map::new();
        for (s, state) in self.states.iter().enumerate() {
            let mut drow = Map::new();
            let mut grow = Map::new();
            for (a, sym) in self.alphabet.iter().enumerate() {
                let mut cell = Map::new();
                for (t, p) in self.delta[s][a].iter().enumerate() {
                    if !p.is_zero() {
                        cell.insert(self.states[t].clone(), p.to_json());
                    }
                }
                drow.insert(sym.clone(), Value::Object(cell));
                grow.insert(sym.clone(), self.gamma[s][a].to_json());
            }
            delta.insert(state.clone(), Value::Object(drow));
            gamma.insert(state.clone(), Value::Object(grow));
        }
        let mut out = json!({
            "states": self.states,
            "initial": self.states[self.initial],
            "alphabet": self.alphabet,
            "mode": if self.mode.is_exact() { "exact" } else { "float" },
            "delta": delta,
            "gamma": gamma,
        });
        if let Mode::Float { eps } = self.mode {
            if eps != DEFAULT_EPS {
                out["eps"] = json!(eps);
            }
        }
        out
    }
}

fn mode_field(obj: &Map<String, Value>) -> Result<Mode> {
    let eps = match obj.get("eps") {
        None => DEFAULT_EPS,
        Some(e) => e
            .as_f64()
            .filter(|x| *x > 0.0 && *x < 1.0)
            .ok_or_else(|| Error::Malformed("\"eps\" must be a number in (0, 1)".into()))?,
    };
    match obj.get("mode").and_then(|m| m.as_str()) {
        None | Some("exact") => Ok(Mode::Exact),
        Some("float") => Ok(Mode::Float { eps }),
        Some(other) => Err(Error::Malformed(format!("unknown mode {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scalar::{int, rat};

    #[test]
    fn four_state_example_validates_and_pays_three_halves() {
        let aut = presets::fig1_automaton();
        assert!(aut.validate().is_empty());

        let b = aut.alphabet().iter().position(|s| s == "b").unwrap();
        let mut src = SequenceSource::periodic(vec![b]).unwrap();
        assert_eq!(aut.expected_capital(&mut src, 2).unwrap(), rat(3, 2));

        let a = aut.alphabet().iter().position(|s| s == "a").unwrap();
        let mut src = SequenceSource::periodic(vec![a]).unwrap();
        assert_eq!(aut.expected_capital(&mut src, 2).unwrap(), rat(3, 2));

        // n = 0 always starts at capital 1.
        let mut src = SequenceSource::periodic(vec![a]).unwrap();
        assert_eq!(aut.expected_capital(&mut src, 0).unwrap(), int(1));
    }

    #[test]
    fn validation_reports_locations() {
        // Bets 3/2 + 1 = 5/2 over a binary alphabet.
        let aut = BettingAutomaton::new(
            vec!["s".into()],
            vec!["0".into(), "1".into()],
            0,
            vec![vec![vec![int(1)], vec![int(1)]]],
            vec![vec![rat(3, 2), int(1)]],
            Mode::Exact,
        )
        .unwrap();
        let issues = aut.validate();
        assert_eq!(issues.len(), 1);
        assert!(issues[0].location.contains("gamma"));
        assert!(aut.to_matrix_family().is_err());

        // A delta row summing to 9/10.
        let aut = BettingAutomaton::new(
            vec!["s".into(), "t".into()],
            vec!["0".into()],
            0,
            vec![
                vec![vec![rat(9, 10), int(0)]],
                vec![vec![int(0), int(1)]],
            ],
            vec![vec![int(1)], vec![int(1)]],
            Mode::Exact,
        )
        .unwrap();
        let issues = aut.validate();
        assert!(issues.iter().any(|i| i.message.contains("9/10")));
    }

    #[test]
    fn conversion_matches_direct_expectation() {
        let aut = presets::fig1_automaton();
        let (family, start) = aut.to_matrix_family().unwrap();
        assert_eq!(family.validate().kind, crate::family::FairnessKind::Fair);
        for word in [vec![0usize], vec![1, 0], vec![0, 1, 1, 0], vec![1, 1, 1]] {
            let via_family = family.apply_word(&start, &word).norm1();
            let mut src = SequenceSource::periodic(word.clone()).unwrap();
            let direct = aut.expected_capital(&mut src, word.len()).unwrap();
            assert_eq!(via_family, direct, "word {word:?}");
        }
    }

    #[test]
    fn mc_agrees_with_exact() {
        let aut = presets::fig1_automaton();
        let b = 1usize; // alphabet is ["a", "b"]
        let mut src = SequenceSource::periodic(vec![b]).unwrap();
        let est = aut.mc_capital(&mut src, 2, 20_000, 42).unwrap();
        assert!((est.mean - 1.5).abs() <= 3.0 * est.std_error.max(1e-9), "{est:?}");

        // Reproducible, and trials=1 is a bare sample.
        let mut s1 = SequenceSource::periodic(vec![b]).unwrap();
        let mut s2 = SequenceSource::periodic(vec![b]).unwrap();
        let a1 = aut.mc_capital(&mut s1, 2, 1, 7).unwrap();
        let a2 = aut.mc_capital(&mut s2, 2, 1, 7).unwrap();
        assert_eq!(a1.mean, a2.mean);
        assert_eq!(a1.std_error, 0.0);
    }

    #[test]
    fn never_betting_automaton_is_constant() {
        let aut = BettingAutomaton::new(
            vec!["s".into()],
            vec!["0".into(), "1".into()],
            0,
            vec![vec![vec![int(1)], vec![int(1)]]],
            vec![vec![int(1), int(1)]],
            Mode::Exact,
        )
        .unwrap();
        let mut src = SequenceSource::champernowne(2).unwrap();
        let est = aut.mc_capital(&mut src, 50, 500, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn json_roundtrip() {
        let aut = presets::fig1_automaton();
        let j = aut.to_json();
        let back = BettingAutomaton::from_json(&j, None).unwrap();
        assert_eq!(back.states(), aut.states());
        assert_eq!(back.initial(), aut.initial());
        assert_eq!(back.gamma(1, 0), aut.gamma(1, 0));
        assert_eq!(back.delta(3, 0), aut.delta(3, 0));
        assert!(back.validate().is_empty());

        let missing = json!({
            "states": ["s"], "initial": "s", "alphabet": ["0"],
            "delta": {"s": {"0": {"s": 1}}},
            "gamma": {}
        });
        assert!(BettingAutomaton::from_json(&missing, None).is_err());
    }
}
