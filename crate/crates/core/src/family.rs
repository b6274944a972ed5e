//! Finite families of non-negative square matrices indexed by an alphabet.
//!
//! A family is *superfair* when, for every non-negative row vector, the
//! average 1-norm over all one-letter products does not exceed the norm of
//! the vector itself; *fair* when it is always equal. By linearity it is
//! enough to check the canonical basis rows, which is what [`MatrixFamily::validate`]
//! does. All the asymptotic machinery (support automaton, classification,
//! trajectories) assumes a superfair family and rejects anything else.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::linalg::{NonNegMatrix, NonNegVector};
use crate::scalar::{Mode, Scalar, DEFAULT_EPS};
use crate::{Error, Result};

/// Hard cap on dimension: index sets are 64-bit masks.
pub const MAX_DIM: usize = 64;

#[derive(Clone, Debug)]
pub struct MatrixFamily {
    alphabet: Vec<String>,
    matrices: Vec<NonNegMatrix>,
    dim: usize,
    mode: Mode,
}

/// Per-word alias: symbols are stored as indices into the alphabet.
pub type Word = Vec<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FairnessKind {
    /// Every basis row has letter-sum exactly the alphabet size.
    Fair,
    /// Superfair, with at least one strict row.
    SuperfairStrict,
    /// Some basis row exceeds the alphabet size.
    NotSuperfair,
}

#[derive(Clone, Debug)]
pub struct FairnessVerdict {
    pub kind: FairnessKind,
    /// Rows witnessing the verdict: strict rows for `SuperfairStrict`,
    /// violating rows for `NotSuperfair` (0-based index, letter-sum).
    pub witnesses: Vec<(usize, Scalar)>,
}

impl FairnessVerdict {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": match self.kind {
                FairnessKind::Fair => "Fair",
                FairnessKind::SuperfairStrict => "SuperfairStrict",
                FairnessKind::NotSuperfair => "NotSuperfair",
            },
            "witnesses": self.witnesses.iter()
                .map(|(i, s)| json!([i + 1, s.to_json()]))
                .collect::<Vec<_>>(),
        })
    }
}

/// One-step norm drop `min(1, ln ||u|| - avg_a ln ||u M_a||)`.
#[derive(Clone, Copy, Debug)]
pub struct RiskValue {
    /// Capped at 1; logs make this a float even in exact mode.
    pub value: f64,
    /// True iff every letter preserves the norm exactly (under the mode's
    /// equality). This flag, not `value`, drives classification decisions.
    pub is_zero: bool,
    /// True iff some letter annihilates the vector (the cap case).
    pub hit_zero_image: bool,
}

/// Sum of one-step drops over the strict prefixes of a word.
#[derive(Clone, Copy, Debug)]
pub struct CumulativeRisk {
    pub value: f64,
    /// Some strict prefix already maps the vector to zero; the sum is the
    /// partial sum up to that point.
    pub dead_prefix: bool,
}

impl MatrixFamily {
    pub fn new(alphabet: Vec<String>, matrices: Vec<NonNegMatrix>, mode: Mode) -> Result<MatrixFamily> {
        if alphabet.is_empty() {
            return Err(Error::Malformed("alphabet must be non-empty".into()));
        }
        if alphabet.len() != matrices.len() {
            return Err(Error::Malformed("one matrix per alphabet symbol required".into()));
        }
        for (i, s) in alphabet.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::Malformed("empty alphabet symbol".into()));
            }
            if alphabet[..i].contains(s) {
                return Err(Error::Malformed(format!("duplicate alphabet symbol {s:?}")));
            }
        }
        let dim = matrices[0].rows();
        if dim == 0 {
            return Err(Error::Malformed("dimension must be at least 1".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::Malformed(format!("dimension {dim} exceeds the supported maximum {MAX_DIM}")));
        }
        for m in &matrices {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::Malformed("all matrices must be square of equal dimension".into()));
            }
        }
        Ok(MatrixFamily { alphabet, matrices, dim, mode })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn matrix(&self, a: usize) -> &NonNegMatrix {
        &self.matrices[a]
    }

    pub fn matrices(&self) -> &[NonNegMatrix] {
        &self.matrices
    }

    pub fn symbol_index(&self, sym: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == sym)
            .ok_or_else(|| Error::UnknownSymbol(sym.to_string()))
    }

    /// Parse a word like "1011" symbol by symbol. Requires every alphabet
    /// symbol to be a single character (true of all the built-in examples).
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        if self.alphabet.iter().any(|sym| sym.chars().count() != 1) {
            return Err(Error::Malformed(
                "word literals need single-character alphabet symbols".into(),
            ));
        }
        s.chars().map(|c| self.symbol_index(&c.to_string())).collect()
    }

    pub fn word_to_string(&self, w: &[usize]) -> String {
        w.iter().map(|&a| self.alphabet[a].as_str()).collect()
    }

    /// Letter-sums of each canonical basis row; the fairness certificate.
    pub fn validate(&self) -> FairnessVerdict {
        let k = self.size() as i64;
        let k_scalar = self.mode.from_i64(k);
        let eps = self.mode.eps();
        let mut strict = Vec::new();
        let mut violations = Vec::new();
        for i in 0..self.dim {
            let mut sum = self.mode.zero();
            for m in &self.matrices {
                for j in 0..self.dim {
                    sum = sum + m.get(i, j);
                }
            }
            match self.mode {
                Mode::Exact => {
                    if sum > k_scalar {
                        violations.push((i, sum));
                    } else if sum < k_scalar {
                        strict.push((i, sum));
                    }
                }
                Mode::Float { .. } => {
                    let d = sum.to_f64() - k as f64;
                    if d > eps * k as f64 {
                        violations.push((i, sum));
                    } else if d < -eps * k as f64 {
                        strict.push((i, sum));
                    }
                }
            }
        }
        if !violations.is_empty() {
            FairnessVerdict { kind: FairnessKind::NotSuperfair, witnesses: violations }
        } else if !strict.is_empty() {
            FairnessVerdict { kind: FairnessKind::SuperfairStrict, witnesses: strict }
        } else {
            FairnessVerdict { kind: FairnessKind::Fair, witnesses: Vec::new() }
        }
    }

    /// Error unless the family is superfair.
    pub fn require_superfair(&self) -> Result<FairnessVerdict> {
        let v = self.validate();
        if v.kind == FairnessKind::NotSuperfair {
            let (row, sum) = &v.witnesses[0];
            return Err(Error::NotSuperfair { row: row + 1, sum: sum.to_string() });
        }
        Ok(v)
    }

    /// Product over the word, read left to right: `M_w = M_{w1} ... M_{wn}`.
    /// The empty word gives the identity.
    pub fn word_matrix(&self, w: &[usize]) -> NonNegMatrix {
        let mut acc = NonNegMatrix::identity(self.dim, self.mode);
        for &a in w {
            acc = acc.mul(&self.matrices[a]);
        }
        acc
    }

    /// `v * M_w` without materializing the word matrix.
    pub fn apply_word(&self, v: &NonNegVector, w: &[usize]) -> NonNegVector {
        let mut cur = v.clone();
        for &a in w {
            cur = self.matrices[a].vec_mul(&cur);
        }
        cur
    }

    /// `ln ||v M_w||`, `-inf` when the product dies.
    pub fn log_capital(&self, v: &NonNegVector, w: &[usize]) -> Result<f64> {
        self.apply_word(v, w).norm1().ln()
    }

    /// One-step norm drop at `u`.
    pub fn delta_risk(&self, u: &NonNegVector) -> Result<RiskValue> {
        if u.is_zero() {
            return Err(Error::ZeroVector);
        }
        let norm = u.norm1();
        let k = self.size();
        let mut ratios = Vec::with_capacity(k);
        for m in &self.matrices {
            ratios.push(m.vec_mul(u).norm1() / &norm);
        }
        if ratios.iter().any(|r| r.is_zero()) {
            return Ok(RiskValue { value: 1.0, is_zero: false, hit_zero_image: true });
        }
        let one = self.mode.one();
        let eps = self.mode.eps();
        let is_zero = ratios.iter().all(|r| match self.mode {
            Mode::Exact => *r == one,
            Mode::Float { .. } => (r.to_f64() - 1.0).abs() <= eps,
        });
        if is_zero {
            return Ok(RiskValue { value: 0.0, is_zero: true, hit_zero_image: false });
        }
        let mut sum = 0.0;
        for r in &ratios {
            sum += r.ln()?;
        }
        let value = (-sum / k as f64).min(1.0);
        Ok(RiskValue { value, is_zero: false, hit_zero_image: false })
    }

    /// Sum of one-step drops over the strict prefixes of `w`, starting at `v`.
    pub fn cumulative_risk(&self, v: &NonNegVector, w: &[usize]) -> Result<CumulativeRisk> {
        let mut cur = v.clone();
        let mut value = 0.0;
        for &a in w {
            if cur.is_zero() {
                return Ok(CumulativeRisk { value, dead_prefix: true });
            }
            value += self.delta_risk(&cur)?.value;
            cur = self.matrices[a].vec_mul(&cur);
        }
        Ok(CumulativeRisk { value, dead_prefix: false })
    }

    /// Reinterpret every entry as f64 (same tolerance as float default).
    pub fn to_float(&self) -> MatrixFamily {
        MatrixFamily {
            alphabet: self.alphabet.clone(),
            matrices: self.matrices.iter().map(|m| m.to_float()).collect(),
            dim: self.dim,
            mode: Mode::float_default(),
        }
    }

    /// Restriction of every matrix to the rows and columns in `set`.
    pub fn restrict(&self, set: crate::linalg::IndexSet) -> Result<MatrixFamily> {
        if set.is_empty() {
            return Err(Error::Malformed("cannot restrict to the empty index set".into()));
        }
        let matrices = self.matrices.iter().map(|m| m.submatrix(set, set)).collect();
        MatrixFamily::new(self.alphabet.clone(), matrices, self.mode)
    }

    /// Block-diagonal join of two families over the same alphabet.
    pub fn block_diagonal(&self, other: &MatrixFamily) -> Result<MatrixFamily> {
        if self.alphabet != other.alphabet {
            return Err(Error::Malformed("block-diagonal join needs identical alphabets".into()));
        }
        let n = self.dim + other.dim;
        if n > MAX_DIM {
            return Err(Error::Malformed("combined dimension exceeds the supported maximum".into()));
        }
        let mut matrices = Vec::new();
        for (a, b) in self.matrices.iter().zip(other.matrices()) {
            let mut m = NonNegMatrix::zero(n, n, self.mode);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    m.set(i, j, a.get(i, j).clone());
                }
            }
            for i in 0..other.dim {
                for j in 0..other.dim {
                    m.set(self.dim + i, self.dim + j, b.get(i, j).clone());
                }
            }
            matrices.push(m);
        }
        MatrixFamily::new(self.alphabet.clone(), matrices, self.mode)
    }

    // -- JSON interface -----------------------------------------------------

    /// Parse from the on-disk JSON shape. `mode_override` wins over the
    /// file's own "mode" field.
    pub fn from_json(v: &Value, mode_override: Option<Mode>) -> Result<MatrixFamily> {
        let obj = v.as_object().ok_or_else(|| Error::Malformed("family JSON must be an object".into()))?;
        let alphabet: Vec<String> = obj
            .get("alphabet")
            .and_then(|a| a.as_array())
            .ok_or_else(|| Error::Malformed("missing \"alphabet\" array".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Malformed("alphabet symbols must be strings".into()))
            })
            .collect::<Result<_>>()?;
        let mode = match mode_override {
            Some(m) => m,
            None => mode_from_json(obj)?,
        };
        let dim = obj
            .get("dim")
            .and_then(|d| d.as_u64())
            .ok_or_else(|| Error::Malformed("missing integer \"dim\"".into()))? as usize;
        let mats_json = obj
            .get("matrices")
            .and_then(|m| m.as_object())
            .ok_or_else(|| Error::Malformed("missing \"matrices\" object".into()))?;
        let mut matrices = Vec::new();
        for sym in &alphabet {
            let rows = mats_json
                .get(sym)
                .and_then(|m| m.as_array())
                .ok_or_else(|| Error::Malformed(format!("missing matrix for symbol {sym:?}")))?;
            if rows.len() != dim {
                return Err(Error::Malformed(format!(
                    "matrix for {sym:?} has {} rows, expected {dim}",
                    rows.len()
                )));
            }
            let mut data = Vec::with_capacity(dim * dim);
            for row in rows {
                let row = row
                    .as_array()
                    .ok_or_else(|| Error::Malformed("matrix rows must be arrays".into()))?;
                if row.len() != dim {
                    return Err(Error::Malformed(format!("ragged matrix for symbol {sym:?}")));
                }
                for e in row {
                    data.push(scalar_from_json(e, mode)?);
                }
            }
            matrices.push(NonNegMatrix::new(dim, dim, data)?);
        }
        for key in mats_json.keys() {
            if !alphabet.iter().any(|s| s == key) {
                return Err(Error::Malformed(format!("matrix for unknown symbol {key:?}")));
            }
        }
        MatrixFamily::new(alphabet, matrices, mode)
    }

    pub fn from_json_str(s: &str, mode_override: Option<Mode>) -> Result<MatrixFamily> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| Error::Malformed(format!("invalid JSON: {e}")))?;
        MatrixFamily::from_json(&v, mode_override)
    }

    pub fn to_json(&self) -> Value {
        let mut mats = BTreeMap::new();
        for (sym, m) in self.alphabet.iter().zip(&self.matrices) {
            mats.insert(sym.clone(), m.to_json());
        }
        let mut out = json!({
            "alphabet": self.alphabet,
            "dim": self.dim,
            "mode": if self.mode.is_exact() { "exact" } else { "float" },
            "matrices": mats,
        });
        if let Mode::Float { eps } = self.mode {
            if eps != DEFAULT_EPS {
                out["eps"] = json!(eps);
            }
        }
        out
    }
}

fn mode_from_json(obj: &serde_json::Map<String, Value>) -> Result<Mode> {
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

/// Scalar from a JSON value. Strings parse by mode; integers are always
/// exactly representable; non-integer JSON numbers are rejected in exact
/// mode (write them as strings: "1/4" or "0.25").
pub fn scalar_from_json(v: &Value, mode: Mode) -> Result<Scalar> {
    match v {
        Value::String(s) => mode.parse(s),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(mode.from_i64(i))
            } else if mode.is_exact() {
                Err(Error::Malformed(format!(
                    "non-integer number {n} in exact mode; use a string literal like \"1/4\""
                )))
            } else {
                Ok(Scalar::Float(n.as_f64().unwrap()))
            }
        }
        _ => Err(Error::Malformed("matrix entries must be numbers or scalar strings".into())),
    }
}
