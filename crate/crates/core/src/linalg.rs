//! Vectors, matrices and index sets over dual-mode scalars.
//!
//! Everything is dense and hand-rolled: the dimensions in play are desk
//! scale (a few dozen at most) and the decision procedures need exact
//! rational pivots, which rules out off-the-shelf float linear algebra.
//!
//! Index sets are bitmasks over `0..dim`. Internally all indices are
//! 0-based; serialization and display use the 1-based labels that the
//! JSON and DOT outputs expect.

use std::fmt;

use crate::scalar::{Mode, Scalar};
use crate::{Error, Result};

/// A subset of `{0, .., dim-1}` as a bitmask. `dim <= 64` is enforced at
/// family construction.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(pub u64);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn singleton(i: usize) -> IndexSet {
        IndexSet(1u64 << i)
    }

    pub fn full(dim: usize) -> IndexSet {
        if dim == 64 {
            IndexSet(u64::MAX)
        } else {
            IndexSet((1u64 << dim) - 1)
        }
    }

    pub fn from_indices(indices: &[usize]) -> IndexSet {
        let mut s = IndexSet::EMPTY;
        for &i in indices {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1u64 << i) != 0
    }

    pub fn union(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 | other.0)
    }

    pub fn intersect(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |i| self.contains(*i))
    }

    /// 1-based labels, for JSON payloads.
    pub fn to_labels(self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Signed dense vector; the workhorse for basis and nullspace computations.
pub type SignedVec = Vec<Scalar>;

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    assert_eq!(a.len(), b.len(), "dot: dimension mismatch");
    let mode = a.first().map(|s| s.mode()).unwrap_or(Mode::Exact);
    let mut acc = mode.zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

pub fn norm1_signed(v: &[Scalar]) -> Scalar {
    let mode = v.first().map(|s| s.mode()).unwrap_or(Mode::Exact);
    let mut acc = mode.zero();
    for x in v {
        acc = acc + x.abs();
    }
    acc
}

/// A non-negative row vector. Construction rejects negative entries.
#[derive(Clone, Debug, PartialEq)]
pub struct NonNegVector {
    entries: Vec<Scalar>,
}

impl NonNegVector {
    pub fn new(entries: Vec<Scalar>) -> Result<NonNegVector> {
        for (i, e) in entries.iter().enumerate() {
            if e.is_negative() {
                return Err(Error::NotNonNegative {
                    location: format!("index {}", i + 1),
                    value: e.to_string(),
                });
            }
        }
        Ok(NonNegVector { entries })
    }

    pub fn zero(dim: usize, mode: Mode) -> NonNegVector {
        NonNegVector { entries: vec![mode.zero(); dim] }
    }

    pub fn basis(dim: usize, i: usize, mode: Mode) -> NonNegVector {
        let mut v = NonNegVector::zero(dim, mode);
        v.entries[i] = mode.one();
        v
    }

    /// Uniform vector `(1/dim, ..., 1/dim)`.
    pub fn uniform(dim: usize, mode: Mode) -> NonNegVector {
        let w = mode.from_ratio(1, dim as i64);
        NonNegVector { entries: vec![w; dim] }
    }

    pub fn ones(dim: usize, mode: Mode) -> NonNegVector {
        NonNegVector { entries: vec![mode.one(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &Scalar {
        &self.entries[i]
    }

    /// Sum of entries (the 1-norm: entries are non-negative).
    pub fn norm1(&self) -> Scalar {
        let mode = self.mode();
        let mut acc = mode.zero();
        for x in &self.entries {
            acc = acc + x;
        }
        acc
    }

    pub fn mode(&self) -> Mode {
        self.entries.first().map(|s| s.mode()).unwrap_or(Mode::Exact)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Support under the mode's comparison rule: exact positivity in exact
    /// mode; in float mode an entry counts as zero when it is at most
    /// `eps * norm1(self)`.
    pub fn support(&self, mode: Mode) -> IndexSet {
        let mut s = IndexSet::EMPTY;
        match mode {
            Mode::Exact => {
                for (i, e) in self.entries.iter().enumerate() {
                    if e.is_positive() {
                        s.insert(i);
                    }
                }
            }
            Mode::Float { eps } => {
                let floor = eps * self.norm1().to_f64();
                for (i, e) in self.entries.iter().enumerate() {
                    if e.to_f64() > floor {
                        s.insert(i);
                    }
                }
            }
        }
        s
    }

    pub fn scale(&self, c: &Scalar) -> NonNegVector {
        NonNegVector { entries: self.entries.iter().map(|e| e * c).collect() }
    }

    pub fn add(&self, other: &NonNegVector) -> NonNegVector {
        assert_eq!(self.dim(), other.dim());
        NonNegVector {
            entries: self.entries.iter().zip(other.entries()).map(|(a, b)| a + b).collect(),
        }
    }

    /// Normalize to unit 1-norm. Errors on the zero vector.
    pub fn normalized(&self) -> Result<NonNegVector> {
        let n = self.norm1();
        if n.is_zero() {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(&n.recip()))
    }

    pub fn to_float(&self) -> NonNegVector {
        NonNegVector { entries: self.entries.iter().map(|e| e.to_float_scalar()).collect() }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.to_f64()).collect()
    }

    /// Restriction to the coordinates in `set`, in increasing index order.
    pub fn restrict(&self, set: IndexSet) -> NonNegVector {
        NonNegVector { entries: set.iter().map(|i| self.entries[i].clone()).collect() }
    }

    pub fn into_entries(self) -> Vec<Scalar> {
        self.entries
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.entries.iter().map(|e| e.to_json()).collect())
    }
}

impl fmt::Display for NonNegVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A dense non-negative matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NonNegMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl NonNegMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<NonNegMatrix> {
        if data.len() != rows * cols {
            return Err(Error::Malformed(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        for (k, e) in data.iter().enumerate() {
            if e.is_negative() {
                return Err(Error::NotNonNegative {
                    location: format!("row {}, column {}", k / cols + 1, k % cols + 1),
                    value: e.to_string(),
                });
            }
        }
        Ok(NonNegMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<NonNegMatrix> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Malformed("ragged matrix rows".into()));
        }
        NonNegMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize, mode: Mode) -> NonNegMatrix {
        let mut data = vec![mode.zero(); n * n];
        for i in 0..n {
            data[i * n + i] = mode.one();
        }
        NonNegMatrix { rows: n, cols: n, data }
    }

    pub fn zero(rows: usize, cols: usize, mode: Mode) -> NonNegMatrix {
        NonNegMatrix { rows, cols, data: vec![mode.zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mode(&self) -> Mode {
        self.data.first().map(|s| s.mode()).unwrap_or(Mode::Exact)
    }

    /// `self * other`.
    pub fn mul(&self, other: &NonNegMatrix) -> NonNegMatrix {
        assert_eq!(self.cols, other.rows, "matrix product: dimension mismatch");
        let mode = self.mode();
        let mut data = vec![mode.zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let cur = &data[i * other.cols + j];
                    data[i * other.cols + j] = cur + &(aik * other.get(k, j));
                }
            }
        }
        NonNegMatrix { rows: self.rows, cols: other.cols, data }
    }

    /// Row vector times matrix: `v * self`.
    pub fn vec_mul(&self, v: &NonNegVector) -> NonNegVector {
        assert_eq!(v.dim(), self.rows, "vector-matrix product: dimension mismatch");
        let mode = self.mode();
        let mut out = vec![mode.zero(); self.cols];
        for (i, vi) in v.entries().iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                out[j] = &out[j] + &(vi * self.get(i, j));
            }
        }
        NonNegVector { entries: out }
    }

    /// Matrix times column vector: `self * v` (signed entries allowed).
    pub fn mat_vec_signed(&self, v: &[Scalar]) -> SignedVec {
        assert_eq!(v.len(), self.cols, "matrix-vector product: dimension mismatch");
        let mode = self.mode();
        let mut out = vec![mode.zero(); self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                out[i] = &out[i] + &(a * &v[j]);
            }
        }
        out
    }

    /// Row vector times matrix, signed entries allowed.
    pub fn vec_mul_signed(&self, v: &[Scalar]) -> SignedVec {
        assert_eq!(v.len(), self.rows);
        let mode = self.mode();
        let mut out = vec![mode.zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                out[j] = &out[j] + &(vi * self.get(i, j));
            }
        }
        out
    }

    /// Submatrix with the given row and column index sets, both taken in
    /// increasing order.
    pub fn submatrix(&self, row_set: IndexSet, col_set: IndexSet) -> NonNegMatrix {
        let mut data = Vec::with_capacity(row_set.len() * col_set.len());
        for i in row_set.iter() {
            for j in col_set.iter() {
                data.push(self.get(i, j).clone());
            }
        }
        NonNegMatrix { rows: row_set.len(), cols: col_set.len(), data }
    }

    /// Support of row `i` under the mode's comparison rule.
    pub fn row_support(&self, i: usize, mode: Mode) -> IndexSet {
        NonNegVector { entries: self.row(i).to_vec() }.support(mode)
    }

    pub fn transpose(&self) -> NonNegMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        NonNegMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn to_float(&self) -> NonNegMatrix {
        NonNegMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.to_float_scalar()).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows)
                .map(|i| serde_json::Value::Array(self.row(i).iter().map(|e| e.to_json()).collect()))
                .collect(),
        )
    }
}

/// An incrementally built basis of a row space, kept in reduced echelon
/// form so membership tests are a single reduction pass.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    dim: usize,
    mode: Mode,
    rows: Vec<SignedVec>,
    pivots: Vec<usize>,
}

impl SpanBasis {
    pub fn new(dim: usize, mode: Mode) -> SpanBasis {
        SpanBasis { dim, mode, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SignedVec] {
        &self.rows
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn essentially_zero(&self, x: &Scalar, scale: f64) -> bool {
        match self.mode {
            Mode::Exact => x.is_zero(),
            Mode::Float { eps } => x.to_f64().abs() <= eps * scale.max(1.0),
        }
    }

    /// Reduce `v` against the current rows; returns the residual.
    fn reduce(&self, mut v: SignedVec) -> SignedVec {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let c = v[p].clone();
                for (x, r) in v.iter_mut().zip(row) {
                    *x = &*x - &(&c * r);
                }
            }
        }
        v
    }

    /// Insert `v` into the span. Returns true if the dimension grew.
    pub fn insert(&mut self, v: &[Scalar]) -> bool {
        assert_eq!(v.len(), self.dim);
        let scale = norm1_signed(v).to_f64();
        let mut res = self.reduce(v.to_vec());
        // Find a usable pivot.
        let pivot = (0..self.dim).find(|&j| !self.essentially_zero(&res[j], scale));
        let Some(p) = pivot else { return false };
        let inv = res[p].recip();
        for x in res.iter_mut() {
            *x = &*x * &inv;
        }
        // Back-eliminate the new pivot from existing rows.
        for k in 0..self.rows.len() {
            if !self.rows[k][p].is_zero() {
                let c = self.rows[k][p].clone();
                for j in 0..self.dim {
                    let t = &self.rows[k][j] - &(&c * &res[j]);
                    self.rows[k][j] = t;
                }
            }
        }
        self.rows.push(res);
        self.pivots.push(p);
        true
    }

    /// Membership test (does not modify the basis).
    pub fn contains(&self, v: &[Scalar]) -> bool {
        let scale = norm1_signed(v).to_f64();
        let res = self.reduce(v.to_vec());
        res.iter().all(|x| self.essentially_zero(x, scale))
    }
}

/// Echelon basis of the row space of `rows`.
pub fn row_space_basis(rows: &[SignedVec], dim: usize, mode: Mode) -> SpanBasis {
    let mut b = SpanBasis::new(dim, mode);
    for r in rows {
        b.insert(r);
    }
    b
}

/// Basis of the right nullspace `{x : M x = 0}` of an `r x c` matrix given
/// as rows. Exact Gaussian elimination (float inputs use the eps rule).
pub fn right_nullspace(rows: &[SignedVec], cols: usize, mode: Mode) -> Vec<SignedVec> {
    let mut basis = SpanBasis::new(cols, mode);
    for r in rows {
        basis.insert(r);
    }
    // Free columns parametrize the nullspace.
    let pivot_cols: Vec<usize> = basis.pivots.clone();
    let mut out = Vec::new();
    let zero = mode.zero();
    let one = mode.one();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![zero.clone(); cols];
        v[free] = one.clone();
        // Echelon rows are reduced: row has 1 at its pivot, arbitrary elsewhere.
        for (row, &p) in basis.rows.iter().zip(&basis.pivots) {
            // (row . v) must vanish: row[p]*v[p] + row[free]*v[free] = 0.
            v[p] = -&row[free];
        }
        out.push(v);
    }
    out
}
