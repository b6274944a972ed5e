//! A small dense primal simplex for one specific problem:
//!
//! maximize sum(s)  subject to  0 <= s <= cap,  s . b = 0 for b in `orth`.
//!
//! This is the inner solver behind the "live part" of a vector: the caps
//! are the vector's entries and the orthogonality rows are a basis of the
//! betting subspace. Exact mode pivots in rationals and terminates by
//! Bland's rule; float mode uses an absolute pivot tolerance after
//! normalizing the problem to unit scale.

use crate::linalg::{dot, norm1_signed, NonNegVector, SignedVec};
use crate::scalar::{Mode, Scalar};
use crate::{Error, Result};

const FLOAT_PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    mode: Mode,
    cols: usize,           // 2m: s then t
    rows: Vec<SignedVec>,  // constraint coefficient rows
    rhs: Vec<Scalar>,
    basis: Vec<Option<usize>>, // basic column of each row; None = artificial
    z: Vec<Scalar>,        // reduced costs
}

impl Tableau {
    fn tol_positive(&self, x: &Scalar) -> bool {
        match self.mode {
            Mode::Exact => x.is_positive(),
            Mode::Float { .. } => x.to_f64() > FLOAT_PIVOT_TOL,
        }
    }

    fn tol_nonzero(&self, x: &Scalar) -> bool {
        match self.mode {
            Mode::Exact => !x.is_zero(),
            Mode::Float { .. } => x.to_f64().abs() > FLOAT_PIVOT_TOL,
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let inv = self.rows[r][e].recip();
        for x in self.rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        self.rhs[r] = &self.rhs[r] * &inv;
        for k in 0..self.rows.len() {
            if k == r {
                continue;
            }
            if !self.rows[k][e].is_zero() {
                let c = self.rows[k][e].clone();
                for j in 0..self.cols {
                    self.rows[k][j] = &self.rows[k][j] - &(&c * &self.rows[r][j]);
                }
                self.rhs[k] = &self.rhs[k] - &(&c * &self.rhs[r]);
            }
        }
        if !self.z[e].is_zero() {
            let c = self.z[e].clone();
            for j in 0..self.cols {
                self.z[j] = &self.z[j] - &(&c * &self.rows[r][j]);
            }
        }
        self.basis[r] = Some(e);
    }
}

/// Maximize `sum(s)` over `0 <= s <= cap` with `s . b = 0` for every `b`
/// in `orth`. Returns the optimal value and one maximizer.
pub fn lp_max_capped(
    cap: &NonNegVector,
    orth: &[SignedVec],
    mode: Mode,
) -> Result<(Scalar, NonNegVector)> {
    let m = cap.dim();
    for b in orth {
        if b.len() != m {
            return Err(Error::Malformed("orthogonality row of wrong dimension".into()));
        }
    }

    // Float mode: normalize to unit scale so absolute tolerances are
    // meaningful regardless of the trajectory's current magnitude.
    let (cap_scale, cap_work, orth_work): (Scalar, NonNegVector, Vec<SignedVec>) = match mode {
        Mode::Exact => (mode.one(), cap.clone(), orth.to_vec()),
        Mode::Float { .. } => {
            let n = cap.norm1();
            let cap_n = if n.is_zero() { cap.clone() } else { cap.scale(&n.recip()) };
            let orth_n = orth
                .iter()
                .map(|b| {
                    let nb = norm1_signed(b);
                    if nb.is_zero() {
                        b.clone()
                    } else {
                        let inv = nb.recip();
                        b.iter().map(|x| x * &inv).collect()
                    }
                })
                .collect();
            (if n.is_zero() { mode.one() } else { n }, cap_n, orth_n)
        }
    };

    let zero = mode.zero();
    let one = mode.one();
    let cols = 2 * m;
    let mut t = Tableau {
        mode,
        cols,
        rows: Vec::new(),
        rhs: Vec::new(),
        basis: Vec::new(),
        z: Vec::new(),
    };
    // Box rows: s_i + t_i = cap_i, with t_i basic.
    for i in 0..m {
        let mut row = vec![zero.clone(); cols];
        row[i] = one.clone();
        row[m + i] = one.clone();
        t.rows.push(row);
        t.rhs.push(cap_work.get(i).clone());
        t.basis.push(Some(m + i));
    }
    // Orthogonality rows: b . s = 0, artificial basis to be repaired.
    for b in &orth_work {
        let mut row = vec![zero.clone(); cols];
        row[..m].clone_from_slice(b);
        t.rows.push(row);
        t.rhs.push(zero.clone());
        t.basis.push(None);
    }
    // Objective: maximize sum of s. Initial basic columns all have zero
    // cost, so the reduced costs start equal to the costs.
    t.z = vec![zero.clone(); cols];
    for j in 0..m {
        t.z[j] = one.clone();
    }

    // Basis repair: every orthogonality row has rhs 0, so pivoting it onto
    // any nonzero column is a degenerate pivot that preserves feasibility.
    // Rows with no usable column are linear consequences and are dropped.
    let mut r = m;
    while r < t.rows.len() {
        if t.basis[r].is_none() {
            let e = (0..cols).find(|&j| t.tol_nonzero(&t.rows[r][j]));
            match e {
                Some(e) => t.pivot(r, e),
                None => {
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Primal simplex with Bland's rule.
    let max_iter = 2000 * (t.rows.len() + cols) + 1000;
    for _ in 0..max_iter {
        // Entering: lowest-index column with positive reduced cost.
        let Some(e) = (0..cols).find(|&j| t.tol_positive(&t.z[j])) else {
            // Optimal.
            let mut s = vec![zero.clone(); m];
            for (r, b) in t.basis.iter().enumerate() {
                if let Some(c) = *b {
                    if c < m {
                        // Clamp float round-off into the box.
                        let v = t.rhs[r].clone();
                        s[c] = if v.is_negative() { zero.clone() } else { v };
                    }
                }
            }
            let s: SignedVec = s.iter().map(|x| x * &cap_scale).collect();
            let value = s.iter().fold(mode.zero(), |acc, x| acc + x);
            let argmax = NonNegVector::new(s)
                .map_err(|_| Error::NumericalFailure("simplex produced a negative component".into()))?;
            return Ok((value, argmax));
        };
        // Leaving: minimum ratio, ties to the lowest basic column.
        let mut best: Option<(usize, Scalar)> = None;
        for r in 0..t.rows.len() {
            if t.tol_positive(&t.rows[r][e]) {
                let ratio = &t.rhs[r] / &t.rows[r][e];
                let better = match &best {
                    None => true,
                    Some((br, bratio)) => {
                        ratio < *bratio || (ratio == *bratio && t.basis[r] < t.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = best else {
            return Err(Error::InternalContradiction(
                "capped LP reported unbounded".into(),
            ));
        };
        t.pivot(r, e);
    }
    Err(Error::NumericalFailure("simplex iteration cap exceeded".into()))
}

/// Debug helper: verify that `s` is feasible for the problem.
pub fn check_feasible(cap: &NonNegVector, orth: &[SignedVec], s: &NonNegVector, mode: Mode) -> bool {
    let tol = match mode {
        Mode::Exact => 0.0,
        Mode::Float { .. } => 1e-7,
    };
    for i in 0..cap.dim() {
        let slack = cap.get(i) - s.get(i);
        if slack.to_f64() < -tol * cap.norm1().to_f64().max(1.0) {
            return false;
        }
    }
    for b in orth {
        let d = dot(s.entries(), b);
        if d.to_f64().abs() > tol * norm1_signed(b).to_f64().max(1.0) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn nn(entries: Vec<Scalar>) -> NonNegVector {
        NonNegVector::new(entries).unwrap()
    }

    #[test]
    fn unconstrained_box_fills_up() {
        let cap = nn(vec![int(1), int(1)]);
        let (v, s) = lp_max_capped(&cap, &[], Mode::Exact).unwrap();
        assert_eq!(v, int(2));
        assert_eq!(s.entries(), &[int(1), int(1)]);
    }

    #[test]
    fn balanced_constraint_still_attains_cap() {
        let cap = nn(vec![int(1), int(1)]);
        let (v, s) = lp_max_capped(&cap, &[vec![int(1), int(-1)]], Mode::Exact).unwrap();
        assert_eq!(v, int(2));
        assert!(check_feasible(&cap, &[vec![int(1), int(-1)]], &s, Mode::Exact));
    }

    #[test]
    fn full_rank_constraints_force_zero() {
        let cap = nn(vec![int(1), int(0)]);
        let orth = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        let (v, _) = lp_max_capped(&cap, &orth, Mode::Exact).unwrap();
        assert_eq!(v, int(0));
    }

    #[test]
    fn asymmetric_caps() {
        // s1 = s2 forced, s2 capped at 2, s1 at 1: optimum (1,1).
        let cap = nn(vec![int(1), int(2)]);
        let (v, s) = lp_max_capped(&cap, &[vec![int(1), int(-1)]], Mode::Exact).unwrap();
        assert_eq!(v, int(2));
        assert_eq!(s.entries(), &[int(1), int(1)]);
    }

    #[test]
    fn rational_data_stays_exact() {
        let cap = nn(vec![rat(1, 3), rat(1, 7), rat(2, 5)]);
        // s1 + s2 - s3 = 0
        let orth = vec![vec![int(1), int(1), int(-1)]];
        let (v, s) = lp_max_capped(&cap, &orth, Mode::Exact).unwrap();
        assert!(check_feasible(&cap, &orth, &s, Mode::Exact));
        // s3 <= 2/5 and s3 = s1 + s2 <= 1/3 + 1/7 = 10/21 -> s3* = 2/5,
        // total = 2 * 2/5 = 4/5.
        assert_eq!(v, rat(4, 5));
    }

    #[test]
    fn float_mode_matches_exact() {
        let cap_e = nn(vec![rat(1, 3), rat(1, 7), rat(2, 5)]);
        let cap_f = cap_e.to_float();
        let orth_e = vec![vec![int(1), int(1), int(-1)]];
        let orth_f: Vec<SignedVec> =
            orth_e.iter().map(|b| b.iter().map(|x| x.to_float_scalar()).collect()).collect();
        let (ve, _) = lp_max_capped(&cap_e, &orth_e, Mode::Exact).unwrap();
        let (vf, _) = lp_max_capped(&cap_f, &orth_f, Mode::float_default()).unwrap();
        assert!((ve.to_f64() - vf.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn value_bounded_by_cap_norm() {
        // Randomized-ish small sweep: value <= norm1(cap) always, with
        // equality iff cap itself satisfies the constraints.
        let caps = [
            nn(vec![int(1), int(2), int(3)]),
            nn(vec![int(0), int(1), int(1)]),
            nn(vec![rat(1, 2), rat(1, 2), int(0)]),
        ];
        let orth = vec![vec![int(1), int(-1), int(0)]];
        for cap in &caps {
            let (v, s) = lp_max_capped(cap, &orth, Mode::Exact).unwrap();
            assert!(v <= cap.norm1());
            assert!(check_feasible(cap, &orth, &s, Mode::Exact));
            let cap_ok = dot(cap.entries(), &orth[0]).is_zero();
            assert_eq!(v == cap.norm1(), cap_ok);
        }
    }
}
