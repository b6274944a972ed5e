//! Hilbert projective geometry on the non-negative cone.
//!
//! The projective distance between two vectors with identical support is
//! `ln(max u/v) + ln(max v/u)`. It dominates the 1-norm distance on unit
//! vectors, never grows under multiplication by a non-negative matrix, and
//! contracts by the Birkhoff coefficient of a strictly positive matrix.
//! Ratios are formed exactly in exact mode; only the final logarithms are
//! transcendental and therefore float.

use crate::linalg::{NonNegMatrix, NonNegVector};
use crate::scalar::{Mode, Scalar};
use crate::{Error, Result};

/// Projective distance between `u` and `v`. Errors if either is zero or
/// their supports (under the mode's comparison rule) differ.
pub fn hilbert_distance(u: &NonNegVector, v: &NonNegVector, mode: Mode) -> Result<f64> {
    if u.is_zero() || v.is_zero() {
        return Err(Error::ZeroVector);
    }
    if u.dim() != v.dim() {
        return Err(Error::Malformed("dimension mismatch".into()));
    }
    let su = u.support(mode);
    if su != v.support(mode) {
        return Err(Error::SupportMismatch);
    }
    let mut max_uv: Option<Scalar> = None;
    let mut max_vu: Option<Scalar> = None;
    for i in su.iter() {
        let (ui, vi) = (u.get(i), v.get(i));
        // Entries inside a float-mode support can still be 0.0 under the
        // relative threshold; treat the pair projectively via f64 there.
        let r_uv = ui / vi;
        let r_vu = vi / ui;
        if max_uv.as_ref().map_or(true, |m| r_uv > *m) {
            max_uv = Some(r_uv);
        }
        if max_vu.as_ref().map_or(true, |m| r_vu > *m) {
            max_vu = Some(r_vu);
        }
    }
    let (a, b) = (max_uv.unwrap(), max_vu.unwrap());
    Ok(a.ln()? + b.ln()?)
}

/// Extended-metric variant: +inf when supports differ, for trajectory
/// diagnostics that should not abort on a support change.
pub fn hilbert_distance_or_inf(u: &NonNegVector, v: &NonNegVector, mode: Mode) -> f64 {
    match hilbert_distance(u, v, mode) {
        Ok(d) => d,
        Err(_) => f64::INFINITY,
    }
}

/// Birkhoff contraction coefficient of a strictly positive matrix:
/// `tanh(diam / 4)` where `diam` is the matrix's projective diameter
/// `max ln[(M(i,k) M(j,l)) / (M(j,k) M(i,l))]`. Always in `[0, 1)`;
/// rank-one matrices give exactly 0.
pub fn birkhoff_tau(m: &NonNegMatrix, mode: Mode) -> Result<f64> {
    let eps = mode.eps();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let e = m.get(i, j);
            let pos = match mode {
                Mode::Exact => e.is_positive(),
                Mode::Float { .. } => e.to_f64() > eps,
            };
            if !pos {
                return Err(Error::NotPositive);
            }
        }
    }
    // Largest cross ratio D over row and column pairs; the diameter is
    // ln(D) and tanh(ln(D)/4) = (sqrt(D) - 1) / (sqrt(D) + 1).
    let mut best: Option<Scalar> = None;
    for i in 0..m.rows() {
        for j in (i + 1)..m.rows() {
            let mut lo: Option<Scalar> = None;
            let mut hi: Option<Scalar> = None;
            for k in 0..m.cols() {
                let r = m.get(i, k) / m.get(j, k);
                if lo.as_ref().map_or(true, |x| r < *x) {
                    lo = Some(r.clone());
                }
                if hi.as_ref().map_or(true, |x| r > *x) {
                    hi = Some(r);
                }
            }
            let d = &hi.unwrap() / &lo.unwrap();
            if best.as_ref().map_or(true, |x| d > *x) {
                best = Some(d);
            }
        }
    }
    let d = match best {
        None => return Ok(0.0), // a single row has zero diameter
        Some(d) => d.to_f64(),
    };
    let s = d.sqrt();
    Ok((s - 1.0) / (s + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NonNegVector;
    use crate::scalar::{int, rat, Scalar};

    fn nn(entries: Vec<Scalar>) -> NonNegVector {
        NonNegVector::new(entries).unwrap()
    }

    #[test]
    fn distance_of_equal_vectors_is_zero() {
        let u = nn(vec![rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]);
        assert_eq!(hilbert_distance(&u, &u, Mode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn near_boundary_pair() {
        // u = (e, 1-e-e^2, e^2), v = (e^2, 1-e-e^2, e) at e = 1/10: the
        // extreme ratios are 10 both ways, so the distance is 2 ln 10.
        let e = rat(1, 10);
        let e2 = &e * &e;
        let mid = int(1) - &e - &e2;
        let u = nn(vec![e.clone(), mid.clone(), e2.clone()]);
        let v = nn(vec![e2, mid, e]);
        let d = hilbert_distance(&u, &v, Mode::Exact).unwrap();
        assert!((d - 2.0 * 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn support_mismatch_and_zero() {
        let u = nn(vec![int(1), int(0)]);
        let v = nn(vec![int(1), int(1)]);
        assert!(matches!(hilbert_distance(&u, &v, Mode::Exact), Err(Error::SupportMismatch)));
        assert!(hilbert_distance_or_inf(&u, &v, Mode::Exact).is_infinite());
        let z = NonNegVector::zero(2, Mode::Exact);
        assert!(matches!(hilbert_distance(&z, &v, Mode::Exact), Err(Error::ZeroVector)));
    }

    #[test]
    fn scale_invariance() {
        let u = nn(vec![int(1), int(2), int(3)]);
        let v = nn(vec![int(2), int(1), int(1)]);
        let d1 = hilbert_distance(&u, &v, Mode::Exact).unwrap();
        let d2 = hilbert_distance(&u.scale(&rat(7, 3)), &v, Mode::Exact).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn tau_examples() {
        let m = NonNegMatrix::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(2)]]).unwrap();
        let tau = birkhoff_tau(&m, Mode::Exact).unwrap();
        assert!((tau - 1.0 / 3.0).abs() < 1e-15);

        let ones = NonNegMatrix::from_rows(vec![vec![int(1), int(1)], vec![int(1), int(1)]]).unwrap();
        assert_eq!(birkhoff_tau(&ones, Mode::Exact).unwrap(), 0.0);

        let with_zero = NonNegMatrix::from_rows(vec![vec![int(1), int(0)], vec![int(1), int(1)]]).unwrap();
        assert!(matches!(birkhoff_tau(&with_zero, Mode::Exact), Err(Error::NotPositive)));
    }

    #[test]
    fn tau_bounds_contraction_empirically() {
        // d(uM, vM) <= tau(M) d(u, v) for strictly positive M.
        let m = NonNegMatrix::from_rows(vec![
            vec![int(2), int(1), int(1)],
            vec![int(1), int(3), int(1)],
            vec![int(1), int(1), int(5)],
        ])
        .unwrap();
        let tau = birkhoff_tau(&m, Mode::Exact).unwrap();
        assert!(tau < 1.0);
        let pairs = [
            (nn(vec![int(1), int(2), int(3)]), nn(vec![int(3), int(1), int(1)])),
            (nn(vec![int(1), int(1), int(9)]), nn(vec![int(5), int(1), int(1)])),
        ];
        for (u, v) in pairs {
            let before = hilbert_distance(&u, &v, Mode::Exact).unwrap();
            let after = hilbert_distance(&m.vec_mul(&u), &m.vec_mul(&v), Mode::Exact).unwrap();
            assert!(after <= tau * before + 1e-12);
        }
    }
}
