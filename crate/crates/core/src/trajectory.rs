//! Evolution of a capital vector along a concrete symbol stream, per-step
//! diagnostics, and exponential-rate fitting on the recorded series.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::classify::{live, BettingSubspace};
use crate::family::MatrixFamily;
use crate::geometry::hilbert_distance_or_inf;
use crate::linalg::{IndexSet, NonNegVector};
use crate::scalar::Scalar;
use crate::sequences::SequenceSource;
use crate::{Error, Result};

/// One step of an evolved trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub n: usize,
    /// Capital after n letters. In float mode this is exp(log_norm) and may
    /// round to 0 or infinity at the extremes; log_norm is authoritative.
    pub norm: Scalar,
    /// ln(norm), NEG_INFINITY once dead.
    pub log_norm: f64,
    pub support: IndexSet,
    /// Live part of the capital; only at steps where it was requested.
    pub live: Option<Scalar>,
    /// Projective distance to the reference direction; None when dead.
    pub dh_to_x: Option<f64>,
    pub dead: bool,
}

/// Diagnostics to compute along the way. Live is opt-in (one small LP per
/// sampled step); the reference direction enables the projective-distance
/// column.
#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    pub live_basis: Option<BettingSubspace>,
    /// Compute Live every k-th step (0 and 1 both mean every step).
    pub live_every: usize,
    pub dh_target: Option<NonNegVector>,
}

/// Evolve v through the first `steps` symbols of the stream, recording steps
/// 0..=steps. Float mode tracks the unit direction and accumulates the log
/// of the norm separately, so thousand-step decays neither under- nor
/// overflow. Once the capital hits the zero vector the remaining records
/// are emitted as dead.
pub fn evolve(
    f: &MatrixFamily,
    v: &NonNegVector,
    src: &mut SequenceSource,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Vec<TrajectoryRecord>> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    if v.dim() != f.dim() {
        return Err(Error::Malformed(format!(
            "vector has dimension {}, family has {}",
            v.dim(),
            f.dim()
        )));
    }
    let mode = f.mode();
    let exact = mode.is_exact();
    let every = opts.live_every.max(1);

    // State: in exact mode `u` carries the full capital; in float mode `u`
    // is the unit direction and `log_norm` the accumulated log capital.
    let mut u = v.clone();
    let mut log_norm;
    if exact {
        log_norm = u.norm1().ln()?;
    } else {
        log_norm = u.norm1().to_f64().ln();
        u = u.normalized()?;
    }
    let mut dead = false;

    let mut records = Vec::with_capacity(steps + 1);
    let push_record = |n: usize,
                           u: &NonNegVector,
                           log_norm: f64,
                           dead: bool,
                           records: &mut Vec<TrajectoryRecord>|
     -> Result<()> {
        let norm = if dead {
            mode.zero()
        } else if exact {
            u.norm1()
        } else {
            Scalar::Float(log_norm.exp())
        };
        let support = if dead { IndexSet::EMPTY } else { u.support(mode) };
        let live_here = match &opts.live_basis {
            Some(basis) if !dead && (n % every == 0 || n == steps) => {
                let raw = live(f, basis, u)?;
                // Float mode evolves the unit direction; scale Live back up
                // to the actual capital (Live is positively homogeneous).
                let val = if exact { raw } else { raw * &Scalar::Float(log_norm.exp()) };
                Some(val)
            }
            Some(_) if dead => Some(mode.zero()),
            _ => None,
        };
        let dh = match &opts.dh_target {
            Some(x) if !dead => Some(hilbert_distance_or_inf(u, x, mode)),
            _ => None,
        };
        records.push(TrajectoryRecord {
            n,
            norm,
            log_norm: if dead { f64::NEG_INFINITY } else { log_norm },
            support,
            live: live_here,
            dh_to_x: dh,
            dead,
        });
        Ok(())
    };

    push_record(0, &u, log_norm, dead, &mut records)?;
    for n in 1..=steps {
        let Some(sym) = src.next_symbol() else {
            return Err(Error::SequenceTooShort { needed: steps, got: n - 1 });
        };
        if sym >= f.size() {
            return Err(Error::UnknownSymbol(format!("symbol index {sym}")));
        }
        if !dead {
            u = f.matrix(sym).vec_mul(&u);
            if u.is_zero() {
                dead = true;
            } else if exact {
                log_norm = u.norm1().ln()?;
            } else {
                let step = u.norm1().to_f64();
                if step <= 0.0 {
                    dead = true;
                } else {
                    log_norm += step.ln();
                    u = u.normalized()?;
                }
            }
        }
        push_record(n, &u, log_norm, dead, &mut records)?;
    }
    Ok(records)
}

/// CSV rendering: `n,norm,log_norm,support,live,dh_to_x,dead`, support as
/// 1-based labels joined by ';', optional columns empty when absent.
pub fn write_csv<W: Write>(records: &[TrajectoryRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "n,norm,log_norm,support,live,dh_to_x,dead")?;
    for r in records {
        let support = r
            .support
            .to_labels()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        let live = r.live.as_ref().map(|l| l.to_string()).unwrap_or_default();
        let dh = r.dh_to_x.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.norm,
            fmt_f64(r.log_norm),
            support,
            live,
            dh,
            r.dead
        )?;
    }
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Which recorded series to fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitTarget {
    Norm,
    Live,
    DhToX,
}

impl FitTarget {
    pub fn parse(s: &str) -> Result<FitTarget> {
        match s {
            "norm" => Ok(FitTarget::Norm),
            "live" => Ok(FitTarget::Live),
            "dh" | "dh_to_x" => Ok(FitTarget::DhToX),
            other => Err(Error::Malformed(format!("unknown fit target '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub limit: f64,
    /// Decay rate, sign-normalized so positive means the series approaches
    /// the limit like e^{-beta n}.
    pub beta: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
    /// Number of points that entered the regression.
    pub points: usize,
    /// Set when the fit explains too little variance (r^2 < 0.9) or the
    /// series carries no decay signal at all.
    pub low_confidence: bool,
}

impl RateFit {
    pub fn to_json(&self) -> Value {
        json!({
            "limit": self.limit,
            "beta": self.beta,
            "r_squared": self.r_squared,
            "window": [self.window.0, self.window.1],
            "points": self.points,
            "low_confidence": self.low_confidence,
        })
    }
}

const FIT_MIN_RECORDS: usize = 20;
const FIT_CONFIDENCE_R2: f64 = 0.9;

/// Fit x_n ~ limit + c e^{-beta n} on the chosen series: the first 20% of
/// records are discarded as transient, the limit is the mean of the last
/// 10% of the window (unless forced), and beta is the least-squares slope
/// of ln|x_n - limit|.
pub fn rate_fit(
    records: &[TrajectoryRecord],
    target: FitTarget,
    forced_limit: Option<f64>,
) -> Result<RateFit> {
    // (n, value, log_norm) — the log survives where exp(log_norm) cannot.
    let series: Vec<(usize, f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let v = match target {
                FitTarget::Norm => {
                    if r.dead {
                        return None;
                    }
                    Some(r.log_norm.exp())
                }
                FitTarget::Live => r.live.as_ref().map(Scalar::to_f64),
                FitTarget::DhToX => r.dh_to_x,
            };
            match v {
                Some(x) if x.is_finite() => Some((r.n, x, r.log_norm)),
                _ => None,
            }
        })
        .collect();
    if series.len() < FIT_MIN_RECORDS {
        return Err(Error::NoSignal(format!(
            "need at least {FIT_MIN_RECORDS} usable records, found {}",
            series.len()
        )));
    }

    let start = series.len() / 5;
    let window = &series[start..];
    let tail_start = window.len() - (window.len() / 10).max(1);
    let limit = match forced_limit {
        Some(l) => l,
        None => {
            let tail = &window[tail_start..];
            let mean = tail.iter().map(|&(_, x, _)| x).sum::<f64>() / tail.len() as f64;
            // A tail indistinguishable from zero (relative to where the
            // series started) means decay *to* zero: estimating a denormal
            // limit and subtracting it would discard every point.
            let peak = series.iter().map(|&(_, x, _)| x.abs()).fold(0.0f64, f64::max);
            if mean.abs() <= 1e-9 * peak.max(f64::MIN_POSITIVE) {
                0.0
            } else {
                mean
            }
        }
    };

    // In the common forced-limit-zero case on the norm series, use the
    // stored log directly: it survives where exp(log_norm) underflows.
    let use_log_norm = target == FitTarget::Norm && limit == 0.0;
    let scale = window.iter().map(|&(_, x, _)| (x - limit).abs()).fold(0.0f64, f64::max);
    let mut xs: Vec<f64> = Vec::with_capacity(window.len());
    let mut ys: Vec<f64> = Vec::with_capacity(window.len());
    for &(n, x, log_norm) in window {
        let y = if use_log_norm {
            if log_norm.is_finite() { log_norm } else { continue }
        } else {
            let d = (x - limit).abs();
            // Points indistinguishable from the limit carry no slope
            // information, only float noise.
            if d <= 1e-12 * scale.max(1.0) {
                continue;
            }
            d.ln()
        };
        xs.push(n as f64);
        ys.push(y);
    }
    let window_span = (window[0].0, window[window.len() - 1].0);
    if xs.len() < 2 {
        // Constant series: the limit is meaningful, decay is not.
        return Ok(RateFit {
            limit,
            beta: 0.0,
            r_squared: 0.0,
            window: window_span,
            points: xs.len(),
            low_confidence: true,
        });
    }

    let (slope, r_squared) = linear_regression(&xs, &ys);
    let beta = -slope;
    Ok(RateFit {
        limit,
        beta,
        r_squared,
        window: window_span,
        points: xs.len(),
        low_confidence: r_squared < FIT_CONFIDENCE_R2,
    })
}

/// Ordinary least squares; returns (slope, r^2).
fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx <= 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r_squared = if syy <= 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r_squared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::betting_subspace;
    use crate::presets;
    use crate::scalar::{int, rat, Mode};

    #[test]
    fn sudden_death_on_binary_champernowne() {
        // The one-state doubling family dies on the very first '1'.
        let f = presets::case0_family();
        let v = NonNegVector::ones(1, Mode::Exact);
        let mut src = SequenceSource::champernowne(2).unwrap();
        let recs = evolve(&f, &v, &mut src, 5, &EvolveOptions::default()).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(recs[0].norm, int(1));
        assert!(!recs[0].dead);
        for r in &recs[1..] {
            assert!(r.dead);
            assert!(r.norm.is_zero());
            assert_eq!(r.log_norm, f64::NEG_INFINITY);
            assert!(r.support.is_empty());
        }
    }

    #[test]
    fn stabilized_direction_keeps_unit_norm() {
        let f = presets::case2_family();
        let x = NonNegVector::new(vec![rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]).unwrap();
        let mut src = SequenceSource::champernowne(2).unwrap();
        let recs = evolve(&f, &x, &mut src, 200, &EvolveOptions::default()).unwrap();
        for r in &recs {
            assert_eq!(r.norm, int(1), "norm drifted at step {}", r.n);
            assert!(!r.dead);
        }
    }

    #[test]
    fn zero_steps_single_record() {
        let f = presets::case1_default_family();
        let v = NonNegVector::new(vec![int(2), int(3)]).unwrap();
        let mut src = SequenceSource::periodic(vec![0]).unwrap();
        let recs = evolve(&f, &v, &mut src, 0, &EvolveOptions::default()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].norm, int(5));
        assert_eq!(recs[0].n, 0);
    }

    #[test]
    fn short_stream_is_rejected() {
        let f = presets::case1_default_family();
        let v = NonNegVector::uniform(2, Mode::Exact);
        let mut src = SequenceSource::from_symbols(vec![0, 1, 0]);
        let err = evolve(&f, &v, &mut src, 5, &EvolveOptions::default()).unwrap_err();
        match err {
            Error::SequenceTooShort { needed, got } => {
                assert_eq!((needed, got), (5, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn live_column_equals_norm_for_ruin_family() {
        let f = presets::case1_default_family();
        let opts = EvolveOptions {
            live_basis: Some(betting_subspace(&f)),
            live_every: 1,
            dh_target: None,
        };
        let v = NonNegVector::uniform(2, Mode::Exact);
        let mut src = SequenceSource::champernowne(2).unwrap();
        let recs = evolve(&f, &v, &mut src, 40, &opts).unwrap();
        for r in &recs {
            assert_eq!(r.live.as_ref().unwrap(), &r.norm, "at step {}", r.n);
        }
    }

    #[test]
    fn projective_distance_contracts() {
        let f = presets::case2_family();
        let x = NonNegVector::new(vec![rat(1, 5), rat(1, 4), rat(3, 10), rat(1, 4)]).unwrap();
        let opts = EvolveOptions {
            live_basis: None,
            live_every: 1,
            dh_target: Some(x),
        };
        let v = NonNegVector::uniform(4, Mode::Exact);
        let mut src = SequenceSource::champernowne(2).unwrap();
        let recs = evolve(&f, &v, &mut src, 120, &opts).unwrap();
        let dhs: Vec<f64> = recs.iter().map(|r| r.dh_to_x.unwrap()).collect();
        assert!(dhs[0].is_finite() && dhs[0] > 0.0);
        for pair in dhs.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "distance expanded: {pair:?}");
        }
        assert!(dhs[dhs.len() - 1] < 1e-8, "no contraction: {}", dhs[dhs.len() - 1]);
    }

    #[test]
    fn float_and_exact_evolutions_agree() {
        let f = presets::case2_family();
        let ff = f.to_float();
        let v = NonNegVector::uniform(4, Mode::Exact);
        let vf = v.to_float();
        let mut s1 = SequenceSource::champernowne(2).unwrap();
        let mut s2 = SequenceSource::champernowne(2).unwrap();
        let exact = evolve(&f, &v, &mut s1, 300, &EvolveOptions::default()).unwrap();
        let float = evolve(&ff, &vf, &mut s2, 300, &EvolveOptions::default()).unwrap();
        for (a, b) in exact.iter().zip(&float) {
            let ea = a.norm.to_f64();
            let eb = b.norm.to_f64();
            assert!((ea - eb).abs() <= 1e-6 * ea.abs().max(1e-300), "step {}: {ea} vs {eb}", a.n);
        }
    }

    #[test]
    fn csv_shape() {
        let f = presets::case1_default_family();
        let v = NonNegVector::uniform(2, Mode::Exact);
        let mut src = SequenceSource::periodic(vec![0, 1]).unwrap();
        let opts = EvolveOptions {
            live_basis: Some(betting_subspace(&f)),
            live_every: 1,
            dh_target: None,
        };
        let recs = evolve(&f, &v, &mut src, 3, &opts).unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,norm,log_norm,support,live,dh_to_x,dead");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,1,"));
        assert!(lines[1].contains("1;2"));
        assert!(lines[1].ends_with(",false"));
    }

    #[test]
    fn synthetic_rate_recovery() {
        // x_n = 5 + 3 e^{-0.2 n}: limit and rate recovered to within 1%.
        let records: Vec<TrajectoryRecord> = (1..=200usize)
            .map(|n| {
                let x = 5.0 + 3.0 * (-0.2 * n as f64).exp();
                TrajectoryRecord {
                    n,
                    norm: Scalar::Float(x),
                    log_norm: x.ln(),
                    support: IndexSet::singleton(0),
                    live: None,
                    dh_to_x: None,
                    dead: false,
                }
            })
            .collect();
        let fit = rate_fit(&records, FitTarget::Norm, None).unwrap();
        assert!((fit.limit - 5.0).abs() < 0.01, "{fit:?}");
        assert!((fit.beta - 0.2).abs() < 0.002, "{fit:?}");
        assert!(!fit.low_confidence, "{fit:?}");
    }

    #[test]
    fn ruin_rate_is_positive_on_champernowne() {
        // Binary digit frequencies converge slowly (shorter numbers are
        // 1-heavy), so a long horizon is needed before the decay dominates.
        let f = presets::case1_default_family().to_float();
        let v = NonNegVector::uniform(2, Mode::float_default());
        let mut src = SequenceSource::champernowne(2).unwrap();
        let recs = evolve(&f, &v, &mut src, 20_000, &EvolveOptions::default()).unwrap();
        let fit = rate_fit(&recs, FitTarget::Norm, Some(0.0)).unwrap();
        assert!(fit.beta > 0.0, "{fit:?}");
        assert!(fit.r_squared > 0.6, "{fit:?}");
    }

    #[test]
    fn constant_series_flagged() {
        let records: Vec<TrajectoryRecord> = (0..50usize)
            .map(|n| TrajectoryRecord {
                n,
                norm: int(7),
                log_norm: 7f64.ln(),
                support: IndexSet::singleton(0),
                live: None,
                dh_to_x: None,
                dead: false,
            })
            .collect();
        let fit = rate_fit(&records, FitTarget::Norm, None).unwrap();
        assert!(fit.low_confidence);
        assert_eq!(fit.beta, 0.0);
        assert!((fit.limit - 7.0).abs() < 1e-12);
    }

    #[test]
    fn dead_series_has_no_signal() {
        let records: Vec<TrajectoryRecord> = (0..30usize)
            .map(|n| TrajectoryRecord {
                n,
                norm: int(0),
                log_norm: f64::NEG_INFINITY,
                support: IndexSet::EMPTY,
                live: None,
                dh_to_x: None,
                dead: true,
            })
            .collect();
        assert!(matches!(
            rate_fit(&records, FitTarget::Norm, None),
            Err(Error::NoSignal(_))
        ));
        assert!(matches!(
            rate_fit(&records, FitTarget::Live, None),
            Err(Error::NoSignal(_))
        ));
    }
}
