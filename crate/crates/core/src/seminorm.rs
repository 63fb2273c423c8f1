//! Weighted sup-norms on functions and coefficient arrays.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::error::{invalid, Error, Result};
use crate::function::SampledFunction;
use crate::transform::CoeffArray;

/// log₂-growth between bands above which a sup is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-3;

/// `ω_λ(x) = max{x, 1/x}^λ`.
pub fn weight(lambda: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(invalid(format!("weight is defined for x > 0, got {x}")));
    }
    Ok(x.max(1.0 / x).powf(lambda))
}

/// Points `x = 2^t`, `t ∈ [−T, T]`, `per_octave` points per unit of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub t_max: f64,
    pub per_octave: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        LogGrid {
            t_max: 20.0,
            per_octave: 64,
        }
    }
}

impl LogGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max >= 2.0) || !self.t_max.is_finite() || self.per_octave == 0 {
            return Err(invalid("log grid needs T >= 2 and at least one point per octave"));
        }
        Ok(())
    }

    pub fn ts(&self) -> Vec<f64> {
        let n = (2.0 * self.t_max * self.per_octave as f64).round() as usize;
        (0..=n).map(|i| -self.t_max + i as f64 / self.per_octave as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NormValue {
    Finite { value: f64 },
    /// `slope` estimates `d log₂(sup)/d|t|` at the outer band; infinite for overflow.
    Divergent { slope: f64 },
}

impl NormValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, NormValue::Finite { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            NormValue::Finite { value } => Some(*value),
            NormValue::Divergent { .. } => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            NormValue::Finite { .. } => "finite",
            NormValue::Divergent { .. } => "divergent",
        }
    }

    pub fn value_or_slope(&self) -> f64 {
        match self {
            NormValue::Finite { value } => *value,
            NormValue::Divergent { slope } => *slope,
        }
    }
}

/// Raw values `x^m |φ^{(m)}(x)|` on a log grid, reusable across weights.
#[derive(Debug, Clone)]
pub struct XTable {
    grid: LogGrid,
    ts: Vec<f64>,
    /// `raw[i][m]`; non-finite entries are stored as `+∞`.
    raw: Vec<Vec<f64>>,
    n: usize,
}

impl XTable {
    pub fn build(f: &SampledFunction, grid: LogGrid, n: usize) -> Result<Self> {
        grid.validate()?;
        if !f.is_regular() {
            return Err(Error::NotRegular(f.name().to_string()));
        }
        if !f.has_derivatives(n) {
            return Err(Error::InsufficientSmoothness {
                needed: n,
                available: f.smoothness().unwrap_or(0),
            });
        }
        let ts = grid.ts();
        let raw = ts
            .par_iter()
            .map(|&t| {
                let x = t.exp2();
                let d = f.derivatives(x, n)?;
                Ok(d.iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let a = x.powi(m as i32) * v.norm();
                        if a.is_finite() {
                            a
                        } else {
                            f64::INFINITY
                        }
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(XTable { grid, ts, raw, n })
    }

    pub fn n_max(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> LogGrid {
        self.grid
    }

    /// `max_{m≤n} sup_x ω_λ(x) x^m |φ^{(m)}(x)|` with the divergence verdict.
    pub fn x_norm(&self, lambda: f64, n: usize) -> Result<NormValue> {
        if n > self.n {
            return Err(Error::InsufficientSmoothness { needed: n, available: self.n });
        }
        let edge = self.grid.t_max - 1.0;
        let (mut rest, mut out_l, mut out_r, mut prev_l, mut prev_r) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (t, row) in self.ts.iter().zip(&self.raw) {
            let a = row[..=n].iter().copied().fold(0.0, f64::max);
            // ω_λ(2^t) = 2^{λ|t|}
            let v = if a == 0.0 { 0.0 } else { a * (lambda * t.abs()).exp2() };
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if *t < -edge {
                out_l = out_l.max(v);
            } else if *t > edge {
                out_r = out_r.max(v);
            } else {
                rest = rest.max(v);
                if *t < -edge + 1.0 {
                    prev_l = prev_l.max(v);
                }
                if *t > edge - 1.0 {
                    prev_r = prev_r.max(v);
                }
            }
        }
        let growth = |outer: f64, prev: f64| -> Option<f64> {
            if outer.is_infinite() {
                return Some(f64::INFINITY);
            }
            if outer == 0.0 || (rest > 0.0 && (outer / rest).log2() <= DIVERGENCE_THRESHOLD) {
                return None;
            }
            if rest.is_infinite() {
                return None;
            }
            Some(if prev > 0.0 { (outer / prev).log2() } else { f64::INFINITY })
        };
        if rest.is_infinite() {
            return Ok(NormValue::Divergent { slope: f64::INFINITY });
        }
        match (growth(out_l, prev_l), growth(out_r, prev_r)) {
            (None, None) => Ok(NormValue::Finite { value: rest.max(out_l).max(out_r) }),
            (a, b) => Ok(NormValue::Divergent {
                slope: a.unwrap_or(f64::NEG_INFINITY).max(b.unwrap_or(f64::NEG_INFINITY)),
            }),
        }
    }
}

pub fn x_norm(f: &SampledFunction, lambda: f64, n: usize, grid: LogGrid) -> Result<NormValue> {
    XTable::build(f, grid, n)?.x_norm(lambda, n)
}

/// `sup_{(j,k)} 2^{λ|j|} (1+|k|)^n |c_{j,k}|`; negative `n` gives the dual weights.
pub fn y_norm(c: &CoeffArray, lambda: f64, n: i32) -> f64 {
    let mut m: f64 = 0.0;
    for (idx, v) in c.window.indices().zip(&c.values) {
        let a = v.norm();
        if a == 0.0 {
            continue;
        }
        let w = (lambda * idx.j.unsigned_abs() as f64).exp2() * (1.0 + idx.k.unsigned_abs() as f64).powi(n);
        m = m.max(w * a);
    }
    m
}

/// `sup_k (1+|k|)^n |c_k|` for a row centred at `k = 0` (odd length).
pub fn s_norm(row: &[Complex64], n: i32) -> f64 {
    let half = (row.len() / 2) as i64;
    row.iter()
        .enumerate()
        .map(|(i, v)| (1.0 + (i as i64 - half).unsigned_abs() as f64).powi(n) * v.norm())
        .fold(0.0, f64::max)
}

fn cn_points(k: Interval, breakpoints: &[f64]) -> Vec<f64> {
    let n = ((k.len() * 256.0).ceil() as usize).max(1);
    let mut xs: Vec<f64> = (0..=n).map(|i| k.lo + k.len() * i as f64 / n as f64).collect();
    xs.extend(breakpoints.iter().copied().filter(|&b| b > k.lo && b < k.hi));
    xs
}

/// `max_{m≤n} sup_{x∈K} |φ^{(m)}(x)|` on a grid of 256 points per unit plus breakpoints.
pub fn cn_seminorm(f: &SampledFunction, k: Interval, n: usize) -> Result<f64> {
    k.check_compact_positive()?;
    let pts = cn_points(k, &f.breakpoints());
    let mut m: f64 = 0.0;
    for x in pts {
        for v in f.derivatives(x, n)? {
            m = m.max(v.norm());
        }
    }
    Ok(m)
}

/// `‖φ(2^j ·)‖_{C^n_K} = max_m 2^{jm} sup_{x∈K} |φ^{(m)}(2^j x)|`.
pub fn scaled_cn_seminorm(f: &SampledFunction, j: i32, k: Interval, n: usize) -> Result<f64> {
    k.check_compact_positive()?;
    let s = (j as f64).exp2();
    let bps: Vec<f64> = f.breakpoints().iter().map(|b| b / s).collect();
    let mut m: f64 = 0.0;
    for x in cn_points(k, &bps) {
        let d = f.derivatives(s * x, n)?;
        for (mm, v) in d.iter().enumerate() {
            m = m.max(s.powi(mm as i32) * v.norm());
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub n: i32,
    pub value: NormValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSweep {
    pub entries: Vec<SweepEntry>,
}

impl NormSweep {
    pub fn get(&self, lambda: f64, n: i32) -> Option<NormValue> {
        self.entries
            .iter()
            .find(|e| e.n == n && (e.lambda - lambda).abs() < 1e-12)
            .map(|e| e.value)
    }

    /// CSV with columns `lambda,n,status,value_or_slope`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lambda", "n", "status", "value_or_slope"])?;
        for e in &self.entries {
            wr.write_record(&[
                e.lambda.to_string(),
                e.n.to_string(),
                e.value.status().to_string(),
                format!("{:e}", e.value.value_or_slope()),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// X-norms over a `(λ, n)` grid; `n` values must not exceed the smoothness of `f`.
pub fn x_sweep(f: &SampledFunction, grid: LogGrid, lambdas: &[f64], ns: &[usize]) -> Result<NormSweep> {
    let top = ns.iter().copied().max().unwrap_or(0);
    let table = XTable::build(f, grid, top)?;
    let mut entries = vec![];
    for &n in ns {
        for &l in lambdas {
            entries.push(SweepEntry { lambda: l, n: n as i32, value: table.x_norm(l, n)? });
        }
    }
    Ok(NormSweep { entries })
}

pub fn y_sweep(c: &CoeffArray, lambdas: &[f64], ns: &[i32]) -> NormSweep {
    let mut entries = vec![];
    for &n in ns {
        for &l in lambdas {
            entries.push(SweepEntry {
                lambda: l,
                n,
                value: NormValue::Finite { value: y_norm(c, l, n) },
            });
        }
    }
    NormSweep { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisIndex, IndexWindow};
    use crate::jet::Jet;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn jet_fn(name: &str, g: fn(Jet) -> Jet) -> SampledFunction {
        SampledFunction::smooth(name, move |x, n| g(Jet::variable(x, n)).derivatives().into_iter().map(c).collect())
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(1.0, 2.0).unwrap(), 2.0);
        assert_eq!(weight(-1.0, 0.25).unwrap(), 0.25);
        assert_eq!(weight(0.0, 123.0).unwrap(), 1.0);
        assert!(weight(1.0, 0.0).is_err());
        assert!(weight(1.0, -1.0).is_err());
    }

    #[test]
    fn x_norm_identity() {
        let f = jet_fn("x", |x| x);
        let v = x_norm(&f, -1.0, 0, LogGrid::default()).unwrap();
        assert!((v.value().unwrap() - 1.0).abs() < 1e-15, "{v:?}");
        let v = x_norm(&f, 0.0, 0, LogGrid::default()).unwrap();
        assert!(matches!(v, NormValue::Divergent { slope } if (slope - 1.0).abs() < 1e-9));
    }

    #[test]
    fn x_norm_schwartz_and_exp() {
        let s = jet_fn("schwartz", |x| {
            let e = (&x + &x.recip()).scale(-1.0);
            e.exp()
        });
        assert!(x_norm(&s, 5.0, 0, LogGrid::default()).unwrap().is_finite());
        let e = jet_fn("exp", |x| x.exp());
        for g in [0.5, 3.0, 10.0] {
            let v = x_norm(&e, -g, 0, LogGrid::default()).unwrap();
            assert!(matches!(v, NormValue::Divergent { slope } if slope.is_infinite()), "{v:?}");
        }
    }

    #[test]
    fn x_norm_monotone_in_n() {
        let f = jet_fn("sin", |x| x.sin_cos().0);
        let t = XTable::build(&f, LogGrid::default(), 3).unwrap();
        let a = t.x_norm(-4.0, 1).unwrap().value().unwrap();
        let b = t.x_norm(-4.0, 2).unwrap().value().unwrap();
        assert!(b >= a);
    }

    #[test]
    fn x_norm_requires_smoothness() {
        let f = SampledFunction::piecewise("chi", |_| c(1.0), vec![]).with_support(Interval::new(1.0, 2.0));
        assert!(matches!(x_norm(&f, 0.0, 1, LogGrid::default()), Err(Error::InsufficientSmoothness { .. })));
        assert!(x_norm(&f, 0.0, 0, LogGrid::default()).unwrap().is_finite());
    }

    #[test]
    fn y_norm_examples() {
        let w = IndexWindow::new(-4, 4, 8).unwrap();
        let e0 = CoeffArray::unit(w, BasisIndex::new(0, 0), "x").unwrap();
        for (l, n) in [(0.0, 0), (3.0, 2), (-2.0, 5)] {
            assert_eq!(y_norm(&e0, l, n), 1.0);
        }
        let e32 = CoeffArray::unit(w, BasisIndex::new(3, 2), "x").unwrap();
        assert_eq!(y_norm(&e32, 1.0, 2), 72.0);
    }

    #[test]
    fn s_norm_examples() {
        let mut row = vec![c(0.0); 21];
        row[10] = c(1.0);
        assert_eq!(s_norm(&row, 4), 1.0);
        let mut row = vec![c(0.0); 21];
        row[15] = c(1.0);
        assert_eq!(s_norm(&row, 1), 6.0);
        let geo: Vec<Complex64> = (-32i32..=32).map(|k| c((-(k.abs() as f64)).exp2())).collect();
        // enumeration: (1+|k|)^3 2^{-|k|} peaks at |k| = 3 with value 8
        assert_eq!(s_norm(&geo, 3), 8.0);
    }

    #[test]
    fn cn_examples() {
        let one = SampledFunction::smooth("1", |_, n| {
            let mut v = vec![c(0.0); n + 1];
            v[0] = c(1.0);
            v
        });
        assert_eq!(cn_seminorm(&one, Interval::new(1.0, 5.0), 2).unwrap(), 1.0);
        let sq = jet_fn("x^2", |x| &x * &x);
        assert!((cn_seminorm(&sq, Interval::new(1.0, 2.0), 2).unwrap() - 4.0).abs() < 1e-14);
        let s = jet_fn("sin", |x| x.sin_cos().0);
        let v = cn_seminorm(&s, Interval::new(1.0, 1.0 + std::f64::consts::PI), 1).unwrap();
        assert!((v - 1.0).abs() < 1e-4);
        assert!(v <= 1.0);
    }

    #[test]
    fn scaled_cn_matches_dilation() {
        let f = jet_fn("x^3", |x| &(&x * &x) * &x);
        let k = Interval::new(1.0, 2.0);
        let a = scaled_cn_seminorm(&f, 2, k, 2).unwrap();
        let b = cn_seminorm(&f.dilated(4.0).unwrap(), k, 2).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn sweep_csv() {
        let f = jet_fn("x", |x| x);
        let s = x_sweep(&f, LogGrid::default(), &[-1.0, 0.0], &[0, 1]).unwrap();
        let mut buf = vec![];
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "lambda,n,status,value_or_slope");
        assert_eq!(text.lines().count(), 5);
        assert!(s.get(-1.0, 0).unwrap().is_finite());
        assert!(!s.get(0.0, 1).unwrap().is_finite());
    }
}
