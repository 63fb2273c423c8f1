//! Analysis map, truncated synthesis, Gram matrices and L² diagnostics.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{eval_psi_derivatives, modulation, psi_unchecked, support, BasisIndex, IndexWindow, Interval};
use crate::bell::{BellProfile, Smoothness};
use crate::error::{invalid, Error, Result};
use crate::function::SampledFunction;
use crate::quadrature::{integrate, integrate_fourier_family, l2_error, L2Error, QuadSpec};

/// Coefficients `c_{j,k}` over a finite window, stored row-major (ascending `j`, then `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffArray {
    pub window: IndexWindow,
    pub values: Vec<Complex64>,
    pub bell_id: String,
    pub tol: f64,
    /// Entries whose quadrature did not meet the tolerance.
    pub nonconvergent: Vec<BasisIndex>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoeffFile {
    window: IndexWindow,
    bell_id: String,
    data: Vec<[f64; 2]>,
    tol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    nonconvergent: Vec<BasisIndex>,
}

impl CoeffArray {
    pub fn zeros(window: IndexWindow, bell_id: impl Into<String>, tol: f64) -> Self {
        CoeffArray {
            window,
            values: vec![Complex64::new(0.0, 0.0); window.len()],
            bell_id: bell_id.into(),
            tol,
            nonconvergent: vec![],
        }
    }

    pub fn unit(window: IndexWindow, idx: BasisIndex, bell_id: impl Into<String>) -> Result<Self> {
        if !window.contains(idx) {
            return Err(invalid(format!("index ({}, {}) outside window", idx.j, idx.k)));
        }
        let mut c = Self::zeros(window, bell_id, 0.0);
        c.values[window.offset(idx)] = Complex64::new(1.0, 0.0);
        Ok(c)
    }

    pub fn get(&self, j: i32, k: i64) -> Option<Complex64> {
        let idx = BasisIndex::new(j, k);
        self.window.contains(idx).then(|| self.values[self.window.offset(idx)])
    }

    /// Row `j` as `k = −k_max..=k_max`.
    pub fn row(&self, j: i32) -> Option<&[Complex64]> {
        if j < self.window.j_min || j > self.window.j_max {
            return None;
        }
        let n = self.window.row_len();
        let start = (j - self.window.j_min) as usize * n;
        Some(&self.values[start..start + n])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_converged(&self) -> bool {
        self.nonconvergent.is_empty()
    }

    /// Entrywise `alpha·self + beta·other`.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        if self.window != other.window {
            return Err(invalid("coefficient windows differ"));
        }
        let mut out = self.clone();
        for (o, v) in out.values.iter_mut().zip(&other.values) {
            *o = alpha * *o + beta * v;
        }
        out.nonconvergent.extend(other.nonconvergent.iter().copied());
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self.to_file())?)
    }

    fn to_file(&self) -> CoeffFile {
        CoeffFile {
            window: self.window,
            bell_id: self.bell_id.clone(),
            data: self.values.iter().map(|v| [v.re, v.im]).collect(),
            tol: self.tol,
            nonconvergent: self.nonconvergent.clone(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: CoeffFile = serde_json::from_str(s)?;
        Self::from_json_value_inner(f)
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let f: CoeffFile = serde_json::from_value(v.clone())?;
        Self::from_json_value_inner(f)
    }

    fn from_json_value_inner(f: CoeffFile) -> Result<Self> {
        let window = IndexWindow::new(f.window.j_min, f.window.j_max, f.window.k_max)?;
        if f.data.len() != window.len() {
            return Err(invalid(format!(
                "coefficient data has {} entries, window needs {}",
                f.data.len(),
                window.len()
            )));
        }
        Ok(CoeffArray {
            window,
            values: f.data.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            bell_id: f.bell_id,
            tol: f.tol,
            nonconvergent: f.nonconvergent,
        })
    }

    /// CSV with columns `j,k,re,im,abs`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "k", "re", "im", "abs"])?;
        for (idx, v) in self.window.indices().zip(&self.values) {
            wr.write_record(&[
                idx.j.to_string(),
                idx.k.to_string(),
                format!("{:e}", v.re),
                format!("{:e}", v.im),
                format!("{:e}", v.norm()),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn row_breakpoints(b: &BellProfile, j: i32, f: &SampledFunction) -> Vec<f64> {
    let s = (j as f64).exp2();
    let mut bp: Vec<f64> = b.breakpoints().iter().map(|u| u * s).collect();
    bp.extend(f.breakpoints());
    bp
}

/// Pairing of a point-mass combination with `conj(ψ_{j,k})`.
fn point_mass_entry(f: &SampledFunction, b: &BellProfile, idx: BasisIndex) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in f.point_mass_list().unwrap_or(&[]) {
        let p = m.order as usize;
        if let Smoothness::Finite(d) = b.smoothness_order() {
            if p > d && d > 0 {
                return Err(Error::InsufficientSmoothness { needed: p, available: d });
            }
        }
        let d = eval_psi_derivatives(b, idx, m.location, p)?;
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        acc += d[p].conj() * (sign * m.weight);
    }
    Ok(acc)
}

fn analyze_row(f: &SampledFunction, b: &BellProfile, j: i32, k_max: u32, spec: &QuadSpec) -> Result<(Vec<Complex64>, Vec<bool>)> {
    let n = 2 * k_max as usize + 1;
    if !f.is_regular() {
        let mut vals = Vec::with_capacity(n);
        for k in -(k_max as i64)..=k_max as i64 {
            vals.push(point_mass_entry(f, b, BasisIndex::new(j, k))?);
        }
        return Ok((vals, vec![true; n]));
    }
    let row_sup = support(b, j);
    let iv = match f.support() {
        Some(fs) => row_sup.intersect(&fs),
        None => Some(row_sup),
    };
    let Some(iv) = iv else {
        return Ok((vec![Complex64::new(0.0, 0.0); n], vec![true; n]));
    };
    let s = (-j as f64).exp2();
    let amp = SQRT_2 * s.sqrt();
    let h = |x: f64| {
        let bv = b.eval(x * s);
        if bv == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        f.value_unchecked(x) * (amp * bv)
    };
    let res = integrate_fourier_family(h, iv, s, k_max, f.freq_bound(iv), &row_breakpoints(b, j, f), spec)?;
    Ok((res.iter().map(|r| r.value).collect(), res.iter().map(|r| r.converged).collect()))
}

/// `c_{j,k} = ∫ f·conj(ψ_{j,k})`, or the point-mass formula for distributions.
pub fn analyze(f: &SampledFunction, b: &BellProfile, w: IndexWindow, spec: &QuadSpec) -> Result<CoeffArray> {
    spec.validate()?;
    let rows: Vec<Result<(Vec<Complex64>, Vec<bool>)>> =
        w.scales().collect::<Vec<_>>().into_par_iter().map(|j| analyze_row(f, b, j, w.k_max, spec)).collect();
    let mut out = CoeffArray::zeros(w, b.id(), spec.tol);
    out.values.clear();
    for (row, j) in rows.into_iter().zip(w.scales()) {
        let (vals, conv) = row?;
        for (k, ok) in w.ks().zip(&conv) {
            if !ok {
                out.nonconvergent.push(BasisIndex::new(j, k));
            }
        }
        out.values.extend(vals);
    }
    Ok(out)
}

/// `Σ_{(j,k)∈w} c_{j,k} ψ_{j,k}(x)`, ascending `j`, then ascending `k`.
pub fn synthesize(c: &CoeffArray, b: &BellProfile, x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    if !(x > 0.0) {
        return acc;
    }
    for j in c.window.scales() {
        let sup = support(b, j);
        if x < sup.lo || x > sup.hi {
            continue;
        }
        let row = c.row(j).expect("scale in window");
        for (k, v) in c.window.ks().zip(row) {
            if v.re != 0.0 || v.im != 0.0 {
                acc += v * psi_unchecked(b, BasisIndex::new(j, k), x);
            }
        }
    }
    acc
}

/// `[s(x), s'(x), …, s^{(n)}(x)]` for the truncated synthesis `s`.
pub fn synthesize_derivatives(c: &CoeffArray, b: &BellProfile, x: f64, n: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); n + 1];
    if !(x > 0.0) {
        return acc;
    }
    for j in c.window.scales() {
        let sup = support(b, j);
        if x < sup.lo || x > sup.hi {
            continue;
        }
        let row = c.row(j).expect("scale in window");
        for (k, v) in c.window.ks().zip(row) {
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let d = eval_psi_derivatives(b, BasisIndex::new(j, k), x, n).expect("x > 0");
            for (a, dv) in acc.iter_mut().zip(&d) {
                *a += v * dv;
            }
        }
    }
    acc
}

impl SampledFunction {
    /// The truncated synthesis of `c` as an input function.
    pub fn from_synthesis(c: &CoeffArray, b: &BellProfile) -> Self {
        let c = Arc::new(c.clone());
        let b = Arc::new(b.clone());
        let nonzero: Vec<i32> = c
            .window
            .scales()
            .filter(|&j| c.row(j).is_some_and(|r| r.iter().any(|v| v.norm() > 0.0)))
            .collect();
        let lo = nonzero.iter().map(|&j| support(&b, j).lo).fold(f64::INFINITY, f64::min);
        let hi = nonzero.iter().map(|&j| support(&b, j).hi).fold(0.0, f64::max);
        let mut bps = vec![];
        for &j in &nonzero {
            let s = (j as f64).exp2();
            bps.extend(b.breakpoints().iter().map(|u| u * s));
            let sup = support(&b, j);
            bps.push(sup.lo);
            bps.push(sup.hi);
        }
        let smooth = match b.smoothness_order() {
            Smoothness::Finite(d) => Some(d),
            Smoothness::Infinite => None,
        };
        let (c1, b1, c2, b2) = (c.clone(), b.clone(), c.clone(), b.clone());
        let km = c.window.k_max as f64;
        let rows = nonzero.clone();
        let bb = b.clone();
        let mut f = SampledFunction::piecewise("synthesis", move |x| synthesize(&c1, &b1, x), bps)
            .with_derivatives(move |x, n| synthesize_derivatives(&c2, &b2, x, n), smooth)
            .with_freq_bound(move |iv: Interval| {
                rows.iter()
                    .filter(|&&j| support(&bb, j).intersect(&iv).is_some())
                    .map(|&j| km * (-j as f64).exp2())
                    .fold(0.0, f64::max)
            })
            .complex_valued();
        if !nonzero.is_empty() {
            f = f.with_support(Interval::new(lo, hi));
        }
        f
    }
}

/// Dense Hermitian Gram matrix `G[(j,k),(j',k')] = ∫ ψ_{j,k}·conj(ψ_{j',k'})`, row-major in window order.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub window: IndexWindow,
    pub entries: Vec<Complex64>,
    pub nonconvergent: usize,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn get(&self, a: BasisIndex, b: BasisIndex) -> Complex64 {
        self.entries[self.window.offset(a) * self.dim() + self.window.offset(b)]
    }

    /// `max |G − I|` over off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    m = m.max(self.entries[r * n + c].norm());
                }
            }
        }
        m
    }

    pub fn max_diagonal_defect(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|i| (self.entries[i * n + i] - 1.0).norm()).fold(0.0, f64::max)
    }

    pub fn max_identity_defect(&self) -> f64 {
        self.max_off_diagonal().max(self.max_diagonal_defect())
    }
}

/// Single Gram entry.
pub fn gram_entry(b: &BellProfile, p: BasisIndex, q: BasisIndex, spec: &QuadSpec) -> Result<(Complex64, bool)> {
    let Some(iv) = support(b, p.j).intersect(&support(b, q.j)) else {
        return Ok((Complex64::new(0.0, 0.0), true));
    };
    let (sp, sq) = ((-p.j as f64).exp2(), (-q.j as f64).exp2());
    let freq = (p.k as f64 * sp - q.k as f64 * sq).abs();
    let mut bps: Vec<f64> = b.breakpoints().iter().flat_map(|u| [u / sp, u / sq]).collect();
    bps.extend([iv.lo, iv.hi]);
    let amp = 2.0 * (sp * sq).sqrt();
    let r = integrate(
        |x| {
            let u = b.eval(x * sp) * b.eval(x * sq);
            if u == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            modulation(p.k, x, sp) * modulation(q.k, x, sq).conj() * (amp * u)
        },
        iv,
        freq,
        &bps,
        spec,
    )?;
    Ok((r.value, r.converged))
}

/// Gram matrix over `w`; only pairs with overlapping supports are integrated.
pub fn gram(b: &BellProfile, w: IndexWindow, spec: &QuadSpec) -> Result<GramMatrix> {
    spec.validate()?;
    let idx: Vec<BasisIndex> = w.indices().collect();
    let n = idx.len();
    let rows: Vec<Result<Vec<(Complex64, bool)>>> = (0..n)
        .into_par_iter()
        .map(|r| {
            (r..n)
                .map(|c| gram_entry(b, idx[r], idx[c], spec))
                .collect::<Result<Vec<_>>>()
        })
        .collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    let mut nonconv = 0;
    for (r, row) in rows.into_iter().enumerate() {
        for (off, (v, ok)) in row?.into_iter().enumerate() {
            let c = r + off;
            entries[r * n + c] = v;
            entries[c * n + r] = v.conj();
            if !ok {
                nonconv += 1;
            }
        }
    }
    Ok(GramMatrix { window: w, entries, nonconvergent: nonconv })
}

/// `‖f‖²` over the declared support of a regular `f`.
pub fn l2_norm_sq(f: &SampledFunction, spec: &QuadSpec) -> Result<f64> {
    let sup = f
        .support()
        .ok_or_else(|| invalid("L2 norm needs a function with declared compact support"))?;
    let r = integrate(
        |x| Complex64::new(f.value_unchecked(x).norm_sqr(), 0.0),
        sup,
        2.0 * f.freq_bound(sup),
        &f.breakpoints(),
        spec,
    )?;
    Ok(r.value.re)
}

/// `| Σ_w |c_{j,k}|² − ‖f‖² |`.
pub fn parseval_defect(f: &SampledFunction, b: &BellProfile, w: IndexWindow, spec: &QuadSpec) -> Result<f64> {
    if !f.is_regular() {
        return Err(Error::NotRegular(f.name().to_string()));
    }
    let norm = l2_norm_sq(f, spec)?;
    let c = analyze(f, b, w, spec)?;
    let energy: f64 = c.values.iter().map(|v| v.norm_sqr()).sum();
    Ok((energy - norm).abs())
}

/// `‖f − synthesize(analyze(f))‖_{L²(K)}`.
pub fn reconstruction_error(f: &SampledFunction, b: &BellProfile, w: IndexWindow, k: Interval, spec: &QuadSpec) -> Result<L2Error> {
    k.check_compact_positive()?;
    if !f.is_regular() {
        return Err(Error::NotRegular(f.name().to_string()));
    }
    let c = analyze(f, b, w, spec)?;
    let mut bps = f.breakpoints();
    let mut freq = f.freq_bound(k);
    for j in w.scales() {
        let sup = support(b, j);
        if sup.intersect(&k).is_some() {
            let s = (j as f64).exp2();
            bps.extend(b.breakpoints().iter().map(|u| u * s));
            bps.extend([sup.lo, sup.hi]);
            freq = freq.max(w.k_max as f64 / s);
        }
    }
    l2_error(|x| f.value_unchecked(x), |x| synthesize(&c, b, x), k, &bps, freq, spec)
}

/// Analytic tail `Σ_{|k|>K} |ĝ(k)|²` bound for a function on one unit block with a jump of size `jump`: `jump²·2/(4π²K)`.
pub fn fourier_tail_bound(jump: f64, k_max: u32) -> f64 {
    jump * jump * 2.0 / (4.0 * PI * PI * k_max as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{make_meyer, make_shannon};

    fn chi12() -> SampledFunction {
        SampledFunction::piecewise("chi12", |_| Complex64::new(1.0, 0.0), vec![]).with_support(Interval::new(1.0, 2.0))
    }

    fn ramp12() -> SampledFunction {
        SampledFunction::piecewise("ramp12", |x| Complex64::new(x, 0.0), vec![]).with_support(Interval::new(1.0, 2.0))
    }

    fn psi_fn(b: &BellProfile, j: i32, k: i64) -> SampledFunction {
        let b = b.clone();
        let s = (j as f64).exp2();
        let sup = support(&b, j);
        let bp: Vec<f64> = b.breakpoints().iter().map(|u| u * s).collect();
        SampledFunction::piecewise("psi", move |x| psi_unchecked(&b, BasisIndex::new(j, k), x), bp)
            .with_support(sup)
            .with_freq_bound(move |_| k.unsigned_abs() as f64 / s)
            .complex_valued()
    }

    fn w(jmin: i32, jmax: i32, kmax: u32) -> IndexWindow {
        IndexWindow::new(jmin, jmax, kmax).unwrap()
    }

    #[test]
    fn shannon_indicator_is_unit_vector() {
        let c = analyze(&chi12(), &make_shannon(), w(-3, 3, 16), &QuadSpec::default()).unwrap();
        for (idx, v) in c.window.indices().zip(&c.values) {
            let want = if idx.j == 0 && idx.k == 0 { 1.0 } else { 0.0 };
            assert!((v - want).norm() <= 1e-12, "{idx:?} {v}");
        }
        assert!(c.is_converged());
    }

    #[test]
    fn shannon_psi_is_unit_vector() {
        let b = make_shannon();
        let c = analyze(&psi_fn(&b, 1, 3), &b, w(-2, 2, 8), &QuadSpec::default()).unwrap();
        for (idx, v) in c.window.indices().zip(&c.values) {
            let want = if idx.j == 1 && idx.k == 3 { 1.0 } else { 0.0 };
            assert!((v - want).norm() <= 1e-10, "{idx:?} {v}");
        }
    }

    #[test]
    fn meyer_point_mass_coefficients() {
        let b = make_meyer();
        let d = SampledFunction::point_mass(1.0, 0).unwrap();
        let c = analyze(&d, &b, w(-3, 3, 8), &QuadSpec::default()).unwrap();
        for j in -3..=3 {
            let row = c.row(j).unwrap();
            let expect = SQRT_2 * (-j as f64 / 2.0).exp2() * b.eval((-j as f64).exp2());
            for v in row {
                assert!((v.norm() - expect).abs() < 1e-14);
            }
            assert_eq!(expect > 0.0, j == 0 || j == 1, "j={j}");
        }
        assert!((c.get(1, 3).unwrap() - psi_unchecked(&b, BasisIndex::new(1, 3), 1.0).conj()).norm() < 1e-15);
    }

    #[test]
    fn point_mass_derivative_sign() {
        let b = make_meyer();
        let d = SampledFunction::point_mass(1.0, 1).unwrap();
        let c = analyze(&d, &b, w(0, 0, 2), &QuadSpec::default()).unwrap();
        let dp = eval_psi_derivatives(&b, BasisIndex::new(0, 2), 1.0, 1).unwrap();
        assert!((c.get(0, 2).unwrap() + dp[1].conj()).norm() < 1e-14);
    }

    #[test]
    fn synthesis_of_unit_vectors() {
        let b = make_meyer();
        let c = CoeffArray::unit(w(-1, 2, 4), BasisIndex::new(1, -3), b.id()).unwrap();
        for x in [0.5, 1.0, 1.7, 2.2] {
            let v = synthesize(&c, &b, x);
            assert!((v - psi_unchecked(&b, BasisIndex::new(1, -3), x)).norm() < 1e-15);
        }
        let s = make_shannon();
        let c = CoeffArray::unit(w(0, 0, 0), BasisIndex::new(0, 0), s.id()).unwrap();
        assert!((synthesize(&c, &s, 1.5).re - 1.0).abs() < 1e-15);
        assert_eq!(synthesize(&c, &s, 2.5).norm(), 0.0);
    }

    #[test]
    fn shannon_roundtrip_indicator() {
        let b = make_shannon();
        let spec = QuadSpec::default();
        let c = analyze(&chi12(), &b, w(-2, 2, 8), &spec).unwrap();
        for x in [1.1, 1.5, 1.9] {
            assert!((synthesize(&c, &b, x) - 1.0).norm() < 1e-10);
        }
        for x in [0.5, 2.5, 3.9] {
            assert!(synthesize(&c, &b, x).norm() < 1e-10);
        }
        let e = reconstruction_error(&chi12(), &b, w(-2, 2, 8), Interval::new(1.0, 2.0), &spec).unwrap();
        assert!(e.value <= 1e-10, "{e:?}");
    }

    #[test]
    fn shannon_reconstruct_psi05() {
        let b = make_shannon();
        let e = reconstruction_error(&psi_fn(&b, 0, 5), &b, w(-1, 1, 8), Interval::new(1.0, 2.0), &QuadSpec::default()).unwrap();
        assert!(e.value <= 1e-10);
    }

    #[test]
    fn shannon_ramp_parseval_and_reconstruction() {
        let b = make_shannon();
        let spec = QuadSpec::default();
        let d64 = parseval_defect(&ramp12(), &b, w(0, 0, 64), &spec).unwrap();
        let d128 = parseval_defect(&ramp12(), &b, w(0, 0, 128), &spec).unwrap();
        assert!(d64 <= fourier_tail_bound(1.0, 64), "{d64}");
        assert!(d128 <= d64);
        // exact tail: 2 Σ_{k>64} 1/(4π²k²)
        let n = 100_000u32;
        let head: f64 = (65..=n).map(|k| 1.0 / (k as f64).powi(2)).sum();
        let exact = (head + 1.0 / (n as f64 + 0.5)) / (2.0 * PI * PI);
        assert!((d64 - exact).abs() < 1e-8, "{d64} vs {exact}");
        let e = reconstruction_error(&ramp12(), &b, w(0, 0, 64), Interval::new(1.1, 1.9), &spec).unwrap();
        assert!(e.value <= 0.01, "{e:?}");
    }

    #[test]
    fn parseval_zero_function() {
        let z = SampledFunction::piecewise("zero", |_| Complex64::new(0.0, 0.0), vec![]).with_support(Interval::new(1.0, 2.0));
        assert_eq!(parseval_defect(&z, &make_meyer(), w(-1, 1, 4), &QuadSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn shannon_gram_identity() {
        let g = gram(&make_shannon(), w(-2, 2, 6), &QuadSpec::default()).unwrap();
        assert!(g.max_identity_defect() <= 1e-8);
    }

    #[test]
    fn meyer_gram_negative_control() {
        let b = make_meyer();
        let g = gram(&b, w(-1, 1, 3), &QuadSpec::default()).unwrap();
        assert!(g.max_diagonal_defect() <= 1e-8);
        let v = g.get(BasisIndex::new(0, 0), BasisIndex::new(1, 0));
        let oracle = integrate(
            |u| Complex64::new(SQRT_2 * b.eval(u) * b.eval(u / 2.0), 0.0),
            Interval::new(2.0 / 3.0, 4.0 / 3.0),
            0.0,
            &[2.0 / 3.0, 4.0 / 3.0],
            &QuadSpec::default(),
        )
        .unwrap();
        assert!(v.im.abs() < 1e-12 && v.re > 0.01);
        assert!((v.re - oracle.value.re).abs() < 1e-10);
    }

    #[test]
    fn conjugation_and_scale_covariance() {
        let b = make_meyer();
        let spec = QuadSpec::default();
        let f = SampledFunction::piecewise("x e^-x", |x| Complex64::new(x * (-x).exp(), 0.0), vec![])
            .with_support(Interval::new(0.4, 3.0));
        let c = analyze(&f, &b, w(-2, 3, 12), &spec).unwrap();
        for j in -2..=3 {
            for k in 1..=12 {
                assert!((c.get(j, -k).unwrap() - c.get(j, k).unwrap().conj()).norm() <= 1e-10);
            }
        }
        let g = f.dilated(2.0).unwrap();
        let d = analyze(&g, &b, w(-2, 2, 12), &spec).unwrap();
        for j in -2..=2 {
            for k in -12..=12 {
                let want = c.get(j + 1, k).unwrap() / SQRT_2;
                assert!((d.get(j, k).unwrap() - want).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn json_and_csv_roundtrip() {
        let c = analyze(&ramp12(), &make_meyer(), w(-1, 1, 3), &QuadSpec::default()).unwrap();
        let back = CoeffArray::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let mut buf = vec![];
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,k,re,im,abs\n"));
        assert_eq!(text.lines().count(), 1 + c.window.len());
    }

    #[test]
    fn from_synthesis_matches() {
        let b = make_meyer();
        let c = analyze(&ramp12(), &b, w(-1, 2, 6), &QuadSpec::default()).unwrap();
        let f = SampledFunction::from_synthesis(&c, &b);
        let x = 1.37;
        assert!((f.value(x).unwrap() - synthesize(&c, &b, x)).norm() < 1e-15);
        let d = f.derivatives(x, 2).unwrap();
        let h = 1e-4;
        let fd = (synthesize(&c, &b, x + h) - synthesize(&c, &b, x - h)) / (2.0 * h);
        assert!((d[1] - fd).norm() < 1e-5 * (1.0 + d[1].norm()));
    }
}
