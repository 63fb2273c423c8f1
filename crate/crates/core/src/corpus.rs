//! Reference inputs with closed-form derivatives and expected table verdicts.

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{IndexWindow, Interval};
use crate::classify::Flags;
use crate::error::{Error, Result};
use crate::function::{PointMass, SampledFunction};
use crate::jet::Jet;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub description: String,
    pub function: SampledFunction,
    /// Closed under the inclusion chain.
    pub expected: Flags,
    /// `None` for every order.
    pub derivative_order: Option<usize>,
    /// Window on which the coefficient side is probed.
    pub probe_window: IndexWindow,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub id: String,
    pub description: String,
    pub expected: Vec<&'static str>,
    pub probe_window: IndexWindow,
}

fn real(v: Vec<f64>) -> Vec<Complex64> {
    v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
}

fn zeros(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); n + 1]
}

fn window(jmin: i32, jmax: i32, kmax: u32) -> IndexWindow {
    IndexWindow::new(jmin, jmax, kmax).expect("static window")
}

fn closure(name: &str) -> Flags {
    Flags::from_names(&[name]).closed()
}

/// `e^{−1/((x−lo)(hi−x))}` on `(lo, hi)`.
pub fn bump(lo: f64, hi: f64) -> SampledFunction {
    SampledFunction::smooth(format!("bump[{lo},{hi}]"), move |x, n| {
        if x <= lo || x >= hi {
            return zeros(n);
        }
        let q = (x - lo) * (hi - x);
        if 1.0 / q > 700.0 {
            return zeros(n);
        }
        let t = Jet::variable(x, n);
        let g = &(&t - &Jet::constant(lo, n)) * &(&Jet::constant(hi, n) - &t);
        real(g.recip().scale(-1.0).exp().derivatives())
    })
    .with_support(Interval::new(lo, hi))
}

/// `e^{−x−1/x}`.
pub fn schwartz() -> SampledFunction {
    SampledFunction::smooth("exp(-x-1/x)", |x, n| {
        if x + 1.0 / x > 745.0 {
            return zeros(n);
        }
        let t = Jet::variable(x, n);
        real((&t + &t.recip()).scale(-1.0).exp().derivatives())
    })
}

pub fn power(a: f64) -> SampledFunction {
    SampledFunction::smooth(format!("x^{a}"), move |x, n| real(Jet::variable(x, n).powf(a).derivatives()))
}

/// `sin(x²)`.
pub fn chirp() -> SampledFunction {
    SampledFunction::smooth("sin(x^2)", |x, n| {
        let t = Jet::variable(x, n);
        real((&t * &t).sin_cos().0.derivatives())
    })
    .with_freq_bound(|iv| iv.hi / std::f64::consts::PI)
}

pub fn exp_growth() -> SampledFunction {
    SampledFunction::smooth("exp(x)", |x, n| real(Jet::variable(x, n).exp().derivatives()))
}

/// `e^{1/x}`.
pub fn exp_inverse() -> SampledFunction {
    SampledFunction::smooth("exp(1/x)", |x, n| real(Jet::variable(x, n).recip().exp().derivatives()))
}

pub fn indicator(lo: f64, hi: f64) -> SampledFunction {
    SampledFunction::piecewise(format!("chi[{lo},{hi}]"), |_| Complex64::new(1.0, 0.0), vec![]).with_support(Interval::new(lo, hi))
}

pub fn ramp(lo: f64, hi: f64) -> SampledFunction {
    SampledFunction::piecewise(format!("x*chi[{lo},{hi}]"), |x| Complex64::new(x, 0.0), vec![]).with_support(Interval::new(lo, hi))
}

/// `x^{−1/2}` on `(0, hi]`, zero beyond.
pub fn inv_sqrt_to(hi: f64) -> SampledFunction {
    SampledFunction::piecewise(
        format!("x^-1/2*chi(0,{hi}]"),
        move |x| Complex64::new(if x <= hi { x.powf(-0.5) } else { 0.0 }, 0.0),
        vec![hi],
    )
}

/// `x^{−1/2}` on `[lo, hi]`.
pub fn inv_sqrt_window(lo: f64, hi: f64) -> SampledFunction {
    SampledFunction::piecewise(format!("x^-1/2*chi[{lo},{hi}]"), |x| Complex64::new(x.powf(-0.5), 0.0), vec![])
        .with_support(Interval::new(lo, hi))
}

fn entry(id: &str, description: &str, function: SampledFunction, expected: &str, probe_window: IndexWindow, note: &str) -> CorpusEntry {
    CorpusEntry {
        id: id.into(),
        description: description.into(),
        derivative_order: function.smoothness(),
        function,
        expected: closure(expected),
        probe_window,
        note: note.into(),
    }
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = vec![
        entry("bump12", "smooth bump exp(-1/((x-1)(2-x))) on [1,2]", bump(1.0, 2.0), "D", window(-6, 6, 64), "compact support"),
        entry("schwartz", "exp(-x-1/x)", schwartz(), "S", window(-6, 6, 64), "flat at 0 and rapidly decreasing at infinity"),
        entry("sqrt", "x^(1/2)", power(0.5), "O_C", window(-6, 6, 64), "uniform power growth"),
        entry("invsq", "x^(-2)", power(-2.0), "O_C", window(-6, 6, 64), "uniform power blow-up at 0"),
        entry("sinx2", "sin(x^2)", chirp(), "O_M", window(-6, 3, 128), "derivative growth increases with the order"),
        entry("expx", "exp(x)", exp_growth(), "E", window(-6, 4, 64), "exponential growth at infinity"),
        entry("expinv", "exp(1/x)", exp_inverse(), "E", window(-3, 6, 64), "exponential blow-up at 0"),
    ];
    for a in [0.5, 1.0, 3.0] {
        for p in [0u32, 1] {
            let id = format!("delta-a{a}-p{p}");
            let f = SampledFunction::point_masses(
                id.clone(),
                vec![PointMass {
                    location: a,
                    order: p,
                    weight: 1.0,
                }],
            )
            .expect("valid point mass");
            out.push(entry(&id, &format!("derivative of order {p} of the point mass at {a}"), f, "E'", window(-6, 6, 64), "compactly supported distribution"));
        }
    }
    out.push(entry("indicator12", "indicator of [1,2]", indicator(1.0, 2.0), "E'", window(-6, 6, 64), "jump discontinuities"));
    out.push(entry("ramp12", "x on [1,2], zero elsewhere", ramp(1.0, 2.0), "E'", window(-6, 6, 64), "jump discontinuities"));
    out.push(entry("invsqrt01", "x^(-1/2) on (0,1]", inv_sqrt_to(1.0), "S'", window(-8, 4, 64), "integrable singularity at 0"));
    out.push(entry("invsqrt-window", "x^(-1/2) on [1/4,4]", inv_sqrt_window(0.25, 4.0), "E'", window(-6, 6, 64), "compact window"));
    out
}

pub fn lookup(id: &str) -> Result<CorpusEntry> {
    corpus()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownCorpusId(id.to_string()))
}

pub fn ids() -> Vec<String> {
    corpus().into_iter().map(|e| e.id).collect()
}

pub fn manifest() -> Vec<ManifestEntry> {
    corpus()
        .into_iter()
        .map(|e| ManifestEntry {
            expected: e.expected.set_names(),
            id: e.id,
            description: e.description,
            probe_window: e.probe_window,
        })
        .collect()
}

pub fn manifest_json() -> Result<String> {
    Ok(serde_json::to_string_pretty(&manifest())?)
}
