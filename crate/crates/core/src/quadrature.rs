//! Composite Gauss–Legendre quadrature for compactly supported, possibly
//! oscillatory integrands.
//!
//! Panels are laid out proportionally to the oscillation frequency and split
//! at known breakpoints; the error estimate compares against the same rule
//! on a mesh with twice as many panels. Panel sums are reduced in ascending
//! interval order, so results are bitwise reproducible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub points_per_panel: usize,
    pub panels_per_cycle: f64,
    pub tol: f64,
    pub max_refinements: u32,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            points_per_panel: 16,
            panels_per_cycle: 4.0,
            tol: 1e-11,
            max_refinements: 12,
        }
    }
}

impl QuadSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadSpec {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_panel < 2 {
            return Err(invalid("quadrature order must be at least 2"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("quadrature tolerance must be positive"));
        }
        if !(self.panels_per_cycle > 0.0) {
            return Err(invalid("panels_per_cycle must be positive"));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub err_est: f64,
    /// False when the tolerance was not met after `max_refinements`.
    pub converged: bool,
    pub panels: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult {
            value: Complex64::new(0.0, 0.0),
            err_est: 0.0,
            converged: true,
            panels: 0,
        }
    }
}

fn segments(a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for c in cuts {
        out.push((lo, c));
        lo = c;
    }
    out.push((lo, b));
    out
}

/// Neumaier-compensated complex sum.
#[derive(Clone, Copy, Default)]
struct CompSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = if a.abs() >= b.abs() { (a - s) + b } else { (b - s) + a };
    (s, e)
}

impl CompSum {
    fn add(&mut self, v: Complex64) {
        let (re, ere) = two_sum(self.sum.re, v.re);
        let (im, eim) = two_sum(self.sum.im, v.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(ere, eim);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn composite<F: Fn(f64) -> Complex64>(
    g: &F,
    segs: &[(f64, f64)],
    counts: &[usize],
    mult: usize,
    rule: &GaussLegendre,
) -> (Complex64, f64) {
    let mut total = CompSum::default();
    let mut abs_total = 0.0;
    for (&(lo, hi), &c) in segs.iter().zip(counts) {
        let panels = c * mult;
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            let mut s = Complex64::new(0.0, 0.0);
            let mut sa = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = g(mid + 0.5 * h * x);
                s += v * *w;
                sa += v.norm() * w;
            }
            total.add(s * (0.5 * h));
            abs_total += sa * 0.5 * h;
        }
    }
    (total.value(), abs_total)
}

/// Integrates `g` over `interval` (compact, inside `(0, ∞)`).
pub fn integrate<F: Fn(f64) -> Complex64>(
    g: F,
    interval: Interval,
    osc_freq: f64,
    breakpoints: &[f64],
    spec: &QuadSpec,
) -> Result<QuadResult> {
    spec.validate()?;
    let (a, b) = (interval.lo, interval.hi);
    if !(a > 0.0) || !(b > a) || !b.is_finite() {
        return Err(invalid(format!("integration interval [{a}, {b}] must satisfy 0 < a < b < inf")));
    }
    let segs = segments(a, b, breakpoints);
    let base = (spec.panels_per_cycle * (osc_freq.abs() * (b - a) + 1.0)).ceil().max(1.0) as usize;
    let counts: Vec<usize> = segs
        .iter()
        .map(|(lo, hi)| ((base as f64 * (hi - lo) / (b - a)).ceil() as usize).max(1))
        .collect();
    let rule = GaussLegendre::new(spec.points_per_panel);
    let (mut prev, _) = composite(&g, &segs, &counts, 1, &rule);
    let mut out = QuadResult {
        value: prev,
        err_est: f64::INFINITY,
        converged: false,
        panels: counts.iter().sum(),
    };
    for r in 1..=spec.max_refinements {
        let mult = 1usize << r;
        let (cur, abs_int) = composite(&g, &segs, &counts, mult, &rule);
        let err = (cur - prev).norm();
        out = QuadResult {
            value: cur,
            err_est: err,
            converged: false,
            panels: counts.iter().sum::<usize>() * mult,
        };
        // absolute tolerance, or the rounding floor for large integrands
        if err <= spec.tol || err <= 256.0 * f64::EPSILON * abs_int {
            out.converged = true;
            break;
        }
        if !cur.re.is_finite() || !cur.im.is_finite() {
            break;
        }
        prev = cur;
    }
    Ok(out)
}

/// Result of an L² distance computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Error {
    pub value: f64,
    /// Error estimate of the squared distance.
    pub err_est: f64,
    pub converged: bool,
}

/// `(∫ |f − g|²)^{1/2}` over `interval`.
pub fn l2_error<F, G>(f: F, g: G, interval: Interval, breakpoints: &[f64], osc_freq: f64, spec: &QuadSpec) -> Result<L2Error>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    let r = integrate(
        |x| Complex64::new((f(x) - g(x)).norm_sqr(), 0.0),
        interval,
        2.0 * osc_freq,
        breakpoints,
        spec,
    )?;
    Ok(L2Error {
        value: r.value.re.max(0.0).sqrt(),
        err_est: r.err_est,
        converged: r.converged,
    })
}

/// Integrates `h(x)·e^{2πi·k·s·x}` over `interval` for every `k ∈ [−k_max, k_max]`
/// on one shared adaptive grid. Result `i` belongs to `k = i − k_max`.
/// `extra_freq` bounds the oscillation of `h` itself.
pub fn integrate_fourier_family<F: Fn(f64) -> Complex64>(
    h: F,
    interval: Interval,
    s: f64,
    k_max: u32,
    extra_freq: f64,
    breakpoints: &[f64],
    spec: &QuadSpec,
) -> Result<Vec<QuadResult>> {
    spec.validate()?;
    let (a, b) = (interval.lo, interval.hi);
    if !(a > 0.0) || !(b > a) || !b.is_finite() {
        return Err(invalid(format!("integration interval [{a}, {b}] must satisfy 0 < a < b < inf")));
    }
    let km = k_max as usize;
    let n_out = 2 * km + 1;
    let segs = segments(a, b, breakpoints);
    let freq = k_max as f64 * s.abs() + extra_freq.abs();
    let base = (spec.panels_per_cycle * (freq * (b - a) + 1.0)).ceil().max(1.0) as usize;
    let counts: Vec<usize> = segs
        .iter()
        .map(|(lo, hi)| ((base as f64 * (hi - lo) / (b - a)).ceil() as usize).max(1))
        .collect();
    let rule = GaussLegendre::new(spec.points_per_panel);
    let level = |mult: usize| -> (Vec<Complex64>, f64) {
        let mut acc = vec![CompSum::default(); n_out];
        let mut panel = vec![Complex64::new(0.0, 0.0); n_out];
        let mut abs_total = 0.0;
        let mut pw = vec![Complex64::new(0.0, 0.0); km + 1];
        for (&(lo, hi), &c) in segs.iter().zip(&counts) {
            let panels = c * mult;
            let hw = (hi - lo) / panels as f64;
            for p in 0..panels {
                let mid = lo + (p as f64 + 0.5) * hw;
                panel.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = mid + 0.5 * hw * t;
                    let v = h(x) * (0.5 * hw * w);
                    if v.re == 0.0 && v.im == 0.0 {
                        continue;
                    }
                    abs_total += v.norm();
                    let cyc = s * x;
                    let e1 = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (cyc - cyc.round()));
                    pw[0] = Complex64::new(1.0, 0.0);
                    for k in 1..=km {
                        // re-anchor periodically to bound recurrence drift
                        pw[k] = if k % 32 == 0 {
                            let c = k as f64 * cyc;
                            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (c - c.round()))
                        } else {
                            pw[k - 1] * e1
                        };
                    }
                    panel[km] += v;
                    for k in 1..=km {
                        panel[km + k] += v * pw[k];
                        panel[km - k] += v * pw[k].conj();
                    }
                }
                for (a, &v) in acc.iter_mut().zip(&panel) {
                    a.add(v);
                }
            }
        }
        (acc.iter().map(CompSum::value).collect::<Vec<_>>(), abs_total)
    };
    let total_base: usize = counts.iter().sum();
    let (mut prev, _) = level(1);
    let mut out: Vec<QuadResult> = prev
        .iter()
        .map(|&v| QuadResult { value: v, err_est: f64::INFINITY, converged: false, panels: total_base })
        .collect();
    for r in 1..=spec.max_refinements {
        let mult = 1usize << r;
        let (cur, abs_int) = level(mult);
        let floor = 256.0 * f64::EPSILON * abs_int;
        let mut all = true;
        for (i, o) in out.iter_mut().enumerate() {
            let err = (cur[i] - prev[i]).norm();
            o.value = cur[i];
            o.err_est = err;
            o.panels = total_base * mult;
            o.converged = err <= spec.tol || err <= floor;
            all &= o.converged;
        }
        if all || cur.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            break;
        }
        prev = cur;
    }
    Ok(out)
}
