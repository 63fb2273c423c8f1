//! Table membership verdicts for functions (X-sweeps) and coefficient arrays (Y-sweeps).

use serde::{Deserialize, Serialize};

use crate::basis::{IndexWindow, Interval};
use crate::error::Result;
use crate::function::SampledFunction;
use crate::seminorm::{cn_seminorm, LogGrid, XTable};
use crate::transform::CoeffArray;

/// Slack when comparing fitted exponents with grid values.
const EXPONENT_SLACK: f64 = 0.05;
/// Largest drift of `λ*` between the two top orders still counted as uniform.
const STABILITY_SLACK: f64 = 0.25;
/// Rows used (per side) for the `|j|`-slope fit.
const FIT_ROWS: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    #[serde(rename = "D")]
    pub d: bool,
    #[serde(rename = "S")]
    pub s: bool,
    #[serde(rename = "O_C")]
    pub oc: bool,
    #[serde(rename = "O_M")]
    pub om: bool,
    #[serde(rename = "E")]
    pub e: bool,
    #[serde(rename = "D'")]
    pub d_p: bool,
    #[serde(rename = "S'")]
    pub s_p: bool,
    #[serde(rename = "O_C'")]
    pub oc_p: bool,
    #[serde(rename = "O_M'")]
    pub om_p: bool,
    #[serde(rename = "E'")]
    pub e_p: bool,
}

impl Flags {
    pub const NAMES: [&'static str; 10] = ["D", "S", "O_C", "O_M", "E", "D'", "S'", "O_C'", "O_M'", "E'"];

    pub fn as_array(&self) -> [bool; 10] {
        [self.d, self.s, self.oc, self.om, self.e, self.d_p, self.s_p, self.oc_p, self.om_p, self.e_p]
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        Self::NAMES.iter().position(|n| *n == name).map(|i| self.as_array()[i])
    }

    pub fn set_names(&self) -> Vec<&'static str> {
        Self::NAMES.iter().zip(self.as_array()).filter(|(_, v)| *v).map(|(n, _)| *n).collect()
    }

    pub fn from_names(names: &[&str]) -> Self {
        let has = |n: &str| names.contains(&n);
        Flags {
            d: has("D"),
            s: has("S"),
            oc: has("O_C"),
            om: has("O_M"),
            e: has("E"),
            d_p: has("D'"),
            s_p: has("S'"),
            oc_p: has("O_C'"),
            om_p: has("O_M'"),
            e_p: has("E'"),
        }
    }

    /// Upward closure under `D ⊂ S ⊂ O_C ⊂ O_M ⊂ E`, `E′ ⊂ O_M′ ⊂ O_C′ ⊂ S′ ⊂ D′`
    /// and `D ⊂ E′`, `S ⊂ O_M′`, `O_M ⊂ S′`, `E ⊂ D′`.
    pub fn closed(&self) -> Self {
        let mut f = *self;
        f.s |= f.d;
        f.oc |= f.s;
        f.om |= f.oc;
        f.e |= f.om;
        f.e_p |= f.d;
        f.om_p |= f.e_p || f.s;
        f.oc_p |= f.om_p;
        f.s_p |= f.oc_p || f.om;
        f.d_p |= f.s_p || f.e;
        f
    }

    /// Every flag of `self` is also set in `other`.
    pub fn subset_of(&self, other: &Flags) -> bool {
        self.as_array().iter().zip(other.as_array()).all(|(a, b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    /// Signed order; negative values are the dual weights `(1+|k|)^{−|n|}`.
    pub n: i32,
    /// Estimated sup of usable `λ`; `None` if no probed or fitted value works.
    pub lambda_star: Option<f64>,
    /// The bound holds for every `λ` (finite band or no divergence on the grid).
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub lambda: Option<f64>,
    pub n: i32,
    pub status: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<IndexWindow>,
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_grid: Option<LogGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableVerdict {
    pub subject: String,
    pub flags: Flags,
    pub exponents: Vec<Exponent>,
    pub evidence: Vec<Evidence>,
    pub inconclusive: Vec<String>,
    pub window_limited: bool,
    pub limits: Limits,
}

impl TableVerdict {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn exponent(&self, n: i32) -> Option<&Exponent> {
        self.exponents.iter().find(|e| e.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub grid: LogGrid,
    /// Compacts on which `C^n_K` finiteness is probed.
    pub probe_compacts: Vec<Interval>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        let mut lambdas: Vec<f64> = (-20..=-1).map(|i| i as f64 * 0.5).collect();
        lambdas.extend((1..=8).map(|i| i as f64 * 0.5));
        ClassifyOptions {
            lambdas,
            ns: (0..=4).collect(),
            grid: LogGrid::default(),
            probe_compacts: vec![Interval::new(0.125, 0.5), Interval::new(0.5, 2.0), Interval::new(2.0, 8.0)],
        }
    }
}

impl ClassifyOptions {
    fn limits(&self, window: Option<IndexWindow>, grid: bool) -> Limits {
        Limits {
            window,
            lambdas: self.lambdas.clone(),
            ns: self.ns.clone(),
            log_grid: grid.then_some(self.grid),
        }
    }

    fn negative(&self) -> impl Iterator<Item = f64> + '_ {
        self.lambdas.iter().copied().filter(|&l| l < 0.0)
    }

    fn positive(&self) -> impl Iterator<Item = f64> + '_ {
        self.lambdas.iter().copied().filter(|&l| l > 0.0)
    }

    fn lambda_min(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn lambda_max(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn distribution_flags() -> Flags {
    Flags {
        e_p: true,
        ..Flags::default()
    }
    .closed()
}

/// Function-side verdict from X-sweeps and `C^n_K` probes.
pub fn classify_function(f: &SampledFunction, opts: &ClassifyOptions) -> Result<TableVerdict> {
    let n_top = opts.ns.iter().copied().max().unwrap_or(0);
    let mut v = TableVerdict {
        subject: f.name().to_string(),
        flags: Flags::default(),
        exponents: vec![],
        evidence: vec![],
        inconclusive: vec![],
        window_limited: false,
        limits: opts.limits(None, true),
    };
    if !f.is_regular() {
        v.flags = distribution_flags();
        return Ok(v);
    }
    // dual side from the order-0 weighted sup of f itself
    let t0 = XTable::build(f, opts.grid, 0)?;
    let mut any = false;
    let mut all_pos = opts.positive().next().is_some();
    for &l in &opts.lambdas {
        let ok = t0.x_norm(l, 0)?.is_finite();
        any |= ok;
        if l > 0.0 {
            all_pos &= ok;
        }
    }
    let dual = Flags {
        e_p: f.support().is_some(),
        om_p: all_pos,
        s_p: any,
        d_p: true,
        ..Flags::default()
    };
    if !f.has_derivatives(n_top) {
        v.flags = dual.closed();
        v.inconclusive.push(format!("derivatives up to order {n_top} unavailable; unprimed flags not probed"));
        return Ok(v);
    }
    let table = XTable::build(f, opts.grid, n_top)?;
    let mut finite = vec![];
    for &n in &opts.ns {
        let mut row = vec![];
        for &l in &opts.lambdas {
            let nv = table.x_norm(l, n)?;
            v.evidence.push(Evidence {
                lambda: Some(l),
                n: n as i32,
                status: nv.status().into(),
                value: nv.value_or_slope(),
            });
            row.push((l, nv.is_finite()));
        }
        // monotone in λ: finite at λ must imply finite below λ
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let first_div_from_top = sorted.iter().rev().position(|(_, ok)| !ok);
        if let Some(p) = first_div_from_top {
            if sorted.iter().rev().skip(p).any(|(_, ok)| *ok) {
                v.inconclusive.push(format!("n={n}: finite/divergent pattern is not monotone in lambda"));
            }
        }
        let star = row.iter().filter(|(_, ok)| *ok).map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
        v.exponents.push(Exponent {
            n: n as i32,
            lambda_star: star.is_finite().then_some(star),
            unbounded: row.iter().all(|(_, ok)| *ok),
        });
        finite.push(row);
    }
    let ok = |ni: usize, l: f64| finite[ni].iter().any(|(ll, o)| *ll == l && *o);
    let all_n = 0..opts.ns.len();
    let s = opts.positive().all(|l| all_n.clone().all(|ni| ok(ni, l))) && opts.positive().next().is_some();
    let common = opts.negative().any(|l| all_n.clone().all(|ni| ok(ni, l)));
    let stable = {
        let k = v.exponents.len();
        k < 2 || v.exponents[k - 1].lambda_star == v.exponents[k - 2].lambda_star
    };
    let oc = common && stable;
    if common && !stable {
        v.inconclusive.push("a common negative lambda exists on the grid but lambda*(n) still drifts at the top order".into());
    }
    let om = all_n.clone().all(|ni| opts.negative().any(|l| ok(ni, l)));
    let mut e = true;
    for k in &opts.probe_compacts {
        let c = cn_seminorm(f, *k, n_top)?;
        v.evidence.push(Evidence {
            lambda: None,
            n: n_top as i32,
            status: format!("C^n on [{}, {}]", k.lo, k.hi),
            value: c,
        });
        e &= c.is_finite();
    }
    let d = f.support().is_some() && tails_vanish(f, opts.grid, n_top)?;
    let raw = Flags {
        d,
        s,
        oc,
        om,
        e,
        ..Flags::default()
    };
    let mut all = raw;
    all.e_p = dual.e_p;
    all.om_p = dual.om_p;
    all.s_p = dual.s_p;
    all.d_p = dual.d_p;
    v.flags = all.closed();
    let unprimed_raw = [raw.d, raw.s, raw.oc, raw.om, raw.e];
    let unprimed_closed = [v.flags.d, v.flags.s, v.flags.oc, v.flags.om, v.flags.e];
    if unprimed_raw != unprimed_closed {
        v.inconclusive.push("raw unprimed flags violated the inclusion chain and were closed".into());
    }
    Ok(v)
}

fn tails_vanish(f: &SampledFunction, grid: LogGrid, n: usize) -> Result<bool> {
    let Some(sup) = f.support() else { return Ok(false) };
    for t in grid.ts() {
        let x = t.exp2();
        if sup.contains(x) {
            continue;
        }
        if f.derivatives(x, n)?.iter().any(|v| v.norm() != 0.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

struct RowStats {
    j: i32,
    zero: bool,
    /// `s_norm` with thresholding, per signed order.
    norms: Vec<(i32, f64)>,
    /// k-decay test per signed order.
    decays: Vec<(i32, bool)>,
}

fn row_stats(c: &CoeffArray, j: i32, thr: f64, orders: &[i32]) -> RowStats {
    let row = c.row(j).expect("scale in window");
    let km = c.window.k_max as i64;
    let half = km / 2;
    let mags: Vec<(i64, f64)> = c
        .window
        .ks()
        .zip(row)
        .map(|(k, v)| (k, if v.norm() <= thr { 0.0 } else { v.norm() }))
        .collect();
    let zero = mags.iter().all(|(_, a)| *a == 0.0);
    let mut norms = vec![];
    let mut decays = vec![];
    for &n in orders {
        let (mut inner, mut outer, mut all) = (0.0f64, 0.0f64, 0.0f64);
        for &(k, a) in &mags {
            let w = (1.0 + k.unsigned_abs() as f64).powi(n) * a;
            all = all.max(w);
            if k.abs() > half {
                outer = outer.max(w);
            } else {
                inner = inner.max(w);
            }
        }
        norms.push((n, all));
        decays.push((n, outer <= inner * (1.0 + 1e-9)));
    }
    RowStats { j, zero, norms, decays }
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Coefficient-side verdict from thresholded rows and `|j|`-slope fits.
pub fn classify_coeffs(c: &CoeffArray, opts: &ClassifyOptions) -> TableVerdict {
    let thr = c.tol.max(1e-10 * c.max_abs());
    let mut orders: Vec<i32> = opts.ns.iter().map(|&n| n as i32).collect();
    orders.extend(opts.ns.iter().filter(|&&n| n > 0).map(|&n| -(n as i32)));
    let rows: Vec<RowStats> = c.window.scales().map(|j| row_stats(c, j, thr, &orders)).collect();
    let mut v = TableVerdict {
        subject: c.bell_id.clone(),
        flags: Flags::default(),
        exponents: vec![],
        evidence: vec![],
        inconclusive: vec![],
        window_limited: false,
        limits: opts.limits(Some(c.window), false),
    };
    if rows.iter().all(|r| r.zero) {
        v.flags = Flags { d: true, ..Flags::default() }.closed();
        return v;
    }
    let band_lo = rows.first().is_some_and(|r| r.zero);
    let band_hi = rows.last().is_some_and(|r| r.zero);
    let finite_band = band_lo && band_hi;
    let mut stars: Vec<(i32, Option<f64>, bool)> = vec![];
    for &n in &orders {
        let rows_ok = rows.iter().all(|r| r.zero || r.decays.iter().any(|(o, ok)| *o == n && *ok));
        for r in &rows {
            if !r.zero {
                let val = r.norms.iter().find(|(o, _)| *o == n).unwrap().1;
                v.evidence.push(Evidence {
                    lambda: None,
                    n,
                    status: format!("row j={} {}", r.j, if r.decays.iter().any(|(o, ok)| *o == n && *ok) { "bounded" } else { "growing-in-k" }),
                    value: val,
                });
            }
        }
        if !rows_ok {
            stars.push((n, None, false));
            continue;
        }
        let mut slope_max = f64::NEG_INFINITY;
        for (side_zero, side) in [(band_hi, 1), (band_lo, -1)] {
            if side_zero {
                continue;
            }
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.j * side >= 0 && !r.zero)
                .map(|r| (r.j.unsigned_abs() as f64, r.norms.iter().find(|(o, _)| *o == n).unwrap().1.log2()))
                .collect();
            let mut pts = pts;
            pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            pts.truncate(FIT_ROWS);
            if pts.len() < 3 {
                v.window_limited = true;
            }
            let s = if pts.len() >= 2 { ls_slope(&pts) } else { 0.0 };
            slope_max = slope_max.max(s);
        }
        if slope_max == f64::NEG_INFINITY {
            stars.push((n, None, true));
        } else {
            stars.push((n, Some(-slope_max), false));
        }
    }
    for &(n, s, unb) in &stars {
        v.exponents.push(Exponent { n, lambda_star: s, unbounded: unb });
    }
    let get = |n: i32| stars.iter().find(|s| s.0 == n).copied().unwrap();
    let works = |n: i32, l: f64| {
        let (_, s, unb) = get(n);
        unb || s.is_some_and(|s| l <= s + EXPONENT_SLACK)
    };
    let pos: Vec<i32> = opts.ns.iter().map(|&n| n as i32).collect();
    let neg: Vec<i32> = opts.ns.iter().map(|&n| -(n as i32)).map(|n| if n == 0 { 0 } else { n }).collect();
    let lmax = opts.lambda_max();
    let lmin = opts.lambda_min();
    let rows_rapid = rows.iter().all(|r| r.zero || pos.iter().all(|&n| r.decays.iter().any(|(o, ok)| *o == n && *ok)));
    let rows_tempered = rows.iter().all(|r| r.zero || neg.iter().any(|&n| r.decays.iter().any(|(o, ok)| *o == n && *ok)));

    let d = finite_band && rows_rapid;
    let s = pos.iter().all(|&n| works(n, lmax));
    let common = opts.negative().any(|l| pos.iter().all(|&n| works(n, l)));
    let stable = match (pos.len() >= 2).then(|| (get(pos[pos.len() - 1]), get(pos[pos.len() - 2]))) {
        Some(((_, a, ua), (_, b, ub))) => (ua && ub) || matches!((a, b), (Some(a), Some(b)) if (a - b).abs() <= STABILITY_SLACK),
        None => true,
    };
    if common && !stable {
        v.inconclusive.push("a common negative lambda fits the window but lambda*(n) still drifts at the top order".into());
    }
    let oc = common && stable;
    let om = pos.iter().all(|&n| works(n, lmin));
    let e = rows_rapid;
    let e_p = finite_band && rows_tempered;
    let om_p = neg.iter().any(|&n| works(n, lmax)) && rows_tempered;
    let oc_p = om_p;
    let s_p = neg.iter().any(|&n| works(n, lmin)) && rows_tempered;
    let d_p = rows_tempered;
    let raw = Flags {
        d,
        s,
        oc,
        om,
        e,
        d_p,
        s_p,
        oc_p,
        om_p,
        e_p,
    };
    v.flags = raw.closed();
    if v.flags != raw {
        let added: Vec<&str> = Flags::NAMES
            .iter()
            .zip(raw.as_array().iter().zip(v.flags.as_array()))
            .filter(|(_, (a, b))| !**a && *b)
            .map(|(n, _)| *n)
            .collect();
        v.inconclusive.push(format!("flags {added:?} were added by inclusion closure"));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub function: TableVerdict,
    pub coefficients: TableVerdict,
    pub consistent: bool,
    /// Function-side flags missing on the coefficient side, with supporting evidence.
    pub violations: Vec<String>,
}

/// Coefficient flags must contain the function flags.
pub fn coherence_check(fv: &TableVerdict, cv: &TableVerdict) -> CoherenceReport {
    let mut violations = vec![];
    for ((name, a), b) in Flags::NAMES.iter().zip(fv.flags.as_array()).zip(cv.flags.as_array()) {
        if a && !b {
            let ev: Vec<String> = cv
                .exponents
                .iter()
                .map(|e| format!("n={}: lambda*={:?}{}", e.n, e.lambda_star, if e.unbounded { " (unbounded)" } else { "" }))
                .collect();
            violations.push(format!("{name}: set for the function, missing for the coefficients [{}]", ev.join(", ")));
        }
    }
    CoherenceReport {
        function: fv.clone(),
        coefficients: cv.clone(),
        consistent: violations.is_empty() && !cv.window_limited,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisIndex;
    use crate::jet::Jet;
    use num_complex::Complex64;

    fn jet_fn(name: &str, g: fn(Jet) -> Jet) -> SampledFunction {
        SampledFunction::smooth(name, move |x, n| {
            g(Jet::variable(x, n)).derivatives().into_iter().map(|v| Complex64::new(v, 0.0)).collect()
        })
    }

    #[test]
    fn closure_respects_chain() {
        let f = Flags { s: true, ..Flags::default() }.closed();
        assert!(f.oc && f.om && f.e && !f.d);
        assert!(f.om_p && f.oc_p && f.s_p && f.d_p && !f.e_p);
        let names = f.set_names();
        assert_eq!(Flags::from_names(&names), f);
    }

    #[test]
    fn schwartz_function_flags() {
        let f = jet_fn("schwartz", |x| (&x + &x.recip()).scale(-1.0).exp());
        let v = classify_function(&f, &ClassifyOptions::default()).unwrap();
        assert!(v.flags.s && v.flags.oc && v.flags.om && v.flags.e && !v.flags.d, "{:?}", v.flags);
    }

    #[test]
    fn chirp_is_om_not_oc() {
        let f = jet_fn("sin(x^2)", |x| (&x * &x).sin_cos().0);
        let v = classify_function(&f, &ClassifyOptions::default()).unwrap();
        assert!(v.flags.om && v.flags.e && !v.flags.oc && !v.flags.s, "{:?} {:?}", v.flags, v.exponents);
        let stars: Vec<f64> = v.exponents.iter().map(|e| e.lambda_star.unwrap()).collect();
        assert!(stars.windows(2).all(|w| w[1] < w[0]), "{stars:?}");
    }

    #[test]
    fn sqrt_is_oc() {
        let f = jet_fn("sqrt", |x| x.powf(0.5));
        let v = classify_function(&f, &ClassifyOptions::default()).unwrap();
        assert!(v.flags.oc && !v.flags.s, "{:?}", v.flags);
        assert!(v.exponents.iter().all(|e| e.lambda_star == Some(-0.5)));
    }

    #[test]
    fn point_mass_function_flags() {
        let d = SampledFunction::point_mass(1.0, 0).unwrap();
        let v = classify_function(&d, &ClassifyOptions::default()).unwrap();
        assert_eq!(v.flags.set_names(), vec!["D'", "S'", "O_C'", "O_M'", "E'"]);
    }

    #[test]
    fn unit_vector_sets_unprimed_flags() {
        let w = IndexWindow::new(-6, 6, 32).unwrap();
        let c = CoeffArray::unit(w, BasisIndex::new(0, 0), "x").unwrap();
        let v = classify_coeffs(&c, &ClassifyOptions::default());
        assert!(v.flags.d && v.flags.s && v.flags.oc && v.flags.om && v.flags.e);
        let mut big = c.clone();
        for x in big.values.iter_mut() {
            *x *= 1e6;
        }
        assert_eq!(classify_coeffs(&big, &ClassifyOptions::default()).flags, v.flags);
    }

    #[test]
    fn constant_rows_are_compact_dual() {
        let w = IndexWindow::new(-4, 4, 32).unwrap();
        let mut c = CoeffArray::zeros(w, "x", 0.0);
        for k in -32..=32 {
            c.values[w.offset(BasisIndex::new(0, k))] = Complex64::new(1.0, 0.0);
            c.values[w.offset(BasisIndex::new(1, k))] = Complex64::new(0.5, 0.0);
        }
        let v = classify_coeffs(&c, &ClassifyOptions::default());
        assert!(v.flags.e_p && !v.flags.e && !v.flags.d, "{:?}", v.flags);
    }

    #[test]
    fn geometric_growth_in_j() {
        let w = IndexWindow::new(-8, 8, 8).unwrap();
        let mut c = CoeffArray::zeros(w, "x", 0.0);
        for j in -8..=8 {
            c.values[w.offset(BasisIndex::new(j, 0))] = Complex64::new((j.abs() as f64).exp2(), 0.0);
        }
        let v = classify_coeffs(&c, &ClassifyOptions::default());
        assert!(v.flags.oc && !v.flags.s, "{:?}", v.flags);
        assert!((v.exponent(0).unwrap().lambda_star.unwrap() + 1.0).abs() < 1e-9);
    }
}
