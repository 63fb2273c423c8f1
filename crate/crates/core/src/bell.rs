//! Bell profiles: real, compactly supported functions `b` on `(0, ∞)` whose
//! dyadic dilations and modulations make up the half-line basis.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::jet::Jet;
use crate::spline::SplineCurve;

/// The degree-7 ramp `ν(t) = t⁴(35 − 84t + 70t² − 20t³)`, clamped to 0 for
/// `t ≤ 0` and to 1 for `t ≥ 1`. Satisfies `ν(t) + ν(1 − t) = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NuPolynomial;

impl NuPolynomial {
    const COEFFS: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    pub fn derivative(&self, m: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return if m == 0 { 1.0 } else { 0.0 };
        }
        let mut acc = 0.0;
        for i in (m..Self::COEFFS.len()).rev() {
            let falling: f64 = ((i - m + 1)..=i).map(|v| v as f64).product();
            acc = acc * t + Self::COEFFS[i] * falling;
        }
        acc
    }

    /// Taylor coefficients of `t ↦ ν(t0 + scale·h)` in `h`, up to `order`.
    fn taylor(&self, t0: f64, scale: f64, order: usize) -> Vec<f64> {
        let mut fact = 1.0;
        let mut pow = 1.0;
        (0..=order)
            .map(|i| {
                if i > 0 {
                    fact *= i as f64;
                    pow *= scale;
                }
                self.derivative(i, t0) * pow / fact
            })
            .collect()
    }
}

/// Number of derivatives a profile can evaluate (piecewise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    Finite(usize),
    Infinite,
}

impl Smoothness {
    pub fn allows(&self, m: usize) -> bool {
        match self {
            Smoothness::Finite(n) => m <= *n,
            Smoothness::Infinite => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BellKind {
    /// `2^{-1/2}` on `[1, 2]`.
    Shannon,
    /// Meyer magnitude profile built from [`NuPolynomial`] ramps on `[1/3, 4/3]`.
    Meyer,
    Spline(SplineCurve),
}

/// A derivative value together with whether the requested order exceeded
/// what the profile provides (in which case the value is 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedDerivative {
    pub value: f64,
    pub smoothness_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellProfile {
    kind: BellKind,
    support_lo: f64,
    support_hi: f64,
}

pub fn make_shannon() -> BellProfile {
    BellProfile {
        kind: BellKind::Shannon,
        support_lo: 1.0,
        support_hi: 2.0,
    }
}

pub fn make_meyer() -> BellProfile {
    BellProfile {
        kind: BellKind::Meyer,
        support_lo: 1.0 / 3.0,
        support_hi: 4.0 / 3.0,
    }
}

/// Spline profile on `support` of the given degree interpolating the control
/// values at the control abscissae. The spline lives on a uniform knot grid
/// with as many basis functions as control points, so that it vanishes
/// with `degree − 1` continuous derivatives at both support ends.
pub fn make_spline(control: &[(f64, f64)], support: (f64, f64), degree: usize) -> Result<BellProfile> {
    let (lo, hi) = support;
    check_support(lo, hi)?;
    if control.is_empty() {
        return Err(invalid("spline needs at least one control point"));
    }
    if control.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(invalid("control knots must be strictly increasing"));
    }
    if control.iter().any(|(x, v)| !(*x > lo && *x < hi) || !v.is_finite()) {
        return Err(invalid("control knots must lie strictly inside the support"));
    }
    let n = control.len();
    let knots = SplineCurve::uniform_knots(lo, hi, degree, n);
    let probe = SplineCurve::new(knots.clone(), degree, vec![0.0; n])?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (row, (x, _)) in control.iter().enumerate() {
        if let Some(be) = probe.basis(*x, 0) {
            for (r, v) in be.ders[0].iter().enumerate() {
                let idx = be.first + r as isize;
                if idx >= 0 && (idx as usize) < n {
                    m[(row, idx as usize)] = *v;
                }
            }
        }
    }
    let rhs = DVector::from_iterator(n, control.iter().map(|(_, v)| *v));
    let coeffs = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| invalid("control abscissae give a singular collocation system"))?;
    BellProfile::from_spline(SplineCurve::new(knots, degree, coeffs.iter().copied().collect())?)
}

fn check_support(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0) || !lo.is_finite() {
        return Err(invalid(format!("support must start at R0 > 0, got {lo}")));
    }
    if !(hi > lo) || !hi.is_finite() {
        return Err(invalid(format!("support end R1 = {hi} must exceed R0 = {lo}")));
    }
    Ok(())
}

impl BellProfile {
    pub fn from_spline(curve: SplineCurve) -> Result<Self> {
        check_support(curve.lo(), curve.hi())?;
        Ok(BellProfile {
            support_lo: curve.lo(),
            support_hi: curve.hi(),
            kind: BellKind::Spline(curve),
        })
    }

    /// Spline profile with B-spline coefficients given directly.
    pub fn spline_from_coeffs(support: (f64, f64), degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_support(support.0, support.1)?;
        let knots = SplineCurve::uniform_knots(support.0, support.1, degree, coeffs.len());
        Self::from_spline(SplineCurve::new(knots, degree, coeffs)?)
    }

    pub fn kind(&self) -> &BellKind {
        &self.kind
    }

    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    pub fn smoothness_order(&self) -> Smoothness {
        match &self.kind {
            BellKind::Shannon => Smoothness::Finite(0),
            BellKind::Meyer => Smoothness::Infinite,
            BellKind::Spline(s) => Smoothness::Finite(s.degree()),
        }
    }

    /// Largest `n` with `b^{(n−1)}` continuous on ℝ after extension by zero
    /// and `b^{(n)}` piecewise bounded.
    pub fn global_smoothness(&self) -> usize {
        match &self.kind {
            BellKind::Shannon => 0,
            BellKind::Meyer => 4,
            BellKind::Spline(s) => s.degree(),
        }
    }

    /// Stable identifier written into coefficient files.
    pub fn id(&self) -> String {
        match &self.kind {
            BellKind::Shannon => "shannon".into(),
            BellKind::Meyer => "meyer".into(),
            BellKind::Spline(s) => format!(
                "spline-d{}-n{}-[{},{}]",
                s.degree(),
                s.n_coeffs(),
                self.support_lo,
                self.support_hi
            ),
        }
    }

    /// Points inside the support where the profile changes formula.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            BellKind::Shannon => vec![],
            BellKind::Meyer => vec![2.0 / 3.0],
            BellKind::Spline(s) => {
                let k = s.knots();
                k[1..k.len() - 1].to_vec()
            }
        }
    }

    /// Whether the basis built on this profile is known to be orthonormal.
    pub fn is_orthonormal(&self) -> bool {
        matches!(self.kind, BellKind::Shannon)
    }

    fn inside(&self, x: f64) -> bool {
        x >= self.support_lo && x <= self.support_hi
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !self.inside(x) {
            return 0.0;
        }
        match &self.kind {
            BellKind::Shannon => FRAC_1_SQRT_2,
            BellKind::Meyer => {
                let nu = NuPolynomial;
                if x < 2.0 / 3.0 {
                    (FRAC_PI_2 * nu.eval(3.0 * x - 1.0)).sin()
                } else {
                    (FRAC_PI_2 * nu.eval(1.5 * x - 1.0)).cos()
                }
            }
            BellKind::Spline(s) => s.eval(x),
        }
    }

    /// `b^{(m)}(x)`. Orders beyond the profile's smoothness return 0.
    pub fn derivative(&self, m: usize, x: f64) -> f64 {
        self.derivative_checked(m, x).value
    }

    pub fn derivative_checked(&self, m: usize, x: f64) -> CheckedDerivative {
        let exceeded = !self.smoothness_order().allows(m);
        if exceeded {
            return CheckedDerivative {
                value: 0.0,
                smoothness_exceeded: true,
            };
        }
        let value = if m == 0 { self.eval(x) } else { self.derivatives(x, m)[m] };
        CheckedDerivative {
            value,
            smoothness_exceeded: false,
        }
    }

    /// `[b(x), b'(x), …, b^{(n)}(x)]`, zero-filled past the smoothness order.
    pub fn derivatives(&self, x: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        if !self.inside(x) {
            return out;
        }
        match &self.kind {
            BellKind::Shannon => out[0] = FRAC_1_SQRT_2,
            BellKind::Meyer => {
                let nu = NuPolynomial;
                let jet = if x < 2.0 / 3.0 {
                    let g = Jet::from_coeffs(nu.taylor(3.0 * x - 1.0, 3.0, n)).scale(FRAC_PI_2);
                    g.sin_cos().0
                } else {
                    let g = Jet::from_coeffs(nu.taylor(1.5 * x - 1.0, 1.5, n)).scale(FRAC_PI_2);
                    g.sin_cos().1
                };
                out = jet.derivatives();
            }
            BellKind::Spline(s) => {
                for (m, o) in out.iter_mut().enumerate().take(s.degree().min(n) + 1) {
                    *o = s.eval_derivative(m, x);
                }
            }
        }
        out
    }

    pub fn to_file(&self) -> ProfileFile {
        let (degree, knots, values) = match &self.kind {
            BellKind::Spline(s) => (Some(s.degree()), s.knots().to_vec(), s.coeffs().to_vec()),
            _ => (None, vec![], vec![]),
        };
        ProfileFile {
            kind: match self.kind {
                BellKind::Shannon => "shannon",
                BellKind::Meyer => "meyer",
                BellKind::Spline(_) => "spline",
            }
            .into(),
            support: [self.support_lo, self.support_hi],
            degree,
            knots,
            values,
        }
    }

    pub fn from_file(file: &ProfileFile) -> Result<Self> {
        match file.kind.as_str() {
            "shannon" => Ok(make_shannon()),
            "meyer" => Ok(make_meyer()),
            "spline" => {
                let degree = file
                    .degree
                    .ok_or_else(|| invalid("spline profile file is missing 'degree'"))?;
                let curve = SplineCurve::new(file.knots.clone(), degree, file.values.clone())?;
                let p = BellProfile::from_spline(curve)?;
                if (p.support_lo - file.support[0]).abs() > 1e-12 * file.support[0].abs().max(1.0)
                    || (p.support_hi - file.support[1]).abs() > 1e-12 * file.support[1].abs().max(1.0)
                {
                    return Err(invalid("declared support does not match the knot span"));
                }
                Ok(p)
            }
            other => Err(invalid(format!("unknown profile kind '{other}'"))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ProfileFile = serde_json::from_str(s).map_err(Error::from)?;
        Self::from_file(&file)
    }
}

/// On-disk profile: for splines `knots` is the full knot vector and
/// `values` the B-spline coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub kind: String,
    pub support: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default)]
    pub knots: Vec<f64>,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    fn gauss_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        // 5-point Gauss-Legendre, test-local
        let xs = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        let ws = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let c = a + (p as f64 + 0.5) * h;
                xs.iter().zip(ws).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
            })
            .sum()
    }

    #[test]
    fn nu_symmetry_on_grid() {
        let nu = NuPolynomial;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            assert!((nu.eval(t) + nu.eval(1.0 - t) - 1.0).abs() <= 1e-14, "t={t}");
        }
    }

    #[test]
    fn nu_monotone_and_clamped() {
        let nu = NuPolynomial;
        let mut prev = nu.eval(0.0);
        for i in 1..=1000 {
            let v = nu.eval(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(nu.eval(-0.5), 0.0);
        assert_eq!(nu.eval(1.5), 1.0);
        assert_eq!(nu.derivative(1, 1.5), 0.0);
    }

    #[test]
    fn shannon_values() {
        let b = make_shannon();
        assert!((b.eval(1.5) - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert_eq!(b.eval(0.5), 0.0);
        let energy = 2.0 * gauss_integral(|u| b.eval(u).powi(2), 1.0, 2.0, 4);
        assert!((energy - 1.0).abs() < 1e-14);
        assert_eq!(b.smoothness_order(), Smoothness::Finite(0));
        assert!(b.derivative_checked(1, 1.5).smoothness_exceeded);
    }

    #[test]
    fn meyer_values_and_energy() {
        let b = make_meyer();
        assert!((b.eval(2.0 / 3.0) - 1.0).abs() < 1e-15);
        assert_eq!(b.eval(1.0 / 3.0), 0.0);
        assert!(b.eval(4.0 / 3.0).abs() < 1e-15);
        let f = |u: f64| b.eval(u).powi(2);
        let energy = 2.0 * (gauss_integral(f, 1.0 / 3.0, 2.0 / 3.0, 200) + gauss_integral(f, 2.0 / 3.0, 4.0 / 3.0, 400));
        assert!((energy - 1.0).abs() <= 1e-10, "energy {energy}");
    }

    #[test]
    fn meyer_octave_partition() {
        let b = make_meyer();
        for i in 0..10_000 {
            let x = 2.0 / 3.0 + (8.0 / 3.0 - 2.0 / 3.0) * i as f64 / 9_999.0;
            let s: f64 = (-2..=2).map(|j| b.eval(x / 2f64.powi(j)).powi(2)).sum();
            assert!((s - 1.0).abs() <= 1e-10, "x={x} sum={s}");
        }
    }

    #[test]
    fn meyer_derivatives_match_finite_differences() {
        let b = make_meyer();
        for m in 1..=5 {
            for i in 1..40 {
                let x = 1.0 / 3.0 + i as f64 / 40.0;
                if (x - 2.0 / 3.0).abs() < 0.01 {
                    continue;
                }
                let d = b.derivative(m, x);
                let fd = fd4(|y| b.derivative(m - 1, y), x, 1e-4);
                assert!((d - fd).abs() <= 1e-5 * (1.0 + d.abs()), "m={m} x={x} d={d} fd={fd}");
            }
        }
    }

    #[test]
    fn meyer_is_c3_at_joins() {
        let b = make_meyer();
        for m in 0..=3 {
            for x in [1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0] {
                let l = b.derivative(m, x - 1e-9);
                let r = b.derivative(m, x + 1e-9);
                assert!((l - r).abs() < 1e-3, "m={m} x={x}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn vanishes_outside_support() {
        for b in [make_shannon(), make_meyer()] {
            let (lo, hi) = b.support();
            assert_eq!(b.eval(lo * (1.0 - 1e-12)), 0.0);
            assert_eq!(b.eval(hi * (1.0 + 1e-12)), 0.0);
            assert_eq!(b.derivative(2, hi * 1.5), 0.0);
        }
    }

    #[test]
    fn spline_zero_controls_give_zero() {
        let control: Vec<_> = (1..10).map(|i| (i as f64 * 0.3, 0.0)).collect();
        let b = make_spline(&control, (0.1, 3.1), 3).unwrap();
        for i in 0..100 {
            assert_eq!(b.eval(0.1 + 0.03 * i as f64), 0.0);
        }
    }

    #[test]
    fn spline_interpolating_shannon() {
        let shannon = make_shannon();
        let (lo, hi, n, p) = (0.5, 2.5, 96usize, 3usize);
        let knots = SplineCurve::uniform_knots(lo, hi, p, n);
        let sites = SplineCurve::new(knots, p, vec![0.0; n]).unwrap().greville();
        let control: Vec<_> = sites.iter().map(|&x| (x, shannon.eval(x))).collect();
        let b = make_spline(&control, (lo, hi), p).unwrap();
        for (x, v) in &control {
            assert!((b.eval(*x) - v).abs() < 1e-12);
        }
        let worst = (0..=800)
            .map(|i| 1.1 + 0.8 * i as f64 / 800.0)
            .map(|x| (b.eval(x) - FRAC_1_SQRT_2).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.05, "worst {worst}");
    }

    #[test]
    fn spline_derivative_at_knot_matches_fd() {
        let control: Vec<_> = (1..12).map(|i| (i as f64 * 0.25, (i as f64 * 0.7).sin())).collect();
        let b = make_spline(&control, (0.0625, 3.0625), 3).unwrap();
        let BellKind::Spline(s) = b.kind() else { unreachable!() };
        for &x in &s.knots()[4..8] {
            let d = b.derivative(1, x);
            let fd = (b.eval(x + 1e-6) - b.eval(x - 1e-6)) / 2e-6;
            assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-3), "x={x} d={d} fd={fd}");
        }
        let c = b.derivative_checked(4, 1.0);
        assert!(c.smoothness_exceeded && c.value == 0.0);
    }

    #[test]
    fn spline_rejects_bad_input() {
        assert!(make_spline(&[(1.0, 0.0), (1.0, 1.0)], (0.5, 2.0), 3).is_err());
        assert!(make_spline(&[(1.0, 0.0)], (0.0, 2.0), 3).is_err());
        assert!(make_spline(&[(1.0, 0.0)], (-1.0, 2.0), 3).is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let b = BellProfile::spline_from_coeffs((0.25, 3.0), 3, (0..20).map(|i| i as f64 * 0.01).collect()).unwrap();
        let back = BellProfile::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(b, back);
        assert_eq!(BellProfile::from_json(&make_meyer().to_json().unwrap()).unwrap(), make_meyer());
    }
}
