//! Inputs to the analysis map: regular functions with derivative evaluators,
//! and finite combinations of point masses and their derivatives.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::error::{invalid, Error, Result};

pub type ValueFn = dyn Fn(f64) -> Complex64 + Send + Sync;
/// `(x, n) ↦ [f(x), f'(x), …, f^{(n)}(x)]`.
pub type DerivFn = dyn Fn(f64, usize) -> Vec<Complex64> + Send + Sync;
/// Upper bound on the local oscillation frequency (cycles per unit) over an interval.
pub type FreqBoundFn = dyn Fn(Interval) -> f64 + Send + Sync;

/// `weight · δ^{(order)}_{location}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub location: f64,
    pub order: u32,
    pub weight: f64,
}

/// Highest point-mass derivative order handled by the analysis map.
pub const MAX_POINT_MASS_ORDER: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Descriptor {
    Smooth,
    Piecewise { breakpoints: Vec<f64> },
    PointMasses { masses: Vec<PointMass> },
}

#[derive(Clone)]
pub struct SampledFunction {
    name: String,
    descriptor: Descriptor,
    value: Option<Arc<ValueFn>>,
    derivs: Option<Arc<DerivFn>>,
    /// `None`: derivatives of every order.
    n_max: Option<usize>,
    support: Option<Interval>,
    freq_bound: Option<Arc<FreqBoundFn>>,
    real_valued: bool,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("name", &self.name)
            .field("descriptor", &self.descriptor)
            .field("n_max", &self.n_max)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl SampledFunction {
    /// A smooth function given by its derivative evaluator.
    pub fn smooth<D>(name: impl Into<String>, derivs: D) -> Self
    where
        D: Fn(f64, usize) -> Vec<Complex64> + Send + Sync + 'static,
    {
        SampledFunction {
            name: name.into(),
            descriptor: Descriptor::Smooth,
            value: None,
            derivs: Some(Arc::new(derivs)),
            n_max: None,
            support: None,
            freq_bound: None,
            real_valued: true,
        }
    }

    /// A function that is smooth between the given breakpoints. Derivatives
    /// are not provided unless added with [`with_derivatives`](Self::with_derivatives).
    pub fn piecewise<V>(name: impl Into<String>, value: V, breakpoints: Vec<f64>) -> Self
    where
        V: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        SampledFunction {
            name: name.into(),
            descriptor: Descriptor::Piecewise { breakpoints },
            value: Some(Arc::new(value)),
            derivs: None,
            n_max: Some(0),
            support: None,
            freq_bound: None,
            real_valued: true,
        }
    }

    pub fn point_mass(location: f64, order: u32) -> Result<Self> {
        Self::point_masses(
            format!("delta({location},{order})"),
            vec![PointMass {
                location,
                order,
                weight: 1.0,
            }],
        )
    }

    pub fn point_masses(name: impl Into<String>, masses: Vec<PointMass>) -> Result<Self> {
        if masses.is_empty() {
            return Err(invalid("point mass combination is empty"));
        }
        for m in &masses {
            if !(m.location > 0.0) || !m.location.is_finite() {
                return Err(invalid(format!("point mass location {} is not in (0, inf)", m.location)));
            }
            if m.order > MAX_POINT_MASS_ORDER {
                return Err(invalid(format!(
                    "point mass derivative order {} exceeds {MAX_POINT_MASS_ORDER}",
                    m.order
                )));
            }
        }
        let lo = masses.iter().map(|m| m.location).fold(f64::INFINITY, f64::min);
        let hi = masses.iter().map(|m| m.location).fold(0.0, f64::max);
        Ok(SampledFunction {
            name: name.into(),
            descriptor: Descriptor::PointMasses { masses },
            value: None,
            derivs: None,
            n_max: Some(0),
            support: Some(Interval::new(lo, hi)),
            freq_bound: None,
            real_valued: true,
        })
    }

    /// Fast path for `f(x)` when the derivative evaluator is expensive.
    pub fn with_value<V>(mut self, value: V) -> Self
    where
        V: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        self.value = Some(Arc::new(value));
        self
    }

    pub fn with_derivatives<D>(mut self, derivs: D, n_max: Option<usize>) -> Self
    where
        D: Fn(f64, usize) -> Vec<Complex64> + Send + Sync + 'static,
    {
        self.derivs = Some(Arc::new(derivs));
        self.n_max = n_max;
        self
    }

    pub fn with_support(mut self, support: Interval) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_smoothness(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max);
        self
    }

    pub fn with_freq_bound<F>(mut self, bound: F) -> Self
    where
        F: Fn(Interval) -> f64 + Send + Sync + 'static,
    {
        self.freq_bound = Some(Arc::new(bound));
        self
    }

    pub fn complex_valued(mut self) -> Self {
        self.real_valued = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn support(&self) -> Option<Interval> {
        self.support
    }

    pub fn is_real(&self) -> bool {
        self.real_valued
    }

    pub fn is_regular(&self) -> bool {
        !matches!(self.descriptor, Descriptor::PointMasses { .. })
    }

    pub fn point_mass_list(&self) -> Option<&[PointMass]> {
        match &self.descriptor {
            Descriptor::PointMasses { masses } => Some(masses),
            _ => None,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.descriptor {
            Descriptor::Piecewise { breakpoints } => breakpoints.clone(),
            _ => vec![],
        };
        if let Some(s) = self.support {
            out.push(s.lo);
            out.push(s.hi);
        }
        out
    }

    /// Number of available derivatives; `None` means unlimited.
    pub fn smoothness(&self) -> Option<usize> {
        if self.derivs.is_none() {
            return Some(0);
        }
        self.n_max
    }

    pub fn has_derivatives(&self, n: usize) -> bool {
        self.is_regular() && (n == 0 || self.derivs.is_some()) && self.smoothness().is_none_or(|m| n <= m)
    }

    pub fn freq_bound(&self, on: Interval) -> f64 {
        self.freq_bound.as_ref().map_or(0.0, |f| f(on))
    }

    fn outside_support(&self, x: f64) -> bool {
        self.support.is_some_and(|s| !s.contains(x))
    }

    /// `f(x)` for a regular function.
    pub fn value(&self, x: f64) -> Result<Complex64> {
        if !self.is_regular() {
            return Err(Error::NotRegular(self.name.clone()));
        }
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: f64) -> Complex64 {
        if self.outside_support(x) {
            return Complex64::new(0.0, 0.0);
        }
        match (&self.value, &self.derivs) {
            (Some(v), _) => v(x),
            (None, Some(d)) => d(x, 0)[0],
            (None, None) => Complex64::new(0.0, 0.0),
        }
    }

    /// `[f(x), …, f^{(n)}(x)]`.
    pub fn derivatives(&self, x: f64, n: usize) -> Result<Vec<Complex64>> {
        if !self.is_regular() {
            return Err(Error::NotRegular(self.name.clone()));
        }
        if !self.has_derivatives(n) {
            return Err(Error::InsufficientSmoothness {
                needed: n,
                available: self.smoothness().unwrap_or(0),
            });
        }
        if self.outside_support(x) {
            return Ok(vec![Complex64::new(0.0, 0.0); n + 1]);
        }
        if n == 0 {
            return Ok(vec![self.value_unchecked(x)]);
        }
        let d = self.derivs.as_ref().expect("checked by has_derivatives");
        Ok(d(x, n))
    }

    /// `x ↦ f(factor·x)`.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        if !self.is_regular() {
            return Err(Error::NotRegular(self.name.clone()));
        }
        if !(factor > 0.0) {
            return Err(invalid("dilation factor must be positive"));
        }
        let base = self.clone();
        let b2 = self.clone();
        let fb = self.clone();
        let mut out = SampledFunction {
            name: format!("{}({factor}x)", self.name),
            descriptor: match &self.descriptor {
                Descriptor::Piecewise { breakpoints } => Descriptor::Piecewise {
                    breakpoints: breakpoints.iter().map(|b| b / factor).collect(),
                },
                d => d.clone(),
            },
            value: Some(Arc::new(move |x| base.value_unchecked(factor * x))),
            derivs: None,
            n_max: self.n_max,
            support: self.support.map(|s| Interval::new(s.lo / factor, s.hi / factor)),
            freq_bound: Some(Arc::new(move |i: Interval| {
                factor * fb.freq_bound(Interval::new(i.lo * factor, i.hi * factor))
            })),
            real_valued: self.real_valued,
        };
        if self.derivs.is_some() {
            out.derivs = Some(Arc::new(move |x, n| {
                let mut d = b2.derivatives(factor * x, n).unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); n + 1]);
                let mut s = 1.0;
                for v in d.iter_mut() {
                    *v *= s;
                    s *= factor;
                }
                d
            }));
        }
        Ok(out)
    }

    /// `alpha·f + beta·g` for regular functions.
    pub fn linear_combination(alpha: Complex64, f: &Self, beta: Complex64, g: &Self) -> Result<Self> {
        if !f.is_regular() || !g.is_regular() {
            return Err(invalid("linear combinations are only formed for regular functions"));
        }
        let support = match (f.support, g.support) {
            (Some(a), Some(b)) => Some(Interval::new(a.lo.min(b.lo), a.hi.max(b.hi))),
            _ => None,
        };
        let mut bps = f.breakpoints();
        bps.extend(g.breakpoints());
        let descriptor = if matches!(f.descriptor, Descriptor::Smooth) && matches!(g.descriptor, Descriptor::Smooth) {
            Descriptor::Smooth
        } else {
            Descriptor::Piecewise { breakpoints: bps }
        };
        let (f1, g1, f2, g2, f3, g3) = (f.clone(), g.clone(), f.clone(), g.clone(), f.clone(), g.clone());
        let n_max = match (f.smoothness(), g.smoothness()) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(usize::MAX).min(b.unwrap_or(usize::MAX))),
        };
        let mut out = SampledFunction {
            name: format!("lincomb({},{})", f.name, g.name),
            descriptor,
            value: Some(Arc::new(move |x| alpha * f1.value_unchecked(x) + beta * g1.value_unchecked(x))),
            derivs: None,
            n_max,
            support,
            freq_bound: Some(Arc::new(move |i| f3.freq_bound(i).max(g3.freq_bound(i)))),
            real_valued: f.real_valued && g.real_valued && alpha.im == 0.0 && beta.im == 0.0,
        };
        if n_max != Some(0) {
            out.derivs = Some(Arc::new(move |x, n| {
                let a = f2.derivatives(x, n).unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); n + 1]);
                let b = g2.derivatives(x, n).unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); n + 1]);
                a.iter().zip(&b).map(|(u, v)| alpha * u + beta * v).collect()
            }));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    fn expm(x: f64, n: usize) -> Vec<Complex64> {
        Jet::variable(x, n).scale(-1.0).exp().derivatives().into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    }

    #[test]
    fn smooth_function_derivatives() {
        let f = SampledFunction::smooth("exp(-x)", expm);
        let d = f.derivatives(1.0, 3).unwrap();
        assert!((d[3].re + (-1f64).exp()).abs() < 1e-15);
        assert!((f.value(2.0).unwrap().re - (-2f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn point_mass_is_not_regular() {
        let d = SampledFunction::point_mass(1.0, 1).unwrap();
        assert!(matches!(d.value(1.0), Err(Error::NotRegular(_))));
        assert!(SampledFunction::point_mass(0.0, 0).is_err());
        assert!(SampledFunction::point_mass(1.0, 5).is_err());
    }

    #[test]
    fn piecewise_has_no_derivatives() {
        let f = SampledFunction::piecewise("chi", |_| Complex64::new(1.0, 0.0), vec![]).with_support(Interval::new(1.0, 2.0));
        assert!(matches!(f.derivatives(1.5, 1), Err(Error::InsufficientSmoothness { .. })));
        assert_eq!(f.value(3.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn dilation_scales_derivatives() {
        let f = SampledFunction::smooth("exp(-x)", expm).dilated(2.0).unwrap();
        let d = f.derivatives(0.5, 2).unwrap();
        let e = (-1f64).exp();
        assert!((d[0].re - e).abs() < 1e-15 && (d[1].re + 2.0 * e).abs() < 1e-15 && (d[2].re - 4.0 * e).abs() < 1e-14);
    }

    #[test]
    fn linear_combination_values() {
        let f = SampledFunction::smooth("exp(-x)", expm);
        let g = SampledFunction::smooth("one", |_, n| {
            let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
            v[0] = Complex64::new(1.0, 0.0);
            v
        });
        let h = SampledFunction::linear_combination(Complex64::new(2.0, 0.0), &f, Complex64::new(-1.0, 0.0), &g).unwrap();
        let d = h.derivatives(1.0, 1).unwrap();
        let e = (-1f64).exp();
        assert!((d[0].re - (2.0 * e - 1.0)).abs() < 1e-15 && (d[1].re + 2.0 * e).abs() < 1e-15);
    }
}
