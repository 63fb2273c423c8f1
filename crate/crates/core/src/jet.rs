//! Truncated Taylor series arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `c_i = f^{(i)}(x0) / i!` of a
//! function at a point, up to a fixed order. Elementary functions are
//! applied through the usual coefficient recurrences, which gives exact
//! (up to rounding) derivatives of closed-form expressions without symbolic
//! manipulation.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    /// The identity function `x` expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Jet { c }
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "jet needs at least one coefficient");
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `f^{(m)}(x0)`.
    pub fn derivative(&self, m: usize) -> f64 {
        if m > self.order() {
            return 0.0;
        }
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        self.c[m] * fact
    }

    /// All derivatives `f, f', ..., f^{(order)}` at `x0`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.c
            .iter()
            .enumerate()
            .map(|(i, &ci)| {
                if i > 0 {
                    fact *= i as f64;
                }
                ci * fact
            })
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut y = vec![0.0; n];
        y[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| i as f64 * self.c[i] * y[k - i]).sum();
            y[k] = s / k as f64;
        }
        Jet { c: y }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for i in 1..=k {
                let w = i as f64 * self.c[i];
                ss += w * c[k - i];
                cc -= w * s[k - i];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    /// `g^a` for a jet with positive constant term.
    pub fn powf(&self, a: f64) -> Self {
        let g0 = self.c[0];
        assert!(g0 > 0.0, "powf needs a positive base, got {g0}");
        let n = self.c.len();
        let mut y = vec![0.0; n];
        y[0] = g0.powf(a);
        for k in 1..n {
            let s: f64 = (1..=k)
                .map(|i| (a * i as f64 - (k - i) as f64) * self.c[i] * y[k - i])
                .sum();
            y[k] = s / (k as f64 * g0);
        }
        Jet { c: y }
    }

    pub fn recip(&self) -> Self {
        let g0 = self.c[0];
        assert!(g0 != 0.0, "reciprocal of a jet vanishing at the expansion point");
        let n = self.c.len();
        let mut y = vec![0.0; n];
        y[0] = 1.0 / g0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| self.c[i] * y[k - i]).sum();
            y[k] = -s / g0;
        }
        Jet { c: y }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.c.len(), rhs.c.len());
        Jet {
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.c.len(), rhs.c.len());
        Jet {
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.c.len(), rhs.c.len());
        let n = self.c.len();
        let c = (0..n)
            .map(|k| (0..=k).map(|i| self.c[i] * rhs.c[k - i]).sum())
            .collect();
        Jet { c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_variable_has_all_derivatives_equal() {
        let j = Jet::variable(0.7, 6).exp();
        for d in j.derivatives() {
            assert!(close(d, 0.7f64.exp(), 1e-14));
        }
    }

    #[test]
    fn sin_of_square_matches_chain_rule() {
        let x = Jet::variable(1.3, 3);
        let (s, _) = (&x * &x).sin_cos();
        let x0: f64 = 1.3;
        assert!(close(s.derivative(1), 2.0 * x0 * (x0 * x0).cos(), 1e-14));
        let d2 = 2.0 * (x0 * x0).cos() - 4.0 * x0 * x0 * (x0 * x0).sin();
        assert!(close(s.derivative(2), d2, 1e-13));
    }

    #[test]
    fn powf_matches_power_rule() {
        let j = Jet::variable(2.0, 4).powf(-2.0);
        // d^m x^-2 = (-1)^m (m+1)! x^{-2-m}
        let expect = [0.25, -0.25, 6.0 / 16.0, -24.0 / 32.0, 120.0 / 64.0];
        for (m, e) in expect.iter().enumerate() {
            assert!(close(j.derivative(m), *e, 1e-13), "m={m}");
        }
    }

    #[test]
    fn recip_matches_powf() {
        let g = &Jet::variable(0.6, 5) + &Jet::constant(0.3, 5);
        let a = g.recip();
        let b = g.powf(-1.0);
        for m in 0..=5 {
            assert!(close(a.derivative(m), b.derivative(m), 1e-12));
        }
    }
}
