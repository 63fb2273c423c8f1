//! B-spline curves with simple knots whose basis functions all vanish at
//! both ends of the knot span, so the curve extends by zero with
//! `degree - 1` continuous derivatives.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplineCurve {
    knots: Vec<f64>,
    degree: usize,
    coeffs: Vec<f64>,
    // knot vector extended by `degree` extra knots on each side
    padded: Vec<f64>,
}

/// Nonzero basis functions (and derivatives) at one abscissa.
#[derive(Debug, Clone)]
pub struct BasisEval {
    /// Index of the first basis function in `ders[·]`; may be negative
    /// near the left end, in which case the leading entries are padding.
    pub first: isize,
    /// `ders[k][r]` is the k-th derivative of basis function `first + r`.
    pub ders: Vec<Vec<f64>>,
}

impl SplineCurve {
    pub fn new(knots: Vec<f64>, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if knots.len() != coeffs.len() + degree + 1 {
            return Err(invalid(format!(
                "spline with {} coefficients and degree {degree} needs {} knots, got {}",
                coeffs.len(),
                coeffs.len() + degree + 1,
                knots.len()
            )));
        }
        if coeffs.is_empty() {
            return Err(invalid("spline needs at least one coefficient"));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("spline knots must be finite and strictly increasing"));
        }
        let first_gap = knots[1] - knots[0];
        let last_gap = knots[knots.len() - 1] - knots[knots.len() - 2];
        let mut padded = Vec::with_capacity(knots.len() + 2 * degree);
        for i in (1..=degree).rev() {
            padded.push(knots[0] - i as f64 * first_gap);
        }
        padded.extend_from_slice(&knots);
        let last = knots[knots.len() - 1];
        for i in 1..=degree {
            padded.push(last + i as f64 * last_gap);
        }
        Ok(SplineCurve {
            knots,
            degree,
            coeffs,
            padded,
        })
    }

    /// Uniform knots on `[lo, hi]` for `n_coeffs` basis functions.
    pub fn uniform_knots(lo: f64, hi: f64, degree: usize, n_coeffs: usize) -> Vec<f64> {
        let cells = n_coeffs + degree;
        let h = (hi - lo) / cells as f64;
        (0..=cells)
            .map(|i| if i == cells { hi } else { lo + i as f64 * h })
            .collect()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        SplineCurve::new(self.knots.clone(), self.degree, coeffs)
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Greville abscissae: the knot averages attached to each coefficient.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.n_coeffs())
            .map(|i| {
                if p == 0 {
                    0.5 * (self.knots[i] + self.knots[i + 1])
                } else {
                    self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Basis functions and their first `n_ders` derivatives at `x`, or
    /// `None` outside `[lo, hi)`.
    pub fn basis(&self, x: f64, n_ders: usize) -> Option<BasisEval> {
        if !(x >= self.lo() && x < self.hi()) {
            return None;
        }
        let p = self.degree;
        let u = &self.padded;
        // span in padded indexing: u[i] <= x < u[i+1]
        let interior = &self.knots;
        let span = match interior.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let i = span + p;
        let ders = ders_basis_funs(u, i, x, p, n_ders);
        Some(BasisEval {
            first: span as isize - p as isize,
            ders,
        })
    }

    /// k-th derivative of the curve; zero for `k > degree` and outside the span.
    pub fn eval_derivative(&self, k: usize, x: f64) -> f64 {
        if k > self.degree {
            return 0.0;
        }
        let Some(be) = self.basis(x, k) else {
            return 0.0;
        };
        let n = self.coeffs.len() as isize;
        be.ders[k]
            .iter()
            .enumerate()
            .filter_map(|(r, v)| {
                let idx = be.first + r as isize;
                (idx >= 0 && idx < n).then(|| v * self.coeffs[idx as usize])
            })
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(0, x)
    }
}

// Piegl & Tiller, algorithm A2.3.
fn ders_basis_funs(u: &[f64], i: usize, x: f64, p: usize, n: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - u[i + 1 - j];
        right[j] = u[i + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nn = n.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p as isize {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nn as isize {
            let mut d = 0.0;
            let rk = r - k;
            let pk = p as isize - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { -rk };
            let j2 = if r - 1 <= pk { k - 1 } else { p as isize - r };
            for j in j1..=j2 {
                a[s2][j as usize] = (a[s1][j as usize] - a[s1][(j - 1) as usize])
                    / ndu[(pk + 1) as usize][(rk + j) as usize];
                d += a[s2][j as usize] * ndu[(rk + j) as usize][pk as usize];
            }
            if r <= pk {
                a[s2][k as usize] = -a[s1][(k - 1) as usize] / ndu[(pk + 1) as usize][r as usize];
                d += a[s2][k as usize] * ndu[r as usize][pk as usize];
            }
            ders[k as usize][r as usize] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nn {
        for v in ders[k].iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_partition_of_unity() {
        // with simple knots only the middle cells see a full set of basis functions
        let knots = SplineCurve::uniform_knots(0.0, 10.0, 3, 7);
        let s = SplineCurve::new(knots, 3, vec![1.0; 7]).unwrap();
        for x in [3.0, 4.5, 5.0, 6.9] {
            assert!((s.eval(x) - 1.0).abs() < 1e-14, "x={x}");
        }
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.eval(10.0), 0.0);
    }

    #[test]
    fn cubic_basis_matches_cardinal_bspline() {
        // cardinal cubic B-spline on knots 0..4 peaks at 2/3
        let s = SplineCurve::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], 3, vec![1.0]).unwrap();
        assert!((s.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.eval(1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.eval_derivative(1, 1.0) - 0.5).abs() < 1e-14);
        assert!((s.eval_derivative(2, 2.0) + 2.0).abs() < 1e-14);
        assert!((s.eval_derivative(3, 0.5) - 1.0).abs() < 1e-14);
        assert_eq!(s.eval_derivative(4, 0.5), 0.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(SplineCurve::new(vec![0.0, 1.0, 1.0, 2.0, 3.0], 3, vec![1.0]).is_err());
        assert!(SplineCurve::new(vec![0.0, 1.0, 2.0], 3, vec![1.0]).is_err());
    }

    #[test]
    fn greville_of_uniform_is_centred() {
        let s = SplineCurve::new(SplineCurve::uniform_knots(0.0, 6.0, 3, 3), 3, vec![0.0; 3]).unwrap();
        let g = s.greville();
        assert!((g[0] - 2.0).abs() < 1e-14 && (g[2] - 4.0).abs() < 1e-14);
    }
}
