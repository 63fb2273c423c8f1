//! The half-line system `ψ_{j,k}(x) = √2·2^{-j/2}·e^{-2πikx/2^j}·b(x/2^j)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bell::BellProfile;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub j: i32,
    pub k: i64,
}

impl BasisIndex {
    pub fn new(j: i32, k: i64) -> Self {
        BasisIndex { j, k }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Intersection, or `None` when it is empty or a single point.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Interval { lo, hi })
    }

    /// Compact and contained in `(0, ∞)`.
    pub fn check_compact_positive(&self) -> Result<()> {
        if !(self.lo > 0.0) || !self.hi.is_finite() || self.hi < self.lo {
            return Err(invalid(format!(
                "interval [{}, {}] must be compact inside (0, inf)",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Finite index window: `j ∈ [j_min, j_max]`, `k ∈ [-k_max, k_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    #[serde(rename = "jmin")]
    pub j_min: i32,
    #[serde(rename = "jmax")]
    pub j_max: i32,
    #[serde(rename = "kmax")]
    pub k_max: u32,
}

impl IndexWindow {
    pub fn new(j_min: i32, j_max: i32, k_max: u32) -> Result<Self> {
        if j_min > j_max {
            return Err(invalid(format!("empty window: jmin = {j_min} > jmax = {j_max}")));
        }
        Ok(IndexWindow { j_min, j_max, k_max })
    }

    pub fn n_scales(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn row_len(&self) -> usize {
        2 * self.k_max as usize + 1
    }

    pub fn len(&self) -> usize {
        self.n_scales() * self.row_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, idx: BasisIndex) -> bool {
        idx.j >= self.j_min && idx.j <= self.j_max && idx.k.unsigned_abs() <= self.k_max as u64
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn ks(&self) -> impl Iterator<Item = i64> {
        let k = self.k_max as i64;
        -k..=k
    }

    /// Row-major position: ascending j, then ascending k.
    pub fn offset(&self, idx: BasisIndex) -> usize {
        debug_assert!(self.contains(idx));
        (idx.j - self.j_min) as usize * self.row_len() + (idx.k + self.k_max as i64) as usize
    }

    pub fn indices(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        self.scales()
            .flat_map(move |j| self.ks().map(move |k| BasisIndex { j, k }))
    }
}

/// `e^{-2πi·k·x·s}` with the phase reduced modulo one period first.
#[inline]
pub(crate) fn modulation(k: i64, x: f64, s: f64) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let cycles = k as f64 * x * s;
    let r = cycles - cycles.round();
    Complex64::from_polar(1.0, -2.0 * PI * r)
}

#[inline]
pub(crate) fn psi_unchecked(b: &BellProfile, idx: BasisIndex, x: f64) -> Complex64 {
    let s = (-idx.j as f64).exp2();
    let v = b.eval(x * s);
    if v == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    modulation(idx.k, x, s) * (SQRT_2 * s.sqrt() * v)
}

pub fn eval_psi(b: &BellProfile, idx: BasisIndex, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(invalid(format!("psi is defined on (0, inf), got x = {x}")));
    }
    Ok(psi_unchecked(b, idx, x))
}

/// `[ψ, ψ', …, ψ^{(n)}]` at `x` (piecewise derivatives of the profile).
pub fn eval_psi_derivatives(b: &BellProfile, idx: BasisIndex, x: f64, n: usize) -> Result<Vec<Complex64>> {
    if !(x > 0.0) {
        return Err(invalid(format!("psi is defined on (0, inf), got x = {x}")));
    }
    let s = (-idx.j as f64).exp2();
    let bd = b.derivatives(x * s, n);
    let e = modulation(idx.k, x, s) * (SQRT_2 * s.sqrt());
    let w = Complex64::new(0.0, -2.0 * PI * idx.k as f64 * s);
    Ok((0..=n)
        .map(|m| {
            // Leibniz: sum_l C(m,l) w^{m-l} s^l b^{(l)}
            let mut acc = Complex64::new(0.0, 0.0);
            let mut binom = 1.0;
            for (l, bl) in bd.iter().enumerate().take(m + 1) {
                if l > 0 {
                    binom = binom * (m - l + 1) as f64 / l as f64;
                }
                acc += w.powu((m - l) as u32) * (binom * s.powi(l as i32) * bl);
            }
            e * acc
        })
        .collect())
}

/// `[2^j R₀, 2^j R₁]`.
pub fn support(b: &BellProfile, j: i32) -> Interval {
    let s = (j as f64).exp2();
    Interval::new(s * b.support_lo(), s * b.support_hi())
}

/// All scales whose support meets `k` (touching endpoints count).
pub fn scales_meeting(b: &BellProfile, k: Interval) -> Result<Vec<i32>> {
    k.check_compact_positive()?;
    let lo = (k.lo / b.support_hi()).log2().ceil() as i32 - 1;
    let hi = (k.hi / b.support_lo()).log2().floor() as i32 + 1;
    Ok((lo..=hi)
        .filter(|&j| {
            let s = support(b, j);
            s.lo <= k.hi && s.hi >= k.lo
        })
        .collect())
}

/// `|conj(ψ_{j,k}(x)) − ψ_{j,−k}(x)|`.
pub fn conj_symmetry_check(b: &BellProfile, j: i32, k: i64, x: f64) -> Result<f64> {
    let a = eval_psi(b, BasisIndex::new(j, k), x)?;
    let c = eval_psi(b, BasisIndex::new(j, -k), x)?;
    Ok((a.conj() - c).norm())
}
