//! Least-squares search for spline profiles whose half-line system is orthonormal and complete.
//!
//! With `ψ_{j,k}(x) = √2·2^{−j/2} e^{−2πikx/2^j} b(x/2^j)`:
//! * same scale: `⟨ψ_{0,k}, ψ_{0,k'}⟩ − δ = ∫_0^1 A(u) e^{−2πi(k−k')u} du`, `A(u) = 2Σ_ℓ b(u+ℓ)² − 1`;
//! * scales `0` and `r ≥ 1`: `⟨ψ_{0,k}, ψ_{r,k'}⟩ = 2^{1−r/2} ∫_0^{2^r} B_r(u) e^{−2πimu/2^r} du`, `m = 2^r k − k'`,
//!   `B_r(u) = Σ_ℓ b(u+2^rℓ) b((u+2^rℓ)/2^r)`;
//! * completeness: `C(u) = Σ_j b(u/2^j)² − 1/2` on one octave.
//!
//! `B_r ≡ 0` for `r > ⌊log₂(R₁/R₀)⌋`. If `R₁ ≤ 2R₀`, `b(u)b(u/2)` can only vanish identically
//! when `C` fails somewhere, and a nonzero continuous `q_1 ≥ 0` near the overlap cannot have a
//! vanishing 2-periodization unless translates overlap with opposite signs, which needs
//! `R₁ − 2R₀ > 2`. Smooth profiles with `R₁ ≤ 2R₀ + 2` are therefore refused.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisIndex, IndexWindow, Interval};
use crate::bell::{BellKind, BellProfile};
use crate::error::{invalid, Result};
use crate::quadrature::{integrate, GaussLegendre, QuadSpec};
use crate::spline::SplineCurve;

/// Sampled residuals on midpoint grids (endpoints excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector {
    pub samples_per_unit: usize,
    pub a: Vec<f64>,
    /// `b[r−1]` holds `B_r` for `r = 1..=r_max`.
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl ResidualVector {
    pub fn a_inf(&self) -> f64 {
        inf_norm(&self.a)
    }

    /// `‖B_r‖_∞`; zero for `r` beyond `r_max`.
    pub fn b_inf(&self, r: usize) -> f64 {
        if r == 0 || r > self.b.len() {
            return 0.0;
        }
        inf_norm(&self.b[r - 1])
    }

    pub fn c_inf(&self) -> f64 {
        inf_norm(&self.c)
    }

    pub fn max_abs(&self) -> f64 {
        let b = (1..=self.b.len()).map(|r| self.b_inf(r)).fold(0.0, f64::max);
        self.a_inf().max(b).max(self.c_inf())
    }
}

/// `⌊log₂(R₁/R₀)⌋`.
pub fn r_max(support: (f64, f64)) -> usize {
    (support.1 / support.0).log2().floor().max(0.0) as usize
}

fn midpoints(lo: f64, len: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + len * (i as f64 + 0.5) / n as f64)
}

fn shifts(u: f64, period: f64, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let l0 = ((lo - u) / period).ceil() as i64;
    let l1 = ((hi - u) / period).floor() as i64;
    (l0..=l1).map(move |l| u + period * l as f64)
}

fn octave_points(u: f64, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    // u/2^j ∈ [lo, hi]
    let j0 = (u / hi).log2().ceil() as i32;
    let j1 = (u / lo).log2().floor() as i32;
    (j0..=j1).map(move |j| u / (j as f64).exp2())
}

pub fn a_residual(b: &BellProfile, u: f64) -> f64 {
    let (lo, hi) = b.support();
    2.0 * shifts(u, 1.0, lo, hi).map(|x| b.eval(x).powi(2)).sum::<f64>() - 1.0
}

pub fn b_residual(b: &BellProfile, r: usize, u: f64) -> f64 {
    let (lo, hi) = b.support();
    let p = (r as f64).exp2();
    shifts(u, p, lo, hi).map(|v| b.eval(v) * b.eval(v / p)).sum()
}

pub fn c_residual(b: &BellProfile, u: f64) -> f64 {
    let (lo, hi) = b.support();
    octave_points(u, lo, hi).map(|x| b.eval(x).powi(2)).sum::<f64>() - 0.5
}

/// A on `[0,1)`, `B_r` on `[0,2^r)`, C on `[1,2)`, `samples_per_unit` midpoints per unit.
pub fn residuals(b: &BellProfile, samples_per_unit: usize) -> ResidualVector {
    let n = samples_per_unit.max(1);
    let a = midpoints(0.0, 1.0, n).collect::<Vec<_>>().par_iter().map(|&u| a_residual(b, u)).collect();
    let bs = (1..=r_max(b.support()))
        .map(|r| {
            let p = (r as f64).exp2();
            midpoints(0.0, p, n << r).collect::<Vec<_>>().par_iter().map(|&u| b_residual(b, r, u)).collect()
        })
        .collect();
    let c = midpoints(1.0, 1.0, n).collect::<Vec<_>>().par_iter().map(|&u| c_residual(b, u)).collect();
    ResidualVector {
        samples_per_unit: n,
        a,
        b: bs,
        c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for DesignWeights {
    fn default() -> Self {
        DesignWeights { a: 1.0, b: 1.0, c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub support: (f64, f64),
    pub n_coeffs: usize,
    pub degree: usize,
    pub weights: DesignWeights,
    pub mu: f64,
    pub max_iters: usize,
    pub samples_per_unit: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            support: (0.25, 3.0),
            n_coeffs: 20,
            degree: 3,
            weights: DesignWeights::default(),
            mu: 1e-4,
            max_iters: 200,
            samples_per_unit: 64,
        }
    }
}

impl DesignConfig {
    /// Defaults matched to `init`: splines keep their parameterization, Shannon becomes a single degree-0 piece.
    pub fn for_init(init: &BellProfile) -> Self {
        let base = DesignConfig::default();
        match init.kind() {
            BellKind::Shannon => DesignConfig {
                support: init.support(),
                n_coeffs: 1,
                degree: 0,
                ..base
            },
            BellKind::Spline(s) => DesignConfig {
                support: init.support(),
                n_coeffs: s.n_coeffs(),
                degree: s.degree(),
                ..base
            },
            BellKind::Meyer => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support;
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(invalid(format!("design support [{lo}, {hi}] must satisfy 0 < R0 < R1 < inf")));
        }
        if self.n_coeffs == 0 || self.samples_per_unit == 0 {
            return Err(invalid("design needs at least one coefficient and one sample per unit"));
        }
        if !(self.mu >= 0.0) || !(self.weights.a >= 0.0 && self.weights.b >= 0.0 && self.weights.c >= 0.0) {
            return Err(invalid("weights and mu must be nonnegative"));
        }
        Ok(())
    }

    /// Smooth profiles need `R₁ > 2R₀ + 2`.
    pub fn support_feasible(&self) -> bool {
        self.degree == 0 || self.support.1 > 2.0 * self.support.0 + 2.0
    }

    fn knots(&self) -> Vec<f64> {
        SplineCurve::uniform_knots(self.support.0, self.support.1, self.degree, self.n_coeffs)
    }
}

#[derive(Debug, Clone)]
struct PointBasis {
    first: isize,
    vals: Vec<f64>,
}

/// Precomputed basis rows at every evaluation point of the residual grids.
#[derive(Debug, Clone)]
pub struct Objective {
    config: DesignConfig,
    curve: SplineCurve,
    points: Vec<PointBasis>,
    a_rows: Vec<Vec<usize>>,
    b_rows: Vec<Vec<(usize, usize)>>,
    c_rows: Vec<Vec<usize>>,
    reg: DMatrix<f64>,
    scale: [f64; 3],
}

impl Objective {
    pub fn new(config: &DesignConfig) -> Result<Self> {
        config.validate()?;
        let curve = SplineCurve::new(config.knots(), config.degree, vec![0.0; config.n_coeffs])?;
        let (lo, hi) = config.support;
        let n = config.samples_per_unit;
        let mut points = vec![];
        let mut push = |x: f64| {
            let pb = match curve.basis(x, 0) {
                Some(be) => PointBasis {
                    first: be.first,
                    vals: be.ders[0].clone(),
                },
                None => PointBasis { first: 0, vals: vec![] },
            };
            points.push(pb);
            points.len() - 1
        };
        let a_rows: Vec<Vec<usize>> = midpoints(0.0, 1.0, n).map(|u| shifts(u, 1.0, lo, hi).map(&mut push).collect()).collect();
        let mut b_rows = vec![];
        for r in 1..=r_max(config.support) {
            let p = (r as f64).exp2();
            for u in midpoints(0.0, p, n << r) {
                b_rows.push(shifts(u, p, lo, hi).map(|v| (push(v), push(v / p))).collect());
            }
        }
        let c_rows: Vec<Vec<usize>> = midpoints(1.0, 1.0, n).map(|u| octave_points(u, lo, hi).map(&mut push).collect()).collect();
        let reg = regularizer(&curve);
        let w = config.weights;
        let scale = [
            (w.a / a_rows.len().max(1) as f64).sqrt(),
            (w.b / b_rows.len().max(1) as f64).sqrt(),
            (w.c / c_rows.len().max(1) as f64).sqrt(),
        ];
        Ok(Objective {
            config: config.clone(),
            curve,
            points,
            a_rows,
            b_rows,
            c_rows,
            reg,
            scale,
        })
    }

    pub fn n_params(&self) -> usize {
        self.config.n_coeffs
    }

    pub fn n_residuals(&self) -> usize {
        self.a_rows.len() + self.b_rows.len() + self.c_rows.len()
    }

    pub fn config(&self) -> &DesignConfig {
        &self.config
    }

    fn point_value(&self, p: usize, c: &[f64]) -> f64 {
        let pb = &self.points[p];
        pb.vals
            .iter()
            .enumerate()
            .filter_map(|(r, v)| {
                let i = pb.first + r as isize;
                (i >= 0 && (i as usize) < c.len()).then(|| v * c[i as usize])
            })
            .sum()
    }

    fn add_point_grad(&self, p: usize, factor: f64, row: &mut [f64]) {
        let pb = &self.points[p];
        for (r, v) in pb.vals.iter().enumerate() {
            let i = pb.first + r as isize;
            if i >= 0 && (i as usize) < row.len() {
                row[i as usize] += factor * v;
            }
        }
    }

    /// Weighted residual vector `r` and its Jacobian; `objective = ‖r‖² + μ cᵀHc`.
    pub fn residuals_and_jacobian(&self, c: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let vals: Vec<f64> = (0..self.points.len()).map(|p| self.point_value(p, c)).collect();
        let m = self.n_residuals();
        let np = c.len();
        let mut r = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, np);
        let mut row = vec![0.0; np];
        let mut i = 0;
        for pts in &self.a_rows {
            row.iter_mut().for_each(|x| *x = 0.0);
            let mut s = -1.0;
            for &p in pts {
                s += 2.0 * vals[p] * vals[p];
                self.add_point_grad(p, 4.0 * vals[p], &mut row);
            }
            r[i] = self.scale[0] * s;
            for (k, v) in row.iter().enumerate() {
                jac[(i, k)] = self.scale[0] * v;
            }
            i += 1;
        }
        for pairs in &self.b_rows {
            row.iter_mut().for_each(|x| *x = 0.0);
            let mut s = 0.0;
            for &(p, q) in pairs {
                s += vals[p] * vals[q];
                self.add_point_grad(p, vals[q], &mut row);
                self.add_point_grad(q, vals[p], &mut row);
            }
            r[i] = self.scale[1] * s;
            for (k, v) in row.iter().enumerate() {
                jac[(i, k)] = self.scale[1] * v;
            }
            i += 1;
        }
        for pts in &self.c_rows {
            row.iter_mut().for_each(|x| *x = 0.0);
            let mut s = -0.5;
            for &p in pts {
                s += vals[p] * vals[p];
                self.add_point_grad(p, 2.0 * vals[p], &mut row);
            }
            r[i] = self.scale[2] * s;
            for (k, v) in row.iter().enumerate() {
                jac[(i, k)] = self.scale[2] * v;
            }
            i += 1;
        }
        (r, jac)
    }

    pub fn value(&self, c: &[f64]) -> f64 {
        self.value_and_gradient(c).0
    }

    pub fn value_and_gradient(&self, c: &[f64]) -> (f64, Vec<f64>) {
        let (r, j) = self.residuals_and_jacobian(c);
        let cv = DVector::from_column_slice(c);
        let hc = &self.reg * &cv;
        let v = r.norm_squared() + self.config.mu * cv.dot(&hc);
        let g = (j.transpose() * r) * 2.0 + hc * (2.0 * self.config.mu);
        (v, g.iter().copied().collect())
    }

    pub fn profile(&self, c: &[f64]) -> Result<BellProfile> {
        BellProfile::from_spline(self.curve.with_coeffs(c.to_vec())?)
    }

    /// Parameters reproducing `init` in this spline space: exact for matching splines and
    /// degree-0 Shannon, Greville sampling otherwise.
    pub fn initial_params(&self, init: &BellProfile) -> Vec<f64> {
        if let BellKind::Spline(s) = init.kind() {
            if s.knots() == self.curve.knots() && s.degree() == self.curve.degree() {
                return s.coeffs().to_vec();
            }
        }
        if matches!(init.kind(), BellKind::Shannon) && self.config.degree == 0 && self.config.support == init.support() && self.config.n_coeffs == 1 {
            return vec![FRAC_1_SQRT_2];
        }
        self.curve.greville().iter().map(|&x| init.eval(x)).collect()
    }
}

/// `H_{il} = ∫ N_i'' N_l''`, Gauss–Legendre on each knot cell.
fn regularizer(curve: &SplineCurve) -> DMatrix<f64> {
    let n = curve.n_coeffs();
    let mut h = DMatrix::zeros(n, n);
    if curve.degree() < 2 {
        return h;
    }
    let gl = GaussLegendre::new(curve.degree() + 1);
    for cell in curve.knots().windows(2) {
        let (a, b) = (cell[0], cell[1]);
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            let Some(be) = curve.basis(x, 2) else { continue };
            let d2 = &be.ders[2];
            for (r1, v1) in d2.iter().enumerate() {
                let i = be.first + r1 as isize;
                if i < 0 || i as usize >= n {
                    continue;
                }
                for (r2, v2) in d2.iter().enumerate() {
                    let l = be.first + r2 as isize;
                    if l < 0 || l as usize >= n {
                        continue;
                    }
                    h[(i as usize, l as usize)] += 0.5 * (b - a) * w * v1 * v2;
                }
            }
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignStatus {
    Converged,
    Stalled,
    MaxIterations,
    InfeasibleSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub profile: BellProfile,
    pub trace: Vec<TraceEntry>,
    pub status: DesignStatus,
    pub residuals: ResidualVector,
    pub explanation: String,
}

impl DesignResult {
    pub fn initial_objective(&self) -> Option<f64> {
        self.trace.first().map(|t| t.objective)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().map(|t| t.objective)
    }

    /// CSV with columns `iter,objective,step`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iter", "objective", "step"])?;
        for t in &self.trace {
            wr.write_record(&[t.iter.to_string(), format!("{:e}", t.objective), format!("{:e}", t.step)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

const RELATIVE_FTOL: f64 = 1e-12;

/// Levenberg–Marquardt on the sampled residuals plus the curvature penalty.
pub fn design(init: &BellProfile, config: &DesignConfig) -> Result<DesignResult> {
    config.validate()?;
    if !config.support_feasible() {
        return Ok(DesignResult {
            profile: init.clone(),
            trace: vec![],
            status: DesignStatus::InfeasibleSupport,
            residuals: residuals(init, config.samples_per_unit),
            explanation: format!(
                "support [{}, {}] has R1 <= 2 R0 + 2: cross-scale cancellation is impossible for a smooth complete profile",
                config.support.0, config.support.1
            ),
        });
    }
    let obj = Objective::new(config)?;
    let mut c = obj.initial_params(init);
    let mut f = obj.value(&c);
    let mut trace = vec![TraceEntry { iter: 0, objective: f, step: 0.0 }];
    let mut status = DesignStatus::MaxIterations;
    let np = c.len();
    let mut damping = -1.0;
    if config.max_iters == 0 {
        return Ok(DesignResult {
            profile: init.clone(),
            trace,
            status: DesignStatus::MaxIterations,
            residuals: residuals(init, config.samples_per_unit),
            explanation: "no iterations requested".into(),
        });
    }
    for it in 1..=config.max_iters {
        let (r, j) = obj.residuals_and_jacobian(&c);
        let cv = DVector::from_column_slice(&c);
        let jt = j.transpose();
        let normal = &jt * &j + &obj.reg * config.mu;
        let g = &jt * r + (&obj.reg * &cv) * config.mu;
        if g.norm() <= 1e-15 * (1.0 + f) {
            status = DesignStatus::Converged;
            break;
        }
        if damping < 0.0 {
            damping = 1e-3 * (0..np).map(|i| normal[(i, i)]).fold(0.0, f64::max).max(1e-12);
        }
        let mut accepted = None;
        for _ in 0..30 {
            let mut m = normal.clone();
            for i in 0..np {
                m[(i, i)] += damping;
            }
            let Some(delta) = m.lu().solve(&(-&g)) else {
                damping *= 4.0;
                continue;
            };
            let cand: Vec<f64> = c.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let fc = obj.value(&cand);
            if fc < f {
                accepted = Some((cand, fc, delta.norm()));
                damping = (damping / 3.0).max(1e-15);
                break;
            }
            damping *= 4.0;
        }
        let Some((cand, fc, step)) = accepted else {
            status = DesignStatus::Stalled;
            break;
        };
        let rel = (f - fc) / f.max(f64::MIN_POSITIVE);
        c = cand;
        f = fc;
        trace.push(TraceEntry { iter: it, objective: f, step });
        if rel < RELATIVE_FTOL || f < 1e-14 {
            status = DesignStatus::Converged;
            break;
        }
    }
    let profile = obj.profile(&c)?;
    let res = residuals(&profile, config.samples_per_unit);
    Ok(DesignResult {
        profile,
        trace,
        status,
        residuals: res,
        explanation: String::new(),
    })
}

/// Gram deviation `G[p,q] − δ_{pq}` implied by the A and B residual functions.
pub fn implied_gram_deviation(b: &BellProfile, p: BasisIndex, q: BasisIndex, spec: &QuadSpec) -> Result<Complex64> {
    let (lo, hi) = b.support();
    let (p, q, conj) = if p.j <= q.j { (p, q, false) } else { (q, p, true) };
    let r = (q.j - p.j) as usize;
    let mut bps: Vec<f64> = vec![];
    let v = if r == 0 {
        let d = (p.k - q.k) as f64;
        for x in b.breakpoints().iter().chain([lo, hi].iter()) {
            bps.push(x - x.floor());
        }
        integrate(
            |u| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * d * u) * a_residual(b, u),
            Interval::new(f64::MIN_POSITIVE.max(1e-300), 1.0),
            d.abs(),
            &bps,
            spec,
        )?
        .value
    } else if r > r_max((lo, hi)) {
        Complex64::new(0.0, 0.0)
    } else {
        let per = (r as f64).exp2();
        let m = (per as i64 * p.k - q.k) as f64;
        for x in b.breakpoints().iter().chain([lo, hi].iter()) {
            bps.push(x - per * (x / per).floor());
            let y = x * per;
            bps.push(y - per * (y / per).floor());
        }
        let iv = integrate(
            |u| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * m * u / per) * b_residual(b, r, u),
            Interval::new(1e-300, per),
            m.abs() / per,
            &bps,
            spec,
        )?
        .value;
        iv * (1.0 - r as f64 / 2.0).exp2()
    };
    Ok(if conj { v.conj() } else { v })
}

/// `max |(G − I) − implied|` over `w`, with `G` from the transform module.
pub fn gram_consistency(b: &BellProfile, w: IndexWindow, spec: &QuadSpec) -> Result<f64> {
    let g = crate::transform::gram(b, w, spec)?;
    let idx: Vec<BasisIndex> = w.indices().collect();
    let devs: Vec<f64> = idx
        .par_iter()
        .map(|&p| {
            let mut m: f64 = 0.0;
            for &q in &idx {
                let want = implied_gram_deviation(b, p, q, spec)?;
                let got = g.get(p, q) - if p == q { 1.0 } else { 0.0 };
                m = m.max((got - want).norm());
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{make_meyer, make_shannon};
    use rand::{Rng, SeedableRng};

    #[test]
    fn shannon_residuals_vanish() {
        let r = residuals(&make_shannon(), 64);
        assert!(r.max_abs() <= 1e-14, "{}", r.max_abs());
        assert_eq!(r.b.len(), 1);
    }

    #[test]
    fn meyer_residuals_negative_control() {
        let r = residuals(&make_meyer(), 64);
        assert!(r.a_inf() > 0.3 && r.b_inf(1) > 0.05, "{} {}", r.a_inf(), r.b_inf(1));
    }

    #[test]
    fn zero_profile_residuals() {
        let z = BellProfile::spline_from_coeffs((0.25, 3.0), 3, vec![0.0; 20]).unwrap();
        let r = residuals(&z, 16);
        assert!(r.a.iter().all(|&v| v == -1.0) && r.c.iter().all(|&v| v == -0.5));
        assert_eq!(r.max_abs(), 1.0);
        assert!(r.b.iter().flatten().all(|&v| v == 0.0));
        let obj = Objective::new(&DesignConfig::default()).unwrap();
        assert!((obj.value(&[0.0; 20]) - 1.25).abs() < 1e-14);
    }

    #[test]
    fn objective_residuals_match_profile_residuals() {
        let cfg = DesignConfig { samples_per_unit: 16, ..DesignConfig::default() };
        let obj = Objective::new(&cfg).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (r, _) = obj.residuals_and_jacobian(&c);
        let res = residuals(&obj.profile(&c).unwrap(), 16);
        let flat: Vec<f64> = res.a.iter().map(|v| v * obj.scale[0])
            .chain(res.b.iter().flatten().map(|v| v * obj.scale[1]))
            .chain(res.c.iter().map(|v| v * obj.scale[2]))
            .collect();
        assert_eq!(flat.len(), r.len());
        for (a, b) in flat.iter().zip(r.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = DesignConfig { samples_per_unit: 16, ..DesignConfig::default() };
        let obj = Objective::new(&cfg).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let c: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = obj.value_and_gradient(&c);
            for i in [0, 7, 19] {
                let h = 1e-6;
                let mut cp = c.clone();
                cp[i] += h;
                let mut cm = c.clone();
                cm[i] -= h;
                let fd = (obj.value(&cp) - obj.value(&cm)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3), "{i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn shannon_passthrough() {
        let s = make_shannon();
        let cfg = DesignConfig::for_init(&s);
        let obj = Objective::new(&cfg).unwrap();
        assert!(obj.value(&obj.initial_params(&s)) <= 1e-3);
        let res = design(&s, &cfg).unwrap();
        assert!(res.trace.len() <= 2 && res.final_objective().unwrap() <= 1e-3);
    }

    #[test]
    fn infeasible_support_refused() {
        let cfg = DesignConfig { support: (1.0, 3.5), ..DesignConfig::default() };
        let r = design(&make_meyer(), &cfg).unwrap();
        assert_eq!(r.status, DesignStatus::InfeasibleSupport);
    }

    #[test]
    fn zero_iterations_returns_init() {
        let m = make_meyer();
        let cfg = DesignConfig { max_iters: 0, ..DesignConfig::default() };
        let r = design(&m, &cfg).unwrap();
        assert_eq!(r.profile, m);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn short_run_is_monotone() {
        let s = make_shannon();
        let cfg = DesignConfig { max_iters: 15, samples_per_unit: 32, ..DesignConfig::default() };
        let r = design(&s, &cfg).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].objective <= w[0].objective));
        assert!(r.final_objective().unwrap() < r.initial_objective().unwrap());
        let mut buf = vec![];
        r.write_trace_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iter,objective,step\n"));
    }

    #[test]
    fn implied_gram_matches_transform_gram() {
        let spec = QuadSpec::default();
        for b in [make_meyer(), BellProfile::spline_from_coeffs((0.25, 3.0), 3, (0..20).map(|i| ((i as f64) * 0.37).sin()).collect()).unwrap()] {
            let d = gram_consistency(&b, IndexWindow::new(-1, 1, 4).unwrap(), &spec).unwrap();
            assert!(d <= 1e-6, "{d}");
        }
    }
}
