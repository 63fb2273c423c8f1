//! Explicit constants for the coefficient estimates and their empirical checks.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{eval_psi_derivatives, BasisIndex, IndexWindow, Interval};
use crate::bell::{BellProfile, Smoothness};
use crate::error::{invalid, Error, Result};
use crate::function::SampledFunction;
use crate::quadrature::{integrate, QuadSpec};
use crate::seminorm::{s_norm, scaled_cn_seminorm, weight, x_norm, y_norm, LogGrid, NormValue};
use crate::transform::{analyze, CoeffArray};

/// Points per unit length of `K_ψ` when maximizing profile quantities.
const PROFILE_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Ok,
    Violated,
    /// The source norm diverges on the probe grid; nothing to compare.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeInventory {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<IndexWindow>,
    pub entries: usize,
    /// Entries left out because the normalizing seminorm is numerically zero.
    pub skipped: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub c_explicit: f64,
    pub ratio: f64,
    pub margin: f64,
    pub status: BoundStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<BasisIndex>,
    pub probes: ProbeInventory,
}

impl BoundReport {
    fn new(bound: &str, n: usize, lambda: Option<f64>, c: f64, ratio: f64, worst: Option<BasisIndex>, probes: ProbeInventory) -> Self {
        BoundReport {
            bound: bound.into(),
            n,
            lambda,
            c_explicit: c,
            ratio,
            margin: c - ratio,
            status: if ratio <= c { BoundStatus::Ok } else { BoundStatus::Violated },
            worst,
            probes,
        }
    }

    fn vacuous(bound: &str, n: usize, lambda: Option<f64>, c: f64, note: String) -> Self {
        BoundReport {
            bound: bound.into(),
            n,
            lambda,
            c_explicit: c,
            ratio: 0.0,
            margin: c,
            status: BoundStatus::Vacuous,
            worst: None,
            probes: ProbeInventory {
                window: None,
                entries: 0,
                skipped: 0,
                notes: vec![note],
            },
        }
    }

    pub fn holds(&self) -> bool {
        self.status != BoundStatus::Violated
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.lambda.map(|l| format!(" lambda={l}")).unwrap_or_default();
        write!(
            f,
            "{:<12} n={}{:<12} C={:<12.6e} ratio={:<12.6e} margin={:<12.6e} {:?}",
            self.bound, self.n, l, self.c_explicit, self.ratio, self.margin, self.status
        )
    }
}

fn profile_points(b: &BellProfile) -> Vec<f64> {
    let (lo, hi) = b.support();
    let n = ((hi - lo) * PROFILE_GRID as f64).ceil() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    xs.extend(b.breakpoints());
    xs
}

/// `‖ψ‖_{C^n_{K_ψ}}` for `ψ = √2·b` (piecewise derivatives).
pub fn psi_cn_norm(b: &BellProfile, n: usize) -> f64 {
    profile_points(b)
        .iter()
        .flat_map(|&x| b.derivatives(x, n))
        .map(|v| SQRT_2 * v.abs())
        .fold(0.0, f64::max)
}

/// `‖ψ‖_{X_{μ,n}} = max_{m≤n} sup_{K_ψ} ω_μ(u) u^m |ψ^{(m)}(u)|`.
pub fn psi_x_norm(b: &BellProfile, mu: f64, n: usize) -> f64 {
    profile_points(b)
        .iter()
        .map(|&u| {
            let w = u.max(1.0 / u).powf(mu);
            b.derivatives(u, n)
                .iter()
                .enumerate()
                .map(|(m, v)| w * u.powi(m as i32) * SQRT_2 * v.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn check_profile_order(b: &BellProfile, n: usize) -> Result<()> {
    if n > b.global_smoothness() {
        return Err(Error::InsufficientSmoothness {
            needed: n,
            available: b.global_smoothness(),
        });
    }
    Ok(())
}

/// `C_n = 2^n (1 + 2^n (R₁−R₀) ‖ψ‖_{C^n}/(2π)^n + (R₁−R₀) ‖ψ‖_{C^0})`.
///
/// n-fold integration by parts against `e^{2πiku}` gives `|k|^{−n}·2^n(R₁−R₀)‖ψ‖_{C^n}/(2π)^n`,
/// the trivial estimate covers `k = 0`, and `(1+|k|)^n ≤ 2^n max{1,|k|^n}`.
pub fn lemma1_constant(b: &BellProfile, n: usize) -> f64 {
    let (lo, hi) = b.support();
    let p = 2f64.powi(n as i32);
    p * (1.0 + p * (hi - lo) * psi_cn_norm(b, n) / (2.0 * PI).powi(n as i32) + (hi - lo) * psi_cn_norm(b, 0))
}

/// `C′_n = (4^n π^{n+2}/3) ‖ψ‖_{C^n}`; dominates `(2π)^n (π²/3 − 1) ‖ψ‖_{C^n}`.
pub fn lemma2_constant(b: &BellProfile, n: usize) -> f64 {
    4f64.powi(n as i32) * PI.powi(n as i32 + 2) / 3.0 * psi_cn_norm(b, n)
}

/// `sup_{K_ψ} ω_{|λ|}(x)/min{1, x^n}`.
pub fn iso_a_factor(b: &BellProfile, lambda: f64, n: usize) -> f64 {
    profile_points(b)
        .iter()
        .map(|&x| weight(lambda.abs(), x).unwrap() / x.powi(n as i32).min(1.0))
        .fold(0.0, f64::max)
}

/// `Σ_{j∈[j_min, j_max]} 2^{−|j|/2}`.
pub fn window_geometric_sum(j_min: i32, j_max: i32) -> f64 {
    (j_min..=j_max).map(|j| (-(j.abs() as f64) / 2.0).exp2()).sum()
}

pub fn iso_a_constant(b: &BellProfile, lambda: f64, n: usize) -> f64 {
    lemma1_constant(b, n) * iso_a_factor(b, lambda, n)
}

pub fn iso_b_constant(b: &BellProfile, lambda: f64, n: usize, j_min: i32, j_max: i32) -> f64 {
    let (_, hi) = b.support();
    let sup_pow = hi.powi(n as i32).max(1.0);
    4f64.powi(n as i32) * PI.powi(n as i32 + 2) / 3.0 * sup_pow * window_geometric_sum(j_min, j_max) * psi_x_norm(b, (lambda - 1.0).abs(), n)
}

/// Empirical `max |c_{j,k}|(1+|k|)^n / (2^{j/2} ‖φ(2^j·)‖_{C^n_{K_ψ}})` against [`lemma1_constant`].
pub fn verify_lemma1(f: &SampledFunction, b: &BellProfile, w: IndexWindow, n: usize, spec: &QuadSpec) -> Result<BoundReport> {
    check_profile_order(b, n)?;
    if !f.has_derivatives(n) {
        return Err(Error::InsufficientSmoothness {
            needed: n,
            available: f.smoothness().unwrap_or(0),
        });
    }
    let c = analyze(f, b, w, spec)?;
    let k = Interval::new(b.support_lo(), b.support_hi());
    let norms: Vec<f64> = w
        .scales()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| scaled_cn_seminorm(f, j, k, n))
        .collect::<Result<_>>()?;
    let top = norms.iter().copied().fold(0.0, f64::max);
    let (mut ratio, mut worst, mut skipped, mut entries) = (0.0f64, None, 0, 0);
    for (j, &nm) in w.scales().zip(&norms) {
        let row = c.row(j).unwrap();
        if nm <= 1e-8 * top {
            skipped += row.len();
            continue;
        }
        for (kk, v) in w.ks().zip(row) {
            entries += 1;
            let r = v.norm() * (1.0 + kk.unsigned_abs() as f64).powi(n as i32) / ((j as f64 / 2.0).exp2() * nm);
            if r > ratio {
                ratio = r;
                worst = Some(BasisIndex::new(j, kk));
            }
        }
    }
    let mut notes = vec![];
    if !c.is_converged() {
        notes.push(format!("{} coefficients did not converge", c.nonconvergent.len()));
    }
    Ok(BoundReport::new(
        "lemma1",
        n,
        None,
        lemma1_constant(b, n),
        ratio,
        worst,
        ProbeInventory { window: Some(w), entries, skipped, notes },
    ))
}

/// Empirical `max |∂^m Σ_k c_k ψ_{j,k}(x)|·2^{j/2} min{1,2^{jn}} / ‖c‖_{s^{n+2}}` against [`lemma2_constant`].
pub fn verify_lemma2(row: &[Complex64], b: &BellProfile, j_range: (i32, i32), n: usize) -> Result<BoundReport> {
    if row.len() % 2 == 0 {
        return Err(invalid("coefficient row must be centred at k = 0 (odd length)"));
    }
    if let Smoothness::Finite(d) = b.smoothness_order() {
        if n > d {
            return Err(Error::InsufficientSmoothness { needed: n, available: d });
        }
    }
    let (j0, j1) = j_range;
    if j0 > j1 {
        return Err(invalid("empty scale range"));
    }
    let km = (row.len() / 2) as i64;
    let c_explicit = lemma2_constant(b, n);
    let denom = s_norm(row, n as i32 + 2);
    if denom == 0.0 {
        return Ok(BoundReport::new("lemma2", n, None, c_explicit, 0.0, None, ProbeInventory {
            window: None,
            entries: 0,
            skipped: 0,
            notes: vec!["zero row".into()],
        }));
    }
    let (lo, hi) = b.support();
    let npts = ((16 * (km as usize + 1)) as f64 * (hi - lo)).ceil().max(256.0) as usize;
    let mut us: Vec<f64> = (0..=npts).map(|i| lo + (hi - lo) * i as f64 / npts as f64).collect();
    us.extend(b.breakpoints());
    let results: Vec<(f64, i32, usize)> = (j0..=j1)
        .into_par_iter()
        .map(|j| {
            let s = (j as f64).exp2();
            let scale = (j as f64 / 2.0).exp2() * s.powi(n as i32).min(1.0);
            let mut best = 0.0f64;
            for &u in &us {
                let x = s * u;
                let mut acc = vec![Complex64::new(0.0, 0.0); n + 1];
                for (i, cv) in row.iter().enumerate() {
                    if cv.re == 0.0 && cv.im == 0.0 {
                        continue;
                    }
                    let d = eval_psi_derivatives(b, BasisIndex::new(j, i as i64 - km), x, n).expect("x > 0");
                    for (a, dv) in acc.iter_mut().zip(&d) {
                        *a += cv * dv;
                    }
                }
                for a in &acc {
                    best = best.max(a.norm() * scale / denom);
                }
            }
            (best, j, us.len())
        })
        .collect();
    let (mut ratio, mut worst, mut entries) = (0.0f64, None, 0);
    for (r, j, m) in results {
        entries += m;
        if r > ratio {
            ratio = r;
            worst = Some(BasisIndex::new(j, 0));
        }
    }
    Ok(BoundReport::new(
        "lemma2",
        n,
        None,
        c_explicit,
        ratio,
        worst,
        ProbeInventory {
            window: None,
            entries,
            skipped: 0,
            notes: vec![format!("scales {j0}..={j1}, k_max {km}")],
        },
    ))
}

/// Direction (a): `y_norm(Ψφ, λ−1/2, n) ≤ C_a·x_norm(φ, λ, n)`.
pub fn verify_iso_xy_a(
    f: &SampledFunction,
    b: &BellProfile,
    w: IndexWindow,
    lambda: f64,
    n: usize,
    grid: LogGrid,
    spec: &QuadSpec,
) -> Result<BoundReport> {
    check_profile_order(b, n)?;
    let c_a = iso_a_constant(b, lambda, n);
    let xn = match x_norm(f, lambda, n, grid)? {
        NormValue::Finite { value } => value,
        NormValue::Divergent { slope } => {
            return Ok(BoundReport::vacuous("isoXY-a", n, Some(lambda), c_a, format!("source X-norm diverges (slope {slope})")));
        }
    };
    let c = analyze(f, b, w, spec)?;
    let yn = y_norm(&c, lambda - 0.5, n as i32);
    let ratio = if xn == 0.0 { 0.0 } else { yn / xn };
    Ok(BoundReport::new(
        "isoXY-a",
        n,
        Some(lambda),
        c_a,
        ratio,
        None,
        ProbeInventory {
            window: Some(w),
            entries: w.len(),
            skipped: 0,
            notes: vec![format!("y_norm {yn:e}, x_norm {xn:e}")],
        },
    ))
}

/// Direction (b): `x_norm(synthesize(c), λ−1, n) ≤ C_b·y_norm(c, λ, n+2)`.
pub fn verify_iso_xy_b(c: &CoeffArray, b: &BellProfile, lambda: f64, n: usize, grid: LogGrid) -> Result<BoundReport> {
    if let Smoothness::Finite(d) = b.smoothness_order() {
        if n > d {
            return Err(Error::InsufficientSmoothness { needed: n, available: d });
        }
    }
    let w = c.window;
    let c_b = iso_b_constant(b, lambda, n, w.j_min, w.j_max);
    let yn = y_norm(c, lambda, n as i32 + 2);
    let f = SampledFunction::from_synthesis(c, b);
    let xn = match x_norm(&f, lambda - 1.0, n, grid)? {
        NormValue::Finite { value } => value,
        NormValue::Divergent { slope } => {
            return Ok(BoundReport::vacuous("isoXY-b", n, Some(lambda), c_b, format!("synthesis X-norm diverges (slope {slope})")));
        }
    };
    let ratio = if yn == 0.0 { 0.0 } else { xn / yn };
    Ok(BoundReport::new(
        "isoXY-b",
        n,
        Some(lambda),
        c_b,
        ratio,
        None,
        ProbeInventory {
            window: Some(w),
            entries: w.len(),
            skipped: 0,
            notes: vec![format!("x_norm {xn:e}, y_norm {yn:e}")],
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub status: String,
    pub k_max: u32,
    pub direct: [f64; 2],
    pub coefficient: [f64; 2],
    pub residual: f64,
    pub explanation: String,
}

/// `⟨f, φ⟩` computed directly; `φ` must be regular with a declared support.
pub fn direct_pairing(f: &SampledFunction, phi: &SampledFunction, spec: &QuadSpec) -> Result<Complex64> {
    if !phi.is_regular() {
        return Err(invalid("the test function must be regular"));
    }
    if let Some(masses) = f.point_mass_list() {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in masses {
            let p = m.order as usize;
            let d = phi.derivatives(m.location, p)?;
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            acc += d[p].conj() * (sign * m.weight);
        }
        return Ok(acc);
    }
    let sp = phi.support().ok_or_else(|| invalid("the test function needs a declared compact support"))?;
    let iv = match f.support() {
        Some(s) => s.intersect(&sp),
        None => Some(sp),
    };
    let Some(iv) = iv else { return Ok(Complex64::new(0.0, 0.0)) };
    let mut bps = f.breakpoints();
    bps.extend(phi.breakpoints());
    Ok(integrate(
        |x| f.value_unchecked(x) * phi.value_unchecked(x).conj(),
        iv,
        f.freq_bound(iv) + phi.freq_bound(iv),
        &bps,
        spec,
    )?
    .value)
}

/// `|⟨f, φ⟩ − Σ_w c(f)·conj(c(φ))|`; refuses bells without a known orthonormal basis.
pub fn verify_duality(f: &SampledFunction, phi: &SampledFunction, b: &BellProfile, w: IndexWindow, spec: &QuadSpec) -> Result<DualityReport> {
    if !b.is_orthonormal() {
        return Ok(DualityReport {
            status: "refused".into(),
            k_max: w.k_max,
            direct: [f64::NAN; 2],
            coefficient: [f64::NAN; 2],
            residual: f64::NAN,
            explanation: format!(
                "bell '{}' does not generate an orthonormal basis on the half-line; the coefficient pairing is not the distributional pairing",
                b.id()
            ),
        });
    }
    let direct = direct_pairing(f, phi, spec)?;
    let cf = analyze(f, b, w, spec)?;
    let cp = analyze(phi, b, w, spec)?;
    let coeff: Complex64 = cf.values.iter().zip(&cp.values).map(|(a, c)| a * c.conj()).sum();
    Ok(DualityReport {
        status: "ok".into(),
        k_max: w.k_max,
        direct: [direct.re, direct.im],
        coefficient: [coeff.re, coeff.im],
        residual: (direct - coeff).norm(),
        explanation: String::new(),
    })
}
