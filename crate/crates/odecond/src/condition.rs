//! Exact and asymptotic condition numbers of `y0 ↦ e^{tA} y0`, the
//! OSF·OT factorization with its envelopes, and the finite-time bounds
//! `ε(t, u)` and `ε(t)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, NormP, Result};
use crate::linalg::{induced_norm, mat_exp, vec_norm, DenseMatrix};
use crate::minimax::{h_envelope, q1};
use crate::oscillator::{f_vw, f_vw_max, f_vw_min, g_factor, phase_state, VWPair};
use crate::spectral::{
    analyze_spectrum, block_project, BlockKind, EigenBlock, SpectrumAnalysis, DEFAULT_GROUP_TOL,
};

/// `|ŵ₁u| ≤ ZERO_REL·‖u‖` is a genericity violation.
pub const ZERO_REL: f64 = 1e-12;
/// `|ŵ₁u| ≤ WARN_REL·‖u‖` is reported as a warning.
pub const WARN_REL: f64 = 1e-6;
/// Default t-grid density per period `π/ω₁`.
pub const SAMPLES_PER_PERIOD: usize = 256;

/// Matrix, initial value, optional perturbation direction, norm and times.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub matrix: DenseMatrix,
    pub y0: Vec<f64>,
    pub z0: Option<Vec<f64>>,
    pub norm_p: NormP,
    pub t_grid: Vec<f64>,
}

impl Scenario {
    pub fn new(
        matrix: DenseMatrix,
        y0: Vec<f64>,
        z0: Option<Vec<f64>>,
        norm_p: NormP,
        t_grid: Vec<f64>,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let n = matrix.rows();
        if y0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y0.len(),
            });
        }
        if !(vec_norm(&y0, norm_p) > 0.0) || y0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("y0 must be finite and nonzero".into()));
        }
        if let Some(z) = &z0 {
            if z.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: z.len(),
                });
            }
            let nz = vec_norm(z, norm_p);
            if (nz - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "z0 must be a unit vector in the {norm_p}-norm, has norm {nz}"
                )));
            }
        }
        if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "t grid must be finite and increasing".into(),
            ));
        }
        Ok(Self {
            matrix,
            y0,
            z0,
            norm_p,
            t_grid,
        })
    }

    /// `ŷ0 = y0 / ‖y0‖`.
    pub fn y_hat(&self) -> Vec<f64> {
        let n = vec_norm(&self.y0, self.norm_p);
        self.y0.iter().map(|x| x / n).collect()
    }

    pub fn is_directional(&self) -> bool {
        self.z0.is_some()
    }
}

/// `‖e^{tA}ẑ0‖ / ‖e^{tA}ŷ0‖`.
pub fn k_exact_directional(a: &DenseMatrix, t: f64, y0: &[f64], z0: &[f64], p: NormP) -> Result<f64> {
    let e = mat_exp(a, t)?;
    let ny = vec_norm(y0, p);
    let yh: Vec<f64> = y0.iter().map(|x| x / ny).collect();
    Ok(vec_norm(&e.mul_vec(z0), p) / vec_norm(&e.mul_vec(&yh), p))
}

/// `‖e^{tA}‖ / ‖e^{tA}ŷ0‖` with the real induced norm.
pub fn k_exact_worst(a: &DenseMatrix, t: f64, y0: &[f64], p: NormP) -> Result<f64> {
    let e = mat_exp(a, t)?;
    let ny = vec_norm(y0, p);
    let yh: Vec<f64> = y0.iter().map(|x| x / ny).collect();
    Ok(induced_norm(e.as_nalgebra(), p) / vec_norm(&e.mul_vec(&yh), p))
}

/// Exact condition number: directional when the scenario carries `z0`.
pub fn k_exact(s: &Scenario, t: f64) -> Result<f64> {
    match &s.z0 {
        Some(z) => k_exact_directional(&s.matrix, t, &s.y0, z, s.norm_p),
        None => k_exact_worst(&s.matrix, t, &s.y0, s.norm_p),
    }
}

fn checked_modulus(block: &EigenBlock, u: &[f64], p: NormP) -> Result<f64> {
    let m = block.w_dot(u).norm();
    if m <= ZERO_REL * vec_norm(u, p) {
        return Err(Error::ZeroProjection { modulus: m });
    }
    Ok(m)
}

/// Asymptotic condition number from `g` factors of the leading block:
/// `|ŵẑ0| g(t,ẑ0) / (|ŵŷ0| g(t,ŷ0))` or `g(t) / (|ŵŷ0| g(t,ŷ0))`.
pub fn k_asym(s: &Scenario, analysis: &SpectrumAnalysis, t: f64) -> Result<f64> {
    let b = analysis.require_leading_supported()?;
    let p = s.norm_p;
    let yh = s.y_hat();
    let wy = checked_modulus(b, &yh, p)?;
    let gy = g_factor(b, t, Some(&yh), p)?;
    let num = match &s.z0 {
        Some(z) => checked_modulus(b, z, p)? * g_factor(b, t, Some(z), p)?,
        None => g_factor(b, t, None, p)?,
    };
    Ok(num / (wy * gy))
}

/// Oscillation scale factor `|ŵẑ0| / |ŵŷ0|` or `1 / |ŵŷ0|`.
pub fn osf(s: &Scenario, block1: &EigenBlock) -> Result<f64> {
    let yh = s.y_hat();
    let wy = checked_modulus(block1, &yh, s.norm_p)?;
    Ok(match &s.z0 {
        Some(z) => checked_modulus(block1, z, s.norm_p)? / wy,
        None => 1.0 / wy,
    })
}

/// `sqrt(2 / ((1+W)c² + (1−W)d²))` from the coordinates of `ŷ0` on the
/// right singular vectors of `R₁` (worst-case OSF, Euclidean norm).
pub fn osf_coordinates(s: &Scenario, block1: &EigenBlock) -> Result<f64> {
    let e = block1.ellipse()?;
    let pr = block_project(block1, &s.y_hat())?;
    Ok((2.0 / ((1.0 + e.w_mod) * pr.c * pr.c + (1.0 - e.w_mod) * pr.d * pr.d)).sqrt())
}

fn require_euclid_complex(s: &Scenario, block1: &EigenBlock) -> Result<VWPair> {
    if s.norm_p != NormP::Two {
        return Err(Error::UnsupportedNorm(format!(
            "oscillating term needs p = 2, got {}",
            s.norm_p
        )));
    }
    if block1.kind != BlockKind::SimpleSingleComplex {
        return Err(Error::InvalidParameter(
            "oscillating term needs a complex leading block".into(),
        ));
    }
    let e = block1.ellipse()?;
    Ok(VWPair {
        v: e.v_mod,
        w: e.w_mod,
    })
}

/// Oscillating term. Directional: `sqrt(f_{VV}(x + Δ(ŷ0) + π, x'))` with
/// `x' = Δ(ẑ0) − Δ(ŷ0) − π`; worst case:
/// `sqrt((1 − W²)/2 · f^max_VW(x) / (1 + V cos(x + Δ(ŷ0))))`.
pub fn ot(s: &Scenario, block1: &EigenBlock, t: f64) -> Result<f64> {
    let p = require_euclid_complex(s, block1)?;
    let yh = s.y_hat();
    let sy = phase_state(block1, t, &yh)?;
    match &s.z0 {
        Some(z) => {
            let sz = phase_state(block1, t, z)?;
            let pvv = VWPair { v: p.v, w: p.v };
            let alpha = sy.x + sy.delta_u + PI;
            let xp = sz.delta_u - sy.delta_u - PI;
            Ok(f_vw(pvv, alpha, xp).sqrt())
        }
        None => {
            let den = 1.0 + p.v * (sy.x + sy.delta_u).cos();
            Ok(((1.0 - p.w * p.w) / 2.0 * f_vw_max(p, sy.x) / den).sqrt())
        }
    }
}

/// OSF together with the per-`y0` and universal bounds of the OT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationProfile {
    pub osf: f64,
    pub period: f64,
    pub ot_min: f64,
    pub ot_max: f64,
    pub a_max: f64,
    pub a_minmax: f64,
    pub a_maxmin: f64,
    pub a_min: f64,
    pub q1: f64,
    pub block_kind: BlockKind,
    pub directional: bool,
}

/// Universal worst-case OT bounds `(a_max, a_minmax, a_maxmin, a_min)`.
pub fn a_values(p: VWPair) -> (f64, f64, f64, f64) {
    let (v, w) = (p.v, p.w);
    let q = q1(p);
    let a_max = ((1.0 + w) * (1.0 + v) / (2.0 * (1.0 - v))).sqrt();
    let a_minmax = if q <= 1.0 {
        ((1.0 + w) / 2.0 * (1.0 - v * v) / (1.0 - q * v)).sqrt()
    } else {
        ((1.0 - w) * (1.0 + v) / (2.0 * (1.0 - v))).sqrt()
    };
    let a_maxmin = ((1.0 + w) / 2.0).sqrt();
    let a_min = if v <= w {
        ((1.0 + w) * (1.0 - v) / (2.0 * (1.0 + v))).sqrt()
    } else {
        ((1.0 - w) / 2.0).sqrt()
    };
    (a_max, a_minmax, a_maxmin, a_min)
}

/// Envelope of the oscillating term over `t` for this scenario.
///
/// For the directional form the universal bounds are
/// `sqrt((1 ± V)/(1 ∓ V))` and both inner values equal 1.
pub fn ot_envelope(s: &Scenario, block1: &EigenBlock) -> Result<OscillationProfile> {
    let p = require_euclid_complex(s, block1)?;
    let yh = s.y_hat();
    let sy = phase_state(block1, 0.0, &yh)?;
    let osf_v = osf(s, block1)?;
    let period = PI / block1.omega;
    let (ot_min, ot_max, a) = match &s.z0 {
        Some(z) => {
            let sz = phase_state(block1, 0.0, z)?;
            let pvv = VWPair { v: p.v, w: p.v };
            let xp = sz.delta_u - sy.delta_u - PI;
            let (lo, hi) = if p.v == 0.0 {
                (1.0, 1.0)
            } else {
                (f_vw_min(pvv, xp).sqrt(), f_vw_max(pvv, xp).sqrt())
            };
            let amax = ((1.0 + p.v) / (1.0 - p.v)).sqrt();
            (lo, hi, (amax, 1.0, 1.0, 1.0 / amax))
        }
        None => {
            let c = (1.0 - p.w * p.w) / 2.0;
            let env = h_envelope(p, sy.delta_u);
            ((c * env.h_min).sqrt(), (c * env.h_max).sqrt(), a_values(p))
        }
    };
    Ok(OscillationProfile {
        osf: osf_v,
        period,
        ot_min,
        ot_max,
        a_max: a.0,
        a_minmax: a.1,
        a_maxmin: a.2,
        a_min: a.3,
        q1: q1(p),
        block_kind: block1.kind,
        directional: s.z0.is_some(),
    })
}

/// `ε(t, u)` (with `u`) or `ε(t)` (without), and the ratios `G_j` for
/// `j ≥ 2`.
///
/// A block whose projection `|ŵ_j u|` vanishes contributes zero and
/// reports `G_j = 0`.
pub fn epsilon_bounds(
    analysis: &SpectrumAnalysis,
    t: f64,
    u: Option<&[f64]>,
    p: NormP,
) -> Result<(f64, Vec<f64>)> {
    analysis.require_all_supported()?;
    let b1 = analysis.leading();
    let (w1, g1) = match u {
        Some(u) => (checked_modulus(b1, u, p)?, g_factor(b1, t, Some(u), p)?),
        None => (1.0, g_factor(b1, t, None, p)?),
    };
    let mut eps = 0.0;
    let mut ratios = Vec::with_capacity(analysis.q.saturating_sub(1));
    for bj in &analysis.blocks[1..] {
        let decay = ((bj.r - b1.r) * t).exp();
        let (wj, gj) = match u {
            Some(u) => {
                let m = bj.w_dot(u).norm();
                if m <= ZERO_REL * vec_norm(u, p) {
                    (0.0, 0.0)
                } else {
                    (m, g_factor(bj, t, Some(u), p)?)
                }
            }
            None => (1.0, g_factor(bj, t, None, p)?),
        };
        let gr = gj / g1;
        ratios.push(gr);
        eps += decay * (bj.f / b1.f) * (wj / w1) * gr;
    }
    Ok((eps, ratios))
}

/// `(ε_num + ε(t, ŷ0)) / (1 − ε(t, ŷ0))`, or `None` when `ε(t, ŷ0) ≥ 1`.
pub fn precision_bound(eps_num: f64, eps_tu: f64) -> Option<f64> {
    (eps_tu < 1.0).then(|| (eps_num + eps_tu) / (1.0 - eps_tu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub k_exact: f64,
    pub k_asym: f64,
    pub osf: f64,
    /// NaN where the oscillating term is undefined (real block or p ≠ 2).
    pub ot: f64,
    /// `ε(t)`, or `ε(t, ẑ0)` for a directional scenario.
    pub eps_t: f64,
    pub eps_tu: f64,
    /// `None` marks UNBOUNDED.
    pub precision_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSeries {
    pub samples: Vec<Sample>,
    pub directional: bool,
    pub warnings: Vec<String>,
}

impl ConditionSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,k_exact,k_asym,osf,ot,eps_t,eps_tu,precision_bound\n");
        for x in &self.samples {
            let pb = match x.precision_bound {
                Some(b) => format!("{b:.16e}"),
                None => "UNBOUNDED".to_string(),
            };
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{pb}",
                x.t, x.k_exact, x.k_asym, x.osf, x.ot, x.eps_t, x.eps_tu
            );
        }
        s
    }
}

/// `n` equispaced times on `[t0, t1]`, or the default density of
/// [`SAMPLES_PER_PERIOD`] per period `π/ω₁` when `steps` is `None`.
pub fn t_grid(analysis: &SpectrumAnalysis, t0: f64, t1: f64, steps: Option<usize>) -> Vec<f64> {
    let n = steps.unwrap_or_else(|| {
        let b = analysis.leading();
        if b.omega > 0.0 {
            let per = PI / b.omega;
            ((t1 - t0) / per * SAMPLES_PER_PERIOD as f64).ceil() as usize + 1
        } else {
            SAMPLES_PER_PERIOD
        }
    });
    let n = n.max(2);
    (0..n)
        .map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64)
        .collect()
}

fn projection_warnings(s: &Scenario, analysis: &SpectrumAnalysis) -> Vec<String> {
    let b = analysis.leading();
    let mut out = Vec::new();
    let mut check = |name: &str, u: &[f64]| {
        let m = b.w_dot(u).norm();
        let nu = vec_norm(u, s.norm_p);
        if m > ZERO_REL * nu && m <= WARN_REL * nu {
            out.push(format!(
                "near-zero projection of {name} on the leading left eigenvector: {m:.3e}"
            ));
        }
    };
    check("y0", &s.y_hat());
    if let Some(z) = &s.z0 {
        check("z0", z);
    }
    out
}

/// Spectrum of the scenario matrix with the default grouping tolerance.
pub fn analyze(s: &Scenario) -> Result<SpectrumAnalysis> {
    analyze_spectrum(&s.matrix, s.norm_p, DEFAULT_GROUP_TOL)
}

/// Evaluate every quantity on the scenario's t-grid.
///
/// Samples may be computed in parallel; the output follows grid order. The
/// exponential is taken of `A − r₁I`, which leaves every ratio unchanged
/// and keeps long horizons finite.
pub fn sweep(s: &Scenario, analysis: &SpectrumAnalysis) -> Result<ConditionSeries> {
    let b1 = analysis.require_leading_supported()?;
    let yh = s.y_hat();
    checked_modulus(b1, &yh, s.norm_p)?;
    if let Some(z) = &s.z0 {
        checked_modulus(b1, z, s.norm_p)?;
    }
    let all_supported = analysis.require_all_supported().is_ok();
    let n = s.matrix.rows();
    let shifted = DenseMatrix::from_nalgebra(
        s.matrix.as_nalgebra() - nalgebra::DMatrix::<f64>::identity(n, n) * b1.r,
    )?;
    let osf_v = osf(s, b1)?;
    let has_ot = s.norm_p == NormP::Two && b1.is_complex();

    let samples = s
        .t_grid
        .par_iter()
        .map(|&t| -> Result<Sample> {
            let k_ex = match &s.z0 {
                Some(z) => k_exact_directional(&shifted, t, &yh, z, s.norm_p)?,
                None => k_exact_worst(&shifted, t, &yh, s.norm_p)?,
            };
            let k_as = k_asym(s, analysis, t)?;
            let ot_v = if has_ot { ot(s, b1, t)? } else { f64::NAN };
            let (eps_t, eps_tu, bound) = if all_supported {
                let num = match &s.z0 {
                    Some(z) => epsilon_bounds(analysis, t, Some(z), s.norm_p)?.0,
                    None => epsilon_bounds(analysis, t, None, s.norm_p)?.0,
                };
                let eu = epsilon_bounds(analysis, t, Some(&yh), s.norm_p)?.0;
                (num, eu, precision_bound(num, eu))
            } else {
                (f64::NAN, f64::NAN, None)
            };
            Ok(Sample {
                t,
                k_exact: k_ex,
                k_asym: k_as,
                osf: osf_v,
                ot: ot_v,
                eps_t,
                eps_tu,
                precision_bound: bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = projection_warnings(s, analysis);
    if !all_supported {
        warnings.push("a trailing spectral block is unsupported; epsilon bounds omitted".into());
    }
    Ok(ConditionSeries {
        samples,
        directional: s.z0.is_some(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exact_at_zero_time() {
        let a = m(&[&[0.3, 2.0], &[-1.0, 0.1]]);
        let y = [3.0, -1.0];
        let z = [0.6, 0.8];
        assert!((k_exact_directional(&a, 0.0, &y, &z, NormP::Two).unwrap() - 1.0).abs() < 1e-15);
        assert!((k_exact_worst(&a, 0.0, &y, NormP::Two).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn real_leading_block_constant() {
        let a = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let s = Scenario::new(a, vec![3.0, 4.0], None, NormP::Two, vec![0.0, 1.0]).unwrap();
        let an = analyze(&s).unwrap();
        for t in [0.0, 2.0, 9.0] {
            assert!((k_asym(&s, &an, t).unwrap() - 1.0 / 0.6).abs() < 1e-14);
        }
    }

    #[test]
    fn osf_of_equal_directions() {
        let a = m(&[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 0.0, -1.0]]);
        let y = vec![0.6, 0.0, 0.8];
        let s = Scenario::new(a, y.clone(), Some(y), NormP::Two, vec![0.0]).unwrap();
        let an = analyze(&s).unwrap();
        assert!((osf(&s, an.leading()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn precision_bound_cases() {
        assert_eq!(precision_bound(0.0, 0.0), Some(0.0));
        assert_eq!(precision_bound(0.01, 0.01), Some(0.02 / 0.99));
        assert_eq!(precision_bound(0.5, 1.0), None);
    }

    #[test]
    fn epsilon_of_diagonal() {
        let a = m(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let an = analyze_spectrum(&a, NormP::Two, DEFAULT_GROUP_TOL).unwrap();
        let u = [std::f64::consts::FRAC_1_SQRT_2; 2];
        for t in [0.0, 0.5, 3.0] {
            let (e, g) = epsilon_bounds(&an, t, Some(&u), NormP::Two).unwrap();
            assert!((e - (-2.0 * t).exp()).abs() < 1e-15);
            assert_eq!(g, vec![1.0]);
        }
    }

    #[test]
    fn single_block_has_no_epsilon() {
        let a = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let an = analyze_spectrum(&a, NormP::Two, DEFAULT_GROUP_TOL).unwrap();
        assert_eq!(epsilon_bounds(&an, 1.0, None, NormP::Two).unwrap().0, 0.0);
    }

    #[test]
    fn unit_z0_enforced() {
        let a = m(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let e = Scenario::new(a, vec![1.0, 0.0], Some(vec![1.0, 1.0]), NormP::Two, vec![0.0]);
        assert!(e.is_err());
    }
}
