//! The `f_VW` family and the norms of `Θ̂_j(t,u)` and `Θ̂_j(t)`.
//!
//! `f_VW(α, x) = (1 + V cos(x+α)) / (1 − W cos α)` with `V, W ∈ [0, 1)`.
//! For fixed `x` it oscillates between a maximum at `α^max(x)` and a minimum
//! at `α^min(x)`, both available in closed form from `U(x) = V e^{ix} + W`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, NormP, Result};
use crate::linalg::{vec_norm, C64};
use crate::spectral::{block_project, BlockKind, EigenBlock, ZERO_PROJECTION};

/// Inside this relative radius around `U = 0` the one-sided limits are used.
pub const LIMIT_WINDOW: f64 = 1e-10;

/// Canonical representative of an angle in `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VWPair {
    pub v: f64,
    pub w: f64,
}

impl VWPair {
    pub fn new(v: f64, w: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&v) || !(0.0..1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "V and W must lie in [0, 1), got V = {v}, W = {w}"
            )));
        }
        Ok(Self { v, w })
    }

    /// `U(x) = V e^{ix} + W`.
    pub fn u(&self, x: f64) -> C64 {
        C64::from_polar(self.v, x) + self.w
    }
}

/// The phase `x_j(t)` and the offset `Δ_j(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub x: f64,
    pub delta_u: f64,
}

pub fn f_vw(p: VWPair, alpha: f64, x: f64) -> f64 {
    (1.0 + p.v * (x + alpha).cos()) / (1.0 - p.w * alpha.cos())
}

/// `∂f_VW/∂α` at `(α, x)`.
pub fn f_vw_dalpha(p: VWPair, alpha: f64, x: f64) -> f64 {
    let den = 1.0 - p.w * alpha.cos();
    (-p.v * (x + alpha).sin() - p.w * alpha.sin() + p.v * p.w * x.sin()) / (den * den)
}

/// Maximizing and minimizing angles of `f_VW(·, x)`, canonicalized.
pub fn alpha_extrema(p: VWPair, x: f64) -> Result<(f64, f64)> {
    let (v, w) = (p.v, p.w);
    if v == 0.0 && w == 0.0 {
        return Err(Error::DegenerateConstant);
    }
    let u = p.u(x);
    let um = u.norm();
    if um <= LIMIT_WINDOW * (v + w) {
        // V = W and x at an odd multiple of π: one-sided limits, taken on
        // the side of (−π, π] where the canonical x lies.
        let a = v.asin();
        return Ok(if wrap_angle(x) > 0.0 {
            (a - FRAC_PI_2, wrap_angle(FRAC_PI_2 - a))
        } else {
            (FRAC_PI_2 - a, wrap_angle(a + 1.5 * PI))
        });
    }
    if um == 0.0 {
        return Err(Error::DegenerateConstant);
    }
    let s = (v * w * x.sin() / um).clamp(-1.0, 1.0);
    let theta = u.im.atan2(u.re);
    let mut amax = s.asin() - theta;
    let mut amin = PI - s.asin() - theta;
    // ∂²f/∂α² has the sign of −cos(θ + α) at a stationary point.
    if -(theta + amax).cos() > 0.0 {
        std::mem::swap(&mut amax, &mut amin);
    }
    Ok((wrap_angle(amax), wrap_angle(amin)))
}

/// `max_α f_VW(α, x)`.
pub fn f_vw_max(p: VWPair, x: f64) -> f64 {
    if p.v == 0.0 || p.w == 0.0 {
        return (1.0 + p.v) / (1.0 - p.w);
    }
    let (amax, _) = alpha_extrema(p, x).expect("V, W > 0");
    f_vw(p, amax, x)
}

/// `min_α f_VW(α, x)`.
pub fn f_vw_min(p: VWPair, x: f64) -> f64 {
    if p.v == 0.0 || p.w == 0.0 {
        return (1.0 - p.v) / (1.0 + p.w);
    }
    let (_, amin) = alpha_extrema(p, x).expect("V, W > 0");
    f_vw(p, amin, x)
}

/// Extreme values over `x` of `f^max_VW` and `f^min_VW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FExtremes {
    pub max_fmax: f64,
    pub min_fmax: f64,
    pub max_fmin: f64,
    pub min_fmin: f64,
}

/// `max f^max` sits at even multiples of π, `min f^max` at odd ones; the
/// inner values split on `V ≤ W`.
pub fn f_extremes(p: VWPair) -> FExtremes {
    let (v, w) = (p.v, p.w);
    if v == 0.0 || w == 0.0 {
        let hi = (1.0 + v) / (1.0 - w);
        let lo = (1.0 - v) / (1.0 + w);
        return FExtremes {
            max_fmax: hi,
            min_fmax: hi,
            max_fmin: lo,
            min_fmin: lo,
        };
    }
    let (min_fmax, max_fmin) = if v <= w {
        ((1.0 - v) / (1.0 - w), (1.0 + v) / (1.0 + w))
    } else {
        ((1.0 + v) / (1.0 + w), (1.0 - v) / (1.0 - w))
    };
    FExtremes {
        max_fmax: (1.0 + v) / (1.0 - w),
        min_fmax,
        max_fmin,
        min_fmin: (1.0 - v) / (1.0 + w),
    }
}

fn require_complex(block: &EigenBlock) -> Result<()> {
    match block.kind {
        BlockKind::SimpleSingleComplex => Ok(()),
        _ => Err(Error::InvalidParameter("complex block required".into())),
    }
}

/// `x_j(t) = 2(ω_j t + θ_j) + δ_j`.
pub fn phase_x(block: &EigenBlock, t: f64) -> Result<f64> {
    let e = block.ellipse()?;
    Ok(2.0 * (block.omega * t + e.theta_axis) + e.delta)
}

/// `x_j(t)` together with `Δ_j(u) = 2(γ_j(u) − θ_j)`.
pub fn phase_state(block: &EigenBlock, t: f64, u: &[f64]) -> Result<PhaseState> {
    let e = block.ellipse()?;
    let pr = block_project(block, u)?;
    Ok(PhaseState {
        x: phase_x(block, t)?,
        delta_u: 2.0 * (pr.gamma - e.theta_axis),
    })
}

/// `‖Θ̂_j(t,u)‖₂ = sqrt((1 + V cos(x + Δ(u))) / 2)`.
pub fn theta_norm_u(block: &EigenBlock, t: f64, u: &[f64]) -> Result<f64> {
    require_complex(block)?;
    let e = block.ellipse()?;
    let ps = phase_state(block, t, u)?;
    Ok(((1.0 + e.v_mod * (ps.x + ps.delta_u).cos()) / 2.0).sqrt())
}

/// `‖Θ̂_j(t)‖₂ = sqrt((1 − W²)/4 · f^max_VW(x(t)))`.
pub fn theta_norm_mat(block: &EigenBlock, t: f64) -> Result<f64> {
    require_complex(block)?;
    let e = block.ellipse()?;
    let p = VWPair {
        v: e.v_mod,
        w: e.w_mod,
    };
    let x = phase_x(block, t)?;
    Ok(((1.0 - e.w_mod * e.w_mod) / 4.0 * f_vw_max(p, x)).sqrt())
}

/// Entries of `Θ̂_j(t,u)` from the polar forms of `v̂` and `ŵu`.
pub fn theta_vector(block: &EigenBlock, t: f64, u: &[f64]) -> Result<Vec<f64>> {
    require_complex(block)?;
    let wu = block.w_dot(u);
    if wu.norm() <= ZERO_PROJECTION * vec_norm(u, NormP::Two) {
        return Err(Error::ZeroProjection {
            modulus: wu.norm(),
        });
    }
    let gamma = wu.arg();
    Ok(block
        .comp_moduli_v
        .iter()
        .zip(&block.comp_angles_v)
        .map(|(m, a)| m * (block.omega * t + a + gamma).cos())
        .collect())
}

/// Entries of `Θ̂_j(t)`, row-major.
pub fn theta_matrix(block: &EigenBlock, t: f64) -> Result<Vec<Vec<f64>>> {
    require_complex(block)?;
    Ok(block
        .comp_moduli_v
        .iter()
        .zip(&block.comp_angles_v)
        .map(|(mv, a)| {
            block
                .comp_moduli_w
                .iter()
                .zip(&block.comp_angles_w)
                .map(|(mw, b)| mv * mw * (block.omega * t + a + b).cos())
                .collect()
        })
        .collect())
}

/// Vector or induced `p`-norm of `Θ̂_j` for `p ∈ {1, ∞}`, built entrywise.
pub fn theta_norm_p(block: &EigenBlock, t: f64, p: NormP, u: Option<&[f64]>) -> Result<f64> {
    if p == NormP::Two {
        return Err(Error::UnsupportedNorm(
            "entrywise theta norm takes p = 1 or inf".into(),
        ));
    }
    if let Some(u) = u {
        return Ok(vec_norm(&theta_vector(block, t, u)?, p));
    }
    let m = theta_matrix(block, t)?;
    let n = m.len();
    Ok(match p {
        NormP::Inf => m
            .iter()
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        _ => (0..n)
            .map(|l| m.iter().map(|row| row[l].abs()).sum::<f64>())
            .fold(0.0, f64::max),
    })
}

/// `g_j(t,u)` (with `u`) or `g_j(t)` (without): 1 for a real block, twice
/// the corresponding `Θ̂` norm for a complex one.
pub fn g_factor(block: &EigenBlock, t: f64, u: Option<&[f64]>, p: NormP) -> Result<f64> {
    match block.kind {
        BlockKind::SimpleSingleReal => Ok(1.0),
        BlockKind::Unsupported => Err(Error::UnsupportedBlock { index: 0 }),
        BlockKind::SimpleSingleComplex => {
            let th = match (p, u) {
                (NormP::Two, Some(u)) => theta_norm_u(block, t, u)?,
                (NormP::Two, None) => theta_norm_mat(block, t)?,
                (_, u) => theta_norm_p(block, t, p, u)?,
            };
            Ok(2.0 * th)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vw(v: f64, w: f64) -> VWPair {
        VWPair::new(v, w).unwrap()
    }

    #[test]
    fn constant_when_both_zero() {
        let p = vw(0.0, 0.0);
        assert_eq!(f_vw(p, 0.7, -2.0), 1.0);
        assert_eq!(alpha_extrema(p, 1.0), Err(Error::DegenerateConstant));
    }

    #[test]
    fn direct_value() {
        assert_eq!(f_vw(vw(0.5, 0.5), 0.0, 0.0), 3.0);
    }

    #[test]
    fn w_zero_maximizer() {
        let p = vw(0.4, 0.0);
        for x in [-2.5, -0.3, 0.0, 1.1, 3.0] {
            let (amax, _) = alpha_extrema(p, x).unwrap();
            assert!(wrap_angle(amax + x).abs() < 1e-14);
            assert!((f_vw(p, amax, x) - 1.4).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_at_pi_when_v_equals_w() {
        let (amax, amin) = alpha_extrema(vw(0.6, 0.6), PI).unwrap();
        assert!((amax - (0.6f64.asin() - FRAC_PI_2)).abs() < 1e-15);
        assert!((amin - (FRAC_PI_2 - 0.6f64.asin())).abs() < 1e-15);
        let (amax, _) = alpha_extrema(vw(0.6, 0.6), -PI + 1e-13).unwrap();
        assert!((amax - (FRAC_PI_2 - 0.6f64.asin())).abs() < 1e-15);
    }

    #[test]
    fn zero_short_circuits() {
        assert_eq!(f_vw_max(vw(0.0, 0.5), 1.0), 2.0);
        assert_eq!(f_vw_min(vw(0.5, 0.0), 1.0), 0.5);
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn vw_range_checked() {
        assert!(VWPair::new(1.0, 0.2).is_err());
        assert!(VWPair::new(0.2, -0.1).is_err());
    }
}
