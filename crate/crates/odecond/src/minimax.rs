//! `H(x, β) = f^max_VW(x) / (1 + V cos(x + β))`: its envelopes over `x`,
//! their extreme values, the stationary points at `β = 0`, and a tracer for
//! the stationary branches `x_i(β)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oscillator::{alpha_extrema, f_vw_max, wrap_angle, VWPair};

/// Grid size for the global search in [`h_envelope`].
pub const ENVELOPE_GRID: usize = 4096;
/// Grid size for root isolation in [`trace_branches`].
pub const BRANCH_GRID: usize = 2048;
/// Largest accepted move of a continued solution per β-step.
pub const TRUST_RADIUS: f64 = 0.3;
const MIN_BETA_STEP: f64 = 1e-7;

pub fn h_func(p: VWPair, x: f64, beta: f64) -> f64 {
    f_vw_max(p, x) / (1.0 + p.v * (x + beta).cos())
}

fn alpha_max(p: VWPair, x: f64) -> f64 {
    if p.v == 0.0 && p.w == 0.0 {
        return 0.0;
    }
    alpha_extrema(p, x).expect("V + W > 0").0
}

/// Left side of the stationary equation
/// `−sin(x + α^max) + sin(x + β) − V sin(α^max − β) = 0`; it carries the
/// sign of `∂H/∂x`.
pub fn stationary_residual(p: VWPair, x: f64, beta: f64) -> f64 {
    let a = alpha_max(p, x);
    -(x + a).sin() + (x + beta).sin() - p.v * (a - beta).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub h_max: f64,
    pub h_min: f64,
    pub argmax_x: f64,
    pub argmin_x: f64,
}

/// `H^max(β)` and `H^min(β)`: global search on a periodic grid, then
/// bisection on the stationary equation around every discrete local
/// extremum.
pub fn h_envelope(p: VWPair, beta: f64) -> Envelope {
    let n = ENVELOPE_GRID;
    let step = 2.0 * PI / n as f64;
    let hs: Vec<f64> = (0..n).map(|k| h_func(p, k as f64 * step, beta)).collect();
    let mut best_max = (hs[0], 0.0);
    let mut best_min = (hs[0], 0.0);
    for k in 0..n {
        let (prev, next) = (hs[(k + n - 1) % n], hs[(k + 1) % n]);
        let x = k as f64 * step;
        if hs[k] >= prev && hs[k] >= next {
            let (xr, hr) = refine(p, beta, x - step, x + step, true);
            let cand = if hr >= hs[k] { (hr, xr) } else { (hs[k], x) };
            if cand.0 > best_max.0 {
                best_max = cand;
            }
        }
        if hs[k] <= prev && hs[k] <= next {
            let (xr, hr) = refine(p, beta, x - step, x + step, false);
            let cand = if hr <= hs[k] { (hr, xr) } else { (hs[k], x) };
            if cand.0 < best_min.0 {
                best_min = cand;
            }
        }
    }
    Envelope {
        h_max: best_max.0,
        h_min: best_min.0,
        argmax_x: best_max.1.rem_euclid(2.0 * PI),
        argmin_x: best_min.1.rem_euclid(2.0 * PI),
    }
}

fn refine(p: VWPair, beta: f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    // For a maximum the residual goes from + to −, for a minimum from − to +.
    let sgn = if maximize { 1.0 } else { -1.0 };
    let ea = sgn * stationary_residual(p, a, beta);
    let eb = sgn * stationary_residual(p, b, beta);
    if ea < 0.0 || eb > 0.0 {
        return golden(p, beta, a, b, maximize);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if sgn * stationary_residual(p, m, beta) >= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    (x, h_func(p, x, beta))
}

fn golden(p: VWPair, beta: f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let obj = |x: f64| {
        let h = h_func(p, x, beta);
        if maximize {
            -h
        } else {
            h
        }
    };
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, h_func(p, x, beta))
}

/// `Q_1 = V(1 + W) / (2W)`; infinite when `W = 0 < V`, zero when `V = 0`.
pub fn q1(p: VWPair) -> f64 {
    if p.v == 0.0 {
        0.0
    } else if p.w == 0.0 {
        f64::INFINITY
    } else {
        p.v * (1.0 + p.w) / (2.0 * p.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremes {
    /// `max_β H^max(β) = H^max(π)`.
    pub maxmax: f64,
    /// `min_β H^max(β) = H^max(0)`.
    pub minmax: f64,
    /// `max_β H^min(β) = H^min(0)`.
    pub maxmin: f64,
    /// `min_β H^min(β) = H^min(π)`.
    pub minmin: f64,
    pub q1: f64,
}

/// Closed-form extreme values of `H^max` and `H^min` over `β`.
pub fn h_extremes(p: VWPair) -> Extremes {
    let (v, w) = (p.v, p.w);
    let q = q1(p);
    let minmax = if q <= 1.0 {
        (1.0 - v * v) / ((1.0 - w) * (1.0 - q * v))
    } else {
        (1.0 + v) / ((1.0 + w) * (1.0 - v))
    };
    let minmin = if v <= w {
        (1.0 - v) / ((1.0 - w) * (1.0 + v))
    } else {
        1.0 / (1.0 + w)
    };
    Extremes {
        maxmax: (1.0 + v) / ((1.0 - w) * (1.0 - v)),
        minmax,
        maxmin: 1.0 / (1.0 - w),
        minmin,
        q1: q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Max,
    Min,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub x: f64,
    pub h_value: f64,
    pub kind: PointKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointData {
    pub l_coef: f64,
    pub k_coef: f64,
    pub q1: f64,
    pub stationary_points: Vec<StationaryPoint>,
}

fn require_open(p: VWPair) -> Result<()> {
    if p.v > 0.0 && p.w > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "V and W must lie in (0, 1), got V = {}, W = {}",
            p.v, p.w
        )))
    }
}

fn local_kind(p: VWPair, x: f64) -> PointKind {
    let h = 1e-4;
    let d2 = (h_func(p, x + h, 0.0) - 2.0 * h_func(p, x, 0.0) + h_func(p, x - h, 0.0)) / (h * h);
    let scale = h_func(p, x, 0.0);
    if d2 < -1e-6 * scale {
        PointKind::Max
    } else if d2 > 1e-6 * scale {
        PointKind::Min
    } else {
        PointKind::Other
    }
}

/// Stationary points of `H(·, 0)` in `[0, 2π)` with their closed-form values.
pub fn critical_points_beta0(p: VWPair) -> Result<CriticalPointData> {
    require_open(p)?;
    let (v, w) = (p.v, p.w);
    let l = (v * v - w) / (v * (1.0 - w));
    let k = w * (1.0 - v * v) / (v * (1.0 - w));
    let q = q1(p);
    let even = 1.0 / (1.0 - w);
    let odd = if v <= w {
        1.0 / (1.0 - w)
    } else {
        (1.0 + v) / ((1.0 + w) * (1.0 - v))
    };
    let mut pts = vec![(0.0, even), (PI, odd)];
    if q < 1.0 {
        let x1 = (-q).acos();
        let val = (1.0 - v * v) / ((1.0 - w) * (1.0 - q * v));
        pts.push((x1, val));
        pts.push((2.0 * PI - x1, val));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(CriticalPointData {
        l_coef: l,
        k_coef: k,
        q1: q,
        stationary_points: pts
            .into_iter()
            .map(|(x, h_value)| StationaryPoint {
                x,
                h_value,
                kind: local_kind(p, x),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSource {
    AxisBranch,
    GeneralBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPolyline {
    pub beta_samples: Vec<f64>,
    /// Unwrapped along the branch.
    pub x_samples: Vec<f64>,
    pub h_samples: Vec<f64>,
    pub source: BranchSource,
}

/// A branch that could not be continued at `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchLost {
    pub branch_id: usize,
    pub beta: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTrace {
    pub polylines: Vec<BranchPolyline>,
    pub lost: Vec<BranchLost>,
}

/// Solutions of the stationary equation in `[0, 2π)` at fixed `β`, each
/// tagged with its family.
pub fn stationary_solutions(p: VWPair, beta: f64) -> Vec<(f64, BranchSource)> {
    let n = BRANCH_GRID;
    let step = 2.0 * PI / n as f64;
    let es: Vec<f64> = (0..n)
        .map(|k| stationary_residual(p, k as f64 * step, beta))
        .collect();
    let mut roots: Vec<f64> = Vec::new();
    for k in 0..n {
        let (e0, e1) = (es[k], es[(k + 1) % n]);
        let x0 = k as f64 * step;
        if e0 == 0.0 {
            roots.push(x0);
        } else if e1 != 0.0 && (e0 > 0.0) != (e1 > 0.0) {
            let (mut a, mut b) = (x0, x0 + step);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if (stationary_residual(p, m, beta) > 0.0) == (e0 > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            let x = 0.5 * (a + b);
            // Sign flips across a jump of α^max are not solutions.
            if stationary_residual(p, x, beta).abs() <= 1e-8 {
                roots.push(x.rem_euclid(2.0 * PI));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
        .into_iter()
        .map(|x| {
            let axis = wrap_angle(alpha_max(p, x) - beta).abs() <= 1e-6;
            let src = if axis {
                BranchSource::AxisBranch
            } else {
                BranchSource::GeneralBranch
            };
            (x, src)
        })
        .collect()
}

struct Active {
    id: usize,
    source: BranchSource,
    last_x: f64,
    slope: f64,
    last_beta: f64,
}

/// Follow every stationary solution of `H(·, β)` across `beta_grid` by
/// nearest continuation, halving the β-step whenever a matched solution
/// moves more than [`TRUST_RADIUS`].
pub fn trace_branches(p: VWPair, beta_grid: &[f64]) -> Result<BranchTrace> {
    require_open(p)?;
    if beta_grid.is_empty() {
        return Ok(BranchTrace {
            polylines: Vec::new(),
            lost: Vec::new(),
        });
    }
    if beta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("beta grid must increase".into()));
    }
    let mut polylines: Vec<BranchPolyline> = Vec::new();
    let mut lost = Vec::new();
    let mut active: Vec<Active> = Vec::new();

    let start = |beta: f64, x: f64, src, polylines: &mut Vec<BranchPolyline>| {
        polylines.push(BranchPolyline {
            beta_samples: vec![beta],
            x_samples: vec![x],
            h_samples: vec![h_func(p, x, beta)],
            source: src,
        });
        Active {
            id: polylines.len() - 1,
            source: src,
            last_x: x,
            slope: 0.0,
            last_beta: beta,
        }
    };

    let b0 = beta_grid[0];
    for (x, src) in stationary_solutions(p, b0) {
        let a = start(b0, x, src, &mut polylines);
        active.push(a);
    }

    let mut beta = b0;
    for &target in &beta_grid[1..] {
        let mut h = target - beta;
        while beta < target {
            let next = (beta + h).min(target);
            let roots = stationary_solutions(p, next);
            let assign = match_roots(&active, &roots, next);
            let max_move = assign
                .iter()
                .flatten()
                .map(|&(_, d)| d)
                .fold(0.0, f64::max);
            if max_move > TRUST_RADIUS && h > MIN_BETA_STEP {
                h *= 0.5;
                continue;
            }
            let mut taken = vec![false; roots.len()];
            let mut survivors = Vec::with_capacity(active.len());
            let mut ended: Vec<&Active> = Vec::new();
            for (a, m) in active.iter().zip(&assign) {
                match m {
                    Some((j, _)) => {
                        taken[*j] = true;
                        let pl = &mut polylines[a.id];
                        let x = a.last_x + wrap_angle(roots[*j].0 - a.last_x);
                        pl.beta_samples.push(next);
                        pl.x_samples.push(x);
                        pl.h_samples.push(h_func(p, x, next));
                        survivors.push(Active {
                            id: a.id,
                            source: a.source,
                            last_x: x,
                            slope: (x - a.last_x) / (next - a.last_beta),
                            last_beta: next,
                        });
                    }
                    None => ended.push(a),
                }
            }
            // Branches end in pairs at folds; a lone ending is a loss.
            for a in &ended {
                let paired = ended.iter().any(|b| {
                    b.id != a.id && wrap_angle(b.last_x - a.last_x).abs() <= 2.0 * TRUST_RADIUS
                });
                if !paired {
                    lost.push(BranchLost {
                        branch_id: a.id,
                        beta: next,
                        x: a.last_x,
                    });
                }
            }
            for (j, (x, src)) in roots.iter().enumerate() {
                if !taken[j] {
                    survivors.push(start(next, *x, *src, &mut polylines));
                }
            }
            survivors.sort_by_key(|a| a.id);
            active = survivors;
            beta = next;
            h = (target - beta).max(h);
        }
    }
    Ok(BranchTrace { polylines, lost })
}

/// Greedy one-to-one matching of active branches to new roots by the
/// circular distance to the extrapolated position, within one family.
fn match_roots(
    active: &[Active],
    roots: &[(f64, BranchSource)],
    beta: f64,
) -> Vec<Option<(usize, f64)>> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in active.iter().enumerate() {
        let pred = a.last_x + a.slope * (beta - a.last_beta);
        for (j, (x, src)) in roots.iter().enumerate() {
            if *src != a.source {
                continue;
            }
            let d = wrap_angle(x - pred).abs();
            if d <= PI / 2.0 {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = vec![None; active.len()];
    let mut used = vec![false; roots.len()];
    for (_, i, j) in cand {
        if out[i].is_none() && !used[j] {
            used[j] = true;
            let moved = wrap_angle(roots[j].0 - active[i].last_x).abs();
            out[i] = Some((j, moved));
        }
    }
    out
}

/// CSV with columns `branch_id,beta,x,h,source`.
pub fn branches_csv(trace: &BranchTrace) -> String {
    let mut s = String::from("branch_id,beta,x,h,source\n");
    for (id, pl) in trace.polylines.iter().enumerate() {
        let src = match pl.source {
            BranchSource::AxisBranch => "axis",
            BranchSource::GeneralBranch => "general",
        };
        for k in 0..pl.beta_samples.len() {
            let _ = writeln!(
                s,
                "{id},{:.16e},{:.16e},{:.16e},{src}",
                pl.beta_samples[k], pl.x_samples[k], pl.h_samples[k]
            );
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondDerivatives {
    pub d2_xx: f64,
    pub d2_xbeta: f64,
    /// `∂²H/∂x² − ∂²H/∂x∂β = (f^max)''(x) / (1 + V cos x)`.
    pub lastref_diff: f64,
}

/// `(f^max)''(x)` by a central second difference with one Richardson step.
pub fn f_max_second_derivative(p: VWPair, x: f64) -> f64 {
    let d = |h: f64| (f_vw_max(p, x + h) - 2.0 * f_vw_max(p, x) + f_vw_max(p, x - h)) / (h * h);
    let h = 1e-4;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Second partial derivatives of `H` at `(x, 0)` for `x` a multiple of π.
pub fn h_second_derivatives(p: VWPair, x: f64) -> Result<SecondDerivatives> {
    let k = (x / PI).round();
    if (x - k * PI).abs() > 1e-9 {
        return Err(Error::NotMultipleOfPi(x));
    }
    let cx = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let v = p.v;
    let f = f_vw_max(p, x);
    let fpp = f_max_second_derivative(p, x);
    let den = 1.0 + v * cx;
    let mixed = f * v * (cx + v) / den.powi(3);
    Ok(SecondDerivatives {
        d2_xx: fpp / den + mixed,
        d2_xbeta: mixed,
        lastref_diff: fpp / den,
    })
}
