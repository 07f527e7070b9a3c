mod common;

use std::f64::consts::PI;

use common::*;
use odecond::error::Error;
use odecond::minimax::{
    critical_points_beta0, h_envelope, h_extremes, h_func, h_second_derivatives, q1,
    stationary_residual, trace_branches, BranchSource,
};
use odecond::oscillator::{f_vw_max, VWPair};
use proptest::prelude::*;
use rand::Rng;

fn vw(v: f64, w: f64) -> VWPair {
    VWPair::new(v, w).unwrap()
}

/// `H(x, β)` from a grid-maximized `f^max`, independent of the closed form.
fn h_ref(v: f64, w: f64, x: f64, beta: f64) -> f64 {
    periodic_max(|a| f_vw_ref(v, w, a, x), 2048) / (1.0 + v * (x + beta).cos())
}

#[test]
fn h_values() {
    assert!((h_func(vw(0.5, 0.5), 0.0, 0.0) - 2.0).abs() < 1e-15);
    assert!((h_func(vw(0.0, 0.25), 0.0, 0.0) - 1.0 / 0.75).abs() < 1e-15);
    let mut r = rng(41);
    for _ in 0..200 {
        let (v, w) = random_vw(&mut r);
        let (x, b): (f64, f64) = (r.random_range(-7.0..7.0), r.random_range(-7.0..7.0));
        let p = vw(v, w);
        let want = f_vw_max(p, x) / (1.0 + v * (x + b).cos());
        assert!((h_func(p, x, b) - want).abs() <= 1e-14 * want);
        assert!((h_func(p, x, b) - h_ref(v, w, x, b)).abs() <= 1e-9 * want);
    }
}

#[test]
fn envelope_against_x_grid() {
    let mut r = rng(42);
    for _ in 0..10 {
        let (v, w) = random_vw(&mut r);
        let beta: f64 = r.random_range(0.0..PI);
        let p = vw(v, w);
        let e = h_envelope(p, beta);
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|k| h_func(p, 2.0 * PI * k as f64 / n as f64, beta))
            .collect();
        let gmax = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((e.h_max - gmax).abs() <= 1e-7 * gmax);
        assert!((e.h_min - gmin).abs() <= 1e-7 * gmax);
        assert!(e.h_max >= gmax * (1.0 - 1e-14));
        assert!(e.h_min <= gmin * (1.0 + 1e-14));
        assert!((h_func(p, e.argmax_x, beta) - e.h_max).abs() <= 1e-14 * e.h_max);
        assert!(stationary_residual(p, e.argmax_x, beta).abs() <= 1e-11 || e.h_max == gmax);
    }
}

#[test]
fn extremes_examples() {
    let w = 0.45;
    let e = h_extremes(vw(w, w));
    let q = (1.0 + w) / 2.0;
    assert!(e.q1 <= 1.0);
    assert!((e.minmax - (1.0 / (1.0 - w)) * (1.0 - w * w) / (1.0 - q * w)).abs() < 1e-13);
    let e = h_extremes(vw(0.7, 0.5));
    assert!((e.q1 - 1.05).abs() < 1e-14);
    assert!((e.minmax - (1.0 / 1.5) * (1.7 / 0.3)).abs() < 1e-13);
}

#[test]
fn extremes_bracket_envelopes() {
    let mut r = rng(43);
    for _ in 0..10 {
        let (v, w) = random_vw(&mut r);
        let p = vw(v, w);
        let x = h_extremes(p);
        for beta in linspace(0.0, PI, 512) {
            let e = h_envelope(p, beta);
            let tol = 1e-9 * x.maxmax;
            assert!(e.h_max <= x.maxmax + tol && e.h_max >= x.minmax - tol);
            assert!(e.h_min <= x.maxmin + tol && e.h_min >= x.minmin - tol);
        }
    }
}

#[test]
fn critical_points() {
    let mut r = rng(44);
    for _ in 0..200 {
        let (v, w) = random_vw(&mut r);
        let p = vw(v, w);
        let c = critical_points_beta0(p).unwrap();
        assert!(c.k_coef > 0.0);
        assert!((c.q1 - (c.k_coef.powi(2) - c.l_coef.powi(2) + 1.0) / (2.0 * c.k_coef)).abs() <= 1e-12 * c.q1.max(1.0));
        assert!(c.q1 - v > 0.0);
        assert_eq!(c.stationary_points.len(), if c.q1 < 1.0 { 4 } else { 2 });
        for s in &c.stationary_points {
            let h = 1e-5;
            let d = (h_func(p, s.x + h, 0.0) - h_func(p, s.x - h, 0.0)) / (2.0 * h);
            assert!(d.abs() <= 1e-9 * s.h_value, "dH/dx = {d}");
            assert!((h_func(p, s.x, 0.0) - s.h_value).abs() <= 1e-12 * s.h_value);
        }
        let odd = c.stationary_points.iter().find(|s| (s.x - PI).abs() < 1e-12).unwrap();
        if v <= w {
            assert!((odd.h_value - 1.0 / (1.0 - w)).abs() <= 1e-12 * odd.h_value);
        }
        if c.q1 < 1.0 {
            let branch = (1.0 / (1.0 - w)) * (1.0 - v * v) / (1.0 - c.q1 * v);
            assert!(c.stationary_points.iter().any(|s| (s.h_value - branch).abs() < 1e-12 * branch));
        }
    }
    assert!(critical_points_beta0(VWPair::new(0.0, 0.5).unwrap()).is_err());
}

#[test]
fn local_not_global_minimum() {
    // V > W: x = π is a local minimum above the global one at x = 0.
    let c = critical_points_beta0(vw(0.6, 0.5)).unwrap();
    let mins: Vec<_> = c
        .stationary_points
        .iter()
        .filter(|s| s.kind == odecond::minimax::PointKind::Min)
        .collect();
    assert_eq!(mins.len(), 2);
    assert!(mins[1].h_value > mins[0].h_value);
}

#[test]
fn second_derivatives_against_stencils() {
    let mut r = rng(45);
    for _ in 0..50 {
        let (v, w) = random_vw(&mut r);
        if (v - w).abs() < 0.05 {
            continue;
        }
        let p = vw(v, w);
        for k in -2..=2 {
            let x = k as f64 * PI;
            let s = h_second_derivatives(p, x).unwrap();
            let h = 1e-3;
            let hf = |a: f64, b: f64| h_func(p, a, b);
            let dxx = (-hf(x + 2.0 * h, 0.0) + 16.0 * hf(x + h, 0.0) - 30.0 * hf(x, 0.0)
                + 16.0 * hf(x - h, 0.0)
                - hf(x - 2.0 * h, 0.0))
                / (12.0 * h * h);
            let mixed = |h: f64| {
                (hf(x + h, h) - hf(x + h, -h) - hf(x - h, h) + hf(x - h, -h)) / (4.0 * h * h)
            };
            let dxb = (4.0 * mixed(h / 2.0) - mixed(h)) / 3.0;
            let scale = hf(x, 0.0);
            let tol = |a: f64| 1e-5 * a.abs().max(scale);
            assert!((s.d2_xx - dxx).abs() <= tol(dxx), "xx {} {}", s.d2_xx, dxx);
            assert!((s.d2_xbeta - dxb).abs() <= tol(dxb), "xb {} {}", s.d2_xbeta, dxb);
            assert!((s.d2_xx - s.d2_xbeta - s.lastref_diff).abs() <= 1e-6 * scale.max(1.0));
            if dxx.abs() > 1e-3 * scale {
                assert_eq!(s.d2_xx.signum(), dxx.signum());
            }
        }
    }
    assert!(matches!(
        h_second_derivatives(vw(0.3, 0.4), 0.5),
        Err(Error::NotMultipleOfPi(_))
    ));
}

#[test]
fn axis_branch_values() {
    for (v, w) in [(0.45, 0.5), (0.7, 0.5), (0.2, 0.8)] {
        let t = trace_branches(vw(v, w), &linspace(0.0, PI, 257)).unwrap();
        let axis: Vec<_> = t
            .polylines
            .iter()
            .filter(|p| p.source == BranchSource::AxisBranch)
            .collect();
        assert!(!axis.is_empty());
        for pl in axis {
            for (b, h) in pl.beta_samples.iter().zip(&pl.h_samples) {
                assert!((h - 1.0 / (1.0 - w * b.cos())).abs() <= 1e-10 * h);
            }
        }
    }
}

#[test]
fn branch_polylines_are_monotone() {
    for (v, w) in [(0.45, 0.5), (0.7, 0.5), (0.3, 0.3), (0.9, 0.2)] {
        let t = trace_branches(vw(v, w), &linspace(0.0, PI, 257)).unwrap();
        for pl in &t.polylines {
            assert_eq!(pl.beta_samples.len(), pl.x_samples.len());
            assert_eq!(pl.beta_samples.len(), pl.h_samples.len());
            assert!(pl.beta_samples.windows(2).all(|s| s[1] > s[0]));
            let d: Vec<f64> = pl.h_samples.windows(2).map(|s| s[1] - s[0]).collect();
            let tol = 1e-12 * pl.h_samples.iter().copied().fold(1.0, f64::max);
            let up = d.iter().all(|x| *x >= -tol);
            let down = d.iter().all(|x| *x <= tol);
            assert!(up || down, "({v},{w}) non-monotone branch");
        }
    }
}

#[test]
fn branch_topology_small_v() {
    let t = trace_branches(vw(0.45, 0.5), &linspace(0.0, PI, 513)).unwrap();
    let general = t
        .polylines
        .iter()
        .filter(|p| p.source == BranchSource::GeneralBranch)
        .count();
    assert!(general >= 2);
    assert!(t.lost.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn envelope_monotone_in_beta(v in 0.02f64..0.98, w in 0.02f64..0.98) {
        let p = vw(v, w);
        let env: Vec<_> = linspace(0.0, PI, 512).into_iter().map(|b| h_envelope(p, b)).collect();
        for s in env.windows(2) {
            prop_assert!(s[1].h_max >= s[0].h_max - 1e-9);
            prop_assert!(s[1].h_min <= s[0].h_min + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reflection(v in 0.02f64..0.98, w in 0.02f64..0.98, beta in 0.0f64..PI) {
        let p = vw(v, w);
        let a = h_envelope(p, PI - beta).h_max;
        let b = h_envelope(p, PI + beta).h_max;
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn boundary_consistency(v in 0.02f64..0.98, w in 0.02f64..0.98) {
        let p = vw(v, w);
        let x = h_extremes(p);
        let e0 = h_envelope(p, 0.0);
        let epi = h_envelope(p, PI);
        prop_assert!((e0.h_min - 1.0 / (1.0 - w)).abs() <= 1e-9 * x.maxmax);
        prop_assert!((e0.h_max - x.minmax).abs() <= 1e-9 * x.maxmax);
        prop_assert!((epi.h_max - (1.0 + v) / ((1.0 - w) * (1.0 - v))).abs() <= 1e-9 * x.maxmax);
        prop_assert!((epi.h_min - x.minmin).abs() <= 1e-9 * x.maxmax);
    }

    #[test]
    fn w_from_q1(v in 0.01f64..0.99, w in 0.01f64..0.99) {
        let q = q1(vw(v, w));
        prop_assert!((v / (2.0 * q - v) - w).abs() <= 1e-12);
    }
}

#[test]
fn q1_threshold_equivalence() {
    let mut r = rng(46);
    for _ in 0..10_000 {
        let (v, w) = random_vw(&mut r);
        let lhs = q1(vw(v, w)) <= 1.0;
        let rhs = v <= 2.0 * w / (1.0 + w);
        // Skip pairs within rounding of the boundary itself.
        if (v - 2.0 * w / (1.0 + w)).abs() > 1e-14 {
            assert_eq!(lhs, rhs, "V={v} W={w}");
        }
    }
}
