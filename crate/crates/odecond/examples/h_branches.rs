//! Minimax envelope of H over x, its closed-form extremes and the
//! stationary branches traced in beta.

use std::f64::consts::PI;

use odecond::minimax::{critical_points_beta0, h_envelope, h_extremes, trace_branches};
use odecond::oscillator::VWPair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = VWPair::new(0.45, 0.5)?;
    for k in 0..=4 {
        let beta = PI * k as f64 / 4.0;
        let e = h_envelope(p, beta);
        println!("beta = {beta:.4}: H^max = {:.6} at x = {:.4}, H^min = {:.6} at x = {:.4}", e.h_max, e.argmax_x, e.h_min, e.argmin_x);
    }
    let x = h_extremes(p);
    println!("Q1 = {:.4}; extremes {:.6} {:.6} {:.6} {:.6}", x.q1, x.maxmax, x.minmax, x.maxmin, x.minmin);

    let c = critical_points_beta0(p)?;
    for s in &c.stationary_points {
        println!("beta = 0 stationary point x = {:.6}, H = {:.6} ({:?})", s.x, s.h_value, s.kind);
    }

    let grid: Vec<f64> = (0..=256).map(|k| PI * k as f64 / 256.0).collect();
    let t = trace_branches(p, &grid)?;
    for (id, pl) in t.polylines.iter().enumerate() {
        println!("branch {id} ({:?}): {} samples", pl.source, pl.beta_samples.len());
    }
    println!("lost branches: {}", t.lost.len());
    Ok(())
}
