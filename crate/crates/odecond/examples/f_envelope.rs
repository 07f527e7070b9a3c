//! Extremes of f over alpha as functions of x, and their global bounds.

use std::f64::consts::PI;

use odecond::oscillator::{alpha_extrema, f_extremes, f_vw_max, f_vw_min, VWPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = VWPair::new(0.7, 0.5)?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "x", "f_max", "f_min", "alpha_max", "alpha_min");
    for k in 0..=8 {
        let x = 2.0 * PI * k as f64 / 8.0;
        let (am, an) = alpha_extrema(p, x)?;
        println!("{x:>8.4} {:>10.6} {:>10.6} {am:>10.4} {an:>10.4}", f_vw_max(p, x), f_vw_min(p, x));
    }
    let e = f_extremes(p);
    println!(
        "max f_max {:.6}, min f_max {:.6}, max f_min {:.6}, min f_min {:.6}",
        e.max_fmax, e.min_fmax, e.max_fmin, e.min_fmin
    );
    Ok(())
}
