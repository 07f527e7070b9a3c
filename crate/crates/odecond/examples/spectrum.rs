//! Spectral blocks of a matrix: scale factors, V, W and the ellipse axes.

use odecond::error::NormP;
use odecond::linalg::DenseMatrix;
use odecond::spectral::{analyze_spectrum, DEFAULT_GROUP_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DenseMatrix::from_rows(&[
        vec![-1.0, 20.0, -20.0, 0.5],
        vec![0.0, 19.0, -20.0, 0.0],
        vec![0.0, 18.1, -19.0, 0.0],
        vec![0.0, 0.0, 0.0, -3.0],
    ])?;
    let s = analyze_spectrum(&a, NormP::Two, DEFAULT_GROUP_TOL)?;
    println!("{} blocks", s.q);
    for b in &s.blocks {
        print!("{:?}: r = {:+.4}, omega = {:.4}, f = {:.4}", b.kind, b.r, b.omega, b.f);
        if let Some(e) = &b.ellipse {
            print!(", V = {:.4}, W = {:.4}, sigma = {:.4}, mu = {:.4}", e.v_mod, e.w_mod, e.sigma, e.mu);
        }
        println!();
    }
    Ok(())
}
