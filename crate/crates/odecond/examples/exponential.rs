//! Matrix exponential and the left/right eigensystem of a small matrix.

use odecond::error::NormP;
use odecond::linalg::{eigen_decompose, induced_matrix_norm, mat_exp, DenseMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DenseMatrix::from_rows(&[
        vec![-1.0, 20.0, -20.0],
        vec![0.0, 19.0, -20.0],
        vec![0.0, 18.1, -19.0],
    ])?;

    for t in [0.0, 0.5, 1.0, 2.0] {
        let e = mat_exp(&a, t)?;
        println!("t = {t:>4}: |exp(tA)|_2 = {:.6}", induced_matrix_norm(&e, NormP::Two));
    }

    let es = eigen_decompose(&a)?;
    println!("eigenvector condition {:.3e}, residual {:.3e}", es.condition, es.residual);
    for (k, l) in es.eigenvalues.iter().enumerate() {
        // Left rows are scaled so that w_k v_k = 1.
        let d = es.left_rows[k].dot(&es.right_vectors[k]);
        println!("lambda = {:+.6} {:+.6}i   w.v = {:.3}", l.re, l.im, d.re);
    }
    Ok(())
}
