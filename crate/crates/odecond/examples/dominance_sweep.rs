//! Exact condition number against its asymptotic form on a random matrix,
//! with the finite-time precision bound.

use nalgebra::DMatrix;
use odecond::condition::{analyze, sweep, t_grid, Scenario};
use odecond::error::NormP;
use odecond::linalg::DenseMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = DenseMatrix::from_nalgebra(DMatrix::from_fn(5, 5, |_, _| StandardNormal.sample(&mut rng)))?;
    let y0: Vec<f64> = (0..5).map(|_| StandardNormal.sample(&mut rng)).collect();

    let probe = Scenario::new(a.clone(), y0.clone(), None, NormP::Two, vec![0.0])?;
    let s = analyze(&probe)?;
    let grid = t_grid(&s, 0.0, 12.0, Some(25));
    let sc = Scenario::new(a, y0, None, NormP::Two, grid)?;
    let series = sweep(&sc, &s)?;

    println!("{:>6} {:>12} {:>12} {:>10} {:>10}", "t", "K", "K_inf", "rel.err", "bound");
    for x in &series.samples {
        let err = (x.k_exact / x.k_asym - 1.0).abs();
        let bound = x.precision_bound.map_or("unbounded".to_string(), |b| format!("{b:.2e}"));
        println!("{:>6.2} {:>12.6} {:>12.6} {err:>10.2e} {bound:>10}", x.t, x.k_exact, x.k_asym);
    }
    for w in &series.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
