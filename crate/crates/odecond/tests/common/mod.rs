//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's numerical kernels except where noted.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use odecond::linalg::{DenseMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng))
}

pub fn dense(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_nalgebra(m.clone()).unwrap()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let s = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s > 1e-8 {
            return u.iter().map(|x| x / s).collect();
        }
    }
}

pub fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// Taylor oracle for `e^{tA}`: scale by `2^k` until `‖tA/2^k‖₂ ≤ 0.5`,
/// sum 60 terms, square `k` times.
pub fn taylor_exp(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a * t;
    let mut k = 0;
    while spectral_norm(&m) > 0.5 {
        m /= 2.0;
        k += 1;
    }
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for j in 1..=60 {
        term = &term * &m / j as f64;
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// Maximize `f` over the real unit sphere: random sampling, then a shrinking
/// random-perturbation hill climb from the best few samples.
pub fn sphere_max<F: Fn(&[f64]) -> f64>(
    rng: &mut ChaCha8Rng,
    n: usize,
    samples: usize,
    f: F,
) -> f64 {
    let mut pool: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|_| {
            let u = unit_vector(rng, n);
            (f(&u), u)
        })
        .collect();
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    pool.truncate(4);
    let mut best = f64::NEG_INFINITY;
    for (mut val, mut u) in pool {
        let mut step = 0.2;
        while step > 1e-10 {
            let mut improved = false;
            for _ in 0..20 {
                let mut c: Vec<f64> = u
                    .iter()
                    .map(|x| {
                        let g: f64 = StandardNormal.sample(rng);
                        x + step * g
                    })
                    .collect();
                let s = norm2(&c);
                c.iter_mut().for_each(|x| *x /= s);
                let fc = f(&c);
                if fc > val {
                    val = fc;
                    u = c;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    best
}

/// Golden-section maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    fc.max(fd)
}

/// Maximum of a periodic function over `[0, 2π)` from an `n`-point grid,
/// refined by golden section around every grid maximum.
pub fn periodic_max<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let vals: Vec<f64> = (0..n).map(|k| f(k as f64 * h)).collect();
    let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..n {
        let (l, r) = (vals[(k + n - 1) % n], vals[(k + 1) % n]);
        if vals[k] >= l && vals[k] >= r {
            let x = k as f64 * h;
            best = best.max(golden_max(&f, x - h, x + h));
        }
    }
    best
}

pub fn periodic_min<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    -periodic_max(|x| -f(x), n)
}

/// `f_VW(α, x)` written out independently.
pub fn f_vw_ref(v: f64, w: f64, alpha: f64, x: f64) -> f64 {
    let num = 1.0 + v * (alpha + x).cos();
    let den = 1.0 - w * alpha.cos();
    num / den
}

/// Spectral projector onto the eigenvalues `group` of a diagonalizable `a`
/// with simple spectrum `all`, by Lagrange interpolation:
/// `Σ_{λ∈group} Π_{μ≠λ} (A − μI)/(λ − μ)`.
pub fn spectral_projector(a: &DMatrix<f64>, all: &[C64], group: &[C64]) -> DMatrix<C64> {
    let n = a.nrows();
    let ac = a.map(|x| C64::new(x, 0.0));
    let id = DMatrix::<C64>::identity(n, n);
    let mut p = DMatrix::<C64>::zeros(n, n);
    for &l in group {
        let mut term = id.clone();
        for &m in all {
            if (m - l).norm() < 1e-14 * (1.0 + l.norm()) {
                continue;
            }
            term = term * (&ac - &id * m) / (l - m);
        }
        p += term;
    }
    p
}

/// `Q_j(t) = e^{−r_j t} e^{tA} P_j` from the Taylor oracle and a projector.
pub fn q_oracle(a: &DMatrix<f64>, projector: &DMatrix<C64>, r: f64, t: f64) -> DMatrix<f64> {
    let e = taylor_exp(a, t).map(|x| C64::new(x, 0.0));
    (e * projector).map(|z| z.re * (-r * t).exp())
}

pub fn matvec(m: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(u)).iter().copied().collect()
}

/// Random `(V, W)` strictly inside `(0, 1)²`.
pub fn random_vw(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99))
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}
