//! Dense real matrices, the matrix exponential, induced norms, the
//! eigendecomposition with biorthogonal left rows, and the closed 2×n SVD.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, NormP, Result};

pub type C64 = Complex<f64>;

/// Row-major real matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_slice(rows.len(), ncols, &flat)
    }

    pub fn from_nalgebra(inner: DMatrix<f64>) -> Result<Self> {
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                if !inner[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { inner })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> Vec<f64> {
        self.inner.transpose().as_slice().to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| self.inner.row(i).iter().copied().collect())
            .collect()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn mul_vec(&self, u: &[f64]) -> Vec<f64> {
        (&self.inner * DVector::from_column_slice(u))
            .as_slice()
            .to_vec()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NonSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

// Padé(13) coefficients b_0..b_13.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// `e^{tA}` by scaling and squaring around a Padé(13) kernel.
pub fn mat_exp(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    let n = a.require_square()?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} is not finite")));
    }
    let ta = a.as_nalgebra() * t;
    DenseMatrix::from_nalgebra(expm(&ta, n))
}

fn expm(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm1 = norm_one(m);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(s);
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Pade denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn norm_one(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn norm_two(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Real induced matrix norm for p ∈ {1, 2, ∞}.
pub fn induced_matrix_norm(m: &DenseMatrix, p: NormP) -> f64 {
    induced_norm(m.as_nalgebra(), p)
}

pub(crate) fn induced_norm(m: &DMatrix<f64>, p: NormP) -> f64 {
    match p {
        NormP::One => norm_one(m),
        NormP::Two => norm_two(m),
        NormP::Inf => norm_inf(m),
    }
}

/// Vector p-norm of a real vector.
pub fn vec_norm(u: &[f64], p: NormP) -> f64 {
    match p {
        NormP::One => u.iter().map(|x| x.abs()).sum(),
        NormP::Two => u.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormP::Inf => u.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// Vector p-norm of a complex vector (moduli of the components).
pub fn cvec_norm(u: &[C64], p: NormP) -> f64 {
    match p {
        NormP::One => u.iter().map(|z| z.norm()).sum(),
        NormP::Two => u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        NormP::Inf => u.iter().fold(0.0, |m, z| m.max(z.norm())),
    }
}

/// Eigenvalues with right eigenvectors and the matching rows of `V^{-1}`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<C64>,
    pub right_vectors: Vec<DVector<C64>>,
    /// Row `i` of the inverse eigenvector matrix, stored as a column vector.
    pub left_rows: Vec<DVector<C64>>,
    /// `max ‖A v − λ v‖₂` over the unit right vectors.
    pub residual: f64,
    /// 2-norm condition number of the column-normalized eigenvector matrix.
    pub condition: f64,
}

/// Eigenvector matrices with a larger condition number are rejected.
pub const MAX_EIGVEC_CONDITION: f64 = 1e12;

/// Diagonalize a real matrix.
///
/// Eigenvalues come from a real Schur form; each eigenvector is the null
/// vector of `A − λI` from its SVD. Conjugate pairs are matched by nearest
/// conjugate and the negative-imaginary member is overwritten with the exact
/// conjugate of its partner, as are its vector and left row.
pub fn eigen_decompose(a: &DenseMatrix) -> Result<EigenSystem> {
    let n = a.require_square()?;
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let am = a.as_nalgebra();
    let scale = norm_two(am).max(1.0);
    let schur = Schur::try_new(am.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let raw: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();

    let real_tol = 64.0 * f64::EPSILON * scale;
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in raw {
        if z.im.abs() <= real_tol {
            reals.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::EigenFailure(
            "complex eigenvalues do not pair into conjugates".into(),
        ));
    }

    // Deterministic ordering: real part descending, then imaginary descending.
    upper.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let mut used = vec![false; lower.len()];
    let mut pairs = Vec::with_capacity(upper.len());
    for z in &upper {
        let (k, _) = lower
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (w - z.conj()).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("counts match");
        used[k] = true;
        // Average the pair so both members see the same value.
        let avg = C64::new(0.5 * (z.re + lower[k].re), 0.5 * (z.im - lower[k].im));
        pairs.push(avg);
    }
    reals.sort_by(|x, y| y.total_cmp(x));

    let cluster_tol = 1e-10 * scale;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut right_vectors = Vec::with_capacity(n);
    let mut conj_of: Vec<Option<usize>> = Vec::with_capacity(n);
    let mut ri = 0;
    let mut pi = 0;
    while ri < reals.len() || pi < pairs.len() {
        let take_real = match (reals.get(ri), pairs.get(pi)) {
            (Some(r), Some(p)) => *r >= p.re,
            (Some(_), None) => true,
            _ => false,
        };
        if take_real {
            let lam = reals[ri];
            ri += 1;
            let k = cluster_rank(&eigenvalues, C64::new(lam, 0.0), cluster_tol);
            let v = null_vector_real(am, lam, k)?;
            eigenvalues.push(C64::new(lam, 0.0));
            right_vectors.push(v.map(|x| C64::new(x, 0.0)));
            conj_of.push(None);
        } else {
            let lam = pairs[pi];
            pi += 1;
            let rank = cluster_rank(&eigenvalues, lam, cluster_tol);
            let v = null_vector_complex(am, lam, rank)?;
            let k = eigenvalues.len();
            eigenvalues.push(lam);
            right_vectors.push(v.clone());
            conj_of.push(None);
            eigenvalues.push(lam.conj());
            right_vectors.push(v.map(|z| z.conj()));
            conj_of.push(Some(k));
        }
    }

    let vmat = DMatrix::from_columns(&right_vectors);
    let sv = vmat.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_EIGVEC_CONDITION) {
        return Err(Error::NonDiagonalizable { cond: condition });
    }
    let winv = vmat
        .try_inverse()
        .ok_or(Error::NonDiagonalizable {
            cond: f64::INFINITY,
        })?;
    let mut left_rows: Vec<DVector<C64>> = (0..n).map(|i| winv.row(i).transpose()).collect();
    for i in 0..n {
        if let Some(k) = conj_of[i] {
            left_rows[i] = left_rows[k].map(|z| z.conj());
        } else if eigenvalues[i].im == 0.0 {
            left_rows[i] = left_rows[i].map(|z| C64::new(z.re, 0.0));
        }
    }

    let ac = am.map(|x| C64::new(x, 0.0));
    let residual = eigenvalues
        .iter()
        .zip(&right_vectors)
        .map(|(lam, v)| (&ac * v - v * *lam).norm())
        .fold(0.0, f64::max);

    // Vectors that fail the eigen equation mean a missing eigendirection.
    if residual > 1e-8 * scale {
        return Err(Error::NonDiagonalizable {
            cond: f64::INFINITY,
        });
    }

    Ok(EigenSystem {
        eigenvalues,
        right_vectors,
        left_rows,
        residual,
        condition,
    })
}

/// The `k`-th smallest right singular vector of `A − λI`, i.e. an
/// approximate null vector; `k > 0` picks further vectors inside a cluster.
fn null_vector_real(a: &DMatrix<f64>, lam: f64, k: usize) -> Result<DVector<f64>> {
    let n = a.nrows();
    let m = a - DMatrix::identity(n, n) * lam;
    let svd = m.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::EigenFailure("SVD did not return vectors".into()))?;
    let order = ascending(svd.singular_values.as_slice());
    let idx = *order
        .get(k)
        .ok_or_else(|| Error::EigenFailure("cluster larger than dimension".into()))?;
    let mut x: DVector<f64> = vt.row(idx).transpose();
    let imax = x.iamax();
    if x[imax] < 0.0 {
        x = -x;
    }
    Ok(x)
}

fn null_vector_complex(a: &DMatrix<f64>, lam: C64, k: usize) -> Result<DVector<C64>> {
    let n = a.nrows();
    let m = a.map(|x| C64::new(x, 0.0)) - DMatrix::<C64>::identity(n, n) * lam;
    let svd = m.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::EigenFailure("SVD did not return vectors".into()))?;
    let order = ascending(svd.singular_values.as_slice());
    let idx = *order
        .get(k)
        .ok_or_else(|| Error::EigenFailure("cluster larger than dimension".into()))?;
    let x: DVector<C64> = vt.row(idx).adjoint();
    // Fix the phase: largest-modulus component real and positive.
    let imax = (0..n)
        .max_by(|&i, &j| x[i].norm().total_cmp(&x[j].norm()))
        .unwrap_or(0);
    let ph = x[imax] / C64::new(x[imax].norm(), 0.0);
    Ok(x.map(|z| z / ph))
}

fn ascending(s: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    idx
}

/// Position of `z` inside its cluster of nearly equal, earlier values.
fn cluster_rank(done: &[C64], z: C64, tol: f64) -> usize {
    done.iter().filter(|w| (**w - z).norm() <= tol).count()
}

/// SVD of a 2×n real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd2xN {
    pub sigma: f64,
    pub mu: f64,
    pub left_major: [f64; 2],
    pub left_minor: [f64; 2],
    pub right_major: Vec<f64>,
    pub right_minor: Vec<f64>,
}

/// SVD of a 2×n matrix by one Jacobi rotation of its rows.
pub fn svd_2xn(r: &DenseMatrix) -> Result<Svd2xN> {
    if r.rows() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: r.rows(),
        });
    }
    let n = r.cols();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "2xn SVD needs n >= 2, got n = {n}"
        )));
    }
    let r1: Vec<f64> = (0..n).map(|k| r.get(0, k)).collect();
    let r2: Vec<f64> = (0..n).map(|k| r.get(1, k)).collect();
    Ok(svd_rows(&r1, &r2))
}

pub(crate) fn svd_rows(r1: &[f64], r2: &[f64]) -> Svd2xN {
    let n = r1.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let a = dot(r1, r1);
    let b = dot(r2, r2);
    let c = dot(r1, r2);
    let (cs, sn) = if c == 0.0 {
        (1.0, 0.0)
    } else {
        let zeta = (b - a) / (2.0 * c);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let cs = 1.0 / (1.0 + t * t).sqrt();
        (cs, cs * t)
    };
    let p: Vec<f64> = (0..n).map(|k| cs * r1[k] - sn * r2[k]).collect();
    let q: Vec<f64> = (0..n).map(|k| sn * r1[k] + cs * r2[k]).collect();
    let np = dot(&p, &p).sqrt();
    let nq = dot(&q, &q).sqrt();
    // R = Jᵀ R', the left vectors are the rows of J.
    let (s1, v1, u1, s2, v2, u2) = if np >= nq {
        (np, p, [cs, -sn], nq, q, [sn, cs])
    } else {
        (nq, q, [sn, cs], np, p, [cs, -sn])
    };
    let right_major = if s1 > 0.0 {
        v1.iter().map(|x| x / s1).collect()
    } else {
        unit(n, 0)
    };
    let right_minor = if s2 > 0.0 {
        v2.iter().map(|x| x / s2).collect()
    } else {
        complete_orthonormal(&right_major)
    };
    Svd2xN {
        sigma: s1,
        mu: s2,
        left_major: u1,
        left_minor: u2,
        right_major,
        right_minor,
    }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

fn complete_orthonormal(v: &[f64]) -> Vec<f64> {
    let k = (0..v.len())
        .min_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()))
        .unwrap_or(0);
    let mut e = unit(v.len(), k);
    let proj: f64 = e.iter().zip(v).map(|(a, b)| a * b).sum();
    for (ei, vi) in e.iter_mut().zip(v) {
        *ei -= proj * vi;
    }
    let nrm = vec_norm(&e, NormP::Two);
    e.iter().map(|x| x / nrm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_zero_time_is_identity() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let e = mat_exp(&a, 0.0).unwrap();
        assert_eq!(e, DenseMatrix::identity(2));
    }

    #[test]
    fn exp_of_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![0.3, 0.0], vec![0.0, -2.0]]).unwrap();
        let e = mat_exp(&a, 1.7).unwrap();
        assert!((e.get(0, 0) - (0.51f64).exp()).abs() < 1e-14);
        assert!((e.get(1, 1) - (-3.4f64).exp()).abs() < 1e-15);
        assert_eq!(e.get(0, 1), 0.0);
    }

    #[test]
    fn exp_rejects_non_square() {
        let a = DenseMatrix::from_row_slice(1, 2, &[1.0, 2.0]).unwrap();
        assert!(matches!(mat_exp(&a, 1.0), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn non_finite_entries_rejected() {
        let e = DenseMatrix::from_rows(&[vec![1.0, f64::NAN]]);
        assert_eq!(e, Err(Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn norms_of_small_matrices() {
        let id = DenseMatrix::identity(3);
        for p in [NormP::One, NormP::Two, NormP::Inf] {
            assert!((induced_matrix_norm(&id, p) - 1.0).abs() < 1e-15);
        }
        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -3.0]]).unwrap();
        assert!((induced_matrix_norm(&d, NormP::Two) - 3.0).abs() < 1e-14);
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(induced_matrix_norm(&m, NormP::One), 6.0);
        assert_eq!(induced_matrix_norm(&m, NormP::Inf), 7.0);
    }

    #[test]
    fn eigen_of_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let es = eigen_decompose(&a).unwrap();
        assert_eq!(es.eigenvalues, vec![C64::new(3.0, 0.0), C64::new(1.0, 0.0)]);
        assert!((es.right_vectors[0][0].re - 1.0).abs() < 1e-14);
        assert!(es.right_vectors[0][1].norm() < 1e-14);
        assert!((es.right_vectors[1][1].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_pairs_are_exact_conjugates() {
        let a = DenseMatrix::from_rows(&[
            vec![-1.0, 20.0, -20.0],
            vec![0.0, 19.0, -20.0],
            vec![0.0, 18.1, -19.0],
        ])
        .unwrap();
        let es = eigen_decompose(&a).unwrap();
        let (i, j) = (0..3)
            .filter(|&i| es.eigenvalues[i].im > 0.0)
            .map(|i| (i, i + 1))
            .next()
            .unwrap();
        assert_eq!(es.eigenvalues[j], es.eigenvalues[i].conj());
        assert_eq!(es.right_vectors[j], es.right_vectors[i].map(|z| z.conj()));
        assert_eq!(es.left_rows[j], es.left_rows[i].map(|z| z.conj()));
        assert!((es.eigenvalues[i] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn defective_matrix_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            eigen_decompose(&a),
            Err(Error::NonDiagonalizable { .. })
        ));
    }

    #[test]
    fn svd_of_orthonormal_rows() {
        let r = DenseMatrix::from_rows(&[vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let s = svd_2xn(&r).unwrap();
        assert!((s.sigma - 1.0).abs() < 1e-15 && (s.mu - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_of_rank_one() {
        let r = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        let s = svd_2xn(&r).unwrap();
        assert!(s.mu < 1e-14);
        let dot: f64 = s.right_major.iter().zip(&s.right_minor).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-14);
        assert!((vec_norm(&s.right_minor, NormP::Two) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_needs_two_columns() {
        let r = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(svd_2xn(&r).is_err());
    }
}
