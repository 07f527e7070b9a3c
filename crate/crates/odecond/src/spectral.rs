//! Spectrum partition by real parts and the per-block quantities built from
//! the left and right eigenvectors.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, NormP, Result};
use crate::linalg::{
    cvec_norm, eigen_decompose, norm_two, svd_rows, vec_norm, DenseMatrix, C64,
};

/// Default relative band for grouping eigenvalues with equal real parts.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;
/// Projections `|ŵu|` at or below this (times `‖u‖₂`) are treated as zero.
pub const ZERO_PROJECTION: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    SimpleSingleReal,
    SimpleSingleComplex,
    Unsupported,
}

/// Euclidean data of a complex block: `v̂ᵀv̂ = V e^{iδ}`, `|ŵŵᵀ| = W`, and the
/// SVD of `R = [Re ŵ; Im ŵ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ellipse {
    pub v_mod: f64,
    pub delta: f64,
    pub w_mod: f64,
    pub sigma: f64,
    pub mu: f64,
    /// Polar angle of the major left singular vector.
    pub theta_axis: f64,
    pub left_major: [f64; 2],
    pub left_minor: [f64; 2],
    pub right_major: Vec<f64>,
    pub right_minor: Vec<f64>,
}

/// One group `Λ_j` of eigenvalues sharing a real part.
#[derive(Debug, Clone, Serialize)]
pub struct EigenBlock {
    pub kind: BlockKind,
    pub r: f64,
    /// Imaginary part of `lambda`; zero for real blocks.
    pub omega: f64,
    pub lambda: C64,
    pub eigenvalues: Vec<C64>,
    /// Unit right vector; empty for unsupported blocks.
    pub v_hat: Vec<C64>,
    /// Unit left row in the complex induced norm; empty for unsupported blocks.
    pub w_hat: Vec<C64>,
    /// `‖w‖·‖v‖`; NaN for unsupported blocks.
    pub f: f64,
    pub comp_moduli_v: Vec<f64>,
    pub comp_angles_v: Vec<f64>,
    pub comp_moduli_w: Vec<f64>,
    pub comp_angles_w: Vec<f64>,
    /// Present for complex blocks analyzed in the Euclidean norm.
    pub ellipse: Option<Ellipse>,
}

/// `|ŵu|`, its polar angle, and the coordinates of `u` on the right
/// singular vectors of `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub wu_mod: f64,
    pub gamma: f64,
    pub c: f64,
    pub d: f64,
}

impl EigenBlock {
    /// Build a supported block from an eigenvalue and an unnormalized
    /// right vector / left row pair (for a complex block, the members
    /// belonging to the eigenvalue with positive imaginary part).
    pub fn from_vectors(lambda: C64, v: &[C64], w: &[C64], p: NormP) -> Result<Self> {
        if v.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                got: w.len(),
            });
        }
        let complex = lambda.im != 0.0;
        let (v, w): (Vec<C64>, Vec<C64>) = if complex {
            (v.to_vec(), w.to_vec())
        } else {
            (
                v.iter().map(|z| C64::new(z.re, 0.0)).collect(),
                w.iter().map(|z| C64::new(z.re, 0.0)).collect(),
            )
        };
        let nv = cvec_norm(&v, p);
        // The complex induced norm of a row is the dual norm of its entries.
        let nw = cvec_norm(&w, p.dual());
        if nv == 0.0 || nw == 0.0 {
            return Err(Error::InvalidParameter("zero eigenvector".into()));
        }
        let v_hat: Vec<C64> = v.iter().map(|z| z / nv).collect();
        let w_hat: Vec<C64> = w.iter().map(|z| z / nw).collect();
        let ellipse = (complex && p == NormP::Two).then(|| ellipse_of(&v_hat, &w_hat));
        let eigenvalues = if complex {
            vec![lambda, lambda.conj()]
        } else {
            vec![lambda]
        };
        Ok(Self {
            kind: if complex {
                BlockKind::SimpleSingleComplex
            } else {
                BlockKind::SimpleSingleReal
            },
            r: lambda.re,
            omega: lambda.im,
            lambda,
            eigenvalues,
            comp_moduli_v: v_hat.iter().map(|z| z.norm()).collect(),
            comp_angles_v: v_hat.iter().map(|z| z.arg()).collect(),
            comp_moduli_w: w_hat.iter().map(|z| z.norm()).collect(),
            comp_angles_w: w_hat.iter().map(|z| z.arg()).collect(),
            v_hat,
            w_hat,
            f: nv * nw,
            ellipse,
        })
    }

    fn unsupported(eigenvalues: Vec<C64>) -> Self {
        let r = eigenvalues.iter().map(|z| z.re).sum::<f64>() / eigenvalues.len() as f64;
        let lambda = eigenvalues
            .iter()
            .copied()
            .max_by(|a, b| a.im.total_cmp(&b.im))
            .unwrap_or_default();
        Self {
            kind: BlockKind::Unsupported,
            r,
            omega: lambda.im.max(0.0),
            lambda,
            eigenvalues,
            v_hat: Vec::new(),
            w_hat: Vec::new(),
            f: f64::NAN,
            comp_moduli_v: Vec::new(),
            comp_angles_v: Vec::new(),
            comp_moduli_w: Vec::new(),
            comp_angles_w: Vec::new(),
            ellipse: None,
        }
    }

    pub fn is_supported(&self) -> bool {
        self.kind != BlockKind::Unsupported
    }

    pub fn is_complex(&self) -> bool {
        self.kind == BlockKind::SimpleSingleComplex
    }

    pub fn dim(&self) -> usize {
        self.v_hat.len()
    }

    /// The complex number `ŵu`.
    pub fn w_dot(&self, u: &[f64]) -> C64 {
        self.w_hat.iter().zip(u).map(|(w, x)| w * *x).sum()
    }

    /// Euclidean data, or an error naming why it is missing.
    pub fn ellipse(&self) -> Result<&Ellipse> {
        self.ellipse.as_ref().ok_or_else(|| {
            Error::InvalidParameter(
                "block has no Euclidean data (needs a complex block and p = 2)".into(),
            )
        })
    }
}

fn ellipse_of(v_hat: &[C64], w_hat: &[C64]) -> Ellipse {
    let vv: C64 = v_hat.iter().map(|z| z * z).sum();
    let ww: C64 = w_hat.iter().map(|z| z * z).sum();
    let v_mod = vv.norm();
    let delta = if v_mod <= 1e-13 { 0.0 } else { vv.arg() };
    let re: Vec<f64> = w_hat.iter().map(|z| z.re).collect();
    let im: Vec<f64> = w_hat.iter().map(|z| z.im).collect();
    let mut s = svd_rows(&re, &im);
    // First nonzero component of the major left vector positive.
    let lead = if s.left_major[0] != 0.0 {
        s.left_major[0]
    } else {
        s.left_major[1]
    };
    if lead < 0.0 {
        s.left_major = [-s.left_major[0], -s.left_major[1]];
        s.right_major.iter_mut().for_each(|x| *x = -*x);
    }
    // Minor left vector is the major one turned by +π/2, so that
    // ŵu = e^{iθ}(σc + iμd).
    let turned = [-s.left_major[1], s.left_major[0]];
    if turned[0] * s.left_minor[0] + turned[1] * s.left_minor[1] < 0.0 {
        s.right_minor.iter_mut().for_each(|x| *x = -*x);
    }
    s.left_minor = turned;
    Ellipse {
        v_mod,
        delta,
        w_mod: ww.norm(),
        sigma: s.sigma,
        mu: s.mu,
        theta_axis: s.left_major[1].atan2(s.left_major[0]),
        left_major: s.left_major,
        left_minor: s.left_minor,
        right_major: s.right_major,
        right_minor: s.right_minor,
    }
}

/// Ordered blocks `Λ_1, …, Λ_q` with strictly decreasing real parts.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumAnalysis {
    pub blocks: Vec<EigenBlock>,
    pub q: usize,
    pub grouping_tolerance: f64,
    pub norm: NormP,
    pub residual: f64,
    pub eigvec_condition: f64,
}

impl SpectrumAnalysis {
    /// The rightmost block `Λ_1`.
    pub fn leading(&self) -> &EigenBlock {
        &self.blocks[0]
    }

    /// Error unless every block is simple single real or complex.
    pub fn require_all_supported(&self) -> Result<()> {
        match self.blocks.iter().position(|b| !b.is_supported()) {
            Some(index) => Err(Error::UnsupportedBlock { index }),
            None => Ok(()),
        }
    }

    pub fn require_leading_supported(&self) -> Result<&EigenBlock> {
        let b = self.leading();
        if b.is_supported() {
            Ok(b)
        } else {
            Err(Error::UnsupportedBlock { index: 0 })
        }
    }
}

/// Partition the spectrum of `a` by real parts and classify each group.
///
/// Real parts closer than `tol·max(1, ‖A‖₂)` share a group; a gap between
/// that band and ten times it is reported as [`Error::AmbiguousGrouping`].
pub fn analyze_spectrum(a: &DenseMatrix, p: NormP, tol: f64) -> Result<SpectrumAnalysis> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grouping tolerance must be positive, got {tol}"
        )));
    }
    let es = eigen_decompose(a)?;
    let band = tol * norm_two(a.as_nalgebra()).max(1.0);
    let n = es.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (es.eigenvalues[i], es.eigenvalues[j]);
        y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
    });

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev_re = f64::INFINITY;
    for &i in &order {
        let re = es.eigenvalues[i].re;
        let gap = prev_re - re;
        if gap <= band {
            groups.last_mut().expect("first gap is infinite").push(i);
        } else if gap < 10.0 * band {
            return Err(Error::AmbiguousGrouping {
                gap,
                lo: band,
                hi: 10.0 * band,
            });
        } else {
            groups.push(vec![i]);
        }
        prev_re = re;
    }

    let mut blocks = Vec::with_capacity(groups.len());
    for g in &groups {
        let vals: Vec<C64> = g.iter().map(|&i| es.eigenvalues[i]).collect();
        let block = match g.as_slice() {
            [i] if vals[0].im == 0.0 => Some(*i),
            [i, j] if vals[0].im > 0.0 && vals[1] == vals[0].conj() => {
                let _ = j;
                Some(*i)
            }
            _ => None,
        };
        blocks.push(match block {
            Some(i) => EigenBlock::from_vectors(
                es.eigenvalues[i],
                es.right_vectors[i].as_slice(),
                es.left_rows[i].as_slice(),
                p,
            )?,
            None => EigenBlock::unsupported(vals),
        });
    }
    Ok(SpectrumAnalysis {
        q: blocks.len(),
        blocks,
        grouping_tolerance: band,
        norm: p,
        residual: es.residual,
        eigvec_condition: es.condition,
    })
}

/// Project a real vector onto a complex block's left row.
pub fn block_project(block: &EigenBlock, u: &[f64]) -> Result<Projection> {
    let e = block.ellipse()?;
    if u.len() != block.dim() {
        return Err(Error::DimensionMismatch {
            expected: block.dim(),
            got: u.len(),
        });
    }
    let wu = block.w_dot(u);
    let wu_mod = wu.norm();
    if wu_mod <= ZERO_PROJECTION * vec_norm(u, NormP::Two) {
        return Err(Error::ZeroProjection { modulus: wu_mod });
    }
    let dot = |a: &[f64]| a.iter().zip(u).map(|(x, y)| x * y).sum::<f64>();
    Ok(Projection {
        wu_mod,
        gamma: wu.im.atan2(wu.re),
        c: dot(&e.right_major),
        d: dot(&e.right_minor),
    })
}

/// `Q_j(t)`: `v w` for a real block, `2 Re(e^{iωt} v w)` for a complex one.
pub fn build_q(block: &EigenBlock, t: f64) -> Result<DenseMatrix> {
    let scale = match block.kind {
        BlockKind::SimpleSingleReal => C64::new(block.f, 0.0),
        BlockKind::SimpleSingleComplex => C64::from_polar(2.0 * block.f, block.omega * t),
        BlockKind::Unsupported => return Err(Error::UnsupportedBlock { index: 0 }),
    };
    let v = DVector::from_column_slice(&block.v_hat) * scale;
    let w = DVector::from_column_slice(&block.w_hat);
    let outer = &v * w.transpose();
    DenseMatrix::from_nalgebra(outer.map(|z| z.re))
}
