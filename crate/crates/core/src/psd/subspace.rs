//! Linear subspaces of ℝⁿ stored as orthonormal column frames.
//!
//! All ranges here are closed (finite dimension), so the closure that appears
//! in the definitions of the preimage subspaces is the identity map.

use nalgebra::DMatrix;

use super::matrix::{EigenDecomposition, PsdMatrix};
use super::policy::TolerancePolicy;
use super::spectral::pinv_sqrt_psd;
use crate::error::{Error, Result};

/// Tolerance on `FᵀF − I` accepted by [`Subspace::from_frame`].
pub const TOL_ORTHO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    frame: DMatrix<f64>,
}

/// Singular triplets of `a` with `σ > floor`, by decreasing `σ`.
///
/// Read off the symmetric eigenproblem of `[[0, A], [Aᵀ, 0]]`, whose positive
/// eigenvalues are the singular values of `A`. The Golub–Kahan SVD in
/// nalgebra returns wrong triplets on some products of orthonormal frames.
fn singular_triplets(a: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, k) = a.shape();
    let mut jw = DMatrix::zeros(m + k, m + k);
    jw.view_mut((0, m), (m, k)).copy_from(a);
    jw.view_mut((m, 0), (k, m)).copy_from(&a.transpose());
    let eig = EigenDecomposition::of_symmetric(&jw);
    let r = eig.eigenvalues.iter().take_while(|&&l| l > floor).count().min(m.min(k));
    let mut u = eig.vectors.view((0, 0), (m, r)).into_owned();
    let mut v = eig.vectors.view((m, 0), (k, r)).into_owned();
    for j in 0..r {
        let nu = u.column(j).norm();
        let nv = v.column(j).norm();
        u.column_mut(j).scale_mut(1.0 / nu);
        v.column_mut(j).scale_mut(1.0 / nv);
    }
    (u, eig.eigenvalues.iter().take(r).copied().collect(), v)
}

fn largest_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let (_, s, _) = singular_triplets(a, 0.0);
    s.first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the left singular vectors of `cols` whose singular
/// value exceeds `rel_tol * σ_max`, by decreasing singular value.
fn orthonormal_columns(cols: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = cols.nrows();
    if cols.ncols() == 0 || cols.amax() == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let smax = largest_singular_value(cols);
    let (u, _, _) = singular_triplets(cols, rel_tol * smax);
    if u.ncols() == 0 {
        return u;
    }
    // polish: the eigen route leaves orthogonality errors of order eps/gap
    let k = u.ncols();
    let qr = u.qr();
    let mut q = qr.q().columns(0, k).into_owned();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl Subspace {
    /// Accepts a frame whose columns are orthonormal within [`TOL_ORTHO`].
    pub fn from_frame(frame: DMatrix<f64>) -> Result<Self> {
        let k = frame.ncols();
        if k > frame.nrows() {
            return Err(Error::DimMismatch {
                expected: frame.nrows(),
                found: k,
            });
        }
        let gram = frame.transpose() * &frame;
        if (gram - DMatrix::<f64>::identity(k, k)).amax() > TOL_ORTHO {
            return Err(Error::InternalInconsistency("frame columns are not orthonormal".into()));
        }
        Ok(Self {
            ambient: frame.nrows(),
            frame,
        })
    }

    /// Orthonormal basis of the column span of `cols`, dropping directions
    /// with relative singular value below `rel_tol`.
    pub fn span(cols: &DMatrix<f64>, rel_tol: f64) -> Self {
        Self {
            ambient: cols.nrows(),
            frame: orthonormal_columns(cols, rel_tol),
        }
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            frame: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            frame: DMatrix::identity(ambient, ambient),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn projector_matrix(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }

    pub fn projector(&self) -> PsdMatrix {
        projector(self)
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient;
        if self.dim() == 0 {
            return Self::full(n);
        }
        if self.dim() == n {
            return Self::zero(n);
        }
        let q = DMatrix::<f64>::identity(n, n) - self.projector_matrix();
        let eig = EigenDecomposition::of_symmetric(&q);
        let keep: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues[j] > 0.5).collect();
        let frame = DMatrix::from_fn(n, keep.len(), |i, j| eig.vectors[(i, keep[j])]);
        Self { ambient: n, frame }
    }

    /// Whether every unit vector of `other` lies within the membership angle
    /// of `self`.
    pub fn contains(&self, other: &Subspace, pol: &TolerancePolicy) -> bool {
        if other.dim() == 0 {
            return true;
        }
        if self.ambient != other.ambient {
            return false;
        }
        let resid = &other.frame - &self.frame * (self.frame.transpose() * &other.frame);
        largest_singular_value(&resid) <= pol.membership_sine()
    }

    /// Max-abs distance between the orthogonal projectors.
    pub fn distance(&self, other: &Subspace) -> f64 {
        (self.projector_matrix() - other.projector_matrix()).amax()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let k = self.dim();
        (self.frame.transpose() * &self.frame - DMatrix::<f64>::identity(k, k)).amax()
    }
}

/// Span of the eigenvectors with eigenvalue above the rank cutoff.
///
/// In finite dimension `ran A = ran A^{1/2}`, so this also serves as the range
/// of the square root.
pub fn range_basis(a: &PsdMatrix, pol: &TolerancePolicy) -> Subspace {
    let eig = a.eigen();
    let r = eig.rank(pol);
    Subspace {
        ambient: a.dim(),
        frame: eig.vectors.columns(0, r).into_owned(),
    }
}

/// Orthogonal complement of [`range_basis`], i.e. `ker A = ker A^{1/2}`.
pub fn kernel_basis(a: &PsdMatrix, pol: &TolerancePolicy) -> Subspace {
    let eig = a.eigen();
    let r = eig.rank(pol);
    Subspace {
        ambient: a.dim(),
        frame: eig.vectors.columns(r, a.dim() - r).into_owned(),
    }
}

/// `P_S = F Fᵀ`.
pub fn projector(s: &Subspace) -> PsdMatrix {
    let n = s.ambient;
    let k = s.dim();
    if k == 0 {
        return PsdMatrix::zeros(n);
    }
    if k == n {
        return PsdMatrix::identity(n);
    }
    let comp = s.complement();
    let mut vectors = DMatrix::zeros(n, n);
    vectors.columns_mut(0, k).copy_from(&s.frame);
    vectors.columns_mut(k, n - k).copy_from(&comp.frame);
    let mut vals = vec![0.0; n];
    vals[..k].iter_mut().for_each(|v| *v = 1.0);
    PsdMatrix::from_spectrum(&vals, &vectors)
}

/// `U ∩ V` via principal angles: a principal direction belongs to the
/// intersection when its cosine is at least `1 − eig1_cluster`.
pub fn intersect(u: &Subspace, v: &Subspace, pol: &TolerancePolicy) -> Result<Subspace> {
    if u.ambient != v.ambient {
        return Err(Error::DimMismatch {
            expected: u.ambient,
            found: v.ambient,
        });
    }
    let n = u.ambient;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Subspace::zero(n));
    }
    let cross = u.frame.transpose() * &v.frame;
    let (left, _, _) = singular_triplets(&cross, 1.0 - pol.eig1_cluster - f64::EPSILON);
    if left.ncols() == 0 {
        return Ok(Subspace::zero(n));
    }
    let dirs = &u.frame * left;
    Ok(Subspace {
        ambient: n,
        frame: orthonormal_columns(&dirs, 0.5),
    })
}

/// `{f : B^{1/2} f ∈ target}`.
///
/// The preimage splits as `ker B ⊕ (B^{1/2})^+ (target ∩ ran B)`, which keeps
/// the membership decision on principal angles (scale free) instead of on
/// the raw size of `(I − P_target) B^{1/2} f`.
pub fn preimage_in_range(b: &PsdMatrix, target: &Subspace, pol: &TolerancePolicy) -> Result<Subspace> {
    let n = b.dim();
    if target.ambient != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: target.ambient,
        });
    }
    let ran = range_basis(b, pol);
    let ker = kernel_basis(b, pol);
    let reach = intersect(&ran, target, pol)?;
    if reach.dim() == 0 {
        return Ok(ker);
    }
    let pulled = pinv_sqrt_psd(b, pol).entries() * &reach.frame;
    let mut cols = DMatrix::zeros(n, ker.dim() + reach.dim());
    cols.columns_mut(0, ker.dim()).copy_from(&ker.frame);
    // normalize pulled-back columns so their scale does not matter below
    for j in 0..reach.dim() {
        let c = pulled.column(j);
        let norm = c.norm();
        cols.column_mut(ker.dim() + j).copy_from(&(c / norm));
    }
    Ok(Subspace {
        ambient: n,
        frame: orthonormal_columns(&cols, 1e-8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn coord(n: usize, idx: &[usize]) -> Subspace {
        let mut f = DMatrix::zeros(n, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            f[(i, j)] = 1.0;
        }
        Subspace::from_frame(f).unwrap()
    }

    fn diag_unit(v: &[f64]) -> Subspace {
        let c = DVector::from_column_slice(v).normalize();
        Subspace::from_frame(DMatrix::from_columns(&[c])).unwrap()
    }

    #[test]
    fn range_examples() {
        let r = range_basis(&PsdMatrix::diag(&[1.0, 0.0, 2.0]), &pol());
        assert!(r.distance(&coord(3, &[0, 2])) < 1e-15);
        assert_eq!(range_basis(&PsdMatrix::zeros(3), &pol()).dim(), 0);
        let a = PsdMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]], &pol()).unwrap();
        let r = range_basis(&a, &pol());
        assert!(r.distance(&diag_unit(&[1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn intersect_examples() {
        let p = pol();
        let i = intersect(&coord(3, &[0, 1]), &coord(3, &[1, 2]), &p).unwrap();
        assert!(i.distance(&coord(3, &[1])) < 1e-15);
        assert_eq!(intersect(&coord(2, &[0]), &coord(2, &[1]), &p).unwrap().dim(), 0);
        let s = 0.5f64.sqrt();
        let u = Subspace::from_frame(DMatrix::from_row_slice(3, 2, &[s, 0.0, s, 0.0, 0.0, 1.0])).unwrap();
        let v = diag_unit(&[1.0, 1.0, 0.0]);
        let i = intersect(&u, &v, &p).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.distance(&v) < 1e-15);
        assert!(matches!(
            intersect(&coord(2, &[0]), &coord(3, &[0]), &p),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn projector_examples() {
        assert_eq!(projector(&coord(2, &[0])).entries(), &DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 0.0])));
        assert_eq!(projector(&Subspace::full(3)).entries(), &DMatrix::<f64>::identity(3, 3));
        let p = projector(&diag_unit(&[1.0, 1.0]));
        assert!((p.entries() - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-15);
    }

    #[test]
    fn preimage_examples() {
        let p = pol();
        // (I − P)B^{1/2} = diag(0, √5) has null space e1
        let pre = preimage_in_range(&PsdMatrix::diag(&[3.0, 5.0]), &coord(2, &[0]), &p).unwrap();
        assert!(pre.distance(&coord(2, &[0])) < 1e-15);
        let pre = preimage_in_range(&PsdMatrix::diag(&[3.0, 0.0]), &Subspace::full(2), &p).unwrap();
        assert_eq!(pre.dim(), 2);
        let pre = preimage_in_range(&PsdMatrix::zeros(2), &Subspace::zero(2), &p).unwrap();
        assert_eq!(pre.dim(), 2);
    }

    #[test]
    fn preimage_agrees_with_null_space_characterization() {
        let p = pol();
        let b = PsdMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0]], &p).unwrap();
        let target = diag_unit(&[1.0, 0.0, 1.0]);
        let pre = preimage_in_range(&b, &target, &p).unwrap();
        // ker B = e3; ran B ∩ target = {0}, so only the kernel survives
        assert!(pre.distance(&coord(3, &[2])) < 1e-14);
        let root = crate::psd::spectral::sqrt_psd(&b, &p);
        let k = (DMatrix::<f64>::identity(3, 3) - target.projector_matrix()) * root.entries();
        assert!((k * pre.frame()).amax() < 1e-14);
    }

    #[test]
    fn complement_and_containment() {
        let p = pol();
        let s = coord(4, &[1, 3]);
        let c = s.complement();
        assert!(c.distance(&coord(4, &[0, 2])) < 1e-15);
        assert!(coord(3, &[0, 1]).contains(&coord(3, &[1]), &p));
        assert!(!coord(3, &[0, 1]).contains(&coord(3, &[2]), &p));
        assert!(coord(3, &[0]).contains(&Subspace::zero(3), &p));
    }

    #[test]
    fn from_frame_rejects_non_orthonormal() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(Subspace::from_frame(f).is_err());
    }
}
