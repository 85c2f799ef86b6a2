use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::policy::TolerancePolicy;
use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors, one per column, aligned with `eigenvalues`.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// Decomposes a symmetric matrix. Only the lower triangle is read.
    pub fn of_symmetric(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { eigenvalues, vectors }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.eigenvalues[0]
        }
    }

    pub fn lambda_min(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.eigenvalues[self.dim() - 1]
        }
    }

    /// `V f(Λ) Vᵀ`, symmetrized.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.eigenvalues[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.compose(|l| l)
    }

    /// Eigenvalue cutoff `rank_rel * λ_max` used for ranks and pseudoinverses.
    pub fn cutoff(&self, pol: &TolerancePolicy) -> f64 {
        pol.rank_rel(self.dim()) * self.lambda_max().max(0.0)
    }

    /// Number of eigenvalues strictly above the rank cutoff.
    pub fn rank(&self, pol: &TolerancePolicy) -> usize {
        let c = self.cutoff(pol);
        self.eigenvalues.iter().filter(|&&l| l > c).count()
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Real symmetric positive semidefinite matrix with its eigendecomposition
/// computed once at construction.
#[derive(Clone, PartialEq)]
pub struct PsdMatrix {
    entries: DMatrix<f64>,
    spectral: Arc<EigenDecomposition>,
}

impl fmt::Debug for PsdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsdMatrix")
            .field("dim", &self.dim())
            .field("entries", &self.entries)
            .field("eigenvalues", &self.spectral.eigenvalues.as_slice())
            .finish()
    }
}

impl PsdMatrix {
    /// Symmetrizes `raw` and certifies it as positive semidefinite.
    ///
    /// Eigenvalues in `[-loewner_slack * λ_max, 0)` are clamped to zero; the
    /// entries are then rebuilt from the clamped spectrum. Anything more
    /// negative is rejected with [`Error::NotPsd`].
    pub fn validate(raw: &DMatrix<f64>, pol: &TolerancePolicy) -> Result<Self> {
        if raw.nrows() != raw.ncols() {
            return Err(Error::NotSquare {
                rows: raw.nrows(),
                cols: raw.ncols(),
            });
        }
        if raw.nrows() == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("matrix has non-finite entries".into()));
        }
        let entries = symmetrize(raw);
        let eig = EigenDecomposition::of_symmetric(&entries);
        let scale = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l.abs()));
        let tol = pol.loewner_slack * scale;
        let min = eig.lambda_min();
        if min < -tol {
            return Err(Error::NotPsd { min_eig: min, tol });
        }
        if min < 0.0 {
            Ok(Self::from_eigen(eig))
        } else {
            Ok(Self {
                entries,
                spectral: Arc::new(eig),
            })
        }
    }

    /// Wraps a symmetric matrix produced by arithmetic that is PSD in exact
    /// arithmetic; negative rounding dust in the spectrum is clamped.
    pub(crate) fn clamped(m: &DMatrix<f64>) -> Self {
        let entries = symmetrize(m);
        let eig = EigenDecomposition::of_symmetric(&entries);
        if eig.lambda_min() < 0.0 {
            Self::from_eigen(eig)
        } else {
            Self {
                entries,
                spectral: Arc::new(eig),
            }
        }
    }

    /// Like [`PsdMatrix::clamped`], but eigenvalues at or below `floor` are
    /// also set to zero. Used where `floor` is the resolution of the operands
    /// the matrix was computed from, so that rounding dust of a result that
    /// vanishes in exact arithmetic does not acquire a rank of its own.
    pub(crate) fn denoised(m: &DMatrix<f64>, floor: f64) -> Self {
        let entries = symmetrize(m);
        let mut eig = EigenDecomposition::of_symmetric(&entries);
        if eig.lambda_min() > floor {
            return Self {
                entries,
                spectral: Arc::new(eig),
            };
        }
        for l in eig.eigenvalues.iter_mut() {
            if *l <= floor {
                *l = 0.0;
            }
        }
        Self::from_eigen(eig)
    }

    fn from_eigen(mut eig: EigenDecomposition) -> Self {
        for l in eig.eigenvalues.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        let entries = eig.reconstruct();
        Self {
            entries,
            spectral: Arc::new(eig),
        }
    }

    /// Builds `V diag(values) Vᵀ` from a known orthonormal eigenbasis.
    pub(crate) fn from_spectrum(values: &[f64], vectors: &DMatrix<f64>) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i].max(0.0)));
        let mut sorted = DMatrix::zeros(vectors.nrows(), n);
        for (dst, &src) in order.iter().enumerate() {
            sorted.set_column(dst, &vectors.column(src));
        }
        let eig = EigenDecomposition {
            eigenvalues,
            vectors: sorted,
        };
        let entries = eig.reconstruct();
        Self {
            entries,
            spectral: Arc::new(eig),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_spectrum(&vec![0.0; n], &DMatrix::identity(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_spectrum(&vec![1.0; n], &DMatrix::identity(n, n))
    }

    /// Diagonal matrix; negative entries are clamped to zero.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_spectrum(values, &DMatrix::identity(n, n))
    }

    pub fn from_rows(rows: &[&[f64]], pol: &TolerancePolicy) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare { rows: n, cols: r.len() });
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::validate(&m, pol)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.spectral
    }

    /// Largest eigenvalue, which is also the spectral norm.
    pub fn lambda_max(&self) -> f64 {
        self.spectral.lambda_max()
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectral.lambda_min()
    }

    pub fn rank(&self, pol: &TolerancePolicy) -> usize {
        self.spectral.rank(pol)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }

    pub fn max_abs_diff(&self, other: &PsdMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }

    /// `t·A` for `t ≥ 0`, reusing the eigenbasis.
    pub fn scaled(&self, t: f64) -> Self {
        let vals: Vec<f64> = self.spectral.eigenvalues.iter().map(|l| l * t.max(0.0)).collect();
        let mut out = Self::from_spectrum(&vals, &self.spectral.vectors);
        // keep entries exact for t = 1
        if t == 1.0 {
            out.entries = self.entries.clone();
        }
        out
    }

    pub fn add(&self, other: &PsdMatrix) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self::clamped(&(&self.entries + &other.entries)))
    }

    /// `Cᵀ A C` for any square `C`.
    pub fn congruence(&self, c: &DMatrix<f64>) -> Result<Self> {
        if c.nrows() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: c.nrows(),
            });
        }
        Ok(Self::clamped(&(c.transpose() * &self.entries * c)))
    }

    /// `‖A·B − B·A‖` in max-abs norm.
    pub fn commutator_norm(&self, other: &PsdMatrix) -> f64 {
        let ab = &self.entries * &other.entries;
        (&ab - ab.transpose()).amax()
    }
}

pub(crate) fn check_dims(a: &PsdMatrix, b: &PsdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}
