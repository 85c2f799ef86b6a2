//! Seeded `(G, X)` pairs with prescribed ranks and range overlap.
//!
//! Both matrices are built from one Haar-random orthonormal frame `Q`:
//! `ran G` is spanned by `Q[:, ..rank_g]`, and `ran X` by the first
//! `overlap_dim` of those columns plus `rank_x − overlap_dim` columns taken
//! from `Q[:, rank_g..]`, each tilted by a bounded mix of the `G`-only
//! columns. The tilt never reaches inside `ran G`, so
//! `ran G ∩ ran X` is exactly the shared block, while the principal angles
//! between the two ranges stay away from zero. Nonzero eigenvalues lie in
//! `[0.1, 1]`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psd::PsdMatrix;

/// Smallest nonzero eigenvalue of generated matrices.
pub const SPECTRAL_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub rank_g: usize,
    pub rank_x: usize,
    pub commuting: bool,
    pub overlap_dim: usize,
    pub seed: u64,
    pub spectrum_decay: f64,
}

impl EnsembleSpec {
    pub fn new(dim: usize, rank_g: usize, rank_x: usize, overlap_dim: usize, seed: u64) -> Self {
        Self {
            dim,
            rank_g,
            rank_x,
            commuting: false,
            overlap_dim,
            seed,
            spectrum_decay: 1.0,
        }
    }

    pub fn commuting(mut self, yes: bool) -> Self {
        self.commuting = yes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleSpec(msg));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.rank_g > self.dim || self.rank_x > self.dim {
            return bad(format!(
                "ranks ({}, {}) exceed dim {}",
                self.rank_g, self.rank_x, self.dim
            ));
        }
        if self.overlap_dim > self.rank_g.min(self.rank_x) {
            return bad(format!(
                "overlap {} exceeds min(rank_g, rank_x) = {}",
                self.overlap_dim,
                self.rank_g.min(self.rank_x)
            ));
        }
        if self.rank_g + self.rank_x - self.overlap_dim > self.dim {
            return bad(format!(
                "rank_g + rank_x − overlap = {} exceeds dim {}",
                self.rank_g + self.rank_x - self.overlap_dim,
                self.dim
            ));
        }
        if !(self.spectrum_decay > 0.0 && self.spectrum_decay.is_finite()) {
            return bad(format!("spectrum_decay must be positive, got {}", self.spectrum_decay));
        }
        Ok(())
    }

    /// A feasible spec drawn from `seed`: dim in `2..=32`, any rank pattern,
    /// commuting one time in five.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
        let dim = rng.random_range(2..=32);
        Self::random_with_dim(dim, seed, &mut rng)
    }

    /// Like [`EnsembleSpec::random`] with the dimension fixed.
    pub fn random_in_dim(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
        Self::random_with_dim(dim, seed, &mut rng)
    }

    fn random_with_dim(dim: usize, seed: u64, rng: &mut ChaCha8Rng) -> Self {
        let rank_g = rng.random_range(0..=dim);
        let rank_x = rng.random_range(0..=dim);
        let lo = (rank_g + rank_x).saturating_sub(dim);
        let overlap_dim = rng.random_range(lo..=rank_g.min(rank_x));
        Self {
            dim,
            rank_g,
            rank_x,
            commuting: rng.random_bool(0.2),
            overlap_dim,
            seed,
            spectrum_decay: rng.random_range(0.5..4.0),
        }
    }
}

/// `count` specs with per-pair seeds `seed + index`.
pub fn random_specs(seed: u64, count: usize) -> Vec<EnsembleSpec> {
    (0..count as u64).map(|i| EnsembleSpec::random(seed.wrapping_add(i))).collect()
}

pub(crate) fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix).
pub(crate) fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let qr = gaussian(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Orthonormalizes the columns of a full-column-rank matrix.
fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    m.clone().qr().q().columns(0, m.ncols()).into_owned()
}

fn spectrum(rng: &mut impl Rng, r: usize, decay: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = (0..r)
        .map(|k| {
            let t = if r > 1 { k as f64 / (r - 1) as f64 } else { 0.0 };
            SPECTRAL_FLOOR + (1.0 - SPECTRAL_FLOOR) * (-decay * t).exp()
        })
        .collect();
    // shuffle so that the largest eigenvalue is not tied to the overlap block
    for i in (1..vals.len()).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    vals
}

/// `U diag(vals) Uᵀ` with `U` orthonormal columns.
fn assemble(u: &DMatrix<f64>, vals: &[f64]) -> PsdMatrix {
    let n = u.nrows();
    let mut scaled = u.clone();
    for (j, &v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    if u.ncols() == 0 {
        return PsdMatrix::zeros(n);
    }
    PsdMatrix::clamped(&(scaled * u.transpose()))
}

/// Deterministic `(G, X)` with the ranks and overlap of `spec`.
pub fn gen_pair(spec: &EnsembleSpec) -> Result<(PsdMatrix, PsdMatrix)> {
    spec.validate()?;
    let EnsembleSpec {
        dim: n,
        rank_g: rg,
        rank_x: rx,
        overlap_dim: ov,
        ..
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = random_orthogonal(&mut rng, n);
    let g_vals = spectrum(&mut rng, rg, spec.spectrum_decay);
    let x_vals = spectrum(&mut rng, rx, spec.spectrum_decay);

    let fresh = rx - ov;
    if spec.commuting {
        let mut cols: Vec<usize> = (0..ov).collect();
        cols.extend(rg..rg + fresh);
        let ug = q.columns(0, rg).into_owned();
        let ux = q.select_columns(cols.iter());
        return Ok((assemble(&ug, &g_vals), assemble(&ux, &x_vals)));
    }

    let g_only = rg - ov;
    let mut basis = DMatrix::<f64>::zeros(n, rx);
    basis.columns_mut(0, ov).copy_from(&q.columns(0, ov));
    let mix_scale = 1.0 / (g_only.max(1) as f64).sqrt();
    for j in 0..fresh {
        let mut col = q.column(rg + j).into_owned();
        for i in 0..g_only {
            let c: f64 = rng.random_range(-0.5..0.5) * mix_scale;
            col += q.column(ov + i) * c;
        }
        basis.set_column(ov + j, &col);
    }
    let ug = q.columns(0, rg).into_owned() * random_orthogonal(&mut rng, rg);
    let ux = orthonormalize(&basis) * random_orthogonal(&mut rng, rx);
    Ok((assemble(&ug, &g_vals), assemble(&ux, &x_vals)))
}

/// Random PSD matrix of the given rank with eigenvalues in `[lo, hi]`.
pub(crate) fn random_psd(rng: &mut impl Rng, n: usize, rank: usize, lo: f64, hi: f64) -> PsdMatrix {
    let q = random_orthogonal(rng, n);
    let vals: Vec<f64> = (0..rank).map(|_| rng.random_range(lo..=hi)).collect();
    assemble(&q.columns(0, rank).into_owned(), &vals)
}

/// Square matrix `U diag(σ) Vᵀ` with singular values in `[lo, hi]`.
pub(crate) fn random_conditioned(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let v = random_orthogonal(rng, n);
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(lo..=hi)));
    u * s * v.transpose()
}
