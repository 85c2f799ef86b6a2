//! Rational reference for `μ_G` orbits and `τ_G` in tiny dimensions.
//!
//! Diagonal pairs up to `3 × 3` are solved entrywise: the scalar orbit
//! `x ↦ x²/(x+g)` tends to `x` when `g = 0` and to `0` otherwise. General
//! `2 × 2` pairs iterate `F ↦ F (F+G)^+ F` with each step done exactly, the
//! pseudoinverse written out (`S^+ = S / tr(S)²` when `S` has rank one).
//! Exact iterates double in bit length every step, so [`exact_tau`] rounds
//! each one to a multiple of `2^-320`; [`exact_orbit`] does not round.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::psd::PsdMatrix;

pub type Rat = BigRational;
/// Square rational matrix, row major.
pub type RatMatrix = Vec<Vec<Rat>>;

/// Steps of the rational orbit before giving up.
pub const MAX_EXACT_STEPS: usize = 64;
/// The orbit stops once a step changes no entry by `2^-STEP_FLOOR_BITS` or more.
const STEP_FLOOR_BITS: u32 = 100;
/// Iterates of [`exact_tau`] are rounded to multiples of `2^-ROUND_BITS`.
const ROUND_BITS: u32 = 320;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_rational(m: &PsdMatrix) -> Result<RatMatrix> {
    let e = m.entries();
    (0..e.nrows())
        .map(|i| {
            (0..e.ncols())
                .map(|j| {
                    Rat::from_float(e[(i, j)])
                        .ok_or_else(|| Error::OracleUnsupported(format!("non-finite entry at ({i}, {j})")))
                })
                .collect()
        })
        .collect()
}

/// Rounds a PSD rational matrix to floating point. Rounding, here and on the
/// `2^-320` grid of [`exact_tau`], can leave eigenvalues slightly below zero;
/// those are clamped.
pub fn to_psd(m: &RatMatrix) -> Result<PsdMatrix> {
    let n = m.len();
    let flat: Vec<f64> = m
        .iter()
        .flat_map(|row| row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)))
        .collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::OracleUnsupported("entry does not fit in f64".into()));
    }
    let raw = nalgebra::DMatrix::from_row_slice(n, n, &flat);
    let scale = raw.amax();
    let tol = n as f64 * (f64::EPSILON * scale + 2f64.powi(-(ROUND_BITS as i32) + 8));
    let lambda_min = raw.clone().symmetric_eigenvalues().min();
    if lambda_min < -tol {
        return Err(Error::NotPsd {
            min_eig: lambda_min,
            tol,
        });
    }
    Ok(PsdMatrix::clamped(&raw))
}

fn is_diagonal(m: &RatMatrix) -> bool {
    m.iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, v)| i == j || v.is_zero()))
}

fn check_shape(g: &RatMatrix, x: &RatMatrix) -> Result<usize> {
    let n = x.len();
    if g.len() != n || x.iter().chain(g).any(|r| r.len() != n) {
        return Err(Error::DimMismatch {
            expected: n,
            found: g.len(),
        });
    }
    Ok(n)
}

/// One exact step `F ↦ F (F+G)^+ F`.
pub fn exact_mu(g: &RatMatrix, f: &RatMatrix) -> Result<RatMatrix> {
    let n = check_shape(g, f)?;
    if is_diagonal(g) && is_diagonal(f) {
        let mut out = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            let s = &f[i][i] + &g[i][i];
            if !s.is_zero() {
                out[i][i] = &f[i][i] * &f[i][i] / s;
            }
        }
        return Ok(out);
    }
    if n > 2 {
        return Err(Error::OracleUnsupported(format!(
            "non-diagonal pairs need dim ≤ 2, got {n}"
        )));
    }
    Ok(mu_2x2(&Scaled::from_rat(g), &Scaled::from_rat(f)).to_rat())
}

/// A rational `2 × 2` matrix as integer entries over one denominator.
#[derive(Clone)]
struct Scaled {
    num: Vec<Vec<BigInt>>,
    den: BigInt,
}

impl Scaled {
    fn from_rat(m: &RatMatrix) -> Self {
        let den = m.iter().flatten().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let num = m
            .iter()
            .map(|r| r.iter().map(|v| v.numer() * (&den / v.denom())).collect())
            .collect();
        Self { num, den }
    }

    fn to_rat(&self) -> RatMatrix {
        self.num
            .iter()
            .map(|r| r.iter().map(|v| Rat::new(v.clone(), self.den.clone())).collect())
            .collect()
    }

    /// Divides out the common factor of all entries and the denominator.
    fn reduced(mut self) -> Self {
        let mut g = self.den.abs();
        for v in self.num.iter().flatten() {
            if g.is_one() {
                return self;
            }
            g = g.gcd(v);
        }
        if g.is_zero() || g.is_one() {
            return self;
        }
        for v in self.num.iter_mut().flatten() {
            *v /= &g;
        }
        self.den /= &g;
        self
    }
}

fn mul_int(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    (0..2)
        .map(|i| (0..2).map(|j| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j]).collect())
        .collect()
}

/// `F (F+G)^+ F` for `2 × 2` inputs in integer arithmetic.
///
/// With `F = N/d`, `G = H/h` and `T = hN + dH`, the step is
/// `h N adj(T) N / (d det T)` when `T` is invertible and
/// `h N T N / (d tr(T)²)` when it has rank one. One gcd per step replaces
/// the per-operation normalization of rational arithmetic, which dominates
/// once entries reach tens of thousands of bits.
fn mu_2x2(g: &Scaled, f: &Scaled) -> Scaled {
    let (d, h) = (&f.den, &g.den);
    let t: Vec<Vec<BigInt>> = (0..2)
        .map(|i| (0..2).map(|j| h * &f.num[i][j] + d * &g.num[i][j]).collect())
        .collect();
    let det = &t[0][0] * &t[1][1] - &t[0][1] * &t[1][0];
    let (core, den) = if !det.is_zero() {
        let adj = vec![
            vec![t[1][1].clone(), -&t[0][1]],
            vec![-&t[1][0], t[0][0].clone()],
        ];
        (adj, d * det)
    } else {
        let tr = &t[0][0] + &t[1][1];
        if tr.is_zero() {
            return Scaled {
                num: vec![vec![BigInt::zero(); 2]; 2],
                den: BigInt::one(),
            };
        }
        let den = d * &tr * &tr;
        (t, den)
    };
    let num = mul_int(&mul_int(&f.num, &core), &f.num)
        .into_iter()
        .map(|r| r.into_iter().map(|v| h * v).collect())
        .collect();
    Scaled { num, den }.reduced()
}

/// The first `steps + 1` orbit terms `F₀ = X, …, F_steps`, exactly.
pub fn exact_orbit(g: &RatMatrix, x: &RatMatrix, steps: usize) -> Result<Vec<RatMatrix>> {
    let mut out = vec![x.clone()];
    for k in 0..steps {
        let next = exact_mu(g, &out[k])?;
        out.push(next);
    }
    Ok(out)
}

fn round_to_grid(v: &Rat) -> Rat {
    let unit = Rat::from_integer(BigInt::one() << ROUND_BITS);
    (v * &unit).round() / unit
}

fn scaled(m: &RatMatrix, t: &Rat) -> RatMatrix {
    m.iter().map(|r| r.iter().map(|v| v * t).collect()).collect()
}

fn max_abs_diff(a: &RatMatrix, b: &RatMatrix) -> Rat {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(Rat::zero(), |m, v| if v > m { v } else { m })
}

/// `τ_G(X)` from rational arithmetic.
///
/// Diagonal inputs (dim ≤ 3) are solved in closed form. Otherwise (dim ≤ 2)
/// the orbit runs until a step moves no entry by `2^-100`, and fails with
/// [`Error::OracleUnsupported`] if that takes more than [`MAX_EXACT_STEPS`]
/// steps. Each step is exact; its result is rounded to the `2^-320` grid.
/// A rank-one `X` keeps its range along the orbit, so there the iterates
/// are `c_n X` and only the scalar `c_n` is rounded, which keeps the rank
/// exact.
pub fn exact_tau(g: &RatMatrix, x: &RatMatrix) -> Result<RatMatrix> {
    let n = check_shape(g, x)?;
    if n > 3 {
        return Err(Error::OracleUnsupported(format!("dim {n} exceeds 3")));
    }
    if is_diagonal(g) && is_diagonal(x) {
        let mut out = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            if g[i][i].is_zero() {
                out[i][i] = x[i][i].clone();
            }
        }
        return Ok(out);
    }
    if n > 2 {
        return Err(Error::OracleUnsupported(format!(
            "non-diagonal pairs need dim ≤ 2, got {n}"
        )));
    }
    let floor = Rat::new(BigInt::one(), BigInt::one() << STEP_FLOOR_BITS);
    let rank_one = (&x[0][0] * &x[1][1] - &x[0][1] * &x[1][0]).is_zero();
    // entry of X used to read off c_n
    let (pi, pj) = [(0, 0), (0, 1), (1, 1)]
        .into_iter()
        .max_by(|a, b| x[a.0][a.1].abs().cmp(&x[b.0][b.1].abs()))
        .expect("three candidates");
    if x.iter().flatten().all(Zero::is_zero) {
        return Ok(x.clone());
    }
    let mut cur = x.clone();
    for _ in 0..MAX_EXACT_STEPS {
        let exact = exact_mu(g, &cur)?;
        let next = if rank_one {
            scaled(x, &round_to_grid(&(&exact[pi][pj] / &x[pi][pj])))
        } else {
            exact.iter().map(|r| r.iter().map(round_to_grid).collect()).collect()
        };
        if max_abs_diff(&cur, &next) < floor {
            return Ok(next);
        }
        cur = next;
    }
    Err(Error::OracleUnsupported(format!(
        "orbit still moving after {MAX_EXACT_STEPS} steps"
    )))
}

/// [`exact_tau`] on floating inputs, converted exactly and rounded back.
pub fn exact_oracle_small(g: &PsdMatrix, x: &PsdMatrix) -> Result<PsdMatrix> {
    to_psd(&exact_tau(&to_rational(g)?, &to_rational(x)?)?)
}
