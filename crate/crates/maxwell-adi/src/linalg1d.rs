//! One-dimensional Galerkin matrices over B-spline bases, banded storage,
//! and banded LU factorization with partial pivoting.
//!
//! Rows index test functions, columns index trial functions:
//!
//! - mass `M[i,l] = ∫ B_i B_l`
//! - stiffness `S[i,l] = ∫ B_i' B_l'`
//! - advection with the derivative on the trial side `A[i,l] = ∫ B_i B_l'`
//! - advection with the derivative on the test side  `B[i,l] = ∫ B_i' B_l`
//!
//! The two advection variants are transposes of each other.

use crate::splines::{KnotVector, QuadratureRule};
use crate::{Error, Result};

/// Square banded matrix with half-bandwidth `k`, stored row-major as
/// `n x (2k+1)` diagonals: entry `(i, j)` lives at `data[i*(2k+1) + j-i+k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
    symmetric: bool,
}

/// Which 1D Galerkin matrix to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Mass,
    Stiffness,
    AdvectionTrialDeriv,
    AdvectionTestDeriv,
}

impl BandedMatrix {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            data: vec![0.0; n * (2 * k + 1)],
            symmetric: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.k
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let d = j as isize - i as isize;
        if d.unsigned_abs() > self.k || j >= self.n {
            None
        } else {
            Some(i * (2 * self.k + 1) + (d + self.k as isize) as usize)
        }
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map_or(0.0, |o| self.data[o])
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band k={}", self.k));
        self.data[o] += v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let w = 2 * self.k + 1;
        for i in 0..self.n {
            let jlo = i.saturating_sub(self.k);
            let jhi = (i + self.k).min(self.n - 1);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = 0.0;
            for j in jlo..=jhi {
                acc += row[j + self.k - i] * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn transpose(&self) -> BandedMatrix {
        let mut out = BandedMatrix::zeros(self.n, self.k);
        out.symmetric = self.symmetric;
        for i in 0..self.n {
            let jlo = i.saturating_sub(self.k);
            let jhi = (i + self.k).min(self.n - 1);
            for j in jlo..=jhi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.add(j, i, v);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Assembles a 1D Galerkin matrix by per-element Gauss quadrature.
///
/// With `q >= degree + 1` points per element every entry is integrated
/// exactly. The half-bandwidth equals the degree.
pub fn assemble_1d(kv: &KnotVector, kind: MatrixKind, rule: &QuadratureRule) -> Result<BandedMatrix> {
    let p = kv.degree();
    let mut out = BandedMatrix::zeros(kv.n_basis(), p);
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let b = kv.eval_basis(*x)?;
        for a in 0..=p {
            let i = b.first + a;
            for c in 0..=p {
                let j = b.first + c;
                let v = match kind {
                    MatrixKind::Mass => b.values[a] * b.values[c],
                    MatrixKind::Stiffness => b.derivs[a] * b.derivs[c],
                    MatrixKind::AdvectionTrialDeriv => b.values[a] * b.derivs[c],
                    MatrixKind::AdvectionTestDeriv => b.derivs[a] * b.values[c],
                };
                out.add(i, j, w * v);
            }
        }
    }
    out.symmetric = matches!(kind, MatrixKind::Mass | MatrixKind::Stiffness);
    Ok(out)
}

/// Row-scaled combination `out[i,·] = m[i,·] + coeffs[i] * s[i,·]`.
///
/// With uniform coefficients this reduces to the plain matrix sum `M + c S`.
pub fn combine_mass_plus_scaled_stiffness(
    m: &BandedMatrix,
    s: &BandedMatrix,
    coeffs: &[f64],
) -> Result<BandedMatrix> {
    if m.n != s.n || m.k != s.k {
        return Err(Error::DimensionMismatch(format!(
            "combine: mass {}x(k={}) vs stiffness {}x(k={})",
            m.n, m.k, s.n, s.k
        )));
    }
    if coeffs.len() != m.n {
        return Err(Error::DimensionMismatch(format!(
            "combine: {} coefficients for {} rows",
            coeffs.len(),
            m.n
        )));
    }
    let w = 2 * m.k + 1;
    let mut out = BandedMatrix::zeros(m.n, m.k);
    for i in 0..m.n {
        let c = coeffs[i];
        for j in 0..w {
            out.data[i * w + j] = m.data[i * w + j] + c * s.data[i * w + j];
        }
    }
    out.symmetric =
        m.symmetric && s.symmetric && coeffs.windows(2).all(|w| w[0] == w[1]);
    Ok(out)
}

/// LU factorization of a banded matrix with partial pivoting, after
/// Numerical Recipes `bandec`. Pivoting stays within the band; the upper
/// factor widens to at most `2k+1` stored diagonals.
#[derive(Debug, Clone)]
pub struct BandedFactorization {
    n: usize,
    k: usize,
    mm: usize,
    upper: Vec<f64>,
    lower: Vec<f64>,
    pivot: Vec<usize>,
}

/// Relative pivot threshold: pivots smaller than this times the largest
/// band entry are treated as singular.
const PIVOT_RTOL: f64 = 1e-14;

pub fn factorize(a: &BandedMatrix) -> Result<BandedFactorization> {
    factorize_named(a, "banded system")
}

/// As [`factorize`], naming the system in singularity errors.
pub fn factorize_named(a: &BandedMatrix, context: &str) -> Result<BandedFactorization> {
    let n = a.n;
    let m1 = a.k;
    let mm = 2 * a.k + 1;
    let scale = a.max_abs();
    let mut upper = a.data.clone();
    let mut lower = vec![0.0; n * m1.max(1)];
    let mut pivot = vec![0usize; n];

    // Left-justify the top rows whose band sticks out of the matrix.
    for i in 0..m1.min(n) {
        let shift = m1 - i;
        for j in (m1 - i)..mm {
            upper[i * mm + j - shift] = upper[i * mm + j];
        }
        for j in (mm - shift)..mm {
            upper[i * mm + j] = 0.0;
        }
    }

    for kc in 0..n {
        let reach = (kc + m1 + 1).min(n);
        let mut prow = kc;
        let mut pval = upper[kc * mm].abs();
        for j in kc + 1..reach {
            let v = upper[j * mm].abs();
            if v > pval {
                pval = v;
                prow = j;
            }
        }
        pivot[kc] = prow;
        if pval <= PIVOT_RTOL * scale {
            return Err(Error::Singular {
                context: context.to_string(),
                row: kc,
            });
        }
        if prow != kc {
            for j in 0..mm {
                upper.swap(kc * mm + j, prow * mm + j);
            }
        }
        let diag = upper[kc * mm];
        for i in kc + 1..reach {
            let mult = upper[i * mm] / diag;
            lower[kc * m1 + (i - kc - 1)] = mult;
            for j in 1..mm {
                upper[i * mm + j - 1] = upper[i * mm + j] - mult * upper[kc * mm + j];
            }
            upper[i * mm + mm - 1] = 0.0;
        }
    }

    Ok(BandedFactorization {
        n,
        k: m1,
        mm,
        upper,
        lower,
        pivot,
    })
}

impl BandedFactorization {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place (Numerical Recipes `banbks`).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, m1, mm) = (self.n, self.k, self.mm);
        for kc in 0..n {
            let p = self.pivot[kc];
            if p != kc {
                b.swap(kc, p);
            }
            let reach = (kc + m1 + 1).min(n);
            for j in kc + 1..reach {
                b[j] -= self.lower[kc * m1 + (j - kc - 1)] * b[kc];
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for t in 1..l {
                acc -= self.upper[i * mm + t] * b[i + t];
            }
            b[i] = acc / self.upper[i * mm];
            if l < mm {
                l += 1;
            }
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves against every column of a column-major right-hand-side block.
    pub fn solve_multi_rhs(&self, rhs: &ColMatrix) -> Result<ColMatrix> {
        if rhs.rows != self.n {
            return Err(Error::DimensionMismatch(format!(
                "multi-rhs: factorization of size {} against {} rows",
                self.n, rhs.rows
            )));
        }
        let mut out = rhs.clone();
        for j in 0..out.cols {
            self.solve_in_place(out.col_mut(j));
        }
        Ok(out)
    }
}

/// Dense column-major matrix used as a multi-right-hand-side block; each
/// column is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }
}
