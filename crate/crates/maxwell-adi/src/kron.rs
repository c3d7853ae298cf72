//! Rank-3 coefficient tensors, Kronecker-product applies, and directional
//! sweep solves.
//!
//! A tensor holds one scalar field's B-spline coefficients in a fixed
//! axis-major layout (`x` slowest, `z` fastest). Operators of the form
//! `Ax ⊗ Ay ⊗ Az` are applied one axis at a time; solves against
//! `Ax ⊗ Ay ⊗ Az` factor into independent banded solves along fibers of one
//! axis after an explicit transposition, so a full three-sweep solve costs
//! O(N) for fixed bandwidth.

use std::collections::HashMap;
use std::sync::Arc;

use crate::linalg1d::{
    combine_mass_plus_scaled_stiffness, factorize_named, BandedFactorization, BandedMatrix,
    ColMatrix,
};
use crate::splines::AxisEval;
use crate::{Error, Result};

/// Coordinate axis of a rank-3 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn idx(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Dense rank-3 tensor with layout `data[(i*ny + j)*nz + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    nx: usize,
    ny: usize,
    nz: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            nx: dims[0],
            ny: dims[1],
            nz: dims[2],
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = 0;
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    t.data[idx] = f(i, j, k);
                    idx += 1;
                }
            }
        }
        t
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn dim(&self, axis: Axis) -> usize {
        self.dims()[axis.idx()]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.data[idx] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Tensor3, s: f64) {
        assert_eq!(self.dims(), other.dims());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Elementwise `self *= other`.
    pub fn mul_elementwise(&mut self, other: &Tensor3) {
        assert_eq!(self.dims(), other.dims());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a *= b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute difference against another tensor of equal shape.
    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Copies the tensor into fiber-contiguous form for one axis: a
    /// column-major matrix whose columns are the fibers along `axis`.
    ///
    /// Column order: `X -> j*nz + k`, `Y -> i*nz + k`, `Z -> i*ny + j`.
    pub fn to_fibers(&self, axis: Axis) -> ColMatrix {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        match axis {
            Axis::Z => ColMatrix {
                rows: nz,
                cols: nx * ny,
                data: self.data.clone(),
            },
            Axis::Y => {
                let mut m = ColMatrix::zeros(ny, nx * nz);
                for i in 0..nx {
                    for j in 0..ny {
                        let src = (i * ny + j) * nz;
                        for k in 0..nz {
                            m.data[(i * nz + k) * ny + j] = self.data[src + k];
                        }
                    }
                }
                m
            }
            Axis::X => {
                let mut m = ColMatrix::zeros(nx, ny * nz);
                for i in 0..nx {
                    let src = i * ny * nz;
                    for jk in 0..ny * nz {
                        m.data[jk * nx + i] = self.data[src + jk];
                    }
                }
                m
            }
        }
    }

    /// Inverse of [`Tensor3::to_fibers`].
    pub fn from_fibers(axis: Axis, m: &ColMatrix, dims: [usize; 3]) -> Self {
        let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
        assert_eq!(m.rows, dims[axis.idx()]);
        assert_eq!(m.rows * m.cols, nx * ny * nz);
        match axis {
            Axis::Z => Self {
                nx,
                ny,
                nz,
                data: m.data.clone(),
            },
            Axis::Y => {
                let mut t = Self::zeros(dims);
                for i in 0..nx {
                    for j in 0..ny {
                        let dst = (i * ny + j) * nz;
                        for k in 0..nz {
                            t.data[dst + k] = m.data[(i * nz + k) * ny + j];
                        }
                    }
                }
                t
            }
            Axis::X => {
                let mut t = Self::zeros(dims);
                for i in 0..nx {
                    let dst = i * ny * nz;
                    for jk in 0..ny * nz {
                        t.data[dst + jk] = m.data[jk * nx + i];
                    }
                }
                t
            }
        }
    }
}

/// One factor of a Kronecker-product operator.
#[derive(Clone, Copy)]
pub enum AxisOp<'a> {
    Identity,
    Mat(&'a BandedMatrix),
}

/// Applies `(Ax ⊗ Ay ⊗ Az) u`, axis by axis in x, y, z order.
pub fn kron_apply(ops: [AxisOp<'_>; 3], u: &Tensor3) -> Result<Tensor3> {
    let dims = u.dims();
    for (op, axis) in ops.iter().zip(Axis::ALL) {
        if let AxisOp::Mat(m) = op {
            if m.n() != dims[axis.idx()] {
                return Err(Error::DimensionMismatch(format!(
                    "kron apply: {} axis has {} coefficients but matrix is {}x{}",
                    axis,
                    dims[axis.idx()],
                    m.n(),
                    m.n()
                )));
            }
        }
    }
    let mut cur = u.clone();
    for (op, axis) in ops.into_iter().zip(Axis::ALL) {
        let AxisOp::Mat(m) = op else { continue };
        let fibers = cur.to_fibers(axis);
        let mut out = ColMatrix::zeros(fibers.rows, fibers.cols);
        for j in 0..fibers.cols {
            m.matvec(fibers.col(j), out.col_mut(j));
        }
        cur = Tensor3::from_fibers(axis, &out, dims);
    }
    Ok(cur)
}

/// Solver for one directional sweep: a banded system along every fiber of
/// one axis.
///
/// The constant-coefficient path shares a single factorization across all
/// fibers. The variable-coefficient path assembles `M + diag(c) S` per fiber
/// from that fiber's coefficient vector, deduplicating factorizations through
/// a cache keyed by the coefficient vector's bit pattern.
#[derive(Clone)]
pub struct SweepPlan {
    axis: Axis,
    kind: SweepKind,
}

#[derive(Clone)]
enum SweepKind {
    Constant(Arc<BandedFactorization>),
    Variable {
        per_column: Vec<Arc<BandedFactorization>>,
        distinct: usize,
    },
}

impl SweepPlan {
    /// Shared-matrix sweep; factorizes once.
    pub fn constant(axis: Axis, matrix: &BandedMatrix) -> Result<Self> {
        let fac = factorize_named(matrix, &format!("{} sweep", axis))?;
        Ok(Self {
            axis,
            kind: SweepKind::Constant(Arc::new(fac)),
        })
    }

    /// Per-fiber sweep `M + diag(c) S`, with `c` read from the fibers of
    /// `coeffs` along `axis` (so a fiber at tensor position `(·, j, k)` for
    /// the x axis uses coefficient rows `coeffs[·, j, k]`, and so on).
    ///
    /// `decouple_ends` replaces the first and last row and column of every
    /// fiber matrix by the identity, for strong boundary elimination.
    pub fn variable(
        axis: Axis,
        m: &BandedMatrix,
        s: &BandedMatrix,
        coeffs: &Tensor3,
        decouple_ends: bool,
    ) -> Result<Self> {
        if coeffs.dim(axis) != m.n() {
            return Err(Error::DimensionMismatch(format!(
                "variable sweep: {} axis matrix of size {} against coefficient dim {}",
                axis,
                m.n(),
                coeffs.dim(axis)
            )));
        }
        let fibers = coeffs.to_fibers(axis);
        let mut cache: HashMap<Vec<u64>, Arc<BandedFactorization>> = HashMap::new();
        let mut per_column = Vec::with_capacity(fibers.cols);
        for j in 0..fibers.cols {
            let c = fibers.col(j);
            let key: Vec<u64> = c.iter().map(|v| v.to_bits()).collect();
            let fac = match cache.get(&key) {
                Some(f) => Arc::clone(f),
                None => {
                    let mut combined = combine_mass_plus_scaled_stiffness(m, s, c)?;
                    if decouple_ends {
                        decouple_boundary(&mut combined);
                    }
                    let fac = Arc::new(factorize_named(
                        &combined,
                        &format!("{} sweep, column {}", axis, j),
                    )?);
                    cache.insert(key, Arc::clone(&fac));
                    fac
                }
            };
            per_column.push(fac);
        }
        let distinct = cache.len();
        Ok(Self {
            axis,
            kind: SweepKind::Variable {
                per_column,
                distinct,
            },
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Number of distinct factorizations held (1 on the constant path).
    pub fn distinct_factorizations(&self) -> usize {
        match &self.kind {
            SweepKind::Constant(_) => 1,
            SweepKind::Variable { distinct, .. } => *distinct,
        }
    }

    /// Factorization used for fiber column `j` (variable path only).
    pub fn column_factorization(&self, j: usize) -> &Arc<BandedFactorization> {
        match &self.kind {
            SweepKind::Constant(f) => f,
            SweepKind::Variable { per_column, .. } => &per_column[j],
        }
    }
}

/// Replaces the first and last rows and columns of a banded matrix by
/// identity rows/columns, decoupling the end unknowns from the interior.
pub fn decouple_boundary(a: &mut BandedMatrix) {
    let n = a.n();
    let k = a.half_bandwidth();
    if n == 0 {
        return;
    }
    for d in 1..=k {
        if d < n {
            let v0 = a.get(0, d);
            a.add(0, d, -v0);
            let v1 = a.get(d, 0);
            a.add(d, 0, -v1);
            let v2 = a.get(n - 1, n - 1 - d);
            a.add(n - 1, n - 1 - d, -v2);
            let v3 = a.get(n - 1 - d, n - 1);
            a.add(n - 1 - d, n - 1, -v3);
        }
    }
    let d0 = a.get(0, 0);
    a.add(0, 0, 1.0 - d0);
    let d1 = a.get(n - 1, n - 1);
    a.add(n - 1, n - 1, 1.0 - d1);
}

/// Solves the sweep's banded system along every fiber of the plan's axis.
pub fn sweep_solve(plan: &SweepPlan, rhs: &Tensor3) -> Result<Tensor3> {
    let dims = rhs.dims();
    let fibers = rhs.to_fibers(plan.axis);
    let solved = match &plan.kind {
        SweepKind::Constant(f) => f.solve_multi_rhs(&fibers)?,
        SweepKind::Variable { per_column, .. } => {
            if per_column.len() != fibers.cols {
                return Err(Error::DimensionMismatch(format!(
                    "sweep along {}: plan has {} columns, tensor has {}",
                    plan.axis,
                    per_column.len(),
                    fibers.cols
                )));
            }
            let mut out = fibers.clone();
            for j in 0..out.cols {
                if per_column[j].n() != out.rows {
                    return Err(Error::DimensionMismatch(format!(
                        "sweep along {}: column {} factorization size {} vs fiber length {}",
                        plan.axis,
                        j,
                        per_column[j].n(),
                        out.rows
                    )));
                }
                per_column[j].solve_in_place(out.col_mut(j));
            }
            out
        }
    };
    Ok(Tensor3::from_fibers(plan.axis, &solved, dims))
}

/// Solves `(Ax ⊗ Ay ⊗ Az) u = rhs` by three directional sweeps in x, y, z
/// order. The plans must be given in that axis order.
///
/// Because the left-hand side factors exactly, this is a direct solve, not a
/// splitting approximation.
pub fn adi_solve_block(plans: &[SweepPlan; 3], rhs: &Tensor3) -> Result<Tensor3> {
    for (plan, axis) in plans.iter().zip(Axis::ALL) {
        if plan.axis != axis {
            return Err(Error::InvalidParameter(format!(
                "sweep plans must be ordered x, y, z; got {} in slot {}",
                plan.axis,
                axis.idx()
            )));
        }
    }
    let mut cur = sweep_solve(&plans[0], rhs)?;
    cur = sweep_solve(&plans[1], &cur)?;
    sweep_solve(&plans[2], &cur)
}

/// Contracts one axis with tabulated basis values (or derivatives),
/// replacing that axis' coefficient dimension by the evaluation points.
///
/// Used to evaluate spline fields on tensor-product point grids.
pub fn eval_along_axis(t: &Tensor3, axis: Axis, eval: &AxisEval, derivative: bool) -> Tensor3 {
    let dims = t.dims();
    assert_eq!(
        dims[axis.idx()],
        eval.n_basis,
        "axis {} has {} coefficients, eval table expects {}",
        axis,
        dims[axis.idx()],
        eval.n_basis
    );
    let mut out_dims = dims;
    out_dims[axis.idx()] = eval.n_points;
    let mut out = Tensor3::zeros(out_dims);
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    match axis {
        Axis::X => {
            let plane = ny * nz;
            for a in 0..eval.n_points {
                let (first, w) = eval.row(a, derivative);
                let dst = &mut out.data[a * plane..(a + 1) * plane];
                for (t_off, &wt) in w.iter().enumerate() {
                    let src = &t.data[(first + t_off) * plane..(first + t_off + 1) * plane];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += wt * s;
                    }
                }
            }
        }
        Axis::Y => {
            let npts = eval.n_points;
            for i in 0..nx {
                for a in 0..npts {
                    let (first, w) = eval.row(a, derivative);
                    let dst_base = (i * npts + a) * nz;
                    for (t_off, &wt) in w.iter().enumerate() {
                        let src_base = (i * ny + first + t_off) * nz;
                        for k in 0..nz {
                            out.data[dst_base + k] += wt * t.data[src_base + k];
                        }
                    }
                }
            }
        }
        Axis::Z => {
            let npts = eval.n_points;
            for ij in 0..nx * ny {
                let src = &t.data[ij * nz..(ij + 1) * nz];
                let dst = &mut out.data[ij * npts..(ij + 1) * npts];
                for (a, d) in dst.iter_mut().enumerate() {
                    let (first, w) = eval.row(a, derivative);
                    let mut acc = 0.0;
                    for (t_off, &wt) in w.iter().enumerate() {
                        acc += wt * src[first + t_off];
                    }
                    *d = acc;
                }
            }
        }
    }
    out
}

/// Adjoint of [`eval_along_axis`]: accumulates point-indexed data back onto
/// the axis' basis coefficients, `out[g] = Σ_a w[a,g] in[a]`.
///
/// Used to form quadrature load vectors: with basis values tabulated at
/// weighted quadrature points, three applications turn point samples into
/// the tensor-product load vector.
pub fn project_along_axis(t: &Tensor3, axis: Axis, eval: &AxisEval, derivative: bool) -> Tensor3 {
    let dims = t.dims();
    assert_eq!(
        dims[axis.idx()],
        eval.n_points,
        "axis {} has {} samples, eval table expects {}",
        axis,
        dims[axis.idx()],
        eval.n_points
    );
    let mut out_dims = dims;
    out_dims[axis.idx()] = eval.n_basis;
    let mut out = Tensor3::zeros(out_dims);
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    match axis {
        Axis::X => {
            let plane = ny * nz;
            for a in 0..nx {
                let (first, w) = eval.row(a, derivative);
                let src = &t.data[a * plane..(a + 1) * plane];
                for (t_off, &wt) in w.iter().enumerate() {
                    let dst = &mut out.data[(first + t_off) * plane..(first + t_off + 1) * plane];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += wt * s;
                    }
                }
            }
        }
        Axis::Y => {
            let nb = eval.n_basis;
            for i in 0..nx {
                for a in 0..ny {
                    let (first, w) = eval.row(a, derivative);
                    let src_base = (i * ny + a) * nz;
                    for (t_off, &wt) in w.iter().enumerate() {
                        let dst_base = (i * nb + first + t_off) * nz;
                        for k in 0..nz {
                            out.data[dst_base + k] += wt * t.data[src_base + k];
                        }
                    }
                }
            }
        }
        Axis::Z => {
            let nb = eval.n_basis;
            for ij in 0..nx * ny {
                let src = &t.data[ij * nz..(ij + 1) * nz];
                let dst = &mut out.data[ij * nb..(ij + 1) * nb];
                for (a, s) in src.iter().enumerate() {
                    let (first, w) = eval.row(a, derivative);
                    for (t_off, &wt) in w.iter().enumerate() {
                        dst[first + t_off] += wt * s;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg1d::{assemble_1d, MatrixKind};
    use crate::splines::{gauss_rule, KnotVector};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(dims, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn random_banded(n: usize, k: usize, seed: u64) -> BandedMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandedMatrix::zeros(n, k);
        for i in 0..n {
            for j in i.saturating_sub(k)..=(i + k).min(n - 1) {
                a.add(i, j, rng.gen_range(-1.0..1.0));
            }
            a.add(i, i, 3.0);
        }
        a
    }

    fn dense_kron3(ax: &DMatrix<f64>, ay: &DMatrix<f64>, az: &DMatrix<f64>) -> DMatrix<f64> {
        ax.kronecker(&ay.kronecker(az))
    }

    fn flat(t: &Tensor3) -> DVector<f64> {
        DVector::from_column_slice(t.data())
    }

    #[test]
    fn fiber_roundtrip_all_axes() {
        let t = random_tensor([3, 4, 5], 1);
        for axis in Axis::ALL {
            let m = t.to_fibers(axis);
            assert_eq!(m.rows, t.dim(axis));
            assert_eq!(m.rows * m.cols, t.len());
            let back = Tensor3::from_fibers(axis, &m, t.dims());
            assert_eq!(back, t);
        }
    }

    #[test]
    fn fiber_column_order_is_documented() {
        let t = Tensor3::from_fn([2, 3, 4], |i, j, k| (i * 100 + j * 10 + k) as f64);
        let m = t.to_fibers(Axis::Y);
        // Column i*nz + k holds the y-fiber at (i, ·, k).
        for i in 0..2 {
            for k in 0..4 {
                let col = m.col(i * 4 + k);
                for j in 0..3 {
                    assert_eq!(col[j], t.get(i, j, k));
                }
            }
        }
        let m = t.to_fibers(Axis::X);
        for j in 0..3 {
            for k in 0..4 {
                let col = m.col(j * 4 + k);
                for i in 0..2 {
                    assert_eq!(col[i], t.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn kron_apply_identity_and_scaling() {
        let t = random_tensor([4, 3, 5], 2);
        let out = kron_apply([AxisOp::Identity; 3], &t).unwrap();
        assert_eq!(out, t);

        let mut two = BandedMatrix::zeros(3, 0);
        for i in 0..3 {
            two.add(i, i, 2.0);
        }
        let out = kron_apply([AxisOp::Identity, AxisOp::Mat(&two), AxisOp::Identity], &t).unwrap();
        for (a, b) in out.data().iter().zip(t.data()) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn kron_apply_matches_dense_kronecker() {
        let dims = [3usize, 4, 5];
        let ax = random_banded(dims[0], 1, 10);
        let ay = random_banded(dims[1], 2, 11);
        let az = random_banded(dims[2], 1, 12);
        let t = random_tensor(dims, 13);

        let got = kron_apply(
            [AxisOp::Mat(&ax), AxisOp::Mat(&ay), AxisOp::Mat(&az)],
            &t,
        )
        .unwrap();
        let dense = dense_kron3(&ax.to_dense(), &ay.to_dense(), &az.to_dense());
        let want = &dense * flat(&t);
        let scale = want.amax();
        for (i, v) in got.data().iter().enumerate() {
            assert!((v - want[i]).abs() / scale <= 1e-12);
        }

        // Mixed identity factors.
        let got = kron_apply(
            [AxisOp::Mat(&ax), AxisOp::Identity, AxisOp::Mat(&az)],
            &t,
        )
        .unwrap();
        let eye = DMatrix::identity(dims[1], dims[1]);
        let want = dense_kron3(&ax.to_dense(), &eye, &az.to_dense()) * flat(&t);
        for (i, v) in got.data().iter().enumerate() {
            assert!((v - want[i]).abs() / scale <= 1e-12);
        }

        let bad = random_banded(7, 1, 14);
        assert!(kron_apply(
            [AxisOp::Mat(&bad), AxisOp::Identity, AxisOp::Identity],
            &t
        )
        .is_err());
    }

    #[test]
    fn constant_sweep_roundtrip() {
        let dims = [5usize, 4, 6];
        let a = random_banded(dims[1], 2, 20);
        let t = random_tensor(dims, 21);
        let applied = kron_apply([AxisOp::Identity, AxisOp::Mat(&a), AxisOp::Identity], &t).unwrap();
        let plan = SweepPlan::constant(Axis::Y, &a).unwrap();
        let back = sweep_solve(&plan, &applied).unwrap();
        assert!(back.max_abs_diff(&t) <= 1e-11);
    }

    #[test]
    fn variable_sweep_with_uniform_coefficients_is_bitwise_constant_path() {
        let kv = KnotVector::open_uniform(4, 2, 1).unwrap();
        let rule = gauss_rule(3, &kv).unwrap();
        let m = assemble_1d(&kv, MatrixKind::Mass, &rule).unwrap();
        let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule).unwrap();
        let n = m.n();
        let dims = [n, n, n];
        let c = 0.37;
        let coeffs = Tensor3::from_fn(dims, |_, _, _| c);

        let var = SweepPlan::variable(Axis::Y, &m, &s, &coeffs, false).unwrap();
        assert_eq!(var.distinct_factorizations(), 1);

        let combined = combine_mass_plus_scaled_stiffness(&m, &s, &vec![c; n]).unwrap();
        let con = SweepPlan::constant(Axis::Y, &combined).unwrap();

        let rhs = random_tensor(dims, 22);
        let xv = sweep_solve(&var, &rhs).unwrap();
        let xc = sweep_solve(&con, &rhs).unwrap();
        assert_eq!(xv, xc, "uniform variable path must match constant path bitwise");
    }

    #[test]
    fn variable_sweep_cache_shares_factorizations() {
        let kv = KnotVector::open_uniform(3, 1, 0).unwrap();
        let rule = gauss_rule(2, &kv).unwrap();
        let m = assemble_1d(&kv, MatrixKind::Mass, &rule).unwrap();
        let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule).unwrap();
        let n = m.n();
        // Coefficients depend only on x: halves of the domain.
        let coeffs = Tensor3::from_fn([n, n, n], |i, _, _| if i < n / 2 { 0.2 } else { 0.8 });
        let plan = SweepPlan::variable(Axis::Y, &m, &s, &coeffs, false).unwrap();
        assert_eq!(plan.distinct_factorizations(), 2);
        // Columns are ordered i*nz + k for the y axis; same i -> same fiber.
        let f_a = plan.column_factorization(0);
        let f_b = plan.column_factorization(1);
        assert!(Arc::ptr_eq(f_a, f_b));
        let f_c = plan.column_factorization((n - 1) * n);
        assert!(!Arc::ptr_eq(f_a, f_c));
    }

    #[test]
    fn adi_block_solve_matches_dense_kronecker_solve() {
        for (p, cont, nel) in [(1usize, 0usize, 4usize), (2, 1, 4)] {
            let kv = KnotVector::open_uniform(nel, p, cont).unwrap();
            let rule = gauss_rule(p + 1, &kv).unwrap();
            let m = assemble_1d(&kv, MatrixKind::Mass, &rule).unwrap();
            let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule).unwrap();
            let n = m.n();
            let c = 0.05;
            let stiffened =
                combine_mass_plus_scaled_stiffness(&m, &s, &vec![c; n]).unwrap();

            let plans = [
                SweepPlan::constant(Axis::X, &m).unwrap(),
                SweepPlan::constant(Axis::Y, &stiffened).unwrap(),
                SweepPlan::constant(Axis::Z, &m).unwrap(),
            ];
            let rhs = random_tensor([n, n, n], 31 + p as u64);
            let got = adi_solve_block(&plans, &rhs).unwrap();

            let dense = dense_kron3(&m.to_dense(), &stiffened.to_dense(), &m.to_dense());
            let want = dense.lu().solve(&flat(&rhs)).unwrap();
            let scale = want.amax();
            for (i, v) in got.data().iter().enumerate() {
                assert!(
                    (v - want[i]).abs() / scale <= 1e-10,
                    "p={} entry {}: {} vs {}",
                    p,
                    i,
                    v,
                    want[i]
                );
            }
        }
    }

    #[test]
    fn variable_adi_solve_matches_composed_dense_operator() {
        // The middle sweep's fiber (i, k) uses coefficient rows c[i, ·, k]:
        // composing (Mx ⊗ I ⊗ I) · blockdiag(My + diag(c) Sy) · (I ⊗ I ⊗ Mz)
        // is exactly what the three sweeps invert.
        let kv = KnotVector::open_uniform(3, 2, 1).unwrap();
        let rule = gauss_rule(3, &kv).unwrap();
        let m = assemble_1d(&kv, MatrixKind::Mass, &rule).unwrap();
        let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule).unwrap();
        let n = m.n();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        let coeffs = Tensor3::from_fn([n, n, n], |_, _, _| rng.gen_range(0.01..0.5));

        let plans = [
            SweepPlan::constant(Axis::X, &m).unwrap(),
            SweepPlan::variable(Axis::Y, &m, &s, &coeffs, false).unwrap(),
            SweepPlan::constant(Axis::Z, &m).unwrap(),
        ];
        let rhs = random_tensor([n, n, n], 41);
        let got = adi_solve_block(&plans, &rhs).unwrap();

        let nn = n * n * n;
        let eye = DMatrix::identity(n, n);
        let xhat = dense_kron3(&m.to_dense(), &eye, &eye);
        let zhat = dense_kron3(&eye, &eye, &m.to_dense());
        let mut yhat = DMatrix::zeros(nn, nn);
        let md = m.to_dense();
        let sd = s.to_dense();
        for i in 0..n {
            for k in 0..n {
                for sr in 0..n {
                    for sc in 0..n {
                        let row = (i * n + sr) * n + k;
                        let col = (i * n + sc) * n + k;
                        yhat[(row, col)] = md[(sr, sc)] + coeffs.get(i, sr, k) * sd[(sr, sc)];
                    }
                }
            }
        }
        let composed = xhat * yhat * zhat;
        let want = composed.lu().solve(&flat(&rhs)).unwrap();
        let scale = want.amax();
        for (i, v) in got.data().iter().enumerate() {
            assert!(
                (v - want[i]).abs() / scale <= 1e-10,
                "entry {}: {} vs {}",
                i,
                v,
                want[i]
            );
        }
    }

    #[test]
    fn sweep_plan_errors() {
        let a = random_banded(4, 1, 50);
        let plan_y = SweepPlan::constant(Axis::Y, &a).unwrap();
        // Wrong plan order for the block solve.
        let plans = [
            plan_y.clone(),
            SweepPlan::constant(Axis::X, &a).unwrap(),
            SweepPlan::constant(Axis::Z, &a).unwrap(),
        ];
        let rhs = random_tensor([4, 4, 4], 51);
        assert!(adi_solve_block(&plans, &rhs).is_err());

        // Singular fiber system reports axis and column.
        let m = BandedMatrix::zeros(3, 1);
        let s = BandedMatrix::zeros(3, 1);
        let coeffs = Tensor3::zeros([3, 3, 3]);
        match SweepPlan::variable(Axis::Z, &m, &s, &coeffs, false) {
            Err(Error::Singular { context, row }) => {
                assert!(context.contains('z') && context.contains("column 0"), "{context}");
                assert_eq!(row, 0);
            }
            other => panic!("expected singularity, got {:?}", other.err()),
        }
    }

    #[test]
    fn decoupled_ends_pin_boundary_values() {
        let kv = KnotVector::open_uniform(4, 2, 1).unwrap();
        let rule = gauss_rule(3, &kv).unwrap();
        let m = assemble_1d(&kv, MatrixKind::Mass, &rule).unwrap();
        let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule).unwrap();
        let n = m.n();
        let coeffs = Tensor3::from_fn([n, n, n], |_, _, _| 0.1);
        let plan = SweepPlan::variable(Axis::Y, &m, &s, &coeffs, true).unwrap();

        // Zero boundary rows in, zero boundary rows out; interior solved.
        let mut rhs = random_tensor([n, n, n], 52);
        for i in 0..n {
            for k in 0..n {
                rhs.set(i, 0, k, 0.0);
                rhs.set(i, n - 1, k, 0.0);
            }
        }
        let x = sweep_solve(&plan, &rhs).unwrap();
        for i in 0..n {
            for k in 0..n {
                assert_eq!(x.get(i, 0, k), 0.0);
                assert_eq!(x.get(i, n - 1, k), 0.0);
            }
        }
        assert!(x.max_abs() > 0.0);
    }

    #[test]
    fn eval_along_axis_matches_pointwise_sums() {
        let kv = KnotVector::open_uniform(3, 2, 1).unwrap();
        let n = kv.n_basis();
        let t = random_tensor([n, n, n], 60);
        let pts: Vec<f64> = (0..7).map(|i| i as f64 / 6.0).collect();
        let ae = AxisEval::new(&kv, &pts).unwrap();

        for (axis, deriv) in [(Axis::X, false), (Axis::Y, true), (Axis::Z, false)] {
            let out = eval_along_axis(&t, axis, &ae, deriv);
            let mut dims = t.dims();
            dims[axis.idx()] = pts.len();
            assert_eq!(out.dims(), dims);
            // Check a few entries against direct summation.
            for (a, &x) in pts.iter().enumerate() {
                let b = kv.eval_basis(x).unwrap();
                let w = if deriv { &b.derivs } else { &b.values };
                let direct: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(off, wv)| {
                        let g = b.first + off;
                        let (i, j, k) = match axis {
                            Axis::X => (g, 1, 2),
                            Axis::Y => (1, g, 2),
                            Axis::Z => (1, 2, g),
                        };
                        wv * t.get(i, j, k)
                    })
                    .sum();
                let got = match axis {
                    Axis::X => out.get(a, 1, 2),
                    Axis::Y => out.get(1, a, 2),
                    Axis::Z => out.get(1, 2, a),
                };
                approx::assert_abs_diff_eq!(got, direct, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn project_along_axis_is_adjoint_of_eval() {
        let kv = KnotVector::open_uniform(3, 2, 1).unwrap();
        let n = kv.n_basis();
        let pts: Vec<f64> = (0..9).map(|i| (i as f64 + 0.3) / 9.3).collect();
        let ae = AxisEval::new(&kv, &pts).unwrap();
        for axis in Axis::ALL {
            let mut cdims = [4, 4, 4];
            cdims[axis.idx()] = n;
            let mut pdims = [4, 4, 4];
            pdims[axis.idx()] = pts.len();
            let coeff = random_tensor(cdims, 70 + axis.idx() as u64);
            let point = random_tensor(pdims, 80 + axis.idx() as u64);
            for deriv in [false, true] {
                let ev = eval_along_axis(&coeff, axis, &ae, deriv);
                let pr = project_along_axis(&point, axis, &ae, deriv);
                let lhs: f64 = ev.data().iter().zip(point.data()).map(|(a, b)| a * b).sum();
                let rhs: f64 = coeff.data().iter().zip(pr.data()).map(|(a, b)| a * b).sum();
                approx::assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sweep_cost_scales_linearly() {
        // Three-sweep solve cost per octupling of unknowns should grow by
        // roughly 8; allow up to 10 and retry against scheduler noise.
        let build = |nel: usize| {
            let kv = KnotVector::open_uniform(nel, 2, 1).unwrap();
            let rule = gauss_rule(3, &kv).unwrap();
            let m = assemble_1d(&kv, MatrixKind::Mass, &rule).unwrap();
            let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule).unwrap();
            let n = m.n();
            let stiffened =
                combine_mass_plus_scaled_stiffness(&m, &s, &vec![0.01; n]).unwrap();
            let plans = [
                SweepPlan::constant(Axis::X, &m).unwrap(),
                SweepPlan::constant(Axis::Y, &stiffened).unwrap(),
                SweepPlan::constant(Axis::Z, &m).unwrap(),
            ];
            (plans, random_tensor([n, n, n], nel as u64))
        };
        let measure = |plans: &[SweepPlan; 3], rhs: &Tensor3| -> f64 {
            let mut best = f64::INFINITY;
            for _ in 0..5 {
                let t0 = std::time::Instant::now();
                let x = adi_solve_block(plans, rhs).unwrap();
                let dt = t0.elapsed().as_secs_f64();
                std::hint::black_box(x);
                best = best.min(dt);
            }
            best
        };

        let (p8, r8) = build(8);
        let (p16, r16) = build(16);
        let (p32, r32) = build(32);
        let mut ok = false;
        let mut last = (0.0, 0.0);
        for _ in 0..3 {
            let t8 = measure(&p8, &r8);
            let t16 = measure(&p16, &r16);
            let t32 = measure(&p32, &r32);
            last = (t16 / t8, t32 / t16);
            if last.0 <= 10.0 && last.1 <= 10.0 {
                ok = true;
                break;
            }
        }
        assert!(ok, "sweep cost ratios per octupling {:?} exceed 10", last);
    }
}
