//! Verification harness: closed-form manufactured solutions, quadrature
//! error norms, a dense brute-force reference stepper, and the temporal
//! convergence / cost-scaling studies.
//!
//! The manufactured fields are standing-wave Maxwell eigenmodes on the unit
//! cube with ε = μ = 1: each mode places the electric field along one axis
//! with a product of sines over the two transverse axes, and carries the
//! matching magnetic field so that the pair solves Maxwell's equations
//! exactly. Their curls are available in closed form, so both L2 and H-curl
//! errors are measured against exact references.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::kron::{Axis, Tensor3};
use crate::linalg1d::{assemble_1d, MatrixKind};
use crate::maxwell::{
    assemble_operators, stiffened_axis, BoundaryMode, EMState, Material, Operators, SchemeConfig,
    Substep,
};
use crate::splines::{gauss_rule, KnotVector};
use crate::{Error, Result};

/// One standing-wave mode: the electric field points along axis
/// `family − 1` and oscillates over the two transverse axes with wave
/// numbers `kappa` (lower transverse axis) and `lambda` (upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub family: u8,
    pub kappa: i32,
    pub lambda: i32,
    pub weight: f64,
}

/// Weighted sum of [`Mode`]s, evaluable exactly at any point and time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ManufacturedSolution {
    pub modes: Vec<Mode>,
}

/// Geometry of one mode: component axis, transverse axes, orientation sign,
/// and angular frequency.
struct ModeFrame {
    f: usize,
    u: usize,
    v: usize,
    /// Parity of the (f, u, v) axis permutation: +1 for families 1 and 3,
    /// −1 for family 2. This keeps every mode an exact Maxwell solution.
    sigma: f64,
    kappa: f64,
    lambda: f64,
    d: f64,
    omega: f64,
}

impl Mode {
    fn frame(&self) -> ModeFrame {
        let f = (self.family - 1) as usize;
        let u = if f == 0 { 1 } else { 0 };
        let v = if f == 2 { 1 } else { 2 };
        let sigma = if f == 1 { -1.0 } else { 1.0 };
        let kappa = self.kappa as f64;
        let lambda = self.lambda as f64;
        let d = (kappa * kappa + lambda * lambda).sqrt();
        ModeFrame {
            f,
            u,
            v,
            sigma,
            kappa,
            lambda,
            d,
            omega: d * std::f64::consts::PI,
        }
    }
}

impl ManufacturedSolution {
    /// The three-family benchmark combination: all families with unit wave
    /// numbers and weights (γ, 2γ, 3γ), γ = 2/√14, so the initial field has
    /// unit L2 norm.
    pub fn u_a() -> Self {
        let gamma = 2.0 / 14.0_f64.sqrt();
        Self {
            modes: vec![
                Mode {
                    family: 1,
                    kappa: 1,
                    lambda: 1,
                    weight: gamma,
                },
                Mode {
                    family: 2,
                    kappa: 1,
                    lambda: 1,
                    weight: 2.0 * gamma,
                },
                Mode {
                    family: 3,
                    kappa: 1,
                    lambda: 1,
                    weight: 3.0 * gamma,
                },
            ],
        }
    }

    /// Single unit-weight mode.
    pub fn single(family: u8, kappa: i32, lambda: i32) -> Self {
        Self {
            modes: vec![Mode {
                family,
                kappa,
                lambda,
                weight: 1.0,
            }],
        }
    }

    /// No modes: error norms against this measure the raw field norms.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.modes {
            if !(1..=3).contains(&m.family) {
                return Err(Error::InvalidParameter(format!(
                    "mode family must be 1, 2, or 3, got {}",
                    m.family
                )));
            }
            if m.kappa == 0 || m.lambda == 0 {
                return Err(Error::InvalidParameter(
                    "mode wave numbers must be nonzero".into(),
                ));
            }
            if !m.weight.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mode weight must be finite, got {}",
                    m.weight
                )));
            }
        }
        Ok(())
    }

    /// Field values `[E1, E2, E3, H1, H2, H3]` at a point and time.
    pub fn eval(&self, x: [f64; 3], t: f64) -> [f64; 6] {
        let mut out = [0.0; 6];
        for m in &self.modes {
            let fr = m.frame();
            let (su, cu, sv, cv) = fr.trig(x);
            let (sin_t, cos_t) = (fr.omega * t).sin_cos();
            out[fr.f] += m.weight * su * sv * cos_t;
            out[3 + fr.u] += m.weight * (-fr.sigma) * (fr.lambda / fr.d) * su * cv * sin_t;
            out[3 + fr.v] += m.weight * fr.sigma * (fr.kappa / fr.d) * cu * sv * sin_t;
        }
        out
    }

    /// Time derivatives of all six components.
    pub fn time_deriv(&self, x: [f64; 3], t: f64) -> [f64; 6] {
        let mut out = [0.0; 6];
        for m in &self.modes {
            let fr = m.frame();
            let (su, cu, sv, cv) = fr.trig(x);
            let (sin_t, cos_t) = (fr.omega * t).sin_cos();
            out[fr.f] += m.weight * su * sv * (-fr.omega) * sin_t;
            out[3 + fr.u] +=
                m.weight * (-fr.sigma) * (fr.lambda / fr.d) * su * cv * fr.omega * cos_t;
            out[3 + fr.v] += m.weight * fr.sigma * (fr.kappa / fr.d) * cu * sv * fr.omega * cos_t;
        }
        out
    }

    /// Closed-form `∇×E` at a point and time.
    pub fn curl_e(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        let pi = std::f64::consts::PI;
        for m in &self.modes {
            let fr = m.frame();
            let (su, cu, sv, cv) = fr.trig(x);
            let cos_t = (fr.omega * t).cos();
            out[fr.u] += m.weight * fr.sigma * fr.lambda * pi * su * cv * cos_t;
            out[fr.v] -= m.weight * fr.sigma * fr.kappa * pi * cu * sv * cos_t;
        }
        out
    }

    /// Closed-form `∇×H` at a point and time.
    pub fn curl_h(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for m in &self.modes {
            let fr = m.frame();
            let (su, _, sv, _) = fr.trig(x);
            let sin_t = (fr.omega * t).sin();
            out[fr.f] += m.weight * (-fr.omega) * su * sv * sin_t;
        }
        out
    }
}

impl ModeFrame {
    fn trig(&self, x: [f64; 3]) -> (f64, f64, f64, f64) {
        let pi = std::f64::consts::PI;
        let (su, cu) = (self.kappa * pi * x[self.u]).sin_cos();
        let (sv, cv) = (self.lambda * pi * x[self.v]).sin_cos();
        (su, cu, sv, cv)
    }
}

/// Per-axis trigonometric tables for one mode on a fixed point grid, so
/// exact fields evaluate by lookup inside quadrature loops.
struct ModeTable {
    f: usize,
    u: usize,
    v: usize,
    sigma: f64,
    kappa: f64,
    lambda: f64,
    d: f64,
    omega: f64,
    weight: f64,
    sin_u: Vec<f64>,
    cos_u: Vec<f64>,
    sin_v: Vec<f64>,
    cos_v: Vec<f64>,
}

/// Exact-solution evaluator on a tensor grid of points.
struct ExactGrid {
    tables: Vec<ModeTable>,
}

impl ExactGrid {
    fn new(ms: &ManufacturedSolution, points: [&[f64]; 3]) -> Self {
        let pi = std::f64::consts::PI;
        let tables = ms
            .modes
            .iter()
            .map(|m| {
                let fr = m.frame();
                let trig = |axis: usize, k: f64| -> (Vec<f64>, Vec<f64>) {
                    points[axis]
                        .iter()
                        .map(|&x| (k * pi * x).sin_cos())
                        .unzip()
                };
                let (sin_u, cos_u) = trig(fr.u, fr.kappa);
                let (sin_v, cos_v) = trig(fr.v, fr.lambda);
                ModeTable {
                    f: fr.f,
                    u: fr.u,
                    v: fr.v,
                    sigma: fr.sigma,
                    kappa: fr.kappa,
                    lambda: fr.lambda,
                    d: fr.d,
                    omega: fr.omega,
                    weight: m.weight,
                    sin_u,
                    cos_u,
                    sin_v,
                    cos_v,
                }
            })
            .collect();
        Self { tables }
    }

    fn e_at(&self, idx: [usize; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for tb in &self.tables {
            let cos_t = (tb.omega * t).cos();
            out[tb.f] += tb.weight * tb.sin_u[idx[tb.u]] * tb.sin_v[idx[tb.v]] * cos_t;
        }
        out
    }

    fn h_at(&self, idx: [usize; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for tb in &self.tables {
            let sin_t = (tb.omega * t).sin();
            out[tb.u] +=
                tb.weight * (-tb.sigma) * (tb.lambda / tb.d) * tb.sin_u[idx[tb.u]]
                    * tb.cos_v[idx[tb.v]]
                    * sin_t;
            out[tb.v] += tb.weight * tb.sigma * (tb.kappa / tb.d)
                * tb.cos_u[idx[tb.u]]
                * tb.sin_v[idx[tb.v]]
                * sin_t;
        }
        out
    }

    fn curl_e_at(&self, idx: [usize; 3], t: f64) -> [f64; 3] {
        let pi = std::f64::consts::PI;
        let mut out = [0.0; 3];
        for tb in &self.tables {
            let cos_t = (tb.omega * t).cos();
            out[tb.u] += tb.weight * tb.sigma * tb.lambda * pi * tb.sin_u[idx[tb.u]]
                * tb.cos_v[idx[tb.v]]
                * cos_t;
            out[tb.v] -= tb.weight * tb.sigma * tb.kappa * pi * tb.cos_u[idx[tb.u]]
                * tb.sin_v[idx[tb.v]]
                * cos_t;
        }
        out
    }

    fn curl_h_at(&self, idx: [usize; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for tb in &self.tables {
            let sin_t = (tb.omega * t).sin();
            out[tb.f] +=
                tb.weight * (-tb.omega) * tb.sin_u[idx[tb.u]] * tb.sin_v[idx[tb.v]] * sin_t;
        }
        out
    }
}

/// One row of an error time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub step: usize,
    pub t: f64,
    pub l2_e: f64,
    pub l2_h: f64,
    pub hcurl_e: f64,
    pub hcurl_h: f64,
}

impl ErrorRow {
    /// `[l2_e, l2_h, hcurl_e, hcurl_h]`.
    pub fn quad(&self) -> [f64; 4] {
        [self.l2_e, self.l2_h, self.hcurl_e, self.hcurl_h]
    }
}

/// Error time series over a run, one row per step (step 0 = initial data).
#[derive(Debug, Clone, Default)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// Elementwise maxima over all steps: `[l2_e, l2_h, hcurl_e, hcurl_h]`.
    pub fn max_errors(&self) -> [f64; 4] {
        let mut out = [0.0_f64; 4];
        for row in &self.rows {
            for (o, v) in out.iter_mut().zip(row.quad()) {
                *o = (*o).max(v);
            }
        }
        out
    }

    /// Errors of the last recorded step.
    pub fn final_errors(&self) -> [f64; 4] {
        self.rows.last().map(|r| r.quad()).unwrap_or([0.0; 4])
    }
}

/// Measures L2 and H-curl errors of a state against the exact solution by
/// Gauss quadrature on the operators' rule. H-curl uses the exact curl on
/// the reference side and the spline derivative on the discrete side.
pub fn error_norms(
    ops: &Operators,
    state: &EMState,
    ms: &ManufacturedSolution,
    step: usize,
) -> ErrorRow {
    let t = state.time;
    let rules = [
        ops.rule(Axis::X),
        ops.rule(Axis::Y),
        ops.rule(Axis::Z),
    ];
    let points: [&[f64]; 3] = [&rules[0].points, &rules[1].points, &rules[2].points];
    let exact = ExactGrid::new(ms, points);
    let weights = [&rules[0].weights, &rules[1].weights, &rules[2].weights];

    // Accumulates Σ w · (value_grid − exact_component)² over the grid.
    let sq_err = |grids: &[&Tensor3], exact_fn: &dyn Fn([usize; 3], f64) -> [f64; 3]| -> f64 {
        let dims = grids[0].dims();
        let mut acc = 0.0;
        for i in 0..dims[0] {
            let wx = weights[0][i];
            for j in 0..dims[1] {
                let wxy = wx * weights[1][j];
                for k in 0..dims[2] {
                    let w = wxy * weights[2][k];
                    let ex = exact_fn([i, j, k], t);
                    for (c, g) in grids.iter().enumerate() {
                        let d = g.get(i, j, k) - ex[c];
                        acc += w * d * d;
                    }
                }
            }
        }
        acc
    };

    // Discrete curl grids: (∇×f)_c = ∂_u f_v − ∂_v f_u, (c,u,v) cyclic.
    let curl_grid = |f: &[Tensor3; 3], c: usize| -> Tensor3 {
        let u = (c + 1) % 3;
        let v = (c + 2) % 3;
        let mut g = ops.eval_on_quadrature(&f[v], Some(Axis::ALL[u]));
        g.add_scaled(&ops.eval_on_quadrature(&f[u], Some(Axis::ALL[v])), -1.0);
        g
    };

    let group = |f: &[Tensor3; 3], exact_val: &dyn Fn([usize; 3], f64) -> [f64; 3], exact_curl: &dyn Fn([usize; 3], f64) -> [f64; 3]| -> (f64, f64) {
        let vals = [
            ops.eval_on_quadrature(&f[0], None),
            ops.eval_on_quadrature(&f[1], None),
            ops.eval_on_quadrature(&f[2], None),
        ];
        let l2_sq = sq_err(&[&vals[0], &vals[1], &vals[2]], exact_val);
        drop(vals);
        let curls = [curl_grid(f, 0), curl_grid(f, 1), curl_grid(f, 2)];
        let curl_sq = sq_err(&[&curls[0], &curls[1], &curls[2]], exact_curl);
        (l2_sq, curl_sq)
    };

    let ((e_l2_sq, e_curl_sq), (h_l2_sq, h_curl_sq)) = rayon::join(
        || {
            group(
                &state.e,
                &|idx, t| exact.e_at(idx, t),
                &|idx, t| exact.curl_e_at(idx, t),
            )
        },
        || {
            group(
                &state.h,
                &|idx, t| exact.h_at(idx, t),
                &|idx, t| exact.curl_h_at(idx, t),
            )
        },
    );

    ErrorRow {
        step,
        t,
        l2_e: e_l2_sq.sqrt(),
        l2_h: h_l2_sq.sqrt(),
        hcurl_e: (e_l2_sq + e_curl_sq).sqrt(),
        hcurl_h: (h_l2_sq + h_curl_sq).sqrt(),
    }
}

/// L2 norms of the divergence of each discrete field group, `(‖∇·E‖, ‖∇·H‖)`.
/// The scheme does not enforce the divergence constraints; this is the
/// monitoring diagnostic.
pub fn div_norms(ops: &Operators, state: &EMState) -> (f64, f64) {
    let rules = [ops.rule(Axis::X), ops.rule(Axis::Y), ops.rule(Axis::Z)];
    let weights = [&rules[0].weights, &rules[1].weights, &rules[2].weights];
    let div_sq = |f: &[Tensor3; 3]| -> f64 {
        let mut g = ops.eval_on_quadrature(&f[0], Some(Axis::X));
        g.add_scaled(&ops.eval_on_quadrature(&f[1], Some(Axis::Y)), 1.0);
        g.add_scaled(&ops.eval_on_quadrature(&f[2], Some(Axis::Z)), 1.0);
        let dims = g.dims();
        let mut acc = 0.0;
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                let wxy = weights[0][i] * weights[1][j];
                for k in 0..dims[2] {
                    let v = g.get(i, j, k);
                    acc += wxy * weights[2][k] * v * v;
                }
            }
        }
        acc
    };
    (div_sq(&state.e).sqrt(), div_sq(&state.h).sqrt())
}

/// Exact L2 norm of the six-component manufactured field at time `t`,
/// integrated with `q` Gauss points per element of the given spaces.
pub fn exact_l2_norm(
    ms: &ManufacturedSolution,
    spaces: &[KnotVector; 3],
    q: usize,
    t: f64,
) -> Result<f64> {
    let rules = [
        gauss_rule(q, &spaces[0])?,
        gauss_rule(q, &spaces[1])?,
        gauss_rule(q, &spaces[2])?,
    ];
    let exact = ExactGrid::new(
        ms,
        [&rules[0].points, &rules[1].points, &rules[2].points],
    );
    let mut acc = 0.0;
    for i in 0..rules[0].points.len() {
        for j in 0..rules[1].points.len() {
            let wxy = rules[0].weights[i] * rules[1].weights[j];
            for k in 0..rules[2].points.len() {
                let w = wxy * rules[2].weights[k];
                let e = exact.e_at([i, j, k], t);
                let h = exact.h_at([i, j, k], t);
                acc += w * (e.iter().chain(&h).map(|v| v * v).sum::<f64>());
            }
        }
    }
    Ok(acc.sqrt())
}

/// Runs a full simulation from the manufactured initial condition, recording
/// an error row at step 0 and after every step.
pub fn run_with_errors(
    cfg: &SchemeConfig,
    ms: &ManufacturedSolution,
) -> Result<(EMState, ErrorReport)> {
    ms.validate()?;
    let ops = assemble_operators(cfg)?;
    let mut state = ops.project_state(|x, y, z| ms.eval([x, y, z], 0.0), 0.0)?;
    let mut rows = Vec::with_capacity(cfg.n_steps + 1);
    rows.push(error_norms(&ops, &state, ms, 0));
    for step in 1..=cfg.n_steps {
        ops.step(&mut state)?;
        rows.push(error_norms(&ops, &state, ms, step));
    }
    Ok((state, ErrorReport { rows }))
}

/// Largest total unknown count per component the dense reference accepts.
pub const DENSE_ORACLE_LIMIT: usize = 2000;

/// Brute-force reference for one full time step: assembles every block as an
/// explicit dense matrix (Kronecker products; per-fiber rows for variable
/// materials) and solves with dense LU. No directional sweeps are involved,
/// so agreement with [`Operators::step`] checks every sign, block, and the
/// sweep solver at once.
pub fn dense_oracle_step(cfg: &SchemeConfig, state: &EMState) -> Result<EMState> {
    cfg.validate()?;
    let dims = cfg.dims();
    let n_total = dims[0] * dims[1] * dims[2];
    if n_total > DENSE_ORACLE_LIMIT {
        return Err(Error::TooLargeForDense(format!(
            "{} unknowns per component exceeds the {} limit",
            n_total, DENSE_ORACLE_LIMIT
        )));
    }
    if state.dims() != dims {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} vs config dims {:?}",
            state.dims(),
            dims
        )));
    }

    // Dense 1D matrices.
    let mut m = Vec::new();
    let mut s = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for kv in &cfg.spaces {
        let rule = gauss_rule(cfg.quad_points, kv)?;
        m.push(assemble_1d(kv, MatrixKind::Mass, &rule)?.to_dense());
        s.push(assemble_1d(kv, MatrixKind::Stiffness, &rule)?.to_dense());
        a.push(assemble_1d(kv, MatrixKind::AdvectionTrialDeriv, &rule)?.to_dense());
        b.push(assemble_1d(kv, MatrixKind::AdvectionTestDeriv, &rule)?.to_dense());
    }

    let kron3 = |x: &DMatrix<f64>, y: &DMatrix<f64>, z: &DMatrix<f64>| x.kronecker(&y.kronecker(z));
    let mass3 = kron3(&m[0], &m[1], &m[2]);

    // Weak-derivative blocks D_axis = mass everywhere except the advection
    // (trial-derivative) matrix on one axis.
    let dx = kron3(&a[0], &m[1], &m[2]);
    let dy = kron3(&m[0], &a[1], &m[2]);
    let dz = kron3(&m[0], &m[1], &a[2]);

    // Curl split rows, frozen:
    //   C1: row1 = Dy E3, row2 = Dz E1, row3 = Dx E2
    //   C2: row1 = Dz E2, row2 = Dx E3, row3 = Dy E1
    let c1_row = |f: &[DVector<f64>; 3], c: usize| -> DVector<f64> {
        match c {
            0 => &dy * &f[2],
            1 => &dz * &f[0],
            _ => &dx * &f[1],
        }
    };
    let c2_row = |f: &[DVector<f64>; 3], c: usize| -> DVector<f64> {
        match c {
            0 => &dz * &f[1],
            1 => &dx * &f[2],
            _ => &dy * &f[0],
        }
    };

    // Mixed-derivative blocks, frozen:
    //   stage one:  row1 = (Ax⊗By⊗Mz) E2, row2 = (Mx⊗Ay⊗Bz) E3,
    //               row3 = (Bx⊗My⊗Az) E1
    //   stage two:  row1 = (Ax⊗My⊗Bz) E3, row2 = (Bx⊗Ay⊗Mz) E1,
    //               row3 = (Mx⊗By⊗Az) E2
    let r_row = |f: &[DVector<f64>; 3], substep: Substep, c: usize| -> DVector<f64> {
        match (substep, c) {
            (Substep::First, 0) => kron3(&a[0], &b[1], &m[2]) * &f[1],
            (Substep::First, 1) => kron3(&m[0], &a[1], &b[2]) * &f[2],
            (Substep::First, _) => kron3(&b[0], &m[1], &a[2]) * &f[0],
            (Substep::Second, 0) => kron3(&a[0], &m[1], &b[2]) * &f[2],
            (Substep::Second, 1) => kron3(&b[0], &a[1], &m[2]) * &f[0],
            (Substep::Second, _) => kron3(&m[0], &b[1], &a[2]) * &f[1],
        }
    };

    // Per-row material scalings on the flattened (r,s,t) index.
    let tau = cfg.tau;
    let scale_vec = |f: &dyn Fn(f64, f64, f64) -> f64| -> DVector<f64> {
        let mut out = DVector::zeros(n_total);
        let mut idx = 0;
        for r in 0..dims[0] {
            for sidx in 0..dims[1] {
                for t in 0..dims[2] {
                    let (eps, mu) = match &cfg.material {
                        Material::Scalar { epsilon, mu } => (*epsilon, *mu),
                        Material::Field(field) => {
                            (field.epsilon.get(r, sidx, t), field.mu.get(r, sidx, t))
                        }
                    };
                    out[idx] = f(eps, mu, tau);
                    idx += 1;
                }
            }
        }
        out
    };
    let alpha = scale_vec(&|eps, _, tau| tau / (2.0 * eps));
    let beta = scale_vec(&|eps, mu, tau| tau * tau / (4.0 * eps * mu));
    let nu = scale_vec(&|_, mu, tau| tau / (2.0 * mu));
    let beta_tensor = Tensor3::from_fn(dims, |r, sx, t| {
        beta[(r * dims[1] + sx) * dims[2] + t]
    });

    let eliminate = cfg.boundary == BoundaryMode::EliminateTangential;
    // Flattened indices whose coordinate along `axis` is a boundary index.
    let boundary_rows = |axis: usize| -> Vec<usize> {
        let mut rows = Vec::new();
        for r in 0..dims[0] {
            for sx in 0..dims[1] {
                for t in 0..dims[2] {
                    let coord = [r, sx, t][axis];
                    if coord == 0 || coord == dims[axis] - 1 {
                        rows.push((r * dims[1] + sx) * dims[2] + t);
                    }
                }
            }
        }
        rows
    };

    // One sweep factor as a dense matrix: rows couple only along `axis`;
    // the stiffened factor's row coefficient is looked up at the row's full
    // tensor index, exactly mirroring the per-fiber systems.
    let sweep_factor = |axis: usize, stiffen: bool, decouple: bool| -> DMatrix<f64> {
        let mut g = DMatrix::zeros(n_total, n_total);
        let n_ax = dims[axis];
        for r in 0..dims[0] {
            for sx in 0..dims[1] {
                for t in 0..dims[2] {
                    let row = (r * dims[1] + sx) * dims[2] + t;
                    let row_ax = [r, sx, t][axis];
                    for col_ax in 0..n_ax {
                        let mut coord = [r, sx, t];
                        coord[axis] = col_ax;
                        let col = (coord[0] * dims[1] + coord[1]) * dims[2] + coord[2];
                        let ends = |i: usize| i == 0 || i == n_ax - 1;
                        let val = if decouple && (ends(row_ax) || ends(col_ax)) {
                            if row == col {
                                1.0
                            } else {
                                0.0
                            }
                        } else if stiffen {
                            m[axis][(row_ax, col_ax)]
                                + beta_tensor.get(r, sx, t) * s[axis][(row_ax, col_ax)]
                        } else {
                            m[axis][(row_ax, col_ax)]
                        };
                        if val != 0.0 {
                            g[(row, col)] = val;
                        }
                    }
                }
            }
        }
        g
    };

    // LHS for one stage and component. The constant natural-boundary path
    // uses the assembled Kronecker sum (which the sweeps factor exactly);
    // otherwise the composition of the three sweep factors is formed.
    let lhs = |substep: Substep, c: usize| -> DMatrix<f64> {
        let w = stiffened_axis(substep, c).idx();
        let scalar_natural = matches!(cfg.material, Material::Scalar { .. }) && !eliminate;
        if scalar_natural {
            let beta_val = match &cfg.material {
                Material::Scalar { epsilon, mu } => tau * tau / (4.0 * epsilon * mu),
                Material::Field(_) => unreachable!(),
            };
            let factors = [
                if w == 0 { &s[0] } else { &m[0] },
                if w == 1 { &s[1] } else { &m[1] },
                if w == 2 { &s[2] } else { &m[2] },
            ];
            &mass3 + kron3(factors[0], factors[1], factors[2]) * beta_val
        } else {
            let mut g = DMatrix::<f64>::identity(n_total, n_total);
            for axis in 0..3 {
                let decouple = eliminate && axis != c;
                g = g * sweep_factor(axis, axis == w, decouple);
            }
            g
        }
    };

    let flat = |t: &Tensor3| DVector::from_column_slice(t.data());
    let unflat = |v: &DVector<f64>| {
        let mut t = Tensor3::zeros(dims);
        t.data_mut().copy_from_slice(v.as_slice());
        t
    };

    let e0: [DVector<f64>; 3] = [flat(&state.e[0]), flat(&state.e[1]), flat(&state.e[2])];
    let mut h: [DVector<f64>; 3] = [flat(&state.h[0]), flat(&state.h[1]), flat(&state.h[2])];

    let solve_stage = |e_in: &[DVector<f64>; 3],
                       h_in: &[DVector<f64>; 3],
                       substep: Substep|
     -> Result<[DVector<f64>; 3]> {
        let mut out = Vec::with_capacity(3);
        for c in 0..3 {
            let curl = c1_row(h_in, c) - c2_row(h_in, c);
            let mut rhs =
                &mass3 * &e_in[c] + curl.component_mul(&alpha) + r_row(e_in, substep, c).component_mul(&beta);
            if eliminate {
                for axis in 0..3 {
                    if axis != c {
                        for row in boundary_rows(axis) {
                            rhs[row] = 0.0;
                        }
                    }
                }
            }
            let sol = lhs(substep, c)
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Singular {
                    context: format!("dense reference stage {:?} component {}", substep, c),
                    row: 0,
                })?;
            out.push(sol);
        }
        Ok(out.try_into().map_err(|_| ()).expect("three components"))
    };

    let mass_lu = mass3.clone().lu();
    let update_h = |h: &mut [DVector<f64>; 3],
                    e_c1: &[DVector<f64>; 3],
                    e_c2: &[DVector<f64>; 3]|
     -> Result<()> {
        for c in 0..3 {
            let delta = (c2_row(e_c2, c) - c1_row(e_c1, c)).component_mul(&nu);
            let sol = mass_lu.solve(&delta).ok_or_else(|| Error::Singular {
                context: format!("dense reference magnetic update component {}", c),
                row: 0,
            })?;
            h[c] += sol;
        }
        Ok(())
    };

    let e_half = solve_stage(&e0, &h, Substep::First)?;
    update_h(&mut h, &e0, &e_half)?;
    let e_new = solve_stage(&e_half, &h, Substep::Second)?;
    update_h(&mut h, &e_new, &e_half)?;

    Ok(EMState {
        e: [unflat(&e_new[0]), unflat(&e_new[1]), unflat(&e_new[2])],
        h: [unflat(&h[0]), unflat(&h[1]), unflat(&h[2])],
        time: state.time + tau,
    })
}

/// One row of a temporal convergence table.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub n_steps: usize,
    /// Errors at the final time: `[l2_e, l2_h, hcurl_e, hcurl_h]`.
    pub at_final: [f64; 4],
    /// Maxima over all steps, same order.
    pub max: [f64; 4],
}

/// Temporal convergence study result.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slopes of the at-final errors versus τ, `[l2_e, l2_h,
    /// hcurl_e, hcurl_h]`; `None` with fewer than two rows.
    pub slopes: Option<[f64; 4]>,
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the full simulation once per time step size and fits the temporal
/// order. Each τ must divide the base configuration's final time.
pub fn convergence_study(
    base: &SchemeConfig,
    ms: &ManufacturedSolution,
    taus: &[f64],
) -> Result<ConvergenceTable> {
    if taus.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence study needs at least one time step size".into(),
        ));
    }
    let t_final = base.final_time;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let steps_f = t_final / tau;
        let n_steps = steps_f.round() as usize;
        if n_steps == 0 || (steps_f - n_steps as f64).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "time step {} does not divide the final time {}",
                tau, t_final
            )));
        }
        let mut cfg = base.clone();
        cfg.tau = tau;
        cfg.n_steps = n_steps;
        cfg.final_time = t_final;
        let (_, report) = run_with_errors(&cfg, ms)?;
        rows.push(ConvergenceRow {
            tau,
            n_steps,
            at_final: report.final_errors(),
            max: report.max_errors(),
        });
    }
    let slopes = if rows.len() >= 2 {
        let lx: Vec<f64> = rows.iter().map(|r| r.tau.ln()).collect();
        let mut s = [0.0; 4];
        for (q, sq) in s.iter_mut().enumerate() {
            let ly: Vec<f64> = rows.iter().map(|r| r.at_final[q].max(1e-300).ln()).collect();
            *sq = least_squares_slope(&lx, &ly);
        }
        Some(s)
    } else {
        None
    };
    Ok(ConvergenceTable { rows, slopes })
}

/// One row of a cost-scaling study.
#[derive(Debug, Clone, Copy)]
pub struct ScalingRow {
    pub elements_per_axis: usize,
    pub unknowns_per_component: usize,
    pub seconds_per_step: f64,
}

/// Cost-scaling study result.
#[derive(Debug, Clone)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// `rows[i+1].seconds_per_step / rows[i].seconds_per_step`.
    pub ratios: Vec<f64>,
}

/// Measures seconds per time step across mesh sizes. Assembly and one
/// warm-up step are excluded; the per-step time is the best of `reps`
/// timed passes of `steps` steps each.
pub fn scaling_study(
    sizes: &[usize],
    degree: usize,
    continuity: usize,
    tau: f64,
    steps: usize,
    reps: usize,
    material: &dyn Fn([usize; 3], &[KnotVector; 3]) -> Result<Material>,
) -> Result<ScalingTable> {
    if sizes.is_empty() || steps == 0 || reps == 0 {
        return Err(Error::InvalidParameter(
            "scaling study needs sizes, steps >= 1, and reps >= 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &nel in sizes {
        let kv = KnotVector::open_uniform(nel, degree, continuity)?;
        let spaces = [kv.clone(), kv.clone(), kv];
        let dims = [
            spaces[0].n_basis(),
            spaces[1].n_basis(),
            spaces[2].n_basis(),
        ];
        let mat = material(dims, &spaces)?;
        let cfg = SchemeConfig::new(spaces, tau, steps, mat);
        let ops = assemble_operators(&cfg)?;
        let ms = ManufacturedSolution::u_a();
        let init = ops.project_state(|x, y, z| ms.eval([x, y, z], 0.0), 0.0)?;

        // Warm-up step outside timing.
        let mut state = init.clone();
        ops.step(&mut state)?;

        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let mut state = init.clone();
            let start = Instant::now();
            for _ in 0..steps {
                ops.step(&mut state)?;
            }
            let secs = start.elapsed().as_secs_f64() / steps as f64;
            std::hint::black_box(&state);
            best = best.min(secs);
        }
        rows.push(ScalingRow {
            elements_per_axis: nel,
            unknowns_per_component: dims[0] * dims[1] * dims[2],
            seconds_per_step: best,
        });
    }
    let ratios = rows
        .windows(2)
        .map(|w| w[1].seconds_per_step / w[0].seconds_per_step)
        .collect();
    Ok(ScalingTable { rows, ratios })
}
