//! The alternating-direction time stepper for Maxwell's equations.
//!
//! One time step consists of two half-step stages. Each stage solves, for
//! every electric component, a system whose left-hand side is a Kronecker
//! product `M ⊗ M ⊗ M + c · (M ⊗ S ⊗ M)`-style operator with exactly one
//! stiffened axis — so the solve factors into three banded directional
//! sweeps of linear total cost. The magnetic field then updates through
//! plain mass solves. The curl is split as `C = C1 − C2`; stage one treats
//! the `C2` part of the electric update implicitly, stage two the `C1`
//! part, which is what stiffens a different axis per component per stage.
//!
//! Materials enter as per-test-function coefficients: every right-hand side
//! row is scaled by its test triple's `τ/(2ε̂)` or `τ²/(4ε̂μ̂)`, and the
//! stiffened axis' one-dimensional matrix gains a per-fiber row scaling of
//! its stiffness part (see [`crate::kron::SweepPlan::variable`]).

use rayon::prelude::*;

use crate::kron::{
    adi_solve_block, decouple_boundary, eval_along_axis, kron_apply, project_along_axis, Axis,
    AxisOp, SweepPlan, Tensor3,
};
use crate::linalg1d::{assemble_1d, BandedMatrix, MatrixKind};
use crate::materials::{CoefficientField, MIN_MATERIAL};
use crate::splines::{gauss_rule, AxisEval, KnotVector, QuadratureRule};
use crate::{Error, Result};

/// Coefficients of the six field components plus simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct EMState {
    pub e: [Tensor3; 3],
    pub h: [Tensor3; 3],
    pub time: f64,
}

impl EMState {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            e: [
                Tensor3::zeros(dims),
                Tensor3::zeros(dims),
                Tensor3::zeros(dims),
            ],
            h: [
                Tensor3::zeros(dims),
                Tensor3::zeros(dims),
                Tensor3::zeros(dims),
            ],
            time: 0.0,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.e[0].dims()
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .chain(&self.h)
            .all(|t| t.data().iter().all(|v| v.is_finite()))
    }
}

/// Material description: one (ε, μ) pair for the whole domain, or one per
/// test-function triple.
#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Scalar { epsilon: f64, mu: f64 },
    Field(CoefficientField),
}

/// Treatment of the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Impose nothing strongly; boundary terms of the weak form are dropped.
    #[default]
    Natural,
    /// Strong elimination of tangential electric boundary coefficients:
    /// for component c, the boundary rows along both axes other than c are
    /// pinned to zero in every solve.
    EliminateTangential,
}

/// The two stages of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substep {
    First,
    Second,
}

impl Substep {
    fn idx(self) -> usize {
        match self {
            Substep::First => 0,
            Substep::Second => 1,
        }
    }
}

/// Discretization parameters for one simulation.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub spaces: [KnotVector; 3],
    pub tau: f64,
    pub n_steps: usize,
    pub final_time: f64,
    pub material: Material,
    pub boundary: BoundaryMode,
    /// Gauss points per element for assembly and projection; at least p+1.
    pub quad_points: usize,
}

impl SchemeConfig {
    /// Config with `final_time = n_steps · tau`, natural boundaries, and the
    /// default quadrature order.
    pub fn new(spaces: [KnotVector; 3], tau: f64, n_steps: usize, material: Material) -> Self {
        let q = spaces.iter().map(|kv| kv.degree() + 1).max().unwrap();
        Self {
            spaces,
            tau,
            n_steps,
            final_time: tau * n_steps as f64,
            material,
            boundary: BoundaryMode::default(),
            quad_points: q,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.spaces[0].n_basis(),
            self.spaces[1].n_basis(),
            self.spaces[2].n_basis(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive and finite, got {}",
                self.tau
            )));
        }
        let t = self.n_steps as f64 * self.tau;
        if (t - self.final_time).abs() > 1e-12 * self.final_time.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "n_steps * tau = {} does not reach final_time {}",
                t, self.final_time
            )));
        }
        let p_max = self.spaces.iter().map(|kv| kv.degree()).max().unwrap();
        if self.quad_points < p_max + 1 || self.quad_points > 64 {
            return Err(Error::InvalidParameter(format!(
                "quadrature order {} outside [degree+1, 64] = [{}, 64]",
                self.quad_points,
                p_max + 1
            )));
        }
        match &self.material {
            Material::Scalar { epsilon, mu } => {
                if !(*epsilon >= MIN_MATERIAL) || !(*mu >= MIN_MATERIAL) {
                    return Err(Error::InvalidParameter(format!(
                        "material constants must be >= {MIN_MATERIAL}, got epsilon {} mu {}",
                        epsilon, mu
                    )));
                }
            }
            Material::Field(field) => {
                field.validate()?;
                if field.dims() != self.dims() {
                    return Err(Error::DimensionMismatch(format!(
                        "coefficient field dims {:?} vs space dims {:?}",
                        field.dims(),
                        self.dims()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-row scaling of an assembled right-hand-side term: uniform for scalar
/// materials, per-test-triple for coefficient fields.
#[derive(Debug, Clone)]
pub enum CoefScale {
    Scalar(f64),
    Field(Tensor3),
}

impl CoefScale {
    pub fn apply(&self, t: &mut Tensor3) {
        match self {
            CoefScale::Scalar(s) => t.scale(*s),
            CoefScale::Field(f) => t.mul_elementwise(f),
        }
    }

    /// The scaling as a dense tensor (for reference implementations).
    pub fn as_tensor(&self, dims: [usize; 3]) -> Tensor3 {
        match self {
            CoefScale::Scalar(s) => Tensor3::from_fn(dims, |_, _, _| *s),
            CoefScale::Field(f) => f.clone(),
        }
    }
}

/// Assembled matrices, factorized sweep plans, and material scalings for a
/// fixed [`SchemeConfig`]. Immutable after assembly; shareable across
/// threads.
pub struct Operators {
    spaces: [KnotVector; 3],
    dims: [usize; 3],
    tau: f64,
    boundary: BoundaryMode,
    mass: [BandedMatrix; 3],
    stiff: [BandedMatrix; 3],
    adv_trial: [BandedMatrix; 3],
    adv_test: [BandedMatrix; 3],
    rules: [QuadratureRule; 3],
    quad_eval: [AxisEval; 3],
    mass_plans: [SweepPlan; 3],
    /// Solve plans indexed `substep*3 + component`, each a full x,y,z triple
    /// with exactly one stiffened axis.
    stiffened: Vec<[SweepPlan; 3]>,
    alpha: CoefScale,
    beta: CoefScale,
    nu: CoefScale,
}

/// Stiffened axis for a stage and electric component: stage one stiffens
/// the cyclically next axis (E1→y, E2→z, E3→x), stage two the one after
/// (E1→z, E2→x, E3→y).
pub fn stiffened_axis(substep: Substep, component: usize) -> Axis {
    let offset = match substep {
        Substep::First => 1,
        Substep::Second => 2,
    };
    Axis::ALL[(component + offset) % 3]
}

/// Assembles all 1D matrices, factorizes every sweep, and bakes the material
/// scalings for the run.
pub fn assemble_operators(cfg: &SchemeConfig) -> Result<Operators> {
    cfg.validate()?;
    let dims = cfg.dims();
    let tau = cfg.tau;

    let mut mass = Vec::with_capacity(3);
    let mut stiff = Vec::with_capacity(3);
    let mut adv_trial = Vec::with_capacity(3);
    let mut adv_test = Vec::with_capacity(3);
    let mut rules = Vec::with_capacity(3);
    let mut quad_eval = Vec::with_capacity(3);
    for kv in &cfg.spaces {
        let rule = gauss_rule(cfg.quad_points, kv)?;
        mass.push(assemble_1d(kv, MatrixKind::Mass, &rule)?);
        stiff.push(assemble_1d(kv, MatrixKind::Stiffness, &rule)?);
        adv_trial.push(assemble_1d(kv, MatrixKind::AdvectionTrialDeriv, &rule)?);
        adv_test.push(assemble_1d(kv, MatrixKind::AdvectionTestDeriv, &rule)?);
        quad_eval.push(AxisEval::new(kv, &rule.points)?);
        rules.push(rule);
    }
    let into3 = |v: Vec<BandedMatrix>| -> [BandedMatrix; 3] {
        v.try_into().map_err(|_| ()).expect("three axes")
    };
    let mass = into3(mass);
    let stiff = into3(stiff);
    let adv_trial = into3(adv_trial);
    let adv_test = into3(adv_test);
    let rules: [QuadratureRule; 3] = rules.try_into().map_err(|_| ()).expect("three axes");
    let quad_eval: [AxisEval; 3] = quad_eval.try_into().map_err(|_| ()).expect("three axes");

    // Material scalings per test triple: α = τ/(2ε̂), β = τ²/(4ε̂μ̂),
    // ν = τ/(2μ̂). β doubles as the stiffened-axis row coefficient.
    let (alpha, beta, nu, beta_tensor) = match &cfg.material {
        Material::Scalar { epsilon, mu } => {
            let b = tau * tau / (4.0 * epsilon * mu);
            (
                CoefScale::Scalar(tau / (2.0 * epsilon)),
                CoefScale::Scalar(b),
                CoefScale::Scalar(tau / (2.0 * mu)),
                Tensor3::from_fn(dims, |_, _, _| b),
            )
        }
        Material::Field(field) => {
            let eps = &field.epsilon;
            let mu = &field.mu;
            let alpha = Tensor3::from_fn(dims, |r, s, t| tau / (2.0 * eps.get(r, s, t)));
            let beta = Tensor3::from_fn(dims, |r, s, t| {
                tau * tau / (4.0 * eps.get(r, s, t) * mu.get(r, s, t))
            });
            let nu = Tensor3::from_fn(dims, |r, s, t| tau / (2.0 * mu.get(r, s, t)));
            (
                CoefScale::Field(alpha),
                CoefScale::Field(beta.clone()),
                CoefScale::Field(nu),
                beta,
            )
        }
    };

    let mass_plans: [SweepPlan; 3] = [
        SweepPlan::constant(Axis::X, &mass[0])?,
        SweepPlan::constant(Axis::Y, &mass[1])?,
        SweepPlan::constant(Axis::Z, &mass[2])?,
    ];

    // Decoupled-end mass plans, built on demand once per axis.
    let eliminate = cfg.boundary == BoundaryMode::EliminateTangential;
    let mut pinned_mass: [Option<SweepPlan>; 3] = [None, None, None];
    let mut stiffened = Vec::with_capacity(6);
    for substep in [Substep::First, Substep::Second] {
        for c in 0..3 {
            let w = stiffened_axis(substep, c);
            let mut triple = Vec::with_capacity(3);
            for axis in Axis::ALL {
                let decouple = eliminate && axis.idx() != c;
                let plan = if axis == w {
                    SweepPlan::variable(axis, &mass[axis.idx()], &stiff[axis.idx()], &beta_tensor, decouple)?
                } else if decouple {
                    match &pinned_mass[axis.idx()] {
                        Some(p) => p.clone(),
                        None => {
                            let mut m = mass[axis.idx()].clone();
                            decouple_boundary(&mut m);
                            let p = SweepPlan::constant(axis, &m)?;
                            pinned_mass[axis.idx()] = Some(p.clone());
                            p
                        }
                    }
                } else {
                    mass_plans[axis.idx()].clone()
                };
                triple.push(plan);
            }
            let triple: [SweepPlan; 3] = triple.try_into().map_err(|_| ()).expect("three axes");
            stiffened.push(triple);
        }
    }

    Ok(Operators {
        spaces: cfg.spaces.clone(),
        dims,
        tau,
        boundary: cfg.boundary,
        mass,
        stiff,
        adv_trial,
        adv_test,
        rules,
        quad_eval,
        mass_plans,
        stiffened,
        alpha,
        beta,
        nu,
    })
}

impl Operators {
    pub fn spaces(&self) -> &[KnotVector; 3] {
        &self.spaces
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn mass_matrix(&self, axis: Axis) -> &BandedMatrix {
        &self.mass[axis.idx()]
    }

    pub fn stiffness_matrix(&self, axis: Axis) -> &BandedMatrix {
        &self.stiff[axis.idx()]
    }

    /// Weak derivative with the derivative on the trial side:
    /// entries ∫ B_i B_l'.
    pub fn advection_trial_matrix(&self, axis: Axis) -> &BandedMatrix {
        &self.adv_trial[axis.idx()]
    }

    /// Weak derivative with the derivative on the test side:
    /// entries ∫ B_i' B_l.
    pub fn advection_test_matrix(&self, axis: Axis) -> &BandedMatrix {
        &self.adv_test[axis.idx()]
    }

    pub fn rule(&self, axis: Axis) -> &QuadratureRule {
        &self.rules[axis.idx()]
    }

    /// Basis tabulation at the quadrature points of one axis.
    pub fn quadrature_eval(&self, axis: Axis) -> &AxisEval {
        &self.quad_eval[axis.idx()]
    }

    pub fn alpha(&self) -> &CoefScale {
        &self.alpha
    }

    pub fn beta(&self) -> &CoefScale {
        &self.beta
    }

    pub fn nu(&self) -> &CoefScale {
        &self.nu
    }

    fn plans(&self, substep: Substep, component: usize) -> &[SweepPlan; 3] {
        &self.stiffened[substep.idx() * 3 + component]
    }

    fn check_dims(&self, tensors: &[Tensor3; 3], what: &str) -> Result<()> {
        for t in tensors {
            if t.dims() != self.dims {
                return Err(Error::DimensionMismatch(format!(
                    "{}: tensor dims {:?} vs operator dims {:?}",
                    what,
                    t.dims(),
                    self.dims
                )));
            }
        }
        Ok(())
    }

    /// Galerkin weak derivative along one axis: mass on the other two axes,
    /// the trial-derivative matrix on `axis`.
    fn weak_deriv(&self, axis: Axis, field: &Tensor3) -> Result<Tensor3> {
        let mut ops = [
            AxisOp::Mat(&self.mass[0]),
            AxisOp::Mat(&self.mass[1]),
            AxisOp::Mat(&self.mass[2]),
        ];
        ops[axis.idx()] = AxisOp::Mat(&self.adv_trial[axis.idx()]);
        kron_apply(ops, field)
    }

    /// Row `c` of the full curl operator applied to a 3-field:
    /// `(C f)_c = D_u f_v − D_v f_u` with `(c, u, v)` cyclic.
    fn curl_row(&self, f: &[Tensor3; 3], c: usize) -> Result<Tensor3> {
        let u = (c + 1) % 3;
        let v = (c + 2) % 3;
        let mut out = self.weak_deriv(Axis::ALL[u], &f[v])?;
        let neg = self.weak_deriv(Axis::ALL[v], &f[u])?;
        out.add_scaled(&neg, -1.0);
        Ok(out)
    }

    /// Row `c` of the split-curl part `C1`: `(C1 f)_c = D_u f_v`.
    fn curl_part1_row(&self, f: &[Tensor3; 3], c: usize) -> Result<Tensor3> {
        let u = (c + 1) % 3;
        let v = (c + 2) % 3;
        self.weak_deriv(Axis::ALL[u], &f[v])
    }

    /// Row `c` of the split-curl part `C2`: `(C2 f)_c = D_v f_u`.
    fn curl_part2_row(&self, f: &[Tensor3; 3], c: usize) -> Result<Tensor3> {
        let u = (c + 1) % 3;
        let v = (c + 2) % 3;
        self.weak_deriv(Axis::ALL[v], &f[u])
    }

    /// Mixed-derivative coupling term of one stage's electric update: the
    /// trial derivative on the component's own axis, the test derivative on
    /// the stage's stiffened axis `w`, mass on the remaining axis, applied
    /// to the electric component of axis `w`.
    fn mixed_term(&self, e: &[Tensor3; 3], substep: Substep, c: usize) -> Result<Tensor3> {
        let w = stiffened_axis(substep, c);
        let other = Axis::ALL
            .into_iter()
            .find(|a| a.idx() != c && *a != w)
            .expect("three axes");
        let mut ops = [AxisOp::Identity; 3];
        ops[c] = AxisOp::Mat(&self.adv_trial[c]);
        ops[w.idx()] = AxisOp::Mat(&self.adv_test[w.idx()]);
        ops[other.idx()] = AxisOp::Mat(&self.mass[other.idx()]);
        kron_apply(ops, &e[w.idx()])
    }

    /// Mass-operator application `(M ⊗ M ⊗ M) f`.
    fn mass_apply(&self, f: &Tensor3) -> Result<Tensor3> {
        kron_apply(
            [
                AxisOp::Mat(&self.mass[0]),
                AxisOp::Mat(&self.mass[1]),
                AxisOp::Mat(&self.mass[2]),
            ],
            f,
        )
    }

    fn e_rhs(&self, e: &[Tensor3; 3], h: &[Tensor3; 3], substep: Substep, c: usize) -> Result<Tensor3> {
        let mut rhs = self.mass_apply(&e[c])?;
        let mut curl = self.curl_row(h, c)?;
        self.alpha.apply(&mut curl);
        rhs.add_scaled(&curl, 1.0);
        let mut mixed = self.mixed_term(e, substep, c)?;
        self.beta.apply(&mut mixed);
        rhs.add_scaled(&mixed, 1.0);
        Ok(rhs)
    }

    /// Right-hand sides of the first stage's three electric solves:
    /// `M Eⁿ + α∘(C Hⁿ) + β∘(R₁ Eⁿ)` per component.
    pub fn rhs_substep1(&self, e: &[Tensor3; 3], h: &[Tensor3; 3]) -> Result<[Tensor3; 3]> {
        self.rhs_substep(e, h, Substep::First)
    }

    /// Right-hand sides of the second stage, evaluated at the half-step
    /// state: `M E^{n+1/2} + α∘(C H^{n+1/2}) + β∘(R₂ E^{n+1/2})`.
    pub fn rhs_substep2(&self, e: &[Tensor3; 3], h: &[Tensor3; 3]) -> Result<[Tensor3; 3]> {
        self.rhs_substep(e, h, Substep::Second)
    }

    fn rhs_substep(
        &self,
        e: &[Tensor3; 3],
        h: &[Tensor3; 3],
        substep: Substep,
    ) -> Result<[Tensor3; 3]> {
        self.check_dims(e, "rhs electric field")?;
        self.check_dims(h, "rhs magnetic field")?;
        let mut out: Vec<Tensor3> = (0..3)
            .into_par_iter()
            .map(|c| self.e_rhs(e, h, substep, c))
            .collect::<Result<_>>()?;
        if self.boundary == BoundaryMode::EliminateTangential {
            for (c, rhs) in out.iter_mut().enumerate() {
                for axis in Axis::ALL {
                    if axis.idx() != c {
                        zero_boundary_fibers(rhs, axis);
                    }
                }
            }
        }
        Ok(out.try_into().map_err(|_| ()).expect("three components"))
    }

    /// Solves the stage's three stiffened systems, one per electric
    /// component, each by three directional sweeps.
    pub fn solve_e(&self, rhs: &[Tensor3; 3], substep: Substep) -> Result<[Tensor3; 3]> {
        self.check_dims(rhs, "electric solve")?;
        let out: Vec<Tensor3> = (0..3)
            .into_par_iter()
            .map(|c| adi_solve_block(self.plans(substep, c), &rhs[c]))
            .collect::<Result<_>>()?;
        Ok(out.try_into().map_err(|_| ()).expect("three components"))
    }

    /// In-place magnetic update `H += M⁻¹ [ν ∘ (C₂ e_c2 − C₁ e_c1)]`.
    ///
    /// Stage one passes `e_c1 = Eⁿ, e_c2 = E^{n+1/2}`; stage two passes
    /// `e_c1 = E^{n+1}, e_c2 = E^{n+1/2}` — the half-step field always rides
    /// on `C₂`, and the update vanishes identically when both fields are
    /// zero.
    pub fn update_h(
        &self,
        h: &mut [Tensor3; 3],
        e_c1: &[Tensor3; 3],
        e_c2: &[Tensor3; 3],
    ) -> Result<()> {
        self.check_dims(h, "magnetic update")?;
        self.check_dims(e_c1, "magnetic update (C1 field)")?;
        self.check_dims(e_c2, "magnetic update (C2 field)")?;
        let deltas: Vec<Tensor3> = (0..3)
            .into_par_iter()
            .map(|c| {
                let mut delta = self.curl_part2_row(e_c2, c)?;
                let minus = self.curl_part1_row(e_c1, c)?;
                delta.add_scaled(&minus, -1.0);
                self.nu.apply(&mut delta);
                adi_solve_block(&self.mass_plans, &delta)
            })
            .collect::<Result<_>>()?;
        for (hc, d) in h.iter_mut().zip(&deltas) {
            hc.add_scaled(d, 1.0);
        }
        Ok(())
    }

    /// Advances the state by one full time step (two stages).
    pub fn step(&self, state: &mut EMState) -> Result<()> {
        let rhs = self.rhs_substep1(&state.e, &state.h)?;
        let e_half = self.solve_e(&rhs, Substep::First)?;
        self.update_h(&mut state.h, &state.e, &e_half)?;

        let rhs = self.rhs_substep2(&e_half, &state.h)?;
        let e_new = self.solve_e(&rhs, Substep::Second)?;
        self.update_h(&mut state.h, &e_new, &e_half)?;

        state.e = e_new;
        state.time += self.tau;
        Ok(())
    }

    /// L2 projection of a scalar function onto the discrete space: load
    /// vector by Gauss quadrature, then a three-sweep mass solve.
    pub fn l2_project<F>(&self, f: F) -> Result<Tensor3>
    where
        F: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let values = self.sample_on_quadrature(|x, y, z| [f(x, y, z)]);
        let load = self.quadrature_to_load(&values[0]);
        adi_solve_block(&self.mass_plans, &load)
    }

    /// Projects a six-component field (E1,E2,E3,H1,H2,H3) at a fixed time
    /// into a fresh state. Under tangential elimination the electric
    /// boundary coefficients are zeroed after projection.
    pub fn project_state<F>(&self, f: F, time: f64) -> Result<EMState>
    where
        F: Fn(f64, f64, f64) -> [f64; 6] + Sync,
    {
        let values = self.sample_on_quadrature(f);
        let mut fields = Vec::with_capacity(6);
        for v in &values {
            let load = self.quadrature_to_load(v);
            fields.push(adi_solve_block(&self.mass_plans, &load)?);
        }
        let mut it = fields.into_iter();
        let mut e = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        let h = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        if self.boundary == BoundaryMode::EliminateTangential {
            self.enforce_tangential_boundary(&mut e);
        }
        Ok(EMState { e, h, time })
    }

    /// Zeroes each electric component's boundary coefficients along the two
    /// axes transverse to it.
    pub fn enforce_tangential_boundary(&self, e: &mut [Tensor3; 3]) {
        for (c, ec) in e.iter_mut().enumerate() {
            for axis in Axis::ALL {
                if axis.idx() != c {
                    zero_boundary_fibers(ec, axis);
                }
            }
        }
    }

    /// Samples an N-component function on the tensor quadrature grid with
    /// the quadrature weights folded in.
    fn sample_on_quadrature<const N: usize, F>(&self, f: F) -> [Tensor3; N]
    where
        F: Fn(f64, f64, f64) -> [f64; N] + Sync,
    {
        let (rx, ry, rz) = (&self.rules[0], &self.rules[1], &self.rules[2]);
        let qdims = [rx.points.len(), ry.points.len(), rz.points.len()];
        let mut out: Vec<Tensor3> = (0..N).map(|_| Tensor3::zeros(qdims)).collect();
        for (i, (&x, &wx)) in rx.points.iter().zip(&rx.weights).enumerate() {
            for (j, (&y, &wy)) in ry.points.iter().zip(&ry.weights).enumerate() {
                let wxy = wx * wy;
                for (k, (&z, &wz)) in rz.points.iter().zip(&rz.weights).enumerate() {
                    let vals = f(x, y, z);
                    let w = wxy * wz;
                    for (n, t) in out.iter_mut().enumerate() {
                        t.set(i, j, k, w * vals[n]);
                    }
                }
            }
        }
        out.try_into().map_err(|_| ()).expect("component count")
    }

    /// Contracts weighted quadrature samples against the basis to form the
    /// tensor-product load vector.
    fn quadrature_to_load(&self, weighted: &Tensor3) -> Tensor3 {
        let b = project_along_axis(weighted, Axis::X, &self.quad_eval[0], false);
        let b = project_along_axis(&b, Axis::Y, &self.quad_eval[1], false);
        project_along_axis(&b, Axis::Z, &self.quad_eval[2], false)
    }

    /// Evaluates a coefficient tensor on the quadrature grid; `derivative`
    /// optionally differentiates along one axis.
    pub fn eval_on_quadrature(&self, coeffs: &Tensor3, derivative: Option<Axis>) -> Tensor3 {
        let mut cur = coeffs.clone();
        for axis in Axis::ALL {
            let d = derivative == Some(axis);
            cur = eval_along_axis(&cur, axis, &self.quad_eval[axis.idx()], d);
        }
        cur
    }
}

/// Zeroes the first and last slice of a tensor along one axis.
pub fn zero_boundary_fibers(t: &mut Tensor3, axis: Axis) {
    let [nx, ny, nz] = t.dims();
    let n = t.dims()[axis.idx()];
    if n == 0 {
        return;
    }
    match axis {
        Axis::X => {
            for j in 0..ny {
                for k in 0..nz {
                    t.set(0, j, k, 0.0);
                    t.set(nx - 1, j, k, 0.0);
                }
            }
        }
        Axis::Y => {
            for i in 0..nx {
                for k in 0..nz {
                    t.set(i, 0, k, 0.0);
                    t.set(i, ny - 1, k, 0.0);
                }
            }
        }
        Axis::Z => {
            for i in 0..nx {
                for j in 0..ny {
                    t.set(i, j, 0, 0.0);
                    t.set(i, j, nz - 1, 0.0);
                }
            }
        }
    }
}
