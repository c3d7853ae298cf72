//! Helpers shared by the integration test targets: property checks that the
//! `properties` target runs one by one and the `acceptance` target re-runs as
//! a timed batch, plus small configuration builders.
#![allow(dead_code)]

use maxwell_adi::kron::{kron_apply, AxisOp, Tensor3};
use maxwell_adi::linalg1d::{assemble_1d, MatrixKind};
use maxwell_adi::maxwell::{BoundaryMode, Material, SchemeConfig};
use maxwell_adi::splines::{gauss_rule, KnotVector};
use maxwell_adi::verify::ManufacturedSolution;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three copies of one open uniform knot vector.
pub fn cube_spaces(n_elements: usize, degree: usize, continuity: usize) -> [KnotVector; 3] {
    let kv = KnotVector::open_uniform(n_elements, degree, continuity).unwrap();
    [kv.clone(), kv.clone(), kv]
}

/// Unit-cube scheme configuration with scalar vacuum materials.
pub fn scalar_config(
    n_elements: usize,
    degree: usize,
    continuity: usize,
    tau: f64,
    n_steps: usize,
) -> SchemeConfig {
    SchemeConfig::new(
        cube_spaces(n_elements, degree, continuity),
        tau,
        n_steps,
        Material::Scalar {
            epsilon: 1.0,
            mu: 1.0,
        },
    )
}

/// Same, with tangential electric boundary coefficients eliminated — the
/// setting under which the manufactured-solution benchmarks are defined.
pub fn eliminated_config(
    n_elements: usize,
    degree: usize,
    continuity: usize,
    tau: f64,
    n_steps: usize,
) -> SchemeConfig {
    let mut cfg = scalar_config(n_elements, degree, continuity, tau, n_steps);
    cfg.boundary = BoundaryMode::EliminateTangential;
    cfg
}

fn spaces_under_test() -> Vec<KnotVector> {
    let mut out = Vec::new();
    for (nel, p) in [(4usize, 1usize), (5, 2), (4, 3)] {
        out.push(KnotVector::open_uniform(nel, p, p - 1).unwrap());
    }
    // One reduced-continuity space to exercise repeated interior knots.
    out.push(KnotVector::open_uniform(4, 3, 1).unwrap());
    out
}

/// B-spline basis values at any point sum to one.
pub fn check_partition_of_unity() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for kv in spaces_under_test() {
        for _ in 0..50 {
            let x: f64 = rng.gen();
            let eval = kv.eval_basis(x).map_err(|e| e.to_string())?;
            let sum: f64 = eval.values.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(format!(
                    "partition of unity violated at x={x}: sum={sum} (degree {})",
                    kv.degree()
                ));
            }
            let dsum: f64 = eval.derivs.iter().sum();
            if dsum.abs() > 1e-9 {
                return Err(format!(
                    "derivative sums to {dsum} at x={x} (degree {})",
                    kv.degree()
                ));
            }
        }
    }
    Ok(())
}

/// Mass matrices are symmetric positive definite.
pub fn check_mass_spd() -> Result<(), String> {
    for kv in spaces_under_test() {
        let rule = gauss_rule(kv.degree() + 1, &kv).map_err(|e| e.to_string())?;
        let m = assemble_1d(&kv, MatrixKind::Mass, &rule)
            .map_err(|e| e.to_string())?
            .to_dense();
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-14 {
            return Err(format!("mass asymmetry {asym} (degree {})", kv.degree()));
        }
        if nalgebra::Cholesky::new(m).is_none() {
            return Err(format!(
                "mass matrix is not positive definite (degree {})",
                kv.degree()
            ));
        }
    }
    Ok(())
}

/// Stiffness matrices annihilate constants: S · 1 = 0.
pub fn check_stiffness_annihilates_constants() -> Result<(), String> {
    for kv in spaces_under_test() {
        let rule = gauss_rule(kv.degree() + 1, &kv).map_err(|e| e.to_string())?;
        let s = assemble_1d(&kv, MatrixKind::Stiffness, &rule)
            .map_err(|e| e.to_string())?
            .to_dense();
        let ones = nalgebra::DVector::from_element(s.ncols(), 1.0);
        let worst = (&s * ones).abs().max();
        if worst > 1e-12 {
            return Err(format!(
                "stiffness row sum {worst} exceeds 1e-12 (degree {})",
                kv.degree()
            ));
        }
    }
    Ok(())
}

/// The two advection assemblies are transposes of each other, and their sum
/// telescopes to the endpoint matrix with single ±1 corner entries.
pub fn check_advection_transpose_duality() -> Result<(), String> {
    for kv in spaces_under_test() {
        let rule = gauss_rule(kv.degree() + 1, &kv).map_err(|e| e.to_string())?;
        let a = assemble_1d(&kv, MatrixKind::AdvectionTrialDeriv, &rule)
            .map_err(|e| e.to_string())?
            .to_dense();
        let b = assemble_1d(&kv, MatrixKind::AdvectionTestDeriv, &rule)
            .map_err(|e| e.to_string())?
            .to_dense();
        let dual = (&b - a.transpose()).abs().max();
        if dual > 1e-13 {
            return Err(format!(
                "test-derivative assembly deviates from the transpose by {dual} (degree {})",
                kv.degree()
            ));
        }
        let n = a.ncols();
        let mut corners = DMatrix::zeros(n, n);
        corners[(0, 0)] = -1.0;
        corners[(n - 1, n - 1)] = 1.0;
        let telescoped = (&a + a.transpose() - corners).abs().max();
        if telescoped > 1e-12 {
            return Err(format!(
                "integration-by-parts identity violated by {telescoped} (degree {})",
                kv.degree()
            ));
        }
    }
    Ok(())
}

/// Axis-by-axis Kronecker application agrees with the explicit dense product.
pub fn check_kronecker_dense_equivalence() -> Result<(), String> {
    let kx = KnotVector::open_uniform(3, 2, 1).unwrap();
    let ky = KnotVector::open_uniform(4, 2, 1).unwrap();
    let kz = KnotVector::open_uniform(5, 2, 1).unwrap();
    let rules = [
        gauss_rule(3, &kx).unwrap(),
        gauss_rule(3, &ky).unwrap(),
        gauss_rule(3, &kz).unwrap(),
    ];
    let mx = assemble_1d(&kx, MatrixKind::Mass, &rules[0]).unwrap();
    let sy = assemble_1d(&ky, MatrixKind::Stiffness, &rules[1]).unwrap();
    let az = assemble_1d(&kz, MatrixKind::AdvectionTrialDeriv, &rules[2]).unwrap();
    let dims = [kx.n_basis(), ky.n_basis(), kz.n_basis()];

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let u = Tensor3::from_fn(dims, |_, _, _| rng.gen_range(-1.0..1.0));
    let flat = nalgebra::DVector::from_column_slice(u.data());

    let swept = kron_apply([AxisOp::Mat(&mx), AxisOp::Mat(&sy), AxisOp::Mat(&az)], &u)
        .map_err(|e| e.to_string())?;
    let dense = mx.to_dense().kronecker(&sy.to_dense().kronecker(&az.to_dense())) * &flat;
    let scale = dense.abs().max().max(1e-300);
    let worst = swept
        .data()
        .iter()
        .zip(dense.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 * scale {
        return Err(format!("full Kronecker apply off by {worst} (scale {scale})"));
    }

    // Identity factors skip axes without touching the layout.
    let partial = kron_apply([AxisOp::Identity, AxisOp::Mat(&sy), AxisOp::Identity], &u)
        .map_err(|e| e.to_string())?;
    let eye = |n: usize| DMatrix::<f64>::identity(n, n);
    let dense_partial = eye(dims[0]).kronecker(&sy.to_dense().kronecker(&eye(dims[2]))) * flat;
    let worst = partial
        .data()
        .iter()
        .zip(dense_partial.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 * scale {
        return Err(format!("partial Kronecker apply off by {worst}"));
    }
    Ok(())
}

/// The manufactured solutions satisfy both vacuum curl equations pointwise:
/// ∂E/∂t = ∇×H and ∂H/∂t = −∇×E.
pub fn check_manufactured_residual() -> Result<(), String> {
    let solutions = [
        ManufacturedSolution::u_a(),
        ManufacturedSolution::single(1, 2, 3),
        ManufacturedSolution::single(2, 1, 2),
        ManufacturedSolution::single(3, 2, 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for ms in &solutions {
        for _ in 0..200 {
            let x = [rng.gen::<f64>(), rng.gen(), rng.gen()];
            let t = rng.gen::<f64>();
            let dudt = ms.time_deriv(x, t);
            let curl_h = ms.curl_h(x, t);
            let curl_e = ms.curl_e(x, t);
            for c in 0..3 {
                let faraday = dudt[c] - curl_h[c];
                let ampere = dudt[3 + c] + curl_e[c];
                if faraday.abs() > 1e-10 || ampere.abs() > 1e-10 {
                    return Err(format!(
                        "curl-equation residual at x={x:?}, t={t}: component {c} \
                         electric {faraday:+e}, magnetic {ampere:+e}"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Tangential electric components of the benchmark combination vanish on all
/// six faces of the unit cube.
pub fn check_tangential_boundary_compliance() -> Result<(), String> {
    let ms = ManufacturedSolution::u_a();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..100 {
        let face_axis = rng.gen_range(0..3usize);
        let face_value = if rng.gen::<bool>() { 1.0 } else { 0.0 };
        let mut x = [rng.gen::<f64>(), rng.gen(), rng.gen()];
        x[face_axis] = face_value;
        let t = rng.gen::<f64>();
        let v = ms.eval(x, t);
        for c in 0..3 {
            if c == face_axis {
                continue;
            }
            if v[c].abs() > 1e-12 {
                return Err(format!(
                    "tangential E{} = {} on face x{}={face_value} at {x:?}, t={t}",
                    c + 1,
                    v[c],
                    face_axis + 1
                ));
            }
        }
    }
    Ok(())
}

/// All property checks in order, with their display names.
pub fn all_property_checks() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("partition of unity", check_partition_of_unity),
        ("mass SPD", check_mass_spd),
        (
            "stiffness annihilates constants",
            check_stiffness_annihilates_constants,
        ),
        (
            "advection transpose duality",
            check_advection_transpose_duality,
        ),
        (
            "Kronecker dense equivalence",
            check_kronecker_dense_equivalence,
        ),
        ("curl-equation residual", check_manufactured_residual),
        (
            "tangential boundary compliance",
            check_tangential_boundary_compliance,
        ),
    ]
}
