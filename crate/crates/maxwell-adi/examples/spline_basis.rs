//! Tour of the 1D B-spline building blocks: open-uniform knot vectors with
//! chosen inter-element continuity, local basis evaluation, Greville
//! abscissae, and per-element Gauss quadrature.
//!
//! Run with `cargo run --example spline_basis`.

use maxwell_adi::splines::{gauss_rule, KnotVector};

fn main() -> maxwell_adi::Result<()> {
    // Quadratic splines on 8 elements of [0,1], C¹ across breakpoints.
    let kv = KnotVector::open_uniform(8, 2, 1)?;
    println!(
        "space: degree {}, {} elements, {} basis functions, domain {:?}",
        kv.degree(),
        kv.n_elements(),
        kv.n_basis(),
        kv.domain()
    );
    println!("knots: {:?}", kv.knots());
    println!("breakpoints: {:?}", kv.breakpoints());

    // At any point only degree+1 basis functions are nonzero; they sum to 1
    // and their derivatives sum to 0 (partition of unity).
    for &x in &[0.0, 0.31, 0.5, 0.77, 1.0] {
        let eval = kv.eval_basis(x)?;
        let sum: f64 = eval.values.iter().sum();
        let dsum: f64 = eval.derivs.iter().sum();
        println!(
            "x = {x:.2}: functions {}..{} values {:?} (Σ = {sum:.3}, Σ' = {dsum:+.1e})",
            eval.first,
            eval.first + eval.values.len() - 1,
            eval.values.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
        );
    }

    // Greville points: one collocation abscissa per basis function.
    let greville = kv.greville_points();
    println!("greville points ({}): {:?}", greville.len(), greville);

    // Reducing continuity to C⁰ repeats interior knots and enlarges the space.
    let c0 = KnotVector::open_uniform(8, 2, 0)?;
    println!(
        "same mesh at C⁰: {} basis functions (C¹ had {})",
        c0.n_basis(),
        kv.n_basis()
    );

    // Per-element Gauss rules drive all matrix assembly; 3 points integrate
    // products of quadratics exactly.
    let rule = gauss_rule(3, &kv)?;
    let mass: f64 = rule.weights.iter().sum();
    println!(
        "gauss rule: {} points ({} per element), Σ weights = {mass:.12} (measure of [0,1])",
        rule.n_points(),
        rule.points_per_element
    );
    Ok(())
}
