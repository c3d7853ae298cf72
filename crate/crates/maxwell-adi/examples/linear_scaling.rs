//! Cost-scaling measurement: seconds per time step across mesh sizes.
//! Every part of a step — right-hand-side Kronecker applications and the
//! three directional banded solves — visits each unknown a bounded number
//! of times, so doubling the per-axis resolution (8× the unknowns) should
//! cost about 8×.
//!
//! The sweep loops parallelize over fibers; set `MAXWELL_ADI_THREADS` to
//! pin the worker-pool size.
//!
//! Run with `cargo run --release --example linear_scaling`.

use maxwell_adi::maxwell::Material;
use maxwell_adi::splines::KnotVector;
use maxwell_adi::verify::scaling_study;

fn main() -> maxwell_adi::Result<()> {
    let constant = |_dims: [usize; 3], _spaces: &[KnotVector; 3]| {
        Ok(Material::Scalar {
            epsilon: 1.0,
            mu: 1.0,
        })
    };
    let table = scaling_study(&[8, 16, 32], 2, 1, 0.1, 2, 3, &constant)?;

    println!("quadratic C¹ spaces, constant coefficients, best of 3 timings:");
    println!("elements/axis  unknowns/component  seconds/step");
    for row in &table.rows {
        println!(
            "{:13} {:19} {:13.6}",
            row.elements_per_axis, row.unknowns_per_component, row.seconds_per_step
        );
    }
    for (pair, ratio) in table.rows.windows(2).zip(&table.ratios) {
        println!(
            "{:3}³ → {:3}³: {:.1}× the time for 8× the unknowns",
            pair[0].elements_per_axis, pair[1].elements_per_axis, ratio
        );
    }
    println!("(ratios near 8 ⇒ cost grows linearly with the unknown count)");
    Ok(())
}
