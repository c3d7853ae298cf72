//! Variable material coefficients from a synthetic layered-sphere phantom:
//! classify voxel densities into air / tissue / skull, sample per-basis-
//! function ε and μ fields at Greville points, and run the solver on the
//! heterogeneous medium.
//!
//! Run with `cargo run --example phantom_materials`.

use maxwell_adi::materials::{
    sample_coefficients, synthetic_phantom, MaterialClass, MaterialProps, MaterialTable,
    PhantomSpec,
};
use maxwell_adi::maxwell::{assemble_operators, BoundaryMode, Material, SchemeConfig};
use maxwell_adi::splines::KnotVector;
use maxwell_adi::verify::{error_norms, ManufacturedSolution};

fn main() -> maxwell_adi::Result<()> {
    // A sphere of tissue wrapped in a high-density shell, voxelized on a
    // 48³ grid over the unit cube.
    let spec = PhantomSpec {
        resolution: 48,
        center: [0.5, 0.5, 0.5],
        outer_radius: 0.42,
        skull_thickness: 0.08,
    };
    let grid = synthetic_phantom(&spec)?;

    let table = MaterialTable {
        tissue: MaterialProps { epsilon: 2.2, mu: 1.1 },
        skull: MaterialProps { epsilon: 1.8, mu: 1.4 },
        ..MaterialTable::default()
    };

    let dims = grid.dims();
    let mut counts = [0usize; 3];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                match table.classify(grid.density(x, y, z)) {
                    MaterialClass::Air => counts[0] += 1,
                    MaterialClass::Tissue => counts[1] += 1,
                    MaterialClass::Skull => counts[2] += 1,
                }
            }
        }
    }
    let total = (dims[0] * dims[1] * dims[2]) as f64;
    println!(
        "phantom voxels {dims:?}: air {:.1}%, tissue {:.1}%, skull {:.1}%",
        100.0 * counts[0] as f64 / total,
        100.0 * counts[1] as f64 / total,
        100.0 * counts[2] as f64 / total
    );

    // One (ε, μ) pair per spline basis function, read off at its Greville
    // point — the per-test-function coefficients of the implicit systems.
    let spaces = [
        KnotVector::open_uniform(8, 2, 1)?,
        KnotVector::open_uniform(8, 2, 1)?,
        KnotVector::open_uniform(8, 2, 1)?,
    ];
    let field = sample_coefficients(&grid, &spaces, &table)?;
    let eps_range = (
        field.epsilon.data().iter().cloned().fold(f64::INFINITY, f64::min),
        field.epsilon.data().iter().cloned().fold(0.0_f64, f64::max),
    );
    let mu_range = (
        field.mu.data().iter().cloned().fold(f64::INFINITY, f64::min),
        field.mu.data().iter().cloned().fold(0.0_f64, f64::max),
    );
    println!(
        "sampled coefficients on {:?} basis grid: ε ∈ [{:.1}, {:.1}], μ ∈ [{:.1}, {:.1}]",
        field.dims(),
        eps_range.0,
        eps_range.1,
        mu_range.0,
        mu_range.1
    );

    // The factorization cache collapses identical fibers, so the
    // heterogeneous step costs close to the constant-coefficient one.
    let mut cfg = SchemeConfig::new(spaces, 0.05, 10, Material::Field(field));
    cfg.boundary = BoundaryMode::EliminateTangential;
    let ops = assemble_operators(&cfg)?;
    let wave = ManufacturedSolution::u_a();
    let mut state = ops.project_state(|x, y, z| wave.eval([x, y, z], 0.0), 0.0)?;

    let zero = ManufacturedSolution::zero();
    let start = error_norms(&ops, &state, &zero, 0);
    for _ in 0..cfg.n_steps {
        ops.step(&mut state)?;
    }
    let end = error_norms(&ops, &state, &zero, cfg.n_steps);
    println!(
        "heterogeneous run over t ∈ [0, 0.5]: ‖E‖ {:.3} → {:.3}, ‖H‖ {:.3} → {:.3} (bounded)",
        start.l2_e, end.l2_e, start.l2_h, end.l2_h
    );
    assert!(state.is_finite());
    Ok(())
}
