//! Exporting run artifacts: legacy-format VTK structured-points snapshots of
//! all six field components, the per-step error time series as CSV, and a
//! raw dump of the spline coefficients.
//!
//! Files land in `target/example-output/`.
//! Run with `cargo run --example snapshot_export`.

use std::error::Error;
use std::path::Path;

use maxwell_adi::maxwell::{BoundaryMode, Material, SchemeConfig};
use maxwell_adi::output::{write_coefficients, write_error_csv, FieldSnapshot};
use maxwell_adi::splines::KnotVector;
use maxwell_adi::verify::{run_with_errors, ManufacturedSolution};

fn main() -> Result<(), Box<dyn Error>> {
    let out = Path::new("target/example-output");
    std::fs::create_dir_all(out)?;

    let spaces = [
        KnotVector::open_uniform(8, 2, 1)?,
        KnotVector::open_uniform(8, 2, 1)?,
        KnotVector::open_uniform(8, 2, 1)?,
    ];
    let mut cfg = SchemeConfig::new(spaces.clone(), 0.05, 20, Material::Scalar {
        epsilon: 1.0,
        mu: 1.0,
    });
    cfg.boundary = BoundaryMode::EliminateTangential;

    // March to t = 1 while recording the error time series.
    let wave = ManufacturedSolution::u_a();
    let (state, report) = run_with_errors(&cfg, &wave)?;

    // CSV schema: step,t,l2_E,l2_H,hcurl_E,hcurl_H.
    let csv_path = out.join("errors.csv");
    write_error_csv(&report, &csv_path)?;
    let csv = std::fs::read_to_string(&csv_path)?;
    println!("wrote {} ({} rows):", csv_path.display(), csv.lines().count() - 1);
    for line in csv.lines().take(3) {
        println!("  {line}");
    }

    // Legacy VTK text: one structured-points dataset, six SCALARS sections
    // (E1..E3, H1..H3), x varying fastest — loads directly in ParaView.
    let snapshot = FieldSnapshot::sample(&spaces, &state, 32)?;
    let vtk_path = out.join("fields_t1.vtk");
    snapshot.write(&vtk_path)?;
    let vtk = std::fs::read_to_string(&vtk_path)?;
    println!("wrote {} ({} lines):", vtk_path.display(), vtk.lines().count());
    for line in vtk.lines().take(6) {
        println!("  {line}");
    }

    // Raw spline coefficients, one row per (field, i, j, k).
    let coeff_path = out.join("coefficients.csv");
    write_coefficients(&state, &coeff_path)?;
    println!(
        "wrote {} ({} rows)",
        coeff_path.display(),
        std::fs::read_to_string(&coeff_path)?.lines().count() - 1
    );
    Ok(())
}
