//! Density-volume ingestion in both supported formats: a raw byte volume
//! (one density per voxel) and a numbered stack of binary PGM slices.
//! Writes a small volume out in each format, reads both back, and checks
//! the round trips agree before mapping densities to material properties.
//!
//! Run with `cargo run --example voxel_ingest`.

use std::error::Error;

use maxwell_adi::materials::{
    load_pgm_stack, load_voxels, sample_coefficients, MaterialProps, MaterialTable, VoxelGrid,
    VoxelLayout,
};
use maxwell_adi::splines::KnotVector;

fn main() -> Result<(), Box<dyn Error>> {
    // A 12³ volume: dense ball (tissue) in air, with a hard shell.
    let n = 12usize;
    let mut grid = VoxelGrid::uniform([n; 3], 0)?;
    let bytes = {
        let mut raw = grid.to_bytes(VoxelLayout::XFastest);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let d = [x, y, z]
                        .iter()
                        .map(|&c| (c as f64 + 0.5) / n as f64 - 0.5)
                        .map(|c| c * c)
                        .sum::<f64>()
                        .sqrt();
                    let v = if d < 0.28 {
                        120
                    } else if d < 0.38 {
                        250
                    } else {
                        0
                    };
                    raw[(z * n + y) * n + x] = v;
                }
            }
        }
        raw
    };
    grid = VoxelGrid::from_bytes([n; 3], VoxelLayout::XFastest, &bytes)?;

    let dir = tempfile::tempdir()?;

    // --- Raw volume: plain bytes, layout given at load time. ---
    let raw_path = dir.path().join("ball.u8");
    std::fs::write(&raw_path, grid.to_bytes(VoxelLayout::ZFastest))?;
    let from_raw = load_voxels(&raw_path, [n; 3], VoxelLayout::ZFastest)?;
    println!(
        "raw round trip ({} bytes, z-fastest): {}",
        n * n * n,
        if from_raw == grid { "identical" } else { "MISMATCH" }
    );
    assert_eq!(from_raw, grid);

    // --- PGM stack: one binary (P5) image per z-slice, numbered from 0
    //     without padding to match the loader's `{i}` substitution. ---
    for (z, slice) in grid.to_pgm_slices().into_iter().enumerate() {
        std::fs::write(dir.path().join(format!("slice{z}.pgm")), slice)?;
    }
    let pattern = dir.path().join("slice{i}.pgm");
    let from_pgm = load_pgm_stack(&pattern.to_string_lossy())?;
    println!(
        "pgm stack round trip ({} slices): {}",
        n,
        if from_pgm == grid { "identical" } else { "MISMATCH" }
    );
    assert_eq!(from_pgm, grid);

    // --- Densities → material properties on a spline space. ---
    let spaces = [
        KnotVector::open_uniform(6, 2, 1)?,
        KnotVector::open_uniform(6, 2, 1)?,
        KnotVector::open_uniform(6, 2, 1)?,
    ];
    let table = MaterialTable {
        tissue: MaterialProps { epsilon: 2.2, mu: 1.1 },
        skull: MaterialProps { epsilon: 1.8, mu: 1.4 },
        ..MaterialTable::default()
    };
    let field = sample_coefficients(&grid, &spaces, &table)?;
    println!(
        "coefficients on {:?} basis grid: center ε = {} (tissue), corner ε = {} (air)",
        field.dims(),
        field.epsilon.get(4, 4, 4),
        field.epsilon.get(0, 0, 0)
    );
    Ok(())
}
