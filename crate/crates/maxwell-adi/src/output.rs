//! Run outputs: field snapshots in the legacy structured-points text format,
//! error-history CSV, and raw coefficient dumps.

use std::io::Write;
use std::path::Path;

use crate::kron::{eval_along_axis, Axis, Tensor3};
use crate::maxwell::EMState;
use crate::splines::{AxisEval, KnotVector};
use crate::verify::ErrorReport;
use crate::{Error, Result};

/// Names of the six field components, in file order.
pub const FIELD_NAMES: [&str; 6] = ["E1", "E2", "E3", "H1", "H2", "H3"];

/// Six scalar fields sampled on a uniform point grid over the closed unit
/// cube.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    /// Points per axis (at least 2; the grid includes both cube faces).
    pub resolution: [usize; 3],
    pub time: f64,
    /// Sampled values in x-fastest order, one vector per component, ordered
    /// as [`FIELD_NAMES`].
    pub fields: [Vec<f64>; 6],
}

impl FieldSnapshot {
    /// Evaluates the spline fields of `state` on a uniform `resolution`³
    /// grid.
    pub fn sample(
        spaces: &[KnotVector; 3],
        state: &EMState,
        resolution: usize,
    ) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(
                "snapshot resolution must be at least 2".into(),
            ));
        }
        let points: Vec<f64> = (0..resolution)
            .map(|i| i as f64 / (resolution - 1) as f64)
            .collect();
        let evals = [
            AxisEval::new(&spaces[0], &points)?,
            AxisEval::new(&spaces[1], &points)?,
            AxisEval::new(&spaces[2], &points)?,
        ];
        let sample_one = |coeffs: &Tensor3| -> Result<Vec<f64>> {
            let gx = eval_along_axis(coeffs, Axis::X, &evals[0], false);
            let gy = eval_along_axis(&gx, Axis::Y, &evals[1], false);
            let g = eval_along_axis(&gy, Axis::Z, &evals[2], false);
            let mut out = Vec::with_capacity(resolution * resolution * resolution);
            for k in 0..resolution {
                for j in 0..resolution {
                    for i in 0..resolution {
                        let v = g.get(i, j, k);
                        if !v.is_finite() {
                            return Err(Error::Numerical(format!(
                                "non-finite field value at grid point ({i}, {j}, {k})"
                            )));
                        }
                        out.push(v);
                    }
                }
            }
            Ok(out)
        };
        let fields = [
            sample_one(&state.e[0])?,
            sample_one(&state.e[1])?,
            sample_one(&state.e[2])?,
            sample_one(&state.h[0])?,
            sample_one(&state.h[1])?,
            sample_one(&state.h[2])?,
        ];
        Ok(Self {
            resolution: [resolution; 3],
            time: state.time,
            fields,
        })
    }

    /// Writes the snapshot as a legacy structured-points ASCII file: declared
    /// dimensions, origin 0, uniform spacing, and six named scalar
    /// point-data arrays.
    pub fn write(&self, path: &Path) -> Result<()> {
        let [nx, ny, nz] = self.resolution;
        let n = nx * ny * nz;
        let spacing = [
            1.0 / (nx - 1) as f64,
            1.0 / (ny - 1) as f64,
            1.0 / (nz - 1) as f64,
        ];
        let mut text = String::new();
        text.push_str("# vtk DataFile Version 3.0\n");
        text.push_str(&format!("field snapshot at t={}\n", self.time));
        text.push_str("ASCII\n");
        text.push_str("DATASET STRUCTURED_POINTS\n");
        text.push_str(&format!("DIMENSIONS {nx} {ny} {nz}\n"));
        text.push_str("ORIGIN 0 0 0\n");
        text.push_str(&format!(
            "SPACING {} {} {}\n",
            spacing[0], spacing[1], spacing[2]
        ));
        text.push_str(&format!("POINT_DATA {n}\n"));
        for (name, values) in FIELD_NAMES.iter().zip(&self.fields) {
            text.push_str(&format!("SCALARS {name} double 1\n"));
            text.push_str("LOOKUP_TABLE default\n");
            for v in values {
                text.push_str(&format!("{v}\n"));
            }
        }
        write_text(path, &text)
    }
}

/// Writes the error history as CSV with the header
/// `step,t,l2_E,l2_H,hcurl_E,hcurl_H`, one row per recorded step, values at
/// full round-trip precision.
pub fn write_error_csv(report: &ErrorReport, path: &Path) -> Result<()> {
    let mut text = String::from("step,t,l2_E,l2_H,hcurl_E,hcurl_H\n");
    for row in &report.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.step, row.t, row.l2_e, row.l2_h, row.hcurl_e, row.hcurl_h
        ));
    }
    write_text(path, &text)
}

/// Dumps raw B-spline coefficients as CSV rows `field,i,j,k,value`.
pub fn write_coefficients(state: &EMState, path: &Path) -> Result<()> {
    let mut text = String::from("field,i,j,k,value\n");
    let groups: [&Tensor3; 6] = [
        &state.e[0],
        &state.e[1],
        &state.e[2],
        &state.h[0],
        &state.h[1],
        &state.h[2],
    ];
    for (name, t) in FIELD_NAMES.iter().zip(groups) {
        let [nx, ny, nz] = t.dims();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    text.push_str(&format!("{name},{i},{j},{k},{}\n", t.get(i, j, k)));
                }
            }
        }
    }
    write_text(path, &text)
}

/// Writes a text file, mapping failures to [`Error::Io`] with the path.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    f.write_all(text.as_bytes()).map_err(io_err)?;
    f.flush().map_err(io_err)
}
