//! Material data: voxel densities, three-class segmentation, and
//! per-test-function coefficient fields.
//!
//! A [`VoxelGrid`] holds unsigned 8-bit densities spanning the unit cube
//! (imaging-style data). Densities classify into air / tissue / skull by two
//! thresholds, and a [`MaterialTable`] maps each class to permittivity ε and
//! permeability μ. Because the solver modifies its one-dimensional systems
//! row by row, materials attach to *test functions*, not points:
//! [`sample_coefficients`] evaluates the grid at each basis function's
//! Greville anchor to produce one (ε, μ) pair per coefficient triple.

use std::path::{Path, PathBuf};

use crate::kron::Tensor3;
use crate::splines::KnotVector;
use crate::{Error, Result};

/// Memory order of a raw voxel byte stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelLayout {
    /// Stack of z-slices, each slice row-major with x contiguous:
    /// `idx = (z*ny + y)*nx + x`. The usual image-stack order.
    XFastest,
    /// Tensor order with z contiguous: `idx = (x*ny + y)*nz + z`.
    ZFastest,
}

/// Unsigned 8-bit density samples on a regular grid over the unit cube.
///
/// Stored internally in [`VoxelLayout::XFastest`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    densities: Vec<u8>,
}

impl VoxelGrid {
    /// Builds a grid from a raw byte stream in the declared layout.
    pub fn from_bytes(dims: [usize; 3], layout: VoxelLayout, bytes: &[u8]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter(format!(
                "voxel dims must be positive, got {}x{}x{}",
                dims[0], dims[1], dims[2]
            )));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "voxel stream holds {} bytes, dims {}x{}x{} require {}",
                bytes.len(),
                dims[0],
                dims[1],
                dims[2],
                expected
            )));
        }
        let densities = match layout {
            VoxelLayout::XFastest => bytes.to_vec(),
            VoxelLayout::ZFastest => {
                let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
                let mut out = vec![0u8; expected];
                for x in 0..nx {
                    for y in 0..ny {
                        for z in 0..nz {
                            out[(z * ny + y) * nx + x] = bytes[(x * ny + y) * nz + z];
                        }
                    }
                }
                out
            }
        };
        Ok(Self { dims, densities })
    }

    pub fn uniform(dims: [usize; 3], value: u8) -> Result<Self> {
        let bytes = vec![value; dims[0] * dims[1] * dims[2]];
        Self::from_bytes(dims, VoxelLayout::XFastest, &bytes)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn density(&self, x: usize, y: usize, z: usize) -> u8 {
        self.densities[(z * self.dims[1] + y) * self.dims[0] + x]
    }

    /// Serializes the densities in the requested layout.
    pub fn to_bytes(&self, layout: VoxelLayout) -> Vec<u8> {
        match layout {
            VoxelLayout::XFastest => self.densities.clone(),
            VoxelLayout::ZFastest => {
                let (nx, ny, nz) = (self.dims[0], self.dims[1], self.dims[2]);
                let mut out = vec![0u8; self.densities.len()];
                for x in 0..nx {
                    for y in 0..ny {
                        for z in 0..nz {
                            out[(x * ny + y) * nz + z] = self.density(x, y, z);
                        }
                    }
                }
                out
            }
        }
    }

    /// Density at the voxel containing the normalized point `g ∈ [0,1]³`
    /// (boundary points clamp inward).
    pub fn density_at(&self, g: [f64; 3]) -> u8 {
        let idx = |coord: f64, n: usize| -> usize {
            let i = (coord * n as f64).floor() as isize;
            i.clamp(0, n as isize - 1) as usize
        };
        self.density(
            idx(g[0], self.dims[0]),
            idx(g[1], self.dims[1]),
            idx(g[2], self.dims[2]),
        )
    }

    /// Serializes each z-slice as one binary PGM (P5) image.
    pub fn to_pgm_slices(&self) -> Vec<Vec<u8>> {
        let (nx, ny, nz) = (self.dims[0], self.dims[1], self.dims[2]);
        (0..nz)
            .map(|z| {
                let mut out = format!("P5\n{} {}\n255\n", nx, ny).into_bytes();
                for y in 0..ny {
                    for x in 0..nx {
                        out.push(self.density(x, y, z));
                    }
                }
                out
            })
            .collect()
    }
}

/// Reads a headerless raw voxel file.
pub fn load_voxels(path: &Path, dims: [usize; 3], layout: VoxelLayout) -> Result<VoxelGrid> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = std::fs::read(path).map_err(io_err)?;
    VoxelGrid::from_bytes(dims, layout, &bytes)
        .map_err(|e| Error::Format(format!("{}: {}", path.display(), e)))
}

/// Loads a stack of binary PGM (P5) z-slices named by an indexed pattern.
///
/// The pattern must contain `{i}`, replaced by the slice index counting from
/// 0; probing stops at the first missing file. All slices must share one
/// width and height.
pub fn load_pgm_stack(pattern: &str) -> Result<VoxelGrid> {
    if !pattern.contains("{i}") {
        return Err(Error::InvalidParameter(format!(
            "PGM pattern {:?} lacks the {{i}} slice-index placeholder",
            pattern
        )));
    }
    let mut slices: Vec<(usize, usize, Vec<u8>)> = Vec::new();
    loop {
        let path = PathBuf::from(pattern.replace("{i}", &slices.len().to_string()));
        if !path.exists() {
            break;
        }
        slices.push(read_pgm(&path)?);
    }
    if slices.is_empty() {
        let first = pattern.replace("{i}", "0");
        return Err(Error::Io {
            path: PathBuf::from(first),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no PGM slices found"),
        });
    }
    let (nx, ny, _) = slices[0];
    let nz = slices.len();
    let mut bytes = Vec::with_capacity(nx * ny * nz);
    for (z, (w, h, data)) in slices.iter().enumerate() {
        if (*w, *h) != (nx, ny) {
            return Err(Error::Format(format!(
                "PGM slice {} is {}x{}, slice 0 is {}x{}",
                z, w, h, nx, ny
            )));
        }
        bytes.extend_from_slice(data);
    }
    VoxelGrid::from_bytes([nx, ny, nz], VoxelLayout::XFastest, &bytes)
}

/// Parses one binary PGM (P5) file: `(width, height, row-major bytes)`.
fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = std::fs::read(path).map_err(io_err)?;
    let fmt = |msg: &str| Error::Format(format!("{}: {}", path.display(), msg));

    let mut pos = 0usize;
    // Reads the next whitespace-delimited token, skipping '#' comments.
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(fmt("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(&bytes)?;
    if magic != "P5" {
        return Err(fmt(&format!("expected binary PGM magic P5, got {:?}", magic)));
    }
    let parse_dim = |tok: String, what: &str| -> Result<usize> {
        tok.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| fmt(&format!("invalid {}: {:?}", what, tok)))
    };
    let w = parse_dim(next_token(&bytes)?, "width")?;
    let h = parse_dim(next_token(&bytes)?, "height")?;
    let maxval = parse_dim(next_token(&bytes)?, "maxval")?;
    if maxval > 255 {
        return Err(fmt(&format!(
            "maxval {} needs two bytes per sample; only 8-bit PGM is supported",
            maxval
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(fmt("missing separator after maxval"));
    }
    pos += 1;
    let data = &bytes[pos..];
    if data.len() != w * h {
        return Err(fmt(&format!(
            "raster holds {} bytes, header {}x{} requires {}",
            data.len(),
            w,
            h,
            w * h
        )));
    }
    Ok((w, h, data.to_vec()))
}

/// Segmentation class of one density value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialClass {
    Air,
    Tissue,
    Skull,
}

/// Material constants of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialProps {
    pub epsilon: f64,
    pub mu: f64,
}

impl Default for MaterialProps {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            mu: 1.0,
        }
    }
}

/// Classification thresholds and per-class material constants.
///
/// Defaults: density ≤ 1 is air, ≥ 240 is skull, the strict interior is
/// tissue; every class carries ε = μ = 1 until overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialTable {
    pub t_air: u8,
    pub t_skull: u8,
    pub air: MaterialProps,
    pub tissue: MaterialProps,
    pub skull: MaterialProps,
}

impl Default for MaterialTable {
    fn default() -> Self {
        Self {
            t_air: 1,
            t_skull: 240,
            air: MaterialProps::default(),
            tissue: MaterialProps::default(),
            skull: MaterialProps::default(),
        }
    }
}

/// Smallest admissible material constant.
pub const MIN_MATERIAL: f64 = 1e-12;

impl MaterialTable {
    pub fn validate(&self) -> Result<()> {
        if self.t_air >= self.t_skull {
            return Err(Error::InvalidParameter(format!(
                "material thresholds require t_air < t_skull, got {} >= {}",
                self.t_air, self.t_skull
            )));
        }
        for (name, props) in [
            ("air", self.air),
            ("tissue", self.tissue),
            ("skull", self.skull),
        ] {
            if !(props.epsilon >= MIN_MATERIAL) || !(props.mu >= MIN_MATERIAL) {
                return Err(Error::InvalidParameter(format!(
                    "{} material constants must be >= {MIN_MATERIAL}, got epsilon {} mu {}",
                    name, props.epsilon, props.mu
                )));
            }
        }
        Ok(())
    }

    /// Classifies a density: ≤ t_air → air, ≥ t_skull → skull, else tissue.
    pub fn classify(&self, density: u8) -> MaterialClass {
        if density <= self.t_air {
            MaterialClass::Air
        } else if density >= self.t_skull {
            MaterialClass::Skull
        } else {
            MaterialClass::Tissue
        }
    }

    pub fn props(&self, class: MaterialClass) -> MaterialProps {
        match class {
            MaterialClass::Air => self.air,
            MaterialClass::Tissue => self.tissue,
            MaterialClass::Skull => self.skull,
        }
    }
}

/// Per-test-function material constants: one (ε, μ) pair for each
/// coefficient triple of the discrete spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub epsilon: Tensor3,
    pub mu: Tensor3,
}

impl CoefficientField {
    pub fn uniform(dims: [usize; 3], epsilon: f64, mu: f64) -> Self {
        Self {
            epsilon: Tensor3::from_fn(dims, |_, _, _| epsilon),
            mu: Tensor3::from_fn(dims, |_, _, _| mu),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.epsilon.dims()
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.dims() != self.mu.dims() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient field: epsilon dims {:?} vs mu dims {:?}",
                self.epsilon.dims(),
                self.mu.dims()
            )));
        }
        let ok = |t: &Tensor3| t.data().iter().all(|&v| v >= MIN_MATERIAL);
        if !ok(&self.epsilon) || !ok(&self.mu) {
            return Err(Error::InvalidParameter(format!(
                "coefficient field entries must be >= {MIN_MATERIAL}"
            )));
        }
        Ok(())
    }
}

/// Assigns one material per test-function triple by sampling the voxel grid
/// at the triple's Greville anchor `(g_r, g_s, g_t)` (nearest-voxel lookup),
/// classifying the density, and reading that class from the table.
pub fn sample_coefficients(
    grid: &VoxelGrid,
    spaces: &[KnotVector; 3],
    table: &MaterialTable,
) -> Result<CoefficientField> {
    table.validate()?;
    let greville: Vec<Vec<f64>> = spaces.iter().map(|kv| kv.greville_points()).collect();
    let dims = [greville[0].len(), greville[1].len(), greville[2].len()];
    let mut epsilon = Tensor3::zeros(dims);
    let mut mu = Tensor3::zeros(dims);
    for r in 0..dims[0] {
        for s in 0..dims[1] {
            for t in 0..dims[2] {
                let g = [greville[0][r], greville[1][s], greville[2][t]];
                let props = table.props(table.classify(grid.density_at(g)));
                epsilon.set(r, s, t, props.epsilon);
                mu.set(r, s, t, props.mu);
            }
        }
    }
    Ok(CoefficientField { epsilon, mu })
}

/// Concentric-sphere stand-in for imaging data: tissue core (density 120),
/// skull shell (255), air outside (0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec {
    pub resolution: usize,
    pub center: [f64; 3],
    pub outer_radius: f64,
    pub skull_thickness: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            resolution: 64,
            center: [0.5, 0.5, 0.5],
            outer_radius: 0.4,
            skull_thickness: 0.1,
        }
    }
}

/// Rasterizes a [`PhantomSpec`] onto a cubic voxel grid over the unit cube.
pub fn synthetic_phantom(spec: &PhantomSpec) -> Result<VoxelGrid> {
    if spec.resolution == 0 {
        return Err(Error::InvalidParameter(
            "phantom resolution must be positive".into(),
        ));
    }
    if !(spec.outer_radius >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "phantom outer radius must be nonnegative, got {}",
            spec.outer_radius
        )));
    }
    if !(0.0..=spec.outer_radius).contains(&spec.skull_thickness) {
        return Err(Error::InvalidParameter(format!(
            "phantom skull thickness must lie in [0, outer_radius], got {} with outer {}",
            spec.skull_thickness, spec.outer_radius
        )));
    }
    for (axis, &c) in spec.center.iter().enumerate() {
        if !(c - spec.outer_radius >= 0.0 && c + spec.outer_radius <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "phantom sphere leaves the unit cube along axis {}: center {} radius {}",
                axis, c, spec.outer_radius
            )));
        }
    }
    let n = spec.resolution;
    let inner = spec.outer_radius - spec.skull_thickness;
    let mut bytes = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = [
                    (x as f64 + 0.5) / n as f64,
                    (y as f64 + 0.5) / n as f64,
                    (z as f64 + 0.5) / n as f64,
                ];
                let r = p
                    .iter()
                    .zip(&spec.center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                bytes.push(if r < inner {
                    120
                } else if r < spec.outer_radius {
                    255
                } else {
                    0
                });
            }
        }
    }
    VoxelGrid::from_bytes([n, n, n], VoxelLayout::XFastest, &bytes)
}
