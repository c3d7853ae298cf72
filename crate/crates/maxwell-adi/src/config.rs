//! TOML run configuration: parsing with strict unknown-key rejection,
//! dotted-path command-line overrides, and resolution into the solver's
//! [`SchemeConfig`], material fields, and study parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::materials::{
    load_pgm_stack, load_voxels, sample_coefficients, synthetic_phantom, MaterialProps,
    MaterialTable, PhantomSpec, VoxelLayout, MIN_MATERIAL,
};
use crate::maxwell::{BoundaryMode, Material, SchemeConfig};
use crate::splines::KnotVector;
use crate::verify::{ManufacturedSolution, Mode};
use crate::{Error, Result};

/// Execution mode, selectable on the command line and optionally pinned in
/// the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Run,
    Verify,
    Convergence,
    Scaling,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RunMode::Run => "run",
            RunMode::Verify => "verify",
            RunMode::Convergence => "convergence",
            RunMode::Scaling => "scaling",
        };
        f.write_str(s)
    }
}

/// Mesh resolution: one element count for all axes or one per axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Elements {
    Uniform(usize),
    PerAxis([usize; 3]),
}

impl Elements {
    pub fn per_axis(&self) -> [usize; 3] {
        match *self {
            Elements::Uniform(n) => [n; 3],
            Elements::PerAxis(a) => a,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub elements: Elements,
    pub degree: usize,
    /// Inter-element continuity; defaults to degree − 1 (maximal smoothness).
    pub continuity: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub tau: Option<f64>,
    pub n_steps: Option<usize>,
    pub final_time: Option<f64>,
}

impl TimeSection {
    /// Resolves (τ, step count) from any consistent pair; with all three
    /// given they must agree to a relative 1e−9.
    pub fn resolve(&self) -> Result<(f64, usize)> {
        let bad = |msg: String| Err(Error::Config(msg));
        match (self.tau, self.n_steps, self.final_time) {
            (Some(tau), Some(n), t_opt) => {
                if tau <= 0.0 || !tau.is_finite() {
                    return bad(format!("time.tau must be positive and finite, got {tau}"));
                }
                if n == 0 {
                    return bad("time.n_steps must be at least 1".into());
                }
                if let Some(t) = t_opt {
                    let err = (tau * n as f64 - t).abs();
                    if err > 1e-9 * t.abs().max(1.0) {
                        return bad(format!(
                            "time.tau * time.n_steps = {} disagrees with time.final_time = {}",
                            tau * n as f64,
                            t
                        ));
                    }
                }
                Ok((tau, n))
            }
            (Some(tau), None, Some(t)) => {
                if tau <= 0.0 || !tau.is_finite() || t <= 0.0 {
                    return bad("time.tau and time.final_time must be positive".into());
                }
                let steps = t / tau;
                let n = steps.round();
                if n < 1.0 || (steps - n).abs() > 1e-9 * steps.max(1.0) {
                    return bad(format!(
                        "time.tau = {tau} does not divide time.final_time = {t}"
                    ));
                }
                Ok((tau, n as usize))
            }
            (None, Some(n), Some(t)) => {
                if n == 0 || t <= 0.0 || !t.is_finite() {
                    return bad("time.n_steps and time.final_time must be positive".into());
                }
                Ok((t / n as f64, n))
            }
            _ => bad("time needs two of: tau, n_steps, final_time".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutName {
    XFastest,
    ZFastest,
}

impl From<LayoutName> for VoxelLayout {
    fn from(l: LayoutName) -> Self {
        match l {
            LayoutName::XFastest => VoxelLayout::XFastest,
            LayoutName::ZFastest => VoxelLayout::ZFastest,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoxelsSection {
    /// Raw density file (one byte per voxel); requires `dims`.
    pub path: Option<PathBuf>,
    /// PGM slice stack pattern containing `{i}`, numbered from 0.
    pub pgm_pattern: Option<String>,
    pub dims: Option<[usize; 3]>,
    pub layout: Option<LayoutName>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSection {
    pub resolution: Option<usize>,
    pub center: Option<[f64; 3]>,
    pub outer_radius: Option<f64>,
    pub skull_thickness: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropsSection {
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
}

impl PropsSection {
    fn apply(&self, base: MaterialProps) -> MaterialProps {
        MaterialProps {
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            mu: self.mu.unwrap_or(base.mu),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub air_threshold: Option<u8>,
    pub skull_threshold: Option<u8>,
    #[serde(default)]
    pub air: PropsSection,
    #[serde(default)]
    pub tissue: PropsSection,
    #[serde(default)]
    pub skull: PropsSection,
}

impl TableSection {
    fn build(&self) -> MaterialTable {
        let base = MaterialTable::default();
        MaterialTable {
            t_air: self.air_threshold.unwrap_or(base.t_air),
            t_skull: self.skull_threshold.unwrap_or(base.t_skull),
            air: self.air.apply(base.air),
            tissue: self.tissue.apply(base.tissue),
            skull: self.skull.apply(base.skull),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub phantom: Option<PhantomSection>,
    pub voxels: Option<VoxelsSection>,
    pub table: Option<TableSection>,
}

impl MaterialsSection {
    fn validate(&self) -> Result<()> {
        let scalar = self.epsilon.is_some() || self.mu.is_some();
        let sources = scalar as usize + self.phantom.is_some() as usize + self.voxels.is_some() as usize;
        if sources > 1 {
            return Err(Error::Config(
                "materials: scalar epsilon/mu, phantom, and voxels are mutually exclusive".into(),
            ));
        }
        if self.epsilon.is_some() != self.mu.is_some() {
            return Err(Error::Config(
                "materials: scalar form needs both epsilon and mu".into(),
            ));
        }
        if let (Some(e), Some(m)) = (self.epsilon, self.mu) {
            if !(e >= MIN_MATERIAL && m >= MIN_MATERIAL && e.is_finite() && m.is_finite()) {
                return Err(Error::Config(format!(
                    "materials: epsilon and mu must be finite and at least {MIN_MATERIAL}, got ({e}, {m})"
                )));
            }
        }
        if self.table.is_some() && self.phantom.is_none() && self.voxels.is_none() {
            return Err(Error::Config(
                "materials.table only applies to phantom or voxel materials".into(),
            ));
        }
        if let Some(v) = &self.voxels {
            match (&v.path, &v.pgm_pattern) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(Error::Config(
                        "materials.voxels needs exactly one of path or pgm_pattern".into(),
                    ))
                }
                (Some(_), None) if v.dims.is_none() => {
                    return Err(Error::Config(
                        "materials.voxels.path requires materials.voxels.dims".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Loads or synthesizes the material description. Relative voxel paths
    /// resolve against `base_dir`.
    pub fn build(&self, spaces: &[KnotVector; 3], base_dir: &Path) -> Result<Material> {
        let table = self.table.unwrap_or_default().build();
        if let Some(ph) = &self.phantom {
            let base = PhantomSpec::default();
            let spec = PhantomSpec {
                resolution: ph.resolution.unwrap_or(base.resolution),
                center: ph.center.unwrap_or(base.center),
                outer_radius: ph.outer_radius.unwrap_or(base.outer_radius),
                skull_thickness: ph.skull_thickness.unwrap_or(base.skull_thickness),
            };
            let grid = synthetic_phantom(&spec)?;
            return Ok(Material::Field(sample_coefficients(&grid, spaces, &table)?));
        }
        if let Some(v) = &self.voxels {
            let grid = if let Some(path) = &v.path {
                let dims = v.dims.ok_or_else(|| {
                    Error::Config("materials.voxels.path requires dims".into())
                })?;
                let layout = v.layout.unwrap_or(LayoutName::XFastest).into();
                load_voxels(&abs_path(base_dir, path), dims, layout)?
            } else {
                let pattern = v.pgm_pattern.as_ref().expect("validated");
                let joined = abs_path(base_dir, Path::new(pattern));
                load_pgm_stack(&joined.to_string_lossy())?
            };
            return Ok(Material::Field(sample_coefficients(&grid, spaces, &table)?));
        }
        Ok(Material::Scalar {
            epsilon: self.epsilon.unwrap_or(1.0),
            mu: self.mu.unwrap_or(1.0),
        })
    }
}

fn abs_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() || base.as_os_str().is_empty() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub family: u8,
    pub kappa: i32,
    pub lambda: i32,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Named preset; only `"u_a"` is defined.
    pub manufactured: Option<String>,
    pub modes: Option<Vec<ModeSection>>,
    pub zero: Option<bool>,
}

impl InitialSection {
    fn validate(&self) -> Result<()> {
        let n = self.manufactured.is_some() as usize
            + self.modes.is_some() as usize
            + self.zero.is_some() as usize;
        if n > 1 {
            return Err(Error::Config(
                "initial: manufactured, modes, and zero are mutually exclusive".into(),
            ));
        }
        if let Some(name) = &self.manufactured {
            if name != "u_a" {
                return Err(Error::Config(format!(
                    "initial.manufactured: unknown preset {name:?} (expected \"u_a\")"
                )));
            }
        }
        if self.zero == Some(false) {
            return Err(Error::Config(
                "initial.zero = false is meaningless; omit it instead".into(),
            ));
        }
        Ok(())
    }

    /// The manufactured solution driving the run, or `None` for zero
    /// initial data. Defaults to the benchmark combination.
    pub fn manufactured_solution(&self) -> Result<Option<ManufacturedSolution>> {
        self.validate()?;
        if self.zero == Some(true) {
            return Ok(None);
        }
        if let Some(modes) = &self.modes {
            let ms = ManufacturedSolution {
                modes: modes
                    .iter()
                    .map(|m| Mode {
                        family: m.family,
                        kappa: m.kappa,
                        lambda: m.lambda,
                        weight: m.weight,
                    })
                    .collect(),
            };
            ms.validate()?;
            return Ok(Some(ms));
        }
        Ok(Some(ManufacturedSolution::u_a()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    /// Snapshot cadence in steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_snapshot_resolution")]
    pub snapshot_resolution: usize,
    #[serde(default = "default_true")]
    pub error_csv: bool,
    #[serde(default)]
    pub dump_coefficients: bool,
}

fn default_snapshot_resolution() -> usize {
    64
}

fn default_true() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            snapshot_every: 0,
            snapshot_resolution: default_snapshot_resolution(),
            error_csv: true,
            dump_coefficients: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_l2_bound")]
    pub max_l2_error: f64,
    #[serde(default = "default_hcurl_bound")]
    pub max_hcurl_error: f64,
}

fn default_l2_bound() -> f64 {
    0.08
}

fn default_hcurl_bound() -> f64 {
    0.35
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            max_l2_error: default_l2_bound(),
            max_hcurl_error: default_hcurl_bound(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub taus: Vec<f64>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            taus: vec![1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0, 1.0 / 320.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub sizes: Vec<usize>,
    #[serde(default = "default_scaling_tau")]
    pub tau: f64,
    #[serde(default = "default_scaling_steps")]
    pub steps: usize,
    #[serde(default = "default_scaling_reps")]
    pub reps: usize,
}

fn default_scaling_tau() -> f64 {
    0.1
}

fn default_scaling_steps() -> usize {
    2
}

fn default_scaling_reps() -> usize {
    3
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            sizes: vec![8, 16, 32],
            tau: default_scaling_tau(),
            steps: default_scaling_steps(),
            reps: default_scaling_reps(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    #[default]
    Natural,
    EliminateTangential,
}

impl From<BoundaryName> for BoundaryMode {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Natural => BoundaryMode::Natural,
            BoundaryName::EliminateTangential => BoundaryMode::EliminateTangential,
        }
    }
}

/// Full run description parsed from a TOML document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional mode pin; when present it must match the command-line mode.
    pub mode: Option<RunMode>,
    pub mesh: MeshSection,
    pub time: TimeSection,
    #[serde(default)]
    pub materials: MaterialsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub boundary: BoundaryName,
    pub quad_points: Option<usize>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    /// Directory the config file lives in; anchors relative data paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Structural validation beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        for (n, axis) in self.mesh.elements.per_axis().iter().zip(["x", "y", "z"]) {
            if *n == 0 {
                return Err(Error::Config(format!("mesh.elements: {axis} count is 0")));
            }
        }
        if self.mesh.degree == 0 {
            return Err(Error::Config("mesh.degree must be at least 1".into()));
        }
        if let Some(c) = self.mesh.continuity {
            if c >= self.mesh.degree {
                return Err(Error::Config(format!(
                    "mesh.continuity = {c} must be below mesh.degree = {}",
                    self.mesh.degree
                )));
            }
        }
        self.time.resolve()?;
        self.materials.validate()?;
        self.initial.validate()?;
        if self.output.snapshot_resolution < 2 {
            return Err(Error::Config(
                "output.snapshot_resolution must be at least 2".into(),
            ));
        }
        if self.convergence.taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config("convergence.taus must be positive".into()));
        }
        if self.scaling.sizes.iter().any(|s| *s == 0) {
            return Err(Error::Config("scaling.sizes must be positive".into()));
        }
        if !(self.verify.max_l2_error > 0.0 && self.verify.max_hcurl_error > 0.0) {
            return Err(Error::Config("verify bounds must be positive".into()));
        }
        Ok(())
    }

    /// The per-axis spline spaces described by the mesh section.
    pub fn spaces(&self) -> Result<[KnotVector; 3]> {
        let counts = self.mesh.elements.per_axis();
        let degree = self.mesh.degree;
        let continuity = self.mesh.continuity.unwrap_or(degree.saturating_sub(1));
        Ok([
            KnotVector::open_uniform(counts[0], degree, continuity)?,
            KnotVector::open_uniform(counts[1], degree, continuity)?,
            KnotVector::open_uniform(counts[2], degree, continuity)?,
        ])
    }

    /// Resolves the document into a solver configuration, loading material
    /// data if needed.
    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        self.validate()?;
        let spaces = self.spaces()?;
        let (tau, n_steps) = self.time.resolve()?;
        let material = self.materials.build(&spaces, &self.base_dir)?;
        let mut cfg = SchemeConfig::new(spaces, tau, n_steps, material);
        cfg.boundary = self.boundary.into();
        if let Some(q) = self.quad_points {
            cfg.quad_points = q;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a TOML document into a validated [`RunConfig`]. Unknown keys are
/// rejected. Relative data paths resolve against the working directory;
/// prefer [`load_config`] for file-based runs.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    config_from_table(table, PathBuf::new())
}

fn config_from_table(table: toml::Table, base_dir: PathBuf) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.base_dir = base_dir;
    cfg.validate()?;
    Ok(cfg)
}

/// Applies one `key.path=value` override onto a parsed TOML table. The
/// value is parsed as a TOML literal, falling back to a plain string.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        Error::Config(format!("override {spec:?} must have the form key.path=value"))
    })?;
    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("override {spec:?} has an empty key segment")));
    }
    let value = parse_literal(raw.trim());
    let mut current = doc;
    for seg in &segments[..segments.len() - 1] {
        let entry = current
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override {spec:?}: {seg} is not a table"))
        })?;
    }
    current.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("inserted above"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Reads, overrides, and validates a config file. Returns the config and
/// the resolved TOML text (post-override), suitable for echoing beside run
/// outputs.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<(RunConfig, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    let resolved = toml::to_string_pretty(&table)
        .map_err(|e| Error::Config(format!("cannot re-serialize resolved config: {e}")))?;
    let base_dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let cfg = config_from_table(table, base_dir)?;
    Ok((cfg, resolved))
}
