//! Experiment configuration: a TOML document with fixed sections.

use std::path::Path;

use lapdecay::lattice::Profile;
use lapdecay::resolvent::Weight;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub fields: FieldsSection,
    #[serde(default)]
    pub carleman: CarlemanSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub continuation: ContinuationSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub cutoff: CutoffSection,
    #[serde(default)]
    pub wave: WaveSection,
    #[serde(default)]
    pub hardy: HardySection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Radial sectors on `(0, l]`.
    Radial,
    /// Radial sectors on `(obstacle, l)`.
    Exterior,
    /// One-dimensional box `[-l, l]` with a magnetic potential.
    Line,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub geometry: Geometry,
    pub d: usize,
    pub n: usize,
    /// Outer radius, or half width for the line.
    pub l: f64,
    /// Radius of the ball removed around the origin.
    pub obstacle: Option<f64>,
    pub nu_max: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { geometry: Geometry::Radial, d: 3, n: 400, l: 20.0, obstacle: None, nu_max: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Zero,
    Exponential { amp: f64, rate: f64 },
    Bump { amp: f64, radius: f64 },
    SquareWell { depth: f64, radius: f64 },
}

impl ProfileSpec {
    pub fn profile(&self) -> Profile {
        match *self {
            ProfileSpec::Zero => Profile::Zero,
            ProfileSpec::Exponential { amp, rate } => Profile::Exponential { amp, rate },
            ProfileSpec::Bump { amp, radius } => Profile::Bump { amp, radius },
            ProfileSpec::SquareWell { depth, radius } => Profile::SquareWell { depth, radius },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldsSection {
    pub tag: String,
    pub v: ProfileSpec,
    /// Magnetic potential, line geometry only.
    pub b: ProfileSpec,
    /// Rate of the weight `e^{-c <x> / 2}`.
    pub c: f64,
}

impl Default for FieldsSection {
    fn default() -> Self {
        Self { tag: "free".into(), v: ProfileSpec::Zero, b: ProfileSpec::Zero, c: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanSection {
    pub s: f64,
    pub ell_w: f64,
    pub kappa: f64,
    pub a0: f64,
    pub tau: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub epsilon: f64,
    pub trials: usize,
    pub n: usize,
    pub r_max: f64,
    /// Random parameter sets for the pointwise weight inequalities.
    pub param_samples: usize,
    pub points: usize,
    pub conj_lambda: f64,
    pub conj_p: f64,
    pub conj_floor: f64,
    pub conj_n: usize,
    pub conj_r_max: f64,
}

impl Default for CarlemanSection {
    fn default() -> Self {
        Self {
            s: 0.6,
            ell_w: 0.3,
            kappa: 0.1,
            a0: 4.0,
            tau: vec![2.0, 4.0, 8.0],
            lambdas: vec![1.0, 5.0, 20.0],
            epsilon: 1e-6,
            trials: 50,
            n: 2000,
            r_max: 20.0,
            param_samples: 100,
            points: 10_000,
            conj_lambda: 5.0,
            conj_p: 0.5,
            conj_floor: 0.05,
            conj_n: 400,
            conj_r_max: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Poly { s: f64 },
    Exp { c: f64 },
}

impl WeightSpec {
    pub fn weight(&self) -> Weight {
        match *self {
            WeightSpec::Poly { s } => Weight::Poly { s },
            WeightSpec::Exp { c } => Weight::Exp { c },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub mode: SweepMode,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    /// Explicit grid; replaces the geometric one when present.
    pub lambdas: Option<Vec<f64>>,
    pub epsilon: f64,
    pub weight: WeightSpec,
    pub alpha: u8,
    pub beta: u8,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mode: SweepMode::High,
            lambda_min: 0.5,
            lambda_max: 40.0,
            points: 7,
            lambdas: None,
            epsilon: 1e-3,
            weight: WeightSpec::Exp { c: 1.0 },
            alpha: 0,
            beta: 0,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        if let Some(l) = &self.lambdas {
            return l.clone();
        }
        geometric(self.lambda_min, self.lambda_max, self.points)
    }
}

pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

pub fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationSection {
    /// Anchor `z` as `[re, im]`, `im < 0`.
    pub anchor: [f64; 2],
    pub re_min: f64,
    pub re_max: f64,
    pub points: usize,
    pub im: Vec<f64>,
    /// Absorption used for the extrapolated real-axis reference.
    pub epsilon: f64,
    /// Half-line sites inside the obstacle (exterior geometry).
    pub ball_sites: usize,
    pub eta_flat: f64,
    pub eta_width: f64,
    pub scan_re: [f64; 2],
    pub scan_im: [f64; 2],
    pub scan_points: [usize; 2],
    pub threshold: f64,
    pub centers: Vec<f64>,
    pub sigma: f64,
    pub k_max: usize,
    pub nodes: usize,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        Self {
            anchor: [1.0, -0.3],
            re_min: 0.5,
            re_max: 3.0,
            points: 11,
            im: vec![-0.05, 0.0, 0.05],
            epsilon: 1e-3,
            ball_sites: 10,
            eta_flat: 1.0,
            eta_width: 2.0,
            scan_re: [0.5, 3.0],
            scan_im: [-0.3, 0.1],
            scan_points: [11, 5],
            threshold: 0.05,
            centers: vec![1.0, 2.0],
            sigma: 0.4,
            k_max: 6,
            nodes: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub samples: usize,
    pub rho_max: f64,
    pub strip: f64,
    pub jump_points: usize,
    pub sphere_order: usize,
    pub lattice_n: Vec<usize>,
    pub lattice_r_max: f64,
    pub lattice_lambda: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            samples: 1000,
            rho_max: 10.0,
            strip: 0.2,
            jump_points: 8,
            sphere_order: 48,
            lattice_n: vec![100, 200, 400],
            lattice_r_max: 10.0,
            lattice_lambda: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffSection {
    pub delta: f64,
    pub m: usize,
    pub samples: usize,
    pub hs_dim: usize,
    pub hs_order: usize,
    pub hs_cell: f64,
    pub hs_center: f64,
    pub hs_width: f64,
}

impl Default for CutoffSection {
    fn default() -> Self {
        Self { delta: 1.0, m: 12, samples: 201, hs_dim: 100, hs_order: 8, hs_cell: 0.1, hs_center: 0.1, hs_width: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveMode {
    /// Time-dependent cutoff order.
    Cutoff,
    /// No cutoff; needs odd dimension and a low-frequency certificate.
    None,
    /// Both, on the same decompositions.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Operator,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSection {
    pub mode: WaveMode,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub probe: ProbeKind,
    pub batch: usize,
    pub band: f64,
    pub fit_window: [f64; 2],
    /// Certificate sweep for the no-cutoff mode.
    pub cert_s: f64,
    pub cert_lambdas: Vec<f64>,
    pub cert_n: usize,
    pub cert_r_max: f64,
    pub cert_tolerance: f64,
    /// Width of the time switch in the identity checks.
    pub switch_gamma: f64,
    pub fourier_epsilon: f64,
}

impl Default for WaveSection {
    fn default() -> Self {
        Self {
            mode: WaveMode::Cutoff,
            t_min: 0.0,
            t_max: 30.0,
            points: 61,
            probe: ProbeKind::Operator,
            batch: 8,
            band: 0.25,
            fit_window: [2.0, 30.0],
            cert_s: 2.0,
            cert_lambdas: vec![0.2, 0.1, 0.05, 0.025],
            cert_n: 500,
            cert_r_max: 100.0,
            cert_tolerance: 0.1,
            switch_gamma: 3.0,
            fourier_epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardySection {
    pub dims: Vec<usize>,
    pub trials: usize,
}

impl Default for HardySection {
    fn default() -> Self {
        Self { dims: vec![3, 5], trials: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    pub seed: u64,
}

fn default_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    /// Reads a TOML file and applies `section.key=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let g = &self.grid;
        if g.n < 2 || !(g.l > 0.0) {
            return bad("grid needs n >= 2 and l > 0");
        }
        if g.d < 1 {
            return bad("grid dimension must be positive");
        }
        match (g.geometry, g.obstacle) {
            (Geometry::Exterior, None) => return bad("exterior geometry needs grid.obstacle"),
            (Geometry::Exterior, Some(r)) if !(r > 0.0 && r < g.l) => return bad("grid.obstacle must lie in (0, l)"),
            (Geometry::Line, _) if g.d != 1 => return bad("line geometry needs d = 1"),
            _ => {}
        }
        if !(self.fields.c > 0.0) {
            return bad("fields.c must be positive");
        }
        let s = &self.sweep;
        if !(s.epsilon > 0.0) || s.max_iter == 0 || !(s.tol > 0.0) {
            return bad("sweep needs epsilon > 0, max_iter > 0 and tol > 0");
        }
        if s.lambdas.is_none() && !(s.lambda_min > 0.0 && s.lambda_max > s.lambda_min && s.points >= 2) {
            return bad("sweep needs 0 < lambda_min < lambda_max and points >= 2");
        }
        let w = &self.wave;
        if !(w.t_max > w.t_min && w.t_min >= 0.0) || w.points < 3 {
            return bad("wave needs 0 <= t_min < t_max and points >= 3");
        }
        if self.continuation.anchor[1] > 0.0 {
            return bad("continuation anchor must satisfy Im z <= 0");
        }
        if self.cutoff.m == 0 || !(self.cutoff.delta > 0.0) {
            return bad("cutoff needs m >= 1 and delta > 0");
        }
        Ok(())
    }
}

/// `a.b.c=value`; the value is read as a TOML literal, or as a bare string.
fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| CliError::Config(format!("override '{spec}' lacks '='")))?;
    let value = parse_value(raw.trim());
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().ok_or_else(|| CliError::Config("empty override key".into()))?;
    let mut table = doc;
    for k in parents {
        let entry = table.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override path '{path}' crosses a non-table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}
