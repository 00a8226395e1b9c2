use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Interpolation;
use crate::kernels::{ConvMode, SsnoForm};
use crate::operator::{Activation, ArchSpec, KernelSpec};
use crate::random_fields::SpectrumConvention;

/// Which driver a config runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Discretization,
    Stability,
    Depth,
    Nyquist,
    Iss,
    GrfCheck,
    KernelCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Discretization => "discretization",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Depth => "depth",
            ExperimentKind::Nyquist => "nyquist",
            ExperimentKind::Iss => "iss",
            ExperimentKind::GrfCheck => "grf_check",
            ExperimentKind::KernelCheck => "kernel_check",
        }
    }
}

/// Input field options shared by all drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrfOptions {
    pub eps: f64,
    pub convention: SpectrumConvention,
    /// Rescale inputs to unit normalized `L²` norm.
    pub normalize: bool,
}

impl Default for GrfOptions {
    fn default() -> Self {
        GrfOptions { eps: 1e-2, convention: SpectrumConvention::SobolevMatched, normalize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationOptions {
    pub n_full: usize,
    /// Strides `N_full / N` of the coarse grids.
    pub factors: Vec<usize>,
    pub smoothness: Vec<f64>,
    /// Activations to sweep; empty means the architecture's own.
    pub activations: Vec<Activation>,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        DiscretizationOptions {
            n_full: 4096,
            factors: vec![2, 4, 8, 16, 32, 64, 128],
            smoothness: vec![1.0, 2.0, 4.0],
            activations: Vec::new(),
        }
    }
}

/// Evenly spaced grid `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Err(Error::Config(format!("invalid range {}..{} step {}", self.start, self.stop, self.step)));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityOptions {
    pub n: usize,
    pub smoothness: f64,
    pub epsilons: Range,
    /// Perturbation directions per input.
    pub directions: usize,
    /// Input pairs for the empirical Lipschitz ratio.
    pub pairs: usize,
    /// Depths for the depth sweep.
    pub depths: Vec<usize>,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            n: 4096,
            smoothness: 2.0,
            epsilons: Range { start: 0.0, stop: 0.8, step: 0.025 },
            directions: 20,
            pairs: 200,
            depths: vec![1, 2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NyquistOptions {
    pub n_ref: usize,
    pub wavenumbers: Vec<usize>,
    pub resolutions: Vec<usize>,
}

impl Default for NyquistOptions {
    fn default() -> Self {
        NyquistOptions {
            n_ref: 4096,
            wavenumbers: vec![4, 8, 16, 32, 64, 128],
            resolutions: vec![16, 32, 64, 128, 256, 512, 1024],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IssOptions {
    /// Coarse grid the perturbed stack runs on.
    pub n: usize,
    pub smoothness: f64,
    pub deltas: Vec<f64>,
    /// Inputs used to calibrate `C_{d,s}` when no value is supplied.
    pub calibration_samples: usize,
    /// Fixed multiplier, skipping calibration.
    pub cds: Option<f64>,
    /// Calibration file written by a discretization sweep.
    pub cds_file: Option<PathBuf>,
}

impl Default for IssOptions {
    fn default() -> Self {
        IssOptions {
            n: 256,
            smoothness: 2.0,
            deltas: vec![0.0, 1e-3, 1e-2, 1e-1],
            calibration_samples: 20,
            cds: None,
            cds_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { dir: PathBuf::from("results"), plot: true }
    }
}

/// Everything a driver needs; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: ExperimentKind,
    /// Base seed for inputs and perturbations.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_arch")]
    pub arch: ArchSpec,
    #[serde(default)]
    pub model_seed: u64,
    /// Weight file to load instead of a random model.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub conv_mode: ConvMode,
    /// How coarse states are lifted to the reference grid.
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grf: GrfOptions,
    #[serde(default)]
    pub discretization: DiscretizationOptions,
    #[serde(default)]
    pub stability: StabilityOptions,
    #[serde(default)]
    pub nyquist: NyquistOptions,
    #[serde(default)]
    pub iss: IssOptions,
    #[serde(default)]
    pub output: OutputOptions,
}

fn default_samples() -> usize {
    20
}

/// One-dimensional, 32 channels, three GELU layers of 16-mode sum-form kernels.
pub fn default_arch() -> ArchSpec {
    ArchSpec {
        dim: 1,
        in_channels: 1,
        out_channels: 1,
        width: 32,
        depth: 3,
        kernel: KernelSpec::Ssno { modes: 16, form: SsnoForm::Sum },
        activation: Activation::Gelu,
    }
}

impl SweepConfig {
    /// Default configuration for a driver.
    pub fn new(experiment: ExperimentKind) -> Self {
        SweepConfig {
            experiment,
            seed: 0,
            arch: default_arch(),
            model_seed: 0,
            weights: None,
            conv_mode: ConvMode::default(),
            interpolation: Interpolation::default(),
            samples: default_samples(),
            grf: GrfOptions::default(),
            discretization: DiscretizationOptions::default(),
            stability: StabilityOptions::default(),
            nyquist: NyquistOptions::default(),
            iss: IssOptions::default(),
            output: OutputOptions::default(),
        }
    }

    /// Parses a config, reporting the line and column of schema violations.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative `weights` and `iss.cds_file` paths are
    /// taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = SweepConfig::from_json_str(&s).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [cfg.weights.as_mut(), cfg.iss.cds_file.as_mut()].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if !(self.grf.eps > 0.0) {
            return Err(Error::Config("grf.eps must be positive".into()));
        }
        let d = &self.discretization;
        for &f in &d.factors {
            if f < 1 || d.n_full % f != 0 || !(d.n_full / f).is_power_of_two() || d.n_full / f < 4 {
                return Err(Error::Config(format!("factor {f} does not divide n_full={} into a grid of at least 4 points", d.n_full)));
            }
        }
        if d.smoothness.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("smoothness values must be positive".into()));
        }
        let ny = &self.nyquist;
        if ny.resolutions.iter().any(|&l| l > ny.n_ref || ny.n_ref % l != 0) {
            return Err(Error::Config("nyquist resolutions must divide n_ref".into()));
        }
        if self.iss.deltas.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("iss deltas must be non-negative".into()));
        }
        self.stability.epsilons.values()?;
        Ok(())
    }
}
