use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_model, decay_regime, grf_input, SweepConfig};
use crate::bounds::{b_factors, beta, constant_a, discretization_bound, discretization_report, effective_smoothness};
use crate::bounds::{BoundReport, DecayRegime};
use crate::error::{Error, Result};
use crate::grid::{l2_norm, refine, sobolev_norm};
use crate::operator::{Activation, OperatorModel, PreparedModel};
use crate::stats::{loglog_fit, mean, std_dev, LinearFit};

/// Aggregates at one coarse resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub mean_rel_err: f64,
    pub std_rel_err: f64,
    /// Grid error `‖E_T^{(0)}‖_{ℓ²(T_N)}` between the coarse output and the
    /// reference sampled on the coarse grid.
    pub mean_grid_err: f64,
    pub std_grid_err: f64,
    /// Bound with `C_{d,s} = 1`, averaged over samples.
    pub mean_bound_unit: f64,
    pub n_samples: usize,
}

/// One input at one resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub n: usize,
    pub rel_err: f64,
    pub grid_err: f64,
    pub bound_unit: f64,
}

/// Error against resolution for one smoothness and activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub s: f64,
    pub activation: String,
    pub n_full: usize,
    /// Strictly increasing in `n`.
    pub points: Vec<CurvePoint>,
    pub samples: Vec<SampleRecord>,
    /// Log-log fit of mean relative error against `N`.
    pub fit: Option<LinearFit>,
    /// Log-log fit of mean grid error against `N`.
    pub grid_fit: Option<LinearFit>,
    /// Report for the first input at the coarsest resolution, `C_{d,s} = 1`.
    pub bound: Option<BoundReport>,
}

impl ErrorCurve {
    pub fn resolutions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n as f64).collect()
    }

    pub fn mean_rel_errs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_rel_err).collect()
    }

    /// `(measured grid error, unit bound)` per sample and resolution.
    pub fn calibration_points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|r| (r.grid_err, r.bound_unit)).collect()
    }
}

/// All curves of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationResult {
    pub seed: u64,
    pub regime: DecayRegime,
    pub curves: Vec<ErrorCurve>,
}

/// Model constants shared by every sample of a curve.
pub(crate) struct BoundPlan {
    a: f64,
    beta: f64,
    s_eff: f64,
    factors: Vec<f64>,
    depth: usize,
}

impl BoundPlan {
    pub(crate) fn new(model: &OperatorModel, s: f64, regime: DecayRegime) -> Self {
        let (s_eff, _) = effective_smoothness(model, s);
        BoundPlan {
            a: constant_a(model).0,
            beta: beta(model.dim(), s_eff, regime),
            s_eff,
            factors: b_factors(model, s_eff, regime, 1.0),
            depth: model.depth(),
        }
    }

    pub(crate) fn b(&self, states: &[crate::grid::GridField]) -> f64 {
        self.factors.iter().zip(states).map(|(f, v)| f * sobolev_norm(v, self.s_eff)).fold(0.0, f64::max)
    }

    pub(crate) fn unit_bound(&self, b: f64, n: usize) -> f64 {
        discretization_bound(self.a, b, self.beta, n, self.depth)
    }
}

fn sample_records(
    cfg: &SweepConfig,
    reference: &PreparedModel,
    coarse: &[(usize, PreparedModel)],
    plan: &BoundPlan,
    s: f64,
    index: usize,
) -> Result<Vec<SampleRecord>> {
    let n_full = reference.n;
    let a = grf_input(cfg, n_full, s, index as u64)?;
    let v0 = reference.lift(&a)?;
    let (vt, states) = reference.layers(&v0, true)?;
    let b = plan.b(&states);
    let ref_norm = l2_norm(&vt);
    coarse
        .iter()
        .map(|(stride, p)| {
            let (vc, _) = p.layers(&v0.subsample(*stride)?, false)?;
            let grid_err = l2_norm(&vc.sub(&vt.subsample(*stride)?)?);
            let rel_err = if *stride == 1 { 0.0 } else { l2_norm(&refine(&vc, n_full, cfg.interpolation)?.sub(&vt)?) / ref_norm };
            Ok(SampleRecord { sample: index, n: p.n, rel_err, grid_err, bound_unit: plan.unit_bound(b, p.n) })
        })
        .collect()
}

fn aggregate(records: &[SampleRecord], resolutions: &[usize]) -> Vec<CurvePoint> {
    resolutions
        .iter()
        .map(|&n| {
            let at: Vec<&SampleRecord> = records.iter().filter(|r| r.n == n).collect();
            let rel: Vec<f64> = at.iter().map(|r| r.rel_err).collect();
            let grid: Vec<f64> = at.iter().map(|r| r.grid_err).collect();
            let bound: Vec<f64> = at.iter().map(|r| r.bound_unit).collect();
            CurvePoint {
                n,
                mean_rel_err: mean(&rel),
                std_rel_err: std_dev(&rel),
                mean_grid_err: mean(&grid),
                std_grid_err: std_dev(&grid),
                mean_bound_unit: mean(&bound),
                n_samples: at.len(),
            }
        })
        .collect()
}

fn positive_fit(points: &[CurvePoint], y: impl Fn(&CurvePoint) -> f64) -> Option<LinearFit> {
    let used: Vec<&CurvePoint> = points.iter().filter(|p| y(p) > 0.0).collect();
    let x: Vec<f64> = used.iter().map(|p| p.n as f64).collect();
    let v: Vec<f64> = used.iter().map(|p| y(p)).collect();
    loglog_fit(&x, &v).ok()
}

/// Fixed model; per input a reference pass at `N_full`, stride-subsampled
/// passes at every coarse `N`, and each final state interpolated back to
/// `N_full` (trigonometric by default).
pub fn run_discretization_sweep(cfg: &SweepConfig) -> Result<DiscretizationResult> {
    cfg.validate()?;
    let opts = &cfg.discretization;
    let activations: Vec<Option<Activation>> =
        if opts.activations.is_empty() { vec![None] } else { opts.activations.iter().copied().map(Some).collect() };
    let mut strides = opts.factors.clone();
    strides.sort_unstable_by(|a, b| b.cmp(a));
    strides.dedup();
    if let Some(&f) = strides.iter().find(|&&f| opts.n_full / f < 4) {
        return Err(Error::Config(format!("factor {f} leaves fewer than 4 points per axis")));
    }
    let mut curves = Vec::new();
    let mut regime = None;
    for act in activations {
        let model = build_model(cfg, act)?;
        let reg = decay_regime(&model, cfg.conv_mode);
        regime = Some(reg);
        let reference = model.prepare(opts.n_full, cfg.conv_mode)?;
        let coarse = strides
            .iter()
            .map(|&f| Ok((f, model.prepare(opts.n_full / f, cfg.conv_mode)?)))
            .collect::<Result<Vec<_>>>()?;
        let resolutions: Vec<usize> = coarse.iter().map(|(_, p)| p.n).collect();
        for &s in &opts.smoothness {
            let plan = BoundPlan::new(&model, s, reg);
            let per_sample = (0..cfg.samples)
                .into_par_iter()
                .map(|i| sample_records(cfg, &reference, &coarse, &plan, s, i))
                .collect::<Result<Vec<_>>>()?;
            let samples: Vec<SampleRecord> = per_sample.into_iter().flatten().collect();
            let points = aggregate(&samples, &resolutions);
            let bound = {
                let a = grf_input(cfg, opts.n_full, s, 0)?;
                let (_, states) = reference.layers(&reference.lift(&a)?, true)?;
                discretization_report(&model, &states, s, reg, resolutions[0], 1.0).ok()
            };
            curves.push(ErrorCurve {
                s,
                activation: model.arch.activation.name(),
                n_full: opts.n_full,
                fit: positive_fit(&points, |p| p.mean_rel_err),
                grid_fit: positive_fit(&points, |p| p.mean_grid_err),
                points,
                samples,
                bound,
            });
        }
    }
    let regime = regime.ok_or_else(|| Error::Config("no activation to sweep".into()))?;
    Ok(DiscretizationResult { seed: cfg.seed, regime, curves })
}

/// Smallest `C_{d,s}` with `C · bound ≥ measured grid error` for every
/// sample and resolution of the given curves.
pub fn calibrate_cds_curves(curves: &[ErrorCurve]) -> Result<f64> {
    let points: Vec<(f64, f64)> = curves.iter().flat_map(|c| c.calibration_points()).collect();
    crate::bounds::calibrate_cds(&points)
}
