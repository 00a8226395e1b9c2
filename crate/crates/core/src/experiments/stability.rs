use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_model, unit_direction, GrfOptions, SweepConfig, TAG_DIRECTION, TAG_INPUT, TAG_PAIR};
use crate::bounds::discrete_stack_lipschitz;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, GridField};
use crate::operator::PreparedModel;
use crate::random_fields::{derive_seed, sample_grf, GrfSpec};
use crate::stats::{linear_fit, mean, std_dev, LinearFit};

/// Statistics of `f(ε) = ‖L_N(v + εξ) - L_N(v)‖` at one amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPoint {
    pub epsilon: f64,
    pub mean_err: f64,
    pub std_err: f64,
}

/// Response of a layer stack to input perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCurve {
    pub depth: usize,
    pub n: usize,
    /// `f(0) = 0` exactly.
    pub points: Vec<PerturbationPoint>,
    /// Least-squares line of mean `f` against `ε`.
    pub fit: LinearFit,
    /// Largest `f(ε)/ε` over every trial and `ε > 0`.
    pub max_response_ratio: f64,
    /// Largest single `f` at the largest `ε`.
    pub max_err_at_largest_eps: f64,
    /// Max ratio over random input pairs, when estimated.
    pub empirical_lipschitz: Option<f64>,
    /// Theoretical `C_{N,T}` of the applied kernels.
    pub c_nt: f64,
    pub c_nt_l2: f64,
}

/// Per-depth curves of a depth sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSweep {
    pub seed: u64,
    pub curves: Vec<PerturbationCurve>,
}

fn grf_spec(grf: &GrfOptions, dim: usize, n: usize, channels: usize, s: f64, seed: u64) -> GrfSpec {
    GrfSpec {
        dim,
        n,
        smoothness: s,
        eps: grf.eps,
        seed,
        channels,
        convention: grf.convention,
        normalize: grf.normalize,
    }
}

/// Lifted GRF input `v_0`.
fn lifted_input(p: &PreparedModel, grf: &GrfOptions, s: f64, seed: u64) -> Result<GridField> {
    let arch = &p.model.arch;
    p.lift(&sample_grf(&grf_spec(grf, arch.dim, p.n, arch.in_channels, s, seed))?)
}

/// Largest `‖L(v_1) - L(v_2)‖ / ‖v_1 - v_2‖` over `pairs` lifted GRF pairs,
/// where `L` is the first `depth` layers.
pub fn estimate_empirical_lipschitz(
    p: &PreparedModel,
    depth: usize,
    pairs: usize,
    seed: u64,
    s: f64,
    grf: &GrfOptions,
) -> Result<f64> {
    let ratios = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let v1 = lifted_input(p, grf, s, derive_seed(seed, TAG_PAIR, 2 * i as u64))?;
            let v2 = lifted_input(p, grf, s, derive_seed(seed, TAG_PAIR, 2 * i as u64 + 1))?;
            let den = l2_norm(&v1.sub(&v2)?);
            if den == 0.0 {
                return Ok(0.0);
            }
            let o = p.layers_batch(&[v1, v2], depth)?;
            Ok(l2_norm(&o[0].sub(&o[1])?) / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

fn perturbation_curve(cfg: &SweepConfig, p: &PreparedModel, depth: usize, c_nt: (f64, f64)) -> Result<PerturbationCurve> {
    let opts = &cfg.stability;
    let eps = opts.epsilons.values()?;
    let dirs = opts.directions.max(1);
    let trials = (0..cfg.samples * dirs)
        .into_par_iter()
        .map(|t| {
            let i = t / dirs;
            let v = lifted_input(p, &cfg.grf, opts.smoothness, derive_seed(cfg.seed, TAG_INPUT, i as u64))?;
            let xi = unit_direction(v.dim, v.n, v.channels, derive_seed(cfg.seed, TAG_DIRECTION, t as u64))?;
            let along: Vec<f64> = std::iter::once(0.0).chain(eps.iter().copied()).collect();
            let outs = p.layers_along(&v, &xi, &along, depth)?;
            eps.iter()
                .zip(&outs[1..])
                .map(|(&e, out)| if e == 0.0 { Ok(0.0) } else { Ok(l2_norm(&out.sub(&outs[0])?)) })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let points: Vec<PerturbationPoint> = eps
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let f: Vec<f64> = trials.iter().map(|t| t[k]).collect();
            PerturbationPoint { epsilon: e, mean_err: mean(&f), std_err: std_dev(&f) }
        })
        .collect();
    let fit = linear_fit(&eps, &points.iter().map(|q| q.mean_err).collect::<Vec<_>>())?;
    let mut max_ratio: f64 = 0.0;
    for t in &trials {
        for (k, &e) in eps.iter().enumerate() {
            if e > 0.0 {
                max_ratio = max_ratio.max(t[k] / e);
            }
        }
    }
    let last = eps.len() - 1;
    Ok(PerturbationCurve {
        depth,
        n: p.n,
        points,
        fit,
        max_response_ratio: max_ratio,
        max_err_at_largest_eps: trials.iter().map(|t| t[last]).fold(0.0, f64::max),
        empirical_lipschitz: None,
        c_nt: c_nt.0,
        c_nt_l2: c_nt.1,
    })
}

/// Perturbation protocol on the configured stack, with the empirical
/// Lipschitz ratio over `stability.pairs` input pairs.
pub fn run_stability_sweep(cfg: &SweepConfig) -> Result<PerturbationCurve> {
    cfg.validate()?;
    let model = build_model(cfg, None)?;
    let n = cfg.stability.n;
    let lip = discrete_stack_lipschitz(&model, n, cfg.conv_mode)?;
    let p = model.prepare(n, cfg.conv_mode)?;
    let mut curve = perturbation_curve(cfg, &p, model.depth(), (lip.constant, lip.constant_l2))?;
    if cfg.stability.pairs > 0 {
        curve.empirical_lipschitz = Some(estimate_empirical_lipschitz(
            &p,
            model.depth(),
            cfg.stability.pairs,
            cfg.seed,
            cfg.stability.smoothness,
            &cfg.grf,
        )?);
    }
    Ok(curve)
}

/// Perturbation curves and empirical Lipschitz ratios for prefixes of one
/// model of depth `max(depths)`.
pub fn run_depth_sweep(cfg: &SweepConfig) -> Result<DepthSweep> {
    cfg.validate()?;
    let depths = &cfg.stability.depths;
    let top = depths.iter().copied().max().ok_or_else(|| Error::Config("depths must not be empty".into()))?;
    if depths.contains(&0) {
        return Err(Error::Config("depths must be positive".into()));
    }
    let mut deep = cfg.clone();
    deep.arch.depth = top;
    let model = build_model(&deep, None)?;
    if model.depth() < top {
        return Err(Error::Config(format!("model has {} layers, depth {top} requested", model.depth())));
    }
    let n = cfg.stability.n;
    let lip = discrete_stack_lipschitz(&model, n, cfg.conv_mode)?;
    let p = model.prepare(n, cfg.conv_mode)?;
    let mut curves = Vec::with_capacity(depths.len());
    for &t in depths {
        let c: f64 = lip.per_layer[..t].iter().map(|l| l.factor).product();
        let c2: f64 = model.layers[..t]
            .iter()
            .zip(&lip.per_layer)
            .map(|(l, q)| l.activation.lipschitz() * (q.weight_norm + q.l2))
            .product();
        let mut curve = perturbation_curve(cfg, &p, t, (c, c2))?;
        if cfg.stability.pairs > 0 {
            curve.empirical_lipschitz = Some(estimate_empirical_lipschitz(
                &p,
                t,
                cfg.stability.pairs,
                cfg.seed,
                cfg.stability.smoothness,
                &cfg.grf,
            )?);
        }
        curves.push(curve);
    }
    Ok(DepthSweep { seed: cfg.seed, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExperimentKind, Range};
    use crate::kernels::{ConvMode, Kernel, SsnoForm, SsnoKernel};
    use crate::linalg::Matrix;
    use crate::operator::{Activation, KernelSpec, Layer, Mlp, OperatorModel, WEIGHTS_VERSION};

    fn small() -> SweepConfig {
        let mut c = SweepConfig::new(ExperimentKind::Stability);
        c.arch.width = 4;
        c.arch.depth = 1;
        c.arch.kernel = KernelSpec::Ssno { modes: 4, form: SsnoForm::Sum };
        c.samples = 2;
        c.stability.n = 128;
        c.stability.directions = 2;
        c.stability.pairs = 10;
        c.stability.epsilons = Range { start: 0.0, stop: 0.4, step: 0.1 };
        c.stability.depths = vec![1, 3];
        c
    }

    /// `W = scale I`, zero kernel, identity activation.
    fn linear_model(scale: f64) -> OperatorModel {
        let mut zero = SsnoKernel::random(1, 1, 2, 2, SsnoForm::Sum, 0).unwrap();
        zero.amplitude.iter_mut().for_each(|a| *a = 0.0);
        let mut w = Matrix::identity(2);
        w.data.iter_mut().for_each(|v| *v *= scale);
        let arch = crate::operator::ArchSpec {
            dim: 1,
            in_channels: 2,
            out_channels: 2,
            width: 2,
            depth: 1,
            kernel: KernelSpec::Ssno { modes: 1, form: SsnoForm::Sum },
            activation: Activation::Identity,
        };
        OperatorModel {
            version: WEIGHTS_VERSION,
            arch,
            lift: Mlp::identity(2),
            layers: vec![Layer { w, b: vec![0.0; 2], kernel: Kernel::Ssno(zero), activation: Activation::Identity }],
            project: Mlp::identity(2),
        }
    }

    #[test]
    fn identity_and_zero_models() {
        let grf = GrfOptions::default();
        for (scale, expect) in [(1.0, 1.0), (0.0, 0.0)] {
            let m = linear_model(scale);
            let p = m.prepare(64, ConvMode::SampledKernelDft).unwrap();
            let l = estimate_empirical_lipschitz(&p, 1, 5, 3, 2.0, &grf).unwrap();
            assert!((l - expect).abs() < 1e-10, "{l}");
        }
    }

    #[test]
    fn zero_amplitude_has_zero_response() {
        let r = run_stability_sweep(&small()).unwrap();
        assert_eq!(r.points[0].mean_err, 0.0);
        assert_eq!(r.points[0].std_err, 0.0);
        assert!(r.max_response_ratio <= r.c_nt);
        assert!(r.empirical_lipschitz.unwrap() <= r.c_nt);
    }

    #[test]
    fn depth_one_matches_single_layer_sweep() {
        let cfg = small();
        let d = run_depth_sweep(&cfg).unwrap();
        let s = run_stability_sweep(&cfg).unwrap();
        assert_eq!(d.curves[0], s);
        assert!(d.curves[1].c_nt >= 0.0);
        for c in &d.curves {
            assert!(c.empirical_lipschitz.unwrap() <= c.c_nt);
        }
    }
}
