//! Closed-form discretization-error, Lipschitz and input-to-state bounds.
//!
//! The discretization bound for a `T`-layer stack on `T^d_N` is
//! `N^β B (A^T - 1)/(A - 1)` (or `B T N^β` when `A = 1`), with
//! `A = sup_t L_σ (‖W_t‖_op + S_t)` where `S_t` bounds `sup_z ‖K_t(z)‖_op`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sobolev_norm, GridField};
use crate::kernels::{applied_kernel_norms, spectrum_table, ConvMode};
use crate::operator::OperatorModel;

pub use crate::stats::{loglog_fit, LinearFit};

/// Spectral decay assumption on the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayRegime {
    /// `K̂(ξ) = 0` for `‖ξ‖_∞ ≥ k_cutoff`.
    Cutoff { k_cutoff: usize },
    /// `‖K̂(ξ)‖ ≲ (1 + ‖ξ‖)^{-alpha}`.
    Polynomial { alpha: f64 },
}

/// Per-layer ingredients of the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerTerms {
    pub weight_norm: f64,
    /// Bound on `sup_z ‖K_t(z)‖_op`.
    pub kernel_sup: f64,
    /// `L_σ (‖W_t‖ + kernel_sup)`.
    pub growth: f64,
    /// This layer's contribution to `B` (the supremum over layers is taken).
    pub b_term: f64,
}

/// Discretization-error bound and the constants behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub regime: DecayRegime,
    pub n: usize,
    pub depth: usize,
    pub dim: usize,
    /// Requested smoothness.
    pub s: f64,
    /// Smoothness used, after capping for piecewise-linear activations.
    pub s_effective: f64,
    pub s_capped: bool,
    /// Multiplier `C_{d,s}` applied to `B`.
    pub cds: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub bound_value: f64,
    pub per_layer: Vec<LayerTerms>,
}

/// `A = sup_t L_σ (‖W_t‖ + S_t)` with per-layer terms.
pub fn constant_a(model: &OperatorModel) -> (f64, Vec<(f64, f64, f64)>) {
    let terms: Vec<(f64, f64, f64)> = model
        .layers
        .iter()
        .map(|l| {
            let w = l.weight_norm();
            let s = l.kernel.sup_bound();
            (w, s, l.activation.lipschitz() * (w + s))
        })
        .collect();
    let a = terms.iter().map(|t| t.2).fold(0.0, f64::max);
    (a, terms)
}

/// Smoothness actually available to a model: piecewise-linear activations cap it.
pub fn effective_smoothness(model: &OperatorModel, s: f64) -> (f64, bool) {
    let cap = model.layers.iter().filter_map(|l| l.activation.regularity_cap()).fold(f64::INFINITY, f64::min);
    if s > cap {
        (cap, true)
    } else {
        (s, false)
    }
}

/// Rate exponent `β`: `d/2 - s` under a cutoff, `max(d/2 - s, d - α)` under polynomial decay.
pub fn beta(dim: usize, s: f64, regime: DecayRegime) -> f64 {
    let d = dim as f64;
    match regime {
        DecayRegime::Cutoff { .. } => d / 2.0 - s,
        DecayRegime::Polynomial { alpha } => (d / 2.0 - s).max(d - alpha),
    }
}

/// Per-layer multipliers of `‖v_t‖_{H^s}` in `B`.
///
/// Cutoff: `L_σ C K_c^{d/2+s} ‖K̂_t‖_∞` with `‖K̂_t‖_∞` over resolved modes.
/// Polynomial: `L_σ C`.
pub fn b_factors(model: &OperatorModel, s: f64, regime: DecayRegime, cds: f64) -> Vec<f64> {
    let d = model.dim() as f64;
    model
        .layers
        .iter()
        .map(|l| {
            let ls = l.activation.lipschitz();
            match regime {
                DecayRegime::Cutoff { k_cutoff } => {
                    ls * cds * (k_cutoff as f64).powf(d / 2.0 + s) * l.kernel.spectral_sup(k_cutoff)
                }
                DecayRegime::Polynomial { .. } => ls * cds,
            }
        })
        .collect()
}

/// Per-layer `B` terms from the hidden states `v_0, ..., v_{T-1}` entering each layer.
pub fn b_terms(model: &OperatorModel, states: &[GridField], s: f64, regime: DecayRegime, cds: f64) -> Result<Vec<f64>> {
    if states.len() < model.depth() {
        return Err(Error::Shape(format!("need {} layer inputs, got {}", model.depth(), states.len())));
    }
    Ok(b_factors(model, s, regime, cds).into_iter().zip(states).map(|(f, v)| f * sobolev_norm(v, s)).collect())
}

/// `N^β B (A^T - 1)/(A - 1)`, or `B T N^β` when `|A - 1| < 1e-12`.
pub fn discretization_bound(a: f64, b: f64, beta: f64, n: usize, depth: usize) -> f64 {
    let nb = (n as f64).powf(beta);
    let t = depth as i32;
    if (a - 1.0).abs() < 1e-12 {
        b * depth as f64 * nb
    } else {
        nb * b * (a.powi(t) - 1.0) / (a - 1.0)
    }
}

/// Full report for one model, one input's reference states and one grid size.
pub fn discretization_report(
    model: &OperatorModel,
    states: &[GridField],
    s: f64,
    regime: DecayRegime,
    n: usize,
    cds: f64,
) -> Result<BoundReport> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("smoothness must be positive, got {s}")));
    }
    if let DecayRegime::Cutoff { k_cutoff } = regime {
        if k_cutoff == 0 || k_cutoff > n / 2 {
            return Err(Error::Domain(format!("cutoff {k_cutoff} must lie in 1..={}", n / 2)));
        }
    }
    let (s_eff, capped) = effective_smoothness(model, s);
    let (a, terms) = constant_a(model);
    let bt = b_terms(model, states, s_eff, regime, cds)?;
    let b = bt.iter().copied().fold(0.0, f64::max);
    let be = beta(model.dim(), s_eff, regime);
    let per_layer = terms
        .iter()
        .zip(&bt)
        .map(|(&(w, k, g), &bb)| LayerTerms { weight_norm: w, kernel_sup: k, growth: g, b_term: bb })
        .collect();
    Ok(BoundReport {
        regime,
        n,
        depth: model.depth(),
        dim: model.dim(),
        s,
        s_effective: s_eff,
        s_capped: capped,
        cds,
        a,
        b,
        beta: be,
        bound_value: discretization_bound(a, b, be, n, model.depth()),
        per_layer,
    })
}

/// `Π_t L_σ (‖W_t‖ + ∫‖K_t‖_op)` with the integral replaced by its closed-form bound.
pub fn continuous_stack_lipschitz(model: &OperatorModel) -> f64 {
    model
        .layers
        .iter()
        .map(|l| l.activation.lipschitz() * (l.weight_norm() + l.kernel.l1_bound()))
        .product()
}

/// Per-layer discrete Lipschitz ingredients on one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLayerLipschitz {
    pub weight_norm: f64,
    /// `(1/N^d) Σ_x ‖K_eff(x)‖_op`.
    pub young: f64,
    /// `(Σ_x ‖K_eff(x)‖_op²)^{1/2}`.
    pub l2: f64,
    pub factor: f64,
}

/// Lipschitz constant of the discretized layer stack on `T^d_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLipschitz {
    pub n: usize,
    pub mode: ConvMode,
    /// `C_{N,T} = Π_t L_σ (‖W_t‖ + (1/N^d) Σ_x ‖K_eff,t(x)‖_op)`.
    pub constant: f64,
    /// Same product with the unnormalized `ℓ²` kernel norm instead.
    pub constant_l2: f64,
    pub per_layer: Vec<DiscreteLayerLipschitz>,
}

/// `C_{N,T}` for the kernels as applied on the `N`-grid under `mode`, so the
/// constant bounds the map that is actually evaluated.
pub fn discrete_stack_lipschitz(model: &OperatorModel, n: usize, mode: ConvMode) -> Result<DiscreteLipschitz> {
    let mut per_layer = Vec::with_capacity(model.depth());
    for l in &model.layers {
        let norms = applied_kernel_norms(&spectrum_table(&l.kernel, n, mode)?);
        let w = l.weight_norm();
        per_layer.push(DiscreteLayerLipschitz {
            weight_norm: w,
            young: norms.young,
            l2: norms.l2,
            factor: l.activation.lipschitz() * (w + norms.young),
        });
    }
    let constant = per_layer.iter().map(|p| p.factor).product();
    let constant_l2 = model
        .layers
        .iter()
        .zip(&per_layer)
        .map(|(l, p)| l.activation.lipschitz() * (p.weight_norm + p.l2))
        .product();
    Ok(DiscreteLipschitz { n, mode, constant, constant_l2, per_layer })
}

/// `C_{N,T} δ + discretization bound`.
pub fn iss_total_bound(c_nt: f64, delta: f64, discretization: f64) -> f64 {
    c_nt * delta + discretization
}

/// Smallest multiplier `C` with `C · bound ≥ measured` at every `(measured, bound)` point.
pub fn calibrate_cds(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Domain("calibration needs at least one point".into()));
    }
    let mut c: f64 = 0.0;
    for &(m, b) in points {
        if !(b > 0.0) || !m.is_finite() || m < 0.0 {
            return Err(Error::Domain(format!("invalid calibration point (measured {m}, bound {b})")));
        }
        c = c.max(m / b);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SsnoForm;
    use crate::operator::{model_random_init, Activation, ArchSpec, KernelSpec};

    fn model(depth: usize, act: Activation) -> OperatorModel {
        let arch = ArchSpec {
            dim: 1,
            in_channels: 1,
            out_channels: 1,
            width: 3,
            depth,
            kernel: KernelSpec::Ssno { modes: 4, form: SsnoForm::Sum },
            activation: act,
        };
        model_random_init(&arch, 4).unwrap()
    }

    #[test]
    fn closed_form_growth() {
        let v = discretization_bound(2.0, 1.0, -1.0, 16, 3);
        assert!((v - 7.0 / 16.0).abs() < 1e-15);
        assert!((discretization_bound(1.0, 2.0, -0.5, 4, 5) - 5.0).abs() < 1e-15);
        assert_eq!(discretization_bound(3.0, 1.0, -1.0, 16, 0), 0.0);
    }

    #[test]
    fn beta_by_regime() {
        assert_eq!(beta(1, 2.0, DecayRegime::Cutoff { k_cutoff: 8 }), -1.5);
        assert_eq!(beta(1, 2.0, DecayRegime::Polynomial { alpha: 1.0 }), 0.0);
        assert_eq!(beta(2, 3.0, DecayRegime::Polynomial { alpha: 10.0 }), -2.0);
    }

    #[test]
    fn relu_caps_smoothness() {
        let m = model(2, Activation::Relu);
        assert_eq!(effective_smoothness(&m, 4.0), (1.49, true));
        assert_eq!(effective_smoothness(&model(2, Activation::Gelu), 4.0), (4.0, false));
    }

    #[test]
    fn calibration_picks_worst_ratio() {
        assert_eq!(calibrate_cds(&[(2.5, 1.0)]).unwrap(), 2.5);
        assert_eq!(calibrate_cds(&[(1.0, 4.0), (3.0, 2.0)]).unwrap(), 1.5);
        assert!(calibrate_cds(&[]).is_err());
        assert!(calibrate_cds(&[(1.0, 0.0)]).is_err());
    }

    #[test]
    fn discrete_constant_tends_below_continuous() {
        let m = model(3, Activation::Gelu);
        let c = continuous_stack_lipschitz(&m);
        let d = discrete_stack_lipschitz(&m, 1024, ConvMode::SampledKernelDft).unwrap();
        assert!(d.constant <= c * 1.01, "{} vs {c}", d.constant);
    }

    #[test]
    fn report_is_monotone_in_n() {
        let m = model(2, Activation::Gelu);
        let states = vec![GridField::from_fn(1, 64, 3, |x, c| (x[0] * 6.0 + c as f64).sin()).unwrap(); 2];
        let r = DecayRegime::Cutoff { k_cutoff: 8 };
        let a = discretization_report(&m, &states, 2.0, r, 32, 1.0).unwrap();
        let b = discretization_report(&m, &states, 2.0, r, 64, 1.0).unwrap();
        assert!(b.bound_value < a.bound_value);
        assert!(discretization_report(&m, &states, 2.0, DecayRegime::Cutoff { k_cutoff: 40 }, 64, 1.0).is_err());
    }
}
