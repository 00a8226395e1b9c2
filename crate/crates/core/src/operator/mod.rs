//! Neural-operator layers `v ↦ σ(W v + b + K * v)`, lifting and projection
//! networks, and whole models with a versioned JSON weight format.

mod activation;

use std::path::Path;

use rand_distr::{Distribution, Normal};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use activation::Activation;

use crate::error::{Error, Result};
use crate::grid::{dft_forward, dft_inverse_real_part, GridField, KernelSpectrum, PackedSpectrum, SpectralField};
use crate::kernels::{spectrum_table, ConvMode, FnoKernel, Kernel, SsnoForm, SsnoKernel};
use crate::linalg::Matrix;
use crate::random_fields::{derive_seed, keyed_rng};

/// Version written to and required from weight files.
pub const WEIGHTS_VERSION: u32 = 1;

/// Pointwise two-layer network `x ↦ W₂ σ(W₁ x + b₁) + b₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    #[serde(default = "tanh")]
    pub activation: Activation,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

fn tanh() -> Activation {
    Activation::Tanh
}

impl Mlp {
    /// Identity map on `d` channels.
    pub fn identity(d: usize) -> Self {
        Mlp {
            w1: Matrix::identity(d),
            b1: vec![0.0; d],
            activation: Activation::Identity,
            w2: Matrix::identity(d),
            b2: vec![0.0; d],
        }
    }

    pub fn d_in(&self) -> usize {
        self.w1.cols
    }

    pub fn d_out(&self) -> usize {
        self.w2.rows
    }

    pub fn validate(&self) -> Result<()> {
        self.w1.validate()?;
        self.w2.validate()?;
        if self.b1.len() != self.w1.rows || self.w2.cols != self.w1.rows || self.b2.len() != self.w2.rows {
            return Err(Error::Shape(format!(
                "mlp shapes: w1 {}x{}, b1 {}, w2 {}x{}, b2 {}",
                self.w1.rows,
                self.w1.cols,
                self.b1.len(),
                self.w2.rows,
                self.w2.cols,
                self.b2.len()
            )));
        }
        Ok(())
    }

    /// Random `tanh` network with `N(0, 1/fan_in)` weights and zero biases.
    pub fn random(d_in: usize, hidden: usize, d_out: usize, seed: u64) -> Self {
        let mut rng = keyed_rng(seed, 0x3170);
        let w1 = gaussian_matrix(hidden, d_in, &mut rng);
        let w2 = gaussian_matrix(d_out, hidden, &mut rng);
        Mlp { w1, b1: vec![0.0; hidden], activation: Activation::Tanh, w2, b2: vec![0.0; d_out] }
    }

    pub fn apply(&self, f: &GridField) -> Result<GridField> {
        if f.channels != self.d_in() {
            return Err(Error::Shape(format!("mlp expects {} channels, field has {}", self.d_in(), f.channels)));
        }
        let (hid, out_c) = (self.w1.rows, self.d_out());
        let mut out = GridField::zeros(f.dim, f.n, out_c)?;
        let mut h = vec![0.0; hid];
        for p in 0..f.points() {
            let x = &f.values[p * f.channels..(p + 1) * f.channels];
            h.copy_from_slice(&self.b1);
            self.w1.matvec_into(x, &mut h, true);
            self.activation.apply_slice(&mut h);
            let y = &mut out.values[p * out_c..(p + 1) * out_c];
            y.copy_from_slice(&self.b2);
            self.w2.matvec_into(&h, y, true);
        }
        Ok(out)
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Matrix {
    let nd = Normal::new(0.0, (1.0 / cols as f64).sqrt()).expect("valid normal");
    Matrix { rows, cols, data: (0..rows * cols).map(|_| nd.sample(rng)).collect() }
}

/// One layer `v ↦ σ(W v + b + K * v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(rename = "W")]
    pub w: Matrix,
    pub b: Vec<f64>,
    pub kernel: Kernel,
    pub activation: Activation,
}

impl Layer {
    pub fn d_in(&self) -> usize {
        self.w.cols
    }

    pub fn d_out(&self) -> usize {
        self.w.rows
    }

    pub fn validate(&self) -> Result<()> {
        self.w.validate()?;
        self.kernel.validate()?;
        if self.b.len() != self.w.rows || self.kernel.d_out() != self.w.rows || self.kernel.d_in() != self.w.cols {
            return Err(Error::Shape(format!(
                "layer shapes: W {}x{}, b {}, kernel {}x{}",
                self.w.rows,
                self.w.cols,
                self.b.len(),
                self.kernel.d_out(),
                self.kernel.d_in()
            )));
        }
        Ok(())
    }

    /// Applies the layer with a precomputed convolution table.
    pub fn apply_with(&self, table: &KernelSpectrum, v: &GridField) -> Result<GridField> {
        self.apply_packed(&PackedSpectrum::new(table), v)
    }

    /// Applies the layer with a packed convolution table.
    pub fn apply_packed(&self, table: &PackedSpectrum, v: &GridField) -> Result<GridField> {
        Ok(self.apply_packed_batch(table, std::slice::from_ref(v))?.remove(0))
    }

    /// `K v + W v + b` before the activation, batched like
    /// [`Layer::apply_packed_batch`].
    pub fn preactivation_batch(&self, table: &PackedSpectrum, vs: &[GridField]) -> Result<Vec<GridField>> {
        for v in vs {
            if v.channels != self.d_in() || table.n != v.n || table.dim != v.dim {
                return Err(Error::Shape(format!(
                    "layer on (d={}, N={}, H={}) got field (d={}, N={}, H={})",
                    table.dim,
                    table.n,
                    self.d_in(),
                    v.dim,
                    v.n,
                    v.channels
                )));
            }
        }
        let vhs: Vec<SpectralField> = vs.iter().map(dft_forward).collect();
        let mut whs = vs
            .iter()
            .map(|v| SpectralField::zeros(v.dim, v.n, self.d_out()))
            .collect::<Result<Vec<_>>>()?;
        {
            let ins: Vec<&[Complex64]> = vhs.iter().map(|u| u.coeffs.as_slice()).collect();
            let mut outs: Vec<&mut [Complex64]> = whs.iter_mut().map(|u| u.coeffs.as_mut_slice()).collect();
            table.apply_batch(&ins, &mut outs);
        }
        let (hi, ho) = (self.d_in(), self.d_out());
        let mut tmp = vec![0.0; ho];
        Ok(vs
            .iter()
            .zip(&whs)
            .map(|(v, wh)| {
                let mut out = dft_inverse_real_part(wh);
                for p in 0..v.points() {
                    let x = &v.values[p * hi..(p + 1) * hi];
                    tmp.copy_from_slice(&self.b);
                    self.w.matvec_into(x, &mut tmp, true);
                    let y = &mut out.values[p * ho..(p + 1) * ho];
                    for (yo, t) in y.iter_mut().zip(&tmp) {
                        *yo += t;
                    }
                }
                out
            })
            .collect())
    }

    /// Applies the layer to several fields sharing one pass over the table;
    /// each result equals [`Layer::apply_packed`] on that field.
    pub fn apply_packed_batch(&self, table: &PackedSpectrum, vs: &[GridField]) -> Result<Vec<GridField>> {
        let mut zs = self.preactivation_batch(table, vs)?;
        zs.iter_mut().for_each(|z| self.activation.apply_slice(&mut z.values));
        Ok(zs)
    }

    /// `‖W‖_op` by power iteration.
    pub fn weight_norm(&self) -> f64 {
        self.w.op_norm()
    }
}

/// Applies one layer on the grid of `v`.
pub fn layer_apply(layer: &Layer, v: &GridField, mode: ConvMode) -> Result<GridField> {
    let table = spectrum_table(&layer.kernel, v.n, mode)?;
    layer.apply_with(&table, v)
}

/// Kernel family and size used by random initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Ssno {
        modes: usize,
        #[serde(default)]
        form: SsnoForm,
    },
    Fno {
        modes: usize,
    },
}

/// Shape of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    pub dim: usize,
    #[serde(default = "one")]
    pub in_channels: usize,
    #[serde(default = "one")]
    pub out_channels: usize,
    pub width: usize,
    pub depth: usize,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub activation: Activation,
}

fn one() -> usize {
    1
}

/// Lifting network, `T` layers and projection network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorModel {
    pub version: u32,
    pub arch: ArchSpec,
    pub lift: Mlp,
    pub layers: Vec<Layer>,
    pub project: Mlp,
}

const TAG_LIFT: u64 = 1;
const TAG_LAYER: u64 = 2;
const TAG_KERNEL: u64 = 3;
const TAG_PROJECT: u64 = 4;

impl OperatorModel {
    pub fn dim(&self) -> usize {
        self.arch.dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != WEIGHTS_VERSION {
            return Err(Error::Version { found: self.version, expected: WEIGHTS_VERSION });
        }
        self.lift.validate()?;
        self.project.validate()?;
        let mut width = self.lift.d_out();
        for (t, l) in self.layers.iter().enumerate() {
            l.validate()?;
            if l.d_in() != width {
                return Err(Error::Shape(format!("layer {t} expects {} channels, receives {width}", l.d_in())));
            }
            if l.kernel.dim() != self.arch.dim {
                return Err(Error::Shape(format!("layer {t} kernel has dimension {}", l.kernel.dim())));
            }
            width = l.d_out();
        }
        if self.project.d_in() != width {
            return Err(Error::Shape(format!("projection expects {} channels, receives {width}", self.project.d_in())));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(s)?;
        let found = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != WEIGHTS_VERSION {
            return Err(Error::Version { found, expected: WEIGHTS_VERSION });
        }
        let m: OperatorModel = serde_json::from_value(raw)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        OperatorModel::from_json_str(&s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    /// Precomputes the convolution tables for grid size `n`.
    pub fn prepare(&self, n: usize, mode: ConvMode) -> Result<PreparedModel<'_>> {
        let tables = self
            .layers
            .iter()
            .map(|l| Ok(PackedSpectrum::new(&spectrum_table(&l.kernel, n, mode)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedModel { model: self, n, mode, tables })
    }
}

/// Model with convolution tables fixed for one grid size.
#[derive(Debug, Clone)]
pub struct PreparedModel<'a> {
    pub model: &'a OperatorModel,
    pub n: usize,
    pub mode: ConvMode,
    pub tables: Vec<PackedSpectrum>,
}

impl PreparedModel<'_> {
    pub fn lift(&self, a: &GridField) -> Result<GridField> {
        self.model.lift.apply(a)
    }

    pub fn project(&self, v: &GridField) -> Result<GridField> {
        self.model.project.apply(v)
    }

    /// Runs the layers on `v_0`; with `capture`, also returns `v_0 .. v_T`.
    pub fn layers(&self, v0: &GridField, capture: bool) -> Result<(GridField, Vec<GridField>)> {
        self.layers_range(v0, self.tables.len(), capture)
    }

    /// Runs the first `depth` layers.
    pub fn layers_range(&self, v0: &GridField, depth: usize, capture: bool) -> Result<(GridField, Vec<GridField>)> {
        if v0.n != self.n {
            return Err(Error::Shape(format!("model prepared for N={} got N={}", self.n, v0.n)));
        }
        let mut states = Vec::new();
        let mut v = v0.clone();
        for (layer, table) in self.model.layers.iter().zip(&self.tables).take(depth) {
            let next = layer.apply_packed(table, &v)?;
            if capture {
                states.push(std::mem::replace(&mut v, next));
            } else {
                v = next;
            }
        }
        if capture {
            states.push(v.clone());
        }
        Ok((v, states))
    }

    /// Runs the first `depth` layers on several inputs at once; each output
    /// equals the corresponding [`PreparedModel::layers_range`] result.
    pub fn layers_batch(&self, v0s: &[GridField], depth: usize) -> Result<Vec<GridField>> {
        if let Some(v) = v0s.iter().find(|v| v.n != self.n) {
            return Err(Error::Shape(format!("model prepared for N={} got N={}", self.n, v.n)));
        }
        let mut vs = v0s.to_vec();
        for (layer, table) in self.model.layers.iter().zip(&self.tables).take(depth) {
            vs = layer.apply_packed_batch(table, &vs)?;
        }
        Ok(vs)
    }

    /// Runs the first `depth` layers on `v + e ξ` for every `e` in `eps`.
    /// The first layer is affine up to its activation, so its linear part is
    /// evaluated on `v` and `ξ` only.
    pub fn layers_along(&self, v: &GridField, xi: &GridField, eps: &[f64], depth: usize) -> Result<Vec<GridField>> {
        if depth == 0 {
            return eps.iter().map(|&e| v.add_scaled(xi, e)).collect();
        }
        if v.n != self.n {
            return Err(Error::Shape(format!("model prepared for N={} got N={}", self.n, v.n)));
        }
        let layer = &self.model.layers[0];
        let z = layer.preactivation_batch(&self.tables[0], &[v.clone(), xi.clone()])?;
        let h = layer.d_out();
        let dz: Vec<f64> = z[1].values.iter().enumerate().map(|(k, x)| x - layer.b[k % h]).collect();
        let firsts = eps
            .iter()
            .map(|&e| {
                let mut f = z[0].clone();
                f.values.iter_mut().zip(&dz).for_each(|(y, d)| *y = layer.activation.apply(*y + e * d));
                f
            })
            .collect::<Vec<_>>();
        let mut vs = firsts;
        for (layer, table) in self.model.layers.iter().zip(&self.tables).take(depth).skip(1) {
            vs = layer.apply_packed_batch(table, &vs)?;
        }
        Ok(vs)
    }

    /// Lift, layers and projection.
    pub fn forward(&self, a: &GridField) -> Result<GridField> {
        let v0 = self.lift(a)?;
        let (vt, _) = self.layers(&v0, false)?;
        self.project(&vt)
    }
}

/// Output of [`stack_apply`].
#[derive(Debug, Clone)]
pub struct StackOutput {
    pub output: GridField,
    /// Hidden states `v_0, ..., v_T` when captured.
    pub states: Vec<GridField>,
}

/// Full forward pass on the grid of `a`.
pub fn stack_apply(model: &OperatorModel, a: &GridField, mode: ConvMode, capture: bool) -> Result<StackOutput> {
    let prepared = model.prepare(a.n, mode)?;
    let v0 = prepared.lift(a)?;
    let (vt, states) = prepared.layers(&v0, capture)?;
    Ok(StackOutput { output: prepared.project(&vt)?, states })
}

/// Seeded random model.
///
/// Layer `t` draws `W ~ N(0, 1/d_t)` entries and zero bias from a stream keyed
/// by `(seed, t)`, so deeper models extend shallower ones. Lifting and
/// projection are `tanh` networks of hidden width `2 max(d_in, d_out)`.
pub fn model_random_init(arch: &ArchSpec, seed: u64) -> Result<OperatorModel> {
    if !(arch.dim == 1 || arch.dim == 2) {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {}", arch.dim)));
    }
    if arch.width == 0 || arch.in_channels == 0 || arch.out_channels == 0 {
        return Err(Error::Domain("channel counts must be positive".into()));
    }
    let h = arch.width;
    let lift = Mlp::random(arch.in_channels, 2 * arch.in_channels.max(h), h, derive_seed(seed, TAG_LIFT, 0));
    let project = Mlp::random(h, 2 * h.max(arch.out_channels), arch.out_channels, derive_seed(seed, TAG_PROJECT, 0));
    let mut layers = Vec::with_capacity(arch.depth);
    for t in 0..arch.depth {
        let mut rng = keyed_rng(derive_seed(seed, TAG_LAYER, t as u64), 0);
        let w = gaussian_matrix(h, h, &mut rng);
        let ks = derive_seed(seed, TAG_KERNEL, t as u64);
        let kernel = match arch.kernel {
            KernelSpec::Ssno { modes, form } => Kernel::Ssno(SsnoKernel::random(arch.dim, modes, h, h, form, ks)?),
            KernelSpec::Fno { modes } => Kernel::Fno(FnoKernel::random(arch.dim, modes, h, h, ks)?),
        };
        layers.push(Layer { w, b: vec![0.0; h], kernel, activation: arch.activation });
    }
    let m = OperatorModel { version: WEIGHTS_VERSION, arch: arch.clone(), lift, layers, project };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_norm;
    use crate::kernels::SsnoForm;
    use crate::random_fields::{sample_grf, GrfSpec};
    use proptest::prelude::*;

    fn arch(depth: usize, act: Activation) -> ArchSpec {
        ArchSpec {
            dim: 1,
            in_channels: 1,
            out_channels: 1,
            width: 4,
            depth,
            kernel: KernelSpec::Ssno { modes: 3, form: SsnoForm::Sum },
            activation: act,
        }
    }

    fn zero_kernel(h: usize) -> Kernel {
        let mut k = SsnoKernel::random(1, 1, h, h, SsnoForm::Sum, 0).unwrap();
        k.amplitude = vec![0.0];
        Kernel::Ssno(k)
    }

    #[test]
    fn identity_layer_with_zero_kernel_is_identity() {
        let layer = Layer { w: Matrix::identity(2), b: vec![0.0; 2], kernel: zero_kernel(2), activation: Activation::Identity };
        let v = GridField::from_fn(1, 32, 2, |x, c| (x[0] * 6.0).sin() - c as f64).unwrap();
        let w = layer_apply(&layer, &v, ConvMode::SampledKernelDft).unwrap();
        for (a, b) in v.values.iter().zip(&w.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn relu_layer_with_zero_weights_returns_relu_of_bias() {
        let layer =
            Layer { w: Matrix::zeros(2, 2), b: vec![-1.0, 2.0], kernel: zero_kernel(2), activation: Activation::Relu };
        let v = GridField::from_fn(1, 8, 2, |x, _| x[0]).unwrap();
        let w = layer_apply(&layer, &v, ConvMode::SampledKernelDft).unwrap();
        assert!(w.values.chunks(2).all(|p| p[0] == 0.0 && p[1] == 2.0));
    }

    #[test]
    fn identity_model_passes_input_through() {
        let m = OperatorModel {
            version: WEIGHTS_VERSION,
            arch: arch(0, Activation::Identity),
            lift: Mlp::identity(1),
            layers: vec![],
            project: Mlp::identity(1),
        };
        let a = GridField::from_fn(1, 16, 1, |x, _| x[0] * x[0]).unwrap();
        assert_eq!(stack_apply(&m, &a, ConvMode::SampledKernelDft, false).unwrap().output, a);
    }

    #[test]
    fn captured_states_cover_every_layer() {
        let m = model_random_init(&arch(3, Activation::Gelu), 5).unwrap();
        let a = sample_grf(&GrfSpec::new(1, 64, 2.0, 1)).unwrap();
        let out = stack_apply(&m, &a, ConvMode::AnalyticSpectrumCutoff(8), true).unwrap();
        assert_eq!(out.states.len(), 4);
        assert!(out.states.iter().all(|s| s.channels == 4));
    }

    #[test]
    fn deeper_models_extend_shallower_ones() {
        let a = model_random_init(&arch(1, Activation::Gelu), 9).unwrap();
        let b = model_random_init(&arch(4, Activation::Gelu), 9).unwrap();
        assert_eq!(a.layers[0], b.layers[0]);
        assert_eq!(a.lift, b.lift);
    }

    #[test]
    fn weights_round_trip_and_version_check() {
        let m = model_random_init(&arch(2, Activation::Relu), 1).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(OperatorModel::from_json_str(&s).unwrap(), m);
        let bad = s.replacen("\"version\":1", "\"version\":7", 1);
        assert!(matches!(OperatorModel::from_json_str(&bad), Err(Error::Version { found: 7, .. })));
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let m = model_random_init(&arch(1, Activation::Gelu), 1).unwrap();
        let v = GridField::zeros(1, 16, 3).unwrap();
        assert!(layer_apply(&m.layers[0], &v, ConvMode::SampledKernelDft).is_err());
    }

    #[test]
    fn batched_layers_match_single_evaluation() {
        let m = model_random_init(&arch(2, Activation::Gelu), 5).unwrap();
        let p = m.prepare(64, ConvMode::SampledKernelDft).unwrap();
        let vs: Vec<GridField> =
            (0..3).map(|s| p.lift(&sample_grf(&GrfSpec::new(1, 64, 1.0, s)).unwrap()).unwrap()).collect();
        let batch = p.layers_batch(&vs, 2).unwrap();
        for (v, b) in vs.iter().zip(&batch) {
            assert_eq!(&p.layers(v, false).unwrap().0, b);
        }
    }

    #[test]
    fn layers_along_matches_direct_evaluation() {
        let m = model_random_init(&arch(2, Activation::Gelu), 9).unwrap();
        let p = m.prepare(64, ConvMode::SampledKernelDft).unwrap();
        let v = p.lift(&sample_grf(&GrfSpec::new(1, 64, 1.0, 1)).unwrap()).unwrap();
        let xi = p.lift(&sample_grf(&GrfSpec::new(1, 64, 1.0, 2)).unwrap()).unwrap();
        let eps = [0.0, 0.3, 0.8];
        for depth in 0..=2 {
            let along = p.layers_along(&v, &xi, &eps, depth).unwrap();
            for (e, got) in eps.iter().zip(&along) {
                let want = p.layers_batch(&[v.add_scaled(&xi, *e).unwrap()], depth).unwrap().remove(0);
                assert!(l2_norm(&got.sub(&want).unwrap()) <= 1e-12 * l2_norm(&want));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn single_layer_respects_lipschitz_estimate(seed in 0u64..200, s1 in 0u64..1000, s2 in 1000u64..2000) {
            let m = model_random_init(&arch(1, Activation::Gelu), seed).unwrap();
            let n = 64;
            let p = m.prepare(n, ConvMode::SampledKernelDft).unwrap();
            let table = spectrum_table(&m.layers[0].kernel, n, ConvMode::SampledKernelDft).unwrap();
            let young = crate::kernels::applied_kernel_norms(&table).young;
            let lip = Activation::Gelu.lipschitz() * (m.layers[0].weight_norm() + young);
            let mk = |s| p.lift(&sample_grf(&GrfSpec::new(1, n, 1.0, s)).unwrap()).unwrap();
            let (x, y) = (mk(s1), mk(s2));
            let (fx, _) = p.layers(&x, false).unwrap();
            let (fy, _) = p.layers(&y, false).unwrap();
            let num = l2_norm(&fx.sub(&fy).unwrap());
            let den = l2_norm(&x.sub(&y).unwrap());
            prop_assert!(num <= lip * den * (1.0 + 1e-9));
        }
    }
}
