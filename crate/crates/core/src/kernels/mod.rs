//! Integral kernels, their Fourier coefficients and norm bounds, and the
//! per-frequency tables used to apply them on a grid.

mod fno;
mod ssno;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use fno::{FnoKernel, FnoMode};
pub use ssno::{half_period_integral, wrap_centered, SsnoForm, SsnoKernel};

use crate::error::{Error, Result};
use crate::grid::{check_grid, fft_inplace, spectrum_of_samples, storage, Frequency, KernelSpectrum, C0};
use crate::linalg::{op_norm_complex, op_norm_real};
use crate::stats::loglog_fit;

/// Damping used when embedding undamped Fourier atoms.
pub const EMBEDDING_DAMPING: f64 = 1e-8;

/// A kernel of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Ssno(SsnoKernel),
    Fno(FnoKernel),
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Ssno(k) => k.validate(),
            Kernel::Fno(k) => k.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Ssno(k) => k.dim,
            Kernel::Fno(k) => k.dim,
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            Kernel::Ssno(k) => k.d_out,
            Kernel::Fno(k) => k.d_out,
        }
    }

    pub fn d_in(&self) -> usize {
        match self {
            Kernel::Ssno(k) => k.d_in,
            Kernel::Fno(k) => k.d_in,
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            Kernel::Ssno(k) => k.modes,
            Kernel::Fno(k) => k.modes,
        }
    }

    /// `K(z)` as a row-major complex matrix.
    pub fn eval(&self, z: [f64; 2]) -> Vec<Complex64> {
        match self {
            Kernel::Ssno(k) => k.eval(z),
            Kernel::Fno(k) => k.eval(z),
        }
    }

    /// Continuous Fourier coefficient `K̂(ξ)`.
    pub fn fourier_coeff(&self, xi: Frequency) -> Vec<Complex64> {
        match self {
            Kernel::Ssno(k) => k.fourier_coeff(xi),
            Kernel::Fno(k) => k.fourier_coeff(xi),
        }
    }

    /// Upper bound on `sup_z ‖K(z)‖_op`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Kernel::Ssno(k) => k.sup_bound(),
            Kernel::Fno(k) => k.mode_norm_sum(),
        }
    }

    /// Upper bound on `∫_{T^d} ‖K(z)‖_op dz`.
    pub fn l1_bound(&self) -> f64 {
        match self {
            Kernel::Ssno(k) => k.l1_bound(),
            Kernel::Fno(k) => k.mode_norm_sum(),
        }
    }

    /// `max ‖K̂(ξ)‖_op` over `‖ξ‖_∞ < cutoff`.
    pub fn spectral_sup(&self, cutoff: usize) -> f64 {
        let c = cutoff as i64;
        let freqs: Vec<Frequency> = if self.dim() == 1 {
            (-c + 1..c).map(|a| Frequency([a, 0])).collect()
        } else {
            (-c + 1..c).flat_map(|a| (-c + 1..c).map(move |b| Frequency([a, b]))).collect()
        };
        freqs
            .into_iter()
            .map(|xi| op_norm_complex(&self.fourier_coeff(xi), self.d_out(), self.d_in()))
            .fold(0.0, f64::max)
    }
}

/// How a layer's convolution is discretized on an `N`-point grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConvMode {
    /// DFT of the kernel sampled at the grid points.
    #[default]
    SampledKernelDft,
    /// Continuous coefficients `K̂(ξ)` on every resolved frequency.
    AnalyticSpectrum,
    /// Continuous coefficients on `‖ξ‖_∞ < K_cutoff`, zero elsewhere.
    AnalyticSpectrumCutoff(usize),
}

/// Per-frequency table applied by a layer on the `N`-grid. The table is the
/// spectrum of the real part of the discretized kernel, so convolution
/// outputs are real.
pub fn spectrum_table(kernel: &Kernel, n: usize, mode: ConvMode) -> Result<KernelSpectrum> {
    let dim = kernel.dim();
    check_grid(dim, n)?;
    if let ConvMode::AnalyticSpectrumCutoff(kc) = mode {
        if kc == 0 || kc > n / 2 {
            return Err(Error::Domain(format!("cutoff {kc} must lie in 1..={} for N={n}", n / 2)));
        }
    }
    let raw = match (mode, kernel) {
        (ConvMode::SampledKernelDft, Kernel::Ssno(k)) if k.form == SsnoForm::Sum || dim == 1 => sampled_sum_form(k, n)?,
        (ConvMode::SampledKernelDft, Kernel::Fno(k)) => sampled_fno(k, n)?,
        (ConvMode::SampledKernelDft, _) => {
            let m = n.pow(dim as u32);
            let samples: Vec<Vec<Complex64>> = (0..m).map(|p| kernel.eval(grid_point(p, dim, n))).collect();
            spectrum_of_samples(&samples, dim, n, kernel.d_out(), kernel.d_in())?
        }
        (_, _) => {
            let cut = match mode {
                ConvMode::AnalyticSpectrumCutoff(kc) => kc as i64,
                _ => i64::MAX,
            };
            analytic_table(kernel, n, cut)?
        }
    };
    Ok(raw.hermitian_part())
}

fn grid_point(p: usize, dim: usize, n: usize) -> [f64; 2] {
    let h = 1.0 / n as f64;
    if dim == 1 {
        [p as f64 * h, 0.0]
    } else {
        [(p / n) as f64 * h, (p % n) as f64 * h]
    }
}

fn axis_flat(dim: usize, n: usize, axis: usize, f: usize) -> usize {
    if dim == 1 || axis == 1 {
        f
    } else {
        f * n
    }
}

/// DFT of the sampled kernel using the sum structure: each (mode, axis,
/// branch) contributes a scalar function of one coordinate times a fixed
/// rank-one matrix, so only the axes of frequency space are populated.
fn sampled_sum_form(k: &SsnoKernel, n: usize) -> Result<KernelSpectrum> {
    let dim = k.dim;
    let sz = k.d_out * k.d_in;
    let mut table: std::collections::BTreeMap<usize, Vec<Complex64>> = std::collections::BTreeMap::new();
    let factors: Vec<(Vec<f64>, Vec<f64>)> = (0..k.modes).map(|m| (k.factor(m, true), k.factor(m, false))).collect();
    let mut plus = vec![C0; n];
    let mut minus = vec![C0; n];
    let scale = 1.0 / n as f64;
    for i in 0..dim {
        for m in 0..k.modes {
            let j = m * dim + i;
            let (c, rho, omega) = (k.amplitude[j], k.damping[j], k.frequency[j]);
            for t in 0..n {
                let z = wrap_centered(t as f64 / n as f64);
                let w = Complex64::from_polar(c * (-rho * z.abs()).exp(), omega * z);
                if z >= 0.0 {
                    plus[t] = w;
                    minus[t] = C0;
                } else {
                    plus[t] = C0;
                    minus[t] = w;
                }
            }
            fft_inplace(&mut plus, 1, n, false);
            fft_inplace(&mut minus, 1, n, false);
            let (ap, am) = &factors[m];
            for f in 0..n {
                let entry = table.entry(axis_flat(dim, n, i, f)).or_insert_with(|| vec![C0; sz]);
                let (sp, sm) = (plus[f] * scale, minus[f] * scale);
                for e in 0..sz {
                    entry[e] += sp * ap[e] + sm * am[e];
                }
            }
        }
    }
    Ok(KernelSpectrum { dim, n, d_out: k.d_out, d_in: k.d_in, entries: table.into_iter().collect(), hermitian: false })
}

/// Samples of `e^{2πik·x}` on the grid have DFT `δ_{ξ ≡ k (mod N)}`, so the
/// sampled spectrum is the aliased sum of the modes.
fn sampled_fno(k: &FnoKernel, n: usize) -> Result<KernelSpectrum> {
    let sz = k.d_out * k.d_in;
    let mut table: std::collections::BTreeMap<usize, Vec<Complex64>> = std::collections::BTreeMap::new();
    for m in &k.weights {
        let flat = if k.dim == 1 { storage(m.freq[0], n) } else { storage(m.freq[0], n) * n + storage(m.freq[1], n) };
        let entry = table.entry(flat).or_insert_with(|| vec![C0; sz]);
        for (e, v) in entry.iter_mut().zip(m.matrix()) {
            *e += v;
        }
    }
    Ok(KernelSpectrum { dim: k.dim, n, d_out: k.d_out, d_in: k.d_in, entries: table.into_iter().collect(), hermitian: false })
}

fn analytic_table(kernel: &Kernel, n: usize, cut: i64) -> Result<KernelSpectrum> {
    let dim = kernel.dim();
    let half = (n / 2) as i64;
    let lim = cut.min(half + 1);
    let mut out = KernelSpectrum::new(dim, n, kernel.d_out(), kernel.d_in())?;
    let axis_freqs: Vec<i64> = (-half..half).filter(|f| f.abs() < lim).collect();
    let sum_form = matches!(kernel, Kernel::Ssno(k) if k.form == SsnoForm::Sum);
    let mut freqs: Vec<Frequency> = Vec::new();
    if dim == 1 {
        freqs.extend(axis_freqs.iter().map(|&a| Frequency([a, 0])));
    } else if sum_form {
        // Off-axis coefficients vanish.
        for &a in &axis_freqs {
            freqs.push(Frequency([a, 0]));
            if a != 0 {
                freqs.push(Frequency([0, a]));
            }
        }
    } else {
        for &a in &axis_freqs {
            for &b in &axis_freqs {
                freqs.push(Frequency([a, b]));
            }
        }
    }
    let mut entries: Vec<(usize, Vec<Complex64>)> =
        freqs
            .into_iter()
            .map(|xi| (xi.to_flat(dim, n), kernel.fourier_coeff(xi)))
            .filter(|(_, m)| m.iter().any(|z| z.norm_sqr() > 0.0))
            .collect();
    entries.sort_by_key(|e| e.0);
    out.entries = entries;
    Ok(out)
}

/// Real kernel samples `K_eff(x)` whose discrete convolution reproduces the
/// table, i.e. the kernel a layer actually applies on the grid.
pub fn effective_kernel_samples(table: &KernelSpectrum) -> Vec<Vec<f64>> {
    table.spatial_samples().into_iter().map(|m| m.into_iter().map(|z| z.re).collect()).collect()
}

/// Norms of the applied grid kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedKernelNorms {
    /// `(1/N^d) Σ_x ‖K_eff(x)‖_op`, the factor in the discrete Young inequality.
    pub young: f64,
    /// `(Σ_x ‖K_eff(x)‖_op²)^{1/2}`.
    pub l2: f64,
}

pub fn applied_kernel_norms(table: &KernelSpectrum) -> AppliedKernelNorms {
    let samples = effective_kernel_samples(table);
    let norms: Vec<f64> = samples.iter().map(|m| op_norm_real(m, table.d_out, table.d_in)).collect();
    let m = norms.len() as f64;
    AppliedKernelNorms {
        young: norms.iter().sum::<f64>() / m,
        l2: norms.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Grid `ℓ²` norm of a kernel and the matching closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNormReport {
    pub n: usize,
    /// `(Σ_{x ∈ T^d_N} ‖K(x)‖_op²)^{1/2}`.
    pub l2: f64,
    pub bound: f64,
}

/// Evaluates `‖K‖_{ℓ²(T^d_N)}` and its bound: `3^{d/2} (NK)^{d/2} sup‖P‖`
/// for Fourier-series kernels, `C K d N^{d/2}` for the sum form and
/// `(C N K)^{d/2}` for the product form.
pub fn kernel_grid_l2(kernel: &Kernel, n: usize) -> Result<GridNormReport> {
    let dim = kernel.dim();
    check_grid(dim, n)?;
    let m = n.pow(dim as u32);
    let (o, i) = (kernel.d_out(), kernel.d_in());
    let l2 = (0..m)
        .map(|p| op_norm_complex(&kernel.eval(grid_point(p, dim, n)), o, i).powi(2))
        .sum::<f64>()
        .sqrt();
    let (d, nf) = (dim as f64, n as f64);
    let bound = match kernel {
        Kernel::Fno(k) => 3f64.powf(d / 2.0) * (nf * k.modes as f64).powf(d / 2.0) * k.max_mode_norm(),
        Kernel::Ssno(k) => {
            let c = k.factor_constant();
            let kk = k.modes as f64;
            match k.form {
                SsnoForm::Sum => c * kk * d * nf.powf(d / 2.0),
                SsnoForm::Product => (c * nf * kk).powf(d / 2.0),
            }
        }
    };
    Ok(GridNormReport { n, l2, bound })
}

/// Decay of `‖K̂(ξ)‖_op` along a frequency window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayFit {
    /// `‖K̂(ξ)‖ ≈ C (1 + ‖ξ‖)^{-alpha}`.
    PowerLaw { alpha: f64, r2: f64 },
    /// Coefficients vanish past `index`.
    Cutoff { index: i64 },
}

/// Decay fit from `(|ξ|, ‖K̂(ξ)‖_op)` pairs. Trailing exact zeros indicate a
/// hard cutoff at the last nonzero frequency.
pub fn fit_decay_table(table: &[(f64, f64)]) -> Result<DecayFit> {
    if table.len() < 4 {
        return Err(Error::Domain("decay fit needs at least 4 frequencies".into()));
    }
    if let Some(last) = table.iter().rposition(|(_, v)| *v > 0.0) {
        if last + 1 < table.len() {
            return Ok(DecayFit::Cutoff { index: table[last].0 as i64 });
        }
    } else {
        return Ok(DecayFit::Cutoff { index: table[0].0 as i64 - 1 });
    }
    let x: Vec<f64> = table.iter().map(|(f, _)| 1.0 + f).collect();
    let y: Vec<f64> = table.iter().map(|(_, v)| *v).collect();
    let fit = loglog_fit(&x, &y)?;
    Ok(DecayFit::PowerLaw { alpha: -fit.slope, r2: fit.r2 })
}

/// Fits the decay of `‖K̂(ξ)‖_op` for `ξ = (f, 0)` with integer `f ∈ [lo, hi]`.
/// Fourier-series kernels report their truncation index.
pub fn spectral_decay_fit(kernel: &Kernel, lo: i64, hi: i64) -> Result<DecayFit> {
    if lo < 0 || hi <= lo {
        return Err(Error::Domain(format!("invalid frequency window [{lo}, {hi}]")));
    }
    if let Kernel::Fno(k) = kernel {
        let top = k.weights.iter().map(|m| m.freq[0].abs().max(m.freq[1].abs())).max().unwrap_or(0);
        return Ok(DecayFit::Cutoff { index: top });
    }
    let (o, i) = (kernel.d_out(), kernel.d_in());
    let table: Vec<(f64, f64)> =
        (lo..=hi).map(|f| (f as f64, op_norm_complex(&kernel.fourier_coeff(Frequency([f, 0])), o, i))).collect();
    fit_decay_table(&table)
}

/// Rewrites a one-dimensional Fourier-series kernel with real mode matrices
/// as a damped-oscillatory kernel: each row `r` of `P^{(k)}` becomes a mode
/// with `ω = 2πk`, `ρ = 1e-8`, `c = 1`, `C_± = e_r` and `B_± = P^{(k)}_{r,:}`.
///
/// Real amplitudes and factors cannot produce the phase of a complex mode
/// matrix, so kernels with nonzero imaginary parts are rejected.
pub fn fno_to_ssno_embedding(fno: &FnoKernel) -> Result<SsnoKernel> {
    fno.validate()?;
    if fno.dim != 1 {
        return Err(Error::Unsupported("embedding is defined for one-dimensional kernels".into()));
    }
    let scale = fno.weights.iter().flat_map(|m| m.re.iter().chain(&m.im)).fold(0.0f64, |a, v| a.max(v.abs()));
    let imag = fno.weights.iter().flat_map(|m| m.im.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    if imag > 1e-12 * scale.max(1.0) {
        return Err(Error::Unsupported(format!(
            "mode matrices must be real for an exact embedding (largest imaginary part {imag:.3e})"
        )));
    }
    let (o, i) = (fno.d_out, fno.d_in);
    let mut out = SsnoKernel {
        dim: 1,
        modes: 0,
        d_out: o,
        d_in: i,
        form: SsnoForm::Sum,
        amplitude: Vec::new(),
        damping: Vec::new(),
        frequency: Vec::new(),
        c_plus: Vec::new(),
        b_plus: Vec::new(),
        c_minus: Vec::new(),
        b_minus: Vec::new(),
    };
    for m in &fno.weights {
        for r in 0..o {
            let row = m.re[r * i..(r + 1) * i].to_vec();
            if row.iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut e = vec![0.0; o];
            e[r] = 1.0;
            out.amplitude.push(1.0);
            out.damping.push(EMBEDDING_DAMPING);
            out.frequency.push(2.0 * PI * m.freq[0] as f64);
            out.c_plus.push(e.clone());
            out.c_minus.push(e);
            out.b_plus.push(row.clone());
            out.b_minus.push(row);
            out.modes += 1;
        }
    }
    if out.modes == 0 {
        return Err(Error::Domain("kernel has no nonzero modes to embed".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{direct_convolve, discrete_convolve, GridField, RealOutput};

    fn scalar_ssno(rho: f64, omega: f64) -> Kernel {
        Kernel::Ssno(SsnoKernel {
            dim: 1,
            modes: 1,
            d_out: 1,
            d_in: 1,
            form: SsnoForm::Sum,
            amplitude: vec![1.0],
            damping: vec![rho],
            frequency: vec![omega],
            c_plus: vec![vec![1.0]],
            b_plus: vec![vec![1.0]],
            c_minus: vec![vec![0.0]],
            b_minus: vec![vec![0.0]],
        })
    }

    #[test]
    fn sampled_table_matches_direct_convolution_with_real_part() {
        let k = Kernel::Ssno(SsnoKernel::random(1, 3, 2, 3, SsnoForm::Sum, 7).unwrap());
        let n = 32;
        let table = spectrum_table(&k, n, ConvMode::SampledKernelDft).unwrap();
        let samples: Vec<Vec<f64>> =
            (0..n).map(|p| k.eval(grid_point(p, 1, n)).into_iter().map(|z| z.re).collect()).collect();
        let v = GridField::from_fn(1, n, 3, |x, c| (x[0] * 5.0 + c as f64).cos()).unwrap();
        let fast = discrete_convolve(&table, &v, RealOutput::Strict).unwrap();
        let slow = direct_convolve(&samples, 2, &v).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_form_fast_path_matches_generic_sampling_in_2d() {
        let k = SsnoKernel::random(2, 2, 2, 2, SsnoForm::Sum, 3).unwrap();
        let n = 16;
        let fast = sampled_sum_form(&k, n).unwrap().hermitian_part();
        let samples: Vec<Vec<Complex64>> = (0..n * n).map(|p| k.eval(grid_point(p, 2, n))).collect();
        let slow = spectrum_of_samples(&samples, 2, n, 2, 2).unwrap().hermitian_part();
        let lookup = |t: &KernelSpectrum, f: usize| t.entries.iter().find(|e| e.0 == f).map(|e| e.1.clone());
        for f in 0..n * n {
            let a = lookup(&fast, f).unwrap_or_else(|| vec![C0; 4]);
            let b = lookup(&slow, f).unwrap_or_else(|| vec![C0; 4]);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12, "frequency {f}");
            }
        }
    }

    #[test]
    fn cutoff_table_keeps_only_low_modes() {
        let k = Kernel::Ssno(SsnoKernel::random(1, 2, 1, 1, SsnoForm::Sum, 1).unwrap());
        let t = spectrum_table(&k, 64, ConvMode::AnalyticSpectrumCutoff(4)).unwrap();
        assert_eq!(t.entries.len(), 7);
        assert!(spectrum_table(&k, 64, ConvMode::AnalyticSpectrumCutoff(33)).is_err());
    }

    #[test]
    fn sampled_fno_equals_analytic_when_resolved() {
        let k = Kernel::Fno(FnoKernel::random(1, 3, 2, 2, 8).unwrap());
        let a = spectrum_table(&k, 16, ConvMode::SampledKernelDft).unwrap();
        let b = spectrum_table(&k, 16, ConvMode::AnalyticSpectrum).unwrap();
        assert_eq!(a.entries.len(), b.entries.len());
        for ((fa, ma), (fb, mb)) in a.entries.iter().zip(&b.entries) {
            assert_eq!(fa, fb);
            for (x, y) in ma.iter().zip(mb) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ssno_spectrum_decays_like_inverse_frequency() {
        let k = Kernel::Ssno(SsnoKernel::random(1, 8, 4, 4, SsnoForm::Sum, 21).unwrap());
        match spectral_decay_fit(&k, 64, 2048).unwrap() {
            DecayFit::PowerLaw { alpha, .. } => assert!((0.8..=1.2).contains(&alpha), "alpha {alpha}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fno_spectrum_reports_cutoff() {
        let k = Kernel::Fno(FnoKernel::random(1, 12, 2, 2, 2).unwrap());
        assert_eq!(spectral_decay_fit(&k, 1, 64).unwrap(), DecayFit::Cutoff { index: 12 });
        let synthetic: Vec<(f64, f64)> = (1..64).map(|f| (f as f64, (f as f64 + 1.0).powi(-2))).collect();
        match fit_decay_table(&synthetic).unwrap() {
            DecayFit::PowerLaw { alpha, .. } => assert!((alpha - 2.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_norm_below_bound() {
        for seed in 0..5 {
            let k = Kernel::Ssno(SsnoKernel::random(1, 8, 4, 4, SsnoForm::Sum, seed).unwrap());
            let r = kernel_grid_l2(&k, 256).unwrap();
            assert!(r.l2 <= r.bound);
            let f = Kernel::Fno(FnoKernel::random(1, 8, 4, 4, seed).unwrap());
            let r = kernel_grid_l2(&f, 256).unwrap();
            assert!(r.l2 <= r.bound);
        }
    }

    #[test]
    fn embedding_reproduces_real_fourier_kernel() {
        let fno = FnoKernel::random_real(1, 4, 3, 2, 17).unwrap();
        let ssno = fno_to_ssno_embedding(&fno).unwrap();
        for j in 0..1024 {
            let z = [j as f64 / 1024.0, 0.0];
            let a = fno.eval(z);
            let b = ssno.eval(z);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-5);
            }
        }
        assert!(fno_to_ssno_embedding(&FnoKernel::random(1, 4, 3, 2, 17).unwrap()).is_err());
    }

    #[test]
    fn applied_norms_of_pure_decay() {
        let k = scalar_ssno(1.0, 0.0);
        let n = 64;
        let t = spectrum_table(&k, n, ConvMode::SampledKernelDft).unwrap();
        let young = applied_kernel_norms(&t).young;
        // Real kernel samples are e^{-x} on the forward half of the grid.
        let expect: f64 = (0..n / 2).map(|j| (-(j as f64) / n as f64).exp()).sum::<f64>() / n as f64;
        assert!((young - expect).abs() < 1e-12);
    }
}
