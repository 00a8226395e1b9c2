//! DFT conventions on the torus grid: Parseval, FFT convolution against the
//! direct sum, and Sobolev norms of a single mode.

use std::f64::consts::PI;

use noperr::grid::{
    dft_forward, direct_convolve, discrete_convolve, l2_norm, normalized_l2_norm, sobolev_norm, spectrum_of_samples,
    Frequency, GridField, RealOutput,
};
use num_complex::Complex64;

fn main() -> noperr::Result<()> {
    let n = 64;
    let f = GridField::from_fn(1, n, 1, |x, _| (2.0 * PI * 3.0 * x[0]).sin() + 0.5 * (2.0 * PI * 7.0 * x[0]).cos())?;
    let u = dft_forward(&f);
    let spectral: f64 = (0..u.modes()).map(|m| u.get(Frequency::from_flat(m, 1, n), 0).norm_sqr()).sum();
    println!("Parseval: mean |f|^2 = {:.12}, sum |f^|^2 = {:.12}", normalized_l2_norm(&f).powi(2), spectral);
    println!("f^(3) = {:.6}, f^(7) = {:.6}", u.get(Frequency([3, 0]), 0), u.get(Frequency([7, 0]), 0));

    let mode = GridField::from_fn(1, n, 1, |x, _| (2.0 * PI * 5.0 * x[0]).cos())?;
    for s in [0.0, 1.0, 2.0] {
        println!("||cos(10 pi x)||_H^{s} = {:.6}  (expected {:.6})", sobolev_norm(&mode, s), 26f64.powf(s / 2.0) / 2f64.sqrt());
    }

    let kernel: Vec<f64> = (0..n).map(|j| (-8.0 * (j.min(n - j) as f64) / n as f64).exp()).collect();
    let complex: Vec<Vec<Complex64>> = kernel.iter().map(|&k| vec![Complex64::new(k, 0.0)]).collect();
    let table = spectrum_of_samples(&complex, 1, n, 1, 1)?;
    let fast = discrete_convolve(&table, &f, RealOutput::Strict)?;
    let slow = direct_convolve(&kernel.iter().map(|&k| vec![k]).collect::<Vec<_>>(), 1, &f)?;
    println!("FFT vs direct convolution: {:.3e}", l2_norm(&fast.sub(&slow)?) / l2_norm(&slow));
    Ok(())
}
