//! Kernel families: closed-form coefficients against quadrature, algebraic
//! decay of smooth-signal kernels, the hard cutoff of spectral kernels and
//! the embedding of the latter into the former.

use noperr::grid::Frequency;
use noperr::kernels::{
    fno_to_ssno_embedding, kernel_grid_l2, spectral_decay_fit, FnoKernel, Kernel, SsnoForm, SsnoKernel,
};

fn main() -> noperr::Result<()> {
    let ssno = Kernel::Ssno(SsnoKernel::random(1, 8, 2, 2, SsnoForm::Sum, 11)?);
    let panels = 1 << 14;
    for xi in [0i64, 1, 5, 40] {
        let quad: f64 = (0..panels)
            .map(|j| {
                let z = (j as f64 + 0.5) / panels as f64 - 0.5;
                (ssno.eval([z, 0.0])[0] * num_complex::Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi as f64 * z)).re
            })
            .sum::<f64>()
            / panels as f64;
        println!("xi = {xi:>3}: closed form {:+.8}, quadrature {:+.8}", ssno.fourier_coeff(Frequency([xi, 0]))[0].re, quad);
    }
    println!("smooth-signal decay: {:?}", spectral_decay_fit(&ssno, 64, 2048)?);
    println!("sup bound {:.4}, L1 bound {:.4}", ssno.sup_bound(), ssno.l1_bound());
    for n in [16, 64, 256] {
        let r = kernel_grid_l2(&ssno, n)?;
        println!("N = {n:>3}: grid l2 {:.4} <= bound {:.4}", r.l2, r.bound);
    }

    let fno = FnoKernel::random_real(1, 16, 2, 2, 5)?;
    println!("spectral kernel: {:?}", spectral_decay_fit(&Kernel::Fno(fno.clone()), 1, 64)?);
    let embedded = Kernel::Ssno(fno_to_ssno_embedding(&fno)?);
    let gap = (-20..=20)
        .map(|xi| {
            let a = Kernel::Fno(fno.clone()).fourier_coeff(Frequency([xi, 0]));
            let b = embedded.fourier_coeff(Frequency([xi, 0]));
            a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    println!("embedding coefficient gap over |xi| <= 20: {gap:.3e}");
    Ok(())
}
