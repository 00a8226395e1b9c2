//! Gaussian random fields of prescribed smoothness and their measured
//! spectral decay under both spectrum conventions.

use noperr::random_fields::{measured_decay_exponent, sample_grf, GrfSpec, SpectrumConvention};
use noperr::stats::mean;

fn main() -> noperr::Result<()> {
    let n = 4096;
    for convention in [SpectrumConvention::Literal, SpectrumConvention::SobolevMatched] {
        println!("{convention:?}");
        for s in [1.0, 2.0, 4.0] {
            let alphas = (0..10)
                .map(|seed| {
                    let spec = GrfSpec { convention, ..GrfSpec::new(1, n, s, seed) };
                    Ok(measured_decay_exponent(&sample_grf(&spec)?, 16.0, (n / 4) as f64)?.alpha)
                })
                .collect::<noperr::Result<Vec<f64>>>()?;
            let target = match convention {
                SpectrumConvention::Literal => s + 0.5,
                SpectrumConvention::SobolevMatched => 2.0 * s + 1.0,
            };
            println!("  s = {s}: measured decay {:.3}, target {target:.3}", mean(&alphas));
        }
    }
    let field = sample_grf(&GrfSpec { dim: 2, normalize: true, ..GrfSpec::new(2, 64, 2.0, 3) })?;
    println!("2D sample on 64x64, normalized L2 = {:.6}", noperr::grid::normalized_l2_norm(&field));
    Ok(())
}
