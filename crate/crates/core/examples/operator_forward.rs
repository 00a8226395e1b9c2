//! Forward pass of a seeded operator at several resolutions, its weight file
//! round trip and the continuous and discrete Lipschitz constants.

use std::f64::consts::PI;

use noperr::bounds::{continuous_stack_lipschitz, discrete_stack_lipschitz};
use noperr::grid::{l2_norm, GridField};
use noperr::kernels::ConvMode;
use noperr::operator::{model_random_init, stack_apply, Activation, ArchSpec, KernelSpec, OperatorModel};

fn main() -> noperr::Result<()> {
    let arch = ArchSpec {
        dim: 1,
        in_channels: 1,
        out_channels: 1,
        width: 16,
        depth: 3,
        kernel: KernelSpec::Ssno { modes: 8, form: Default::default() },
        activation: Activation::Gelu,
    };
    let model = model_random_init(&arch, 42)?;
    let input = |n| GridField::from_fn(1, n, 1, |x, _| (2.0 * PI * x[0]).sin() + 0.3 * (6.0 * PI * x[0]).cos());
    let mode = ConvMode::AnalyticSpectrumCutoff(16);
    let reference = stack_apply(&model, &input(1024)?, mode, false)?.output;
    for n in [32, 64, 128, 256] {
        let coarse = stack_apply(&model, &input(n)?, mode, false)?.output;
        let err = l2_norm(&coarse.sub(&reference.subsample(1024 / n)?)?) / l2_norm(&coarse);
        println!("N = {n:>3}: relative gap to N = 1024 on shared points {err:.3e}");
    }

    let path = std::env::temp_dir().join("noperr_operator_forward.json");
    model.save(&path)?;
    println!("weights written to {} and reload identically: {}", path.display(), OperatorModel::load(&path)? == model);

    println!("continuous Lipschitz bound {:.4}", continuous_stack_lipschitz(&model));
    for n in [64, 256] {
        let d = discrete_stack_lipschitz(&model, n, mode)?;
        println!("N = {n:>3}: C_N,T = {:.4} (l2 variant {:.4})", d.constant, d.constant_l2);
    }
    Ok(())
}
