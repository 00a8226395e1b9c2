use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

/// Pointwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// Slope on the negative half-line.
    LeakyRelu(f64),
    #[default]
    Gelu,
    Tanh,
    Identity,
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x / SQRT_2))
}

#[inline]
fn gelu_derivative(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `max |GELU'|` from a dense scan of `[-20, 20]` refined by golden-section search.
fn gelu_lipschitz() -> f64 {
    static L: OnceLock<f64> = OnceLock::new();
    *L.get_or_init(|| {
        let m = 400_000;
        let h = 40.0 / m as f64;
        let (mut best_x, mut best) = (0.0, 0.0);
        for j in 0..=m {
            let x = -20.0 + j as f64 * h;
            let v = gelu_derivative(x).abs();
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let (mut a, mut b) = (best_x - h, best_x + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if gelu_derivative(c).abs() > gelu_derivative(d).abs() {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(gelu_derivative(0.5 * (a + b)).abs())
    })
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(s) => {
                if x >= 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Activation::Gelu => gelu(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    pub fn apply_slice(&self, xs: &mut [f64]) {
        if *self == Activation::Identity {
            return;
        }
        xs.iter_mut().for_each(|x| *x = self.apply(*x));
    }

    /// Global Lipschitz constant `L_σ`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Activation::Relu | Activation::Tanh | Activation::Identity => 1.0,
            Activation::LeakyRelu(s) => s.abs().max(1.0),
            Activation::Gelu => gelu_lipschitz(),
        }
    }

    /// Sobolev regularity cap for piecewise-linear activations, whose kinks
    /// limit compositions to `H^t` with `t < 3/2`.
    pub fn regularity_cap(&self) -> Option<f64> {
        match self {
            Activation::Relu | Activation::LeakyRelu(_) => Some(1.49),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::LeakyRelu(s) => format!("leaky_relu({s})"),
            Activation::Gelu => "gelu".into(),
            Activation::Tanh => "tanh".into(),
            Activation::Identity => "identity".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_lipschitz_matches_closed_form_maximizer() {
        // The derivative peaks at x = √2.
        let x = SQRT_2;
        let expect = 0.5 * (1.0 + erf(1.0)) + x * INV_SQRT_2PI * (-1.0f64).exp();
        assert!((Activation::Gelu.lipschitz() - expect).abs() < 1e-12);
        assert!((expect - 1.1289).abs() < 1e-4);
    }

    #[test]
    fn difference_quotients_respect_lipschitz_constants() {
        for act in [Activation::Relu, Activation::LeakyRelu(-2.5), Activation::Gelu, Activation::Tanh] {
            let l = act.lipschitz();
            for j in 0..2000 {
                let x = -10.0 + j as f64 * 0.01;
                let y = x + 0.003;
                assert!((act.apply(y) - act.apply(x)).abs() <= l * 0.003 * (1.0 + 1e-9));
            }
        }
        assert_eq!(Activation::LeakyRelu(0.01).lipschitz(), 1.0);
    }
}
