//! Activation functions and the derivatives used by the backward pass.
//!
//! Kinks take the subgradient 0: `relu'(0) = 0`, `srelu'(±1) = 0`.

use crate::dsl::Activation;

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 || x.is_nan() {
        x
    } else {
        0.0
    }
}

/// Saturated ReLU: identity on [-1, 1], clamped outside.
pub fn srelu(x: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.clamp(-1.0, 1.0)
    }
}

/// Logistic sigmoid written through tanh.
pub fn sigmoid(x: f64) -> f64 {
    ((x * 0.5).tanh() + 1.0) * 0.5
}

pub fn apply(f: Activation, x: f64) -> f64 {
    match f {
        Activation::Tanh => tanh(x),
        Activation::Relu => relu(x),
        Activation::Srelu => srelu(x),
        Activation::Sigmoid => sigmoid(x),
    }
}

/// Derivative given the input `x` and the output `y = f(x)`.
pub fn derivative(f: Activation, x: f64, y: f64) -> f64 {
    match f {
        Activation::Tanh => 1.0 - y * y,
        Activation::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Srelu => {
            if x > -1.0 && x < 1.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Sigmoid => y * (1.0 - y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn srelu_values() {
        assert_eq!(srelu(2.0), 1.0);
        assert_eq!(srelu(-0.5), -0.5);
        assert_eq!(srelu(-7.0), -1.0);
    }

    #[test]
    fn relu_values() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(3.0), 3.0);
        assert!(relu(f64::NAN).is_nan());
    }

    #[test]
    fn sigmoid_matches_logistic() {
        assert_eq!(sigmoid(0.0), 0.5);
        let mut x: f64 = -10.0;
        while x <= 10.0 {
            let direct = 1.0 / (1.0 + (-x).exp());
            assert!((sigmoid(x) - direct).abs() < 1e-15, "x={x}");
            x += 0.01;
        }
    }

    #[test]
    fn kink_subgradients() {
        assert_eq!(derivative(Activation::Srelu, 0.5, srelu(0.5)), 1.0);
        assert_eq!(derivative(Activation::Srelu, 1.5, srelu(1.5)), 0.0);
        assert_eq!(derivative(Activation::Srelu, 1.0, 1.0), 0.0);
        assert_eq!(derivative(Activation::Srelu, -1.0, -1.0), 0.0);
        assert_eq!(derivative(Activation::Relu, 0.0, 0.0), 0.0);
    }

    #[test]
    fn srelu_clamp_million_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1_000_000 {
            let x: f64 = rng.random_range(-5.0..5.0);
            assert_eq!(srelu(x), (-1.0f64).max(1.0f64.min(x)));
        }
    }

    proptest! {
        #[test]
        fn srelu_is_clamp(x in -1e6f64..1e6) {
            prop_assert_eq!(srelu(x), (-1.0f64).max(1.0f64.min(x)));
        }

        #[test]
        fn sigmoid_derivative_matches_difference(x in -8.0f64..8.0) {
            let h = 1e-6;
            let fd = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h);
            prop_assert!((derivative(Activation::Sigmoid, x, sigmoid(x)) - fd).abs() < 1e-8);
        }
    }
}
