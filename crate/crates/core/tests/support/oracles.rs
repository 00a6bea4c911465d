//! Independent reference computations shared by the integration tests and
//! the acceptance runner.

use eegsel::models::build_cnn;
use eegsel::nn::{Layer, Linear, Mode, Network, Tensor};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustfft::num_complex::Complex64;

/// O(n^2) DFT.
pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let idx = (k * t) % n;
                let ang = -2.0 * std::f64::consts::PI * idx as f64 / n as f64;
                acc += Complex64::new(v * ang.cos(), v * ang.sin());
            }
            acc
        })
        .collect()
}

/// CNN in eval mode with randomised BatchNorm statistics (fresh ones are the identity).
pub fn eval_cnn(seed: u64) -> Network {
    let mut net = build_cnn(seed);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0xB4);
    for layer in net.layers_mut() {
        if let Layer::BatchNorm(bn) = layer {
            for v in bn.running_mean.iter_mut() {
                *v = rng.gen_range(-0.2..0.2);
            }
            for v in bn.running_var.iter_mut() {
                *v = rng.gen_range(0.5..2.0);
            }
            for v in bn.gamma.value.data_mut() {
                *v = rng.gen_range(0.5..1.5);
            }
            for v in bn.beta.value.data_mut() {
                *v = rng.gen_range(-0.3..0.3);
            }
        }
    }
    net.set_mode(Mode::Eval);
    net
}

pub fn random_image(rng: &mut impl Rng) -> Tensor {
    Tensor::new(vec![1, 1, 32, 32], (0..1024).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

/// A single affine layer `w . x + b` in eval mode.
pub fn linear_model(w: &[f64], b: f64) -> Network {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
    let mut l = Linear::new(w.len(), 1, &mut rng);
    l.weight.value = Tensor::new(vec![1, w.len()], w.to_vec()).unwrap();
    l.bias.value = Tensor::new(vec![1], vec![b]).unwrap();
    let mut net = Network::new(vec![Layer::Linear(l)]);
    net.set_mode(Mode::Eval);
    net
}

/// Random Linear -> ReLU -> Linear model on `n` inputs.
pub fn two_layer_model(n: usize, hidden: usize, seed: u64) -> Network {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut a = Linear::new(n, hidden, &mut rng);
    for v in a.bias.value.data_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    let b = Linear::new(hidden, 1, &mut rng);
    let mut net = Network::new(vec![Layer::Linear(a), Layer::Relu, Layer::Linear(b)]);
    net.set_mode(Mode::Eval);
    net
}

pub fn scalar_fn(net: &Network) -> impl Fn(&[f64]) -> f64 + '_ {
    move |z: &[f64]| {
        let x = Tensor::new(vec![1, z.len()], z.to_vec()).unwrap();
        net.predict(&x).unwrap().data()[0]
    }
}

pub fn row(v: &[f64]) -> Tensor {
    Tensor::new(vec![1, v.len()], v.to_vec()).unwrap()
}
