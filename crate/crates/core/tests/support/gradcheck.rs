//! Central finite-difference oracle for layer gradients.

use eegsel::nn::{
    AdaptiveAvgPool1d, AvgPool2d, BatchNorm, Conv1d, Conv2d, Layer, Linear, Mode, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-6;

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn uniform(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Values bounded away from zero so no ReLU kink sits within `H` of a sample.
fn away_from_zero(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    uniform(shape, rng).map(|v| if v.abs() < 1e-3 { 0.5 } else { v })
}

/// Scalar objective `sum(layer(x) * r)`.
fn objective(layer: &Layer, x: &Tensor, r: &Tensor, mode: Mode) -> f64 {
    layer.forward(x, mode).unwrap().dot(r)
}

/// Worst relative error over the input gradient and every parameter gradient.
pub fn check_layer(mut layer: Layer, x: Tensor, mode: Mode, rng: &mut impl Rng) -> f64 {
    let y = layer.forward(&x, mode).unwrap();
    let r = uniform(y.shape(), rng);
    for p in layer.params_mut() {
        p.grad.fill(0.0);
    }
    let dx = layer.backward(&x, &r, mode, true).unwrap();

    let mut numeric = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += H;
        let mut xm = x.clone();
        xm.data_mut()[i] -= H;
        numeric[i] = (objective(&layer, &xp, &r, mode) - objective(&layer, &xm, &r, mode)) / (2.0 * H);
    }
    let mut worst = rel_err(dx.data(), &numeric);

    let n_params = layer.params().len();
    for pi in 0..n_params {
        let analytic = layer.params()[pi].grad.data().to_vec();
        let mut numeric = vec![0.0; analytic.len()];
        for i in 0..analytic.len() {
            let orig = layer.params()[pi].value.data()[i];
            layer.params_mut()[pi].value.data_mut()[i] = orig + H;
            let fp = objective(&layer, &x, &r, mode);
            layer.params_mut()[pi].value.data_mut()[i] = orig - H;
            let fm = objective(&layer, &x, &r, mode);
            layer.params_mut()[pi].value.data_mut()[i] = orig;
            numeric[i] = (fp - fm) / (2.0 * H);
        }
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    worst
}

fn randomise_bn(bn: &mut BatchNorm, rng: &mut impl Rng) {
    for v in bn.gamma.value.data_mut() {
        *v = rng.gen_range(0.5..1.5);
    }
    for v in bn.beta.value.data_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    for v in bn.running_mean.iter_mut() {
        *v = rng.gen_range(-0.3..0.3);
    }
    for v in bn.running_var.iter_mut() {
        *v = rng.gen_range(0.5..2.0);
    }
}

/// Random small instance `k` of each layer kind, paired with an input and mode.
pub fn instances(kind: &str, k: u64) -> (Layer, Tensor, Mode) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1000 + k);
    let b = 2 + (k as usize % 2);
    match kind {
        "conv2d" => {
            let stride = 1 + (k as usize % 2);
            let mut c = Conv2d::new(2, 3, 3, stride, 1, &mut rng);
            for v in c.bias.value.data_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
            (Layer::Conv2d(c), uniform(&[b, 2, 5, 6], &mut rng), Mode::Train)
        }
        "conv1d" => {
            let dilation = 1 + (k as usize % 3);
            let mut c = Conv1d::same(3, 4, 3 + 2 * (k as usize % 2), dilation, &mut rng);
            for v in c.bias.value.data_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
            (Layer::Conv1d(c), uniform(&[b, 3, 11], &mut rng), Mode::Train)
        }
        "linear" => {
            let mut l = Linear::new(5, 4, &mut rng);
            for v in l.bias.value.data_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
            (Layer::Linear(l), uniform(&[b, 5], &mut rng), Mode::Train)
        }
        "batchnorm_train" => {
            let mut bn = BatchNorm::new(3);
            randomise_bn(&mut bn, &mut rng);
            let shape: &[usize] = if k.is_multiple_of(2) { &[4, 3] } else { &[b, 3, 6] };
            (Layer::BatchNorm(bn), uniform(shape, &mut rng), Mode::Train)
        }
        "batchnorm_eval" => {
            let mut bn = BatchNorm::new(3);
            randomise_bn(&mut bn, &mut rng);
            (Layer::BatchNorm(bn), uniform(&[b, 3, 2, 2], &mut rng), Mode::Eval)
        }
        "relu" => (Layer::Relu, away_from_zero(&[b, 7], &mut rng), Mode::Train),
        "avgpool2d" => (Layer::AvgPool2d(AvgPool2d { kernel: 2 }), uniform(&[b, 2, 4, 6], &mut rng), Mode::Train),
        "adaptive_avgpool1d" => {
            let output = 1 + (k as usize % 3);
            (
                Layer::AdaptiveAvgPool1d(AdaptiveAvgPool1d { output }),
                uniform(&[b, 3, 7], &mut rng),
                Mode::Train,
            )
        }
        "flatten" => (Layer::Flatten, uniform(&[b, 2, 3, 2], &mut rng), Mode::Train),
        "time_to_channels" => (Layer::TimeToChannels, uniform(&[b, 5, 3], &mut rng), Mode::Train),
        other => panic!("unknown layer kind {other}"),
    }
}

pub const KINDS: [&str; 10] = [
    "conv2d",
    "conv1d",
    "linear",
    "batchnorm_train",
    "batchnorm_eval",
    "relu",
    "avgpool2d",
    "adaptive_avgpool1d",
    "flatten",
    "time_to_channels",
];

/// Worst error over 10 random instances of one layer kind.
pub fn worst_for_kind(kind: &str) -> f64 {
    (0..10)
        .map(|k| {
            let (layer, x, mode) = instances(kind, k);
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(77 + k);
            check_layer(layer, x, mode, &mut rng)
        })
        .fold(0.0, f64::max)
}
