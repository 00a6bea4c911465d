//! DeepSHAP on a small ReLU network against brute-force Shapley values, and
//! the completeness gap on the topographic CNN.

use eegsel::attribution::{deeplift_attribute, exact_shapley};
use eegsel::models::build_cnn;
use eegsel::nn::{Layer, Linear, Mode, Network, Tensor};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn main() -> eegsel::Result<()> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let n = 6;
    let mut net = Network::new(vec![
        Layer::Linear(Linear::new(n, 5, &mut rng)),
        Layer::Relu,
        Layer::Linear(Linear::new(5, 1, &mut rng)),
    ]);
    net.set_mode(Mode::Eval);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = vec![0.0; n];
    let row = |v: &[f64]| Tensor::new(vec![1, v.len()], v.to_vec());
    let f = |z: &[f64]| net.predict(&row(z).unwrap()).unwrap().data()[0];

    let dl = deeplift_attribute(&net, &row(&x)?, &row(&b)?)?;
    let sh = exact_shapley(f, &x, &b)?;
    println!("feature  deeplift   shapley");
    for i in 0..n {
        println!("{i:>7} {:9.5} {:9.5}", dl.data()[i], sh[i]);
    }
    println!("sums     {:9.5} {:9.5}   f(x)-f(b) {:.5}", dl.sum(), sh.iter().sum::<f64>(), f(&x) - f(&b));

    let mut cnn = build_cnn(0);
    cnn.set_mode(Mode::Eval);
    let img = |rng: &mut Xoshiro256PlusPlus| Tensor::new(vec![1, 1, 32, 32], (0..1024).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let (xi, bi) = (img(&mut rng)?, img(&mut rng)?);
    let phi = deeplift_attribute(&cnn, &xi, &bi)?;
    let delta = cnn.predict(&xi)?.data()[0] - cnn.predict(&bi)?.data()[0];
    println!("CNN: sum of attributions {:.12}, output difference {:.12}", phi.sum(), delta);
    Ok(())
}
