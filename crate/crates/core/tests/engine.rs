mod support;

use eegsel::models::{build_cnn, build_tcn, count_macs, count_params, MacScope};
use eegsel::nn::{bce_with_logits, Adam, BatchNorm, Conv1d, Layer, Linear, Mode, Network, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use support::oracles::{eval_cnn, random_image};

/// Conv -> BN -> Linear without a nonlinearity: affine once BN is frozen.
fn affine_net(seed: u64) -> Network {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut bn = BatchNorm::new(4);
    for (i, v) in bn.running_var.iter_mut().enumerate() {
        *v = 0.5 + i as f64;
    }
    let mut net = Network::new(vec![
        Layer::TimeToChannels,
        Layer::Conv1d(Conv1d::same(3, 4, 5, 2, &mut rng)),
        Layer::BatchNorm(bn),
        Layer::Flatten,
        Layer::Linear(Linear::new(4 * 12, 2, &mut rng)),
    ]);
    net.set_mode(Mode::Eval);
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eval_network_without_relu_is_affine(seed in 0u64..1000, t in -2.0f64..3.0) {
        let net = affine_net(seed);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed + 7);
        let x = Tensor::new(vec![1, 12, 3], (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let y = Tensor::new(vec![1, 12, 3], (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mix = x.zip_map(&y, |a, b| t * a + (1.0 - t) * b).unwrap();
        let (fx, fy, fm) = (net.predict(&x).unwrap(), net.predict(&y).unwrap(), net.predict(&mix).unwrap());
        for k in 0..2 {
            let want = t * fx.data()[k] + (1.0 - t) * fy.data()[k];
            prop_assert!((fm.data()[k] - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn bce_is_nonnegative_and_finite(z in -800.0f64..800.0, y in 0u8..2) {
        let logits = Tensor::new(vec![1, 1], vec![z]).unwrap();
        let target = Tensor::new(vec![1, 1], vec![y as f64]).unwrap();
        let (loss, grad) = bce_with_logits(&logits, &target).unwrap();
        prop_assert!(loss >= 0.0 && loss.is_finite() && grad.all_finite());
    }
}

#[test]
fn same_seed_same_outputs() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let x = random_image(&mut rng);
    let a = eval_cnn(5).predict(&x).unwrap();
    let b = eval_cnn(5).predict(&x).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, eval_cnn(6).predict(&x).unwrap());
}

#[test]
fn batch_results_match_single_samples_in_eval() {
    let net = eval_cnn(8);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let xs: Vec<Tensor> = (0..3).map(|_| random_image(&mut rng)).collect();
    let batch = Tensor::stack(&xs.iter().map(|t| t.data()).collect::<Vec<_>>(), &[1, 32, 32]).unwrap();
    let out = net.predict(&batch).unwrap();
    for (i, x) in xs.iter().enumerate() {
        assert!((out.data()[i] - net.predict(x).unwrap().data()[0]).abs() <= 1e-12);
    }
}

#[test]
fn state_round_trip_preserves_predictions() {
    let net = eval_cnn(9);
    let mut buf = Vec::new();
    net.write_state(&mut buf).unwrap();
    let mut other = build_cnn(123);
    other.read_state(&mut buf.as_slice()).unwrap();
    other.set_mode(Mode::Eval);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let x = random_image(&mut rng);
    assert_eq!(net.predict(&x).unwrap(), other.predict(&x).unwrap());
    assert!(build_tcn(8, 0).unwrap().read_state(&mut buf.as_slice()).is_err());
}

#[test]
fn adam_fits_a_tiny_problem() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let mut net = Network::new(vec![Layer::Linear(Linear::new(2, 1, &mut rng))]);
    let mut opt = Adam::new(0.05, 0.0);
    let x = Tensor::new(vec![4, 2], vec![1.0, 1.0, 2.0, 1.5, -1.0, -1.0, -2.0, -0.5]).unwrap();
    let y = Tensor::new(vec![4, 1], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        net.zero_grad();
        let out = net.forward(&x).unwrap();
        let (loss, g) = bce_with_logits(&out, &y).unwrap();
        net.backward(&g).unwrap();
        opt.step(net.params_mut()).unwrap();
        last = loss;
    }
    assert!(last < 0.05, "{last}");
}

#[test]
fn complexity_counts() {
    let expected = [(64, 181_121), (48, 166_785), (32, 152_449), (16, 138_113), (8, 130_945)];
    for (c, p) in expected {
        assert_eq!(count_params(&build_tcn(c, 0).unwrap()), p);
    }
    let macs = count_macs(&build_tcn(64, 0).unwrap(), &[1280, 64], MacScope::Convolutions).unwrap();
    assert_eq!(macs, 220_200_960);
}
