mod support;

use eegsel::attribution::{
    deeplift_attribute, deepshap_attribute, exact_shapley, global_importance, rank_channels, ChannelRanking,
    DeepShapExplainer,
};
use eegsel::data::biosemi64_layout;
use eegsel::nn::{Mode, Tensor};
use eegsel::topomap::{head_mask, GRID};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use support::oracles::{eval_cnn, linear_model, random_image, row, scalar_fn, two_layer_model};

#[test]
fn cnn_completeness_per_baseline() {
    let net = eval_cnn(3);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    for _ in 0..10 {
        let x = random_image(&mut rng);
        let b = random_image(&mut rng);
        let phi = deeplift_attribute(&net, &x, &b).unwrap();
        let delta = net.predict(&x).unwrap().data()[0] - net.predict(&b).unwrap().data()[0];
        assert!((phi.sum() - delta).abs() <= 1e-6 * (1.0 + delta.abs()), "{} vs {delta}", phi.sum());
    }
}

#[test]
fn deepshap_completeness_and_mean_invariance() {
    let net = eval_cnn(4);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let bgs: Vec<Tensor> = (0..4).map(|_| random_image(&mut rng)).collect();
    let stack = |v: &[&Tensor]| Tensor::stack(&v.iter().map(|t| t.data()).collect::<Vec<_>>(), &[1, 32, 32]).unwrap();
    let bg = stack(&bgs.iter().collect::<Vec<_>>());
    let doubled = stack(&bgs.iter().chain(bgs.iter()).collect::<Vec<_>>());
    let x = random_image(&mut rng);
    let a = deepshap_attribute(&net, &x, &bg).unwrap();
    let b = deepshap_attribute(&net, &x, &doubled).unwrap();
    for (p, q) in a.data().iter().zip(b.data()) {
        assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
    }
    let mean_bg = net.predict(&bg).unwrap().data().iter().sum::<f64>() / 4.0;
    let delta = net.predict(&x).unwrap().data()[0] - mean_bg;
    assert!((a.sum() - delta).abs() <= 1e-6 * (1.0 + delta.abs()));
    let single = deepshap_attribute(&net, &x, &bgs[0]).unwrap();
    assert_eq!(single, deeplift_attribute(&net, &x, &bgs[0]).unwrap());
}

#[test]
fn masked_pixels_get_zero_attribution() {
    let net = eval_cnn(5);
    let mask = head_mask();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let keep = Tensor::new(vec![1, 1, 32, 32], mask.iter().map(|&m| m as u8 as f64).collect()).unwrap();
    let masked = |t: Tensor| t.zip_map(&keep, |a, m| a * m).unwrap();
    let x = masked(random_image(&mut rng));
    let b = masked(random_image(&mut rng));
    let phi = deeplift_attribute(&net, &x, &b).unwrap();
    for k in 0..GRID * GRID {
        if !mask[k] {
            assert_eq!(phi.data()[k], 0.0);
        }
    }
}

#[test]
fn no_relu_crossing_equals_gradient_times_delta() {
    let mut net = eval_cnn(6);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let x = random_image(&mut rng);
    // a tiny perturbation keeps every ReLU on the same side
    let noise: Vec<f64> = (0..x.len()).map(|_| 1e-9 * rng.gen_range(-1.0..1.0)).collect();
    let b = Tensor::new(x.shape().to_vec(), x.data().iter().zip(&noise).map(|(v, e)| v + e).collect()).unwrap();
    let phi = deeplift_attribute(&net, &x, &b).unwrap();
    net.set_mode(Mode::Eval);
    let y = net.forward(&x).unwrap();
    let grad = net.backward(&Tensor::filled(y.shape(), 1.0)).unwrap();
    for ((p, g), (xv, bv)) in phi.data().iter().zip(grad.data()).zip(x.data().iter().zip(b.data())) {
        assert!((p - g * (xv - bv)).abs() <= 1e-8);
    }
}

#[test]
fn explainer_reuses_background_cache() {
    let net = eval_cnn(7);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let bg = random_image(&mut rng);
    let mut ex = DeepShapExplainer::new(&net, &bg).unwrap();
    let x1 = random_image(&mut rng);
    let x2 = random_image(&mut rng);
    assert_eq!(ex.attribute(&x1).unwrap(), deeplift_attribute(&net, &x1, &bg).unwrap());
    assert_eq!(ex.attribute(&x2).unwrap(), deeplift_attribute(&net, &x2, &bg).unwrap());
    assert!(ex.attribute(&Tensor::zeros(&[2, 1, 32, 32])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deeplift_equals_shapley_on_linear_models(
        w in prop::collection::vec(-3.0f64..3.0, 1..=12),
        seed in 0u64..1000,
    ) {
        let n = w.len();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let net = linear_model(&w, 0.7);
        let dl = deeplift_attribute(&net, &row(&x), &row(&b)).unwrap();
        let sh = exact_shapley(scalar_fn(&net), &x, &b).unwrap();
        for (p, q) in dl.data().iter().zip(&sh) {
            prop_assert!((p - q).abs() <= 1e-8);
        }
    }

    #[test]
    fn shapley_axioms_on_two_layer_models(n in 2usize..=8, seed in 0u64..1000) {
        let net = two_layer_model(n, 6, seed);
        let f = scalar_fn(&net);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed + 1);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        x[0] = b[0]; // null player
        let phi = exact_shapley(&f, &x, &b).unwrap();
        prop_assert!((phi.iter().sum::<f64>() - (f(&x) - f(&b))).abs() <= 1e-10);
        prop_assert!(phi[0].abs() <= 1e-12);
    }

    #[test]
    fn symmetric_players_share_equally(a in -2.0f64..2.0, c in -2.0f64..2.0) {
        let f = |z: &[f64]| (z[0] + z[1]).max(0.0) * z[2] + z[0] * z[1];
        let phi = exact_shapley(f, &[a, a, c], &[0.1, 0.1, -0.3]).unwrap();
        prop_assert!((phi[0] - phi[1]).abs() <= 1e-12);
    }

    #[test]
    fn ranking_order_is_scale_invariant(seed in 0u64..500, c in 0.01f64..100.0) {
        let layout = biosemi64_layout();
        let mask = head_mask();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let map: Vec<f64> = (0..GRID * GRID).map(|_| rng.gen_range(0.0..1.0)).collect();
        let scaled: Vec<f64> = map.iter().map(|v| v * c).collect();
        let a = rank_channels(&map, &layout, &mask).unwrap();
        let b = rank_channels(&scaled, &layout, &mask).unwrap();
        prop_assert_eq!(a.top_indices(64).unwrap(), b.top_indices(64).unwrap());
    }

    #[test]
    fn global_importance_nonnegative(maps in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 16), 1..6)) {
        let g = global_importance(maps.iter().map(|m| m.as_slice())).unwrap();
        prop_assert!(g.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn full_ranking_is_a_permutation() {
    let layout = biosemi64_layout();
    let scores: Vec<f64> = (0..64).map(|i| ((i * 29) % 64) as f64).collect();
    let r = ChannelRanking::from_scores(&scores, &layout).unwrap();
    let mut idx = r.top_indices(64).unwrap();
    assert!(r.entries().windows(2).all(|w| w[0].score >= w[1].score));
    idx.sort_unstable();
    assert_eq!(idx, (0..64).collect::<Vec<_>>());
}
