mod support;

use support::gradcheck::{rel_err, worst_for_kind, H, KINDS, TOLERANCE};

use eegsel::models::build_tcn;
use eegsel::nn::{bce_with_logits, Tensor};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[test]
fn every_layer_matches_finite_differences() {
    for kind in KINDS {
        let worst = worst_for_kind(kind);
        assert!(worst <= TOLERANCE, "{kind}: relative error {worst:e}");
    }
}

#[test]
fn bce_gradient_matches_finite_differences() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let z = Tensor::new(vec![6, 1], (0..6).map(|_| rng.gen_range(-4.0..4.0)).collect()).unwrap();
    let y = Tensor::new(vec![6, 1], vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    let (_, g) = bce_with_logits(&z, &y).unwrap();
    let numeric: Vec<f64> = (0..6)
        .map(|i| {
            let mut zp = z.clone();
            zp.data_mut()[i] += H;
            let mut zm = z.clone();
            zm.data_mut()[i] -= H;
            (bce_with_logits(&zp, &y).unwrap().0 - bce_with_logits(&zm, &y).unwrap().0) / (2.0 * H)
        })
        .collect();
    assert!(rel_err(g.data(), &numeric) <= TOLERANCE);
}

#[test]
fn whole_tcn_input_gradient() {
    let mut net = build_tcn(3, 11).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
    let x = Tensor::new(vec![2, 16, 3], (0..96).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    net.set_mode(eegsel::nn::Mode::Eval);
    let y = net.forward(&x).unwrap();
    let dx = net.backward(&Tensor::filled(y.shape(), 1.0)).unwrap();
    let f = |x: &Tensor| net.predict(x).unwrap().sum();
    let numeric: Vec<f64> = (0..x.len())
        .map(|i| {
            let mut xp = x.clone();
            xp.data_mut()[i] += H;
            let mut xm = x.clone();
            xm.data_mut()[i] -= H;
            (f(&xp) - f(&xm)) / (2.0 * H)
        })
        .collect();
    let err = rel_err(dx.data(), &numeric);
    assert!(err <= TOLERANCE, "{err:e}");
}
