use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dsp::Label;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Independent seed for fold `fold` of an experiment seeded with `base`.
pub fn fold_seed(base: u64, fold: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (fold as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn allocate(n: usize, fractions: [f64; 3]) -> (usize, usize) {
    let tr = ((fractions[0] * n as f64).round() as usize).min(n);
    let va = ((fractions[1] * n as f64).round() as usize).min(n - tr);
    (tr, va)
}

fn check_fractions(f: [f64; 3]) -> Result<()> {
    if f.iter().any(|v| !(0.0..=1.0).contains(v)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("split fractions {f:?} must be in [0,1] and sum to 1")));
    }
    Ok(())
}

/// Per-class seeded shuffle with proportional allocation; each subset is
/// finally shuffled so that prefixes are class-mixed.
pub fn stratified_split(labels: &[Label], fractions: [f64; 3], seed: u64) -> Result<Split> {
    check_fractions(fractions)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut split = Split { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for class in [Label::Left, Label::Right] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            return Err(Error::Input(format!("class {class:?} absent from the windows")));
        }
        if idx.len() < 10 {
            log::warn!("only {} windows of class {class:?}", idx.len());
        }
        idx.shuffle(&mut rng);
        let (tr, va) = allocate(idx.len(), fractions);
        split.train.extend_from_slice(&idx[..tr]);
        split.val.extend_from_slice(&idx[tr..tr + va]);
        split.test.extend_from_slice(&idx[tr + va..]);
    }
    split.train.shuffle(&mut rng);
    split.val.shuffle(&mut rng);
    split.test.shuffle(&mut rng);
    Ok(split)
}

/// Like [`stratified_split`] but whole trials go to one subset, so overlapping
/// windows of a trial never straddle train and test.
pub fn stratified_trial_split(labels: &[Label], trial_ids: &[usize], fractions: [f64; 3], seed: u64) -> Result<Split> {
    if labels.len() != trial_ids.len() {
        return Err(Error::Input("labels and trial ids differ in length".into()));
    }
    let mut trials: Vec<(usize, Label)> = Vec::new();
    for (&t, &l) in trial_ids.iter().zip(labels) {
        match trials.iter().find(|(id, _)| *id == t) {
            Some(&(_, prev)) if prev != l => {
                return Err(Error::Input(format!("trial {t} has windows with different labels")))
            }
            Some(_) => {}
            None => trials.push((t, l)),
        }
    }
    let trial_labels: Vec<Label> = trials.iter().map(|t| t.1).collect();
    let by_trial = stratified_split(&trial_labels, fractions, seed)?;
    let trials = &trials;
    let expand = |set: &[usize]| -> Vec<usize> {
        set.iter()
            .flat_map(|&k| (0..trial_ids.len()).filter(move |&i| trial_ids[i] == trials[k].0))
            .collect()
    };
    Ok(Split {
        train: expand(&by_trial.train),
        val: expand(&by_trial.val),
        test: expand(&by_trial.test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(left: usize, right: usize) -> Vec<Label> {
        let mut v = vec![Label::Left; left];
        v.extend(vec![Label::Right; right]);
        v
    }

    #[test]
    fn window_count_arithmetic() {
        let s = stratified_split(&labels(270, 270), [0.8, 0.1, 0.1], 4).unwrap();
        let test_left = s.test.iter().filter(|&&i| i < 270).count();
        assert!((26..=28).contains(&test_left));
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 540);
    }

    #[test]
    fn all_train() {
        let s = stratified_split(&labels(12, 11), [1.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(s.train.len(), 23);
        assert!(s.val.is_empty() && s.test.is_empty());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let l = labels(40, 40);
        assert_eq!(stratified_split(&l, [0.8, 0.1, 0.1], 7).unwrap(), stratified_split(&l, [0.8, 0.1, 0.1], 7).unwrap());
        assert_ne!(stratified_split(&l, [0.8, 0.1, 0.1], 7).unwrap(), stratified_split(&l, [0.8, 0.1, 0.1], 8).unwrap());
    }

    #[test]
    fn missing_class() {
        assert!(matches!(stratified_split(&labels(20, 0), [0.8, 0.1, 0.1], 0), Err(Error::Input(_))));
    }

    #[test]
    fn trial_split_keeps_trials_whole() {
        let mut l = Vec::new();
        let mut ids = Vec::new();
        for t in 0..30 {
            for _ in 0..3 {
                l.push(if t % 2 == 0 { Label::Left } else { Label::Right });
                ids.push(t);
            }
        }
        let s = stratified_trial_split(&l, &ids, [0.8, 0.1, 0.1], 1).unwrap();
        let owner = |set: &[usize]| set.iter().map(|&i| ids[i]).collect::<std::collections::HashSet<_>>();
        assert!(owner(&s.train).is_disjoint(&owner(&s.test)));
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 90);
    }

    proptest! {
        #[test]
        fn partition_and_class_balance(left in 10usize..200, right in 10usize..200, seed in 0u64..1000) {
            let l = labels(left, right);
            let s = stratified_split(&l, [0.8, 0.1, 0.1], seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..left + right).collect::<Vec<_>>());
            let global = left as f64 / (left + right) as f64;
            for set in [&s.train, &s.val, &s.test] {
                if set.is_empty() { continue; }
                let share = set.iter().filter(|&&i| i < left).count() as f64 / set.len() as f64;
                prop_assert!((share - global).abs() <= 1.0 / set.len() as f64 + 1e-12);
            }
        }
    }
}
