use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{bce_with_logits, Adam, Mode, Network, Tensor};

/// A flat store of equally shaped samples with binary targets.
#[derive(Clone, Debug)]
pub struct Samples {
    data: Vec<f64>,
    sample_shape: Vec<usize>,
    targets: Vec<f64>,
}

impl Samples {
    pub fn new(sample_shape: Vec<usize>) -> Self {
        Self { data: Vec::new(), sample_shape, targets: Vec::new() }
    }

    pub fn push(&mut self, sample: &[f64], target: f64) -> Result<()> {
        let per: usize = self.sample_shape.iter().product();
        if sample.len() != per {
            return Err(Error::Input(format!("sample of {} values, expected {per}", sample.len())));
        }
        self.data.extend_from_slice(sample);
        self.targets.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn sample_shape(&self) -> &[usize] {
        &self.sample_shape
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let per: usize = self.sample_shape.iter().product();
        &self.data[i * per..(i + 1) * per]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    /// Stack the given samples into an input batch and a `(B, 1)` target tensor.
    pub fn batch(&self, idx: &[usize]) -> Result<(Tensor, Tensor)> {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| self.sample(i)).collect();
        let x = Tensor::stack(&rows, &self.sample_shape)?;
        let y = Tensor::new(vec![idx.len(), 1], idx.iter().map(|&i| self.targets[i]).collect())?;
        Ok((x, y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Weights of the best validation epoch, in eval mode.
    pub net: Network,
    pub best_epoch: usize,
    pub epochs_trained: usize,
    pub history: Vec<EpochStats>,
}

impl TrainOutcome {
    pub fn best(&self) -> &EpochStats {
        &self.history[self.best_epoch - 1]
    }
}

/// Consecutive chunks of `batch_size`; a trailing singleton is merged into
/// the previous chunk because train-mode BatchNorm needs two samples.
pub fn make_batches(idx: &[usize], batch_size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = Vec::new();
    let mut start = 0;
    while start < idx.len() {
        let end = (start + batch_size).min(idx.len());
        if end - start == 1 && !out.is_empty() {
            let prev = out.pop().expect("non-empty");
            let begin = idx.len() - 1 - prev.len();
            out.push(&idx[begin..]);
        } else {
            out.push(&idx[start..end]);
        }
        start = end;
    }
    out
}

/// Eval-mode mean BCE and accuracy (logit > 0 predicts the positive class).
pub fn evaluate(net: &Network, data: &Samples, idx: &[usize], batch_size: usize) -> Result<(f64, f64)> {
    if idx.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty set".into()));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, y) = data.batch(chunk)?;
        let z = net.predict(&x)?;
        let (l, _) = bce_with_logits(&z, &y)?;
        loss += l * chunk.len() as f64;
        correct += z
            .data()
            .iter()
            .zip(y.data())
            .filter(|(z, y)| (**z > 0.0) == (**y > 0.5))
            .count();
    }
    Ok((loss / idx.len() as f64, correct as f64 / idx.len() as f64))
}

/// Mini-batch Adam on BCE with early stopping on validation accuracy
/// (ties: lower validation loss, then the earlier epoch). The returned
/// network carries the best epoch's weights.
pub fn train_with_early_stopping(
    mut net: Network,
    data: &Samples,
    train_idx: &[usize],
    val_idx: &[usize],
    settings: &TrainSettings,
) -> Result<TrainOutcome> {
    if train_idx.len() < 2 {
        return Err(Error::Input(format!("need at least 2 training samples, got {}", train_idx.len())));
    }
    if val_idx.is_empty() {
        return Err(Error::Input("validation set is empty".into()));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(settings.seed);
    let mut opt = Adam::new(settings.learning_rate, settings.weight_decay);
    let mut order = train_idx.to_vec();
    let mut history = Vec::new();
    let mut best: Option<(f64, f64, usize, Network)> = None;
    let mut best_acc_seen = f64::NEG_INFINITY;
    let mut stale = 0usize;

    for epoch in 1..=settings.max_epochs {
        net.set_mode(Mode::Train);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in make_batches(&order, settings.batch_size) {
            let (x, y) = data.batch(chunk)?;
            net.zero_grad();
            let z = net.forward(&x)?;
            let (loss, grad) = bce_with_logits(&z, &y)?;
            net.backward(&grad)?;
            opt.step(net.params_mut())?;
            loss_sum += loss * chunk.len() as f64;
            correct += z.data().iter().zip(y.data()).filter(|(z, y)| (**z > 0.0) == (**y > 0.5)).count();
        }
        net.set_mode(Mode::Eval);
        let (val_loss, val_accuracy) = evaluate(&net, data, val_idx, settings.batch_size)?;
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            val_loss,
            val_accuracy,
        };
        debug!("epoch {epoch}: {stats:?}");
        history.push(stats);

        let better = match &best {
            None => true,
            Some((acc, loss, _, _)) => val_accuracy > *acc || (val_accuracy == *acc && val_loss < *loss),
        };
        if better {
            best = Some((val_accuracy, val_loss, epoch, net.clone()));
        }
        if val_accuracy > best_acc_seen {
            best_acc_seen = val_accuracy;
            stale = 0;
        } else {
            stale += 1;
            if stale >= settings.patience {
                info!("early stop after epoch {epoch}");
                break;
            }
        }
    }
    let (_, _, best_epoch, mut best_net) = best.expect("at least one epoch");
    best_net.set_mode(Mode::Eval);
    Ok(TrainOutcome {
        net: best_net,
        best_epoch,
        epochs_trained: history.len(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Layer, Linear};

    #[test]
    fn batches_merge_trailing_singleton() {
        let idx: Vec<usize> = (0..9).collect();
        let b = make_batches(&idx, 4);
        assert_eq!(b.iter().map(|c| c.len()).collect::<Vec<_>>(), vec![4, 5]);
        let b = make_batches(&idx[..8], 4);
        assert_eq!(b.iter().map(|c| c.len()).collect::<Vec<_>>(), vec![4, 4]);
        assert_eq!(make_batches(&idx[..1], 4).len(), 1);
    }

    fn toy() -> Samples {
        let mut s = Samples::new(vec![2]);
        for i in 0..40 {
            let y = (i % 2) as f64;
            let x = [2.0 * y - 1.0 + 0.1 * ((i * 7 % 5) as f64 - 2.0), 0.3 * (i % 3) as f64];
            s.push(&x, y).unwrap();
        }
        s
    }

    #[test]
    fn learns_separable_toy_problem() {
        use rand::SeedableRng;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let net = Network::new(vec![Layer::Linear(Linear::new(2, 1, &mut rng))]);
        let data = toy();
        let idx: Vec<usize> = (0..30).collect();
        let val: Vec<usize> = (30..40).collect();
        let settings = TrainSettings {
            learning_rate: 0.05,
            weight_decay: 0.0,
            batch_size: 8,
            max_epochs: 50,
            patience: 5,
            seed: 1,
        };
        let out = train_with_early_stopping(net, &data, &idx, &val, &settings).unwrap();
        assert_eq!(out.best().val_accuracy, 1.0);
        assert!(out.epochs_trained <= 50);
        let (_, acc) = evaluate(&out.net, &data, &val, 4).unwrap();
        assert_eq!(acc, 1.0);
        // best epoch is the first one reaching the best (accuracy, loss) pair
        let best = out.best();
        for h in &out.history {
            assert!(h.val_accuracy < best.val_accuracy || (h.val_accuracy == best.val_accuracy && h.val_loss >= best.val_loss));
        }
    }

    #[test]
    fn patience_stops_early() {
        use rand::SeedableRng;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let net = Network::new(vec![Layer::Linear(Linear::new(2, 1, &mut rng))]);
        let data = toy();
        let settings = TrainSettings {
            learning_rate: 0.0,
            weight_decay: 0.0,
            batch_size: 8,
            max_epochs: 100,
            patience: 3,
            seed: 1,
        };
        let out = train_with_early_stopping(net, &data, &(0..30).collect::<Vec<_>>(), &(30..40).collect::<Vec<_>>(), &settings).unwrap();
        assert_eq!(out.epochs_trained, 4);
        assert_eq!(out.best_epoch, 1);
    }
}
