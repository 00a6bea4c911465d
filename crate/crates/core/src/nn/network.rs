use std::io::{Read, Write};

use super::layers::{Layer, Mode, Param};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// An ordered stack of layers with a train/eval switch.
///
/// `forward` caches every activation so that `backward` can run; `trace` is
/// the side-effect-free eval pass used by attribution.
#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<Layer>,
    mode: Mode,
    cache: Option<Vec<Tensor>>,
}

fn ensure_finite(t: &Tensor, what: &str) -> Result<()> {
    if t.all_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self {
            layers,
            mode: Mode::Train,
            cache: None,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.cache = None;
    }

    /// Forward pass that records activations for a subsequent `backward`.
    /// In train mode BatchNorm running statistics are updated.
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mode = self.mode;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &mut self.layers {
            let input = acts.last().expect("non-empty");
            let y = layer.forward(input, mode)?;
            if let (Mode::Train, Layer::BatchNorm(bn)) = (mode, &mut *layer) {
                bn.update_running(input)?;
            }
            ensure_finite(&y, layer.name())?;
            acts.push(y);
        }
        let out = acts.last().expect("non-empty").clone();
        self.cache = Some(acts);
        Ok(out)
    }

    /// Backpropagate `loss_grad` (dL/dlogits), accumulating parameter gradients.
    /// Returns dL/dinput.
    pub fn backward(&mut self, loss_grad: &Tensor) -> Result<Tensor> {
        let acts = self
            .cache
            .take()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        let out_shape = acts.last().expect("non-empty").shape();
        if loss_grad.shape() != out_shape {
            return Err(Error::Config(format!(
                "loss gradient shape {:?} does not match output {:?}",
                loss_grad.shape(),
                out_shape
            )));
        }
        let mode = self.mode;
        let mut g = loss_grad.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            g = layer.backward(&acts[i], &g, mode, true)?;
            ensure_finite(&g, layer.name())?;
        }
        for p in self.params() {
            ensure_finite(&p.grad, "parameter gradient")?;
        }
        Ok(g)
    }

    /// All activations of an eval-mode pass, input first. Does not touch state.
    pub fn trace(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let y = layer.forward(acts.last().expect("non-empty"), Mode::Eval)?;
            ensure_finite(&y, layer.name())?;
            acts.push(y);
        }
        Ok(acts)
    }

    /// Eval-mode logits without caching.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let mut y = x.clone();
        for layer in &self.layers {
            y = layer.forward(&y, Mode::Eval)?;
            ensure_finite(&y, layer.name())?;
        }
        Ok(y)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(0.0);
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    /// Trainable element count (BatchNorm running statistics excluded).
    pub fn count_params(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    /// Every stored number in a fixed order: parameters, then BN running stats.
    fn state_vectors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for p in layer.params() {
                out.push(p.value.data());
            }
            if let Layer::BatchNorm(bn) = layer {
                out.push(&bn.running_mean[..]);
                out.push(&bn.running_var[..]);
            }
        }
        out
    }

    fn state_vectors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.value.data_mut());
                    out.push(bn.beta.value.data_mut());
                    out.push(&mut bn.running_mean[..]);
                    out.push(&mut bn.running_var[..]);
                }
                other => {
                    for p in other.params_mut() {
                        out.push(p.value.data_mut());
                    }
                }
            }
        }
        out
    }

    /// Serialize weights and running statistics as little-endian f64.
    pub fn write_state(&self, w: &mut impl Write) -> std::io::Result<()> {
        let vecs = self.state_vectors();
        w.write_all(b"NETS")?;
        w.write_all(&(vecs.len() as u32).to_le_bytes())?;
        for v in vecs {
            w.write_all(&(v.len() as u64).to_le_bytes())?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Load state written by `write_state` into an identically built network.
    pub fn read_state(&mut self, r: &mut impl Read) -> Result<()> {
        let bad = |msg: String| Error::Config(format!("network state: {msg}"));
        let mut buf4 = [0u8; 4];
        let mut buf8 = [0u8; 8];
        let io = |e: std::io::Error| bad(e.to_string());
        r.read_exact(&mut buf4).map_err(io)?;
        if &buf4 != b"NETS" {
            return Err(bad("bad magic".into()));
        }
        r.read_exact(&mut buf4).map_err(io)?;
        let count = u32::from_le_bytes(buf4) as usize;
        let mut targets = self.state_vectors_mut();
        if count != targets.len() {
            return Err(bad(format!("expected {} tensors, found {count}", targets.len())));
        }
        for t in targets.iter_mut() {
            r.read_exact(&mut buf8).map_err(io)?;
            let n = u64::from_le_bytes(buf8) as usize;
            if n != t.len() {
                return Err(bad(format!("tensor length {n} != expected {}", t.len())));
            }
            for v in t.iter_mut() {
                r.read_exact(&mut buf8).map_err(io)?;
                *v = f64::from_le_bytes(buf8);
            }
        }
        self.cache = None;
        Ok(())
    }
}
