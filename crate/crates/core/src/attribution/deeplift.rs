//! DeepLIFT (Rescale rule) and its background-averaged form, DeepSHAP.

use crate::error::{Error, Result};
use crate::nn::{Layer, Mode, Network, Tensor};

/// Below this |a - a0| a ReLU multiplier falls back to the midpoint derivative.
pub const RESCALE_EPS: f64 = 1e-7;

fn rescale(a: f64, a0: f64) -> f64 {
    let d = a - a0;
    if d.abs() > RESCALE_EPS {
        (a.max(0.0) - a0.max(0.0)) / d
    } else if 0.5 * (a + a0) > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn check_eval(net: &Network) -> Result<()> {
    if net.mode() != Mode::Eval {
        return Err(Error::State("attribution requires the network in eval mode".into()));
    }
    Ok(())
}

/// Explains single inputs against a fixed set of baselines, whose activations
/// are computed once and reused.
pub struct DeepShapExplainer {
    net: Network,
    baseline_acts: Vec<Tensor>,
    n_baselines: usize,
}

impl DeepShapExplainer {
    /// `baselines` is a batch `(B, ...)` of reference inputs.
    pub fn new(net: &Network, baselines: &Tensor) -> Result<Self> {
        check_eval(net)?;
        if baselines.ndim() == 0 || baselines.batch() == 0 {
            return Err(Error::Input("DeepSHAP needs at least one background sample".into()));
        }
        let baseline_acts = net.trace(baselines)?;
        let out = baseline_acts.last().expect("non-empty");
        if out.len() != baselines.batch() {
            return Err(Error::Input(format!("network must emit one logit per sample, got shape {:?}", out.shape())));
        }
        Ok(Self {
            net: {
                let mut n = Network::new(net.layers().to_vec());
                n.set_mode(Mode::Eval);
                n
            },
            n_baselines: baselines.batch(),
            baseline_acts,
        })
    }

    pub fn n_baselines(&self) -> usize {
        self.n_baselines
    }

    /// Logits of the baselines.
    pub fn baseline_outputs(&self) -> &[f64] {
        self.baseline_acts.last().expect("non-empty").data()
    }

    /// Per-baseline attributions `(B, ...)` for one input of batch size 1.
    pub fn attribute_each(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.ndim() == 0 || x.batch() != 1 || x.shape()[1..] != self.baseline_acts[0].shape()[1..] {
            return Err(Error::Input(format!(
                "expected a single input of shape [1, {:?}], got {:?}",
                &self.baseline_acts[0].shape()[1..],
                x.shape()
            )));
        }
        let x_acts = self.net.trace(x)?;
        let b = self.n_baselines;
        let mut m = Tensor::filled(&[b, 1], 1.0);
        for (i, layer) in self.net.layers_mut().iter_mut().enumerate().rev() {
            let base_in = &self.baseline_acts[i];
            m = match layer {
                Layer::Relu => {
                    let a = x_acts[i].data();
                    let per = a.len();
                    let mut out = m.clone().reshape(base_in.shape().to_vec())?;
                    for (k, mv) in out.data_mut().iter_mut().enumerate() {
                        *mv *= rescale(a[k % per], base_in.data()[k]);
                    }
                    out
                }
                _ => layer.backward(base_in, &m, Mode::Eval, false)?,
            };
        }
        let x0 = x.data();
        let per = x0.len();
        let base = self.baseline_acts[0].data();
        for (k, mv) in m.data_mut().iter_mut().enumerate() {
            *mv *= x0[k % per] - base[k];
        }
        Ok(m)
    }

    /// Mean over baselines of the per-baseline attributions, shaped like `x`.
    pub fn attribute(&mut self, x: &Tensor) -> Result<Tensor> {
        let each = self.attribute_each(x)?;
        let per = x.len();
        let mut out = vec![0.0; per];
        for row in each.data().chunks(per) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        let inv = 1.0 / self.n_baselines as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        Tensor::new(x.shape().to_vec(), out)
    }
}

/// DeepLIFT attribution of `x` relative to a single `baseline` (both batch 1).
pub fn deeplift_attribute(net: &Network, x: &Tensor, baseline: &Tensor) -> Result<Tensor> {
    DeepShapExplainer::new(net, baseline)?.attribute(x)
}

/// DeepSHAP: DeepLIFT averaged over a background batch.
pub fn deepshap_attribute(net: &Network, x: &Tensor, backgrounds: &Tensor) -> Result<Tensor> {
    DeepShapExplainer::new(net, backgrounds)?.attribute(x)
}
