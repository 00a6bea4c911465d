//! Network constructors for the topographic CNN and the channel-reduced TCN,
//! plus analytic complexity counters.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::nn::{AdaptiveAvgPool1d, AvgPool2d, BatchNorm, Conv1d, Conv2d, Layer, Linear, Network};

/// Side length of the square topographic input image.
pub const IMAGE_SIZE: usize = 32;
/// Width of the TCN feature maps.
pub const TCN_WIDTH: usize = 128;
pub const TCN_KERNEL: usize = 7;
pub const TCN_DILATIONS: [usize; 2] = [1, 2];
/// Channel budgets evaluated by default (largest first).
pub const DEFAULT_BUDGETS: [usize; 5] = [64, 48, 32, 16, 8];

/// Conv(1->32, 3x3, s1, p1) -> BN -> ReLU -> AvgPool 2x2 -> 8192 -> 128 -> 64 -> 1.
pub fn build_cnn(seed: u64) -> Network {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let flat = 32 * (IMAGE_SIZE / 2) * (IMAGE_SIZE / 2);
    Network::new(vec![
        Layer::Conv2d(Conv2d::new(1, 32, 3, 1, 1, &mut rng)),
        Layer::BatchNorm(BatchNorm::new(32)),
        Layer::Relu,
        Layer::AvgPool2d(AvgPool2d { kernel: 2 }),
        Layer::Flatten,
        Layer::Linear(Linear::new(flat, 128, &mut rng)),
        Layer::Relu,
        Layer::Linear(Linear::new(128, 64, &mut rng)),
        Layer::Relu,
        Layer::Linear(Linear::new(64, 1, &mut rng)),
    ])
}

/// Two dilated conv blocks over a (batch, time, channels) input, global
/// average pooling and a 128 -> 64 -> 1 head.
pub fn build_tcn(channels: usize, seed: u64) -> Result<Network> {
    if !(1..=64).contains(&channels) {
        return Err(Error::Input(format!("TCN channel count {channels} outside 1..=64")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let [d1, d2] = TCN_DILATIONS;
    Ok(Network::new(vec![
        Layer::TimeToChannels,
        Layer::Conv1d(Conv1d::same(channels, TCN_WIDTH, TCN_KERNEL, d1, &mut rng)),
        Layer::BatchNorm(BatchNorm::new(TCN_WIDTH)),
        Layer::Relu,
        Layer::Conv1d(Conv1d::same(TCN_WIDTH, TCN_WIDTH, TCN_KERNEL, d2, &mut rng)),
        Layer::BatchNorm(BatchNorm::new(TCN_WIDTH)),
        Layer::Relu,
        Layer::AdaptiveAvgPool1d(AdaptiveAvgPool1d { output: 1 }),
        Layer::Flatten,
        Layer::Linear(Linear::new(TCN_WIDTH, 64, &mut rng)),
        Layer::Relu,
        Layer::Linear(Linear::new(64, 1, &mut rng)),
    ]))
}

/// Samples seen by one output of the stacked dilated convolutions.
pub fn receptive_field(net: &Network) -> usize {
    1 + net
        .layers()
        .iter()
        .filter_map(|l| match l {
            Layer::Conv1d(c) => Some(c.dilation * (c.kernel - 1)),
            _ => None,
        })
        .sum::<usize>()
}

/// Trainable parameters: weights, biases and BatchNorm affine terms.
pub fn count_params(net: &Network) -> usize {
    net.count_params()
}

/// Which layers contribute to [`count_macs`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacScope {
    /// Convolutions only; the convention the complexity table uses.
    Convolutions,
    /// Convolutions plus the fully connected head.
    IncludeHead,
}

/// Multiply-accumulates for one sample with input shape `input` (without batch axis).
pub fn count_macs(net: &Network, input: &[usize], scope: MacScope) -> Result<u64> {
    let mut shape = input.to_vec();
    let mut macs = 0u64;
    for layer in net.layers() {
        match layer {
            Layer::Conv2d(c) => {
                let (h, w) = (shape[1], shape[2]);
                let ho = (h + 2 * c.padding - c.kernel) / c.stride + 1;
                let wo = (w + 2 * c.padding - c.kernel) / c.stride + 1;
                macs += (c.in_ch * c.out_ch * c.kernel * c.kernel * ho * wo) as u64;
                shape = vec![c.out_ch, ho, wo];
            }
            Layer::Conv1d(c) => {
                let to = c.out_len(shape[1])?;
                macs += (c.in_ch * c.out_ch * c.kernel * to) as u64;
                shape = vec![c.out_ch, to];
            }
            Layer::Linear(l) => {
                if scope == MacScope::IncludeHead {
                    macs += (l.in_features * l.out_features) as u64;
                }
                shape = vec![l.out_features];
            }
            Layer::AvgPool2d(p) => shape = vec![shape[0], shape[1] / p.kernel, shape[2] / p.kernel],
            Layer::AdaptiveAvgPool1d(p) => shape = vec![shape[0], p.output],
            Layer::Flatten => shape = vec![shape.iter().product()],
            Layer::TimeToChannels => {
                if shape.len() != 2 {
                    return Err(Error::Config(format!("TimeToChannels on shape {shape:?}")));
                }
                shape = vec![shape[1], shape[0]];
            }
            Layer::BatchNorm(_) | Layer::Relu => {}
        }
    }
    Ok(macs)
}

/// One row of the model-size / compute table.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityRow {
    pub channels: usize,
    pub params: usize,
    pub macs: u64,
}

impl ComplexityRow {
    /// Parameters in millions, two decimals.
    pub fn params_millions(&self) -> String {
        format!("{:.2}", self.params as f64 / 1e6)
    }

    /// MACs in millions, rounded to the nearest integer.
    pub fn mmacs(&self) -> u64 {
        (self.macs + 500_000) / 1_000_000
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.channels,
            self.params,
            self.params_millions(),
            self.macs,
            self.mmacs()
        )
    }
}

pub const COMPLEXITY_HEADER: &str = "channels,params,params_M_rounded,macs,mmacs_rounded";

/// TCN size and compute for each channel budget at window length `time_steps`.
pub fn complexity_table(budgets: &[usize], time_steps: usize) -> Result<Vec<ComplexityRow>> {
    budgets
        .iter()
        .map(|&c| {
            let net = build_tcn(c, 0)?;
            Ok(ComplexityRow {
                channels: c,
                params: count_params(&net),
                macs: count_macs(&net, &[time_steps, c], MacScope::Convolutions)?,
            })
        })
        .collect()
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut out = String::from(COMPLEXITY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}
