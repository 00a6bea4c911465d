use crate::error::{Error, Result};

/// Channels x samples matrix with its sampling rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    rows: Vec<Vec<f64>>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(rows: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Input(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(Error::Input("signal rows differ in length".into()));
            }
        }
        Ok(Self { rows, sample_rate })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.rows.len()
    }

    pub fn n_samples(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.rows[c]
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// A new signal holding only the listed rows, in that order.
    pub fn select(&self, channels: &[usize]) -> Result<Signal> {
        let rows = channels
            .iter()
            .map(|&c| {
                self.rows
                    .get(c)
                    .cloned()
                    .ok_or_else(|| Error::Input(format!("channel index {c} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Signal::new(rows, self.sample_rate)
    }

    pub fn duration_seconds(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate
    }
}
