use std::io::Write;

use crate::error::{Error, Result};
use crate::topomap::{pixels_to_channels, ElectrodeLayout};

/// Element-wise mean of absolute values over equally sized maps.
pub fn global_importance<'a>(maps: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for m in maps {
        if count == 0 {
            acc = vec![0.0; m.len()];
        } else if m.len() != acc.len() {
            return Err(Error::Input(format!("map of {} values, expected {}", m.len(), acc.len())));
        }
        for (a, v) in acc.iter_mut().zip(m) {
            *a += v.abs();
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Input("global importance needs at least one map".into()));
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedChannel {
    pub name: String,
    /// Position in the electrode layout.
    pub index: usize,
    pub score: f64,
}

/// Channels sorted by descending score; equal scores keep layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRanking {
    entries: Vec<RankedChannel>,
}

impl ChannelRanking {
    pub fn from_scores(scores: &[f64], layout: &ElectrodeLayout) -> Result<Self> {
        if scores.len() != layout.len() {
            return Err(Error::Input(format!("{} scores for {} electrodes", scores.len(), layout.len())));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(Self {
            entries: order
                .into_iter()
                .map(|i| RankedChannel { name: layout.get(i).name.clone(), index: i, score: scores[i] })
                .collect(),
        })
    }

    pub fn entries(&self) -> &[RankedChannel] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> Result<&[RankedChannel]> {
        if k == 0 || k > self.entries.len() {
            return Err(Error::Input(format!("budget {k} outside 1..={}", self.entries.len())));
        }
        Ok(&self.entries[..k])
    }

    /// Layout indices of the top-k channels, in rank order.
    pub fn top_indices(&self, k: usize) -> Result<Vec<usize>> {
        Ok(self.top(k)?.iter().map(|e| e.index).collect())
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "rank,channel,score")?;
        for (r, e) in self.entries.iter().enumerate() {
            writeln!(w, "{},{},{:.12e}", r + 1, e.name, e.score)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str, layout: &ElectrodeLayout) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Input(format!("ranking line {}: {line:?}", i + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            let index = layout.index_of(f[1]).ok_or_else(bad)?;
            let score: f64 = f[2].parse().map_err(|_| bad())?;
            entries.push(RankedChannel { name: f[1].to_string(), index, score });
        }
        Ok(Self { entries })
    }
}

/// Map a global pixel-importance map onto electrodes and rank them.
pub fn rank_channels(global: &[f64], layout: &ElectrodeLayout, mask: &[bool]) -> Result<ChannelRanking> {
    ChannelRanking::from_scores(&pixels_to_channels(global, layout, mask)?, layout)
}
