use log::warn;

use super::layout::ElectrodeLayout;
use super::rbf::RbfSystem;
use crate::error::{Error, Result};

/// Image side length in pixels.
pub const GRID: usize = 32;

/// Plane coordinates of the centre of pixel (row `i`, column `j`).
pub fn pixel_center(i: usize, j: usize) -> [f64; 2] {
    let step = 2.0 / GRID as f64;
    [-1.0 + step * (j as f64 + 0.5), -1.0 + step * (i as f64 + 0.5)]
}

/// Pixels whose centre lies inside the unit head disk.
pub fn head_mask() -> Vec<bool> {
    (0..GRID * GRID)
        .map(|k| {
            let p = pixel_center(k / GRID, k % GRID);
            p[0].hypot(p[1]) <= 1.0
        })
        .collect()
}

/// A 32x32 scalp image; pixels outside the head disk are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TopoImage {
    pub pixels: Vec<f64>,
    pub mask: Vec<bool>,
}

impl TopoImage {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * GRID + j]
    }
}

/// Renders per-channel values onto the image grid through a precomputed
/// linear operator (cubic RBF fit followed by grid evaluation).
#[derive(Clone, Debug)]
pub struct TopoRenderer {
    n_channels: usize,
    mask: Vec<bool>,
    /// masked pixel index -> flat pixel index
    masked: Vec<usize>,
    /// rows: masked pixels, cols: channels
    operator: Vec<f64>,
}

impl TopoRenderer {
    pub fn new(layout: &ElectrodeLayout) -> Result<Self> {
        let system = RbfSystem::new(&layout.positions())?;
        let mask = head_mask();
        let masked: Vec<usize> = (0..GRID * GRID).filter(|&k| mask[k]).collect();
        let points: Vec<[f64; 2]> = masked.iter().map(|&k| pixel_center(k / GRID, k % GRID)).collect();
        Ok(Self {
            n_channels: layout.len(),
            operator: system.evaluation_operator(&points),
            mask,
            masked,
        })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Interpolated field before standardisation (zero outside the mask).
    pub fn field(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n_channels {
            return Err(Error::Input(format!(
                "{} channel values for a {}-electrode layout",
                values.len(),
                self.n_channels
            )));
        }
        let mut out = vec![0.0; GRID * GRID];
        let n = self.n_channels;
        for (r, &k) in self.masked.iter().enumerate() {
            out[k] = self.operator[r * n..(r + 1) * n]
                .iter()
                .zip(values)
                .map(|(a, b)| a * b)
                .sum();
        }
        Ok(out)
    }

    /// Interpolate and standardise the in-head pixels to zero mean, unit variance.
    pub fn render(&self, values: &[f64]) -> Result<TopoImage> {
        let mut pixels = self.field(values)?;
        let n = self.masked.len() as f64;
        let mean = self.masked.iter().map(|&k| pixels[k]).sum::<f64>() / n;
        let var = self.masked.iter().map(|&k| (pixels[k] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 1e-12 * mean.abs().max(1.0) {
            for &k in &self.masked {
                pixels[k] = (pixels[k] - mean) / std;
            }
        } else {
            warn!("topographic field has zero variance; rendering an all-zero image");
            pixels.fill(0.0);
        }
        Ok(TopoImage {
            pixels,
            mask: self.mask.clone(),
        })
    }
}

/// One-off render through a freshly built renderer.
pub fn render(values: &[f64], layout: &ElectrodeLayout) -> Result<TopoImage> {
    TopoRenderer::new(layout)?.render(values)
}

/// Nearest electrode (lowest index on ties) for every in-mask pixel; `None` outside.
pub fn voronoi_assignment(layout: &ElectrodeLayout, mask: &[bool]) -> Vec<Option<usize>> {
    let pos = layout.positions();
    (0..GRID * GRID)
        .map(|k| {
            if !mask[k] {
                return None;
            }
            let p = pixel_center(k / GRID, k % GRID);
            let mut best = (f64::INFINITY, 0);
            for (c, q) in pos.iter().enumerate() {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d < best.0 {
                    best = (d, c);
                }
            }
            Some(best.1)
        })
        .collect()
}

/// Per-channel score: the mean importance of the in-mask pixels nearest to
/// each electrode; an electrode owning no pixel takes its nearest pixel's value.
pub fn pixels_to_channels(map: &[f64], layout: &ElectrodeLayout, mask: &[bool]) -> Result<Vec<f64>> {
    if map.len() != GRID * GRID || mask.len() != GRID * GRID {
        return Err(Error::Input(format!("importance map must have {} pixels", GRID * GRID)));
    }
    if map.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("importance map contains non-finite values".into()));
    }
    let owner = voronoi_assignment(layout, mask);
    let mut sum = vec![0.0; layout.len()];
    let mut count = vec![0usize; layout.len()];
    for (k, o) in owner.iter().enumerate() {
        if let Some(c) = *o {
            sum[c] += map[k];
            count[c] += 1;
        }
    }
    Ok(layout
        .electrodes()
        .iter()
        .enumerate()
        .map(|(c, e)| {
            if count[c] > 0 {
                sum[c] / count[c] as f64
            } else {
                let mut best = (f64::INFINITY, 0);
                for k in (0..GRID * GRID).filter(|&k| mask[k]) {
                    let p = pixel_center(k / GRID, k % GRID);
                    let d = (p[0] - e.position[0]).powi(2) + (p[1] - e.position[1]).powi(2);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                map[best.1]
            }
        })
        .collect())
}

/// Continuous plane position to the (row, col) of the containing pixel.
pub fn grid_index(p: [f64; 2]) -> (usize, usize) {
    let to = |x: f64| (((x + 1.0) / 2.0 * GRID as f64).floor() as isize).clamp(0, GRID as isize - 1) as usize;
    (to(p[1]), to(p[0]))
}
