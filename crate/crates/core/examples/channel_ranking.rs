//! Map a pixel-importance image back to electrodes and rank them.

use eegsel::attribution::rank_channels;
use eegsel::data::biosemi64_layout;
use eegsel::topomap::TopoRenderer;

fn main() -> eegsel::Result<()> {
    let layout = biosemi64_layout();
    let renderer = TopoRenderer::new(&layout)?;
    // importance concentrated over the left parieto-occipital region
    let mut values = vec![0.0; 64];
    for (name, w) in [("PO7", 1.0), ("P7", 0.8), ("O1", 0.6)] {
        values[layout.index_of(name).unwrap()] = w;
    }
    let image = renderer.render(&values)?;
    let importance: Vec<f64> = image.pixels.iter().map(|p| p.abs()).collect();
    let ranking = rank_channels(&importance, &layout, renderer.mask())?;
    println!("{} pixels inside the head", renderer.mask().iter().filter(|&&m| m).count());
    for (i, e) in ranking.top(8)?.iter().enumerate() {
        println!("{:>2} {:<4} {:.4}", i + 1, e.name, e.score);
    }
    Ok(())
}
