use std::io::Write;

/// Binary 8-bit PGM (P5), min-max scaled to 0..=255.
pub fn write_pgm(w: &mut impl Write, pixels: &[f64], width: usize, height: usize) -> std::io::Result<()> {
    assert_eq!(pixels.len(), width * height);
    let (lo, hi) = pixels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    write!(w, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = pixels
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    w.write_all(&bytes)
}
