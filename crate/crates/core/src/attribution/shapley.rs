use crate::error::{Error, Result};

pub const MAX_EXACT_PLAYERS: usize = 12;

/// Exact Shapley values of `f` at `x` relative to `baseline` by enumerating
/// all `2^n` coalitions; players outside a coalition take their baseline value.
pub fn exact_shapley(f: impl Fn(&[f64]) -> f64, x: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if baseline.len() != n {
        return Err(Error::Input(format!("x has {n} features, baseline {}", baseline.len())));
    }
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::Input(format!(
            "exact Shapley limited to {MAX_EXACT_PLAYERS} players, got {n}"
        )));
    }
    let mut value = vec![0.0; 1 << n];
    let mut z = baseline.to_vec();
    for (mask, v) in value.iter_mut().enumerate() {
        for i in 0..n {
            z[i] = if mask >> i & 1 == 1 { x[i] } else { baseline[i] };
        }
        *v = f(&z);
    }
    // weight(s) = s! (n-s-1)! / n!
    let mut fact = vec![1.0f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();
    Ok((0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << n)
                .filter(|m| m & bit == 0)
                .map(|m| weight[m.count_ones() as usize] * (value[m | bit] - value[m]))
                .sum()
        })
        .collect())
}
