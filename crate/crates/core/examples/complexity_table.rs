//! Parameter and multiply-accumulate counts of the TCN for each channel budget.
//!
//! ```text
//! cargo run --example complexity_table -- 1280
//! ```

use eegsel::models::{complexity_csv, complexity_table, DEFAULT_BUDGETS};

fn main() -> eegsel::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1280);
    print!("{}", complexity_csv(&complexity_table(&DEFAULT_BUDGETS, steps)?));
    Ok(())
}
