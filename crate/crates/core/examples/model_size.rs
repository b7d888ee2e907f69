//! Parameter counts and multiply-accumulate estimates for the full-size
//! configurations and the ablation grid.
//!
//! cargo run --release --example model_size

use rsdn::model::{block_param_count, mac_estimate, param_count, ModelConfig};

fn main() {
    println!("{:<8} {:>10} {:>12} {:>14}", "model", "params", "block share", "MACs 180x120");
    for blocks in [5, 7, 9] {
        let cfg = ModelConfig::rsdn(blocks);
        let p = param_count(&cfg);
        println!(
            "{:<8} {:>10} {:>11.1}% {:>13.3}T",
            format!("{blocks}-128"),
            p,
            100.0 * block_param_count(&cfg) as f64 / p as f64,
            mac_estimate(&cfg, 120, 180) as f64 / 1e12
        );
    }
    println!();
    for cfg in ModelConfig::ablation_grid(2, 16) {
        println!("{:<26} {:>8}", cfg.label(), param_count(&cfg));
    }
}
