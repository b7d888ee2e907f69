use super::config::ModelConfig;
use super::network::parameter_shapes;

/// Number of learnable scalars.
pub fn param_count(config: &ModelConfig) -> usize {
    parameter_shapes(config).iter().map(|(_, s)| s.numel()).sum()
}

/// Parameters added by one residual block.
pub fn block_param_count(config: &ModelConfig) -> usize {
    parameter_shapes(config)
        .iter()
        .filter(|(name, _)| name.starts_with("blocks.0."))
        .map(|(_, s)| s.numel())
        .sum()
}

/// Multiply-accumulates of one cell step on an `h x w` LR frame: every
/// convolution runs at LR resolution, plus the spatially-variant filter.
pub fn mac_estimate(config: &ModelConfig, h: usize, w: usize) -> u64 {
    let pixels = (h * w) as u64;
    let convs: u64 = parameter_shapes(config)
        .iter()
        .filter(|(name, _)| name.ends_with(".weight"))
        .map(|(_, s)| s.numel() as u64 * pixels)
        .sum();
    let svf = if config.hsa {
        (config.channels * config.hsa_kernel * config.hsa_kernel) as u64 * pixels
    } else {
        0
    };
    convs + svf
}
