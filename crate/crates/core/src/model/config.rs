use std::fmt;
use std::str::FromStr;

use crate::config::{parse_switch, KeyValues};
use crate::error::{Error, Result};

/// Residual block wiring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockVariant {
    /// Single branch over whole frames.
    OneStream,
    /// Two branches, no exchange between them.
    TwoStream,
    /// Two branches exchanging information by addition at mid-depth.
    Sd,
}

/// What the two branches receive as their low-resolution frame inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputMode {
    Image,
    StructureDetail,
}

impl BlockVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockVariant::OneStream => "one_stream",
            BlockVariant::TwoStream => "two_stream",
            BlockVariant::Sd => "sd",
        }
    }
}

impl InputMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InputMode::Image => "image",
            InputMode::StructureDetail => "sd",
        }
    }
}

impl fmt::Display for BlockVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_stream" => Ok(BlockVariant::OneStream),
            "two_stream" => Ok(BlockVariant::TwoStream),
            "sd" => Ok(BlockVariant::Sd),
            _ => Err(Error::Argument(format!("unknown block variant {s:?}"))),
        }
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(InputMode::Image),
            "sd" | "structure_detail" => Ok(InputMode::StructureDetail),
            _ => Err(Error::Argument(format!("unknown input mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub blocks: usize,
    pub channels: usize,
    pub scale: usize,
    pub hsa_kernel: usize,
    pub variant: BlockVariant,
    pub hsa: bool,
    pub input_mode: InputMode,
}

impl Default for ModelConfig {
    /// Small configuration suited to CPU experiments.
    fn default() -> Self {
        Self {
            blocks: 2,
            channels: 16,
            scale: 4,
            hsa_kernel: 3,
            variant: BlockVariant::Sd,
            hsa: true,
            input_mode: InputMode::StructureDetail,
        }
    }
}

impl ModelConfig {
    /// Full-size model with `blocks` SD blocks at 128 channels.
    pub fn rsdn(blocks: usize) -> Self {
        Self {
            blocks,
            channels: 128,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.channels == 0 || self.scale == 0 {
            return Err(Error::Usage(format!(
                "blocks, channels and scale must be positive: {self:?}"
            )));
        }
        if self.hsa_kernel % 2 == 0 {
            return Err(Error::Usage(format!("hsa kernel must be odd, got {}", self.hsa_kernel)));
        }
        if self.variant == BlockVariant::OneStream && self.input_mode != InputMode::Image {
            return Err(Error::Usage("one_stream models take whole frames (input_mode = image)".into()));
        }
        Ok(())
    }

    pub fn is_two_branch(&self) -> bool {
        self.variant != BlockVariant::OneStream
    }

    /// Channels of a previous HR estimate after space-to-depth.
    pub fn hr_feedback_channels(&self) -> usize {
        3 * self.scale * self.scale
    }

    /// Input channels of a branch head: previous and current frame (or
    /// their components), the previous HR estimate re-gridded to LR, and
    /// the adapted hidden state.
    pub fn head_in_channels(&self) -> usize {
        3 + 3 + self.hr_feedback_channels() + self.channels
    }

    /// Short label such as `sd-hsa-sd-2x16`.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}-{}x{}",
            self.variant,
            if self.hsa { "hsa" } else { "nohsa" },
            self.input_mode,
            self.blocks,
            self.channels
        )
    }

    /// Keys understood by [`from_kv`](Self::from_kv).
    pub const KEYS: [&'static str; 7] = ["blocks", "channels", "scale", "hsa_kernel", "variant", "hsa", "input_mode"];

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("blocks", self.blocks);
        kv.set("channels", self.channels);
        kv.set("scale", self.scale);
        kv.set("hsa_kernel", self.hsa_kernel);
        kv.set("variant", self.variant);
        kv.set("hsa", if self.hsa { "on" } else { "off" });
        kv.set("input_mode", self.input_mode);
        kv
    }

    /// Read the model keys of `kv`, defaulting absent ones.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let cfg = Self {
            blocks: kv.parse_or("blocks", d.blocks)?,
            channels: kv.parse_or("channels", d.channels)?,
            scale: kv.parse_or("scale", d.scale)?,
            hsa_kernel: kv.parse_or("hsa_kernel", d.hsa_kernel)?,
            variant: kv.parse_or("variant", d.variant)?,
            hsa: kv.get("hsa").map(parse_switch).transpose()?.unwrap_or(d.hsa),
            input_mode: kv.parse_or("input_mode", d.input_mode)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The eight architecture ablation configurations, in table order.
    /// One-stream models run at twice the channel width to roughly match
    /// the two-branch parameter budget.
    pub fn ablation_grid(blocks: usize, channels: usize) -> Vec<ModelConfig> {
        use BlockVariant::*;
        use InputMode::*;
        let rows = [
            (OneStream, false, Image),
            (OneStream, true, Image),
            (TwoStream, true, Image),
            (TwoStream, false, StructureDetail),
            (TwoStream, true, StructureDetail),
            (Sd, true, Image),
            (Sd, false, StructureDetail),
            (Sd, true, StructureDetail),
        ];
        rows.iter()
            .map(|&(variant, hsa, input_mode)| ModelConfig {
                blocks,
                channels: if variant == OneStream { 2 * channels } else { channels },
                variant,
                hsa,
                input_mode,
                ..ModelConfig::default()
            })
            .collect()
    }
}
