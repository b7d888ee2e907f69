use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ops::{bicubic_resize, gaussian_blur, gaussian_blur_strided, Scale};
use crate::tensor::{Element, Tensor4};

/// How the blurred HR frame is brought down to LR size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Decimation {
    /// Keep every `r`-th pixel, starting at the top-left one.
    #[default]
    Strided,
    /// Antialiased bicubic downscale.
    Bicubic,
}

impl Decimation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decimation::Strided => "strided",
            Decimation::Bicubic => "bicubic",
        }
    }
}

impl fmt::Display for Decimation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decimation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strided" => Ok(Decimation::Strided),
            "bicubic" => Ok(Decimation::Bicubic),
            _ => Err(Error::Usage(format!("unknown decimation '{s}' (expected strided or bicubic)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegradeConfig {
    pub sigma: f64,
    pub scale: usize,
    pub decimation: Decimation,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        Self {
            sigma: 1.6,
            scale: 4,
            decimation: Decimation::Strided,
        }
    }
}

pub fn degrade_frame<T: Element>(hr: &Tensor4<T>, cfg: &DegradeConfig) -> Result<Tensor4<T>> {
    let s = hr.shape();
    let r = cfg.scale;
    if r == 0 || s.h % r != 0 || s.w % r != 0 {
        return Err(Error::dim("degrade", s, format!("dims divisible by {r}")));
    }
    match cfg.decimation {
        Decimation::Strided => gaussian_blur_strided(hr, cfg.sigma, r),
        Decimation::Bicubic => bicubic_resize(&gaussian_blur(hr, cfg.sigma)?, Scale::down(r), true),
    }
}

pub fn degrade<T: Element>(hr: &[Tensor4<T>], cfg: &DegradeConfig) -> Result<Vec<Tensor4<T>>> {
    hr.iter().map(|f| degrade_frame(f, cfg)).collect()
}
