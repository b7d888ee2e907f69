//! Synthetic clips: a fixed random master image panned across the frame.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DegradeConfig, SequenceSample};
use crate::error::{Error, Result};
use crate::ops::{bicubic_resize, cubic_kernel, Scale};
use crate::tensor::Tensor4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    MovingBars,
    DriftingChecker,
    NoisePan,
}

impl SynthKind {
    pub const ALL: [SynthKind; 3] = [SynthKind::MovingBars, SynthKind::DriftingChecker, SynthKind::NoisePan];

    pub fn as_str(&self) -> &'static str {
        match self {
            SynthKind::MovingBars => "moving_bars",
            SynthKind::DriftingChecker => "drifting_checker",
            SynthKind::NoisePan => "noise_pan",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown synthetic kind '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// `[dx, dy]` in HR pixels per frame.
    pub velocity: [f64; 2],
    pub seed: u64,
}

type Master = Vec<[f32; 3]>;

fn random_colour(rng: &mut impl Rng) -> [f32; 3] {
    [rng.gen(), rng.gen(), rng.gen()]
}

fn master_image(kind: SynthKind, h: usize, w: usize, rng: &mut ChaCha8Rng) -> Master {
    match kind {
        SynthKind::MovingBars => {
            let vertical = rng.gen_bool(0.5);
            let len = if vertical { w } else { h };
            let mut stripes = Vec::with_capacity(len);
            while stripes.len() < len {
                let colour = random_colour(rng);
                let width = rng.gen_range(3..=10);
                stripes.extend(std::iter::repeat(colour).take(width));
            }
            (0..h * w)
                .map(|p| stripes[if vertical { p % w } else { p / w }])
                .collect()
        }
        SynthKind::DriftingChecker => {
            let cell = rng.gen_range(3..=8);
            let (a, b) = (random_colour(rng), random_colour(rng));
            (0..h * w)
                .map(|p| if ((p / w) / cell + (p % w) / cell) % 2 == 0 { a } else { b })
                .collect()
        }
        SynthKind::NoisePan => {
            let (ch, cw) = (h.div_ceil(4), w.div_ceil(4));
            let coarse = Tensor4::<f32>::from_fn([1, 3, ch, cw], |_| rng.gen());
            let smooth = bicubic_resize(&coarse, Scale::up(4), false).expect("non-empty coarse grid");
            (0..h * w)
                .map(|p| {
                    let (i, j) = (p / w, p % w);
                    let mut px = [0.0; 3];
                    for (c, v) in px.iter_mut().enumerate() {
                        *v = (smooth.at(0, c, i, j) + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0);
                    }
                    px
                })
                .collect()
        }
    }
}

/// Split a coordinate into an integer base and four cubic weights for
/// samples `base - 1 ..= base + 2`.
fn cubic_taps(x: f64) -> (isize, [f64; 4]) {
    let base = x.floor();
    let f = x - base;
    let w = [cubic_kernel(f + 1.0), cubic_kernel(f), cubic_kernel(f - 1.0), cubic_kernel(f - 2.0)];
    (base as isize, w)
}

/// HR frames of the clip described by `spec`. Integer velocities reproduce
/// exact pixel translations of the first frame.
pub fn synth_frames(spec: &SynthSpec) -> Result<Vec<Tensor4<f32>>> {
    if spec.frames == 0 || spec.height == 0 || spec.width == 0 {
        return Err(Error::Argument("synthetic clip needs at least one frame and pixel".into()));
    }
    if !spec.velocity.iter().all(|v| v.is_finite()) {
        return Err(Error::Argument("velocity must be finite".into()));
    }
    let travel = |v: f64| (v.abs() * (spec.frames - 1) as f64).ceil() as usize + 3;
    let (mx, my) = (travel(spec.velocity[0]), travel(spec.velocity[1]));
    let (mh, mw) = (spec.height + 2 * my, spec.width + 2 * mx);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let master = master_image(spec.kind, mh, mw, &mut rng);
    let frames = (0..spec.frames)
        .map(|t| {
            let oy = my as f64 - t as f64 * spec.velocity[1];
            let ox = mx as f64 - t as f64 * spec.velocity[0];
            let (by, wy) = cubic_taps(oy);
            let (bx, wx) = cubic_taps(ox);
            Tensor4::from_fn([1, 3, spec.height, spec.width], |[_, c, i, j]| {
                let mut acc = 0.0f64;
                for (a, wa) in wy.iter().enumerate() {
                    if *wa == 0.0 {
                        continue;
                    }
                    let row = (by + i as isize + a as isize - 1) as usize * mw;
                    for (b, wb) in wx.iter().enumerate() {
                        if *wb != 0.0 {
                            let col = (bx + j as isize + b as isize - 1) as usize;
                            acc += wa * wb * f64::from(master[row + col][c]);
                        }
                    }
                }
                acc.clamp(0.0, 1.0) as f32
            })
        })
        .collect();
    Ok(frames)
}

pub fn synth_sequence(spec: &SynthSpec, degradation: &DegradeConfig) -> Result<SequenceSample> {
    let name = format!("{}_{}", spec.kind, spec.seed);
    SequenceSample::from_hr(name, synth_frames(spec)?, degradation)
}

/// `clips` sequences of one kind moving at `speed` pixels per frame in
/// random directions, named `clip_0000`, `clip_0001`, ...
#[allow(clippy::too_many_arguments)]
pub fn synth_dataset(
    kind: SynthKind,
    clips: usize,
    frames: usize,
    height: usize,
    width: usize,
    speed: f64,
    seed: u64,
    degradation: &DegradeConfig,
) -> Result<Vec<SequenceSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..clips)
        .map(|i| {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let spec = SynthSpec {
                kind,
                frames,
                height,
                width,
                velocity: [speed * angle.cos(), speed * angle.sin()],
                seed: rng.gen(),
            };
            SequenceSample::from_hr(format!("clip_{i:04}"), synth_frames(&spec)?, degradation)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: SynthKind, velocity: [f64; 2]) -> SynthSpec {
        SynthSpec {
            kind,
            frames: 4,
            height: 24,
            width: 32,
            velocity,
            seed: 11,
        }
    }

    #[test]
    fn zero_velocity_is_static() {
        for kind in SynthKind::ALL {
            let f = synth_frames(&spec(kind, [0.0, 0.0])).unwrap();
            assert!(f.iter().all(|x| *x == f[0]), "{kind}");
        }
    }

    #[test]
    fn integer_velocity_translates_exactly() {
        for kind in SynthKind::ALL {
            let (vx, vy) = (2isize, -1isize);
            let f = synth_frames(&spec(kind, [vx as f64, vy as f64])).unwrap();
            for (t, frame) in f.iter().enumerate() {
                let (dx, dy) = (vx * t as isize, vy * t as isize);
                for c in 0..3 {
                    for i in 0..24isize {
                        for j in 0..32isize {
                            let (si, sj) = (i - dy, j - dx);
                            if (0..24).contains(&si) && (0..32).contains(&sj) {
                                assert_eq!(
                                    frame.at(0, c, i as usize, j as usize),
                                    f[0].at(0, c, si as usize, sj as usize)
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn seeded_and_in_range() {
        let s = spec(SynthKind::NoisePan, [0.7, 0.3]);
        let a = synth_frames(&s).unwrap();
        assert_eq!(a, synth_frames(&s).unwrap());
        assert_ne!(a, synth_frames(&SynthSpec { seed: 12, ..s }).unwrap());
        assert!(a.iter().all(|f| f.data().iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn dataset_shapes() {
        let d = synth_dataset(SynthKind::MovingBars, 3, 4, 64, 64, 1.0, 0, &DegradeConfig::default()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d[2].name(), "clip_0002");
        assert_eq!(d[0].lr_hw(), (16, 16));
        assert_eq!(d[0].len(), 4);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SynthKind::ALL {
            assert_eq!(k.as_str().parse::<SynthKind>().unwrap(), k);
        }
        assert!("waves".parse::<SynthKind>().is_err());
    }
}
