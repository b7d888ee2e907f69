//! PNG frame sequences.
//!
//! A sequence directory holds `hr/` and optionally `lr/`, each with frames
//! `frame_0001.png`, `frame_0002.png`, ... A dataset is either a single
//! sequence directory, a manifest file listing sequence directories (one per
//! line, relative to the manifest), or a directory containing such a
//! manifest or sequence subdirectories.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};

use super::{degrade, DegradeConfig, SequenceSample};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

pub const MANIFEST: &str = "manifest.txt";

fn frame_name(index: usize) -> String {
    format!("frame_{index:04}.png")
}

fn frame_number(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Decode an 8-bit PNG as a `(1, 3, h, w)` frame in `[0, 1]`.
pub fn read_png(path: &Path) -> Result<Tensor4<f32>> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.as_raw();
    Ok(Tensor4::from_fn([1, 3, h, w], |[_, c, i, j]| f32::from(raw[(i * w + j) * 3 + c]) / 255.0))
}

/// Quantise `[0, 1]` to 8 bits, rounding half up and clamping.
fn to_byte(v: f32) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Encode a `(1, 3, h, w)` or `(1, 1, h, w)` frame as an 8-bit PNG.
pub fn write_png(frame: &Tensor4<f32>, path: &Path) -> Result<()> {
    let s = frame.shape();
    if s.n != 1 || (s.c != 3 && s.c != 1) {
        return Err(Error::dim("write_png", s, "(1, 3, h, w) or (1, 1, h, w)"));
    }
    let mut buf = Vec::with_capacity(s.h * s.w * 3);
    for i in 0..s.h {
        for j in 0..s.w {
            for c in 0..3 {
                buf.push(to_byte(frame.at(0, c.min(s.c - 1), i, j)));
            }
        }
    }
    let img = RgbImage::from_raw(s.w as u32, s.h as u32, buf).expect("buffer sized from shape");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Read `frame_0001.png ...` from `dir`. Gaps, a sequence not starting at 1,
/// and frames of differing size are format errors naming the offending file.
pub fn load_frames(dir: &Path) -> Result<Vec<Tensor4<f32>>> {
    let mut numbered = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(k) = frame_number(&name) {
            numbered.push((k, entry.path()));
        }
    }
    if numbered.is_empty() {
        return Err(Error::format(dir, "no frame_NNNN.png files"));
    }
    numbered.sort();
    let mut frames: Vec<Tensor4<f32>> = Vec::with_capacity(numbered.len());
    for (i, (k, path)) in numbered.iter().enumerate() {
        if *k != i + 1 {
            return Err(Error::format(path, format!("expected {} next", frame_name(i + 1))));
        }
        let frame = read_png(path)?;
        if let Some(first) = frames.first() {
            if first.shape() != frame.shape() {
                return Err(Error::format(
                    path,
                    format!("frame is {} but the sequence is {}", frame.shape(), first.shape()),
                ));
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn save_frames(frames: &[Tensor4<f32>], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, f) in frames.iter().enumerate() {
        write_png(f, &dir.join(frame_name(t + 1)))?;
    }
    Ok(())
}

/// Load `dir/hr`, plus `dir/lr` when present; otherwise the LR side is
/// produced with `degradation`.
pub fn load_sequence(dir: &Path, degradation: &DegradeConfig) -> Result<SequenceSample> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let hr_dir = dir.join("hr");
    if !hr_dir.is_dir() {
        return Err(Error::format(dir, "sequence directory has no hr/ subdirectory"));
    }
    let hr = load_frames(&hr_dir)?;
    let lr_dir = dir.join("lr");
    let lr = if lr_dir.is_dir() {
        load_frames(&lr_dir)?
    } else {
        degrade(&hr, degradation)?
    };
    SequenceSample::new(name, hr, lr, degradation.scale).map_err(|e| Error::format(dir, e.to_string()))
}

pub fn save_sequence(sample: &SequenceSample, dir: &Path) -> Result<()> {
    save_frames(sample.hr(), &dir.join("hr"))?;
    save_frames(sample.lr(), &dir.join("lr"))
}

pub fn write_manifest(dir: &Path, sequences: &[String]) -> Result<()> {
    let path = dir.join(MANIFEST);
    let mut text = sequences.join("\n");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn manifest_entries(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

/// Load every sequence reachable from `path` (see the module docs).
pub fn load_dataset(path: &Path, degradation: &DegradeConfig) -> Result<Vec<SequenceSample>> {
    let dirs = if path.is_file() {
        manifest_entries(path)?
    } else if path.join("hr").is_dir() {
        vec![path.to_path_buf()]
    } else if path.join(MANIFEST).is_file() {
        manifest_entries(&path.join(MANIFEST))?
    } else if path.is_dir() {
        let mut dirs: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("hr").is_dir())
            .collect();
        dirs.sort();
        dirs
    } else {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    };
    dirs.iter().map(|d| load_sequence(d, degradation)).collect()
}
