use std::fs;
use std::path::{Path, PathBuf};

use crate::data::write_png;
use crate::error::{Error, Result};
use crate::model::RecurrentState;
use crate::tensor::{Element, Tensor4};

/// Stack row `row` of every frame: row `t` of the result is row `row` of
/// frame `t`. Frames are `(1, c, h, w)`; the result is `(1, c, T, w)`.
pub fn temporal_profile<T: Element>(frames: &[Tensor4<T>], row: usize) -> Result<Tensor4<T>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Argument("temporal profile of an empty clip".into()))?
        .shape();
    if row >= first.h {
        return Err(Error::Argument(format!("row {row} outside frame height {}", first.h)));
    }
    if let Some(f) = frames.iter().find(|f| f.shape() != first || first.n != 1) {
        return Err(Error::dim("temporal_profile", f.shape(), first));
    }
    Ok(Tensor4::from_fn([1, first.c, frames.len(), first.w], |[_, c, t, j]| {
        frames[t].at(0, c, row, j)
    }))
}

/// Write the first `count` hidden channels of the first batch item as
/// grayscale PNGs `hidden_00.png, ...`, each min-max normalised on its own.
pub fn dump_hidden_channels(state: &RecurrentState<f32>, out_dir: &Path, count: usize) -> Result<Vec<PathBuf>> {
    let s = state.hidden.shape();
    if count > s.c {
        return Err(Error::Argument(format!(
            "asked for {count} hidden channels but the state has {}",
            s.c
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    (0..count)
        .map(|c| {
            let plane = state.hidden.plane(0, c);
            let lo = plane.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = plane.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let span = hi - lo;
            let img = Tensor4::from_fn([1, 1, s.h, s.w], |[_, _, i, j]| {
                if span > 0.0 {
                    (plane[i * s.w + j] - lo) / span
                } else {
                    0.0
                }
            });
            let path = out_dir.join(format!("hidden_{c:02}.png"));
            write_png(&img, &path)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_frames, SynthKind, SynthSpec};
    use crate::model::ModelConfig;

    #[test]
    fn profile_rows() {
        let spec = SynthSpec {
            kind: SynthKind::DriftingChecker,
            frames: 5,
            height: 8,
            width: 20,
            velocity: [1.0, 0.0],
            seed: 3,
        };
        let frames = synth_frames(&spec).unwrap();
        let p = temporal_profile(&frames, 4).unwrap();
        assert_eq!(p.shape().dims(), [1, 3, 5, 20]);
        // an integer pan shifts each profile row by one pixel
        for t in 1..5 {
            for j in 1..20 {
                assert_eq!(p.at(0, 0, t, j), p.at(0, 0, t - 1, j - 1));
            }
        }
        let still = vec![frames[0].clone(); 3];
        let p = temporal_profile(&still, 2).unwrap();
        assert_eq!(p.plane(0, 1)[..20], p.plane(0, 1)[40..]);
        let single = temporal_profile(&frames[..1], 7).unwrap();
        assert_eq!(single.shape().dims(), [1, 3, 1, 20]);
        assert_eq!(single.at(0, 2, 0, 5), frames[0].at(0, 2, 7, 5));
        assert!(temporal_profile(&frames, 8).is_err());
    }

    #[test]
    fn hidden_dump_writes_normalised_pngs() {
        let dir = tempfile::tempdir().unwrap();
        let mut state = RecurrentState::<f32>::zeros(&ModelConfig::default(), 1, 4, 4);
        state.hidden = Tensor4::from_fn([1, 16, 4, 4], |[_, c, i, j]| (c * 16 + i * 4 + j) as f32);
        let files = dump_hidden_channels(&state, dir.path(), 4).unwrap();
        assert_eq!(files.len(), 4);
        let img = crate::data::read_png(&files[1]).unwrap();
        assert_eq!(img.at(0, 0, 0, 0), 0.0);
        assert_eq!(img.at(0, 0, 3, 3), 1.0);
        assert!(matches!(dump_hidden_channels(&state, dir.path(), 17), Err(Error::Argument(_))));
    }
}
