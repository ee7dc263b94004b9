//! Deterministic synthetic test material.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dwt::{pyramid_band_map, SubbandPyramid};
use crate::error::{CodecError, Result};
use crate::sensing::{vector_length, vectors_per_band};
use crate::video_io::FramePlane;

/// Smooth background, a few moving shapes and mild grain.
pub fn moving_scene(width: usize, height: usize, frames: usize, seed: u64) -> Vec<FramePlane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    struct Blob {
        x: f64,
        y: f64,
        vx: f64,
        vy: f64,
        radius: f64,
        level: f64,
        square: bool,
    }
    let blobs: Vec<Blob> = (0..4)
        .map(|i| Blob {
            x: rng.random_range(0.2..0.8) * w,
            y: rng.random_range(0.2..0.8) * h,
            vx: rng.random_range(-1.5..1.5),
            vy: rng.random_range(-1.0..1.0),
            radius: rng.random_range(0.08..0.2) * w.min(h),
            level: rng.random_range(-70.0..70.0),
            square: i % 2 == 1,
        })
        .collect();
    let tilt = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    (0..frames)
        .map(|t| {
            let t = t as f64;
            let mut samples = Vec::with_capacity(width * height);
            for y in 0..height {
                for x in 0..width {
                    let (xf, yf) = (x as f64, y as f64);
                    let mut v = 110.0 + 40.0 * tilt.0 * (xf / w - 0.5) * 2.0 + 40.0 * tilt.1 * (yf / h - 0.5) * 2.0;
                    v += 12.0 * ((xf + 2.0 * t) / 9.0).sin() * (yf / 13.0).cos();
                    for b in &blobs {
                        let dx = xf - (b.x + b.vx * t);
                        let dy = yf - (b.y + b.vy * t);
                        let inside = if b.square {
                            dx.abs().max(dy.abs()) < b.radius
                        } else {
                            dx * dx + dy * dy < b.radius * b.radius
                        };
                        if inside {
                            v += b.level;
                        }
                    }
                    v += rng.random_range(-0.5..0.5);
                    samples.push(v.clamp(0.0, 255.0).round());
                }
            }
            FramePlane::new(width, height, samples).expect("sized")
        })
        .collect()
}

/// Uniform 8-bit noise.
pub fn noise_video(width: usize, height: usize, frames: usize, seed: u64) -> Vec<FramePlane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|_| {
            let samples = (0..width * height).map(|_| f64::from(rng.random_range(0u8..=255))).collect();
            FramePlane::new(width, height, samples).expect("sized")
        })
        .collect()
}

pub fn constant_video(width: usize, height: usize, frames: usize, value: f64) -> Vec<FramePlane> {
    vec![FramePlane::filled(width, height, value); frames]
}

/// A pyramid whose base band looks like an 8-bit picture's and whose every
/// sensed vector has between 0 and `max_k` nonzeros.
pub fn sparse_pyramid(
    width: usize,
    height: usize,
    max_k: usize,
    target_min_n: usize,
    seed: u64,
) -> Result<SubbandPyramid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pyramid = SubbandPyramid::zeros(width, height)?;
    let map = pyramid_band_map(width, height);
    let base = map[0];
    // DC gain of the 3-D transform is sqrt(8) from the temporal Haar.
    let values: Vec<f64> = (0..base.len()).map(|_| rng.random_range(60.0..200.0) * 8f64.sqrt()).collect();
    pyramid.set_band(&base, &values);
    for region in &map[1..] {
        let n = vector_length(region.width, region.height, target_min_n);
        let count = vectors_per_band(region, target_min_n);
        // column-major vectors of the band, the last one padded
        let mut band = vec![0.0; region.len()];
        for v in 0..count {
            let live = (region.len() - v * n).min(n);
            let k = rng.random_range(0..=max_k.min(live));
            for pos in rand::seq::index::sample(&mut rng, live, k) {
                let flat = v * n + pos;
                let (col, row) = (flat / region.height, flat % region.height);
                let mag = rng.random_range(3.0..25.0);
                band[row * region.width + col] = if rng.random_bool(0.5) { mag } else { -mag };
            }
        }
        pyramid.set_band(region, &band);
    }
    Ok(pyramid)
}

/// Source description used by experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VideoSource {
    Scene {
        width: usize,
        height: usize,
        frames: usize,
        seed: u64,
    },
    Noise {
        width: usize,
        height: usize,
        frames: usize,
        seed: u64,
    },
    Constant {
        width: usize,
        height: usize,
        frames: usize,
        value: f64,
    },
    /// Planar 8-bit luma file.
    File {
        path: std::path::PathBuf,
        width: usize,
        height: usize,
        frames: usize,
    },
}

impl VideoSource {
    pub fn frames(&self) -> Result<Vec<FramePlane>> {
        match self {
            Self::Scene { width, height, frames, seed } => Ok(moving_scene(*width, *height, *frames, *seed)),
            Self::Noise { width, height, frames, seed } => Ok(noise_video(*width, *height, *frames, *seed)),
            Self::Constant { width, height, frames, value } => Ok(constant_video(*width, *height, *frames, *value)),
            Self::File { path, width, height, frames } => {
                let bytes = std::fs::read(path)
                    .map_err(|e| CodecError::Parameter(format!("cannot read {}: {e}", path.display())))?;
                crate::video_io::read_raw_video(&bytes, *width, *height, *frames)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{l0_norm, vectorize_band};

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(moving_scene(32, 16, 3, 7), moving_scene(32, 16, 3, 7));
        assert_ne!(moving_scene(32, 16, 3, 7), moving_scene(32, 16, 3, 8));
        let n = noise_video(16, 8, 2, 1);
        assert!(n[0].samples().iter().all(|&s| (0.0..=255.0).contains(&s) && s.fract() == 0.0));
    }

    #[test]
    fn sparse_pyramid_respects_the_bound() {
        let p = sparse_pyramid(64, 64, 30, 2048, 3).unwrap();
        for region in &p.band_map()[1..] {
            for v in vectorize_band(region, &p.band(region), 2048) {
                assert!(l0_norm(&v.values) <= 30);
            }
        }
    }
}
