//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::path::PathBuf;

use cswv::bits::BitWriter;
use cswv::coding::{abc_encode, grc_encode, rle_zero, CodedChunk};
use cswv::video_io::FramePlane;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

// Published CDF 9/7 analysis taps: lowpass at unit DC gain, highpass at
// Nyquist gain 2, whole-sample symmetric extension.
const LOW: [f64; 5] = [
    0.602_949_018_236_358,
    0.266_864_118_442_872,
    -0.078_223_266_528_988,
    -0.016_864_118_442_875,
    0.026_748_757_410_810,
];
const HIGH: [f64; 4] = [1.115_087_052_456_994, -0.591_271_763_114_247, -0.057_543_526_228_500, 0.091_271_763_114_249];

fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

fn taps_at(x: &[f64], center: usize, taps: &[f64]) -> f64 {
    let n = x.len();
    let c = center as isize;
    let mut acc = taps[0] * x[center];
    for (k, &t) in taps.iter().enumerate().skip(1) {
        let k = k as isize;
        acc += t * (x[mirror(c - k, n)] + x[mirror(c + k, n)]);
    }
    acc
}

pub fn analysis(x: &[f64]) -> Vec<f64> {
    let half = x.len() / 2;
    let mut out = vec![0.0; x.len()];
    for i in 0..half {
        out[i] = taps_at(x, 2 * i, &LOW);
        out[half + i] = taps_at(x, 2 * i + 1, &HIGH);
    }
    out
}

pub fn oracle_2d(plane: &FramePlane, levels: u32) -> Vec<f64> {
    let stride = plane.width();
    let mut data = plane.samples().to_vec();
    let (mut w, mut h) = (plane.width(), plane.height());
    for _ in 0..levels {
        for y in 0..h {
            let row = analysis(&data[y * stride..y * stride + w]);
            data[y * stride..y * stride + w].copy_from_slice(&row);
        }
        for x in 0..w {
            let col: Vec<f64> = (0..h).map(|y| data[y * stride + x]).collect();
            for (y, v) in analysis(&col).into_iter().enumerate() {
                data[y * stride + x] = v;
            }
        }
        w /= 2;
        h /= 2;
    }
    data
}

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> FramePlane {
    FramePlane::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect()).unwrap()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The 8x8, 8-frame clip documented in FORMAT.md.
pub fn tiny_clip() -> Vec<FramePlane> {
    (0..8)
        .map(|f| {
            let samples = (0..64)
                .map(|i| {
                    let (x, y) = (i % 8, i / 8);
                    f64::from(((x * 20 + y * 6 + f * 3) % 200 + 20) as u8)
                })
                .collect();
            FramePlane::new(8, 8, samples).unwrap()
        })
        .collect()
}

/// Bit strings of the entropy coders on a fixed input.
pub fn entropy_patterns() -> String {
    let codes = [0, 3, -1, 0, 0, 0, 0, 0, 7, -12, 1, 0, 2];
    let mut text = String::new();
    for r in 0..4 {
        text += &format!("grc r={r} {}\n", grc_encode(&codes, r).to_bit_string());
    }
    for bound in [25u64, 32, 100] {
        text += &format!("abc bound={bound} {}\n", abc_encode(&codes, bound).unwrap().to_bit_string());
    }
    text += &format!("rle {:?}\n", rle_zero(&codes));
    let values: Vec<f64> = codes.iter().map(|&c| f64::from(c) * 0.75).collect();
    for bits in [4u8, 8, 12, 16] {
        let chunk = CodedChunk::encode(&values, bits).unwrap();
        let mut w = BitWriter::new();
        chunk.write(&mut w).unwrap();
        text += &format!("chunk bits={bits} {}\n", w.to_bit_string());
    }
    text
}
