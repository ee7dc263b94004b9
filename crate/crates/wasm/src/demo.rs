//! Plain-Rust side of the browser demo; the exported wrappers in the crate
//! root only convert errors.

use cswv::bitstream::extract_layers;
use cswv::codec::{decode, decode_full_size, encode_video, reference_at_level, EncoderConfig};
use cswv::curves::{learning_curves, LearningCurveSpec};
use cswv::dwt::Layer;
use cswv::metrics::{complexity_report, psnr, rate_report};
use cswv::recovery::{Algorithm, RecoveryConfig};
use cswv::synth::moving_scene;
use cswv::video_io::{to_u8, FramePlane};

pub type DemoResult<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn parse_algorithm(name: &str) -> DemoResult<Algorithm> {
    Algorithm::parse(name).ok_or_else(|| format!("unknown algorithm '{name}'"))
}

pub fn layer_from_id(id: u8) -> DemoResult<Layer> {
    Layer::from_id(id).ok_or_else(|| format!("layer id {id} outside 0..=3"))
}

/// NMSE per iteration for one algorithm on a seeded `k`-sparse vector.
pub fn learning_curve(n: usize, k: usize, iterations: usize, seed: u64, algorithm: &str) -> DemoResult<Vec<f64>> {
    let spec = LearningCurveSpec {
        name: String::new(),
        n,
        k,
        trials: 1,
        iterations,
        seed,
        algorithms: vec![parse_algorithm(algorithm)?],
        onsager_divisor: None,
    };
    let mut curves = learning_curves(&spec).map_err(err)?;
    Ok(curves.pop().map(|(_, trace)| trace).unwrap_or_default())
}

/// Conventional and proposed multiplier/adder totals, then the multiplier
/// ratio (`inf` when undefined).
pub fn complexity(n: f64, m_fraction: f64, itr: f64) -> DemoResult<Vec<f64>> {
    let r = complexity_report(n, m_fraction, itr).map_err(err)?;
    Ok(vec![
        r.conventional.multipliers,
        r.conventional.adders,
        r.proposed.multipliers,
        r.proposed.adders,
        r.multiplier_ratio.unwrap_or(f64::INFINITY),
    ])
}

fn to_bytes(frame: &FramePlane) -> Vec<u8> {
    frame.samples().iter().map(|&s| to_u8(s)).collect()
}

/// A synthetic clip and its stream.
pub struct CodecSession {
    source: Vec<FramePlane>,
    stream: Vec<u8>,
}

pub struct DecodedClip {
    pub width: usize,
    pub height: usize,
    pub frame_rate: f64,
    pub frames: Vec<Vec<u8>>,
    /// Against the source seen at the same resolution.
    pub psnr_reduced: f64,
    /// Zero-filled full-size reconstruction against the source.
    pub psnr_full_size: f64,
    pub stream_bytes: usize,
}

impl CodecSession {
    pub fn new(width: usize, height: usize, seed: u64, threshold: f64, bits: u8) -> DemoResult<Self> {
        let source = moving_scene(width, height, 8, seed);
        let config = EncoderConfig { threshold, quant_bits: bits, master_seed: seed, ..Default::default() };
        let stream = encode_video(&source, &config).map_err(err)?;
        Ok(Self { source, stream })
    }

    pub fn source_frame(&self, index: usize) -> Vec<u8> {
        self.source.get(index).map(to_bytes).unwrap_or_default()
    }

    pub fn stream_len(&self) -> usize {
        self.stream.len()
    }

    pub fn compression_ratio(&self) -> DemoResult<f64> {
        Ok(rate_report(&self.stream).map_err(err)?.compression_ratio)
    }

    pub fn measurement_percentage(&self) -> DemoResult<f64> {
        Ok(rate_report(&self.stream).map_err(err)?.measurement_percentage)
    }

    pub fn decode(&self, layer: u8, algorithm: &str) -> DemoResult<DecodedClip> {
        let cut = extract_layers(&self.stream, layer_from_id(layer)?).map_err(err)?;
        let config = RecoveryConfig::with_algorithm(parse_algorithm(algorithm)?);
        let decoded = decode(&cut, &config).map_err(err)?;
        let reference = reference_at_level(&self.source, decoded.resolution_level).map_err(err)?;
        let full = decode_full_size(&cut, &config).map_err(err)?;
        let first = decoded.frames.first().ok_or("empty decode")?;
        Ok(DecodedClip {
            width: first.width(),
            height: first.height(),
            frame_rate: decoded.frame_rate,
            psnr_reduced: psnr(&reference, &decoded.frames).map_err(err)?.pooled,
            psnr_full_size: psnr(&self.source, &full).map_err(err)?.pooled,
            frames: decoded.frames.iter().map(to_bytes).collect(),
            stream_bytes: cut.len(),
        })
    }
}
