//! Experiment harness: learning curves, quantizer-bit sweeps, threshold
//! sweeps and layer sweeps, emitted as long-format CSV
//! (`experiment,series,x,value`).
//!
//! ```toml
//! [[learning_curve]]
//! name = "n2048"
//! n = 2048
//! k = 82
//! trials = 20
//!
//! [[bits_sweep]]
//! name = "bits"
//! bits = [8, 10, 12, 14]
//! video = { kind = "scene", width = 64, height = 64, frames = 8, seed = 1 }
//! ```

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bitstream::extract_layers;
use crate::codec::{decode, decode_full_size, encode_video, reference_at_level, EncoderConfig};
use crate::dwt::Layer;
use crate::error::{CodecError, Result};
use crate::metrics::{psnr, rate_report};
use crate::recovery::{recover_with, Algorithm, OnsagerDivisor, RecoveryConfig};
use crate::sensing::{select_entry, SensingCodebook};
use crate::synth::VideoSource;

fn default_trials() -> usize {
    1
}
fn default_iterations() -> usize {
    400
}
fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}
fn default_threshold() -> f64 {
    1.0
}
fn default_bits() -> u8 {
    crate::coding::DEFAULT_BITS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningCurveSpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub onsager_divisor: Option<OnsagerDivisor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitsSweepSpec {
    pub name: String,
    pub video: VideoSource,
    pub bits: Vec<u8>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSweepSpec {
    pub name: String,
    pub video: VideoSource,
    pub thresholds: Vec<f64>,
    #[serde(default = "default_bits")]
    pub bits: u8,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSweepSpec {
    pub name: String,
    pub video: VideoSource,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_bits")]
    pub bits: u8,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub learning_curve: Vec<LearningCurveSpec>,
    #[serde(default)]
    pub bits_sweep: Vec<BitsSweepSpec>,
    #[serde(default)]
    pub threshold_sweep: Vec<ThresholdSweepSpec>,
    #[serde(default)]
    pub layer_sweep: Vec<LayerSweepSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CodecError::Parameter(format!("experiment config: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub experiment: String,
    pub series: String,
    pub x: f64,
    pub value: f64,
}

fn row(experiment: &str, series: &str, x: f64, value: f64) -> CurveRow {
    CurveRow { experiment: experiment.to_string(), series: series.to_string(), x, value }
}

/// A `k`-sparse vector with standard normal nonzeros.
pub fn sparse_gaussian(n: usize, k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; n];
    for i in rand::seq::index::sample(&mut rng, n, k.min(n)) {
        v[i] = rng.sample(StandardNormal);
    }
    v
}

/// Per-iteration NMSE averaged over trials, one trace per algorithm.
pub fn learning_curves(spec: &LearningCurveSpec) -> Result<Vec<(Algorithm, Vec<f64>)>> {
    if spec.k == 0 || spec.k > spec.n || spec.trials == 0 {
        return Err(CodecError::Parameter(format!("learning curve '{}' needs 0 < k <= n and trials > 0", spec.name)));
    }
    let j = select_entry(spec.k);
    let mut sums = vec![vec![0.0; spec.iterations]; spec.algorithms.len()];
    for trial in 0..spec.trials as u64 {
        let seed = spec.seed.wrapping_add(trial);
        let truth = sparse_gaussian(spec.n, spec.k, seed);
        let phi = SensingCodebook::new(seed).matrix(j, spec.n)?;
        let y = phi.apply(&truth);
        let traces = crate::par_map(&spec.algorithms, |&algorithm| {
            let mut config = RecoveryConfig { algorithm, iterations: spec.iterations, ..Default::default() };
            if let Some(d) = spec.onsager_divisor {
                config.onsager_divisor = d;
            }
            config.validate()?;
            Ok(recover_with(&phi, &y, spec.k, &config, Some(&truth)).nmse_trace.unwrap_or_default())
        });
        for (sum, trace) in sums.iter_mut().zip(traces) {
            for (s, v) in sum.iter_mut().zip(trace?) {
                *s += v;
            }
        }
    }
    Ok(spec
        .algorithms
        .iter()
        .zip(sums)
        .map(|(&a, s)| (a, s.into_iter().map(|v| v / spec.trials as f64).collect()))
        .collect())
}

struct Point {
    psnr: f64,
    compression_ratio: f64,
    measurement_percentage: f64,
    coded_bytes: usize,
}

fn run_codec(source: &[crate::video_io::FramePlane], config: &EncoderConfig) -> Result<Point> {
    let bytes = encode_video(source, config)?;
    let decoded = decode(&bytes, &RecoveryConfig::default())?;
    let rate = rate_report(&bytes)?;
    Ok(Point {
        psnr: psnr(source, &decoded.frames)?.pooled,
        compression_ratio: rate.compression_ratio,
        measurement_percentage: rate.measurement_percentage,
        coded_bytes: bytes.len(),
    })
}

pub fn emit_curves(config: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for spec in &config.learning_curve {
        for (alg, trace) in learning_curves(spec)? {
            rows.extend(trace.iter().enumerate().map(|(i, &v)| row(&spec.name, alg.name(), (i + 1) as f64, v)));
        }
    }
    for spec in &config.bits_sweep {
        let source = spec.video.frames()?;
        for &bits in &spec.bits {
            let enc = EncoderConfig {
                threshold: spec.threshold,
                quant_bits: bits,
                master_seed: spec.seed,
                ..Default::default()
            };
            let p = run_codec(&source, &enc)?;
            let x = f64::from(bits);
            rows.push(row(&spec.name, "psnr", x, p.psnr));
            rows.push(row(&spec.name, "compression_ratio", x, p.compression_ratio));
            rows.push(row(&spec.name, "coded_bytes", x, p.coded_bytes as f64));
        }
    }
    for spec in &config.threshold_sweep {
        let source = spec.video.frames()?;
        for &t in &spec.thresholds {
            let enc =
                EncoderConfig { threshold: t, quant_bits: spec.bits, master_seed: spec.seed, ..Default::default() };
            let p = run_codec(&source, &enc)?;
            rows.push(row(&spec.name, "psnr", t, p.psnr));
            rows.push(row(&spec.name, "measurement_percentage", t, p.measurement_percentage));
            rows.push(row(&spec.name, "compression_ratio", t, p.compression_ratio));
            rows.push(row(&spec.name, "coded_bytes", t, p.coded_bytes as f64));
        }
    }
    for spec in &config.layer_sweep {
        let source = spec.video.frames()?;
        let enc = EncoderConfig {
            threshold: spec.threshold,
            quant_bits: spec.bits,
            master_seed: spec.seed,
            ..Default::default()
        };
        let bytes = encode_video(&source, &enc)?;
        let pixels = source.iter().map(|f| f.samples().len()).sum::<usize>() as f64;
        let recovery = RecoveryConfig::default();
        for layer in Layer::ALL {
            let cut = extract_layers(&bytes, layer)?;
            let x = f64::from(layer.id());
            let reduced = decode(&cut, &recovery)?;
            let reference = reference_at_level(&source, reduced.resolution_level)?;
            rows.push(row(&spec.name, "bits_per_pixel", x, cut.len() as f64 * 8.0 / pixels));
            rows.push(row(&spec.name, "psnr_full_size", x, psnr(&source, &decode_full_size(&cut, &recovery)?)?.pooled));
            rows.push(row(&spec.name, "psnr_reduced", x, psnr(&reference, &reduced.frames)?.pooled));
        }
    }
    Ok(rows)
}

/// Writes rows under an `experiment,series,x,value` header, which is
/// emitted even when there are no rows.
pub fn write_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let csv_err = |e: csv::Error| CodecError::Parameter(format!("csv: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["experiment", "series", "x", "value"]).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CodecError::Parameter(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CurveRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CodecError::Parameter(format!("csv: {e}")))
}
