//! End-to-end encoder and decoder.

use crate::bitstream::{demux, mux, ChunkPayload, CodedRecord, GofPayload, LayeredBitstream, StreamHeader};
use crate::coding::{encode_chunk, DEFAULT_BITS};
use crate::dwt::{dwt3d_forward, reconstruct_at_level, Layer, SubbandPyramid};
use crate::error::{CodecError, Result};
use crate::recovery::{recover_pyramid, PyramidGeometry, RecoveryConfig};
use crate::sensing::{sense_pyramid, MeasurementRecord, SensingCodebook, DEFAULT_TARGET_MIN_N};
use crate::video_io::{check_dyadic, partition_gofs, FramePlane, GOF_SIZE};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Hard threshold applied to every non-base band; 0 keeps everything.
    pub threshold: f64,
    pub quant_bits: u8,
    pub master_seed: u64,
    pub target_min_n: usize,
    pub fps: u32,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { threshold: 1.0, quant_bits: DEFAULT_BITS, master_seed: 0, target_min_n: DEFAULT_TARGET_MIN_N, fps: 30 }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(CodecError::Parameter(format!("threshold {} must be finite and >= 0", self.threshold)));
        }
        if !(4..=16).contains(&self.quant_bits) {
            return Err(CodecError::Parameter(format!("quantizer bits {} outside [4, 16]", self.quant_bits)));
        }
        if self.target_min_n == 0 || self.target_min_n > u32::MAX as usize {
            return Err(CodecError::Parameter(format!("target_min_n {} out of range", self.target_min_n)));
        }
        Ok(())
    }

    fn header(&self, width: usize, height: usize, frame_count: usize) -> Result<StreamHeader> {
        let narrow = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| CodecError::Parameter(format!("{what} {v} does not fit in 32 bits")))
        };
        Ok(StreamHeader {
            fps: self.fps,
            threshold: self.threshold as f32,
            quant_bits: self.quant_bits,
            master_seed: self.master_seed,
            target_min_n: self.target_min_n as u32,
            ..StreamHeader::new(narrow(width, "width")?, narrow(height, "height")?, narrow(frame_count, "frame count")?)
        })
    }
}

/// Senses and codes one pyramid.
pub fn encode_pyramid(
    pyramid: &SubbandPyramid,
    config: &EncoderConfig,
    codebook: &SensingCodebook,
) -> Result<GofPayload> {
    let sensed = sense_pyramid(pyramid, config.threshold, codebook, config.target_min_n)?;
    let base = encode_chunk(&sensed.base_band, config.quant_bits)?;
    let records = sensed
        .records
        .iter()
        .map(|r| {
            let k = u16::try_from(r.k)
                .map_err(|_| CodecError::Parameter(format!("sparsity {} does not fit in 16 bits", r.k)))?;
            let y = if r.j == 0 { None } else { Some(encode_chunk(&r.y, config.quant_bits)?) };
            Ok(CodedRecord { j: r.j, k, y })
        })
        .collect::<Result<_>>()?;
    Ok(GofPayload { base, records })
}

/// Codes pre-computed pyramids as a stream of `frame_count` frames.
pub fn encode_pyramids(
    width: usize,
    height: usize,
    frame_count: usize,
    pyramids: &[SubbandPyramid],
    config: &EncoderConfig,
) -> Result<LayeredBitstream> {
    config.validate()?;
    check_dyadic(width, height, crate::dwt::LEVELS)?;
    if pyramids.len() != frame_count.div_ceil(GOF_SIZE) {
        return Err(CodecError::Structure(format!("{} pyramids for {frame_count} frames", pyramids.len())));
    }
    if let Some(p) = pyramids.iter().find(|p| p.width() != width || p.height() != height) {
        return Err(CodecError::ShapeMismatch(format!(
            "{}x{} pyramid in a {width}x{height} stream",
            p.width(),
            p.height()
        )));
    }
    let header = config.header(width, height, frame_count)?;
    let codebook = SensingCodebook::new(config.master_seed);
    let gofs = pyramids.iter().map(|p| encode_pyramid(p, config, &codebook)).collect::<Result<_>>()?;
    mux(header, gofs)
}

/// Encodes a video to stream bytes.
pub fn encode_video(frames: &[FramePlane], config: &EncoderConfig) -> Result<Vec<u8>> {
    let Some(first) = frames.first() else {
        return Err(CodecError::Parameter("cannot encode an empty video".into()));
    };
    let (width, height) = (first.width(), first.height());
    check_dyadic(width, height, crate::dwt::LEVELS)?;
    let partition = partition_gofs(frames)?;
    let pyramids = partition.gofs.iter().map(dwt3d_forward).collect::<Result<Vec<_>>>()?;
    encode_pyramids(width, height, frames.len(), &pyramids, config)?.to_bytes()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedVideo {
    pub frames: Vec<FramePlane>,
    pub max_layer: Layer,
    /// 0 is full size; each level halves width, height and frame rate.
    pub resolution_level: u32,
    pub frame_rate: f64,
}

/// Recovered (zero-filled above the received layers) pyramids of a stream.
pub fn decode_pyramids(
    stream: &LayeredBitstream,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
) -> Result<(Layer, Vec<SubbandPyramid>)> {
    let header = &stream.header;
    if codebook.master_seed() != header.master_seed {
        return Err(CodecError::Parameter(format!(
            "codebook seed {} does not match stream seed {}",
            codebook.master_seed(),
            header.master_seed
        )));
    }
    if stream.gofs.len() != header.gof_count() {
        return Err(CodecError::UnusableStream(format!(
            "{} GOFs present, header implies {}",
            stream.gofs.len(),
            header.gof_count()
        )));
    }
    let max_layer = stream.max_layer()?;
    let geometry = PyramidGeometry {
        width: header.width as usize,
        height: header.height as usize,
        target_min_n: header.target_min_n as usize,
    };
    let pyramids = stream
        .gofs
        .iter()
        .map(|gof| {
            let mut base = None;
            let mut records = Vec::new();
            for chunk in &gof.chunks {
                match &chunk.payload {
                    ChunkPayload::Base(c) => base = Some(c.values()),
                    ChunkPayload::Records(coded) => {
                        let lengths = header.record_lengths(chunk.layer);
                        records.extend(coded.iter().zip(lengths).map(|(r, n)| MeasurementRecord {
                            j: r.j,
                            k: usize::from(r.k),
                            n,
                            y: r.y.as_ref().map(|c| c.values()).unwrap_or_default(),
                            origin: None,
                        }));
                    }
                }
            }
            let base =
                base.ok_or_else(|| CodecError::UnusableStream(format!("GOF {} has no base layer", gof.gof_index)))?;
            recover_pyramid(&base, &records, codebook, geometry, max_layer, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((max_layer, pyramids))
}

/// Decodes at the resolution and frame rate the present layers allow.
pub fn decode_stream(bytes: &[u8], codebook: &SensingCodebook, config: &RecoveryConfig) -> Result<DecodedVideo> {
    let stream = demux(bytes)?;
    let (max_layer, pyramids) = decode_pyramids(&stream, codebook, config)?;
    let level = max_layer.resolution_level();
    let mut frames = Vec::new();
    for p in &pyramids {
        frames.extend(reconstruct_at_level(p, level)?);
    }
    frames.truncate((stream.header.frame_count as usize).div_ceil(1 << level));
    Ok(DecodedVideo {
        frames,
        max_layer,
        resolution_level: level,
        frame_rate: f64::from(stream.header.fps) / f64::from(1u32 << level),
    })
}

/// [`decode_stream`] with the codebook taken from the stream header.
pub fn decode(bytes: &[u8], config: &RecoveryConfig) -> Result<DecodedVideo> {
    let header = StreamHeader::from_bytes(bytes)?;
    decode_stream(bytes, &SensingCodebook::new(header.master_seed), config)
}

/// Full-size, full-rate frames from any prefix stream: absent bands are
/// zero-filled and the whole inverse transform is applied.
pub fn decode_full_size(bytes: &[u8], config: &RecoveryConfig) -> Result<Vec<FramePlane>> {
    let stream = demux(bytes)?;
    let codebook = SensingCodebook::new(stream.header.master_seed);
    let (_, pyramids) = decode_pyramids(&stream, &codebook, config)?;
    let mut frames = Vec::new();
    for p in &pyramids {
        frames.extend(reconstruct_at_level(p, 0)?);
    }
    frames.truncate(stream.header.frame_count as usize);
    Ok(frames)
}

/// The source as seen at resolution level `level`: the same partial
/// inverse applied to the source's own pyramids.
pub fn reference_at_level(frames: &[FramePlane], level: u32) -> Result<Vec<FramePlane>> {
    let partition = partition_gofs(frames)?;
    let mut out = Vec::new();
    for gof in &partition.gofs {
        out.extend(reconstruct_at_level(&dwt3d_forward(gof)?, level)?);
    }
    out.truncate(frames.len().div_ceil(1 << level));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::extract_layers;

    #[test]
    fn constant_video_decodes_at_every_layer() {
        let frames = vec![FramePlane::filled(64, 32, 77.0); 8];
        let bytes = encode_video(&frames, &EncoderConfig::default()).unwrap();
        let config = RecoveryConfig::default();
        for layer in Layer::ALL {
            let cut = extract_layers(&bytes, layer).unwrap();
            let out = decode(&cut, &config).unwrap();
            let r = layer.resolution_level();
            assert_eq!(out.frames.len(), 8 >> r);
            assert_eq!(out.frame_rate, 30.0 / f64::from(1u32 << r));
            for f in &out.frames {
                assert_eq!((f.width(), f.height()), (64 >> r, 32 >> r));
                assert!(f.samples().iter().all(|&s| (s - 77.0).abs() < 0.1), "{layer:?}");
            }
        }
    }

    #[test]
    fn missing_base_layer_is_unusable() {
        let frames = vec![FramePlane::filled(16, 16, 5.0); 8];
        let bytes = encode_video(&frames, &EncoderConfig::default()).unwrap();
        let mut stream = demux(&bytes).unwrap();
        stream.gofs[0].chunks.remove(0);
        let cut = stream.to_bytes().unwrap();
        assert!(matches!(decode(&cut, &RecoveryConfig::default()), Err(CodecError::UnusableStream(_))));
    }

    #[test]
    fn padded_frames_are_trimmed() {
        let frames: Vec<_> = (0..11).map(|i| FramePlane::filled(16, 16, f64::from(i * 10))).collect();
        let bytes = encode_video(&frames, &EncoderConfig { threshold: 0.0, ..Default::default() }).unwrap();
        let out = decode(&bytes, &RecoveryConfig::default()).unwrap();
        assert_eq!(out.frames.len(), 11);
        let bl = decode(&extract_layers(&bytes, Layer::Base).unwrap(), &RecoveryConfig::default()).unwrap();
        assert_eq!(bl.frames.len(), 2);
    }

    #[test]
    fn wrong_codebook_is_rejected() {
        let frames = vec![FramePlane::filled(16, 16, 5.0); 8];
        let bytes = encode_video(&frames, &EncoderConfig { master_seed: 4, ..Default::default() }).unwrap();
        assert!(decode_stream(&bytes, &SensingCodebook::new(5), &RecoveryConfig::default()).is_err());
    }
}
