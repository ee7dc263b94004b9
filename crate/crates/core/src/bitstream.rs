//! Layered container: a fixed header followed by length-prefixed layer
//! chunks, grouped per GOF in the order BL, EL1, EL2, EL3.
//!
//! See `FORMAT.md` at the repository root for the byte layout.

use crate::bits::{BitReader, BitWriter};
use crate::coding::CodedChunk;
use crate::dwt::{pyramid_band_map, BandRegion, Layer, LEVELS};
use crate::error::{CodecError, Result};
use crate::sensing::{measurement_count, vector_length, vectors_per_band};
use crate::video_io::GOF_SIZE;

pub const MAGIC: &[u8; 4] = b"CSWV";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 42;
/// gof_index, layer_id, level, payload_len.
pub const CHUNK_HEADER_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamHeader {
    pub version: u16,
    pub width: u32,
    pub height: u32,
    /// Source frames before GOF padding.
    pub frame_count: u32,
    pub fps: u32,
    pub gof_size: u8,
    pub spatial_levels: u8,
    pub temporal_levels: u8,
    pub threshold: f32,
    pub quant_bits: u8,
    pub master_seed: u64,
    pub target_min_n: u32,
}

impl StreamHeader {
    pub fn new(width: u32, height: u32, frame_count: u32) -> Self {
        Self {
            version: VERSION,
            width,
            height,
            frame_count,
            fps: 30,
            gof_size: GOF_SIZE as u8,
            spatial_levels: LEVELS as u8,
            temporal_levels: LEVELS as u8,
            threshold: 0.0,
            quant_bits: crate::coding::DEFAULT_BITS,
            master_seed: 0,
            target_min_n: crate::sensing::DEFAULT_TARGET_MIN_N as u32,
        }
    }

    pub fn gof_count(&self) -> usize {
        (self.frame_count as usize).div_ceil(GOF_SIZE)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        let mut at = 0;
        let mut put = |bytes: &[u8]| {
            out[at..at + bytes.len()].copy_from_slice(bytes);
            at += bytes.len();
        };
        put(MAGIC);
        put(&self.version.to_le_bytes());
        put(&self.width.to_le_bytes());
        put(&self.height.to_le_bytes());
        put(&self.frame_count.to_le_bytes());
        put(&self.fps.to_le_bytes());
        put(&[self.gof_size, self.spatial_levels, self.temporal_levels]);
        put(&self.threshold.to_le_bytes());
        put(&[self.quant_bits]);
        put(&self.master_seed.to_le_bytes());
        put(&self.target_min_n.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(CodecError::Format("missing CSWV magic".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::TruncatedInput { offset: bytes.len(), expected: HEADER_LEN });
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let header = Self {
            version: u16_at(4),
            width: u32_at(6),
            height: u32_at(10),
            frame_count: u32_at(14),
            fps: u32_at(18),
            gof_size: bytes[22],
            spatial_levels: bytes[23],
            temporal_levels: bytes[24],
            threshold: f32::from_le_bytes(bytes[25..29].try_into().expect("4 bytes")),
            quant_bits: bytes[29],
            master_seed: u64::from_le_bytes(bytes[30..38].try_into().expect("8 bytes")),
            target_min_n: u32_at(38),
        };
        header.validate()?;
        Ok(header)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != VERSION {
            return Err(CodecError::Format(format!("unsupported version {}", self.version)));
        }
        if usize::from(self.gof_size) != GOF_SIZE
            || u32::from(self.spatial_levels) != LEVELS
            || u32::from(self.temporal_levels) != LEVELS
        {
            return Err(CodecError::Format(format!(
                "unsupported structure: gof {} spatial {} temporal {}",
                self.gof_size, self.spatial_levels, self.temporal_levels
            )));
        }
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(8) || !self.height.is_multiple_of(8) {
            return Err(CodecError::Format(format!(
                "frame size {}x{} is not a positive multiple of 8",
                self.width, self.height
            )));
        }
        if !(4..=16).contains(&self.quant_bits) {
            return Err(CodecError::Format(format!("quantizer bits {} outside [4, 16]", self.quant_bits)));
        }
        if self.target_min_n == 0 {
            return Err(CodecError::Format("target_min_n is zero".into()));
        }
        Ok(())
    }

    /// Bands of `layer` with their vector length and vector count.
    pub fn layer_slots(&self, layer: Layer) -> Vec<(BandRegion, usize, usize)> {
        let target = self.target_min_n as usize;
        pyramid_band_map(self.width as usize, self.height as usize)
            .into_iter()
            .filter(|r| r.tag.layer() == layer && !r.tag.is_base())
            .map(|r| (r, vector_length(r.width, r.height, target), vectors_per_band(&r, target)))
            .collect()
    }

    /// Vector lengths of every record of `layer`, in order.
    pub fn record_lengths(&self, layer: Layer) -> Vec<usize> {
        self.layer_slots(layer).into_iter().flat_map(|(_, n, count)| std::iter::repeat_n(n, count)).collect()
    }

    pub fn base_len(&self) -> usize {
        (self.width as usize >> LEVELS) * (self.height as usize >> LEVELS)
    }
}

/// Sensing side information and quantized measurements of one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedRecord {
    pub j: u8,
    pub k: u16,
    /// Absent exactly when `j == 0`.
    pub y: Option<CodedChunk>,
}

impl CodedRecord {
    pub fn empty(k: u16) -> Self {
        Self { j: 0, k, y: None }
    }

    fn write(&self, w: &mut BitWriter) -> Result<()> {
        w.write_bits(u64::from(self.j), 4);
        w.write_bits(u64::from(self.k), 16);
        if let Some(y) = &self.y {
            y.write(w)?;
        }
        Ok(())
    }

    fn read(r: &mut BitReader, n: usize) -> Result<Self> {
        let at = r.position();
        let j = r.read_bits(4)? as u8;
        let k = r.read_bits(16)? as u16;
        if j == 0 {
            return Ok(Self::empty(k));
        }
        let y = CodedChunk::read(r)?;
        let m = measurement_count(j);
        let expected = if m > n { n } else { m };
        if y.sample_count != expected {
            return Err(CodecError::Bitstream {
                bit_offset: at,
                reason: format!("record with j={j} carries {} values, expected {expected}", y.sample_count),
            });
        }
        Ok(Self { j, k, y: Some(y) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChunkPayload {
    Base(CodedChunk),
    Records(Vec<CodedRecord>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerChunk {
    pub gof_index: u32,
    pub layer: Layer,
    pub payload: ChunkPayload,
}

impl LayerChunk {
    /// Decomposition level whose bands the chunk carries.
    pub fn level(&self) -> u8 {
        self.layer.level() as u8
    }

    fn payload_bytes(&self) -> Result<Vec<u8>> {
        let mut w = BitWriter::new();
        match &self.payload {
            ChunkPayload::Base(chunk) => chunk.write(&mut w)?,
            ChunkPayload::Records(records) => {
                for rec in records {
                    rec.write(&mut w)?;
                }
            }
        }
        Ok(w.into_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofChunks {
    pub gof_index: u32,
    /// Strictly increasing layers.
    pub chunks: Vec<LayerChunk>,
}

impl GofChunks {
    pub fn layers(&self) -> Vec<Layer> {
        self.chunks.iter().map(|c| c.layer).collect()
    }

    pub fn chunk(&self, layer: Layer) -> Option<&LayerChunk> {
        self.chunks.iter().find(|c| c.layer == layer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredBitstream {
    pub header: StreamHeader,
    pub gofs: Vec<GofChunks>,
}

/// Encoder output for one GOF: the base band chunk and one record per
/// vector, in canonical band order.
#[derive(Debug, Clone, PartialEq)]
pub struct GofPayload {
    pub base: CodedChunk,
    pub records: Vec<CodedRecord>,
}

/// Splits each GOF's records into layer chunks by position.
pub fn mux(header: StreamHeader, gofs: Vec<GofPayload>) -> Result<LayeredBitstream> {
    header.validate()?;
    let counts: Vec<usize> = Layer::ALL[1..].iter().map(|&l| header.record_lengths(l).len()).collect();
    let total: usize = counts.iter().sum();
    let mut out = Vec::with_capacity(gofs.len());
    for (g, gof) in gofs.into_iter().enumerate() {
        if gof.records.len() != total {
            return Err(CodecError::Structure(format!(
                "GOF {g}: {} records, geometry needs {total}",
                gof.records.len()
            )));
        }
        let gof_index = g as u32;
        let mut chunks = vec![LayerChunk { gof_index, layer: Layer::Base, payload: ChunkPayload::Base(gof.base) }];
        let mut records = gof.records.into_iter();
        for (&layer, &count) in Layer::ALL[1..].iter().zip(&counts) {
            let payload = ChunkPayload::Records(records.by_ref().take(count).collect());
            chunks.push(LayerChunk { gof_index, layer, payload });
        }
        out.push(GofChunks { gof_index, chunks });
    }
    Ok(LayeredBitstream { header, gofs: out })
}

impl LayeredBitstream {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.header.to_bytes().to_vec();
        for gof in &self.gofs {
            for chunk in &gof.chunks {
                let payload = chunk.payload_bytes()?;
                out.extend_from_slice(&chunk.gof_index.to_le_bytes());
                out.push(chunk.layer.id());
                out.push(chunk.level());
                out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
                out.extend_from_slice(&payload);
            }
        }
        Ok(out)
    }

    /// Highest layer present in every GOF as an unbroken prefix from BL.
    pub fn max_layer(&self) -> Result<Layer> {
        let mut common: Option<Layer> = None;
        for gof in &self.gofs {
            let layers = gof.layers();
            if layers.first() != Some(&Layer::Base) {
                return Err(CodecError::UnusableStream(format!("GOF {} has no base layer", gof.gof_index)));
            }
            if layers.iter().enumerate().any(|(i, l)| usize::from(l.id()) != i) {
                return Err(CodecError::UnusableStream(format!(
                    "GOF {} layers {:?} are not a prefix of BL, EL1, EL2, EL3",
                    gof.gof_index,
                    layers.iter().map(|l| l.name()).collect::<Vec<_>>()
                )));
            }
            let top = *layers.last().expect("non-empty");
            if common.is_some_and(|c| c != top) {
                return Err(CodecError::UnusableStream("GOFs carry different layer sets".into()));
            }
            common = Some(top);
        }
        Ok(common.unwrap_or(Layer::El3))
    }

    /// Total bits by category: header, chunk headers, payloads.
    pub fn bit_budget(&self) -> Result<(usize, usize, usize)> {
        let mut chunk_headers = 0;
        let mut payloads = 0;
        for chunk in self.gofs.iter().flat_map(|g| &g.chunks) {
            chunk_headers += CHUNK_HEADER_LEN * 8;
            payloads += chunk.payload_bytes()?.len() * 8;
        }
        Ok((HEADER_LEN * 8, chunk_headers, payloads))
    }
}

pub fn demux(bytes: &[u8]) -> Result<LayeredBitstream> {
    let header = StreamHeader::from_bytes(bytes)?;
    let gof_count = header.gof_count();
    let lengths: Vec<Vec<usize>> = Layer::ALL[1..].iter().map(|&l| header.record_lengths(l)).collect();
    let mut gofs: Vec<GofChunks> = Vec::new();
    let mut at = HEADER_LEN;
    let mut last: Option<(u32, u8)> = None;
    while at < bytes.len() {
        if bytes.len() - at < CHUNK_HEADER_LEN {
            return Err(CodecError::TruncatedInput { offset: bytes.len(), expected: at + CHUNK_HEADER_LEN });
        }
        let gof_index = u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let layer_id = bytes[at + 4];
        let level = bytes[at + 5];
        let len = u32::from_le_bytes(bytes[at + 6..at + 10].try_into().expect("4 bytes")) as usize;
        let layer = Layer::from_id(layer_id)
            .ok_or_else(|| CodecError::Format(format!("chunk at byte {at}: unknown layer id {layer_id}")))?;
        if u32::from(level) != layer.level() {
            return Err(CodecError::Format(format!(
                "chunk at byte {at}: level {level} does not match {}",
                layer.name()
            )));
        }
        if gof_index as usize >= gof_count {
            return Err(CodecError::Format(format!("chunk at byte {at}: GOF {gof_index} beyond {gof_count} GOFs")));
        }
        if last.is_some_and(|prev| prev >= (gof_index, layer_id)) {
            return Err(CodecError::Format(format!("chunk at byte {at}: out of order")));
        }
        last = Some((gof_index, layer_id));
        let start = at + CHUNK_HEADER_LEN;
        let end = start.checked_add(len).filter(|&e| e <= bytes.len()).ok_or(CodecError::Bitstream {
            bit_offset: start * 8,
            reason: format!("chunk payload of {len} bytes runs past the end of the stream"),
        })?;
        let payload = parse_payload(&header, layer, &lengths, &bytes[start..end]).map_err(|e| match e {
            CodecError::Bitstream { bit_offset, reason } => {
                CodecError::Bitstream { bit_offset: start * 8 + bit_offset, reason }
            }
            other => other,
        })?;
        let chunk = LayerChunk { gof_index, layer, payload };
        match gofs.last_mut() {
            Some(g) if g.gof_index == gof_index => g.chunks.push(chunk),
            _ => gofs.push(GofChunks { gof_index, chunks: vec![chunk] }),
        }
        at = end;
    }
    Ok(LayeredBitstream { header, gofs })
}

fn parse_payload(header: &StreamHeader, layer: Layer, lengths: &[Vec<usize>], payload: &[u8]) -> Result<ChunkPayload> {
    let mut r = BitReader::new(payload);
    let parsed = match layer {
        Layer::Base => {
            let chunk = CodedChunk::read(&mut r)?;
            if chunk.sample_count != header.base_len() {
                return Err(CodecError::Bitstream {
                    bit_offset: 0,
                    reason: format!("base band has {} values, expected {}", chunk.sample_count, header.base_len()),
                });
            }
            ChunkPayload::Base(chunk)
        }
        _ => {
            let ns = &lengths[usize::from(layer.id()) - 1];
            ChunkPayload::Records(ns.iter().map(|&n| CodedRecord::read(&mut r, n)).collect::<Result<_>>()?)
        }
    };
    if r.remaining() >= 8 {
        return Err(CodecError::Bitstream {
            bit_offset: r.position(),
            reason: format!("{} trailing bits", r.remaining()),
        });
    }
    Ok(parsed)
}

/// Drops every chunk above `max_layer`. The result is a valid stream.
pub fn extract_layers(bytes: &[u8], max_layer: Layer) -> Result<Vec<u8>> {
    let mut stream = demux(bytes)?;
    for gof in &mut stream.gofs {
        gof.chunks.retain(|c| c.layer <= max_layer);
    }
    stream.to_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode_chunk;

    fn header() -> StreamHeader {
        StreamHeader { master_seed: 9, ..StreamHeader::new(64, 64, 8) }
    }

    fn all_zero_gof(h: &StreamHeader) -> GofPayload {
        let total: usize = Layer::ALL[1..].iter().map(|&l| h.record_lengths(l).len()).sum();
        GofPayload {
            base: encode_chunk(&vec![1.5; h.base_len()], 12).unwrap(),
            records: vec![CodedRecord::empty(0); total],
        }
    }

    #[test]
    fn header_round_trip_and_bad_magic() {
        let h = header();
        let bytes = h.to_bytes();
        assert_eq!(StreamHeader::from_bytes(&bytes).unwrap(), h);
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(StreamHeader::from_bytes(&bad), Err(CodecError::Format(_))));
    }

    #[test]
    fn empty_video_is_header_only() {
        let h = StreamHeader::new(64, 64, 0);
        let bytes = mux(h, vec![]).unwrap().to_bytes().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(demux(&bytes).unwrap().gofs.len(), 0);
    }

    #[test]
    fn zero_records_cost_twenty_bits() {
        let h = header();
        let stream = mux(h, vec![all_zero_gof(&h)]).unwrap();
        let bytes = stream.to_bytes().unwrap();
        assert_eq!(demux(&bytes).unwrap(), stream);
        let gof = &stream.gofs[0];
        assert_eq!(gof.layers(), Layer::ALL.to_vec());
        for layer in &Layer::ALL[1..] {
            let records = h.record_lengths(*layer).len();
            assert_eq!(gof.chunk(*layer).unwrap().payload_bytes().unwrap().len(), (records * 20).div_ceil(8));
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let h = header();
        let bytes = mux(h, vec![all_zero_gof(&h)]).unwrap().to_bytes().unwrap();
        for cut in [HEADER_LEN + 3, HEADER_LEN + CHUNK_HEADER_LEN + 2, bytes.len() - 1] {
            let err = demux(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, CodecError::Bitstream { .. } | CodecError::TruncatedInput { .. }),
                "cut {cut}: {err:?}"
            );
        }
        assert!(matches!(demux(&bytes[..10]), Err(CodecError::TruncatedInput { .. })));
    }

    #[test]
    fn extraction_keeps_prefixes() {
        let h = header();
        let bytes = mux(h, vec![all_zero_gof(&h)]).unwrap().to_bytes().unwrap();
        assert_eq!(extract_layers(&bytes, Layer::El3).unwrap(), bytes);
        let mut sizes = vec![];
        for layer in Layer::ALL {
            let cut = extract_layers(&bytes, layer).unwrap();
            let stream = demux(&cut).unwrap();
            assert_eq!(stream.max_layer().unwrap(), layer);
            sizes.push(cut.len());
        }
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn non_prefix_layer_sets_are_unusable() {
        let h = header();
        let mut stream = mux(h, vec![all_zero_gof(&h)]).unwrap();
        stream.gofs[0].chunks.remove(1);
        assert!(matches!(stream.max_layer(), Err(CodecError::UnusableStream(_))));
        stream.gofs[0].chunks.remove(0);
        assert!(matches!(stream.max_layer(), Err(CodecError::UnusableStream(_))));
    }
}
