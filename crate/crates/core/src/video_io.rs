//! Raw planar luma I/O and grouping of frames into GOFs.

use crate::error::{CodecError, Result};

/// Frames per group of frames.
pub const GOF_SIZE: usize = 8;

/// Magic of the self-describing raw variant: `CSWV-RAW` then width, height
/// and frame count as little-endian u32.
pub const RAW_MAGIC: &[u8; 8] = b"CSWV-RAW";

/// One luma plane, row-major, real-valued.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl FramePlane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(CodecError::ShapeMismatch(format!("{} samples for a {width}x{height} plane", samples.len())));
        }
        Ok(Self { width, height, samples })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, samples: vec![0.0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, samples: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }
}

/// Checks that both dimensions survive `levels` dyadic splits.
pub fn check_dyadic(width: usize, height: usize, levels: u32) -> Result<()> {
    let unit = 1usize << levels;
    if width == 0 || height == 0 || !width.is_multiple_of(unit) || !height.is_multiple_of(unit) {
        return Err(CodecError::Dimension(format!("{width}x{height} is not divisible by {unit} in both dimensions")));
    }
    Ok(())
}

/// Eight consecutive frames of identical size.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupOfFrames {
    frames: Vec<FramePlane>,
    gof_index: usize,
}

impl GroupOfFrames {
    pub fn new(frames: Vec<FramePlane>, gof_index: usize) -> Result<Self> {
        if frames.len() != GOF_SIZE {
            return Err(CodecError::ShapeMismatch(format!("a GOF needs {GOF_SIZE} frames, got {}", frames.len())));
        }
        let (w, h) = (frames[0].width, frames[0].height);
        if frames.iter().any(|f| f.width != w || f.height != h) {
            return Err(CodecError::ShapeMismatch("frames in a GOF differ in size".into()));
        }
        Ok(Self { frames, gof_index })
    }

    pub fn frames(&self) -> &[FramePlane] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<FramePlane> {
        self.frames
    }

    pub fn gof_index(&self) -> usize {
        self.gof_index
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }
}

/// Result of [`partition_gofs`]: the groups plus how many repeated frames were
/// appended to fill the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct GofPartition {
    pub gofs: Vec<GroupOfFrames>,
    pub padding: usize,
}

/// Layout of a raw file on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawLayout {
    /// Luma planes only.
    Gray,
    /// Planar 4:2:0; the chroma planes are skipped.
    Yuv420,
}

impl RawLayout {
    fn frame_stride(self, width: usize, height: usize) -> usize {
        match self {
            RawLayout::Gray => width * height,
            RawLayout::Yuv420 => width * height + 2 * (width / 2) * (height / 2),
        }
    }
}

/// Reads `frame_count` planar 8-bit luma frames.
pub fn read_raw_video(source: &[u8], width: usize, height: usize, frame_count: usize) -> Result<Vec<FramePlane>> {
    read_raw_video_with_layout(source, width, height, frame_count, RawLayout::Gray)
}

pub fn read_raw_video_with_layout(
    source: &[u8],
    width: usize,
    height: usize,
    frame_count: usize,
    layout: RawLayout,
) -> Result<Vec<FramePlane>> {
    check_dyadic(width, height, 3)?;
    read_planes(source, width, height, frame_count, layout)
}

/// Like [`read_raw_video`] but accepts any positive frame size, as produced
/// by reduced-resolution decodes.
pub fn read_raw_planes(source: &[u8], width: usize, height: usize, frame_count: usize) -> Result<Vec<FramePlane>> {
    if width == 0 || height == 0 {
        return Err(CodecError::Dimension(format!("frame size {width}x{height} is empty")));
    }
    read_planes(source, width, height, frame_count, RawLayout::Gray)
}

fn read_planes(
    source: &[u8],
    width: usize,
    height: usize,
    frame_count: usize,
    layout: RawLayout,
) -> Result<Vec<FramePlane>> {
    let stride = layout.frame_stride(width, height);
    let luma = width * height;
    let mut frames = Vec::with_capacity(frame_count);
    for f in 0..frame_count {
        let start = f * stride;
        let end = start + luma;
        if source.len() < end {
            return Err(CodecError::TruncatedInput { offset: source.len(), expected: end });
        }
        let samples = source[start..end].iter().map(|&b| f64::from(b)).collect();
        frames.push(FramePlane { width, height, samples });
    }
    Ok(frames)
}

/// Number of whole frames in a headerless raw buffer.
pub fn count_raw_frames(len: usize, width: usize, height: usize, layout: RawLayout) -> usize {
    len.checked_div(layout.frame_stride(width, height)).unwrap_or(0)
}

/// Parses the `CSWV-RAW` header variant. Returns `None` if the magic is
/// absent. Any positive frame size is accepted.
pub fn read_raw_with_header(source: &[u8]) -> Result<Option<Vec<FramePlane>>> {
    if source.len() < RAW_MAGIC.len() || &source[..RAW_MAGIC.len()] != RAW_MAGIC {
        return Ok(None);
    }
    if source.len() < 20 {
        return Err(CodecError::TruncatedInput { offset: source.len(), expected: 20 });
    }
    let field = |i: usize| u32::from_le_bytes(source[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (width, height, frames) = (field(0), field(1), field(2));
    let body = &source[20..];
    if frames == 0 {
        return Ok(Some(Vec::new()));
    }
    read_raw_planes(body, width, height, frames).map(Some).map_err(|e| match e {
        CodecError::TruncatedInput { offset, expected } => {
            CodecError::TruncatedInput { offset: offset + 20, expected: expected + 20 }
        }
        other => other,
    })
}

/// Splits frames into GOFs of eight, repeating the last frame to fill a
/// trailing partial group.
pub fn partition_gofs(frames: &[FramePlane]) -> Result<GofPartition> {
    if frames.is_empty() {
        return Ok(GofPartition { gofs: Vec::new(), padding: 0 });
    }
    let padding = (GOF_SIZE - frames.len() % GOF_SIZE) % GOF_SIZE;
    let last = frames[frames.len() - 1].clone();
    let padded: Vec<FramePlane> = frames.iter().cloned().chain(std::iter::repeat_n(last, padding)).collect();
    let gofs = padded
        .chunks(GOF_SIZE)
        .enumerate()
        .map(|(i, chunk)| GroupOfFrames::new(chunk.to_vec(), i))
        .collect::<Result<Vec<_>>>()?;
    Ok(GofPartition { gofs, padding })
}

/// Rounds half-up and clamps to `[0, 255]`.
pub fn to_u8(sample: f64) -> u8 {
    if sample.is_nan() {
        return 0;
    }
    (sample + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Emits frames as planar 8-bit luma.
pub fn write_raw_video(frames: &[FramePlane]) -> Vec<u8> {
    frames.iter().flat_map(|f| f.samples.iter().map(|&s| to_u8(s))).collect()
}

/// Emits frames with the `CSWV-RAW` header.
pub fn write_raw_with_header(frames: &[FramePlane]) -> Vec<u8> {
    let (w, h) = frames.first().map(|f| (f.width, f.height)).unwrap_or((0, 0));
    let mut out = Vec::with_capacity(20 + frames.len() * w * h);
    out.extend_from_slice(RAW_MAGIC);
    for v in [w, h, frames.len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend(write_raw_video(frames));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_dyadic_dimensions() {
        let err = read_raw_video(&[0, 255], 1, 2, 1).unwrap_err();
        assert!(matches!(err, CodecError::Dimension(_)));
    }

    #[test]
    fn reads_zero_frame() {
        let frames = read_raw_video(&[0u8; 128], 16, 8, 1).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn cif_stream_makes_one_gof() {
        let (w, h) = (352, 288);
        let bytes = vec![17u8; w * h * 8];
        assert_eq!(count_raw_frames(bytes.len(), w, h, RawLayout::Gray), 8);
        let frames = read_raw_video(&bytes, w, h, 8).unwrap();
        assert_eq!(frames.len(), 8);
        let part = partition_gofs(&frames).unwrap();
        assert_eq!(part.gofs.len(), 1);
        assert_eq!(part.padding, 0);
    }

    #[test]
    fn truncated_stream_names_offset() {
        let err = read_raw_video(&[0u8; 100], 8, 8, 2).unwrap_err();
        assert_eq!(err, CodecError::TruncatedInput { offset: 100, expected: 128 });
    }

    #[test]
    fn yuv420_skips_chroma() {
        let (w, h) = (8, 8);
        let mut bytes = Vec::new();
        for f in 0..2u8 {
            bytes.extend(std::iter::repeat_n(f + 1, w * h));
            bytes.extend(std::iter::repeat_n(200, w * h / 2));
        }
        let frames = read_raw_video_with_layout(&bytes, w, h, 2, RawLayout::Yuv420).unwrap();
        assert_eq!(frames[1].samples()[0], 2.0);
        assert_eq!(count_raw_frames(bytes.len(), w, h, RawLayout::Yuv420), 2);
    }

    #[test]
    fn partition_counts_and_padding() {
        let frames: Vec<_> = (0..16).map(|i| FramePlane::filled(8, 8, i as f64)).collect();
        assert_eq!(partition_gofs(&frames).unwrap().gofs.len(), 2);

        let nine = &frames[..9];
        let part = partition_gofs(nine).unwrap();
        assert_eq!(part.gofs.len(), 2);
        assert_eq!(part.padding, 7);
        assert!(part.gofs[1].frames().iter().all(|f| f.samples()[0] == 8.0));

        let part = partition_gofs(&frames[..8]).unwrap();
        assert_eq!((part.gofs.len(), part.padding), (1, 0));
        assert!(partition_gofs(&[]).unwrap().gofs.is_empty());
    }

    #[test]
    fn emission_clamps_and_rounds() {
        let f = FramePlane::new(2, 1, vec![255.7, -0.4]).unwrap();
        assert_eq!(write_raw_video(&[f]), vec![255, 0]);
        assert_eq!(to_u8(2.5), 3);
        assert_eq!(to_u8(2.49), 2);
    }

    #[test]
    fn header_variant_round_trips() {
        let frames: Vec<_> = (0..3).map(|i| FramePlane::filled(16, 8, i as f64 * 10.0)).collect();
        let bytes = write_raw_with_header(&frames);
        assert_eq!(read_raw_with_header(&bytes).unwrap().unwrap(), frames);
        assert!(read_raw_with_header(&[1, 2, 3]).unwrap().is_none());
    }
}
