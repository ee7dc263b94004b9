//! 3-D wavelet transform of a group of frames.
//!
//! Each frame gets a three-level 2-D CDF 9/7 lifting transform (Mallat layout,
//! whole-sample symmetric extension), then the eight coefficient planes get a
//! three-level orthonormal Haar transform along time. Planes are stored in
//! temporal band order `LLL, LLH, LH0, LH1, H0, H1, H2, H3`.
//!
//! The lowpass is normalised to unit DC gain, so the level-3 LL band of a
//! constant frame holds that constant and partially inverted pyramids stay in
//! pixel range.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{CodecError, Result};
use crate::par_map;
use crate::video_io::{check_dyadic, FramePlane, GroupOfFrames, GOF_SIZE};

/// Spatial and temporal decomposition depth.
pub const LEVELS: u32 = 3;

const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
const K: f64 = 1.230_174_104_914_001;

fn lift_forward(x: &mut [f64], tmp: &mut Vec<f64>) {
    let n = x.len();
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    let half = n / 2;
    tmp.clear();
    tmp.extend_from_slice(x);
    let (s, d) = x.split_at_mut(half);
    for i in 0..half {
        s[i] = tmp[2 * i];
        d[i] = tmp[2 * i + 1];
    }
    let last = half - 1;
    for i in 0..half {
        d[i] += ALPHA * (s[i] + s[(i + 1).min(last)]);
    }
    for i in 0..half {
        s[i] += BETA * (d[i.saturating_sub(1)] + d[i]);
    }
    for i in 0..half {
        d[i] += GAMMA * (s[i] + s[(i + 1).min(last)]);
    }
    for i in 0..half {
        s[i] += DELTA * (d[i.saturating_sub(1)] + d[i]);
    }
    for v in s.iter_mut() {
        *v /= K;
    }
    for v in d.iter_mut() {
        *v *= K;
    }
}

fn lift_inverse(x: &mut [f64], tmp: &mut Vec<f64>) {
    let n = x.len();
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    let half = n / 2;
    let last = half - 1;
    {
        let (s, d) = x.split_at_mut(half);
        for v in s.iter_mut() {
            *v *= K;
        }
        for v in d.iter_mut() {
            *v /= K;
        }
        for i in 0..half {
            s[i] -= DELTA * (d[i.saturating_sub(1)] + d[i]);
        }
        for i in 0..half {
            d[i] -= GAMMA * (s[i] + s[(i + 1).min(last)]);
        }
        for i in 0..half {
            s[i] -= BETA * (d[i.saturating_sub(1)] + d[i]);
        }
        for i in 0..half {
            d[i] -= ALPHA * (s[i] + s[(i + 1).min(last)]);
        }
    }
    tmp.clear();
    tmp.extend_from_slice(x);
    for i in 0..half {
        x[2 * i] = tmp[i];
        x[2 * i + 1] = tmp[half + i];
    }
}

/// Forward 1-D 9/7 analysis of an even-length signal: lowpass half followed by
/// highpass half.
pub fn dwt97_forward_1d(signal: &mut [f64]) {
    let mut tmp = Vec::with_capacity(signal.len());
    lift_forward(signal, &mut tmp);
}

pub fn dwt97_inverse_1d(coeffs: &mut [f64]) {
    let mut tmp = Vec::with_capacity(coeffs.len());
    lift_inverse(coeffs, &mut tmp);
}

fn lift(x: &mut [f64], tmp: &mut Vec<f64>, inverse: bool) {
    if inverse {
        lift_inverse(x, tmp)
    } else {
        lift_forward(x, tmp)
    }
}

fn transform_rows(data: &mut [f64], stride: usize, w: usize, h: usize, inverse: bool, tmp: &mut Vec<f64>) {
    for y in 0..h {
        lift(&mut data[y * stride..y * stride + w], tmp, inverse);
    }
}

fn transform_columns(data: &mut [f64], stride: usize, w: usize, h: usize, inverse: bool, tmp: &mut Vec<f64>) {
    let mut line = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            line[y] = data[y * stride + x];
        }
        lift(&mut line, tmp, inverse);
        for y in 0..h {
            data[y * stride + x] = line[y];
        }
    }
}

/// One analysis (or synthesis) level on the top-left `w`x`h` block: rows then
/// columns forward, columns then rows inverse.
fn level_2d(data: &mut [f64], stride: usize, w: usize, h: usize, inverse: bool) {
    let mut tmp = Vec::with_capacity(w.max(h));
    if inverse {
        transform_columns(data, stride, w, h, true, &mut tmp);
        transform_rows(data, stride, w, h, true, &mut tmp);
    } else {
        transform_rows(data, stride, w, h, false, &mut tmp);
        transform_columns(data, stride, w, h, false, &mut tmp);
    }
}

/// Sub-band orientation. The first letter is the horizontal filter, the second
/// the vertical one: `HL` sits to the right of `LL`, `LH` below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    LL,
    LH,
    HL,
    HH,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::LL => "LL",
            Orientation::LH => "LH",
            Orientation::HL => "HL",
            Orientation::HH => "HH",
        }
    }
}

/// A rectangle of a single coefficient plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialBand {
    pub level: u32,
    pub orientation: Orientation,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Spatial band map of a `levels`-deep Mallat layout, coarsest first:
/// `LL_L, LH_L, HL_L, HH_L, LH_{L-1}, ...`.
pub fn spatial_band_map(width: usize, height: usize, levels: u32) -> Vec<SpatialBand> {
    let mut bands = Vec::with_capacity(1 + 3 * levels as usize);
    let (wl, hl) = (width >> levels, height >> levels);
    bands.push(SpatialBand { level: levels, orientation: Orientation::LL, x: 0, y: 0, width: wl, height: hl });
    for level in (1..=levels).rev() {
        let (w, h) = (width >> level, height >> level);
        for (orientation, x, y) in [(Orientation::LH, 0, h), (Orientation::HL, w, 0), (Orientation::HH, w, h)] {
            bands.push(SpatialBand { level, orientation, x, y, width: w, height: h });
        }
    }
    bands
}

/// A plane of 2-D wavelet coefficients in Mallat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCoefficients {
    pub plane: FramePlane,
    pub levels: u32,
}

impl SpatialCoefficients {
    pub fn band_map(&self) -> Vec<SpatialBand> {
        spatial_band_map(self.plane.width(), self.plane.height(), self.levels)
    }
}

pub fn dwt2d_forward(plane: &FramePlane, levels: u32) -> Result<SpatialCoefficients> {
    check_dyadic(plane.width(), plane.height(), levels)?;
    let (width, height) = (plane.width(), plane.height());
    let mut data = plane.samples().to_vec();
    for level in 0..levels {
        level_2d(&mut data, width, width >> level, height >> level, false);
    }
    Ok(SpatialCoefficients { plane: FramePlane::new(width, height, data)?, levels })
}

pub fn dwt2d_inverse(coeffs: &SpatialCoefficients) -> Result<FramePlane> {
    inverse_to_level(coeffs, 0)
}

/// Synthesises coefficient levels `levels..=target+1` and returns the level
/// `target` LL band (the full plane when `target == 0`).
pub fn inverse_to_level(coeffs: &SpatialCoefficients, target: u32) -> Result<FramePlane> {
    let (width, height) = (coeffs.plane.width(), coeffs.plane.height());
    if coeffs.levels == 0 || target > coeffs.levels || check_dyadic(width, height, coeffs.levels).is_err() {
        return Err(CodecError::Structure(format!(
            "band map of {} levels does not fit a {width}x{height} plane (target level {target})",
            coeffs.levels
        )));
    }
    let mut data = coeffs.plane.samples().to_vec();
    for level in (target..coeffs.levels).rev() {
        level_2d(&mut data, width, width >> level, height >> level, true);
    }
    let (w, h) = (width >> target, height >> target);
    let samples = (0..h).flat_map(|y| data[y * width..y * width + w].iter().copied()).collect();
    FramePlane::new(w, h, samples)
}

/// Temporal band of a GOF after the three-level Haar transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemporalBand {
    Lll,
    Llh,
    Lh(u8),
    H(u8),
}

impl TemporalBand {
    pub const ALL: [TemporalBand; 8] = [
        TemporalBand::Lll,
        TemporalBand::Llh,
        TemporalBand::Lh(0),
        TemporalBand::Lh(1),
        TemporalBand::H(0),
        TemporalBand::H(1),
        TemporalBand::H(2),
        TemporalBand::H(3),
    ];

    pub fn plane_index(self) -> usize {
        match self {
            TemporalBand::Lll => 0,
            TemporalBand::Llh => 1,
            TemporalBand::Lh(i) => 2 + i as usize,
            TemporalBand::H(i) => 4 + i as usize,
        }
    }

    pub fn from_plane_index(index: usize) -> Self {
        Self::ALL[index]
    }

    /// Decomposition level this band was produced at (3 is the deepest).
    pub fn temporal_level(self) -> u32 {
        match self {
            TemporalBand::Lll | TemporalBand::Llh => 3,
            TemporalBand::Lh(_) => 2,
            TemporalBand::H(_) => 1,
        }
    }

    pub fn name(self) -> String {
        match self {
            TemporalBand::Lll => "LLL".into(),
            TemporalBand::Llh => "LLH".into(),
            TemporalBand::Lh(i) => format!("LH{i}"),
            TemporalBand::H(i) => format!("H{i}"),
        }
    }
}

/// Scalability layer a band is transmitted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Base,
    El1,
    El2,
    El3,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Base, Layer::El1, Layer::El2, Layer::El3];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Decomposition level covered by this layer; decoding up to this layer
    /// reconstructs at resolution level `level - 1`.
    pub fn level(self) -> u32 {
        match self {
            Layer::Base | Layer::El1 => 3,
            Layer::El2 => 2,
            Layer::El3 => 1,
        }
    }

    /// Resolution level (0 = full size) reachable with this layer and all below.
    pub fn resolution_level(self) -> u32 {
        3 - self.id() as u32
    }

    pub fn name(self) -> &'static str {
        match self {
            Layer::Base => "BL",
            Layer::El1 => "EL1",
            Layer::El2 => "EL2",
            Layer::El3 => "EL3",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(name))
    }
}

/// Identifies one sub-band of the pyramid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerTag {
    pub temporal: TemporalBand,
    pub spatial_level: u32,
    pub orientation: Orientation,
}

impl LayerTag {
    pub fn temporal_level(&self) -> u32 {
        self.temporal.temporal_level()
    }

    pub fn is_base(&self) -> bool {
        self.temporal == TemporalBand::Lll && self.orientation == Orientation::LL
    }

    pub fn layer(&self) -> Layer {
        if self.is_base() {
            return Layer::Base;
        }
        match self.temporal_level().min(self.spatial_level) {
            3 => Layer::El1,
            2 => Layer::El2,
            _ => Layer::El3,
        }
    }

    pub fn name(&self) -> String {
        format!("{}-{}{}", self.temporal.name(), self.orientation.name(), self.spatial_level)
    }
}

/// A tagged rectangle of one temporal plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandRegion {
    pub tag: LayerTag,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl BandRegion {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copies the region out of a plane, row-major.
    pub fn extract(&self, plane: &FramePlane) -> Vec<f64> {
        let stride = plane.width();
        (0..self.height)
            .flat_map(|r| {
                let start = (self.y + r) * stride + self.x;
                plane.samples()[start..start + self.width].iter().copied()
            })
            .collect()
    }

    /// Writes row-major `values` back into a plane.
    pub fn install(&self, plane: &mut FramePlane, values: &[f64]) {
        debug_assert_eq!(values.len(), self.len());
        let stride = plane.width();
        let samples = plane.samples_mut();
        for r in 0..self.height {
            let start = (self.y + r) * stride + self.x;
            samples[start..start + self.width].copy_from_slice(&values[r * self.width..(r + 1) * self.width]);
        }
    }
}

/// Every band of a `width`x`height` GOF pyramid in canonical transmission
/// order: by layer, then temporal plane, then coarsest spatial level first,
/// then orientation `LL, LH, HL, HH`.
pub fn pyramid_band_map(width: usize, height: usize) -> Vec<BandRegion> {
    let spatial = spatial_band_map(width, height, LEVELS);
    let mut regions: Vec<BandRegion> = TemporalBand::ALL
        .iter()
        .flat_map(|&temporal| {
            spatial.iter().map(move |b| BandRegion {
                tag: LayerTag { temporal, spatial_level: b.level, orientation: b.orientation },
                x: b.x,
                y: b.y,
                width: b.width,
                height: b.height,
            })
        })
        .collect();
    regions.sort_by_key(|r| {
        (r.tag.layer(), r.tag.temporal.plane_index(), std::cmp::Reverse(r.tag.spatial_level), r.tag.orientation)
    });
    regions
}

/// Wavelet coefficients of one GOF.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandPyramid {
    width: usize,
    height: usize,
    planes: Vec<FramePlane>,
}

impl SubbandPyramid {
    pub fn new(planes: Vec<FramePlane>) -> Result<Self> {
        if planes.len() != GOF_SIZE {
            return Err(CodecError::ShapeMismatch(format!("pyramid needs {GOF_SIZE} planes, got {}", planes.len())));
        }
        let (width, height) = (planes[0].width(), planes[0].height());
        if planes.iter().any(|p| p.width() != width || p.height() != height) {
            return Err(CodecError::ShapeMismatch("pyramid planes differ in size".into()));
        }
        check_dyadic(width, height, LEVELS)?;
        Ok(Self { width, height, planes })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(vec![FramePlane::zeros(width, height); GOF_SIZE])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> &[FramePlane] {
        &self.planes
    }

    pub fn plane(&self, band: TemporalBand) -> &FramePlane {
        &self.planes[band.plane_index()]
    }

    pub fn band_map(&self) -> Vec<BandRegion> {
        pyramid_band_map(self.width, self.height)
    }

    pub fn base_region(&self) -> BandRegion {
        self.band_map()[0]
    }

    pub fn band(&self, region: &BandRegion) -> Vec<f64> {
        region.extract(self.plane(region.tag.temporal))
    }

    pub fn set_band(&mut self, region: &BandRegion, values: &[f64]) {
        let plane = &mut self.planes[region.tag.temporal.plane_index()];
        region.install(plane, values);
    }

    pub fn coefficient_count(&self) -> usize {
        GOF_SIZE * self.width * self.height
    }

    /// Copy keeping only bands of layers `<= max_layer`; the rest are zeroed.
    pub fn truncated(&self, max_layer: Layer) -> SubbandPyramid {
        let mut out = SubbandPyramid {
            width: self.width,
            height: self.height,
            planes: vec![FramePlane::zeros(self.width, self.height); GOF_SIZE],
        };
        for region in self.band_map().iter().filter(|r| r.tag.layer() <= max_layer) {
            out.set_band(region, &self.band(region));
        }
        out
    }

    /// Sum of squared coefficients per band, in canonical order.
    pub fn band_energies(&self) -> Vec<(BandRegion, f64)> {
        self.band_map()
            .into_iter()
            .map(|r| {
                let e = self.band(&r).iter().map(|v| v * v).sum();
                (r, e)
            })
            .collect()
    }
}

fn haar_pairs(inputs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    inputs
        .chunks(2)
        .map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let low = a.iter().zip(b).map(|(x, y)| (x + y) * FRAC_1_SQRT_2).collect();
            let high = a.iter().zip(b).map(|(x, y)| (x - y) * FRAC_1_SQRT_2).collect();
            (low, high)
        })
        .unzip()
}

fn haar_unpairs(lows: &[Vec<f64>], highs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    lows.iter()
        .zip(highs)
        .flat_map(|(l, h)| {
            let a = l.iter().zip(h).map(|(x, y)| (x + y) * FRAC_1_SQRT_2).collect();
            let b = l.iter().zip(h).map(|(x, y)| (x - y) * FRAC_1_SQRT_2).collect();
            [a, b]
        })
        .collect()
}

/// Three-level orthonormal Haar transform across eight same-shaped arrays.
pub fn haar_temporal_forward(arrays: Vec<FramePlane>) -> Result<SubbandPyramid> {
    if arrays.len() != GOF_SIZE {
        return Err(CodecError::ShapeMismatch(format!("temporal transform needs {GOF_SIZE} arrays")));
    }
    let (width, height) = (arrays[0].width(), arrays[0].height());
    if arrays.iter().any(|a| a.width() != width || a.height() != height) {
        return Err(CodecError::ShapeMismatch("temporal inputs differ in shape".into()));
    }
    let data: Vec<Vec<f64>> = arrays.into_iter().map(FramePlane::into_samples).collect();
    let (l1, h1) = haar_pairs(&data);
    let (l2, h2) = haar_pairs(&l1);
    let (l3, h3) = haar_pairs(&l2);
    let planes = l3
        .into_iter()
        .chain(h3)
        .chain(h2)
        .chain(h1)
        .map(|s| FramePlane::new(width, height, s))
        .collect::<Result<Vec<_>>>()?;
    SubbandPyramid::new(planes)
}

/// Undoes temporal levels `3..=target+1` and returns the `8 / 2^target` low
/// planes, rescaled to the input's amplitude (frame averages).
fn haar_temporal_to_level(pyramid: &SubbandPyramid, target: u32) -> Result<Vec<FramePlane>> {
    let data: Vec<Vec<f64>> = pyramid.planes.iter().map(|p| p.samples().to_vec()).collect();
    let mut lows = vec![data[0].clone()];
    let highs: [&[Vec<f64>]; 3] = [&data[1..2], &data[2..4], &data[4..8]];
    for (step, high) in highs.iter().enumerate() {
        let level = 3 - step as u32;
        if level <= target {
            break;
        }
        lows = haar_unpairs(&lows, high);
    }
    let scale = FRAC_1_SQRT_2.powi(target as i32);
    lows.into_iter()
        .map(|mut s| {
            if target > 0 {
                s.iter_mut().for_each(|v| *v *= scale);
            }
            FramePlane::new(pyramid.width, pyramid.height, s)
        })
        .collect()
}

pub fn haar_temporal_inverse(pyramid: &SubbandPyramid) -> Result<Vec<FramePlane>> {
    haar_temporal_to_level(pyramid, 0)
}

pub fn dwt3d_forward(gof: &GroupOfFrames) -> Result<SubbandPyramid> {
    let spatial =
        par_map(gof.frames(), |f| dwt2d_forward(f, LEVELS).map(|c| c.plane)).into_iter().collect::<Result<Vec<_>>>()?;
    haar_temporal_forward(spatial)
}

pub fn dwt3d_inverse(pyramid: &SubbandPyramid) -> Result<GroupOfFrames> {
    let frames = reconstruct_at_level(pyramid, 0)?;
    GroupOfFrames::new(frames, 0)
}

/// Partial inverse to resolution level `level` (0 = full): returns
/// `8 / 2^level` frames of `W / 2^level` x `H / 2^level`. Only the bands of
/// layers needed for that level are read.
pub fn reconstruct_at_level(pyramid: &SubbandPyramid, level: u32) -> Result<Vec<FramePlane>> {
    if level > LEVELS {
        return Err(CodecError::Structure(format!("resolution level {level} exceeds {LEVELS}")));
    }
    let lows = haar_temporal_to_level(pyramid, level)?;
    par_map(&lows, |plane| inverse_to_level(&SpatialCoefficients { plane: plane.clone(), levels: LEVELS }, level))
        .into_iter()
        .collect()
}
