//! Adaptive measurement scheme.
//!
//! High-frequency sub-bands are hard-thresholded and cut into column vectors.
//! The exact l0 norm `K` of each vector picks one of sixteen codebook entries,
//! which fixes the measurement count `M`; the vector is then measured with a
//! `M x N` Bernoulli (+1/-1) matrix that both ends regenerate from a shared
//! seed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dwt::{BandRegion, SubbandPyramid};
use crate::error::{CodecError, Result};
use crate::par_map;

/// Default lower bound on vector length.
pub const DEFAULT_TARGET_MIN_N: usize = 2048;

/// Sparsity interval `(low, high]` of a codebook entry. Entry 0 covers `K = 0`
/// only and the last entry is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub low_exclusive: Option<usize>,
    pub high_inclusive: Option<usize>,
}

impl KRange {
    pub fn contains(&self, k: usize) -> bool {
        self.low_exclusive.is_none_or(|lo| k > lo) && self.high_inclusive.is_none_or(|hi| k <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodebookEntry {
    pub index: u8,
    pub k_range: KRange,
    pub m: usize,
}

/// Upper K bound and measurement count for entries 1..=15; entry 15 is open.
const TABLE: [(usize, usize); 15] = [
    (10, 50),
    (20, 130),
    (50, 240),
    (100, 370),
    (150, 470),
    (200, 650),
    (250, 780),
    (300, 920),
    (350, 1080),
    (400, 1220),
    (450, 1400),
    (500, 1550),
    (550, 1700),
    (600, 1850),
    (usize::MAX, 2000),
];

/// The sixteen codebook entries.
pub fn codebook_entries() -> [CodebookEntry; 16] {
    let mut out =
        [CodebookEntry { index: 0, k_range: KRange { low_exclusive: None, high_inclusive: Some(0) }, m: 0 }; 16];
    let mut low = 0;
    for (i, &(high, m)) in TABLE.iter().enumerate() {
        out[i + 1] = CodebookEntry {
            index: (i + 1) as u8,
            k_range: KRange { low_exclusive: Some(low), high_inclusive: (high != usize::MAX).then_some(high) },
            m,
        };
        low = high;
    }
    out
}

/// Codebook index for sparsity `k`.
pub fn select_entry(k: usize) -> u8 {
    if k == 0 {
        return 0;
    }
    TABLE.iter().position(|&(high, _)| k <= high).map(|i| i as u8 + 1).unwrap_or(15)
}

/// Measurement count of entry `j`.
pub fn measurement_count(j: u8) -> usize {
    match j {
        0 => 0,
        j => TABLE[(j as usize - 1).min(14)].1,
    }
}

/// A dense matrix of +1/-1 entries, stored row-major with a column-major
/// copy for sparse products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliMatrix {
    rows: usize,
    cols: usize,
    signs: Vec<i8>,
    columns: Vec<i8>,
}

impl BernoulliMatrix {
    /// Deterministic matrix for `(seed, j, n)`: a ChaCha8 stream keyed by the
    /// triple supplies one bit per entry, row-major, bit 0 first.
    pub fn generate(master_seed: u64, j: u8, cols: usize, rows: usize) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&u64::from(j).to_le_bytes());
        key[16..24].copy_from_slice(&(cols as u64).to_le_bytes());
        key[24..].copy_from_slice(b"CSWVPHI\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        let total = rows * cols;
        let mut signs = Vec::with_capacity(total);
        while signs.len() < total {
            let word = rng.next_u64();
            let take = (total - signs.len()).min(64);
            signs.extend((0..take).map(|b| if (word >> b) & 1 == 1 { 1i8 } else { -1i8 }));
        }
        Self::with_signs(rows, cols, signs)
    }

    fn with_signs(rows: usize, cols: usize, signs: Vec<i8>) -> Self {
        let mut columns = vec![0i8; signs.len()];
        for (r, row) in signs.chunks_exact(cols.max(1)).enumerate() {
            for (c, &s) in row.iter().enumerate() {
                columns[c * rows + r] = s;
            }
        }
        Self { rows, cols, signs, columns }
    }

    /// Builds a matrix from explicit signs; any non-positive entry means -1.
    pub fn from_signs(rows: usize, cols: usize, signs: &[i8]) -> Result<Self> {
        if signs.len() != rows * cols {
            return Err(CodecError::ShapeMismatch(format!("{} signs for a {rows}x{cols} matrix", signs.len())));
        }
        Ok(Self::with_signs(rows, cols, signs.iter().map(|&s| if s > 0 { 1 } else { -1 }).collect()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.signs[row * self.cols + col]
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `Phi v`. Entries are +/-1 so every output is a signed sum. Sparse
    /// inputs only touch the columns of their support.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        let support = v.iter().filter(|&&x| x != 0.0).count();
        if support * 2 < self.cols {
            let mut out = vec![0.0; self.rows];
            for (col, &x) in self.columns.chunks_exact(self.rows.max(1)).zip(v) {
                if x != 0.0 {
                    for (o, &s) in out.iter_mut().zip(col) {
                        *o += f64::from(s) * x;
                    }
                }
            }
            return out;
        }
        self.signs.chunks_exact(self.cols.max(1)).take(self.rows).map(|row| dot(row, v)).collect()
    }

    /// `Phi^T z`.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.rows);
        if self.rows == 0 {
            return vec![0.0; self.cols];
        }
        self.columns.chunks_exact(self.rows).map(|col| dot(col, z)).collect()
    }
}

/// Eight-lane accumulation so the loop vectorizes.
fn dot(signs: &[i8], v: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (head, tail) = (signs.chunks_exact(8), v.chunks_exact(8));
    let (rest_s, rest_v) = (head.remainder(), tail.remainder());
    for (s, x) in head.zip(tail) {
        for l in 0..8 {
            acc[l] += f64::from(s[l]) * x[l];
        }
    }
    let mut total = acc.iter().sum::<f64>();
    for (&s, &x) in rest_s.iter().zip(rest_v) {
        total += f64::from(s) * x;
    }
    total
}

/// The shared family of sensing matrices. Matrices are built on first use for
/// each `(j, n)` and cached.
#[derive(Debug)]
pub struct SensingCodebook {
    master_seed: u64,
    entries: [CodebookEntry; 16],
    cache: Mutex<HashMap<(u8, usize), Arc<BernoulliMatrix>>>,
}

impl SensingCodebook {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, entries: codebook_entries(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn entries(&self) -> &[CodebookEntry; 16] {
        &self.entries
    }

    pub fn entry(&self, j: u8) -> Result<&CodebookEntry> {
        self.entries.get(j as usize).ok_or_else(|| CodecError::Codebook(format!("no codebook entry {j}")))
    }

    /// The `m(j) x n` matrix of entry `j`.
    pub fn matrix(&self, j: u8, n: usize) -> Result<Arc<BernoulliMatrix>> {
        let m = self.entry(j)?.m;
        if m > n {
            return Err(CodecError::Codebook(format!(
                "entry {j} needs {m} measurements but the vector has {n} entries"
            )));
        }
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        Ok(cache
            .entry((j, n))
            .or_insert_with(|| Arc::new(BernoulliMatrix::generate(self.master_seed, j, n, m)))
            .clone())
    }
}

impl Clone for SensingCodebook {
    fn clone(&self) -> Self {
        Self::new(self.master_seed)
    }
}

/// Zeroes every coefficient whose magnitude is below `t`.
pub fn hard_threshold(band: &[f64], t: f64) -> Vec<f64> {
    band.iter().map(|&v| if v.abs() < t { 0.0 } else { v }).collect()
}

/// Exact count of nonzero entries.
pub fn l0_norm(values: &[f64]) -> usize {
    values.iter().filter(|&&v| v != 0.0).count()
}

/// Vector length for a band: `2^p * band_height` with the smallest `p` such
/// that the length reaches `min(target_min_n, band size)`.
pub fn vector_length(band_width: usize, band_height: usize, target_min_n: usize) -> usize {
    let goal = target_min_n.min(band_width * band_height).max(1);
    let mut n = band_height.max(1);
    while n < goal {
        n *= 2;
    }
    n
}

/// Where a vector came from inside its band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorOrigin {
    pub region: BandRegion,
    /// Position of this vector among the band's vectors.
    pub vector_index: usize,
    pub first_column: usize,
    /// Zeros appended after the band's last column.
    pub pad: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputVector {
    pub values: Vec<f64>,
    pub origin: VectorOrigin,
}

impl InputVector {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Cuts a row-major band into column-major vectors of
/// [`vector_length`] entries, zero-padding the last one.
pub fn vectorize_band(region: &BandRegion, band: &[f64], target_min_n: usize) -> Vec<InputVector> {
    debug_assert_eq!(band.len(), region.len());
    let (w, h) = (region.width, region.height);
    let n = vector_length(w, h, target_min_n);
    let columns: Vec<f64> = (0..w).flat_map(|x| (0..h).map(move |y| band[y * w + x])).collect();
    let cols_per_vector = n / h.max(1);
    columns
        .chunks(n)
        .enumerate()
        .map(|(i, chunk)| {
            let mut values = chunk.to_vec();
            let pad = n - values.len();
            values.resize(n, 0.0);
            InputVector {
                values,
                origin: VectorOrigin { region: *region, vector_index: i, first_column: i * cols_per_vector, pad },
            }
        })
        .collect()
}

/// Number of vectors [`vectorize_band`] produces for a region.
pub fn vectors_per_band(region: &BandRegion, target_min_n: usize) -> usize {
    let n = vector_length(region.width, region.height, target_min_n);
    region.len().div_ceil(n)
}

/// Inverse of [`vectorize_band`]: drops padding and returns the band row-major.
pub fn devectorize_band(region: &BandRegion, vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (w, h) = (region.width, region.height);
    let columns: Vec<f64> = vectors.iter().flatten().copied().collect();
    if columns.len() < w * h {
        return Err(CodecError::Structure(format!("{} vector entries cannot fill a {w}x{h} band", columns.len())));
    }
    let mut band = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            band[y * w + x] = columns[x * h + y];
        }
    }
    Ok(band)
}

/// One sensed vector: codebook index, sparsity and measurements.
///
/// When `m(j)` exceeds the vector length the vector cannot be measured
/// compressively; `y` then holds the thresholded vector itself (see
/// [`MeasurementRecord::is_direct`]).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub j: u8,
    pub k: usize,
    pub n: usize,
    pub y: Vec<f64>,
    pub origin: Option<VectorOrigin>,
}

impl MeasurementRecord {
    /// True when the record carries the vector verbatim instead of measurements.
    pub fn is_direct(&self) -> bool {
        measurement_count(self.j) > self.n
    }

    /// Number of values this record transmits.
    pub fn value_count(&self) -> usize {
        if self.j == 0 {
            0
        } else if self.is_direct() {
            self.n
        } else {
            measurement_count(self.j)
        }
    }
}

/// `y = Phi_j v` with `j` picked from the l0 norm of `v`.
pub fn measure(v: &InputVector, codebook: &SensingCodebook) -> Result<MeasurementRecord> {
    let k = l0_norm(&v.values);
    let j = select_entry(k);
    let n = v.n();
    let y = if j == 0 { Vec::new() } else { codebook.matrix(j, n)?.apply(&v.values) };
    Ok(MeasurementRecord { j, k, n, y, origin: Some(v.origin) })
}

/// Like [`measure`], but vectors whose entry needs more measurements than
/// the vector has entries are carried directly.
pub fn sense_vector(v: &InputVector, codebook: &SensingCodebook) -> Result<MeasurementRecord> {
    let k = l0_norm(&v.values);
    let j = select_entry(k);
    if measurement_count(j) > v.n() {
        return Ok(MeasurementRecord { j, k, n: v.n(), y: v.values.clone(), origin: Some(v.origin) });
    }
    measure(v, codebook)
}

/// Encoder-side output for one GOF.
#[derive(Debug, Clone, PartialEq)]
pub struct SensedGof {
    pub base_band: Vec<f64>,
    pub records: Vec<MeasurementRecord>,
}

/// Thresholds, vectorizes and measures every non-base band in canonical
/// order; the base band passes through untouched.
pub fn sense_pyramid(
    pyramid: &SubbandPyramid,
    threshold: f64,
    codebook: &SensingCodebook,
    target_min_n: usize,
) -> Result<SensedGof> {
    let map = pyramid.band_map();
    let base_band = pyramid.band(&map[0]);
    let vectors: Vec<InputVector> = map[1..]
        .iter()
        .flat_map(|region| {
            let band = hard_threshold(&pyramid.band(region), threshold);
            vectorize_band(region, &band, target_min_n)
        })
        .collect();
    let records = par_map(&vectors, |v| sense_vector(v, codebook)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SensedGof { base_band, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::{LayerTag, Orientation, TemporalBand};

    fn region(width: usize, height: usize) -> BandRegion {
        BandRegion {
            tag: LayerTag { temporal: TemporalBand::H(0), spatial_level: 1, orientation: Orientation::HH },
            x: 0,
            y: 0,
            width,
            height,
        }
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(hard_threshold(&[-1.5, 0.4, 2.0], 1.6), vec![0.0, 0.0, 2.0]);
        assert_eq!(hard_threshold(&[-1.5, 0.4, 2.0], 0.0), vec![-1.5, 0.4, 2.0]);
        let band = [0.3, -1.2, 1.7, 0.99, -2.5];
        assert!(l0_norm(&hard_threshold(&band, 1.6)) <= l0_norm(&hard_threshold(&band, 1.0)));
    }

    #[test]
    fn l0_counts_exact_nonzeros() {
        assert_eq!(l0_norm(&[0.0; 5]), 0);
        assert_eq!(l0_norm(&[0.0, 3.0, -2.0, 0.0]), 2);
    }

    #[test]
    fn select_entry_examples() {
        assert_eq!((select_entry(0), measurement_count(0)), (0, 0));
        assert_eq!((select_entry(82), measurement_count(4)), (4, 370));
        assert_eq!((select_entry(176), measurement_count(6)), (6, 650));
        assert_eq!((select_entry(999), measurement_count(15)), (15, 2000));
        assert_eq!(select_entry(10), 1);
        assert_eq!(select_entry(11), 2);
    }

    #[test]
    fn vector_lengths() {
        // 4 columns of height 512, target 1024
        assert_eq!(vector_length(4, 512, 1024), 1024);
        assert_eq!(vectors_per_band(&region(4, 512), 1024), 2);
        assert_eq!(vector_length(1920, 1080, DEFAULT_TARGET_MIN_N), 2160);
        // region smaller than the target
        assert_eq!(vector_length(2, 256, 1024), 512);
        assert_eq!(vectors_per_band(&region(2, 256), 1024), 1);
    }

    #[test]
    fn vectorize_is_column_major_and_padded() {
        let r = region(3, 2);
        let band = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let vs = vectorize_band(&r, &band, 4);
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].values, vec![1.0, 4.0, 2.0, 5.0]);
        assert_eq!(vs[1].values, vec![3.0, 6.0, 0.0, 0.0]);
        assert_eq!(vs[1].origin.pad, 2);
        assert_eq!(vs[1].origin.first_column, 2);
        let back = devectorize_band(&r, &vs.iter().map(|v| v.values.clone()).collect::<Vec<_>>()).unwrap();
        assert_eq!(back, band);
    }

    #[test]
    fn toy_measurement() {
        let phi = BernoulliMatrix::from_signs(2, 4, &[1, 1, 1, 1, 1, -1, 1, -1]).unwrap();
        assert_eq!(phi.apply(&[1.0, 0.0, 2.0, 0.0]), vec![3.0, 3.0]);
        assert_eq!(phi.apply_transpose(&[1.0, 2.0]), vec![3.0, -1.0, 3.0, -1.0]);
    }

    #[test]
    fn zero_vector_measures_to_empty_record() {
        let cb = SensingCodebook::new(1);
        let v = vectorize_band(&region(4, 16), &[0.0; 64], 64).remove(0);
        let rec = measure(&v, &cb).unwrap();
        assert_eq!((rec.j, rec.k, rec.y.len()), (0, 0, 0));
    }

    #[test]
    fn one_sparse_vector_measures_to_signed_column() {
        let cb = SensingCodebook::new(77);
        let mut band = vec![0.0; 256];
        band[37] = -2.5;
        let v = vectorize_band(&region(1, 256), &band, 256).remove(0);
        let rec = measure(&v, &cb).unwrap();
        assert_eq!((rec.j, rec.k, rec.y.len()), (1, 1, 50));
        let phi = cb.matrix(1, 256).unwrap();
        for (r, &y) in rec.y.iter().enumerate() {
            assert_eq!(y, -2.5 * f64::from(phi.entry(r, 37)));
        }
    }

    #[test]
    fn oversized_entry_is_a_codebook_error() {
        let cb = SensingCodebook::new(1);
        let v = vectorize_band(&region(1, 64), &[1.0; 64], 64).remove(0);
        assert!(matches!(measure(&v, &cb), Err(CodecError::Codebook(_))));
        let rec = sense_vector(&v, &cb).unwrap();
        assert!(rec.is_direct());
        assert_eq!(rec.y, v.values);
        assert_eq!(rec.value_count(), 64);
    }

    #[test]
    fn matrices_are_reproducible_and_balanced() {
        let a = SensingCodebook::new(42);
        let b = SensingCodebook::new(42);
        let c = SensingCodebook::new(43);
        let ma = a.matrix(4, 2048).unwrap();
        assert_eq!(*ma, *b.matrix(4, 2048).unwrap());
        assert_ne!(*ma, *c.matrix(4, 2048).unwrap());
        assert_eq!((ma.rows(), ma.cols()), (370, 2048));
        let plus = ma.signs().iter().filter(|&&s| s == 1).count() as f64;
        let frac = plus / ma.signs().len() as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }
}
