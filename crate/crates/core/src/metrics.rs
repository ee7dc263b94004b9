//! Quality, rate and complexity measures.

use crate::bitstream::{demux, ChunkPayload};
use crate::error::{CodecError, Result};
use crate::sensing::measurement_count;
use crate::video_io::{FramePlane, GOF_SIZE};

/// Peak value of 8-bit samples.
pub const PEAK: f64 = 255.0;

/// PSNR in dB for a given mean squared error; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn mse(reference: &[f64], test: &[f64]) -> f64 {
    debug_assert_eq!(reference.len(), test.len());
    if reference.is_empty() {
        return 0.0;
    }
    reference.iter().zip(test).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / reference.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsnrReport {
    pub per_frame: Vec<f64>,
    /// Mean of the per-frame values.
    pub frame_average: f64,
    /// PSNR of the MSE pooled over every sample.
    pub pooled: f64,
}

/// Per-frame and average PSNR of `test` against `reference`.
pub fn psnr(reference: &[FramePlane], test: &[FramePlane]) -> Result<PsnrReport> {
    if reference.len() != test.len() {
        return Err(CodecError::ShapeMismatch(format!(
            "{} reference frames vs {} test frames",
            reference.len(),
            test.len()
        )));
    }
    let mut per_frame = Vec::with_capacity(reference.len());
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, t) in reference.iter().zip(test) {
        if r.width() != t.width() || r.height() != t.height() {
            return Err(CodecError::ShapeMismatch(format!(
                "{}x{} reference frame vs {}x{} test frame",
                r.width(),
                r.height(),
                t.width(),
                t.height()
            )));
        }
        let e = mse(r.samples(), t.samples());
        total += e * r.samples().len() as f64;
        count += r.samples().len();
        per_frame.push(psnr_from_mse(e));
    }
    let frame_average =
        if per_frame.is_empty() { f64::INFINITY } else { per_frame.iter().sum::<f64>() / per_frame.len() as f64 };
    let pooled = psnr_from_mse(if count == 0 { 0.0 } else { total / count as f64 });
    Ok(PsnrReport { per_frame, frame_average, pooled })
}

/// Normalised squared error. `degenerate` is set when the truth is all zero,
/// in which case `value` is the plain squared norm of the estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmse {
    pub value: f64,
    pub degenerate: bool,
}

pub fn nmse(truth: &[f64], estimate: &[f64]) -> Nmse {
    debug_assert_eq!(truth.len(), estimate.len());
    let err: f64 = truth.iter().zip(estimate).map(|(t, e)| (e - t) * (e - t)).sum();
    let energy: f64 = truth.iter().map(|t| t * t).sum();
    if energy == 0.0 {
        Nmse { value: err, degenerate: true }
    } else {
        Nmse { value: err / energy, degenerate: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// 8 bits per source pixel.
    pub raw_bits: u64,
    /// Every bit of the stream, headers included.
    pub coded_bits: u64,
    pub header_bits: u64,
    pub chunk_header_bits: u64,
    pub payload_bits: u64,
    pub compression_ratio: f64,
    /// Transmitted measurement values (direct records count their full
    /// length) over all coefficients of the present GOFs, in percent.
    pub measurement_percentage: f64,
    pub records: usize,
    pub empty_records: usize,
}

pub fn rate_report(stream: &[u8]) -> Result<RateReport> {
    let parsed = demux(stream)?;
    let h = &parsed.header;
    let raw_bits = u64::from(h.width) * u64::from(h.height) * u64::from(h.frame_count) * 8;
    let (header_bits, chunk_header_bits, payload_bits) = parsed.bit_budget()?;
    let mut values = 0usize;
    let mut records = 0usize;
    let mut empty_records = 0usize;
    for chunk in parsed.gofs.iter().flat_map(|g| &g.chunks) {
        if let ChunkPayload::Records(recs) = &chunk.payload {
            for (r, n) in recs.iter().zip(h.record_lengths(chunk.layer)) {
                records += 1;
                match r.j {
                    0 => empty_records += 1,
                    j => values += measurement_count(j).min(n),
                }
            }
        }
    }
    let coefficients = parsed.gofs.len() * GOF_SIZE * h.width as usize * h.height as usize;
    let coded_bits = stream.len() as u64 * 8;
    Ok(RateReport {
        raw_bits,
        coded_bits,
        header_bits: header_bits as u64,
        chunk_header_bits: chunk_header_bits as u64,
        payload_bits: payload_bits as u64,
        compression_ratio: raw_bits as f64 / coded_bits as f64,
        measurement_percentage: if coefficients == 0 { 0.0 } else { 100.0 * values as f64 / coefficients as f64 },
        records,
        empty_records,
    })
}

/// Multiplier and adder counts of one codec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpCounts {
    pub multipliers: f64,
    pub adders: f64,
}

/// Arithmetic cost of a conventional CS video codec against the wavelet + AMS
/// design, for a GOF of `n` elements, `m = m_fraction * n` measurements and
/// `itr` decoder iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub n: f64,
    pub m_fraction: f64,
    pub itr: f64,
    pub conventional_encoder: OpCounts,
    pub conventional_decoder: OpCounts,
    pub proposed_encoder: OpCounts,
    pub proposed_decoder: OpCounts,
    /// Leading-order totals as tabulated: multipliers `2 m_f n^2 itr`,
    /// adders `2 m_f n^2 itr`.
    pub conventional: OpCounts,
    /// Multipliers `6 n^2`, adders `2 m_f n^2 itr + (6 + m_f) n^2`.
    pub proposed: OpCounts,
    /// `proposed.multipliers / conventional.multipliers`; `None` when the
    /// conventional decoder needs no multipliers (`m_fraction` or `itr` zero).
    pub multiplier_ratio: Option<f64>,
}

pub fn complexity_report(n: f64, m_fraction: f64, itr: f64) -> Result<ComplexityReport> {
    let valid = n > 0.0 && m_fraction >= 0.0 && itr >= 0.0;
    if !valid {
        return Err(CodecError::Parameter(format!(
            "complexity needs n > 0, m_fraction >= 0, itr >= 0 (got {n}, {m_fraction}, {itr})"
        )));
    }
    let m = m_fraction * n;
    let per_iteration_adders = (m * n - 1.0) + (n * m - 1.0);
    let conventional_encoder = OpCounts { multipliers: 0.0, adders: m * (n - 1.0) };
    let conventional_decoder = OpCounts { multipliers: 2.0 * m * n * itr, adders: per_iteration_adders * itr };
    let proposed_encoder = OpCounts { multipliers: 6.0 * n * n, adders: 6.0 * (n * (n - 1.0)) + (m * n - 1.0) };
    let proposed_decoder = OpCounts { multipliers: 0.0, adders: per_iteration_adders * itr };
    let conventional = OpCounts { multipliers: 2.0 * m_fraction * n * n * itr, adders: 2.0 * m_fraction * n * n * itr };
    let proposed =
        OpCounts { multipliers: 6.0 * n * n, adders: 2.0 * m_fraction * n * n * itr + (6.0 + m_fraction) * n * n };
    let multiplier_ratio = (conventional.multipliers > 0.0).then(|| proposed.multipliers / conventional.multipliers);
    Ok(ComplexityReport {
        n,
        m_fraction,
        itr,
        conventional_encoder,
        conventional_decoder,
        proposed_encoder,
        proposed_decoder,
        conventional,
        proposed,
        multiplier_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_of_identical_frames_is_infinite() {
        let f = vec![FramePlane::filled(8, 8, 3.0)];
        let r = psnr(&f, &f).unwrap();
        assert!(r.pooled.is_infinite() && r.per_frame[0].is_infinite());
    }

    #[test]
    fn psnr_zero_vs_sixteen() {
        let a = vec![FramePlane::filled(8, 8, 0.0)];
        let b = vec![FramePlane::filled(8, 8, 16.0)];
        let r = psnr(&a, &b).unwrap();
        let expected = 10.0 * (65025.0f64 / 256.0).log10();
        assert!((r.pooled - expected).abs() < 1e-12);
        assert!((r.pooled - 24.05).abs() < 0.01);
    }

    #[test]
    fn psnr_shape_mismatch() {
        let a = vec![FramePlane::filled(8, 8, 0.0)];
        let b = vec![FramePlane::filled(16, 8, 0.0)];
        assert!(psnr(&a, &b).is_err());
        assert!(psnr(&a, &[]).is_err());
    }

    #[test]
    fn nmse_examples() {
        let t = [1.0, -2.0, 0.5];
        assert_eq!(nmse(&t, &t).value, 0.0);
        assert_eq!(nmse(&t, &[0.0; 3]).value, 1.0);
        let doubled: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
        assert!((nmse(&t, &doubled).value - 1.0).abs() < 1e-15);
        let z = nmse(&[0.0, 0.0], &[3.0, 4.0]);
        assert!(z.degenerate);
        assert_eq!(z.value, 25.0);
    }

    #[test]
    fn rate_of_a_flat_video() {
        use crate::codec::{encode_video, EncoderConfig};
        let frames = vec![FramePlane::filled(32, 32, 40.0); 8];
        let bytes = encode_video(&frames, &EncoderConfig::default()).unwrap();
        let r = rate_report(&bytes).unwrap();
        assert_eq!(r.raw_bits, 32 * 32 * 8 * 8);
        assert_eq!(r.measurement_percentage, 0.0);
        assert_eq!(r.records, r.empty_records);
        assert_eq!(r.header_bits + r.chunk_header_bits + r.payload_bits, r.coded_bits);
        assert!(r.compression_ratio > 1.0);
    }

    #[test]
    fn complexity_defaults_and_limits() {
        let r = complexity_report(1000.0, 0.25, 200.0).unwrap();
        assert_eq!(r.multiplier_ratio, Some(0.06));
        assert_eq!(r.conventional.multipliers, 100.0 * 1000.0 * 1000.0);
        assert_eq!(r.proposed.adders, 106.25 * 1000.0 * 1000.0);

        let r = complexity_report(512.0, 0.25, 400.0).unwrap();
        assert_eq!(r.conventional.multipliers, 200.0 * 512.0 * 512.0);
        assert_eq!(r.multiplier_ratio, Some(0.03));

        let r = complexity_report(64.0, 0.0, 200.0).unwrap();
        assert_eq!(r.conventional_decoder.multipliers, 0.0);
        assert_eq!(r.multiplier_ratio, None);
        assert!(complexity_report(0.0, 0.25, 200.0).is_err());
    }
}
