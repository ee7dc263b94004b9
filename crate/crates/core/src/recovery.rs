//! Sparse recovery of sensed vectors.
//!
//! All four algorithms share the gradient step `s + mu * Phi^T z` with
//! `mu = 1/n` by default (the sensing matrices are unscaled +/-1):
//!
//! * **AMP**: soft threshold at the `M`-th largest `|gamma|`, plus the Onsager
//!   correction `z * #{|gamma| > delta} / n` on the residual.
//! * **IST**: the same threshold rule without the Onsager term.
//! * **IHT**: keep the `K` largest entries, zero the rest.
//! * **EAMP**: AMP for the first quarter of the iterations (while `i < Iter/4`),
//!   IHT with the transmitted `K` afterwards.

use serde::{Deserialize, Serialize};

use crate::dwt::{pyramid_band_map, Layer, SubbandPyramid};
use crate::error::{CodecError, Result};
use crate::metrics::nmse;
use crate::par_map;
use crate::sensing::{devectorize_band, vectors_per_band, BernoulliMatrix, MeasurementRecord, SensingCodebook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Eamp,
    Amp,
    Iht,
    Ist,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Eamp, Algorithm::Amp, Algorithm::Iht, Algorithm::Ist];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Eamp => "eamp",
            Algorithm::Amp => "amp",
            Algorithm::Iht => "iht",
            Algorithm::Ist => "ist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s))
    }
}

/// What the Onsager count is divided by. `MeasurementCount` (the default)
/// keeps the AMP phase stable at the codebook sampling ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnsagerDivisor {
    VectorLength,
    MeasurementCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScale {
    /// `1 / n`.
    InverseLength,
    /// `1 / max(n, 2m)`: `1 / n` up to `m = n / 2`, shorter beyond, where
    /// the `1 / n` trimming phase overshoots.
    Bounded,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    /// Fraction of the iterations run in the AMP phase, as `(num, den)`.
    /// `(1, 1)` makes EAMP identical to AMP.
    pub phase1_fraction: (u32, u32),
    pub step_scale: StepScale,
    pub onsager_divisor: OnsagerDivisor,
    /// Stop once `||y - Phi s||_2 / ||y||_2` drops below this.
    pub residual_tolerance: Option<f64>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Eamp,
            iterations: 400,
            phase1_fraction: (1, 4),
            step_scale: StepScale::Bounded,
            onsager_divisor: OnsagerDivisor::MeasurementCount,
            residual_tolerance: None,
        }
    }
}

impl RecoveryConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let (num, den) = self.phase1_fraction;
        if self.iterations < 4 {
            return Err(CodecError::Parameter(format!("need at least 4 iterations, got {}", self.iterations)));
        }
        if num == 0 || den == 0 || num > den {
            return Err(CodecError::Parameter(format!("phase-1 fraction {num}/{den} outside (0, 1]")));
        }
        if let StepScale::Fixed(mu) = self.step_scale {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(CodecError::Parameter(format!("step scale {mu} must be positive")));
            }
        }
        Ok(())
    }

    /// Iterations `i` (1-based) with `i < iterations * fraction` run the AMP
    /// rule; a fraction of one means all of them.
    pub fn phase1_iterations(&self) -> usize {
        let (num, den) = self.phase1_fraction;
        if num >= den {
            return self.iterations;
        }
        (self.iterations * num as usize).saturating_sub(1) / den as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub s_hat: Vec<f64>,
    pub residual_norm: f64,
    pub iterations_run: usize,
    pub converged: bool,
    pub nmse_trace: Option<Vec<f64>>,
}

impl RecoveryResult {
    fn zeros(n: usize) -> Self {
        Self { s_hat: vec![0.0; n], residual_norm: 0.0, iterations_run: 0, converged: true, nmse_trace: None }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The `m`-th largest magnitude (1-based).
fn mth_largest_magnitude(values: &[f64], m: usize) -> f64 {
    if m == 0 || values.is_empty() {
        return f64::INFINITY;
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let idx = (m - 1).min(mags.len() - 1);
    let (_, nth, _) = mags.select_nth_unstable_by(idx, |a, b| b.total_cmp(a));
    *nth
}

fn soft_threshold(x: f64, delta: f64) -> f64 {
    x.signum() * (x.abs() - delta).max(0.0)
}

/// Zeroes all but the `k` largest magnitudes; ties go to the lower index.
pub fn keep_top_k(values: &mut [f64], k: usize) {
    if k >= values.len() {
        return;
    }
    if k == 0 {
        values.fill(0.0);
        return;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.select_nth_unstable_by(k - 1, |&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    for &i in &order[k..] {
        values[i] = 0.0;
    }
}

fn residual(phi: &BernoulliMatrix, y: &[f64], s: &[f64]) -> Vec<f64> {
    phi.apply(s).iter().zip(y).map(|(p, y)| y - p).collect()
}

/// Runs `config.algorithm` on `y = Phi s` with known sparsity `k`. When
/// `truth` is given the per-iteration NMSE is recorded.
pub fn recover_with(
    phi: &BernoulliMatrix,
    y: &[f64],
    k: usize,
    config: &RecoveryConfig,
    truth: Option<&[f64]>,
) -> RecoveryResult {
    let (m, n) = (phi.rows(), phi.cols());
    let mu = match config.step_scale {
        StepScale::InverseLength => 1.0 / n as f64,
        StepScale::Bounded => 1.0 / n.max(2 * m) as f64,
        StepScale::Fixed(mu) => mu,
    };
    let divisor = match config.onsager_divisor {
        OnsagerDivisor::VectorLength => n,
        OnsagerDivisor::MeasurementCount => m,
    } as f64;
    let phase1 = match config.algorithm {
        Algorithm::Eamp => config.phase1_iterations(),
        Algorithm::Amp | Algorithm::Ist => config.iterations,
        Algorithm::Iht => 0,
    };
    let onsager = matches!(config.algorithm, Algorithm::Eamp | Algorithm::Amp);

    let mut s = vec![0.0; n];
    let mut z = y.to_vec();
    let mut trace = truth.map(|_| Vec::with_capacity(config.iterations));
    let mut iterations_run = 0;
    let mut converged = false;
    let y_norm = norm(y);

    for i in 0..config.iterations {
        let grad = phi.apply_transpose(&z);
        if i < phase1 {
            let gamma: Vec<f64> = s.iter().zip(&grad).map(|(s, g)| s + mu * g).collect();
            let delta = mth_largest_magnitude(&gamma, m);
            let active = gamma.iter().filter(|g| g.abs() > delta).count();
            s = gamma.iter().map(|&g| soft_threshold(g, delta)).collect();
            let fresh = residual(phi, y, &s);
            if onsager {
                let b = active as f64 / divisor;
                z = fresh.iter().zip(&z).map(|(r, z)| r + b * z).collect();
            } else {
                z = fresh;
            }
        } else {
            for (s, g) in s.iter_mut().zip(&grad) {
                *s += mu * g;
            }
            keep_top_k(&mut s, k);
            z = residual(phi, y, &s);
        }
        iterations_run = i + 1;
        if let (Some(trace), Some(truth)) = (trace.as_mut(), truth) {
            trace.push(nmse(truth, &s).value);
        }
        if let Some(tol) = config.residual_tolerance {
            if norm(&residual(phi, y, &s)) < tol * y_norm {
                converged = true;
                break;
            }
        }
    }
    let residual_norm = norm(&residual(phi, y, &s));
    RecoveryResult { s_hat: s, residual_norm, iterations_run, converged, nmse_trace: trace }
}

/// Recovers a record with the algorithm named in `config`.
pub fn recover(
    record: &MeasurementRecord,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover_traced(record, codebook, config, None)
}

pub fn recover_traced(
    record: &MeasurementRecord,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
    truth: Option<&[f64]>,
) -> Result<RecoveryResult> {
    config.validate()?;
    if record.j == 0 {
        return Ok(RecoveryResult::zeros(record.n));
    }
    if record.is_direct() {
        if record.y.len() != record.n {
            return Err(CodecError::Structure(format!(
                "direct record holds {} values for a vector of {}",
                record.y.len(),
                record.n
            )));
        }
        return Ok(RecoveryResult { s_hat: record.y.clone(), ..RecoveryResult::zeros(record.n) });
    }
    let phi = codebook.matrix(record.j, record.n)?;
    if record.y.len() != phi.rows() {
        return Err(CodecError::Structure(format!(
            "record has {} measurements, entry {} expects {}",
            record.y.len(),
            record.j,
            phi.rows()
        )));
    }
    Ok(recover_with(&phi, &record.y, record.k, config, truth))
}

fn with_algorithm(config: &RecoveryConfig, algorithm: Algorithm) -> RecoveryConfig {
    RecoveryConfig { algorithm, ..config.clone() }
}

pub fn eamp_recover(
    record: &MeasurementRecord,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover(record, codebook, &with_algorithm(config, Algorithm::Eamp))
}

pub fn amp_recover(
    record: &MeasurementRecord,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover(record, codebook, &with_algorithm(config, Algorithm::Amp))
}

pub fn iht_recover(
    record: &MeasurementRecord,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover(record, codebook, &with_algorithm(config, Algorithm::Iht))
}

pub fn ist_recover(
    record: &MeasurementRecord,
    codebook: &SensingCodebook,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover(record, codebook, &with_algorithm(config, Algorithm::Ist))
}

/// Shape information the decoder needs to place recovered vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PyramidGeometry {
    pub width: usize,
    pub height: usize,
    pub target_min_n: usize,
}

impl PyramidGeometry {
    /// Number of records expected for the bands of one layer.
    pub fn records_in_layer(&self, layer: Layer) -> usize {
        pyramid_band_map(self.width, self.height)
            .iter()
            .filter(|r| r.tag.layer() == layer && !r.tag.is_base())
            .map(|r| vectors_per_band(r, self.target_min_n))
            .sum()
    }
}

/// Recovers every record and rebuilds the pyramid. Records must cover the
/// non-base bands of layers `El1..=max_layer` in canonical order; bands of
/// higher layers are left zero.
pub fn recover_pyramid(
    base_band: &[f64],
    records: &[MeasurementRecord],
    codebook: &SensingCodebook,
    geometry: PyramidGeometry,
    max_layer: Layer,
    config: &RecoveryConfig,
) -> Result<SubbandPyramid> {
    let mut pyramid = SubbandPyramid::zeros(geometry.width, geometry.height)?;
    let map = pyramid.band_map();
    let base = map[0];
    if base_band.len() != base.len() {
        return Err(CodecError::Bitstream {
            bit_offset: 0,
            reason: format!("base band has {} values, expected {}", base_band.len(), base.len()),
        });
    }
    pyramid.set_band(&base, base_band);

    let slots: Vec<_> = map[1..]
        .iter()
        .filter(|r| r.tag.layer() <= max_layer)
        .map(|r| (*r, vectors_per_band(r, geometry.target_min_n)))
        .collect();
    let expected: usize = slots.iter().map(|(_, c)| c).sum();
    if expected != records.len() {
        return Err(CodecError::Bitstream {
            bit_offset: 0,
            reason: format!("{} records for a geometry needing {expected}", records.len()),
        });
    }

    let recovered = par_map(records, |r| recover(r, codebook, config).map(|res| res.s_hat))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut offset = 0;
    for (region, count) in slots {
        let band = devectorize_band(&region, &recovered[offset..offset + count])?;
        pyramid.set_band(&region, &band);
        offset += count;
    }
    Ok(pyramid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn sparse_vector(n: usize, k: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut v = vec![0.0; n];
        let idx = rand::seq::index::sample(&mut rng, n, k);
        for i in idx {
            v[i] = rng.sample(StandardNormal);
        }
        v
    }

    fn record_for(v: &[f64], cb: &SensingCodebook) -> MeasurementRecord {
        let k = crate::sensing::l0_norm(v);
        let j = crate::sensing::select_entry(k);
        let y = if j == 0 { vec![] } else { cb.matrix(j, v.len()).unwrap().apply(v) };
        MeasurementRecord { j, k, n: v.len(), y, origin: None }
    }

    #[test]
    fn empty_record_recovers_zero() {
        let cb = SensingCodebook::new(3);
        let rec = MeasurementRecord { j: 0, k: 0, n: 128, y: vec![], origin: None };
        for alg in Algorithm::ALL {
            let r = recover(&rec, &cb, &RecoveryConfig::with_algorithm(alg)).unwrap();
            assert_eq!(r.s_hat, vec![0.0; 128]);
            assert_eq!(r.residual_norm, 0.0);
        }
    }

    #[test]
    fn phase_split_follows_the_strict_inequality() {
        let c = RecoveryConfig::default();
        assert_eq!(c.phase1_iterations(), 99);
        let c = RecoveryConfig { iterations: 10, ..RecoveryConfig::default() };
        assert_eq!(c.phase1_iterations(), 2);
        let c = RecoveryConfig { phase1_fraction: (1, 1), ..RecoveryConfig::default() };
        assert_eq!(c.phase1_iterations(), 400);
    }

    #[test]
    fn config_validation() {
        assert!(RecoveryConfig { iterations: 3, ..Default::default() }.validate().is_err());
        assert!(RecoveryConfig { phase1_fraction: (0, 4), ..Default::default() }.validate().is_err());
        assert!(RecoveryConfig { step_scale: StepScale::Fixed(-1.0), ..Default::default() }.validate().is_err());
        assert!(RecoveryConfig::default().validate().is_ok());
    }

    #[test]
    fn top_k_is_identity_on_k_sparse_and_breaks_ties_low() {
        let mut v = vec![0.0, 3.0, 0.0, -1.0, 0.0];
        keep_top_k(&mut v, 2);
        assert_eq!(v, vec![0.0, 3.0, 0.0, -1.0, 0.0]);
        let mut v = vec![1.0, -1.0, 1.0, 0.5];
        keep_top_k(&mut v, 2);
        assert_eq!(v, vec![1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn soft_threshold_with_zero_delta_is_identity() {
        for x in [-2.5, 0.0, 1.25] {
            assert_eq!(soft_threshold(x, 0.0), x);
        }
        assert_eq!(mth_largest_magnitude(&[1.0, -5.0, 3.0], 2), 3.0);
    }

    #[test]
    fn eamp_with_full_phase_one_is_amp() {
        let cb = SensingCodebook::new(11);
        let v = sparse_vector(512, 30, 5);
        let rec = record_for(&v, &cb);
        let cfg = RecoveryConfig { iterations: 60, phase1_fraction: (1, 1), ..Default::default() };
        let a = eamp_recover(&rec, &cb, &cfg).unwrap();
        let b = amp_recover(&rec, &cb, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eamp_and_iht_respect_sparsity() {
        let cb = SensingCodebook::new(12);
        let v = sparse_vector(1024, 40, 6);
        let rec = record_for(&v, &cb);
        let cfg = RecoveryConfig { iterations: 80, ..Default::default() };
        for r in [eamp_recover(&rec, &cb, &cfg).unwrap(), iht_recover(&rec, &cb, &cfg).unwrap()] {
            assert!(crate::sensing::l0_norm(&r.s_hat) <= 40);
        }
    }

    #[test]
    fn recovery_is_deterministic() {
        let cb = SensingCodebook::new(13);
        let v = sparse_vector(1024, 20, 7);
        let rec = record_for(&v, &cb);
        let cfg = RecoveryConfig { iterations: 50, ..Default::default() };
        assert_eq!(recover(&rec, &cb, &cfg).unwrap(), recover(&rec, &cb, &cfg).unwrap());
    }

    #[test]
    fn one_sparse_support_found_by_amp() {
        let cb = SensingCodebook::new(14);
        let mut v = vec![0.0; 256];
        v[101] = 1.7;
        let rec = record_for(&v, &cb);
        assert_eq!(rec.y.len(), 50);
        let cfg = RecoveryConfig { iterations: 50, ..Default::default() };
        let r = amp_recover(&rec, &cb, &cfg).unwrap();
        let best = (0..256).max_by(|&a, &b| r.s_hat[a].abs().total_cmp(&r.s_hat[b].abs())).unwrap();
        assert_eq!(best, 101);
    }

    #[test]
    fn early_exit_on_residual_tolerance() {
        let cb = SensingCodebook::new(15);
        let v = sparse_vector(2048, 200, 8);
        let rec = record_for(&v, &cb);
        let cfg = RecoveryConfig { residual_tolerance: Some(1e-9), ..Default::default() };
        let r = eamp_recover(&rec, &cb, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.iterations_run < 400);
        assert!(r.residual_norm < 1e-9 * norm(&rec.y));
    }
}
