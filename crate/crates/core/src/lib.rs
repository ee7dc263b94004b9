//! Scalable video codec built on a 3-D wavelet transform and adaptive
//! compressed sensing of the high-frequency sub-bands.
//!
//! Pipeline per group of eight frames:
//!
//! ```text
//! frames -> 3-D DWT -> LLL band ------------------> quantize -> GRC/ABC (+RLE) -> BL
//!                   -> other bands -> threshold -> vectorize -> l0 norm -> codebook entry j
//!                                  -> y = Phi_j s -> quantize -> GRC/ABC (+RLE) -> EL1..EL3
//! ```
//!
//! The decoder recovers each vector with EAMP (or AMP/IHT/IST), rebuilds the
//! sub-bands and inverts the transform at whatever resolution the received
//! layers allow.

pub mod bits;
pub mod bitstream;
pub mod codec;
pub mod coding;
pub mod curves;
pub mod dwt;
pub mod error;
pub mod metrics;
pub mod recovery;
pub mod sensing;
pub mod synth;
pub mod video_io;

pub use error::{CodecError, Result};

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}
