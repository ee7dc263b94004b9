//! Byte-exact vectors. Set `CSWV_BLESS=1` to rewrite them after an
//! intentional format change.

mod common;

use common::{data, entropy_patterns, tiny_clip};
use cswv::bitstream::{demux, extract_layers};
use cswv::codec::{decode, encode_video, EncoderConfig};
use cswv::dwt::Layer;
use cswv::metrics::psnr;
use cswv::recovery::RecoveryConfig;

fn check(name: &str, actual: &[u8]) {
    let path = data(name);
    if std::env::var_os("CSWV_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the stored vector");
}

fn tiny_stream() -> Vec<u8> {
    let config = EncoderConfig { threshold: 1.0, quant_bits: 12, master_seed: 7, ..Default::default() };
    encode_video(&tiny_clip(), &config).unwrap()
}

#[test]
fn tiny_stream_is_stable() {
    let stream = tiny_stream();
    check("tiny_8x8.cswv", &stream);
    assert_eq!(demux(&stream).unwrap().to_bytes().unwrap(), stream);
}

#[test]
fn tiny_stream_decodes() {
    let stream = tiny_stream();
    let full = decode(&stream, &RecoveryConfig::default()).unwrap();
    assert_eq!(full.frames.len(), 8);
    assert!(psnr(&tiny_clip(), &full.frames).unwrap().pooled > 30.0);
    let base = decode(&extract_layers(&stream, Layer::Base).unwrap(), &RecoveryConfig::default()).unwrap();
    assert_eq!((base.frames.len(), base.frames[0].width()), (1, 1));
}

#[test]
fn entropy_bit_patterns_are_stable() {
    check("entropy_patterns.txt", entropy_patterns().as_bytes());
}
