use cswv::bits::{BitReader, BitWriter};
use cswv::bitstream::StreamHeader;
use cswv::coding::{
    abc_decode, abc_encode, dequantize, grc_decode, grc_encode, max_code, quantize, rle_zero, unrle_zero, zigzag,
    CodedChunk,
};
use cswv::dwt::{dwt97_forward_1d, dwt97_inverse_1d, pyramid_band_map};
use cswv::sensing::{devectorize_band, vectorize_band};
use cswv::video_io::{partition_gofs, read_raw_video, write_raw_video, FramePlane};
use proptest::prelude::*;

fn codes() -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(prop_oneof![3 => Just(0i32), 2 => -40i32..40, 1 => -5000i32..5000], 0..300)
}

proptest! {
    #[test]
    fn grc_round_trip(codes in codes(), r in 0u32..=15) {
        let w = grc_encode(&codes, r);
        let mut reader = BitReader::with_len(w.as_bytes(), w.len());
        prop_assert_eq!(grc_decode(&mut reader, r, codes.len()).unwrap(), codes);
        prop_assert_eq!(reader.remaining(), 0);
    }

    #[test]
    fn abc_round_trip(codes in codes(), slack in 0u64..1000) {
        let bound = codes.iter().map(|&c| zigzag(c)).max().unwrap_or(0) + 1 + slack;
        let w = abc_encode(&codes, bound).unwrap();
        let mut reader = BitReader::with_len(w.as_bytes(), w.len());
        prop_assert_eq!(abc_decode(&mut reader, bound, codes.len()).unwrap(), codes);
    }

    #[test]
    fn rle_round_trip(codes in codes()) {
        prop_assert_eq!(unrle_zero(&rle_zero(&codes)).unwrap(), codes);
    }

    #[test]
    fn quantizer_error_is_half_a_step(values in prop::collection::vec(-1e4f64..1e4, 1..200), bits in 4u8..=16) {
        let q = quantize(&values, bits).unwrap();
        let back = dequantize(&q.codes, q.max_abs, bits);
        let half_step = f64::from(q.max_abs) / f64::from(max_code(bits)) / 2.0;
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() <= half_step * (1.0 + 1e-9));
        }
    }

    #[test]
    fn coded_chunk_round_trip(values in prop::collection::vec(prop_oneof![Just(0.0), -500.0f64..500.0], 0..400), bits in 4u8..=16) {
        let chunk = CodedChunk::encode(&values, bits).unwrap();
        let mut w = BitWriter::new();
        chunk.write(&mut w).unwrap();
        prop_assert_eq!(w.len(), chunk.bit_len());
        let mut reader = BitReader::with_len(w.as_bytes(), w.len());
        prop_assert_eq!(CodedChunk::read(&mut reader).unwrap(), chunk);
    }

    #[test]
    fn header_round_trip(w in 1u32..512, h in 1u32..512, frames in 0u32..10_000, seed: u64, t in 0.0f32..10.0, bits in 4u8..=16) {
        let mut header = StreamHeader::new(w * 8, h * 8, frames);
        header.master_seed = seed;
        header.threshold = t;
        header.quant_bits = bits;
        prop_assert_eq!(StreamHeader::from_bytes(&header.to_bytes()).unwrap(), header);
    }

    #[test]
    fn vectorize_round_trip(wu in 1usize..9, hu in 1usize..9, target in prop::sample::select(vec![16usize, 64, 256, 2048]), seed: u64) {
        let (w, h) = (wu * 8, hu * 8);
        for region in pyramid_band_map(w, h) {
            let band: Vec<f64> = (0..region.len()).map(|i| ((i as u64 ^ seed) % 97) as f64 - 48.0).collect();
            let vectors = vectorize_band(&region, &band, target);
            let n = vectors[0].n();
            prop_assert!(vectors.iter().all(|v| v.n() == n));
            let raw: Vec<Vec<f64>> = vectors.into_iter().map(|v| v.values).collect();
            prop_assert_eq!(devectorize_band(&region, &raw).unwrap(), band);
        }
    }

    #[test]
    fn lifting_round_trip(x in prop::collection::vec(-1e3f64..1e3, 1..64)) {
        let mut x = x;
        if x.len() % 2 == 1 {
            x.pop();
        }
        prop_assume!(!x.is_empty());
        let mut y = x.clone();
        dwt97_forward_1d(&mut y);
        dwt97_inverse_1d(&mut y);
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn raw_video_round_trip(bytes in prop::collection::vec(any::<u8>(), 64 * 3)) {
        let frames = read_raw_video(&bytes, 8, 8, 3).unwrap();
        prop_assert_eq!(write_raw_video(&frames), bytes);
    }

    #[test]
    fn partition_keeps_order(count in 1usize..30) {
        let frames: Vec<_> = (0..count).map(|i| FramePlane::filled(8, 8, i as f64)).collect();
        let part = partition_gofs(&frames).unwrap();
        prop_assert_eq!(part.gofs.len() * 8, count + part.padding);
        let flat: Vec<f64> = part.gofs.iter().flat_map(|g| g.frames().iter().map(|f| f.get(0, 0))).collect();
        for (i, v) in flat.iter().enumerate() {
            prop_assert_eq!(*v, i.min(count - 1) as f64);
        }
    }
}
