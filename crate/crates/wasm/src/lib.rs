//! WebAssembly bindings for the browser demo in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// NMSE per iteration of one recovery algorithm.
#[wasm_bindgen(js_name = learningCurve)]
pub fn learning_curve(n: usize, k: usize, iterations: usize, seed: u64, algorithm: &str) -> Result<Vec<f64>, JsError> {
    demo::learning_curve(n, k, iterations, seed, algorithm).map_err(js)
}

/// `[conventional mult, conventional add, proposed mult, proposed add, ratio]`.
#[wasm_bindgen]
pub fn complexity(n: f64, m_fraction: f64, itr: f64) -> Result<Vec<f64>, JsError> {
    demo::complexity(n, m_fraction, itr).map_err(js)
}

#[wasm_bindgen]
pub struct Session(demo::CodecSession);

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(width: usize, height: usize, seed: u64, threshold: f64, bits: u8) -> Result<Session, JsError> {
        demo::CodecSession::new(width, height, seed, threshold, bits).map(Session).map_err(js)
    }

    #[wasm_bindgen(js_name = sourceFrame)]
    pub fn source_frame(&self, index: usize) -> Vec<u8> {
        self.0.source_frame(index)
    }

    #[wasm_bindgen(js_name = streamLen)]
    pub fn stream_len(&self) -> usize {
        self.0.stream_len()
    }

    #[wasm_bindgen(js_name = compressionRatio)]
    pub fn compression_ratio(&self) -> Result<f64, JsError> {
        self.0.compression_ratio().map_err(js)
    }

    #[wasm_bindgen(js_name = measurementPercentage)]
    pub fn measurement_percentage(&self) -> Result<f64, JsError> {
        self.0.measurement_percentage().map_err(js)
    }

    /// Decodes layers `0..=layer` (0 = BL).
    pub fn decode(&self, layer: u8, algorithm: &str) -> Result<Clip, JsError> {
        self.0.decode(layer, algorithm).map(Clip).map_err(js)
    }
}

#[wasm_bindgen]
pub struct Clip(demo::DecodedClip);

#[wasm_bindgen]
impl Clip {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.0.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.0.height
    }

    #[wasm_bindgen(getter, js_name = frameCount)]
    pub fn frame_count(&self) -> usize {
        self.0.frames.len()
    }

    #[wasm_bindgen(getter, js_name = frameRate)]
    pub fn frame_rate(&self) -> f64 {
        self.0.frame_rate
    }

    #[wasm_bindgen(getter, js_name = psnrReduced)]
    pub fn psnr_reduced(&self) -> f64 {
        self.0.psnr_reduced
    }

    #[wasm_bindgen(getter, js_name = psnrFullSize)]
    pub fn psnr_full_size(&self) -> f64 {
        self.0.psnr_full_size
    }

    #[wasm_bindgen(getter, js_name = streamBytes)]
    pub fn stream_bytes(&self) -> usize {
        self.0.stream_bytes
    }

    pub fn frame(&self, index: usize) -> Vec<u8> {
        self.0.frames.get(index).cloned().unwrap_or_default()
    }
}
