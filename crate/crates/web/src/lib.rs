//! WebAssembly bindings for the browser demo in `www/`.

use wasm_bindgen::prelude::*;

pub mod demo;

/// JSON `{raw, refined, occluders}` for boxes given as `[[l, t, r, b], ...]`.
#[wasm_bindgen(js_name = occlusionField)]
pub fn occlusion_field(
    boxes: &str,
    width: u32,
    height: u32,
    thre: f64,
    kx: f64,
    ky: f64,
) -> Result<String, JsValue> {
    demo::occlusion_field(boxes, width, height, thre, kx, ky).map_err(|e| JsValue::from_str(&e))
}

/// RGBA pixels of the Gaussian map, ready for `ImageData`.
#[wasm_bindgen(js_name = gaussianMap)]
pub fn gaussian_map(
    boxes: &str,
    width: u32,
    height: u32,
    kx: f64,
    ky: f64,
) -> Result<Vec<u8>, JsValue> {
    demo::gaussian_map_rgba(boxes, width, height, kx, ky).map_err(|e| JsValue::from_str(&e))
}

/// Tracks a canonical scenario; see [`demo::run_preset`] for the JSON shape.
#[wasm_bindgen(js_name = runPreset)]
pub fn run_preset(name: &str, oao: bool, bam: bool, gm: bool) -> Result<String, JsValue> {
    demo::run_preset(name, oao, bam, gm).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = presetNames)]
pub fn preset_names() -> Vec<String> {
    oasort::synth::PRESET_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect()
}
