//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Build with `wasm-pack build --target web --out-dir www/pkg` and serve
//! `www/` from any static file server.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Binary market explorer: quote and buy against a fresh LMSR book.
#[wasm_bindgen]
pub struct MarketExplorer(demo::Explorer);

#[wasm_bindgen]
impl MarketExplorer {
    #[wasm_bindgen(constructor)]
    pub fn new(b: f64) -> Result<MarketExplorer, JsError> {
        demo::Explorer::new(b).map(MarketExplorer).map_err(js)
    }

    /// `[p_higher, p_lower]`.
    pub fn prices(&self) -> Vec<f64> {
        self.0.prices()
    }

    #[wasm_bindgen(js_name = maxLoss)]
    pub fn max_loss(&self) -> f64 {
        self.0.max_loss()
    }

    pub fn quote(&self, outcome: usize, spend_eur: f64) -> Result<String, JsError> {
        self.0.quote(outcome, spend_eur).map_err(js)
    }

    pub fn buy(&mut self, outcome: usize, spend_eur: f64) -> Result<String, JsError> {
        self.0.buy(outcome, spend_eur).map_err(js)
    }
}

#[wasm_bindgen]
pub fn optimize(instance: &str, time_limit_ms: u32) -> Result<String, JsError> {
    demo::optimize(instance, time_limit_ms as u64).map_err(js)
}

#[wasm_bindgen]
pub fn simulate(
    seed: u32,
    true_price_eur: f64,
    n_informed: u32,
    n_noise: u32,
    n_manipulators: u32,
    rounds: u32,
) -> Result<String, JsError> {
    demo::simulate(
        seed as u64,
        true_price_eur,
        n_informed as usize,
        n_noise as usize,
        n_manipulators as usize,
        rounds,
    )
    .map_err(js)
}
