//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes the distribution file text and an epsilon
//! literal and returns a JSON string. The `*_json` functions hold the logic
//! and run natively for tests; the wrappers only convert errors.

use ecs_core::bias::aghp_pad;
use ecs_core::cipher::{keygen, Margin, Scheme};
use ecs_core::dist::{format_rational, parse_rational, to_f64, Distribution, Rational, DEFAULT_BUDGET};
use ecs_core::pad::{randomize, seeded_bits};
use ecs_core::verify::{
    exact_output_distribution, induced_block_distribution, statistical_distance, BlockDistribution, PadFamily,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest block length the page will tabulate.
const MAX_CHART_BITS: usize = 12;

fn load(dist: &str, epsilon: &str) -> Result<(Distribution, Scheme), String> {
    let d = Distribution::parse(dist).map_err(|e| e.to_string())?;
    let eps: Rational =
        parse_rational(epsilon).ok_or_else(|| format!("epsilon `{epsilon}` is not NUM/DEN or 2^-c"))?;
    let scheme = Scheme::new(&d, &eps, Margin::Four).map_err(|e| e.to_string())?;
    Ok((d, scheme))
}

pub fn analyze_json(dist: &str, epsilon: &str) -> Result<Value, String> {
    let (d, scheme) = load(dist, epsilon)?;
    let cb = scheme.codebook();
    let params: serde_json::Map<String, Value> = scheme
        .params()
        .report_fields()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let rows: Vec<Value> = cb
        .symbols()
        .iter()
        .zip(cb.words())
        .map(|(sym, w)| {
            json!({
                "symbol": sym.to_string(),
                "prob": format_rational(d.prob_of(sym).expect("codebook symbol")),
                "codeword": w.to_string(),
            })
        })
        .collect();
    Ok(json!({ "params": params, "codebook": rows }))
}

fn masses(b: &BlockDistribution) -> Vec<f64> {
    (0..1u64 << b.l()).map(|i| to_f64(&b.mass(i))).collect()
}

/// Block distribution before and after the pad, plus exact distances to
/// uniform. With `control` set the pad is skipped.
pub fn output_distribution_json(dist: &str, epsilon: &str, control: bool) -> Result<Value, String> {
    let (d, scheme) = load(dist, epsilon)?;
    let cb = scheme.codebook();
    let l = cb.l_max();
    if l > MAX_CHART_BITS {
        return Err(format!("block length {l} is too large to chart (limit {MAX_CHART_BITS})"));
    }
    let pads = if control {
        PadFamily::Constant(0)
    } else {
        PadFamily::SmallBias(scheme.params().field)
    };
    let uniform = BlockDistribution::uniform(l).map_err(|e| e.to_string())?;
    let before = induced_block_distribution(cb, &d, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let after = exact_output_distribution(cb, &d, &pads, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let sd_before = statistical_distance(&before, &uniform).map_err(|e| e.to_string())?;
    let sd_after = statistical_distance(&after, &uniform).map_err(|e| e.to_string())?;
    let eps = &scheme.params().epsilon;
    Ok(json!({
        "l": l,
        "padded": masses(&before),
        "ciphertext": masses(&after),
        "sd_padded": format_rational(&sd_before),
        "sd_ciphertext": format_rational(&sd_after),
        "sd_ciphertext_float": to_f64(&sd_after),
        "epsilon": format_rational(eps),
        "pass": &sd_after <= eps,
    }))
}

/// One seeded encryption, showing every intermediate value.
pub fn round_trip_json(dist: &str, epsilon: &str, message: &str, seed: u32) -> Result<Value, String> {
    let (d, scheme) = load(dist, epsilon)?;
    let sym = d.parse_symbol(message).map_err(|e| e.to_string())?;
    let mut src = seeded_bits(seed as u64);
    let key = keygen(scheme.params(), &mut src).map_err(|e| e.to_string())?;
    let k = *key.key();
    let codeword = scheme.codebook().encode(&sym).map_err(|e| e.to_string())?.clone();

    // Padding is drawn from a copy of the stream so it matches what `encrypt` uses.
    let mut preview = seeded_bits(seed as u64);
    keygen(scheme.params(), &mut preview).map_err(|e| e.to_string())?;
    let block = randomize(scheme.codebook(), &sym, &mut preview).map_err(|e| e.to_string())?;
    let pad = aghp_pad(&k, scheme.params().l, &scheme.params().field);

    let env = scheme.encrypt(key, &sym, &mut src).map_err(|e| e.to_string())?;
    let decrypted = scheme.decrypt(&k, &env).map_err(|e| e.to_string())?;
    Ok(json!({
        "key": k.to_bits().to_string(),
        "codeword": codeword.to_string(),
        "block": block.bits().to_string(),
        "pad": pad.to_string(),
        "ciphertext": env.payload.to_string(),
        "envelope_hex": env.to_bytes().iter().map(|b| format!("{b:02x}")).collect::<String>(),
        "decrypted": decrypted.to_string(),
    }))
}

fn finish(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn analyze(dist: &str, epsilon: &str) -> Result<String, JsValue> {
    finish(analyze_json(dist, epsilon))
}

#[wasm_bindgen]
pub fn output_distribution(dist: &str, epsilon: &str, control: bool) -> Result<String, JsValue> {
    finish(output_distribution_json(dist, epsilon, control))
}

#[wasm_bindgen]
pub fn round_trip(dist: &str, epsilon: &str, message: &str, seed: u32) -> Result<String, JsValue> {
    finish(round_trip_json(dist, epsilon, message, seed))
}
