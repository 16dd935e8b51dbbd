//! Browser demo: scatter plots of quantization and channel-simulation errors,
//! and the redundancy curves.
//!
//! The `#[wasm_bindgen]` exports are thin wrappers over plain functions so
//! the logic also builds and tests natively.

use rsuq::bounds::{self, ConstantsRegistry};
use rsuq::mc::{run_trials, TrialPlan};
use rsuq::{builtin_lattice, GaussianNoise, Lrsuq, Quantizer, RsuqConfig};
use wasm_bindgen::prelude::*;

/// Largest sample count a single call accepts.
pub const MAX_SAMPLES: u32 = 200_000;

fn check_samples(samples: u32) -> Result<usize, String> {
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(format!("samples must be in 1..={MAX_SAMPLES}"));
    }
    Ok(samples as usize)
}

/// Triples `(e0, e1, k)` for RSUQ on a planar lattice, inputs uniform on a
/// disc of radius 20.
pub fn ball_errors(
    lattice: &str,
    radius: f64,
    samples: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let samples = check_samples(samples)?;
    let lat = builtin_lattice(lattice, 2).map_err(|e| e.to_string())?;
    let q = RsuqConfig::new(lat, radius, u64::from(seed)).map_err(|e| e.to_string())?;
    let rec = run_trials(&q, &TrialPlan::uniform_ball(samples, 20.0, u64::from(seed)))
        .map_err(|e| e.to_string())?;
    Ok(rec
        .errors
        .iter()
        .zip(&rec.descriptions)
        .flat_map(|(e, d)| [e[0], e[1], d.k as f64])
        .collect())
}

/// Pairs `(z0, z1)` of simulated Gaussian channel noise at the fixed input `(x0, x1)`.
pub fn gaussian_errors(x0: f64, x1: f64, samples: u32, seed: u32) -> Result<Vec<f64>, String> {
    let samples = check_samples(samples)?;
    let lat = builtin_lattice("Zn", 2).map_err(|e| e.to_string())?;
    let q = Lrsuq::new(GaussianNoise::new(2), lat, u64::from(seed)).map_err(|e| e.to_string())?;
    let rec = run_trials(
        &q,
        &TrialPlan::fixed_point(samples, vec![x0, x1], u64::from(seed)),
    )
    .map_err(|e| e.to_string())?;
    Ok(rec.errors.into_iter().flatten().collect())
}

/// Mean stopping index predicted for RSUQ on `lattice` in dimension `n`.
pub fn expected_iterations(lattice: &str, n: usize) -> Result<f64, String> {
    let lat = builtin_lattice(lattice, n).map_err(|e| e.to_string())?;
    let q = RsuqConfig::new(lat.clone(), lat.packing_radius(), 0).map_err(|e| e.to_string())?;
    Ok(1.0 / q.stop_probability())
}

/// Redundancy curves as CSV (`n,quantity,value_bits,equation_tag`) for
/// `figure2-left` or `figure2-right`, dimensions `2..=n_max`.
pub fn redundancy_csv(table: &str, n_max: usize) -> Result<String, String> {
    if !(2..=256).contains(&n_max) {
        return Err("n_max must be in 2..=256".into());
    }
    let dims: Vec<usize> = (2..=n_max).collect();
    let reg = ConstantsRegistry::builtin();
    let report = match table {
        "figure2-left" => bounds::figure2_left(&dims, &reg),
        "figure2-right" => bounds::figure2_right(&dims, &reg),
        other => return Err(format!("unknown table `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    report.to_csv_string().map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = ballErrors)]
pub fn ball_errors_js(
    lattice: &str,
    radius: f64,
    samples: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    ball_errors(lattice, radius, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gaussianErrors)]
pub fn gaussian_errors_js(x0: f64, x1: f64, samples: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    gaussian_errors(x0, x1, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = expectedIterations)]
pub fn expected_iterations_js(lattice: &str, n: usize) -> Result<f64, JsError> {
    expected_iterations(lattice, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = redundancyCsv)]
pub fn redundancy_csv_js(table: &str, n_max: usize) -> Result<String, JsError> {
    redundancy_csv(table, n_max).map_err(|e| JsError::new(&e))
}
