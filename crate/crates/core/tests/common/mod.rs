#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use secmeas_core::config::RunConfig;
use secmeas_core::numerics::{c64, real_vector, Complex64};
use secmeas_core::pipeline::run_pipeline;
use serde::{Deserialize, Serialize};

pub const BLESS_VAR: &str = "SECMEAS_BLESS";

pub fn root_seed(weights: &[f64]) -> Vec<Complex64> {
    real_vector(&weights.iter().map(|w| w.sqrt()).collect::<Vec<_>>())
}

/// `c_k = ⟨χ_k|ψ⟩` for the characters of `ℤ_{n_1} × … × ℤ_{n_j}` acting by
/// shifts, evaluated directly from the definition.
pub fn fourier_amplitudes(orders: &[usize], seed: &[Complex64]) -> Vec<f64> {
    let m: usize = orders.iter().product();
    let digits = |mut x: usize| {
        let mut out = vec![0; orders.len()];
        for (i, &n) in orders.iter().enumerate().rev() {
            out[i] = x % n;
            x /= n;
        }
        out
    };
    (0..m)
        .map(|k| {
            let kd = digits(k);
            let mut acc = c64(0.0, 0.0);
            for (j, x) in seed.iter().enumerate() {
                let jd = digits(j);
                let phase: f64 = orders
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| 2.0 * std::f64::consts::PI * (kd[i] * jd[i]) as f64 / n as f64)
                    .sum();
                acc += c64(phase.cos(), -phase.sin()) * x;
            }
            acc.norm() / (m as f64).sqrt()
        })
        .collect()
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub observers: usize,
    pub probabilities: Vec<Vec<f64>>,
    pub oim_probabilities: Vec<Vec<f64>>,
    pub residuals: BTreeMap<String, f64>,
    pub monte_carlo_counts: Vec<Vec<u64>>,
}

pub fn golden_path(observers: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/z3_n{observers}.json"))
}

pub fn golden_config(observers: usize) -> RunConfig {
    let mut c = RunConfig::shift(vec![3], vec![root_seed(&[0.5, 0.3, 0.2])], 0.2, observers);
    c.trials = 10_000;
    c.rng_seed = 2024;
    c
}

pub fn compute_golden(observers: usize) -> Golden {
    let report = run_pipeline(&golden_config(observers)).expect("pipeline");
    Golden {
        observers,
        probabilities: report.exact.probabilities,
        oim_probabilities: report.exact.oim_probabilities,
        residuals: report.residuals.iter().map(|(k, r)| (k.clone(), r.value)).collect(),
        monte_carlo_counts: report.monte_carlo.expect("sampled").counts,
    }
}

/// Compares against the stored golden, rewriting it when `SECMEAS_BLESS` is
/// set. Returns a description of the first mismatch.
pub fn check_golden(observers: usize) -> Result<(), String> {
    let fresh = compute_golden(observers);
    let path = golden_path(observers);
    if std::env::var_os(BLESS_VAR).is_some() {
        let text = serde_json::to_string_pretty(&fresh).unwrap() + "\n";
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let stored: Golden = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let bits = |t: &Vec<Vec<f64>>| -> Vec<Vec<u64>> { t.iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect() };
    if bits(&stored.probabilities) != bits(&fresh.probabilities) {
        return Err("receiver table differs".into());
    }
    if bits(&stored.oim_probabilities) != bits(&fresh.oim_probabilities) {
        return Err("measurement table differs".into());
    }
    if stored.residuals.keys().ne(fresh.residuals.keys())
        || stored.residuals.values().zip(fresh.residuals.values()).any(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err("residuals differ".into());
    }
    if stored.monte_carlo_counts != fresh.monte_carlo_counts {
        return Err("Monte Carlo counts differ".into());
    }
    Ok(())
}
