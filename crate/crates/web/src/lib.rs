//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns JSON text, so the
//! page needs no glue beyond `JSON.parse`. The `*_json` functions hold the
//! logic and are what the native tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sparseperm::approx::{kklll_trial, trial_rng};
use sparseperm::exact::{per_hybrid, permanental_polynomial};
use sparseperm::io::parse_adjacency;
use sparseperm::runtime::efficiency_sweep_replay;
use sparseperm::schedule::{synthetic_workload, Strategy};

/// Largest graph the page will evaluate exactly.
pub const MAX_EXACT_ORDER: usize = 40;
/// The polynomial needs `n + 1` complex permanents, so it gets a lower cap.
pub const MAX_POLY_ORDER: usize = 24;
pub const MAX_TRIALS: u32 = 200_000;

#[derive(Serialize)]
struct GraphReport {
    vertices: usize,
    edges: usize,
    permanent: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    polynomial: Option<Vec<String>>,
}

pub fn graph_report_json(adjacency: &str) -> Result<String, String> {
    let adj = parse_adjacency(adjacency).map_err(|e| e.to_string())?;
    let n = adj.vertex_count();
    if n == 0 {
        return Err("the graph has no vertices".into());
    }
    if n > MAX_EXACT_ORDER {
        return Err(format!("{n} vertices; the page evaluates at most {MAX_EXACT_ORDER}"));
    }
    let permanent = per_hybrid(&adj.to_matrix()).map_err(|e| e.to_string())?;
    let polynomial = if n <= MAX_POLY_ORDER {
        let p = permanental_polynomial(&adj).map_err(|e| e.to_string())?;
        Some(p.coefficients.iter().map(i128::to_string).collect())
    } else {
        None
    };
    let report = GraphReport {
        vertices: n,
        edges: adj.edge_count(),
        permanent: permanent.to_string(),
        polynomial,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    order: Strategy,
    machines: Vec<usize>,
    efficiency: Vec<f64>,
}

pub fn efficiency_curves_json(jobs: usize, noise: f64, seed: u32, max_machines: usize) -> Result<String, String> {
    if jobs == 0 || max_machines == 0 {
        return Err("need at least one job and one machine".into());
    }
    let workload = synthetic_workload(jobs, noise, u64::from(seed)).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = (0..)
        .map(|k| 1usize << k)
        .take_while(|&m| m <= max_machines)
        .collect();
    let curves = Strategy::ALL
        .iter()
        .map(|&order| {
            let rows = efficiency_sweep_replay(&workload, order, &counts).map_err(|e| e.to_string())?;
            Ok(Curve {
                order,
                machines: rows.iter().map(|r| r.num).collect(),
                efficiency: rows.iter().map(|r| r.efficiency.unwrap_or(1.0)).collect(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&curves).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Convergence {
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    trials: Vec<u32>,
    mean: Vec<f64>,
    std_error: Vec<f64>,
}

pub fn estimator_convergence_json(adjacency: &str, trials: u32, seed: u32) -> Result<String, String> {
    let adj = parse_adjacency(adjacency).map_err(|e| e.to_string())?;
    if adj.vertex_count() == 0 {
        return Err("the graph has no vertices".into());
    }
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must lie in 1..={MAX_TRIALS}"));
    }
    let a = adj.to_matrix();
    let exact = if adj.vertex_count() <= MAX_EXACT_ORDER {
        Some(per_hybrid(&a).map_err(|e| e.to_string())?.to_string())
    } else {
        None
    };
    let mut out = Convergence {
        exact,
        trials: Vec::new(),
        mean: Vec::new(),
        std_error: Vec::new(),
    };
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut next = 1u32;
    for t in 1..=trials {
        let x = kklll_trial(&a, &mut trial_rng(u64::from(seed), 0, u64::from(t - 1)));
        sum += x;
        sum_sq += x * x;
        if t == next || t == trials {
            let n = f64::from(t);
            let mean = sum / n;
            let var = if t > 1 { (sum_sq - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
            out.trials.push(t);
            out.mean.push(mean);
            out.std_error.push((var / n).sqrt());
            // about 12 checkpoints per decade
            next = (f64::from(next) * 1.2).ceil() as u32;
        }
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Permanent and (for small graphs) permanental polynomial of an adjacency list.
#[wasm_bindgen]
pub fn graph_report(adjacency: &str) -> Result<String, JsError> {
    graph_report_json(adjacency).map_err(|e| JsError::new(&e))
}

/// Parallel efficiency of the three job orders on a synthetic workload,
/// for 1, 2, 4, ... machines.
#[wasm_bindgen]
pub fn efficiency_curves(jobs: usize, noise: f64, seed: u32, max_machines: usize) -> Result<String, JsError> {
    efficiency_curves_json(jobs, noise, seed, max_machines).map_err(|e| JsError::new(&e))
}

/// Running mean of the randomized estimator on a graph's adjacency matrix.
#[wasm_bindgen]
pub fn estimator_convergence(adjacency: &str, trials: u32, seed: u32) -> Result<String, JsError> {
    estimator_convergence_json(adjacency, trials, seed).map_err(|e| JsError::new(&e))
}
