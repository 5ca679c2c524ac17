//! Grid evaluation: one record per (x, t), computed in parallel and
//! emitted in (x, t) order as CSV or JSON.
//!
//! Record fields are the same in both formats: position, time, Re G,
//! Im G, the quadrature error estimate, the number of θ-integrand
//! evaluations, the Nyström order of the determinants, and whether all
//! convergence checks passed. The finite-N oracle reports its own
//! diagnostics through the same columns: `err` is the magnitude of the
//! outermost label shell (the truncation heuristic), `theta_evals` the
//! number of enumerated eigenstates, `det_order` 0.
//!
//! A point that fails outright (for example G(0,0), a delta
//! distribution with no numerical value) is still written, with NaN
//! values (null in JSON) and `converged` false, and the run exits 2.

use crate::config::{Format, Mode, RunConfig};
use mcguire_core::finite::{greens_bruteforce, FreeSector};
use mcguire_core::{
    greens_infinite_c_with, greens_with, CoreError, FiniteGeometry, GreensAccuracy, GreensValue,
    PhysicsParams,
};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::io::Write;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICS: i32 = 2;

fn nan_as_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[derive(Serialize)]
pub struct PointRecord {
    pub x: f64,
    pub t: f64,
    #[serde(serialize_with = "nan_as_null")]
    pub re_g: f64,
    #[serde(serialize_with = "nan_as_null")]
    pub im_g: f64,
    #[serde(serialize_with = "nan_as_null")]
    pub err: f64,
    pub theta_evals: usize,
    pub det_order: usize,
    pub converged: bool,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    config: &'a RunConfig,
    results: &'a [PointRecord],
    version: &'a str,
}

fn binomial(n: usize, r: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 0..r.min(n) {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    if r > n {
        Some(0)
    } else {
        Some(acc as usize)
    }
}

/// The oracle's physics parameters: matched ring L = πN/k_F unless the
/// config names an explicit circumference.
fn oracle_params(cfg: &RunConfig) -> Result<PhysicsParams, String> {
    let n_up = cfg.n_up.expect("validated: oracle mode carries n_up");
    let mut params = PhysicsParams::new(cfg.c, cfg.k_f).map_err(|e| e.to_string())?;
    params.finite = Some(match cfg.box_len {
        Some(l) => FiniteGeometry { box_len: l, n_up },
        None => FiniteGeometry::matched(n_up, cfg.k_f),
    });
    Ok(params)
}

fn evaluate(cfg: &RunConfig, free: Option<&FreeSector>, x: f64, t: f64) -> PointRecord {
    let acc = GreensAccuracy {
        tol: cfg.tol,
        det_tol: cfg.det_tol,
        order_cap: cfg.order_cap,
    };
    let outcome: Result<GreensValue, CoreError> = match cfg.mode {
        Mode::FiniteC => {
            let params = PhysicsParams::new(cfg.c, cfg.k_f).expect("validated");
            greens_with(x, t, &params, &acc)
        }
        Mode::InfiniteC => greens_infinite_c_with(x, t, cfg.k_f, &acc),
        Mode::FiniteNOracle => {
            let free = free.expect("oracle sector prepared before dispatch");
            greens_bruteforce(x, t, free, cfg.cutoff, cfg.budget).map(|sum| GreensValue {
                value: sum.value,
                abs_error: sum.last_shell(),
                theta_evaluations: sum.states_visited,
                det_order: 0,
                converged: true,
            })
        }
        Mode::Validate => unreachable!("validate mode never reaches the grid"),
    };
    match outcome {
        Ok(v) => PointRecord {
            x,
            t,
            re_g: v.value.re,
            im_g: v.value.im,
            err: v.abs_error,
            theta_evals: v.theta_evaluations,
            det_order: v.det_order,
            converged: v.converged,
        },
        Err(e) => {
            eprintln!("point (x={x}, t={t}): {e}");
            PointRecord {
                x,
                t,
                re_g: f64::NAN,
                im_g: f64::NAN,
                err: f64::NAN,
                theta_evals: 0,
                det_order: 0,
                converged: false,
            }
        }
    }
}

fn render_csv(records: &[PointRecord]) -> String {
    let mut out = String::from("x,t,re_g,im_g,err,theta_evals,det_order,converged\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.x, r.t, r.re_g, r.im_g, r.err, r.theta_evals, r.det_order, r.converged
        ));
    }
    out
}

fn render_json(cfg: &RunConfig, records: &[PointRecord]) -> String {
    let doc = JsonDocument {
        config: cfg,
        results: records,
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("records hold no non-finite floats");
    text.push('\n');
    text
}

pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), String> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| format!("stdout: {e}")),
    }
}

pub fn run(cfg: &RunConfig) -> i32 {
    // The oracle's state count is a property of the config, not of any
    // one grid point: refuse up front instead of failing every point.
    let free = if cfg.mode == Mode::FiniteNOracle {
        let params = match oracle_params(cfg) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        };
        let n_up = params.finite.unwrap().n_up;
        let window = 2 * cfg.cutoff as usize + 1;
        let states = binomial(window, n_up + 1).unwrap_or(usize::MAX);
        if states > cfg.budget {
            eprintln!(
                "error: cutoff {} with n_up {} enumerates {} states, over the budget {}",
                cfg.cutoff, n_up, states, cfg.budget
            );
            return EXIT_CONFIG;
        }
        match FreeSector::ground_state(params) {
            Ok(f) => Some(f),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        }
    } else {
        None
    };

    let mut points: Vec<(f64, f64)> = Vec::with_capacity(cfg.x.len() * cfg.t.len());
    for &x in &cfg.x {
        for &t in &cfg.t {
            points.push((x, t));
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("grid values validated finite"));

    let records: Vec<PointRecord> = points
        .par_iter()
        .map(|&(x, t)| evaluate(cfg, free.as_ref(), x, t))
        .collect();

    let text = match cfg.format {
        Format::Csv => render_csv(&records),
        Format::Json => render_json(cfg, &records),
    };
    if let Err(e) = emit(cfg, &text) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if records.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_NUMERICS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_matches_pascal() {
        assert_eq!(binomial(17, 3), Some(680));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(300, 150), None); // overflows usize
    }
}
