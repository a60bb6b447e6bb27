//! Soundness sweeps over planted-error distances and query-count reports.

use serde::{Deserialize, Serialize};

use crate::corrector::plant_errors;
use crate::error::Result;
use crate::gf::Field;
use crate::oracle::{distance_to_code, random_codeword, CodeBasis, DEFAULT_BUDGET};
use crate::stats::stream_rng;
use crate::tester::{estimate_rejection, TesterSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta_target: f64,
    pub errors: usize,
    /// Exact distance when the oracle fits its budget, or errors/q^n when
    /// the planted weight is below half the minimum distance.
    pub delta_actual: Option<f64>,
    pub rejection_rate: f64,
    pub ci: f64,
    pub queries: usize,
    pub trials: u64,
    pub seed: u64,
}

impl SweepRecord {
    pub const CSV_HEADER: &'static str =
        "delta_target,errors,delta_actual,rejection_rate,ci,queries,trials,seed";

    pub fn to_csv(&self) -> String {
        let actual = self
            .delta_actual
            .map_or(String::new(), |d| format!("{d:.8}"));
        format!(
            "{:.8},{},{},{:.6},{:.6},{},{},{}",
            self.delta_target,
            self.errors,
            actual,
            self.rejection_rate,
            self.ci,
            self.queries,
            self.trials,
            self.seed
        )
    }
}

/// Minimum distance of RM[n, q, d] as a count of points.
pub fn min_distance(q: usize, n: usize, d: usize) -> u128 {
    if d >= n * (q - 1) {
        return 1;
    }
    let (a, b) = (d / (q - 1), d % (q - 1));
    (q - b) as u128 * (q as u128).pow((n - a - 1) as u32)
}

/// For each δ, plants ⌈δ q^n⌉ errors in one random codeword and estimates
/// the rejection rate.
pub fn run_sweep(
    spec: &TesterSpec,
    n: usize,
    deltas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRecord>> {
    let fs = spec.field();
    let (q, d) = (fs.q(), spec.params().d);
    let points = q.pow(n as u32);
    let code = random_codeword(fs, n, d, seed);
    let oracle_ok = CodeBasis::new(fs, n, d)
        .check_budget(q, DEFAULT_BUDGET)
        .is_ok();
    let dmin = min_distance(q, n, d);
    deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let errors = (delta * points as f64 - 1e-9).ceil().max(0.0) as usize;
            let (f, _) = plant_errors(fs, &code, errors, &mut stream_rng(seed, 1 + i as u64));
            let delta_actual = if oracle_ok {
                Some(distance_to_code(fs, &f, d, DEFAULT_BUDGET)?.delta())
            } else if 2 * errors as u128 <= dmin.saturating_sub(1) {
                Some(errors as f64 / points as f64)
            } else {
                None
            };
            let est = estimate_rejection(&f, spec, trials, seed)?;
            Ok(SweepRecord {
                delta_target: delta,
                errors,
                delta_actual,
                rejection_rate: est.rate,
                ci: est.ci,
                queries: est.queries,
                trials,
                seed,
            })
        })
        .collect()
}

/// min over records with δ > 0 of rate / min(1, Qδ).
pub fn fit_c(records: &[SweepRecord]) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.errors > 0)
        .map(|r| {
            let delta = r.delta_actual.unwrap_or(r.delta_target);
            r.rejection_rate / (r.queries as f64 * delta).min(1.0)
        })
        .min_by(f64::total_cmp)
}

/// Whether rates are non-decreasing in δ up to `slack` Wilson half-widths.
pub fn monotone_within(records: &[SweepRecord], slack: f64) -> bool {
    records
        .windows(2)
        .all(|w| w[1].rejection_rate + slack * (w[0].ci + w[1].ci) >= w[0].rejection_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub field: String,
    pub d: usize,
    pub s: usize,
    pub r: usize,
    pub t: usize,
    pub supp_p: usize,
    pub supp_h: usize,
    pub bound: f64,
    /// q^{s+t}, the queries of the full (s+t)-flat test.
    pub full_flat: u128,
    /// q^{⌈(d+1)/(q - q/p)⌉}, the best earlier flat tester.
    pub flat_tester: u128,
    pub sparse_over_flat: f64,
}

pub fn query_report(spec: &TesterSpec) -> QueryReport {
    let p = spec.params();
    let q = p.q as u128;
    let full_flat = q.pow(spec.dim() as u32);
    let flat_dim = (p.d + 1).div_ceil(p.head_exp());
    QueryReport {
        field: spec.field().name(),
        d: p.d,
        s: p.s,
        r: p.r,
        t: p.t,
        supp_p: spec.p_support().len(),
        supp_h: spec.supp_h_size(),
        bound: spec.query_bound(),
        full_flat,
        flat_tester: q.saturating_pow(flat_dim as u32),
        sparse_over_flat: spec.supp_h_size() as f64 / full_flat as f64,
    }
}

/// Built-in (p, k, d) parameter sets with the default t.
pub const BUILTIN_PARAMS: [(u32, u32, usize); 6] = [
    (2, 1, 1),
    (2, 1, 3),
    (3, 1, 6),
    (2, 2, 3),
    (2, 2, 4),
    (2, 3, 8),
];

pub fn builtin_specs() -> Result<Vec<TesterSpec>> {
    BUILTIN_PARAMS
        .iter()
        .map(|&(p, k, d)| {
            let fs = Field::new(p, k, None)?;
            let params = crate::tester::derive_params(&fs, d, None)?;
            crate::tester::build_spec(&fs, params)
        })
        .collect()
}
