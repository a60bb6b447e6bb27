//! Iterative local correction: locate a suspect point, pick the value that
//! minimizes the rejection rate, apply it, repeat until the tester accepts.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineMap, ZoomSpec};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::mpoly::EvalTable;
use crate::stats::{stream_rng, Proportion};
use crate::tester::{estimate_rejection, run_sparse_test, TesterSpec};

/// A uniform point of supp(H) together with a uniform T with T(a) = b.
fn sample_through(
    spec: &TesterSpec,
    n: usize,
    b: &[Elem],
    rng: &mut impl Rng,
) -> Result<AffineMap> {
    let fs = spec.field();
    let head = &spec.head()[rng.gen_range(0..spec.head().len())].0;
    let mut a = head.clone();
    a.extend((0..spec.params().t).map(|_| Elem(rng.gen_range(0..fs.q()) as u8)));
    ZoomSpec::In { a, b: b.to_vec() }.sample_member(fs, n, spec.dim(), rng)
}

/// Pr[reject | b ∈ T(supp H)], sampling a ∈ supp(H) uniformly and then T
/// uniformly with T(a) = b.
pub fn conditional_rejection(
    f: &EvalTable,
    spec: &TesterSpec,
    b: &[Elem],
    trials: u64,
    seed: u64,
) -> Result<Proportion> {
    let n = f.arity();
    let hits = (0..trials)
        .into_par_iter()
        .map(|i| {
            let t = sample_through(spec, n, b, &mut stream_rng(seed, i))?;
            Ok(u64::from(run_sparse_test(f, &t, spec)?.reject))
        })
        .sum::<Result<u64>>()?;
    Ok(Proportion::new(hits, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub point: Vec<Elem>,
    pub rate: f64,
    pub ci: f64,
    /// Every screened rate was zero, so the point is only the first candidate.
    pub zero_rate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocateOptions {
    /// Uniform tests pooled for screening every point at once.
    pub screen_trials: u64,
    /// Candidates re-estimated directly after screening.
    pub refine: usize,
    pub refine_trials: u64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        LocateOptions {
            screen_trials: 4000,
            refine: 8,
            refine_trials: 300,
        }
    }
}

/// Per-point (rejecting hits, hits) over uniform tests, counting each
/// distinct queried point once per test.
fn screen(f: &EvalTable, spec: &TesterSpec, trials: u64, seed: u64) -> Result<Vec<(u32, u32)>> {
    let fs = spec.field();
    let (n, len) = (f.arity(), f.len());
    let points: Vec<Vec<Elem>> = spec.supp_h_points().collect();
    (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![(0u32, 0u32); len],
            |mut acc, i| {
                let mut rng = stream_rng(seed, i);
                let t = AffineMap::sample_uniform(fs, n, spec.dim(), &mut rng);
                let reject = run_sparse_test(f, &t, spec)?.reject;
                let mut idx: Vec<usize> =
                    points.iter().map(|x| f.index_of(&t.apply(fs, x))).collect();
                idx.sort_unstable();
                idx.dedup();
                for j in idx {
                    acc[j].1 += 1;
                    acc[j].0 += u32::from(reject);
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![(0u32, 0u32); len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
                Ok(a)
            },
        )
}

/// The point with the highest conditional rejection rate. Candidates are
/// screened by pooling uniform tests, then the best few are re-estimated.
/// `candidates` restricts the search to the given table indices.
pub fn find_error_candidate(
    f: &EvalTable,
    spec: &TesterSpec,
    candidates: Option<&[usize]>,
    opts: &LocateOptions,
    seed: u64,
) -> Result<Candidate> {
    let counts = screen(f, spec, opts.screen_trials, seed)?;
    let pool: Vec<usize> = match candidates {
        Some(c) => c.to_vec(),
        None => (0..f.len()).collect(),
    };
    if pool.is_empty() {
        return Err(Error::BadParams("empty candidate set".into()));
    }
    let screened = |j: usize| {
        let (r, h) = counts[j];
        if h == 0 {
            0.0
        } else {
            r as f64 / h as f64
        }
    };
    if pool.iter().all(|&j| counts[j].0 == 0) {
        let index = *pool.iter().min().unwrap();
        return Ok(Candidate {
            index,
            point: f.point(index),
            rate: 0.0,
            ci: 0.0,
            zero_rate: true,
        });
    }
    let mut order = pool.clone();
    order.sort_by(|&x, &y| screened(y).total_cmp(&screened(x)).then(x.cmp(&y)));
    order.truncate(opts.refine.max(1));
    let refined: Vec<(usize, Proportion)> = order
        .iter()
        .map(|&j| {
            Ok((
                j,
                conditional_rejection(f, spec, &f.point(j), opts.refine_trials, seed ^ 0x5eed)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (index, prop) = refined
        .into_iter()
        .max_by(|(i, a), (j, b)| a.rate.total_cmp(&b.rate).then(j.cmp(i)))
        .unwrap();
    Ok(Candidate {
        index,
        point: f.point(index),
        rate: prop.rate,
        ci: prop.ci,
        zero_rate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub index: usize,
    pub old: Elem,
    pub gamma: Elem,
    /// Conditional rejection rate for each value, indexed by element code.
    pub rates: Vec<f64>,
    /// No value does strictly better than the current one.
    pub no_improvement: bool,
}

/// Tries every value at point `index` on a common set of tests through it
/// and returns the minimizer, smallest code on ties.
pub fn best_correction(
    f: &EvalTable,
    spec: &TesterSpec,
    index: usize,
    trials: u64,
    seed: u64,
) -> Result<Correction> {
    let fs = spec.field();
    let q = fs.q();
    let n = f.arity();
    let b = f.point(index);
    let maps: Vec<AffineMap> = (0..trials)
        .map(|i| sample_through(spec, n, &b, &mut stream_rng(seed, i)))
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = (0..q)
        .into_par_iter()
        .map(|g| {
            let mut h = f.clone();
            h.values_mut()[index] = Elem(g as u8);
            let rej = maps
                .iter()
                .map(|t| run_sparse_test(&h, t, spec).map(|r| r.reject as u64))
                .sum::<Result<u64>>()?;
            Ok(rej as f64 / trials as f64)
        })
        .collect::<Result<_>>()?;
    let gamma = (0..q)
        .min_by(|&x, &y| rates[x].total_cmp(&rates[y]).then(x.cmp(&y)))
        .unwrap();
    let old = f.values()[index];
    Ok(Correction {
        index,
        old,
        gamma: Elem(gamma as u8),
        no_improvement: rates[gamma] >= rates[old.idx()],
        rates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub max_steps: usize,
    /// Trials of the seeded overall estimate compared before and after a step.
    pub estimate_trials: u64,
    pub correction_trials: u64,
    pub locate: LocateOptions,
    /// C in the confirmation budget C·q·⌈q^n/|supp H|⌉.
    pub confirm_factor: u64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            max_steps: 8,
            estimate_trials: 2000,
            correction_trials: 200,
            locate: LocateOptions::default(),
            confirm_factor: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionStep {
    pub index: usize,
    pub point: Vec<Elem>,
    pub old: Elem,
    pub new: Elem,
    pub rate_before: f64,
    pub rate_after: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Codeword,
    NoImprovement,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub steps: Vec<CorrectionStep>,
    pub verdict: Verdict,
    pub total_corrections: usize,
    pub final_rate: f64,
    pub confirm_trials: u64,
    /// exact_degree of the final table.
    pub final_degree: usize,
}

pub fn confirm_budget(spec: &TesterSpec, n: usize, factor: u64) -> u64 {
    let q = spec.params().q as u64;
    let points = q.pow(n as u32);
    factor * q * points.div_ceil(spec.supp_h_size() as u64)
}

/// Runs the correction loop on a copy of `f` and returns the final table
/// with its trace. A codeword is claimed only after a confirmation run of
/// accepting tests and an exact degree check.
pub fn decode(
    f: &EvalTable,
    spec: &TesterSpec,
    opts: &DecodeOptions,
    seed: u64,
) -> Result<(EvalTable, CorrectionTrace)> {
    let fs = spec.field();
    let d = spec.params().d;
    let confirm_trials = confirm_budget(spec, f.arity(), opts.confirm_factor);
    let mut work = f.clone();
    let mut steps = Vec::new();
    let mut rate = estimate_rejection(&work, spec, opts.estimate_trials, seed)?.rate;
    let finish = |work: EvalTable, steps: Vec<CorrectionStep>, verdict, rate, fs: &Field| {
        let trace = CorrectionTrace {
            total_corrections: steps.len(),
            steps,
            verdict,
            final_rate: rate,
            confirm_trials,
            final_degree: work.degree(fs),
        };
        Ok((work, trace))
    };
    for step in 0..=opts.max_steps {
        if rate == 0.0 {
            let confirm = estimate_rejection(&work, spec, confirm_trials, seed.wrapping_add(1))?;
            if confirm.rejections == 0 && work.degree(fs) <= d {
                return finish(work, steps, Verdict::Codeword, 0.0, fs);
            }
        }
        if step == opts.max_steps {
            break;
        }
        let round = seed.wrapping_add(1000 * (step as u64 + 1));
        let cand = find_error_candidate(&work, spec, None, &opts.locate, round)?;
        if cand.zero_rate {
            return finish(work, steps, Verdict::NoImprovement, rate, fs);
        }
        let corr = best_correction(&work, spec, cand.index, opts.correction_trials, round + 1)?;
        if corr.no_improvement {
            return finish(work, steps, Verdict::NoImprovement, rate, fs);
        }
        let mut next = work.clone();
        next.values_mut()[cand.index] = corr.gamma;
        let after = estimate_rejection(&next, spec, opts.estimate_trials, seed)?.rate;
        if after >= rate {
            return finish(work, steps, Verdict::NoImprovement, rate, fs);
        }
        steps.push(CorrectionStep {
            index: cand.index,
            point: cand.point,
            old: corr.old,
            new: corr.gamma,
            rate_before: rate,
            rate_after: after,
        });
        work = next;
        rate = after;
    }
    finish(work, steps, Verdict::StepLimit, rate, fs)
}

/// Changes `count` distinct uniform positions to uniform different values.
pub fn plant_errors(
    fs: &Field,
    f: &EvalTable,
    count: usize,
    rng: &mut impl Rng,
) -> (EvalTable, Vec<usize>) {
    let mut out = f.clone();
    let mut idx = sample(rng, f.len(), count.min(f.len())).into_vec();
    idx.sort_unstable();
    for &i in &idx {
        let shift = Elem(rng.gen_range(1..fs.q()) as u8);
        out.values_mut()[i] = fs.add(out.values()[i], shift);
    }
    (out, idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::random_codeword;
    use crate::tester::{build_spec, derive_params};

    fn setup(d: usize) -> (Field, TesterSpec) {
        let f4 = Field::new(2, 2, None).unwrap();
        let spec = build_spec(&f4, derive_params(&f4, d, None).unwrap()).unwrap();
        (f4, spec)
    }

    #[test]
    fn conditional_rates() {
        let (f4, spec) = setup(4);
        let code = random_codeword(&f4, 6, 4, 1);
        let b = code.point(123);
        assert_eq!(
            conditional_rejection(&code, &spec, &b, 100, 1)
                .unwrap()
                .rate,
            0.0
        );
        let (f, idx) = plant_errors(&f4, &code, 1, &mut stream_rng(2, 0));
        let at_err = conditional_rejection(&f, &spec, &f.point(idx[0]), 300, 3).unwrap();
        assert!(at_err.rate > 1.0 - 2.0 / 4.0, "{at_err:?}");
        let clean = (idx[0] + 1) % f.len();
        let at_clean = conditional_rejection(&f, &spec, &f.point(clean), 300, 3).unwrap();
        assert!(at_err.rate - at_clean.rate > 0.3);
    }

    #[test]
    fn locality() {
        let (f4, spec) = setup(4);
        let code = random_codeword(&f4, 6, 4, 4);
        let (f, _) = plant_errors(&f4, &code, 2, &mut stream_rng(5, 0));
        let b = 999;
        let mut g = f.clone();
        g.values_mut()[b] = f4.add(g.values()[b], Elem(1));
        let mut rng = stream_rng(6, 0);
        for _ in 0..200 {
            let t = AffineMap::sample_uniform(&f4, 6, spec.dim(), &mut rng);
            let before = run_sparse_test(&f, &t, &spec).unwrap().reject;
            let after = run_sparse_test(&g, &t, &spec).unwrap().reject;
            if before != after {
                assert!(spec
                    .supp_h_points()
                    .any(|x| f.index_of(&t.apply(&f4, &x)) == b));
            }
        }
    }

    #[test]
    fn locate_single_and_double() {
        let (f4, spec) = setup(4);
        let opts = LocateOptions {
            screen_trials: 1500,
            refine: 4,
            refine_trials: 100,
        };
        for i in 0..4 {
            let code = random_codeword(&f4, 6, 4, 10 + i);
            let (f, idx) = plant_errors(&f4, &code, 1, &mut stream_rng(11, i));
            let c = find_error_candidate(&f, &spec, None, &opts, i).unwrap();
            assert_eq!(c.index, idx[0]);
            let (f, idx) = plant_errors(&f4, &code, 2, &mut stream_rng(12, i));
            let c = find_error_candidate(&f, &spec, None, &opts, i).unwrap();
            assert!(idx.contains(&c.index));
        }
        let code = random_codeword(&f4, 6, 4, 20);
        let c = find_error_candidate(&code, &spec, None, &opts, 0).unwrap();
        assert!(c.zero_rate);
        assert_eq!(c.index, 0);
    }

    #[test]
    fn corrections() {
        let (f4, spec) = setup(4);
        let code = random_codeword(&f4, 6, 4, 30);
        let (f, idx) = plant_errors(&f4, &code, 1, &mut stream_rng(31, 0));
        let c = best_correction(&f, &spec, idx[0], 150, 1).unwrap();
        assert_eq!(c.gamma, code.values()[idx[0]]);
        assert!(!c.no_improvement);
        let (f2, idx2) = plant_errors(&f4, &code, 2, &mut stream_rng(32, 0));
        let clean = (0..f2.len()).find(|j| !idx2.contains(j)).unwrap();
        let c = best_correction(&f2, &spec, clean, 150, 2).unwrap();
        assert_eq!(c.gamma, f2.values()[clean]);
        assert!(c.no_improvement);
    }

    #[test]
    fn decode_round_trip() {
        let (f4, spec) = setup(4);
        let opts = DecodeOptions {
            locate: LocateOptions {
                screen_trials: 1500,
                refine: 4,
                refine_trials: 100,
            },
            estimate_trials: 1000,
            ..DecodeOptions::default()
        };
        let code = random_codeword(&f4, 6, 4, 40);
        let (_, trace) = decode(&code, &spec, &opts, 1).unwrap();
        assert_eq!(
            (trace.verdict.clone(), trace.total_corrections),
            (Verdict::Codeword, 0)
        );
        let (f, _) = plant_errors(&f4, &code, 2, &mut stream_rng(41, 0));
        let (out, trace) = decode(&f, &spec, &opts, 2).unwrap();
        assert_eq!(trace.verdict, Verdict::Codeword);
        assert_eq!(out, code);
        assert!(trace.total_corrections <= 3);
        assert!(trace
            .steps
            .windows(2)
            .all(|w| w[1].rate_before == w[0].rate_after));
        assert!(trace.steps.iter().all(|s| s.rate_after < s.rate_before));
    }

    #[test]
    fn decode_far_function() {
        let (f4, spec) = setup(4);
        let opts = DecodeOptions {
            max_steps: 3,
            locate: LocateOptions {
                screen_trials: 600,
                refine: 2,
                refine_trials: 60,
            },
            estimate_trials: 400,
            correction_trials: 60,
            ..DecodeOptions::default()
        };
        let mut rng = stream_rng(50, 0);
        let f = EvalTable::from_fn(4, 6, |_| Elem(rng.gen_range(0..4)));
        let (out, trace) = decode(&f, &spec, &opts, 3).unwrap();
        assert_ne!(trace.verdict, Verdict::Codeword);
        assert!(out.degree(&f4) > 4);
    }
}
