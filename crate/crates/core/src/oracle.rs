//! Brute-force ground truth: exact degree, distance to the code, codeword
//! enumeration, and the canonical-monomial reduction.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::gf::{lucas_binom, p_shadow_leq, Elem, Field};
use crate::mpoly::{EvalTable, MPoly};
use crate::stats::{random_elem, stream_rng};
use crate::tester::{RMParams, TesterSpec};

pub const DEFAULT_BUDGET: u128 = 1 << 24;

pub fn exact_degree(fs: &Field, f: &EvalTable) -> usize {
    f.degree(fs)
}

/// Exponent vectors in {0..q-1}^n of total degree ≤ d, in lexicographic order.
pub fn monomials_up_to(q: usize, n: usize, d: usize) -> Vec<Vec<u8>> {
    fn rec(q: usize, left: usize, budget: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for a in 0..q.min(budget + 1) {
            cur.push(a as u8);
            rec(q, left - 1, budget - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(q, n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// The monomial basis of RM[n, q, d] with each monomial tabulated.
#[derive(Debug, Clone)]
pub struct CodeBasis {
    pub n: usize,
    pub d: usize,
    pub monomials: Vec<Vec<u8>>,
    pub tables: Vec<EvalTable>,
}

impl CodeBasis {
    pub fn new(fs: &Field, n: usize, d: usize) -> CodeBasis {
        let monomials = monomials_up_to(fs.q(), n, d);
        let tables = monomials
            .iter()
            .map(|e| {
                let e: Vec<u64> = e.iter().map(|&a| a as u64).collect();
                MPoly::monomial(fs, &e, Elem::ONE).tabulate(fs)
            })
            .collect();
        CodeBasis {
            n,
            d,
            monomials,
            tables,
        }
    }

    /// q^{#monomials}, saturating.
    pub fn size(&self, q: usize) -> u128 {
        u32::try_from(self.monomials.len())
            .ok()
            .and_then(|m| (q as u128).checked_pow(m))
            .unwrap_or(u128::MAX)
    }

    pub fn check_budget(&self, q: usize, budget: u128) -> Result<()> {
        let needed = self.size(q);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        Ok(())
    }

    pub fn poly(&self, fs: &Field, coeffs: &[Elem]) -> MPoly {
        let terms = self
            .monomials
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e.iter().map(|&a| a as u64).collect(), *c));
        MPoly::from_terms(fs, self.n, terms)
    }

    fn combine(&self, fs: &Field, coeffs: &[Elem]) -> EvalTable {
        let q = fs.q();
        let mut out = EvalTable::zeros(q, self.n);
        for (c, t) in coeffs.iter().zip(&self.tables) {
            if !c.is_zero() {
                for (o, v) in out.values_mut().iter_mut().zip(t.values()) {
                    *o = fs.add(*o, fs.mul(*c, *v));
                }
            }
        }
        out
    }

    /// Visits every codeword whose coefficients on monomials `free..` equal
    /// `fixed`, changing one base-p digit of one coefficient per step.
    fn gray_walk(
        &self,
        fs: &Field,
        free: usize,
        fixed: &[Elem],
        visit: &mut impl FnMut(&[Elem], &EvalTable),
    ) {
        let (p, k) = (fs.p() as usize, fs.k() as usize);
        let mut coeffs = vec![Elem::ZERO; free];
        coeffs.extend_from_slice(fixed);
        let mut table = self.combine(fs, &coeffs);
        visit(&coeffs, &table);
        let mut counter = vec![0usize; free * k];
        while let Some(j) = counter.iter().position(|&c| c != p - 1) {
            counter[..j].iter_mut().for_each(|c| *c = 0);
            counter[j] += 1;
            let (m, digit) = (j / k, j % k);
            let step = Elem(p.pow(digit as u32) as u8);
            coeffs[m] = fs.add(coeffs[m], step);
            for (o, v) in table.values_mut().iter_mut().zip(self.tables[m].values()) {
                *o = fs.add(*o, fs.mul(step, *v));
            }
            visit(&coeffs, &table);
        }
    }
}

/// Calls `visit(coefficients, table)` once for every codeword of RM[n, q, d].
pub fn for_each_codeword(
    fs: &Field,
    n: usize,
    d: usize,
    budget: u128,
    mut visit: impl FnMut(&[Elem], &EvalTable),
) -> Result<()> {
    let basis = CodeBasis::new(fs, n, d);
    basis.check_budget(fs.q(), budget)?;
    basis.gray_walk(fs, basis.monomials.len(), &[], &mut visit);
    Ok(())
}

pub fn enumerate_codewords(fs: &Field, n: usize, d: usize, budget: u128) -> Result<Vec<EvalTable>> {
    let mut out = Vec::new();
    for_each_codeword(fs, n, d, budget, |_, t| out.push(t.clone()))?;
    Ok(out)
}

/// A uniform codeword as a polynomial.
pub fn random_codeword_poly(fs: &Field, n: usize, d: usize, rng: &mut impl Rng) -> MPoly {
    let terms: Vec<(Vec<u64>, Elem)> = monomials_up_to(fs.q(), n, d)
        .into_iter()
        .map(|e| (e.into_iter().map(u64::from).collect(), random_elem(fs, rng)))
        .collect();
    MPoly::from_terms(fs, n, terms)
}

pub fn random_codeword(fs: &Field, n: usize, d: usize, seed: u64) -> EvalTable {
    random_codeword_poly(fs, n, d, &mut stream_rng(seed, 0)).tabulate(fs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub errors: usize,
    pub points: usize,
    pub nearest: EvalTable,
    /// Coefficients of `nearest` on the monomials of degree ≤ d, lexicographic.
    pub coeffs: Vec<Elem>,
    pub ties: u64,
}

impl DistanceResult {
    pub fn delta(&self) -> f64 {
        self.errors as f64 / self.points as f64
    }
}

struct Best {
    errors: usize,
    coeffs: Vec<Elem>,
    ties: u64,
}

impl Best {
    fn offer(&mut self, errors: usize, coeffs: &[Elem]) {
        if errors < self.errors {
            *self = Best {
                errors,
                coeffs: coeffs.to_vec(),
                ties: 1,
            };
        } else if errors == self.errors {
            self.ties += 1;
            if coeffs < self.coeffs.as_slice() {
                self.coeffs = coeffs.to_vec();
            }
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if other.errors < self.errors {
            return other;
        }
        if other.errors == self.errors {
            self.ties += other.ties;
            if other.coeffs < self.coeffs {
                self.coeffs = other.coeffs;
            }
        }
        self
    }
}

/// Exact δ_d(f) by exhaustive search, with ties broken toward the
/// lexicographically smallest coefficient vector.
pub fn distance_to_code(
    fs: &Field,
    f: &EvalTable,
    d: usize,
    budget: u128,
) -> Result<DistanceResult> {
    let basis = CodeBasis::new(fs, f.arity(), d);
    basis.check_budget(fs.q(), budget)?;
    let q = fs.q();
    let total = basis.monomials.len();
    let mut fixed_len = 0;
    while fixed_len < total && q.pow(fixed_len as u32) < 64 {
        fixed_len += 1;
    }
    let free = total - fixed_len;
    let chunks = q.pow(fixed_len as u32);
    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut fixed = vec![Elem::ZERO; fixed_len];
            let mut c = chunk;
            for slot in fixed.iter_mut().rev() {
                *slot = Elem((c % q) as u8);
                c /= q;
            }
            let mut best = Best {
                errors: usize::MAX,
                coeffs: Vec::new(),
                ties: 0,
            };
            basis.gray_walk(fs, free, &fixed, &mut |coeffs, table| {
                let errors = table
                    .values()
                    .iter()
                    .zip(f.values())
                    .filter(|(a, b)| a != b)
                    .count();
                best.offer(errors, coeffs);
            });
            best
        })
        .reduce(
            || Best {
                errors: usize::MAX,
                coeffs: Vec::new(),
                ties: 0,
            },
            Best::merge,
        );
    Ok(DistanceResult {
        errors: best.errors,
        points: f.len(),
        nearest: basis.combine(fs, &best.coeffs),
        coeffs: best.coeffs,
        ties: best.ties,
    })
}

/// ∏_{i≤s} x_i^{q-q/p} · ∏_j x_{s+j}^{e_j} in `n` variables.
pub fn canonical_monomial(fs: &Field, params: &RMParams, e_tail: &[u8], n: usize) -> Result<MPoly> {
    let e = canonical_exponent(params, e_tail, n)?;
    let e: Vec<u64> = e.into_iter().map(u64::from).collect();
    Ok(MPoly::monomial(fs, &e, Elem::ONE))
}

fn canonical_exponent(params: &RMParams, e_tail: &[u8], n: usize) -> Result<Vec<u8>> {
    let (s, t, q) = (params.s, params.t, params.q);
    if e_tail.len() != t {
        return Err(Error::BadTail(format!(
            "tail has {} entries, need {t}",
            e_tail.len()
        )));
    }
    if e_tail.iter().any(|&a| a as usize >= q) {
        return Err(Error::BadTail(format!("tail entries must be < {q}")));
    }
    let sum: usize = e_tail.iter().map(|&a| a as usize).sum();
    if sum < params.r {
        return Err(Error::BadTail(format!(
            "tail degree {sum} is below r = {}",
            params.r
        )));
    }
    if n < s + t {
        return Err(Error::BadArity(format!(
            "need at least s+t = {} variables, got {n}",
            s + t
        )));
    }
    let mut e = vec![params.head_exp() as u8; s];
    e.extend_from_slice(e_tail);
    e.resize(n, 0);
    Ok(e)
}

/// e with m moved from e_j to e_i; needs m ≤_p e_j so that C(e_j, m) ≠ 0 mod p.
pub fn monomial_shift_step(fs: &Field, e: &[u8], i: usize, j: usize, m: u32) -> Result<Vec<u8>> {
    let p = fs.p();
    if i == j || i >= e.len() || j >= e.len() {
        return Err(Error::BadArity(format!(
            "bad shift indices {i}, {j} for {} variables",
            e.len()
        )));
    }
    if !p_shadow_leq(p, m as u64, e[j] as u64) {
        return Err(Error::NotInShadow { m, e: e[j] as u32 });
    }
    debug_assert_ne!(lucas_binom(p, e[j] as u64, m as u64), 0);
    let mut out = e.to_vec();
    out[j] -= m as u8;
    out[i] = crate::mpoly::reduce_exp(e[i] as u64 + m as u64, fs.q());
    Ok(out)
}

/// Checks that x^{shifted} occurs in x^e ∘ (x_j ↦ x_i + x_j) by interpolation.
pub fn verify_shift(fs: &Field, e: &[u8], i: usize, j: usize, shifted: &[u8]) -> bool {
    let n = e.len();
    let mono = MPoly::monomial(
        fs,
        &e.iter().map(|&a| a as u64).collect::<Vec<_>>(),
        Elem::ONE,
    )
    .tabulate(fs);
    let mut t = AffineMap::identity_padded(n, n);
    t.set_entry(j, i, Elem::ONE);
    let composed = mono.compose_affine(fs, &t).expect("square map");
    !composed.interpolate(fs).coeff(shifted).is_zero()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReductionStep {
    /// Keep the shortest prefix of degree > d.
    Truncate { len: usize, after: Vec<u8> },
    /// Move m from coordinate j to coordinate i.
    Shift {
        i: usize,
        j: usize,
        m: u32,
        after: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub start: Vec<u8>,
    pub steps: Vec<ReductionStep>,
    pub canonical: Vec<u8>,
    pub tail: Vec<u8>,
}

fn lowest_digit_power(p: usize, a: usize) -> usize {
    let mut pw = 1;
    while (a / pw).is_multiple_of(p) {
        pw *= p;
    }
    pw
}

/// Reduces a monomial of degree > d to a canonical monomial by prefix
/// truncation and monomial shifts, each of which keeps membership in any
/// affine-invariant family containing x^e.
pub fn reduce_to_canonical(fs: &Field, params: &RMParams, e: &[u8]) -> Result<Reduction> {
    let (s, t, d, q, p) = (params.s, params.t, params.d, params.q, params.p);
    let n = e.len();
    let h = params.head_exp();
    if n < s + t {
        return Err(Error::BadArity(format!(
            "need at least s+t = {} variables, got {n}",
            s + t
        )));
    }
    let total: usize = e.iter().map(|&a| a as usize).sum();
    if total <= d {
        return Err(Error::BadParams(format!(
            "monomial degree {total} is not above d = {d}"
        )));
    }
    let mut steps = Vec::new();
    let mut cur = e.to_vec();
    let mut acc = 0;
    let len = cur.iter().position(|&a| {
        acc += a as usize;
        acc > d
    });
    let len = len.expect("degree above d") + 1;
    if len < n {
        cur[len..].iter_mut().for_each(|a| *a = 0);
        steps.push(ReductionStep::Truncate {
            len,
            after: cur.clone(),
        });
    }
    let mut shift = |cur: &mut Vec<u8>, i: usize, j: usize, m: usize| -> Result<()> {
        *cur = monomial_shift_step(fs, cur, i, j, m as u32)?;
        steps.push(ReductionStep::Shift {
            i,
            j,
            m: m as u32,
            after: cur.clone(),
        });
        Ok(())
    };
    // fill every head coordinate up to h
    while let Some(i) = (0..s).find(|&i| (cur[i] as usize) < h) {
        if let Some(j) = (s..n).find(|&j| cur[j] > 0) {
            let m = lowest_digit_power(p, cur[j] as usize);
            shift(&mut cur, i, j, m)?;
        } else if let Some(j) = (0..s).find(|&j| cur[j] as usize > h) {
            let m = lowest_digit_power(p, cur[j] as usize);
            shift(&mut cur, i, j, m)?;
        } else {
            unreachable!("degree above d leaves a donor");
        }
    }
    // move head excess and anything past s+t into the tail
    loop {
        let donor = (0..s)
            .find(|&j| cur[j] as usize > h)
            .or_else(|| (s + t..n).find(|&j| cur[j] > 0));
        let Some(j) = donor else { break };
        let m = lowest_digit_power(p, cur[j] as usize);
        let i = (s..s + t)
            .find(|&i| cur[i] as usize + m < q)
            .ok_or_else(|| Error::BadParams("tail has no room".into()))?;
        shift(&mut cur, i, j, m)?;
    }
    let tail = cur[s..s + t].to_vec();
    Ok(Reduction {
        start: e.to_vec(),
        steps,
        canonical: cur,
        tail,
    })
}

/// Checks every step of a reduction: truncations by p-shadow, shifts by
/// interpolating the shifted monomial.
pub fn verify_reduction(fs: &Field, red: &Reduction) -> bool {
    let mut cur = red.start.clone();
    for step in &red.steps {
        match step {
            ReductionStep::Truncate { after, .. } => {
                if !cur
                    .iter()
                    .zip(after)
                    .all(|(&b, &a)| p_shadow_leq(fs.p(), a as u64, b as u64))
                {
                    return false;
                }
                cur = after.clone();
            }
            ReductionStep::Shift { i, j, after, .. } => {
                if !verify_shift(fs, &cur, *i, *j, after) {
                    return false;
                }
                cur = after.clone();
            }
        }
    }
    cur == red.canonical
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectingBasis {
    pub map: AffineMap,
    pub value: Elem,
    pub trials: u64,
}

/// ⟨g∘T, P⟩ for g on F^p.
pub fn detector_inner(fs: &Field, g: &EvalTable, t: &AffineMap, spec: &TesterSpec) -> Elem {
    fs.sum(
        spec.p_support()
            .iter()
            .map(|(x, w)| fs.mul(*w, g.get(&t.apply(fs, x)))),
    )
}

/// Searches full-rank T ∈ T_{p,p} for ⟨g∘T, P⟩ ≠ 0.
pub fn find_rejecting_basis(
    fs: &Field,
    g: &EvalTable,
    spec: &TesterSpec,
    budget: u64,
    rng: &mut impl Rng,
) -> Result<RejectingBasis> {
    let p = fs.p() as usize;
    if g.arity() != p {
        return Err(Error::ArityMismatch {
            expected: p,
            found: g.arity(),
        });
    }
    for trial in 1..=budget {
        let t = AffineMap::sample_full_rank(fs, p, p, rng);
        let value = detector_inner(fs, g, &t, spec);
        if !value.is_zero() {
            return Ok(RejectingBasis {
                map: t,
                value,
                trials: trial,
            });
        }
    }
    Err(Error::NotFound {
        trials: budget as usize,
    })
}

pub fn default_basis_budget(q: usize) -> u64 {
    100 * q as u64
}

/// Fraction of uniform full-rank T with ⟨g∘T, P⟩ ≠ 0.
pub fn rejecting_basis_rate(
    fs: &Field,
    g: &EvalTable,
    spec: &TesterSpec,
    trials: u64,
    seed: u64,
) -> f64 {
    let p = fs.p() as usize;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let t = AffineMap::sample_full_rank(fs, p, p, &mut stream_rng(seed, i));
            !detector_inner(fs, g, &t, spec).is_zero()
        })
        .count();
    hits as f64 / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tester::{build_spec, derive_params, run_sparse_test};

    fn gf(p: u32, k: u32) -> Field {
        Field::new(p, k, None).unwrap()
    }

    #[test]
    fn degree_examples() {
        let f4 = gf(2, 2);
        let f = MPoly::monomial(&f4, &[2, 2], Elem::ONE).tabulate(&f4);
        assert_eq!(exact_degree(&f4, &f), 4);
        assert_eq!(exact_degree(&f4, &EvalTable::zeros(4, 3)), 0);
    }

    #[test]
    fn codeword_counts() {
        let f2 = gf(2, 1);
        let f3 = gf(3, 1);
        assert_eq!(
            enumerate_codewords(&f2, 2, 1, DEFAULT_BUDGET)
                .unwrap()
                .len(),
            8
        );
        let all = enumerate_codewords(&f3, 1, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(all.len(), 27);
        let distinct: std::collections::HashSet<_> =
            all.iter().map(|t| t.values().to_vec()).collect();
        assert_eq!(distinct.len(), 27);
        assert!(all.iter().all(|t| t.degree(&f3) <= 2));
        let err = enumerate_codewords(&gf(2, 2), 3, 9, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn gray_walk_matches_coefficients() {
        let f4 = gf(2, 2);
        let basis = CodeBasis::new(&f4, 2, 2);
        let mut seen = 0;
        basis.gray_walk(&f4, basis.monomials.len(), &[], &mut |c, t| {
            seen += 1;
            assert_eq!(basis.poly(&f4, c).tabulate(&f4), *t);
        });
        assert_eq!(seen, 4usize.pow(6));
    }

    #[test]
    fn distance_examples() {
        let f2 = gf(2, 1);
        let mut rng = stream_rng(3, 0);
        for _ in 0..10 {
            let c = random_codeword_poly(&f2, 3, 1, &mut rng).tabulate(&f2);
            let r = distance_to_code(&f2, &c, 1, DEFAULT_BUDGET).unwrap();
            assert_eq!((r.errors, r.ties), (0, 1));
            assert_eq!(r.nearest, c);
            let mut f = c.clone();
            let idx = rng.gen_range(0..8);
            f.values_mut()[idx] = f2.add(f.values()[idx], Elem::ONE);
            let r = distance_to_code(&f2, &f, 1, DEFAULT_BUDGET).unwrap();
            assert_eq!(r.errors, 1);
            assert_eq!(r.nearest, c);
            assert!(r.nearest.degree(&f2) <= 1);
        }
    }

    #[test]
    fn distance_ties_pick_smallest() {
        let f2 = gf(2, 1);
        // x1x2x3 is at distance 1 from 0 and from several others
        let f = MPoly::monomial(&f2, &[1, 1, 1], Elem::ONE).tabulate(&f2);
        let r = distance_to_code(&f2, &f, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.errors, 1);
        let mut mins = Vec::new();
        for_each_codeword(&f2, 3, 1, DEFAULT_BUDGET, |c, t| {
            if t.hamming(&f).unwrap() == 1 {
                mins.push(c.to_vec());
            }
        })
        .unwrap();
        assert_eq!(r.ties, mins.len() as u64);
        assert_eq!(r.coeffs, *mins.iter().min().unwrap());
    }

    #[test]
    fn canonical_examples() {
        let f4 = gf(2, 2);
        let params = derive_params(&f4, 4, None).unwrap();
        let m = canonical_monomial(&f4, &params, &[1, 0, 0, 0], 6).unwrap();
        assert_eq!(m, MPoly::monomial(&f4, &[2, 2, 1, 0, 0, 0], Elem::ONE));
        assert_eq!(m.total_degree(), 5);
        let spec = build_spec(&f4, params).unwrap();
        let id = AffineMap::identity_padded(6, 6);
        assert!(
            run_sparse_test(&m.tabulate(&f4), &id, &spec)
                .unwrap()
                .reject
        );
        let p3 = derive_params(&f4, 3, None).unwrap();
        assert!(matches!(
            canonical_monomial(&f4, &p3, &[1, 1, 1, 0], 6),
            Err(Error::BadTail(_))
        ));
    }

    #[test]
    fn shift_examples() {
        let f4 = gf(2, 2);
        assert_eq!(
            monomial_shift_step(&f4, &[0, 3, 1], 0, 1, 1).unwrap(),
            vec![1, 2, 1]
        );
        assert_eq!(
            monomial_shift_step(&f4, &[0, 1], 0, 1, 2).unwrap_err(),
            Error::NotInShadow { m: 2, e: 1 }
        );
        assert!(verify_shift(&f4, &[0, 3, 1], 0, 1, &[1, 2, 1]));
        assert!(!verify_shift(&f4, &[0, 1, 0], 0, 1, &[2, 0, 0]));
    }

    #[test]
    fn reduction_reaches_canonical() {
        let f4 = gf(2, 2);
        let params = derive_params(&f4, 4, None).unwrap();
        let spec = build_spec(&f4, params).unwrap();
        let id = AffineMap::identity_padded(6, 6);
        let mut rng = stream_rng(5, 0);
        let mut done = 0;
        while done < 20 {
            let e: Vec<u8> = (0..6).map(|_| rng.gen_range(0..4)).collect();
            if e.iter().map(|&a| a as usize).sum::<usize>() <= 4 {
                continue;
            }
            done += 1;
            let red = reduce_to_canonical(&f4, &params, &e).unwrap();
            assert!(verify_reduction(&f4, &red));
            let m = canonical_monomial(&f4, &params, &red.tail, 6).unwrap();
            assert_eq!(
                m,
                MPoly::monomial(
                    &f4,
                    &red.canonical.iter().map(|&a| a as u64).collect::<Vec<_>>(),
                    Elem::ONE
                )
            );
            assert!(
                run_sparse_test(&m.tabulate(&f4), &id, &spec)
                    .unwrap()
                    .reject
            );
        }
    }

    #[test]
    fn rejecting_basis() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 4, None).unwrap()).unwrap();
        let g = MPoly::monomial(&f4, &[3, 3], Elem::ONE).tabulate(&f4);
        let found = find_rejecting_basis(&f4, &g, &spec, 400, &mut stream_rng(1, 0)).unwrap();
        assert!(found.map.is_full_rank(&f4));
        assert_eq!(detector_inner(&f4, &g, &found.map, &spec), found.value);
        assert!(!found.value.is_zero());
        let low = MPoly::monomial(&f4, &[3, 0], Elem::ONE).tabulate(&f4);
        assert!(low.degree(&f4) < 4);
        assert_eq!(
            find_rejecting_basis(&f4, &low, &spec, 400, &mut stream_rng(1, 0)).unwrap_err(),
            Error::NotFound { trials: 400 }
        );
        assert!(rejecting_basis_rate(&f4, &g, &spec, 1000, 2) >= 1.0 / 8.0);
    }

    #[test]
    fn codewords_pass_tester() {
        let f2 = gf(2, 1);
        let params = derive_params(&f2, 2, None).unwrap();
        let spec = build_spec(&f2, params).unwrap();
        let mut rng = stream_rng(8, 0);
        for_each_codeword(&f2, 4, 2, DEFAULT_BUDGET, |_, c| {
            for _ in 0..5 {
                let t = AffineMap::sample_uniform(&f2, 4, spec.dim(), &mut rng);
                assert!(!run_sparse_test(c, &t, &spec).unwrap().reject);
            }
        })
        .unwrap();
    }
}
