//! The sparse (s+t)-flat tester.
//!
//! With d + 1 = s(q - q/p) + r, the tester samples T: F^{s+t} → F^n and
//! checks ⟨f∘T, H_e⟩ = 0 for every valid tail exponent e, where
//! H_e = P(x_1..x_p)·…·P(x_{s-p+1}..x_s)·x_{s+1}^{e_1}⋯x_{s+t}^{e_t}.
//! Only points of supp(P)^{s/p} × F^t are queried.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{all_vectors, AffineMap, FlatBasis};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::mpoly::{transform_axis, EvalTable, MPoly};
use crate::stats::{stream_rng, Proportion};

/// Oracle access to a function F_q^n → F_q.
pub trait FunctionOracle: Sync {
    fn arity(&self) -> usize;
    fn query(&self, x: &[Elem]) -> Elem;
}

impl FunctionOracle for EvalTable {
    fn arity(&self) -> usize {
        EvalTable::arity(self)
    }
    #[inline]
    fn query(&self, x: &[Elem]) -> Elem {
        self.get(x)
    }
}

/// A function given by a closure, for arities too large to tabulate.
pub struct CallbackOracle<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(&[Elem]) -> Elem + Sync> CallbackOracle<F> {
    pub fn new(arity: usize, f: F) -> Self {
        CallbackOracle { arity, f }
    }
}

impl<F: Fn(&[Elem]) -> Elem + Sync> FunctionOracle for CallbackOracle<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn query(&self, x: &[Elem]) -> Elem {
        (self.f)(x)
    }
}

/// Wraps an oracle and records every call and every distinct point.
pub struct CountingOracle<'a, O: ?Sized> {
    inner: &'a O,
    calls: AtomicUsize,
    seen: Mutex<HashSet<Vec<Elem>>>,
}

impl<'a, O: FunctionOracle + ?Sized> CountingOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        CountingOracle {
            inner,
            calls: AtomicUsize::new(0),
            seen: Mutex::new(HashSet::new()),
        }
    }
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
    pub fn distinct(&self) -> usize {
        self.seen.lock().unwrap().len()
    }
    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
        self.seen.lock().unwrap().clear();
    }
}

impl<O: FunctionOracle + ?Sized> FunctionOracle for CountingOracle<'_, O> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn query(&self, x: &[Elem]) -> Elem {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.seen.lock().unwrap().insert(x.to_vec());
        self.inner.query(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RMParams {
    pub q: usize,
    pub p: usize,
    pub k: usize,
    pub d: usize,
    pub s: usize,
    pub r: usize,
    pub t: usize,
}

impl RMParams {
    /// q - q/p, the per-variable degree of the head of a canonical monomial.
    pub fn head_exp(&self) -> usize {
        self.q - self.q / self.p
    }
}

/// Splits d + 1 = s(q - q/p) + r with p | s and 0 < r ≤ p(q - q/p).
pub fn derive_params(fs: &Field, d: usize, t_override: Option<usize>) -> Result<RMParams> {
    let (q, p, k) = (fs.q(), fs.p() as usize, fs.k() as usize);
    let block = p * (q - q / p);
    let blocks = d / block;
    let s = blocks * p;
    let r = d + 1 - blocks * block;
    let min_t = p + 2;
    let t = match t_override {
        Some(t) if t < min_t => return Err(Error::BadT { t, min: min_t }),
        Some(t) => t,
        None => min_t,
    };
    Ok(RMParams {
        q,
        p,
        k,
        d,
        s,
        r,
        t,
    })
}

/// P = Σ_{I ⊆ [p-1]} (-1)^{|I|+1} (x_I + x_p)^{q-1} / (x_1⋯x_{p-1}).
pub fn build_p(fs: &Field) -> Result<MPoly> {
    let p = fs.p() as usize;
    let q = fs.q();
    let var = |i: usize| {
        let mut e = vec![0u64; p];
        e[i] = 1;
        MPoly::monomial(fs, &e, Elem::ONE)
    };
    let mut num = MPoly::zero(p);
    for mask in 0u32..(1 << (p - 1)) {
        let mut lin = var(p - 1);
        for i in 0..p - 1 {
            if mask >> i & 1 == 1 {
                lin = lin.add(fs, &var(i))?;
            }
        }
        let sign = if mask.count_ones() % 2 == 1 {
            Elem::ONE
        } else {
            fs.neg(Elem::ONE)
        };
        num = num.add(fs, &lin.pow(fs, (q - 1) as u32).scale(fs, sign))?;
    }
    let mut terms = Vec::with_capacity(num.num_terms());
    for (e, c) in num.terms() {
        if e[..p - 1].contains(&0) {
            return Err(Error::NotDivisible);
        }
        let mut e: Vec<u64> = e.iter().map(|&a| a as u64).collect();
        for a in e.iter_mut().take(p - 1) {
            *a -= 1;
        }
        terms.push((e, c));
    }
    Ok(MPoly::from_terms(fs, p, terms))
}

/// Everything the sparse test needs, fixed once per (field, d, t).
#[derive(Debug, Clone)]
pub struct TesterSpec {
    field: Arc<Field>,
    params: RMParams,
    p_poly: MPoly,
    p_support: Vec<(Vec<Elem>, Elem)>,
    head: Vec<(Vec<Elem>, Elem)>,
    valid_exps: Vec<Vec<u8>>,
    valid_mask: Vec<bool>,
    power: Vec<Elem>,
}

pub fn build_spec(fs: &Field, params: RMParams) -> Result<TesterSpec> {
    TesterSpec::new(Arc::new(fs.clone()), params)
}

impl TesterSpec {
    pub fn new(field: Arc<Field>, params: RMParams) -> Result<TesterSpec> {
        let fs = &*field;
        if params.q != fs.q() || params.p != fs.p() as usize {
            return Err(Error::BadParams("parameters do not match the field".into()));
        }
        let p_poly = build_p(fs)?;
        let table = p_poly.tabulate(fs);
        let p_support: Vec<(Vec<Elem>, Elem)> = (0..table.len())
            .filter(|&i| !table.values()[i].is_zero())
            .map(|i| (table.point(i), table.values()[i]))
            .collect();
        let mut head: Vec<(Vec<Elem>, Elem)> = vec![(Vec::new(), Elem::ONE)];
        for _ in 0..params.s / params.p {
            let mut next = Vec::with_capacity(head.len() * p_support.len());
            for (pt, v) in &head {
                for (blk, w) in &p_support {
                    let mut x = pt.clone();
                    x.extend_from_slice(blk);
                    next.push((x, fs.mul(*v, *w)));
                }
            }
            head = next;
        }
        let q = params.q;
        let limit = params.t * (q - 1) - params.r;
        let mut valid_exps = Vec::new();
        let mut valid_mask = vec![false; q.pow(params.t as u32)];
        for (i, e) in all_vectors(q, params.t).enumerate() {
            if e.iter().map(|v| v.idx()).sum::<usize>() <= limit {
                valid_exps.push(e.iter().map(|v| v.0).collect());
                valid_mask[i] = true;
            }
        }
        Ok(TesterSpec {
            power: fs.power_table(),
            field,
            params,
            p_poly,
            p_support,
            head,
            valid_exps,
            valid_mask,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn field_arc(&self) -> Arc<Field> {
        self.field.clone()
    }
    pub fn params(&self) -> &RMParams {
        &self.params
    }
    pub fn p_poly(&self) -> &MPoly {
        &self.p_poly
    }
    pub fn p_support(&self) -> &[(Vec<Elem>, Elem)] {
        &self.p_support
    }
    /// Points of supp(P)^{s/p} with the product of the block values.
    pub fn head(&self) -> &[(Vec<Elem>, Elem)] {
        &self.head
    }
    pub fn valid_exps(&self) -> &[Vec<u8>] {
        &self.valid_exps
    }
    pub fn is_valid_exp(&self, e: &[u8]) -> bool {
        let idx = e
            .iter()
            .fold(0usize, |acc, &a| acc * self.params.q + a as usize);
        self.valid_mask.get(idx).copied().unwrap_or(false)
    }
    /// s + t, the domain dimension of the sampled maps.
    pub fn dim(&self) -> usize {
        self.params.s + self.params.t
    }
    pub fn tail_size(&self) -> usize {
        self.params.q.pow(self.params.t as u32)
    }
    pub fn supp_h_size(&self) -> usize {
        self.head.len() * self.tail_size()
    }

    /// Every point of supp(P)^{s/p} × F^t.
    pub fn supp_h_points(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        self.head.iter().flat_map(move |(a, _)| {
            all_vectors(self.params.q, self.params.t).map(move |b| {
                let mut x = a.clone();
                x.extend_from_slice(&b);
                x
            })
        })
    }

    /// (3q)^{(d+1)/q}·q^t.
    pub fn query_bound(&self) -> f64 {
        let q = self.params.q as f64;
        (3.0 * q).powf((self.params.d + 1) as f64 / q) * q.powi(self.params.t as i32)
    }

    /// H_e as a polynomial in s + t variables.
    pub fn h_poly(&self, e: &[u8]) -> MPoly {
        let fs = &*self.field;
        let mut h = MPoly::constant(0, Elem::ONE);
        for _ in 0..self.params.s / self.params.p {
            h = h.tensor(fs, &self.p_poly);
        }
        let tail: Vec<u64> = e.iter().map(|&a| a as u64).collect();
        h.tensor(fs, &MPoly::monomial(fs, &tail, Elem::ONE))
    }

    /// Σ_b g(b) b^e for every e, by the per-axis power transform.
    fn moments(&self, mut g: Vec<Elem>) -> Vec<Elem> {
        let q = self.params.q;
        for axis in 0..self.params.t {
            transform_axis(&self.field, &mut g, q, self.params.t, axis, &self.power);
        }
        g
    }

    /// Position of the first valid e with a nonzero moment.
    fn first_witness(&self, moments: &[Elem]) -> Option<usize> {
        moments
            .iter()
            .zip(&self.valid_mask)
            .position(|(m, ok)| *ok && !m.is_zero())
    }

    fn exp_of_index(&self, mut idx: usize) -> Vec<u8> {
        let q = self.params.q;
        let mut e = vec![0u8; self.params.t];
        for slot in e.iter_mut().rev() {
            *slot = (idx % q) as u8;
            idx /= q;
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestReport {
    pub reject: bool,
    pub witness: Option<Vec<u8>>,
    /// ⟨f∘T, H_e⟩ at the witness.
    pub witness_value: Option<Elem>,
    pub queries_used: usize,
    pub map: AffineMap,
}

/// Images of head and tail points under T, split as T(a, b) = Ma_head + (M b_tail + c).
pub(crate) struct SplitImages {
    pub head: Vec<Vec<Elem>>,
    pub tail: Vec<Vec<Elem>>,
}

pub(crate) fn split_images(
    fs: &Field,
    t: &AffineMap,
    head: &[(Vec<Elem>, Elem)],
    s: usize,
    tail_dim: usize,
) -> SplitImages {
    let n = t.n();
    let head_img = head
        .iter()
        .map(|(a, _)| {
            (0..n)
                .map(|i| {
                    fs.sum(
                        a.iter()
                            .enumerate()
                            .map(|(j, aj)| fs.mul(t.entry(i, j), *aj)),
                    )
                })
                .collect()
        })
        .collect();
    let tail_img = all_vectors(fs.q(), tail_dim)
        .map(|b| {
            (0..n)
                .map(|i| {
                    let mut acc = t.shift()[i];
                    for (j, bj) in b.iter().enumerate() {
                        acc = fs.add(acc, fs.mul(t.entry(i, s + j), *bj));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    SplitImages {
        head: head_img,
        tail: tail_img,
    }
}

/// g(b) = Σ_a w_a f(T(a, b)) for every tail point b.
pub(crate) fn aggregate<O: FunctionOracle + ?Sized>(
    fs: &Field,
    f: &O,
    imgs: &SplitImages,
    weights: &[(Vec<Elem>, Elem)],
) -> Vec<Elem> {
    let n = f.arity();
    let mut y = vec![Elem::ZERO; n];
    imgs.tail
        .iter()
        .map(|tb| {
            let mut acc = Elem::ZERO;
            for (ha, (_, w)) in imgs.head.iter().zip(weights) {
                for i in 0..n {
                    y[i] = fs.add(ha[i], tb[i]);
                }
                acc = fs.add(acc, fs.mul(*w, f.query(&y)));
            }
            acc
        })
        .collect()
}

fn check_map<O: FunctionOracle + ?Sized>(f: &O, t: &AffineMap, dim: usize) -> Result<()> {
    if t.n() != f.arity() || t.l() != dim {
        return Err(Error::ShapeMismatch(format!(
            "map is {}x{}, need {}x{}",
            t.n(),
            t.l(),
            f.arity(),
            dim
        )));
    }
    Ok(())
}

pub fn run_sparse_test<O: FunctionOracle + ?Sized>(
    f: &O,
    t: &AffineMap,
    spec: &TesterSpec,
) -> Result<TestReport> {
    check_map(f, t, spec.dim())?;
    let fs = spec.field();
    let imgs = split_images(fs, t, &spec.head, spec.params.s, spec.params.t);
    let g = aggregate(fs, f, &imgs, &spec.head);
    let m = spec.moments(g);
    let w = spec.first_witness(&m);
    Ok(TestReport {
        reject: w.is_some(),
        witness: w.map(|i| spec.exp_of_index(i)),
        witness_value: w.map(|i| m[i]),
        queries_used: spec.supp_h_size(),
        map: t.clone(),
    })
}

/// Accept iff deg(f|_U) ≤ d.
pub fn run_flat_test(fs: &Field, f: &EvalTable, u: &FlatBasis, d: usize) -> Result<bool> {
    if u.ambient() != f.arity() {
        return Err(Error::ShapeMismatch(format!(
            "flat lives in F^{}, function in F^{}",
            u.ambient(),
            f.arity()
        )));
    }
    Ok(f.compose_affine(fs, &u.as_map())?.degree(fs) <= d)
}

/// f̃(β) = Σ_{α ∈ F^s} f(A(α, β))·∏P(α), for A: F^{s+ℓ} → F^n.
pub fn tilde_f<O: FunctionOracle + ?Sized>(
    f: &O,
    a: &AffineMap,
    spec: &TesterSpec,
) -> Result<EvalTable> {
    let s = spec.params.s;
    if a.n() != f.arity() || a.l() < s {
        return Err(Error::ShapeMismatch(format!("map is {}x{}", a.n(), a.l())));
    }
    let l = a.l() - s;
    let fs = spec.field();
    let imgs = split_images(fs, a, &spec.head, s, l);
    let g = aggregate(fs, f, &imgs, &spec.head);
    EvalTable::new(spec.params.q, l, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionEstimate {
    pub rate: f64,
    pub ci: f64,
    pub rejections: u64,
    pub trials: u64,
    pub queries: usize,
    /// Witness exponent → number of trials that reported it.
    pub witnesses: BTreeMap<String, u64>,
}

/// Monte-Carlo rejection rate over uniform T ∈ T_{n,s+t}. Trial i uses RNG
/// stream i of `seed`, so the result does not depend on thread count.
pub fn estimate_rejection<O: FunctionOracle + ?Sized>(
    f: &O,
    spec: &TesterSpec,
    trials: u64,
    seed: u64,
) -> Result<RejectionEstimate> {
    let n = f.arity();
    let reports: Vec<TestReport> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let t = AffineMap::sample_uniform(spec.field(), n, spec.dim(), &mut rng);
            run_sparse_test(f, &t, spec)
        })
        .collect::<Result<_>>()?;
    let mut witnesses = BTreeMap::new();
    let mut rejections = 0;
    for r in &reports {
        if let Some(w) = &r.witness {
            rejections += 1;
            let key = w
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",");
            *witnesses.entry(key).or_insert(0) += 1;
        }
    }
    let prop = Proportion::new(rejections, trials);
    Ok(RejectionEstimate {
        rate: prop.rate,
        ci: prop.ci,
        rejections,
        trials,
        queries: spec.supp_h_size(),
        witnesses,
    })
}
