//! Reduced multivariate polynomials over F_q and their evaluation tables.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};

/// Reduces an exponent using x^q = x: 0 stays 0, a ≥ 1 maps into 1..=q-1.
pub fn reduce_exp(a: u64, q: usize) -> u8 {
    if a == 0 {
        0
    } else {
        (((a - 1) % (q as u64 - 1)) + 1) as u8
    }
}

/// Sparse reduced polynomial: exponent vector → nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MPoly {
    arity: usize,
    terms: BTreeMap<Vec<u8>, Elem>,
}

impl MPoly {
    pub fn zero(arity: usize) -> MPoly {
        MPoly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: Elem) -> MPoly {
        let mut p = MPoly::zero(arity);
        if !c.is_zero() {
            p.terms.insert(vec![0; arity], c);
        }
        p
    }

    pub fn monomial(fs: &Field, exps: &[u64], coeff: Elem) -> MPoly {
        MPoly::from_terms(fs, exps.len(), [(exps.to_vec(), coeff)])
    }

    /// Builds a polynomial from unreduced terms, combining like terms.
    pub fn from_terms<I>(fs: &Field, arity: usize, terms: I) -> MPoly
    where
        I: IntoIterator<Item = (Vec<u64>, Elem)>,
    {
        let mut p = MPoly::zero(arity);
        for (e, c) in terms {
            assert_eq!(e.len(), arity, "term arity");
            let red: Vec<u8> = e.iter().map(|&a| reduce_exp(a, fs.q())).collect();
            p.add_term(fs, red, c);
        }
        p
    }

    fn add_term(&mut self, fs: &Field, exps: Vec<u8>, c: Elem) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = fs.add(*o.get(), c);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Elem)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn coeff(&self, exps: &[u8]) -> Elem {
        self.terms.get(exps).copied().unwrap_or(Elem::ZERO)
    }

    /// Largest total degree of a term, 0 for the zero polynomial.
    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as usize).sum())
            .max()
            .unwrap_or(0)
    }

    fn check_arity(&self, other: &MPoly) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn add(&self, fs: &Field, other: &MPoly) -> Result<MPoly> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(fs, e.clone(), *c);
        }
        Ok(out)
    }

    pub fn scale(&self, fs: &Field, c: Elem) -> MPoly {
        let mut out = MPoly::zero(self.arity);
        for (e, v) in &self.terms {
            out.add_term(fs, e.clone(), fs.mul(*v, c));
        }
        out
    }

    pub fn sub(&self, fs: &Field, other: &MPoly) -> Result<MPoly> {
        self.add(fs, &other.scale(fs, fs.neg(Elem::ONE)))
    }

    pub fn mul(&self, fs: &Field, other: &MPoly) -> Result<MPoly> {
        self.check_arity(other)?;
        let mut out = MPoly::zero(self.arity);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u8> = e1
                    .iter()
                    .zip(e2)
                    .map(|(&a, &b)| reduce_exp(a as u64 + b as u64, fs.q()))
                    .collect();
                out.add_term(fs, e, fs.mul(*c1, *c2));
            }
        }
        Ok(out)
    }

    /// Product on disjoint variables: the result has arity `a + b` with
    /// `self` on the first variables and `other` on the rest.
    pub fn tensor(&self, fs: &Field, other: &MPoly) -> MPoly {
        let mut out = MPoly::zero(self.arity + other.arity);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let mut e = e1.clone();
                e.extend_from_slice(e2);
                out.add_term(fs, e, fs.mul(*c1, *c2));
            }
        }
        out
    }

    pub fn pow(&self, fs: &Field, n: u32) -> MPoly {
        let mut acc = MPoly::constant(self.arity, Elem::ONE);
        for _ in 0..n {
            acc = acc.mul(fs, self).expect("same arity");
        }
        acc
    }

    /// Direct evaluation Σ C_e ∏ x_i^{e_i}.
    pub fn eval(&self, fs: &Field, x: &[Elem]) -> Result<Elem> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: x.len(),
            });
        }
        let mut acc = Elem::ZERO;
        for (e, c) in &self.terms {
            let mut term = *c;
            for (xi, &ei) in x.iter().zip(e) {
                term = fs.mul(term, fs.pow(*xi, ei as u64));
            }
            acc = fs.add(acc, term);
        }
        Ok(acc)
    }

    pub fn tabulate(&self, fs: &Field) -> EvalTable {
        let q = fs.q();
        let mut dense = vec![Elem::ZERO; q.pow(self.arity as u32)];
        for (e, c) in &self.terms {
            let idx = e.iter().fold(0usize, |acc, &a| acc * q + a as usize);
            dense[idx] = *c;
        }
        // f(β) = Σ_a C_a β^a along each axis
        let mut mat = vec![Elem::ZERO; q * q];
        for b in 0..q {
            for a in 0..q {
                mat[b * q + a] = fs.pow(Elem(b as u8), a as u64);
            }
        }
        for axis in 0..self.arity {
            transform_axis(fs, &mut dense, q, self.arity, axis, &mat);
        }
        EvalTable {
            q,
            arity: self.arity,
            values: dense,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (e, c) in &self.terms {
            write!(s, "{}", c.0).unwrap();
            for a in e {
                write!(s, " {a}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Parses "coeff e1 … em" lines. Blank lines and lines starting with
    /// '#' are skipped. `arity` is required only for the zero polynomial.
    pub fn parse(fs: &Field, text: &str, arity: Option<usize>) -> Result<MPoly> {
        let mut terms = Vec::new();
        let mut m = arity;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<u64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad number {t:?}")))
                })
                .collect::<Result<_>>()?;
            let c = nums[0];
            if c as usize >= fs.q() {
                return Err(Error::Parse(format!("coefficient {c} out of range")));
            }
            let e = nums[1..].to_vec();
            match m {
                Some(a) if a != e.len() => {
                    return Err(Error::ArityMismatch {
                        expected: a,
                        found: e.len(),
                    })
                }
                _ => m = Some(e.len()),
            }
            terms.push((e, Elem(c as u8)));
        }
        let m = m.ok_or_else(|| Error::Parse("empty polynomial without arity".into()))?;
        Ok(MPoly::from_terms(fs, m, terms))
    }
}

/// Applies `out[a] = Σ_β mat[a*q + β]·v[β]` to every fiber along `axis`.
/// Points are ordered with the first coordinate most significant.
pub(crate) fn transform_axis(
    fs: &Field,
    data: &mut [Elem],
    q: usize,
    arity: usize,
    axis: usize,
    mat: &[Elem],
) {
    let stride = q.pow((arity - 1 - axis) as u32);
    let block = stride * q;
    let mut fiber = vec![Elem::ZERO; q];
    let mut out = vec![Elem::ZERO; q];
    for base in (0..data.len()).step_by(block) {
        for off in 0..stride {
            for (b, slot) in fiber.iter_mut().enumerate() {
                *slot = data[base + off + b * stride];
            }
            for (a, o) in out.iter_mut().enumerate() {
                let row = &mat[a * q..(a + 1) * q];
                let mut acc = Elem::ZERO;
                for (m, v) in row.iter().zip(&fiber) {
                    if !v.is_zero() && !m.is_zero() {
                        acc = fs.add(acc, fs.mul(*m, *v));
                    }
                }
                *o = acc;
            }
            for (a, v) in out.iter().enumerate() {
                data[base + off + a * stride] = *v;
            }
        }
    }
}

/// Values of a function F_q^m → F_q at every point, in lexicographic point
/// order with the first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvalTable {
    q: usize,
    arity: usize,
    values: Vec<Elem>,
}

impl EvalTable {
    pub fn new(q: usize, arity: usize, values: Vec<Elem>) -> Result<EvalTable> {
        let len = q.pow(arity as u32);
        if values.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "table has {} entries, expected {len}",
                values.len()
            )));
        }
        if values.iter().any(|v| v.idx() >= q) {
            return Err(Error::Parse("table value out of range".into()));
        }
        Ok(EvalTable { q, arity, values })
    }

    pub fn zeros(q: usize, arity: usize) -> EvalTable {
        EvalTable {
            q,
            arity,
            values: vec![Elem::ZERO; q.pow(arity as u32)],
        }
    }

    pub fn from_fn(q: usize, arity: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> EvalTable {
        let mut t = EvalTable::zeros(q, arity);
        let mut x = vec![Elem::ZERO; arity];
        for i in 0..t.values.len() {
            t.point_into(i, &mut x);
            t.values[i] = f(&x);
        }
        t
    }

    pub fn q(&self) -> usize {
        self.q
    }
    pub fn arity(&self) -> usize {
        self.arity
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[Elem] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Elem] {
        &mut self.values
    }

    #[inline]
    pub fn index_of(&self, x: &[Elem]) -> usize {
        x.iter().fold(0usize, |acc, v| acc * self.q + v.idx())
    }

    pub fn point_into(&self, mut idx: usize, out: &mut [Elem]) {
        for slot in out.iter_mut().rev() {
            *slot = Elem((idx % self.q) as u8);
            idx /= self.q;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<Elem> {
        let mut x = vec![Elem::ZERO; self.arity];
        self.point_into(idx, &mut x);
        x
    }

    #[inline]
    pub fn get(&self, x: &[Elem]) -> Elem {
        self.values[self.index_of(x)]
    }

    pub fn set(&mut self, x: &[Elem], v: Elem) {
        let i = self.index_of(x);
        self.values[i] = v;
    }

    fn check_same(&self, other: &EvalTable) -> Result<()> {
        if self.arity != other.arity || self.q != other.q {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    /// ⟨f, g⟩ = Σ_v f(v)g(v).
    pub fn inner_product(&self, fs: &Field, other: &EvalTable) -> Result<Elem> {
        self.check_same(other)?;
        Ok(fs.sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| fs.mul(*a, *b)),
        ))
    }

    pub fn add(&self, fs: &Field, other: &EvalTable) -> Result<EvalTable> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| fs.add(*a, *b))
            .collect();
        Ok(EvalTable {
            q: self.q,
            arity: self.arity,
            values,
        })
    }

    /// Number of points where the two tables differ.
    pub fn hamming(&self, other: &EvalTable) -> Result<usize> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// The unique reduced polynomial with this table, computed axis by axis:
    /// C_0 = f(0) and C_a = -Σ_β f(β)β^{q-1-a} for a ≥ 1.
    pub fn interpolate(&self, fs: &Field) -> MPoly {
        let q = self.q;
        let mut mat = vec![Elem::ZERO; q * q];
        mat[0] = Elem::ONE;
        for a in 1..q {
            for b in 0..q {
                mat[a * q + b] = fs.neg(fs.pow(Elem(b as u8), (q - 1 - a) as u64));
            }
        }
        let mut data = self.values.clone();
        for axis in 0..self.arity {
            transform_axis(fs, &mut data, q, self.arity, axis, &mat);
        }
        let mut poly = MPoly::zero(self.arity);
        for (i, c) in data.iter().enumerate() {
            if !c.is_zero() {
                let e: Vec<u8> = self.point(i).iter().map(|v| v.0).collect();
                poly.terms.insert(e, *c);
            }
        }
        poly
    }

    pub fn degree(&self, fs: &Field) -> usize {
        self.interpolate(fs).total_degree()
    }

    /// The table of x ↦ f(T x) over F_q^ℓ.
    pub fn compose_affine(&self, fs: &Field, t: &AffineMap) -> Result<EvalTable> {
        if t.n() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: t.n(),
            });
        }
        let l = t.l();
        let mut out = EvalTable::zeros(self.q, l);
        let mut x = vec![Elem::ZERO; l];
        let mut y = vec![Elem::ZERO; t.n()];
        for i in 0..out.values.len() {
            out.point_into(i, &mut x);
            t.apply_into(fs, &x, &mut y);
            out.values[i] = self.get(&y);
        }
        Ok(out)
    }

    /// g(a, b) = f(a) on F_q^N.
    pub fn extend(&self, big_n: usize) -> Result<EvalTable> {
        if big_n < self.arity {
            return Err(Error::BadArity(format!(
                "cannot extend arity {} to {big_n}",
                self.arity
            )));
        }
        let rep = self.q.pow((big_n - self.arity) as u32);
        let values = self
            .values
            .iter()
            .flat_map(|v| std::iter::repeat_n(*v, rep))
            .collect();
        Ok(EvalTable {
            q: self.q,
            arity: big_n,
            values,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.q, self.arity);
        for chunk in self.values.chunks(self.q.max(16)) {
            let line: Vec<String> = chunk.iter().map(|v| v.0.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<EvalTable> {
        let mut it = text.split_whitespace();
        let mut next = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        };
        let q = next("q")?;
        let n = next("n")?;
        let len = q
            .checked_pow(n as u32)
            .ok_or_else(|| Error::Parse("table too large".into()))?;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            let v = next("value")?;
            if v >= q {
                return Err(Error::Parse(format!("value {v} out of range")));
            }
            values.push(Elem(v as u8));
        }
        if it.next().is_some() {
            return Err(Error::Parse("trailing data after table".into()));
        }
        EvalTable::new(q, n, values)
    }
}
