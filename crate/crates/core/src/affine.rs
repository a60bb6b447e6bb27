//! Affine maps x ↦ Mx + c, restriction families, bi-linear scheme adjacency,
//! the up-down walk and zoom families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::linalg;
use crate::stats::{random_elem, random_nonzero_vec, random_vec};

/// T = (M, c): F_q^ℓ → F_q^n, M stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffineMap {
    n: usize,
    l: usize,
    m: Vec<Elem>,
    c: Vec<Elem>,
}

impl AffineMap {
    pub fn new(n: usize, l: usize, m: Vec<Elem>, c: Vec<Elem>) -> Result<AffineMap> {
        if m.len() != n * l || c.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "matrix {} / shift {} for {n}x{l}",
                m.len(),
                c.len()
            )));
        }
        Ok(AffineMap { n, l, m, c })
    }

    pub fn zero(n: usize, l: usize) -> AffineMap {
        AffineMap {
            n,
            l,
            m: vec![Elem::ZERO; n * l],
            c: vec![Elem::ZERO; n],
        }
    }

    /// M = [I_ℓ; 0], c = 0. Needs n ≥ ℓ.
    pub fn identity_padded(n: usize, l: usize) -> AffineMap {
        assert!(n >= l, "identity padding needs n ≥ ℓ");
        let mut t = AffineMap::zero(n, l);
        for i in 0..l {
            t.m[i * l + i] = Elem::ONE;
        }
        t
    }

    pub fn from_columns(point: &[Elem], dirs: &[Vec<Elem>]) -> AffineMap {
        let n = point.len();
        let l = dirs.len();
        let mut t = AffineMap::zero(n, l);
        for (j, d) in dirs.iter().enumerate() {
            for (i, &v) in d.iter().enumerate() {
                t.m[i * l + j] = v;
            }
        }
        t.c = point.to_vec();
        t
    }

    pub fn sample_uniform(fs: &Field, n: usize, l: usize, rng: &mut impl Rng) -> AffineMap {
        AffineMap {
            n,
            l,
            m: random_vec(fs, n * l, rng),
            c: random_vec(fs, n, rng),
        }
    }

    pub fn sample_full_rank(fs: &Field, n: usize, l: usize, rng: &mut impl Rng) -> AffineMap {
        loop {
            let t = AffineMap::sample_uniform(fs, n, l, rng);
            if t.is_full_rank(fs) {
                return t;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn l(&self) -> usize {
        self.l
    }
    pub fn matrix(&self) -> &[Elem] {
        &self.m
    }
    pub fn shift(&self) -> &[Elem] {
        &self.c
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> Elem {
        self.m[i * self.l + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: Elem) {
        self.m[i * self.l + j] = v;
    }

    pub fn set_shift(&mut self, c: Vec<Elem>) {
        assert_eq!(c.len(), self.n);
        self.c = c;
    }

    pub fn column(&self, j: usize) -> Vec<Elem> {
        (0..self.n).map(|i| self.entry(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Elem>> {
        (0..self.l).map(|j| self.column(j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Elem>> {
        (0..self.n)
            .map(|i| self.m[i * self.l..(i + 1) * self.l].to_vec())
            .collect()
    }

    #[inline]
    pub fn apply_into(&self, fs: &Field, x: &[Elem], out: &mut [Elem]) {
        debug_assert_eq!(x.len(), self.l);
        for (i, (o, &c)) in out.iter_mut().zip(&self.c).enumerate() {
            let row = &self.m[i * self.l..(i + 1) * self.l];
            let mut acc = c;
            for (a, b) in row.iter().zip(x) {
                acc = fs.add(acc, fs.mul(*a, *b));
            }
            *o = acc;
        }
    }

    pub fn apply(&self, fs: &Field, x: &[Elem]) -> Vec<Elem> {
        let mut out = vec![Elem::ZERO; self.n];
        self.apply_into(fs, x, &mut out);
        out
    }

    /// M x without the shift.
    pub fn apply_linear(&self, fs: &Field, x: &[Elem]) -> Vec<Elem> {
        let mut out = self.apply(fs, x);
        for (o, c) in out.iter_mut().zip(&self.c) {
            *o = fs.sub(*o, *c);
        }
        out
    }

    /// self ∘ inner.
    pub fn compose(&self, fs: &Field, inner: &AffineMap) -> Result<AffineMap> {
        if inner.n != self.l {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {}x{} after {}x{}",
                self.n, self.l, inner.n, inner.l
            )));
        }
        let mut out = AffineMap::zero(self.n, inner.l);
        for i in 0..self.n {
            for j in 0..inner.l {
                let mut acc = Elem::ZERO;
                for k in 0..self.l {
                    acc = fs.add(acc, fs.mul(self.entry(i, k), inner.entry(k, j)));
                }
                out.m[i * inner.l + j] = acc;
            }
        }
        out.c = self.apply(fs, &inner.c);
        Ok(out)
    }

    pub fn rank(&self, fs: &Field) -> usize {
        linalg::rank(fs, &self.rows())
    }

    pub fn is_full_rank(&self, fs: &Field) -> bool {
        self.rank(fs) == self.n.min(self.l)
    }

    fn check_shape(&self, other: &AffineMap) -> Result<()> {
        if self.n != other.n || self.l != other.l {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.n, self.l, other.n, other.l
            )));
        }
        Ok(())
    }

    /// Adjacent in the affine bi-linear scheme: distinct, and equal on an
    /// affine subspace of dimension exactly ℓ-1. Equivalently the difference
    /// [ΔM | Δc] has rank 1 with Δc in the column space of ΔM.
    pub fn adjacent(&self, fs: &Field, other: &AffineMap) -> Result<bool> {
        self.check_shape(other)?;
        let dm: Vec<Vec<Elem>> = (0..self.n)
            .map(|i| {
                (0..self.l)
                    .map(|j| fs.sub(self.entry(i, j), other.entry(i, j)))
                    .collect()
            })
            .collect();
        if linalg::rank(fs, &dm) != 1 {
            return Ok(false);
        }
        let aug: Vec<Vec<Elem>> = dm
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r.clone();
                r.push(fs.sub(self.c[i], other.c[i]));
                r
            })
            .collect();
        Ok(linalg::rank(fs, &aug) == 1)
    }

    /// [M | w] with the same shift, as a map F^{ℓ+1} → F^n.
    pub fn append_column(&self, w: &[Elem]) -> AffineMap {
        assert_eq!(w.len(), self.n);
        let l = self.l + 1;
        let mut out = AffineMap::zero(self.n, l);
        for (i, &wi) in w.iter().enumerate() {
            for j in 0..self.l {
                out.m[i * l + j] = self.entry(i, j);
            }
            out.m[i * l + self.l] = wi;
        }
        out.c = self.c.clone();
        out
    }

    /// One step of the up-down walk: go up by appending a random nonzero
    /// column w, then come down through R = ([I_ℓ; λ], (0, …, 0, β)) with
    /// λ ≠ 0. The result is T + w·(λx + β).
    pub fn up_down_neighbor(&self, fs: &Field, rng: &mut impl Rng) -> AffineMap {
        let w = random_nonzero_vec(fs, self.n, rng);
        let lambda = random_nonzero_vec(fs, self.l, rng);
        let beta = random_elem(fs, rng);
        self.down_step(fs, &w, &lambda, beta)
    }

    /// The step used for one-step persistence: w ≠ 0, and (λ, β) uniform
    /// with no constraint, so T itself is a possible outcome.
    pub fn persistence_step(&self, fs: &Field, rng: &mut impl Rng) -> AffineMap {
        let w = random_nonzero_vec(fs, self.n, rng);
        let lambda = random_vec(fs, self.l, rng);
        let beta = random_elem(fs, rng);
        self.down_step(fs, &w, &lambda, beta)
    }

    /// [M | w] ∘ ([I_ℓ; λ], (0, …, 0, β)).
    pub fn down_step(&self, fs: &Field, w: &[Elem], lambda: &[Elem], beta: Elem) -> AffineMap {
        let up = self.append_column(w);
        let mut r = AffineMap::identity_padded(self.l + 1, self.l);
        for (j, v) in lambda.iter().enumerate() {
            r.set_entry(self.l, j, *v);
        }
        r.c[self.l] = beta;
        up.compose(fs, &r).expect("shapes agree")
    }

    /// Every neighbor in the bi-linear scheme, each exactly once:
    /// T + v·(λx + β) with v normalized to have leading entry 1 and λ ≠ 0.
    pub fn neighbors(&self, fs: &Field) -> Vec<AffineMap> {
        let q = fs.q();
        let mut out = Vec::new();
        let vs: Vec<Vec<Elem>> = all_vectors(q, self.n)
            .filter(|v| v.iter().find(|x| !x.is_zero()) == Some(&Elem::ONE))
            .collect();
        let lams: Vec<Vec<Elem>> = all_vectors(q, self.l)
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        for v in &vs {
            for lam in &lams {
                for beta in fs.elements() {
                    out.push(self.down_step(fs, v, lam, beta));
                }
            }
        }
        out
    }

    /// Degree of every vertex: (q^n - 1)/(q - 1) · (q^ℓ - 1) · q.
    pub fn bilin_degree(q: usize, n: usize, l: usize) -> usize {
        (q.pow(n as u32) - 1) / (q - 1) * (q.pow(l as u32) - 1) * q
    }

    /// Index of this map among all q^{n(ℓ+1)} maps, entries of M then c as
    /// base-q digits, most significant first.
    pub fn to_index(&self, q: usize) -> u64 {
        self.m
            .iter()
            .chain(&self.c)
            .fold(0u64, |acc, v| acc * q as u64 + v.0 as u64)
    }

    pub fn from_index(q: usize, n: usize, l: usize, mut idx: u64) -> AffineMap {
        let total = n * l + n;
        let mut digits = vec![Elem::ZERO; total];
        for slot in digits.iter_mut().rev() {
            *slot = Elem((idx % q as u64) as u8);
            idx /= q as u64;
        }
        let c = digits.split_off(n * l);
        AffineMap { n, l, m: digits, c }
    }

    pub fn count(q: usize, n: usize, l: usize) -> Option<u64> {
        (q as u64).checked_pow((n * l + n) as u32)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.l);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.l)
                .map(|j| self.entry(i, j).0.to_string())
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        let c: Vec<String> = self.c.iter().map(|v| v.0.to_string()).collect();
        s.push_str(&c.join(" "));
        s.push('\n');
        s
    }

    pub fn parse(q: usize, text: &str) -> Result<AffineMap> {
        let nums: Vec<usize> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad number {t:?}")))
            })
            .collect::<Result<_>>()?;
        if nums.len() < 2 {
            return Err(Error::Parse("missing header".into()));
        }
        let (n, l) = (nums[0], nums[1]);
        let body = &nums[2..];
        if body.len() != n * l + n {
            return Err(Error::Parse(format!(
                "expected {} entries, found {}",
                n * l + n,
                body.len()
            )));
        }
        if body.iter().any(|&v| v >= q) {
            return Err(Error::Parse("entry out of range".into()));
        }
        let e: Vec<Elem> = body.iter().map(|&v| Elem(v as u8)).collect();
        AffineMap::new(n, l, e[..n * l].to_vec(), e[n * l..].to_vec())
    }
}

/// All vectors of F_q^len in lexicographic order.
pub fn all_vectors(q: usize, len: usize) -> impl Iterator<Item = Vec<Elem>> {
    let total = q.pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut v = vec![Elem::ZERO; len];
        for slot in v.iter_mut().rev() {
            *slot = Elem((idx % q) as u8);
            idx /= q;
        }
        v
    })
}

/// A flat b' + span(dirs), not necessarily with independent directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlatBasis {
    pub point: Vec<Elem>,
    pub dirs: Vec<Vec<Elem>>,
}

impl FlatBasis {
    pub fn ambient(&self) -> usize {
        self.point.len()
    }

    pub fn dim(&self, fs: &Field) -> usize {
        linalg::rank(fs, &self.dirs)
    }

    /// The parametrization y ↦ point + Σ y_j dirs_j.
    pub fn as_map(&self) -> AffineMap {
        AffineMap::from_columns(&self.point, &self.dirs)
    }

    pub fn contains(&self, fs: &Field, x: &[Elem]) -> bool {
        let diff: Vec<Elem> = x
            .iter()
            .zip(&self.point)
            .map(|(a, b)| fs.sub(*a, *b))
            .collect();
        linalg::in_span(fs, &self.dirs, &diff)
    }
}

/// B = ([[I_s, 0], [0, R']], (0, b')): F^{s+t} → F^{s+ℓ}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction {
    pub s: usize,
    pub l: usize,
    pub t: usize,
    /// ℓ×t, row-major.
    pub r: Vec<Elem>,
    pub b: Vec<Elem>,
}

impl Restriction {
    pub fn sample(
        fs: &Field,
        s: usize,
        l: usize,
        t: usize,
        rng: &mut impl Rng,
    ) -> Result<Restriction> {
        if l < t {
            return Err(Error::BadShape(format!(
                "restriction needs ℓ ≥ t, got ℓ={l}, t={t}"
            )));
        }
        Ok(Restriction {
            s,
            l,
            t,
            r: random_vec(fs, l * t, rng),
            b: random_vec(fs, l, rng),
        })
    }

    /// As `sample`, conditioned on R' having rank t.
    pub fn sample_full_rank(
        fs: &Field,
        s: usize,
        l: usize,
        t: usize,
        rng: &mut impl Rng,
    ) -> Result<Restriction> {
        loop {
            let b = Restriction::sample(fs, s, l, t, rng)?;
            if b.tail_map().is_full_rank(fs) {
                return Ok(b);
            }
        }
    }

    pub fn as_map(&self) -> AffineMap {
        let (n, dom) = (self.s + self.l, self.s + self.t);
        let mut m = AffineMap::zero(n, dom);
        for i in 0..self.s {
            m.set_entry(i, i, Elem::ONE);
        }
        for i in 0..self.l {
            for j in 0..self.t {
                m.set_entry(self.s + i, self.s + j, self.r[i * self.t + j]);
            }
        }
        let mut c = vec![Elem::ZERO; self.s];
        c.extend_from_slice(&self.b);
        m.set_shift(c);
        m
    }

    /// The tail part (R', b') as a map F^t → F^ℓ.
    pub fn tail_map(&self) -> AffineMap {
        AffineMap::new(self.l, self.t, self.r.clone(), self.b.clone()).expect("shape")
    }

    /// fl(B) = b' + im(R').
    pub fn flat(&self) -> FlatBasis {
        let dirs = (0..self.t)
            .map(|j| (0..self.l).map(|i| self.r[i * self.t + j]).collect())
            .collect();
        FlatBasis {
            point: self.b.clone(),
            dirs,
        }
    }
}

/// The four canonical poorly expanding families in T_{n,ℓ}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZoomSpec {
    /// T a = b, with a ∈ F^ℓ, b ∈ F^n.
    In { a: Vec<Elem>, b: Vec<Elem> },
    /// aᵀM = b and aᵀc = β, with a ∈ F^n, b ∈ F^ℓ.
    Out {
        a: Vec<Elem>,
        b: Vec<Elem>,
        beta: Elem,
    },
    /// M a = b.
    InLin { a: Vec<Elem>, b: Vec<Elem> },
    /// aᵀM = b.
    OutLin { a: Vec<Elem>, b: Vec<Elem> },
}

impl ZoomSpec {
    fn shape_ok(&self, n: usize, l: usize) -> bool {
        match self {
            ZoomSpec::In { a, b } | ZoomSpec::InLin { a, b } => a.len() == l && b.len() == n,
            ZoomSpec::Out { a, b, .. } | ZoomSpec::OutLin { a, b } => a.len() == n && b.len() == l,
        }
    }

    pub fn contains(&self, fs: &Field, t: &AffineMap) -> Result<bool> {
        if !self.shape_ok(t.n, t.l) {
            return Err(Error::ShapeMismatch(
                "zoom parameters do not fit the map".into(),
            ));
        }
        let left_mul = |a: &[Elem]| -> Vec<Elem> {
            (0..t.l)
                .map(|j| fs.sum((0..t.n).map(|i| fs.mul(a[i], t.entry(i, j)))))
                .collect()
        };
        let dot = |a: &[Elem], b: &[Elem]| fs.sum(a.iter().zip(b).map(|(x, y)| fs.mul(*x, *y)));
        Ok(match self {
            ZoomSpec::In { a, b } => t.apply(fs, a) == *b,
            ZoomSpec::InLin { a, b } => t.apply_linear(fs, a) == *b,
            ZoomSpec::Out { a, b, beta } => left_mul(a) == *b && dot(a, &t.c) == *beta,
            ZoomSpec::OutLin { a, b } => left_mul(a) == *b,
        })
    }

    /// A uniform member of the family. Needs a ≠ 0 except for zoom-ins.
    pub fn sample_member(
        &self,
        fs: &Field,
        n: usize,
        l: usize,
        rng: &mut impl Rng,
    ) -> Result<AffineMap> {
        if !self.shape_ok(n, l) {
            return Err(Error::ShapeMismatch(
                "zoom parameters do not fit the map".into(),
            ));
        }
        let mut t = AffineMap::sample_uniform(fs, n, l, rng);
        let pivot = |a: &[Elem]| {
            a.iter()
                .position(|x| !x.is_zero())
                .ok_or_else(|| Error::BadParams("zoom vector a is zero".into()))
        };
        match self {
            ZoomSpec::In { a, b } => {
                let ma = t.apply_linear(fs, a);
                t.c = b.iter().zip(&ma).map(|(x, y)| fs.sub(*x, *y)).collect();
            }
            ZoomSpec::InLin { a, b } => {
                // solve for column j of M from M a = b
                let j = pivot(a)?;
                let inv = fs.inv(a[j]);
                for (i, &bi) in b.iter().enumerate() {
                    let mut rest = bi;
                    for (k, ak) in a.iter().enumerate() {
                        if k != j {
                            rest = fs.sub(rest, fs.mul(t.entry(i, k), *ak));
                        }
                    }
                    t.set_entry(i, j, fs.mul(rest, inv));
                }
            }
            ZoomSpec::Out { a, b, .. } | ZoomSpec::OutLin { a, b } => {
                // solve for row i of M (and c_i) from aᵀM = b
                let i = pivot(a)?;
                let inv = fs.inv(a[i]);
                for (j, &bj) in b.iter().enumerate() {
                    let mut rest = bj;
                    for (k, ak) in a.iter().enumerate() {
                        if k != i {
                            rest = fs.sub(rest, fs.mul(*ak, t.entry(k, j)));
                        }
                    }
                    t.set_entry(i, j, fs.mul(rest, inv));
                }
                if let ZoomSpec::Out { beta, .. } = self {
                    let mut rest = *beta;
                    for (k, ak) in a.iter().enumerate() {
                        if k != i {
                            rest = fs.sub(rest, fs.mul(*ak, t.c[k]));
                        }
                    }
                    t.c[i] = fs.mul(rest, inv);
                }
            }
        }
        Ok(t)
    }
}
