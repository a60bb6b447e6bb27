//! Arithmetic in GF(p^k) through precomputed tables.
//!
//! An element is stored as its code: the base-p digits of the code are the
//! coefficients of the element in the polynomial basis 1, x, ..., x^(k-1)
//! modulo the field's irreducible modulus. Code 0 is zero and code 1 is one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
#[repr(transparent)]
pub struct Elem(pub u8);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Moduli used when none is supplied, as coefficient digits from the
/// constant term upward. Every entry is re-checked for irreducibility when a
/// field is built from it.
const DEFAULT_MODULI: &[(u32, u32, &[u32])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 1, 1, 0, 1]),
    (2, 7, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (3, 2, &[1, 0, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 0, 0, 2, 1]),
    (5, 2, &[3, 2, 1]),
    (5, 3, &[3, 3, 0, 1]),
    (7, 2, &[3, 6, 1]),
    (11, 2, &[2, 7, 1]),
];

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn default_modulus(p: u32, k: u32) -> Option<Vec<u32>> {
    if k == 1 {
        return Some(vec![0, 1]);
    }
    DEFAULT_MODULI
        .iter()
        .find(|(pp, kk, _)| *pp == p && *kk == k)
        .map(|(_, _, m)| m.to_vec())
}

/// Every (p, k) with a built-in modulus and q ≤ 128.
pub fn builtin_fields() -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = (2..=127).filter(|&p| is_prime(p)).map(|p| (p, 1)).collect();
    out.extend(DEFAULT_MODULI.iter().map(|(p, k, _)| (*p, *k)));
    out.sort_by_key(|&(p, k)| p.pow(k));
    out
}

// Polynomials over GF(p), little-endian coefficient vectors.

fn inv_mod(a: u32, p: u32) -> u32 {
    // p is prime, so a^(p-2) is the inverse
    let (mut base, mut e, mut acc) = (a as u64 % p as u64, p as u64 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead_inv = inv_mod(b[db], p);
    for top in (db..r.len()).rev() {
        let factor = r[top] * lead_inv % p;
        if factor == 0 {
            continue;
        }
        let shift = top - db;
        for (i, &bi) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - factor * bi % p) % p;
        }
    }
    r.truncate(db);
    r
}

/// Trial division by every monic polynomial of degree 1..=k/2.
pub fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let k = modulus.len() - 1;
    if k == 1 {
        return true;
    }
    for deg in 1..=k / 2 {
        let count = (p as u64).pow(deg as u32);
        for code in 0..count {
            let mut div = Vec::with_capacity(deg + 1);
            let mut c = code;
            for _ in 0..deg {
                div.push((c % p as u64) as u32);
                c /= p as u64;
            }
            div.push(1);
            let r = poly_rem(modulus, &div, p);
            if r.iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

/// A finite field with full addition and multiplication tables.
#[derive(Clone)]
pub struct Field {
    p: u32,
    k: u32,
    q: usize,
    modulus: Vec<u32>,
    generator: Elem,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    log: Vec<u32>,
    exp: Vec<u8>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("modulus", &self.modulus)
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}

impl Eq for Field {}

impl Field {
    /// Builds GF(p^k). The modulus, if given, lists coefficients from the
    /// constant term up and must be monic of degree k.
    pub fn new(p: u32, k: u32, modulus: Option<&[u32]>) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if k == 0 {
            return Err(Error::BadModulus { k });
        }
        let q = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        if q > 256 {
            return Err(Error::FieldTooLarge(q));
        }
        let modulus = match modulus {
            Some(m) => m.to_vec(),
            None => default_modulus(p, k).ok_or(Error::NoModulusKnown { p, k })?,
        };
        if modulus.len() != k as usize + 1
            || modulus[k as usize] != 1
            || modulus.iter().any(|&c| c >= p)
        {
            return Err(Error::BadModulus { k });
        }
        if !is_irreducible(&modulus, p) {
            return Err(Error::ReducibleModulus { p });
        }
        let q = q as usize;
        let ku = k as usize;
        let digits = |mut c: usize| -> Vec<u32> {
            let mut d = vec![0u32; ku];
            for slot in d.iter_mut() {
                *slot = (c % p as usize) as u32;
                c /= p as usize;
            }
            d
        };
        let encode = |d: &[u32]| -> usize {
            d.iter()
                .rev()
                .fold(0usize, |acc, &x| acc * p as usize + x as usize)
        };

        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = encode(&sum) as u8;
                let mut prod = vec![0u32; 2 * ku - 1];
                for (i, x) in da.iter().enumerate() {
                    for (j, y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let mut r = poly_rem(&prod, &modulus, p);
                r.resize(ku, 0);
                mul[a * q + b] = encode(&r) as u8;
            }
        }
        let mut neg = vec![0u8; q];
        let mut inv = vec![0u8; q];
        for a in 0..q {
            for b in 0..q {
                if add[a * q + b] == 0 {
                    neg[a] = b as u8;
                }
                if mul[a * q + b] == 1 {
                    inv[a] = b as u8;
                }
            }
        }
        let order = |g: usize| -> usize {
            let mut x = g;
            let mut i = 1;
            while x != 1 {
                x = mul[x * q + g] as usize;
                i += 1;
            }
            i
        };
        let generator = (1..q)
            .find(|&g| order(g) == q - 1)
            .expect("multiplicative group is cyclic");
        let mut exp = vec![0u8; q - 1];
        let mut log = vec![0u32; q];
        let mut x = 1usize;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = x as u8;
            log[x] = i as u32;
            x = mul[x * q + generator] as usize;
        }
        Ok(Field {
            p,
            k,
            q,
            modulus,
            generator: Elem(generator as u8),
            add,
            mul,
            neg,
            inv,
            log,
            exp,
        })
    }

    /// Parses a field name such as "2^2" or "5".
    pub fn from_name(name: &str) -> Result<Field> {
        let (p, k) = parse_field_name(name)?;
        Field::new(p, k, None)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    pub fn generator(&self) -> Elem {
        self.generator
    }
    pub fn name(&self) -> String {
        format!("{}^{}", self.p, self.k)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + Clone {
        (0..self.q).map(|c| Elem(c as u8))
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.add[a.idx() * self.q + b.idx()])
    }
    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }
    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        Elem(self.neg[a.idx()])
    }
    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.mul[a.idx() * self.q + b.idx()])
    }
    /// Inverse of a nonzero element; zero maps to zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        Elem(self.inv[a.idx()])
    }
    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b))
    }

    /// a^e with the convention 0^0 = 1.
    #[inline]
    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.is_zero() {
            return Elem::ZERO;
        }
        let l = self.log[a.idx()] as u64 * (e % (self.q as u64 - 1)) % (self.q as u64 - 1);
        Elem(self.exp[l as usize])
    }

    /// The image of an integer under Z → F_q.
    pub fn from_int(&self, n: i64) -> Elem {
        Elem(n.rem_euclid(self.p as i64) as u8)
    }

    pub fn sum<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        it.into_iter().fold(Elem::ZERO, |acc, x| self.add(acc, x))
    }

    /// Raw addition table, row-major q×q.
    pub fn add_table(&self) -> &[u8] {
        &self.add
    }
    /// Raw multiplication table, row-major q×q.
    pub fn mul_table(&self) -> &[u8] {
        &self.mul
    }

    /// Table `t[e*q + β] = β^e` for e, β in 0..q.
    pub fn power_table(&self) -> Vec<Elem> {
        let q = self.q;
        let mut t = vec![Elem::ZERO; q * q];
        for e in 0..q {
            for b in 0..q {
                t[e * q + b] = self.pow(Elem(b as u8), e as u64);
            }
        }
        t
    }
}

pub fn parse_field_name(name: &str) -> Result<(u32, u32)> {
    let bad = || Error::Parse(format!("field name {name:?}, expected p^k"));
    let (p, k) = match name.trim().split_once('^') {
        Some((p, k)) => (
            p.trim().parse().map_err(|_| bad())?,
            k.trim().parse().map_err(|_| bad())?,
        ),
        None => (name.trim().parse().map_err(|_| bad())?, 1),
    };
    Ok((p, k))
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Field> {
        Field::from_name(s)
    }
}

/// Σ_{α ∈ F_q} α^i, summed directly.
pub fn power_sum(fs: &Field, i: u64) -> Elem {
    fs.sum(fs.elements().map(|a| fs.pow(a, i)))
}

fn digits_base(mut n: u64, p: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while n > 0 {
        out.push(n % p);
        n /= p;
    }
    out
}

fn small_binom_mod(n: u64, k: u64, p: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * inv_mod(den as u32, p as u32) as u64 % p
}

/// C(a, b) mod p by Lucas' theorem.
pub fn lucas_binom(p: u32, a: u64, b: u64) -> u32 {
    if b > a {
        return 0;
    }
    let p = p as u64;
    let da = digits_base(a, p);
    let db = digits_base(b, p);
    let mut acc = 1u64;
    for (i, &ai) in da.iter().enumerate() {
        let bi = db.get(i).copied().unwrap_or(0);
        acc = acc * small_binom_mod(ai, bi, p) % p;
        if acc == 0 {
            return 0;
        }
    }
    acc as u32
}

/// Digit-wise base-p dominance a ≤_p b.
pub fn p_shadow_leq(p: u32, a: u64, b: u64) -> bool {
    let p = p as u64;
    let (mut a, mut b) = (a, b);
    while a > 0 || b > 0 {
        if a % p > b % p {
            return false;
        }
        a /= p;
        b /= p;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf4_default() {
        let f = Field::new(2, 2, None).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.generator(), Elem(2));
        // x·x = x + 1
        assert_eq!(f.mul(Elem(2), Elem(2)), Elem(3));
        assert_eq!(Field::new(3, 1, None).unwrap().generator(), Elem(2));
    }

    #[test]
    fn reducible_and_bad_inputs() {
        assert_eq!(
            Field::new(2, 2, Some(&[0, 0, 1])).unwrap_err(),
            Error::ReducibleModulus { p: 2 }
        );
        assert_eq!(Field::new(4, 1, None).unwrap_err(), Error::NotPrime(4));
        assert!(matches!(
            Field::new(13, 2, None),
            Err(Error::NoModulusKnown { .. })
        ));
        assert!(matches!(
            Field::new(2, 9, None),
            Err(Error::FieldTooLarge(512))
        ));
        assert!(Field::new(2, 8, Some(&[1, 0, 1, 1, 1, 0, 0, 0, 1])).is_ok());
    }

    #[test]
    fn builtin_table_is_irreducible() {
        for (p, k) in builtin_fields() {
            let f = Field::new(p, k, None).unwrap();
            assert_eq!(f.q(), (p as usize).pow(k));
        }
    }

    #[test]
    fn axioms_exhaustive() {
        for (p, k) in builtin_fields()
            .into_iter()
            .filter(|&(p, k)| p.pow(k) <= 64)
        {
            let f = Field::new(p, k, None).unwrap();
            for x in f.elements() {
                if !x.is_zero() {
                    assert_eq!(f.mul(x, f.inv(x)), Elem::ONE);
                    assert_eq!(f.pow(x, f.q() as u64 - 1), Elem::ONE);
                }
                assert_eq!(f.pow(x, f.q() as u64), x);
                for y in f.elements() {
                    let fr = |z| f.pow(z, p as u64);
                    assert_eq!(fr(f.add(x, y)), f.add(fr(x), fr(y)));
                    for z in f.elements() {
                        assert_eq!(f.add(f.add(x, y), z), f.add(x, f.add(y, z)));
                        assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
                    }
                }
            }
        }
    }

    #[test]
    fn power_sums() {
        let f4 = Field::new(2, 2, None).unwrap();
        assert_eq!(power_sum(&f4, 3), Elem(1));
        assert_eq!(power_sum(&f4, 0), Elem(0));
        let f9 = Field::new(3, 2, None).unwrap();
        assert_eq!(power_sum(&f9, 4), Elem(0));
        assert_eq!(power_sum(&f9, 8), f9.from_int(-1));
    }

    #[test]
    fn lucas() {
        assert_eq!(lucas_binom(2, 3, 1), 1);
        assert_eq!(lucas_binom(2, 4, 2), 0);
        assert_eq!(lucas_binom(3, 10, 1), 1);
        fn fact_binom(n: u64, k: u64) -> u64 {
            (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
        }
        for p in [2u32, 3, 5, 7] {
            for a in 0..30u64 {
                for b in 0..=a {
                    assert_eq!(
                        lucas_binom(p, a, b) as u64,
                        fact_binom(a, b) % p as u64,
                        "p={p} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn shadow() {
        assert!(p_shadow_leq(2, 1, 3));
        assert!(!p_shadow_leq(2, 2, 1));
        for a in 0..=8 {
            for b in 0..=8 {
                assert_eq!(p_shadow_leq(3, a, b), lucas_binom(3, b, a) != 0);
            }
        }
    }

    #[test]
    fn names() {
        assert_eq!(parse_field_name("2^2").unwrap(), (2, 2));
        assert_eq!(parse_field_name("7").unwrap(), (7, 1));
        assert!(parse_field_name("x").is_err());
    }
}
