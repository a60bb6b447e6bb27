//! Block-product testers: H_e = ∏ P_i(x_{V_i}) · ∏ x_{k+j}^{e_j} for
//! polynomials P_i on disjoint head variables and a list E of tail exponents.
//! The Reed-Muller tester is the instance with s/p copies of P.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::affine::{all_vectors, AffineMap};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::mpoly::{EvalTable, MPoly};
use crate::tester::{FunctionOracle, RMParams, TestReport, TesterSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub vars: Vec<usize>,
    pub poly: MPoly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockProductSpec {
    pub head: usize,
    pub tail: usize,
    pub blocks: Vec<Block>,
    pub exps: Vec<Vec<u8>>,
}

impl BlockProductSpec {
    /// s/p copies of P on consecutive variables with E the valid exponents.
    pub fn reed_muller(spec: &TesterSpec) -> BlockProductSpec {
        let RMParams { s, p, t, .. } = *spec.params();
        let blocks = (0..s / p)
            .map(|i| Block {
                vars: (i * p..(i + 1) * p).collect(),
                poly: spec.p_poly().clone(),
            })
            .collect();
        BlockProductSpec {
            head: s,
            tail: t,
            blocks,
            exps: spec.valid_exps().to_vec(),
        }
    }

    /// Tail exponents with Σ e_j ≤ t(q-1) - r.
    pub fn sum_bounded_exps(q: usize, t: usize, r: usize) -> Vec<Vec<u8>> {
        let limit = (t * (q - 1)).saturating_sub(r);
        all_vectors(q, t)
            .filter(|e| e.iter().map(|v| v.idx()).sum::<usize>() <= limit)
            .map(|e| e.iter().map(|v| v.0).collect())
            .collect()
    }

    /// Text form: `head K`, `tail T`, then `block v1 v2 …` followed by
    /// polynomial lines and `end`, then either `exps` followed by exponent
    /// lines and `end`, or `valid R` for all e with Σe ≤ T(q-1) - R.
    pub fn parse(fs: &Field, text: &str) -> Result<BlockProductSpec> {
        let mut head = None;
        let mut tail = None;
        let mut blocks = Vec::new();
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut valid = None;
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))
        };
        while let Some(line) = lines.next() {
            let mut words = line.split_whitespace();
            match words.next().unwrap() {
                "head" => head = Some(num(words.next().unwrap_or(""))?),
                "tail" => tail = Some(num(words.next().unwrap_or(""))?),
                "valid" => valid = Some(num(words.next().unwrap_or(""))?),
                "block" => {
                    let vars: Vec<usize> = words.map(num).collect::<Result<_>>()?;
                    let mut body = String::new();
                    for l in lines.by_ref() {
                        if l == "end" {
                            break;
                        }
                        body.push_str(l);
                        body.push('\n');
                    }
                    let poly = MPoly::parse(fs, &body, Some(vars.len()))?;
                    blocks.push(Block { vars, poly });
                }
                "exps" => {
                    for l in lines.by_ref() {
                        if l == "end" {
                            break;
                        }
                        let e = l
                            .split_whitespace()
                            .map(|w| {
                                w.parse::<u8>()
                                    .map_err(|_| Error::Parse(format!("bad exponent {w:?}")))
                            })
                            .collect::<Result<_>>()?;
                        exps.push(e);
                    }
                }
                other => return Err(Error::Parse(format!("unknown directive {other:?}"))),
            }
        }
        let tail = tail.ok_or_else(|| Error::Parse("missing `tail`".into()))?;
        if let Some(r) = valid {
            exps.extend(BlockProductSpec::sum_bounded_exps(fs.q(), tail, r));
        }
        Ok(BlockProductSpec {
            head: head.unwrap_or(0),
            tail,
            blocks,
            exps,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("head {}\ntail {}\n", self.head, self.tail);
        for b in &self.blocks {
            let vars: Vec<String> = b.vars.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!(
                "block {}\n{}end\n",
                vars.join(" "),
                b.poly.to_text()
            ));
        }
        s.push_str("exps\n");
        for e in &self.exps {
            let e: Vec<String> = e.iter().map(|a| a.to_string()).collect();
            s.push_str(&e.join(" "));
            s.push('\n');
        }
        s.push_str("end\n");
        s
    }
}

#[derive(Debug, Clone)]
pub struct GenericTester {
    field: Field,
    head: usize,
    tail: usize,
    /// Points of ∏ supp(P_i) × F^{uncovered} with their block-product values, lexicographic.
    support: Vec<(Vec<Elem>, Elem)>,
    exps: Vec<Vec<u8>>,
}

pub fn build_generic(fs: &Field, spec: &BlockProductSpec) -> Result<GenericTester> {
    let q = fs.q();
    let mut used = vec![false; spec.head];
    for (i, b) in spec.blocks.iter().enumerate() {
        if b.vars.len() != b.poly.arity() {
            return Err(Error::BadArity(format!(
                "block {i} lists {} variables for arity {}",
                b.vars.len(),
                b.poly.arity()
            )));
        }
        if b.poly.is_zero() {
            return Err(Error::ZeroBlock(i));
        }
        for &v in &b.vars {
            if v >= spec.head {
                return Err(Error::BadArity(format!(
                    "block {i} uses variable {v} beyond head {}",
                    spec.head
                )));
            }
            if used[v] {
                return Err(Error::SharedVariables(v));
            }
            used[v] = true;
        }
    }
    let mut exps = BTreeSet::new();
    for e in &spec.exps {
        if e.len() != spec.tail || e.iter().any(|&a| a as usize >= q) {
            return Err(Error::BadParams(format!(
                "exponent {e:?} does not fit tail {} over q = {q}",
                spec.tail
            )));
        }
        if e.iter().all(|&a| a as usize == q - 1) {
            return Err(Error::FullExponentInE);
        }
        exps.insert(e.clone());
    }
    let mut support: Vec<(Vec<Elem>, Elem)> = vec![(vec![Elem::ZERO; spec.head], Elem::ONE)];
    for b in &spec.blocks {
        let table = b.poly.tabulate(fs);
        let supp: Vec<(Vec<Elem>, Elem)> = (0..table.len())
            .filter(|&i| !table.values()[i].is_zero())
            .map(|i| (table.point(i), table.values()[i]))
            .collect();
        support = support
            .iter()
            .flat_map(|(x, w)| {
                supp.iter().map(move |(y, v)| {
                    let mut x = x.clone();
                    for (&var, val) in b.vars.iter().zip(y) {
                        x[var] = *val;
                    }
                    (x, fs.mul(*w, *v))
                })
            })
            .collect();
    }
    for var in (0..spec.head).filter(|&v| !used[v]) {
        support = support
            .iter()
            .flat_map(|(x, w)| {
                fs.elements().map(move |a| {
                    let mut x = x.clone();
                    x[var] = a;
                    (x, *w)
                })
            })
            .collect();
    }
    support.sort();
    Ok(GenericTester {
        field: fs.clone(),
        head: spec.head,
        tail: spec.tail,
        support,
        exps: exps.into_iter().collect(),
    })
}

impl GenericTester {
    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn head_support(&self) -> &[(Vec<Elem>, Elem)] {
        &self.support
    }
    pub fn exps(&self) -> &[Vec<u8>] {
        &self.exps
    }
    pub fn dim(&self) -> usize {
        self.head + self.tail
    }
    /// |∏ supp(P_i)|·q^t.
    pub fn queries(&self) -> usize {
        self.support.len() * self.field.q().pow(self.tail as u32)
    }
}

/// Rejects iff ⟨f∘T, H_e⟩ ≠ 0 for some e ∈ E, each sum taken directly over
/// the support; the witness is the smallest such e.
pub fn run_generic_test<O: FunctionOracle + ?Sized>(
    f: &O,
    t: &AffineMap,
    g: &GenericTester,
) -> Result<TestReport> {
    let fs = &g.field;
    if t.n() != f.arity() || t.l() != g.dim() {
        return Err(Error::ShapeMismatch(format!(
            "map is {}x{}, need {}x{}",
            t.n(),
            t.l(),
            f.arity(),
            g.dim()
        )));
    }
    let q = fs.q();
    let tails: Vec<Vec<Elem>> = all_vectors(q, g.tail).collect();
    // (tail point, w·f(T(a, b))) for every support point
    let mut terms = Vec::with_capacity(g.queries());
    let mut x = vec![Elem::ZERO; g.dim()];
    for (a, w) in &g.support {
        x[..g.head].copy_from_slice(a);
        for (bi, b) in tails.iter().enumerate() {
            x[g.head..].copy_from_slice(b);
            terms.push((bi, fs.mul(*w, f.query(&t.apply(fs, &x)))));
        }
    }
    for e in &g.exps {
        let mono: Vec<Elem> = tails
            .iter()
            .map(|b| {
                b.iter()
                    .zip(e)
                    .fold(Elem::ONE, |acc, (v, &k)| fs.mul(acc, fs.pow(*v, k as u64)))
            })
            .collect();
        let sum = fs.sum(terms.iter().map(|(bi, v)| fs.mul(*v, mono[*bi])));
        if !sum.is_zero() {
            return Ok(TestReport {
                reject: true,
                witness: Some(e.clone()),
                witness_value: Some(sum),
                queries_used: g.queries(),
                map: t.clone(),
            });
        }
    }
    Ok(TestReport {
        reject: false,
        witness: None,
        witness_value: None,
        queries_used: g.queries(),
        map: t.clone(),
    })
}

/// Whether every T ∈ T_{n, k+t} accepts f, by enumeration.
pub fn accepted_by_all(f: &EvalTable, g: &GenericTester, budget: u128) -> Result<bool> {
    let q = g.field.q();
    let count = AffineMap::count(q, f.arity(), g.dim()).filter(|&c| c as u128 <= budget);
    let count = count.ok_or(Error::BudgetExceeded {
        needed: AffineMap::count(q, f.arity(), g.dim()).map_or(u128::MAX, |c| c as u128),
        budget,
    })?;
    for i in 0..count {
        if run_generic_test(f, &AffineMap::from_index(q, f.arity(), g.dim(), i), g)?.reject {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches `candidates` for a function every test accepts but `member`
/// rejects, which shows the block-product tester is not a local characterization of `member`.
pub fn falsify(
    g: &GenericTester,
    candidates: impl IntoIterator<Item = EvalTable>,
    member: impl Fn(&EvalTable) -> bool,
    budget: u128,
) -> Result<Option<EvalTable>> {
    for f in candidates {
        if !member(&f) && accepted_by_all(&f, g, budget)? {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::random_codeword;
    use crate::stats::stream_rng;
    use crate::tester::{build_spec, derive_params, run_sparse_test};
    use rand::Rng;

    fn gf(p: u32, k: u32) -> Field {
        Field::new(p, k, None).unwrap()
    }

    #[test]
    fn rm_instance_matches_tester() {
        let f4 = gf(2, 2);
        for d in [3, 4, 9] {
            let spec = build_spec(&f4, derive_params(&f4, d, None).unwrap()).unwrap();
            let g = build_generic(&f4, &BlockProductSpec::reed_muller(&spec)).unwrap();
            assert_eq!(g.head_support(), spec.head());
            assert_eq!(g.exps(), spec.valid_exps());
            assert_eq!(g.queries(), spec.supp_h_size());
        }
    }

    #[test]
    fn verdicts_agree() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 4, None).unwrap()).unwrap();
        let g = build_generic(&f4, &BlockProductSpec::reed_muller(&spec)).unwrap();
        let mut rng = stream_rng(1, 0);
        for i in 0..40 {
            let mut f = random_codeword(&f4, 6, 4 + i % 3, i as u64);
            if i % 2 == 0 {
                let j = rng.gen_range(0..f.len());
                f.values_mut()[j] = Elem(rng.gen_range(0..4));
            }
            let t = AffineMap::sample_uniform(&f4, 6, 6, &mut rng);
            assert_eq!(
                run_sparse_test(&f, &t, &spec).unwrap(),
                run_generic_test(&f, &t, &g).unwrap()
            );
        }
    }

    #[test]
    fn constant_block() {
        let f3 = gf(3, 1);
        let spec = BlockProductSpec {
            head: 0,
            tail: 2,
            blocks: vec![Block {
                vars: vec![],
                poly: MPoly::constant(0, Elem::ONE),
            }],
            exps: BlockProductSpec::sum_bounded_exps(3, 2, 2),
        };
        let g = build_generic(&f3, &spec).unwrap();
        assert_eq!(g.queries(), 9);
        // accepts exactly the functions of degree < 2 on F_3^2 at T = I
        let id = AffineMap::identity_padded(2, 2);
        let lin = MPoly::parse(&f3, "1 1 0\n2 0 1\n1 0 0", None)
            .unwrap()
            .tabulate(&f3);
        let quad = MPoly::parse(&f3, "1 1 1", None).unwrap().tabulate(&f3);
        assert!(!run_generic_test(&lin, &id, &g).unwrap().reject);
        assert!(run_generic_test(&quad, &id, &g).unwrap().reject);
    }

    #[test]
    fn validation_errors() {
        let f4 = gf(2, 2);
        let p = MPoly::constant(2, Elem::ONE);
        let shared = BlockProductSpec {
            head: 3,
            tail: 1,
            blocks: vec![
                Block {
                    vars: vec![0, 1],
                    poly: p.clone(),
                },
                Block {
                    vars: vec![1, 2],
                    poly: p.clone(),
                },
            ],
            exps: vec![vec![0]],
        };
        assert_eq!(
            build_generic(&f4, &shared).unwrap_err(),
            Error::SharedVariables(1)
        );
        let full = BlockProductSpec {
            head: 0,
            tail: 2,
            blocks: vec![],
            exps: vec![vec![3, 3]],
        };
        assert_eq!(
            build_generic(&f4, &full).unwrap_err(),
            Error::FullExponentInE
        );
        let zero = BlockProductSpec {
            head: 2,
            tail: 1,
            blocks: vec![Block {
                vars: vec![0, 1],
                poly: MPoly::zero(2),
            }],
            exps: vec![],
        };
        assert_eq!(build_generic(&f4, &zero).unwrap_err(), Error::ZeroBlock(0));
    }

    #[test]
    fn text_round_trip() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 4, None).unwrap()).unwrap();
        let bps = BlockProductSpec::reed_muller(&spec);
        assert_eq!(BlockProductSpec::parse(&f4, &bps.to_text()).unwrap(), bps);
        let short = "head 2\ntail 4\nblock 0 1\n1 0 2\n1 1 1\n1 2 0\nend\nvalid 1\n";
        assert_eq!(BlockProductSpec::parse(&f4, short).unwrap(), bps);
    }

    #[test]
    fn affine_invariance_and_planted_violation() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 4, None).unwrap()).unwrap();
        let g = build_generic(&f4, &BlockProductSpec::reed_muller(&spec)).unwrap();
        let mut rng = stream_rng(2, 0);
        let f = random_codeword(&f4, 6, 4, 5);
        let a = AffineMap::sample_full_rank(&f4, 6, 6, &mut rng);
        let fa = f.compose_affine(&f4, &a).unwrap();
        for _ in 0..20 {
            let t = AffineMap::sample_uniform(&f4, 6, 6, &mut rng);
            assert!(!run_generic_test(&f, &t, &g).unwrap().reject);
            assert!(!run_generic_test(&fa, &t, &g).unwrap().reject);
        }
        let bad = f
            .add(
                &f4,
                &MPoly::monomial(&f4, &[2, 2, 1, 0, 0, 0], Elem::ONE).tabulate(&f4),
            )
            .unwrap();
        let rejected = (0..200).any(|_| {
            let t = AffineMap::sample_uniform(&f4, 6, 6, &mut rng);
            run_generic_test(&bad, &t, &g).unwrap().reject
        });
        assert!(rejected);
    }

    #[test]
    fn falsification_finds_weak_spec() {
        // E = {0} only checks Σ f over the flat, so x1 on a 1-flat over F_2 passes
        let f2 = gf(2, 1);
        let weak = BlockProductSpec {
            head: 0,
            tail: 2,
            blocks: vec![],
            exps: vec![vec![0, 0]],
        };
        let g = build_generic(&f2, &weak).unwrap();
        let cands = (0u32..16).map(|bits| {
            EvalTable::from_fn(2, 2, |x| {
                Elem(((bits >> (x[0].idx() * 2 + x[1].idx())) & 1) as u8)
            })
        });
        let found = falsify(&g, cands, |f| f.degree(&f2) == 0, 1 << 20).unwrap();
        assert!(found.is_some());
        let strong = BlockProductSpec {
            head: 0,
            tail: 2,
            blocks: vec![],
            exps: BlockProductSpec::sum_bounded_exps(2, 2, 1),
        };
        let g = build_generic(&f2, &strong).unwrap();
        let cands = (0u32..16).map(|bits| {
            EvalTable::from_fn(2, 2, |x| {
                Elem(((bits >> (x[0].idx() * 2 + x[1].idx())) & 1) as u8)
            })
        });
        assert!(falsify(&g, cands, |f| f.degree(&f2) == 0, 1 << 20)
            .unwrap()
            .is_none());
    }
}
