//! Small-parameter graph analytics on the affine bi-linear scheme and the
//! affine Grassmann graph: edge expansion, zoom densities, upper shadows,
//! one-step persistence and the embedding φ.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::Restriction;
use crate::affine::{all_vectors, AffineMap, ZoomSpec};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::linalg;
use crate::mpoly::EvalTable;
use crate::stats::{random_nonzero_vec, random_vec, stream_rng, Proportion};
use crate::tester::{run_sparse_test, tilde_f, FunctionOracle, TesterSpec};

pub const DEFAULT_GRAPH_BUDGET: u128 = 1 << 26;

type Predicate<'a> = Box<dyn Fn(&AffineMap) -> bool + Send + Sync + 'a>;

/// A set of vertices of AffBilin(n, ℓ), given by a membership predicate.
pub struct VertexSet<'a> {
    pub n: usize,
    pub l: usize,
    member: Predicate<'a>,
}

impl<'a> VertexSet<'a> {
    pub fn new(n: usize, l: usize, member: impl Fn(&AffineMap) -> bool + Send + Sync + 'a) -> Self {
        VertexSet {
            n,
            l,
            member: Box::new(member),
        }
    }

    pub fn explicit(n: usize, l: usize, maps: impl IntoIterator<Item = AffineMap>) -> Self {
        let set: HashSet<AffineMap> = maps.into_iter().collect();
        VertexSet::new(n, l, move |t| set.contains(t))
    }

    pub fn universe(n: usize, l: usize) -> Self {
        VertexSet::new(n, l, |_| true)
    }

    pub fn zoom(fs: &'a Field, n: usize, l: usize, z: ZoomSpec) -> Self {
        VertexSet::new(n, l, move |t| z.contains(fs, t).unwrap_or(false))
    }

    pub fn contains(&self, t: &AffineMap) -> bool {
        (self.member)(t)
    }

    /// Every member, by enumerating all q^{n(ℓ+1)} maps.
    pub fn members(&self, fs: &Field, budget: u128) -> Result<Vec<AffineMap>> {
        let count = universe_size(fs.q(), self.n, self.l, budget)?;
        Ok((0..count)
            .into_par_iter()
            .map(|i| AffineMap::from_index(fs.q(), self.n, self.l, i))
            .filter(|t| self.contains(t))
            .collect())
    }
}

/// S_t: the maps T ∈ T_{n,s+t} on which the sparse test rejects f.
pub fn rejecting_set<'a, O: FunctionOracle + ?Sized>(
    f: &'a O,
    spec: &'a TesterSpec,
) -> VertexSet<'a> {
    VertexSet::new(f.arity(), spec.dim(), move |t| {
        run_sparse_test(f, t, spec)
            .map(|r| r.reject)
            .unwrap_or(false)
    })
}

fn universe_size(q: usize, n: usize, l: usize, budget: u128) -> Result<u64> {
    let count = AffineMap::count(q, n, l);
    match count {
        Some(c) if (c as u128) <= budget => Ok(c),
        _ => Err(Error::BudgetExceeded {
            needed: count.map_or(u128::MAX, |c| c as u128),
            budget,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub mu: f64,
    pub phi: f64,
    /// Edges leaving members of S, counted from the S side.
    pub edge_count: u64,
    pub boundary_count: u64,
    /// Wilson half-width of Φ in sampled mode.
    pub ci: Option<f64>,
    pub seed: Option<u64>,
}

/// Exact Φ(S) by walking the neighbor list of every member.
pub fn edge_expansion(fs: &Field, s: &VertexSet, budget: u128) -> Result<GraphStats> {
    let q = fs.q();
    let count = universe_size(q, s.n, s.l, budget)?;
    let deg = AffineMap::bilin_degree(q, s.n, s.l) as u128;
    if count as u128 * deg > budget {
        return Err(Error::BudgetExceeded {
            needed: count as u128 * deg,
            budget,
        });
    }
    let (members, edges, boundary) = (0..count)
        .into_par_iter()
        .map(|i| {
            let t = AffineMap::from_index(q, s.n, s.l, i);
            if !s.contains(&t) {
                return (0u64, 0u64, 0u64);
            }
            let nb = t.neighbors(fs);
            let out = nb.iter().filter(|v| !s.contains(v)).count() as u64;
            (1, nb.len() as u64, out)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(GraphStats {
        mu: members as f64 / count as f64,
        phi: if edges == 0 {
            0.0
        } else {
            boundary as f64 / edges as f64
        },
        edge_count: edges,
        boundary_count: boundary,
        ci: None,
        seed: None,
    })
}

/// Exact Φ(S) by testing adjacency on every ordered pair of vertices.
pub fn edge_expansion_pairs(fs: &Field, s: &VertexSet, budget: u128) -> Result<GraphStats> {
    let q = fs.q();
    let count = universe_size(q, s.n, s.l, budget)?;
    if (count as u128).pow(2) > budget {
        return Err(Error::BudgetExceeded {
            needed: (count as u128).pow(2),
            budget,
        });
    }
    let all: Vec<AffineMap> = (0..count)
        .map(|i| AffineMap::from_index(q, s.n, s.l, i))
        .collect();
    let inside: Vec<bool> = all.iter().map(|t| s.contains(t)).collect();
    let (edges, boundary) = (0..all.len())
        .into_par_iter()
        .filter(|&i| inside[i])
        .map(|i| {
            let mut e = 0u64;
            let mut b = 0u64;
            for (j, v) in all.iter().enumerate() {
                if all[i].adjacent(fs, v).unwrap() {
                    e += 1;
                    b += u64::from(!inside[j]);
                }
            }
            (e, b)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let members = inside.iter().filter(|&&x| x).count();
    Ok(GraphStats {
        mu: members as f64 / count as f64,
        phi: if edges == 0 {
            0.0
        } else {
            boundary as f64 / edges as f64
        },
        edge_count: edges,
        boundary_count: boundary,
        ci: None,
        seed: None,
    })
}

/// Sampled Φ(S): members are drawn by rejection from uniform maps, then one
/// up-down step is taken.
pub fn edge_expansion_sampled(
    fs: &Field,
    s: &VertexSet,
    trials: u64,
    seed: u64,
    max_tries: u64,
) -> Result<GraphStats> {
    let results: Vec<(u64, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            for tries in 1..=max_tries {
                let t = AffineMap::sample_uniform(fs, s.n, s.l, &mut rng);
                if s.contains(&t) {
                    let v = t.up_down_neighbor(fs, &mut rng);
                    return Ok((tries, !s.contains(&v)));
                }
            }
            Err(Error::NotFound {
                trials: max_tries as usize,
            })
        })
        .collect::<Result<_>>()?;
    let tries: u64 = results.iter().map(|r| r.0).sum();
    let out = results.iter().filter(|r| r.1).count() as u64;
    let prop = Proportion::new(out, trials);
    Ok(GraphStats {
        mu: trials as f64 / tries as f64,
        phi: prop.rate,
        edge_count: trials,
        boundary_count: out,
        ci: Some(prop.ci),
        seed: Some(seed),
    })
}

/// μ(S ∩ z)/μ(z): exact when the universe fits the budget, else sampled
/// from uniform members of the zoom.
pub fn zoom_density(
    fs: &Field,
    s: &VertexSet,
    z: &ZoomSpec,
    budget: u128,
    trials: u64,
    seed: u64,
) -> Result<Proportion> {
    let q = fs.q();
    if let Ok(count) = universe_size(q, s.n, s.l, budget) {
        let (inz, both) = (0..count)
            .into_par_iter()
            .map(|i| {
                let t = AffineMap::from_index(q, s.n, s.l, i);
                if z.contains(fs, &t).unwrap_or(false) {
                    (1u64, u64::from(s.contains(&t)))
                } else {
                    (0, 0)
                }
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        return Ok(Proportion {
            successes: both,
            trials: inz,
            rate: both as f64 / inz.max(1) as f64,
            ci: 0.0,
        });
    }
    let hits = (0..trials)
        .into_par_iter()
        .map(|i| {
            let t = z.sample_member(fs, s.n, s.l, &mut stream_rng(seed, i))?;
            Ok(u64::from(s.contains(&t)))
        })
        .sum::<Result<u64>>()?;
    Ok(Proportion::new(hits, trials))
}

/// Every affine hyperplane of F^dim, each as a map F^{dim-1} → F^dim.
pub fn hyperplane_maps(fs: &Field, dim: usize) -> Vec<AffineMap> {
    let q = fs.q();
    let mut out = Vec::new();
    for h in all_vectors(q, dim).filter(|v| v.iter().find(|x| !x.is_zero()) == Some(&Elem::ONE)) {
        let lead = h.iter().position(|x| !x.is_zero()).unwrap();
        // kernel basis: e_j - h_j e_lead for j ≠ lead
        let dirs: Vec<Vec<Elem>> = (0..dim)
            .filter(|&j| j != lead)
            .map(|j| {
                let mut v = vec![Elem::ZERO; dim];
                v[j] = Elem::ONE;
                v[lead] = fs.neg(h[j]);
                v
            })
            .collect();
        for beta in fs.elements() {
            let mut point = vec![Elem::ZERO; dim];
            point[lead] = beta;
            out.push(AffineMap::from_columns(&point, &dirs));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub mu_s: Proportion,
    pub mu_up: Proportion,
    pub ratio: f64,
    /// Propagated from the relative Wilson widths of both densities.
    pub ratio_ci: f64,
}

impl ShadowReport {
    fn new(s_hits: u64, up_hits: u64, trials: u64) -> ShadowReport {
        let mu_s = Proportion::new(s_hits, trials);
        let mu_up = Proportion::new(up_hits, trials);
        let (ratio, ratio_ci) = if s_hits == 0 {
            (if up_hits == 0 { 0.0 } else { f64::INFINITY }, 0.0)
        } else {
            let r = mu_up.rate / mu_s.rate;
            let rel = mu_s.ci / mu_s.rate
                + if up_hits == 0 {
                    0.0
                } else {
                    mu_up.ci / mu_up.rate
                };
            (r, r * rel)
        };
        ShadowReport {
            mu_s,
            mu_up,
            ratio,
            ratio_ci,
        }
    }
}

/// Flat upper shadow of S = {ℓ-flats U : deg(f|_U) > d}. Each trial draws a
/// uniform (ℓ+1)-flat V and a uniform ℓ-flat U inside it.
pub fn flat_shadow_check(
    fs: &Field,
    f: &EvalTable,
    d: usize,
    l: usize,
    trials: u64,
    seed: u64,
) -> Result<ShadowReport> {
    let n = f.arity();
    if l + 1 > n {
        return Err(Error::BadShape(format!("need ℓ+1 ≤ n, got ℓ={l}, n={n}")));
    }
    let hyper = hyperplane_maps(fs, l + 1);
    let counts: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let v = AffineMap::sample_full_rank(fs, n, l + 1, &mut rng);
            let mut r = AffineMap::sample_full_rank(fs, l + 1, l, &mut rng);
            r.set_shift(random_vec(fs, l + 1, &mut rng));
            let fv = f.compose_affine(fs, &v)?;
            let in_s = fv.compose_affine(fs, &r)?.degree(fs) > d;
            let in_up = in_s || (fv.degree(fs) > d && any_restriction_above(fs, &fv, &hyper, d)?);
            Ok((in_s, in_up))
        })
        .collect::<Result<_>>()?;
    let s = counts.iter().filter(|c| c.0).count() as u64;
    let up = counts.iter().filter(|c| c.1).count() as u64;
    Ok(ShadowReport::new(s, up, trials))
}

fn any_restriction_above(
    fs: &Field,
    g: &EvalTable,
    hyper: &[AffineMap],
    bound: usize,
) -> Result<bool> {
    for h in hyper {
        if g.compose_affine(fs, h)?.degree(fs) > bound {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Affine upper shadow of S_t inside T_{n,s+t+1}. Each trial draws
/// T' ∈ T_{n,s+t+1} and a restriction B with full-rank R', so T'∘B is
/// uniform in T_{n,s+t}.
pub fn affine_shadow_check<O: FunctionOracle + ?Sized>(
    f: &O,
    spec: &TesterSpec,
    trials: u64,
    seed: u64,
) -> Result<ShadowReport> {
    let fs = spec.field();
    let (s, t, r) = (spec.params().s, spec.params().t, spec.params().r);
    let n = f.arity();
    let hyper = hyperplane_maps(fs, t + 1);
    let counts: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let up = AffineMap::sample_uniform(fs, n, s + t + 1, &mut rng);
            let b = Restriction::sample_full_rank(fs, s, t + 1, t, &mut rng)?;
            let in_s = run_sparse_test(f, &up.compose(fs, &b.as_map())?, spec)?.reject;
            let ft = tilde_f(f, &up, spec)?;
            let in_up =
                in_s || (ft.degree(fs) >= r && any_restriction_above(fs, &ft, &hyper, r - 1)?);
            Ok((in_s, in_up))
        })
        .collect::<Result<_>>()?;
    let s_hits = counts.iter().filter(|c| c.0).count() as u64;
    let up_hits = counts.iter().filter(|c| c.1).count() as u64;
    Ok(ShadowReport::new(s_hits, up_hits, trials))
}

/// How often a rejecting T still rejects after one step. `proper` uses the
/// up-down walk (λ ≠ 0, a true edge); otherwise (λ, β) are fully uniform.
pub fn persistence_check<O: FunctionOracle + ?Sized>(
    f: &O,
    spec: &TesterSpec,
    trials: u64,
    seed: u64,
    proper: bool,
    max_tries: u64,
) -> Result<Proportion> {
    let fs = spec.field();
    let n = f.arity();
    let stays = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let t = (0..max_tries)
                .map(|_| AffineMap::sample_uniform(fs, n, spec.dim(), &mut rng))
                .find(|t| {
                    run_sparse_test(f, t, spec)
                        .map(|r| r.reject)
                        .unwrap_or(false)
                })
                .ok_or(Error::NotFound {
                    trials: max_tries as usize,
                })?;
            let next = if proper {
                t.up_down_neighbor(fs, &mut rng)
            } else {
                t.persistence_step(fs, &mut rng)
            };
            Ok(u64::from(run_sparse_test(f, &next, spec)?.reject))
        })
        .sum::<Result<u64>>()?;
    Ok(Proportion::new(stays, trials))
}

/// An affine flat in canonical form: RREF direction basis and a point that
/// vanishes on every pivot column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flat {
    pub point: Vec<Elem>,
    pub dirs: Vec<Vec<Elem>>,
}

impl Flat {
    pub fn new(fs: &Field, point: &[Elem], dirs: &[Vec<Elem>]) -> Flat {
        let mut dirs = dirs.to_vec();
        let pivots = linalg::rref(fs, &mut dirs);
        let mut point = point.to_vec();
        linalg::reduce_against(fs, &dirs, &pivots, &mut point);
        Flat { point, dirs }
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn ambient(&self) -> usize {
        self.point.len()
    }

    pub fn contains_point(&self, fs: &Field, x: &[Elem]) -> bool {
        let diff: Vec<Elem> = x
            .iter()
            .zip(&self.point)
            .map(|(a, b)| fs.sub(*a, *b))
            .collect();
        linalg::in_span(fs, &self.dirs, &diff)
    }

    pub fn contains_dir(&self, fs: &Field, v: &[Elem]) -> bool {
        linalg::in_span(fs, &self.dirs, v)
    }

    /// Whether the flat lies in {x : ⟨h, x⟩ = β}.
    pub fn in_hyperplane(&self, fs: &Field, h: &[Elem], beta: Elem) -> bool {
        dot(fs, h, &self.point) == beta && self.dir_in_hyperplane(fs, h)
    }

    pub fn dir_in_hyperplane(&self, fs: &Field, h: &[Elem]) -> bool {
        self.dirs.iter().all(|d| dot(fs, h, d).is_zero())
    }

    /// Same dimension, distinct, meeting in a flat of one dimension less.
    pub fn adjacent(&self, fs: &Field, other: &Flat) -> bool {
        if self == other || self.dim() != other.dim() {
            return false;
        }
        let mut both = self.dirs.clone();
        both.extend(other.dirs.iter().cloned());
        if linalg::rank(fs, &both) != self.dim() + 1 {
            return false;
        }
        let diff: Vec<Elem> = self
            .point
            .iter()
            .zip(&other.point)
            .map(|(a, b)| fs.sub(*a, *b))
            .collect();
        linalg::in_span(fs, &both, &diff)
    }
}

fn dot(fs: &Field, a: &[Elem], b: &[Elem]) -> Elem {
    fs.sum(a.iter().zip(b).map(|(x, y)| fs.mul(*x, *y)))
}

/// Every ℓ-flat of F^N, in canonical form.
pub fn all_flats(fs: &Field, big_n: usize, l: usize) -> Vec<Flat> {
    let q = fs.q();
    let mut out = Vec::new();
    let mut pivots: Vec<usize> = (0..l).collect();
    loop {
        // free entries sit right of each pivot, off the pivot columns
        let free: Vec<(usize, usize)> = (0..l)
            .flat_map(|i| {
                ((pivots[i] + 1)..big_n)
                    .filter(|j| !pivots.contains(j))
                    .map(move |j| (i, j))
            })
            .collect();
        let off: Vec<usize> = (0..big_n).filter(|j| !pivots.contains(j)).collect();
        for vals in all_vectors(q, free.len()) {
            let mut dirs = vec![vec![Elem::ZERO; big_n]; l];
            for (i, &pc) in pivots.iter().enumerate() {
                dirs[i][pc] = Elem::ONE;
            }
            for (&(i, j), v) in free.iter().zip(&vals) {
                dirs[i][j] = *v;
            }
            for pv in all_vectors(q, off.len()) {
                let mut point = vec![Elem::ZERO; big_n];
                for (&j, v) in off.iter().zip(&pv) {
                    point[j] = *v;
                }
                out.push(Flat {
                    point,
                    dirs: dirs.clone(),
                });
            }
        }
        // next combination of pivot columns
        let Some(i) = (0..l).rev().find(|&i| pivots[i] < big_n - l + i) else {
            break;
        };
        pivots[i] += 1;
        for j in i + 1..l {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
    out
}

/// φ(M, c) = (0, c) + span{(e_i, M e_i)} in F^{ℓ+n}.
pub fn phi_embed(fs: &Field, t: &AffineMap) -> Flat {
    let (n, l) = (t.n(), t.l());
    let mut point = vec![Elem::ZERO; l];
    point.extend_from_slice(t.shift());
    let dirs: Vec<Vec<Elem>> = (0..l)
        .map(|i| {
            let mut v = vec![Elem::ZERO; l + n];
            v[i] = Elem::ONE;
            v[l..].copy_from_slice(&t.column(i));
            v
        })
        .collect();
    Flat::new(fs, &point, &dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub maps: usize,
    pub flats: usize,
    pub injective: bool,
    /// Pairs (T1, T2) checked for adjacency ⟺ adjacency of images.
    pub pairs_checked: usize,
    pub edges_preserved: bool,
    pub min_neighbor_fraction: f64,
    /// Every image vertex has at least a (1 - 1/q) fraction of in-image neighbors, compared exactly.
    pub neighbor_fraction_ok: bool,
    pub image_characterized: bool,
    pub zoom_in: bool,
    pub zoom_in_lin: bool,
    pub zoom_out: bool,
    pub zoom_out_lin: bool,
}

impl PhiReport {
    pub fn all_ok(&self) -> bool {
        self.injective
            && self.edges_preserved
            && self.neighbor_fraction_ok
            && self.image_characterized
            && self.zoom_in
            && self.zoom_in_lin
            && self.zoom_out
            && self.zoom_out_lin
    }
}

/// Exhaustive checks of φ: T_{n,ℓ} → AffGras(n+ℓ, ℓ).
pub fn phi_checks(fs: &Field, n: usize, l: usize, budget: u128) -> Result<PhiReport> {
    let q = fs.q();
    let count = universe_size(q, n, l, budget)?;
    let flats = all_flats(fs, n + l, l);
    let cost = (count as u128).pow(2) + (flats.len() as u128).pow(2);
    if cost > budget {
        return Err(Error::BudgetExceeded {
            needed: cost,
            budget,
        });
    }
    let maps: Vec<AffineMap> = (0..count)
        .map(|i| AffineMap::from_index(q, n, l, i))
        .collect();
    let images: Vec<Flat> = maps.iter().map(|t| phi_embed(fs, t)).collect();
    let image_set: HashSet<&Flat> = images.iter().collect();
    let injective = image_set.len() == maps.len();

    let edges_preserved = (0..maps.len()).into_par_iter().all(|i| {
        (0..maps.len())
            .all(|j| maps[i].adjacent(fs, &maps[j]).unwrap() == images[i].adjacent(fs, &images[j]))
    });

    let fractions: Vec<(usize, usize)> = images
        .par_iter()
        .map(|u| {
            let nb: Vec<&Flat> = flats.iter().filter(|v| u.adjacent(fs, v)).collect();
            (
                nb.iter().filter(|v| image_set.contains(**v)).count(),
                nb.len(),
            )
        })
        .collect();
    let neighbor_fraction_ok = fractions
        .iter()
        .all(|&(inside, total)| inside * q >= (q - 1) * total);
    let min_neighbor_fraction = fractions
        .iter()
        .map(|&(inside, total)| inside as f64 / total as f64)
        .fold(1.0, f64::min);

    let proj_full_rank = |f: &Flat| {
        let proj: Vec<Vec<Elem>> = f.dirs.iter().map(|d| d[..l].to_vec()).collect();
        linalg::rank(fs, &proj) == l
    };
    let image_characterized = flats
        .iter()
        .all(|f| image_set.contains(f) == proj_full_rank(f));

    let in_image: Vec<&Flat> = flats.iter().filter(|f| image_set.contains(f)).collect();
    let same = |zoom: &ZoomSpec, flat_member: &dyn Fn(&Flat) -> bool| {
        let lhs: HashSet<&Flat> = maps
            .iter()
            .zip(&images)
            .filter(|(t, _)| zoom.contains(fs, t).unwrap())
            .map(|(_, f)| f)
            .collect();
        let rhs: HashSet<&Flat> = in_image
            .iter()
            .copied()
            .filter(|f| flat_member(f))
            .collect();
        lhs == rhs
    };
    let concat = |a: &[Elem], b: &[Elem]| [a, b].concat();
    let mut zoom_in = true;
    let mut zoom_in_lin = true;
    for a in all_vectors(q, l) {
        for b in all_vectors(q, n) {
            let v = concat(&a, &b);
            zoom_in &= same(
                &ZoomSpec::In {
                    a: a.clone(),
                    b: b.clone(),
                },
                &|f| f.contains_point(fs, &v),
            );
            if v.iter().any(|x| !x.is_zero()) {
                zoom_in_lin &= same(
                    &ZoomSpec::InLin {
                        a: a.clone(),
                        b: b.clone(),
                    },
                    &|f| f.contains_dir(fs, &v),
                );
            }
        }
    }
    let mut zoom_out = true;
    let mut zoom_out_lin = true;
    for a in all_vectors(q, n) {
        for b in all_vectors(q, l) {
            if a.iter().chain(&b).all(|x| x.is_zero()) {
                continue;
            }
            let neg_b: Vec<Elem> = b.iter().map(|x| fs.neg(*x)).collect();
            let h = concat(&neg_b, &a);
            for beta in fs.elements() {
                let z = ZoomSpec::Out {
                    a: a.clone(),
                    b: b.clone(),
                    beta,
                };
                zoom_out &= same(&z, &|f| f.in_hyperplane(fs, &h, beta));
            }
            zoom_out_lin &= same(
                &ZoomSpec::OutLin {
                    a: a.clone(),
                    b: b.clone(),
                },
                &|f| f.dir_in_hyperplane(fs, &h),
            );
        }
    }
    Ok(PhiReport {
        maps: maps.len(),
        flats: flats.len(),
        injective,
        pairs_checked: maps.len() * maps.len(),
        edges_preserved,
        min_neighbor_fraction,
        neighbor_fraction_ok,
        image_characterized,
        zoom_in,
        zoom_in_lin,
        zoom_out,
        zoom_out_lin,
    })
}

/// Random nonzero a and b for a zoom of the given kind.
pub fn random_zoom(
    fs: &Field,
    kind: &str,
    n: usize,
    l: usize,
    rng: &mut impl Rng,
) -> Result<ZoomSpec> {
    Ok(match kind {
        "in" => ZoomSpec::In {
            a: random_vec(fs, l, rng),
            b: random_vec(fs, n, rng),
        },
        "in-lin" => ZoomSpec::InLin {
            a: random_nonzero_vec(fs, l, rng),
            b: random_vec(fs, n, rng),
        },
        "out" => ZoomSpec::Out {
            a: random_nonzero_vec(fs, n, rng),
            b: random_vec(fs, l, rng),
            beta: crate::stats::random_elem(fs, rng),
        },
        "out-lin" => ZoomSpec::OutLin {
            a: random_nonzero_vec(fs, n, rng),
            b: random_vec(fs, l, rng),
        },
        other => return Err(Error::BadParams(format!("unknown zoom kind {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::MPoly;
    use crate::oracle::random_codeword;
    use crate::tester::{build_spec, derive_params};

    fn gf(p: u32, k: u32) -> Field {
        Field::new(p, k, None).unwrap()
    }

    fn frac(num: usize, den: usize) -> f64 {
        num as f64 / den as f64
    }

    #[test]
    fn universe_and_singletons() {
        let f2 = gf(2, 1);
        let all = VertexSet::universe(2, 1);
        let st = edge_expansion(&f2, &all, DEFAULT_GRAPH_BUDGET).unwrap();
        assert_eq!((st.mu, st.phi), (1.0, 0.0));
        let single = VertexSet::explicit(2, 1, [AffineMap::zero(2, 1)]);
        let st = edge_expansion(&f2, &single, DEFAULT_GRAPH_BUDGET).unwrap();
        assert_eq!(st.phi, 1.0);
        assert_eq!(st.edge_count as usize, AffineMap::bilin_degree(2, 2, 1));
    }

    #[test]
    fn two_exact_methods_agree() {
        let f2 = gf(2, 1);
        let f3 = gf(3, 1);
        let mut rng = stream_rng(4, 0);
        for (fs, n, l) in [(&f2, 2, 1), (&f2, 3, 1), (&f2, 2, 2), (&f3, 2, 1)] {
            let q = fs.q();
            let count = AffineMap::count(q, n, l).unwrap();
            let picked: Vec<AffineMap> = (0..count)
                .filter(|_| rng.gen_bool(0.3))
                .map(|i| AffineMap::from_index(q, n, l, i))
                .collect();
            let s = VertexSet::explicit(n, l, picked);
            let a = edge_expansion(fs, &s, DEFAULT_GRAPH_BUDGET).unwrap();
            let b = edge_expansion_pairs(fs, &s, DEFAULT_GRAPH_BUDGET).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zoom_expansion_closed_forms() {
        for (p, n, l) in [(2u32, 3usize, 1usize), (2, 2, 2), (3, 2, 1)] {
            let fs = gf(p, 1);
            let q = fs.q();
            let mut rng = stream_rng(5, p as u64);
            let qp = |e: usize| q.pow(e as u32);
            let cases = [
                ("in", 1.0 - 1.0 / q as f64),
                ("in-lin", 1.0 - frac(qp(l - 1) - 1, qp(l) - 1)),
                ("out", 1.0 - frac(qp(n - 1) - 1, qp(n) - 1)),
                ("out-lin", 1.0 - frac(qp(n - 1) - 1, qp(n) - 1)),
            ];
            for (kind, want) in cases {
                let z = random_zoom(&fs, kind, n, l, &mut rng).unwrap();
                let s = VertexSet::zoom(&fs, n, l, z);
                let st = edge_expansion(&fs, &s, DEFAULT_GRAPH_BUDGET).unwrap();
                assert!(
                    (st.phi - want).abs() < 1e-12,
                    "{kind} q={q} n={n} l={l}: {} vs {want}",
                    st.phi
                );
            }
        }
    }

    #[test]
    fn zoom_in_example() {
        let f2 = gf(2, 1);
        let z = ZoomSpec::In {
            a: vec![Elem(1)],
            b: vec![Elem(1), Elem(0), Elem(1)],
        };
        let s = VertexSet::zoom(&f2, 3, 1, z.clone());
        assert!(edge_expansion(&f2, &s, DEFAULT_GRAPH_BUDGET).unwrap().phi <= 0.5);
        assert_eq!(
            zoom_density(&f2, &s, &z, DEFAULT_GRAPH_BUDGET, 0, 0)
                .unwrap()
                .rate,
            1.0
        );
    }

    #[test]
    fn sampled_expansion_near_exact() {
        let f3 = gf(3, 1);
        let z = ZoomSpec::In {
            a: vec![Elem(1)],
            b: vec![Elem(2), Elem(0)],
        };
        let s = VertexSet::zoom(&f3, 2, 1, z);
        let exact = edge_expansion(&f3, &s, DEFAULT_GRAPH_BUDGET).unwrap();
        let est = edge_expansion_sampled(&f3, &s, 4000, 3, 10_000).unwrap();
        assert!((est.phi - exact.phi).abs() <= 3.0 * est.ci.unwrap());
    }

    #[test]
    fn rejecting_set_examples() {
        let f2 = gf(2, 1);
        let params = derive_params(&f2, 1, None).unwrap();
        assert_eq!((params.s, params.t), (0, 4));
        let spec = build_spec(&f2, params).unwrap();
        let code = random_codeword(&f2, 4, 1, 1);
        assert!(rejecting_set(&code, &spec)
            .members(&f2, DEFAULT_GRAPH_BUDGET)
            .unwrap()
            .is_empty());
        let mono = MPoly::monomial(&f2, &[1, 1, 0, 0], Elem::ONE).tabulate(&f2);
        let s = rejecting_set(&mono, &spec);
        assert!(s.contains(&AffineMap::identity_padded(4, 4)));
        // μ(S_t) by enumeration agrees with the Monte-Carlo rate
        let members = s.members(&f2, DEFAULT_GRAPH_BUDGET).unwrap().len();
        let mu = members as f64 / AffineMap::count(2, 4, 4).unwrap() as f64;
        let est = crate::tester::estimate_rejection(&mono, &spec, 4000, 7).unwrap();
        assert!((est.rate - mu).abs() <= 3.0 * est.ci);
    }

    #[test]
    fn zoom_density_locates_error() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 3, None).unwrap()).unwrap();
        let n = 5;
        let mut f = random_codeword(&f4, n, 3, 2);
        let y = 700;
        f.values_mut()[y] = f4.add(f.values()[y], Elem(1));
        let s = rejecting_set(&f, &spec);
        let a = vec![Elem(1), Elem(2), Elem(0), Elem(3)];
        let mut best = (0.0, 0);
        for (bi, b) in all_vectors(4, n).enumerate() {
            let z = ZoomSpec::In { a: a.clone(), b };
            let d = zoom_density(&f4, &s, &z, 0, 24, bi as u64).unwrap().rate;
            if d > best.0 {
                best = (d, bi);
            }
        }
        assert_eq!(best.1, y);
    }

    #[test]
    fn zoom_out_density_bounded() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 3, None).unwrap()).unwrap();
        let mut f = random_codeword(&f4, 6, 3, 3);
        f.values_mut()[100] = f4.add(f.values()[100], Elem(2));
        let s = rejecting_set(&f, &spec);
        let mu = crate::tester::estimate_rejection(&f, &spec, 3000, 1).unwrap();
        let mut rng = stream_rng(6, 0);
        for i in 0..5 {
            let z = random_zoom(&f4, "out", 6, 4, &mut rng).unwrap();
            let d = zoom_density(&f4, &s, &z, 0, 1500, 100 + i).unwrap();
            assert!(d.rate <= 4.0 * mu.rate * (1.0 + 3.0 * mu.ci / mu.rate) + 3.0 * d.ci);
        }
    }

    #[test]
    fn hyperplanes_cover_once() {
        let f3 = gf(3, 1);
        let hs = hyperplane_maps(&f3, 3);
        assert_eq!(hs.len(), 13 * 3);
        let flats: HashSet<Flat> = hs
            .iter()
            .map(|h| Flat::new(&f3, h.shift(), &h.columns()))
            .collect();
        assert_eq!(flats.len(), hs.len());
        assert!(flats.iter().all(|f| f.dim() == 2));
    }

    #[test]
    fn flat_enumeration_counts() {
        let f2 = gf(2, 1);
        let f3 = gf(3, 1);
        // (q^N - 1)/(q - 1) directions times q^{N-1} cosets for lines
        assert_eq!(all_flats(&f2, 3, 1).len(), 7 * 4);
        assert_eq!(all_flats(&f3, 3, 2).len(), 13 * 3);
        let set: HashSet<Flat> = all_flats(&f2, 4, 2).into_iter().collect();
        assert_eq!(set.len(), 35 * 4);
    }

    #[test]
    fn phi_exhaustive() {
        let f2 = gf(2, 1);
        let rep = phi_checks(&f2, 2, 1, DEFAULT_GRAPH_BUDGET).unwrap();
        assert_eq!(rep.maps, 16);
        assert!(rep.all_ok(), "{rep:?}");
        let f3 = gf(3, 1);
        let rep = phi_checks(&f3, 2, 1, DEFAULT_GRAPH_BUDGET).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn shadows() {
        let f4 = gf(2, 2);
        let n = 6;
        let code = random_codeword(&f4, n, 4, 9);
        let rep = flat_shadow_check(&f4, &code, 4, 3, 200, 1).unwrap();
        assert_eq!((rep.mu_s.successes, rep.mu_up.successes), (0, 0));
        let mut f = code.clone();
        f.values_mut()[7] = Elem(3);
        let rep = flat_shadow_check(&f4, &f, 4, 3, 3000, 2).unwrap();
        assert!(rep.mu_s.successes > 0);
        assert!(rep.ratio <= 4.0 + 3.0 * rep.ratio_ci, "{rep:?}");
        let spec = build_spec(&f4, derive_params(&f4, 3, None).unwrap()).unwrap();
        let rep = affine_shadow_check(&f, &spec, 600, 3).unwrap();
        assert!(rep.mu_up.successes >= rep.mu_s.successes);
        assert!(rep.mu_s.successes > 0);
    }

    #[test]
    fn persistence() {
        let f4 = gf(2, 2);
        let spec = build_spec(&f4, derive_params(&f4, 3, None).unwrap()).unwrap();
        let mut f = random_codeword(&f4, 6, 3, 4);
        f.values_mut()[33] = f4.add(f.values()[33], Elem(1));
        let p = persistence_check(&f, &spec, 1500, 8, false, 10_000).unwrap();
        assert!(p.rate >= 0.25 - 3.0 * p.ci, "{p:?}");
    }
}
