//! The distributions `D_r` on vertex maps `f = h ∘ g` and their induced edge
//! maps.
//!
//! For finite `r`, `g: [n] -> [r]` is uniform, `S` is its range and `h` is a
//! uniform injection `S -> [n]`. `D_∞` is a uniform permutation of `[n]`.
//! Constraint probabilities `P(F(d_i) = e_i for all i)` are computed exactly
//! by enumerating every `(g, h)` pair, which is what the polynomial-degree
//! check interpolates through.

use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edges::{induce_edge_map, EdgeIndexer, EdgeMap, VertexMap};
use crate::{Error, Result};

/// The range parameter `r` of `D_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RangeParam {
    Finite(u64),
    Infinite,
}

impl RangeParam {
    pub fn finite(r: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("r must be at least 1".into()));
        }
        Ok(RangeParam::Finite(r))
    }

    /// `1/r`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> BigRational {
        match *self {
            RangeParam::Finite(r) => BigRational::new(BigInt::one(), BigInt::from(r)),
            RangeParam::Infinite => BigRational::zero(),
        }
    }
}

impl fmt::Display for RangeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeParam::Finite(r) => write!(f, "{r}"),
            RangeParam::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for RangeParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(RangeParam::Infinite),
            other => other
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad range parameter {other:?}")))
                .and_then(RangeParam::finite),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DrSpec {
    pub indexer: EdgeIndexer,
    pub r: RangeParam,
}

impl DrSpec {
    pub fn new(indexer: EdgeIndexer, r: RangeParam) -> Result<Self> {
        if r == RangeParam::Finite(0) {
            return Err(Error::InvalidParameter("r must be at least 1".into()));
        }
        Ok(Self { indexer, r })
    }
}

/// One draw `(f, F)` from `D_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledMap {
    pub f: VertexMap,
    pub edge_map: EdgeMap,
    pub r: RangeParam,
    /// Seed of the generator, when the draw came from [`sample_seeded`].
    pub seed: Option<u64>,
}

pub fn sample<R: Rng + ?Sized>(spec: &DrSpec, rng: &mut R) -> SampledMap {
    let n = spec.indexer.n();
    let table = match spec.r {
        RangeParam::Infinite => {
            let mut t: Vec<usize> = (1..=n).collect();
            t.shuffle(rng);
            t
        }
        RangeParam::Finite(r) => {
            let g: Vec<u64> = (0..n).map(|_| rng.random_range(0..r)).collect();
            let mut range = g.clone();
            range.sort_unstable();
            range.dedup();
            // Uniform ordered |S|-tuple of distinct targets, assigned to S in
            // ascending order.
            let mut pool: Vec<usize> = (1..=n).collect();
            let (targets, _) = pool.partial_shuffle(rng, range.len());
            g.iter()
                .map(|v| targets[range.binary_search(v).expect("value in range")])
                .collect()
        }
    };
    let f = VertexMap::new(table).expect("sampled map stays in [n]");
    let edge_map = induce_edge_map(&f, &spec.indexer).expect("matching vertex count");
    SampledMap {
        f,
        edge_map,
        r: spec.r,
        seed: None,
    }
}

pub fn sample_seeded(spec: &DrSpec, seed: u64) -> SampledMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampledMap {
        seed: Some(seed),
        ..sample(spec, &mut rng)
    }
}

/// Constraints `F(d_i) = e_i`, `d_i ∈ [M]`, `e_i ∈ [N]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSet {
    pairs: Vec<(usize, usize)>,
}

impl ConstraintSet {
    pub fn new(indexer: &EdgeIndexer, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("constraint set is empty".into()));
        }
        for &(d, e) in &pairs {
            if d == 0 || d > indexer.m() {
                return Err(Error::IndexOutOfRange {
                    index: d,
                    bound: indexer.m(),
                });
            }
            if e == 0 || e > indexer.extended() {
                return Err(Error::IndexOutOfRange {
                    index: e,
                    bound: indexer.extended(),
                });
            }
        }
        Ok(Self { pairs })
    }

    /// `k` uniformly random pairs.
    pub fn random<R: Rng + ?Sized>(indexer: &EdgeIndexer, k: usize, rng: &mut R) -> Result<Self> {
        let pairs = (0..k)
            .map(|_| {
                (
                    rng.random_range(1..=indexer.m()),
                    rng.random_range(1..=indexer.extended()),
                )
            })
            .collect();
        Self::new(indexer, pairs)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn satisfied_by(&self, f: &EdgeMap) -> bool {
        self.pairs.iter().all(|&(d, e)| f.table()[d - 1] == e)
    }
}

/// Evaluates a constraint set directly against a vertex map.
struct ConstraintChecker {
    indexer: EdgeIndexer,
    pairs: Vec<(Vec<usize>, usize)>,
}

impl ConstraintChecker {
    fn new(indexer: EdgeIndexer, c: &ConstraintSet) -> Self {
        let pairs = c
            .pairs()
            .iter()
            .map(|&(d, e)| (indexer.unrank_edge(d).expect("validated"), e))
            .collect();
        Self { indexer, pairs }
    }

    fn holds(&self, f: &[usize]) -> bool {
        let mut image = Vec::with_capacity(self.indexer.l());
        self.pairs.iter().all(|(edge, e)| {
            image.clear();
            image.extend(edge.iter().map(|&u| f[u - 1]));
            image.sort_unstable();
            image.dedup();
            self.indexer.rank_sorted(&image) == *e
        })
    }
}

/// Limits for exact enumeration.
#[derive(Clone, Copy, Debug)]
pub struct EnumerationGuard {
    /// Largest `n` for finite `r` (there are `r^n` functions `g`).
    pub max_n: usize,
    pub max_r: u64,
    /// Largest `n` for `r = ∞` (there are `n!` permutations).
    pub max_perm_n: usize,
}

impl Default for EnumerationGuard {
    fn default() -> Self {
        Self {
            max_n: 5,
            max_r: 8,
            max_perm_n: 8,
        }
    }
}

impl EnumerationGuard {
    fn check(&self, n: usize, r: RangeParam) -> Result<()> {
        let ok = match r {
            RangeParam::Finite(r) => n <= self.max_n && r <= self.max_r,
            RangeParam::Infinite => n <= self.max_perm_n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainTooLarge(format!(
                "exact enumeration of D_{r} at n = {n} exceeds the guard \
                 (n <= {}, r <= {}, permutations up to n = {})",
                self.max_n, self.max_r, self.max_perm_n
            )))
        }
    }
}

/// The exact law of `f` under `D_r`: `P(f) = weights[f] / denominator`.
#[derive(Clone, Debug)]
pub struct MapDistribution {
    n: usize,
    denominator: u128,
    /// Indexed by the base-`n` code of the map's table.
    weights: Vec<u128>,
}

impl MapDistribution {
    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    /// Maps with nonzero probability and their integer weights.
    pub fn support(&self) -> impl Iterator<Item = (VertexMap, u128)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(code, &w)| (decode_map(self.n, code), w))
    }

    pub fn probability(&self, f: &VertexMap) -> BigRational {
        let w = self.weights[encode_map(f.table())];
        BigRational::new(BigInt::from(w), BigInt::from(self.denominator))
    }

    /// Exact probability of the set of maps accepted by `pred`.
    pub fn probability_of(&self, mut pred: impl FnMut(&[usize]) -> bool) -> BigRational {
        let mut table = vec![0; self.n];
        let mut total: u128 = 0;
        for (code, &w) in self.weights.iter().enumerate() {
            if w == 0 {
                continue;
            }
            fill_table(self.n, code, &mut table);
            if pred(&table) {
                total += w;
            }
        }
        BigRational::new(BigInt::from(total), BigInt::from(self.denominator))
    }
}

fn encode_map(table: &[usize]) -> usize {
    let n = table.len();
    table.iter().rev().fold(0, |acc, &v| acc * n + (v - 1))
}

fn fill_table(n: usize, mut code: usize, table: &mut [usize]) {
    for slot in table.iter_mut() {
        *slot = code % n + 1;
        code /= n;
    }
}

fn decode_map(n: usize, code: usize) -> VertexMap {
    let mut table = vec![0; n];
    fill_table(n, code, &mut table);
    VertexMap::new(table).expect("decoded map in range")
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Enumerates every `(g, h)` pair (or every permutation for `r = ∞`) and
/// accumulates the law of `f = h ∘ g`.
pub fn enumerate_maps(spec: &DrSpec, guard: EnumerationGuard) -> Result<MapDistribution> {
    let n = spec.indexer.n();
    guard.check(n, spec.r)?;
    let mut weights = vec![0u128; n.pow(n as u32)];
    match spec.r {
        RangeParam::Infinite => {
            for p in (1..=n).permutations(n) {
                weights[encode_map(&p)] += 1;
            }
            Ok(MapDistribution {
                n,
                denominator: factorial(n),
                weights,
            })
        }
        RangeParam::Finite(r) => {
            // Each g has probability r^-n; each injection on a range of size s
            // has probability (n-s)!/n!. Over the common denominator r^n n!
            // a (g, h) pair contributes (n-s)!.
            let n_fact = factorial(n);
            let mut g = vec![0u64; n];
            let mut f = vec![0usize; n];
            loop {
                let mut range = g.clone();
                range.sort_unstable();
                range.dedup();
                let s = range.len();
                let slot: Vec<usize> = g
                    .iter()
                    .map(|v| range.binary_search(v).expect("value in range"))
                    .collect();
                let w = factorial(n - s);
                for h in (1..=n).permutations(s) {
                    for (fu, &j) in f.iter_mut().zip(&slot) {
                        *fu = h[j];
                    }
                    weights[encode_map(&f)] += w;
                }
                // Odometer over [r]^n.
                let mut pos = 0;
                while pos < n {
                    g[pos] += 1;
                    if g[pos] < r {
                        break;
                    }
                    g[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
            Ok(MapDistribution {
                n,
                denominator: (r as u128).pow(n as u32) * n_fact,
                weights,
            })
        }
    }
}

/// `P_{F ~ D_r}(F(d_i) = e_i for all i)`, exactly.
pub fn exact_constraint_prob(
    spec: &DrSpec,
    constraints: &ConstraintSet,
    guard: EnumerationGuard,
) -> Result<BigRational> {
    let dist = enumerate_maps(spec, guard)?;
    let checker = ConstraintChecker::new(spec.indexer, constraints);
    Ok(dist.probability_of(|f| checker.holds(f)))
}

/// A point where the fitted polynomial was compared with the exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub r: RangeParam,
    pub exact: BigRational,
    pub predicted: BigRational,
}

impl Residual {
    pub fn residual(&self) -> BigRational {
        &self.predicted - &self.exact
    }

    pub fn residual_f64(&self) -> f64 {
        self.residual().to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Interpolation of `r ↦ P_{D_r}(constraints)` as a polynomial in `1/r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCheck {
    /// `k * l - 1`.
    pub degree_bound: usize,
    /// Coefficients of `p(t) = sum_j c_j t^j`, lowest degree first.
    pub coefficients: Vec<BigRational>,
    /// The interpolation nodes `(r, exact probability)`.
    pub fit_points: Vec<(u64, BigRational)>,
    pub residuals: Vec<Residual>,
}

impl PolyCheck {
    pub fn evaluate(&self, t: &BigRational) -> BigRational {
        self.coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * t + c)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.residual_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Degree of the fitted polynomial after dropping zero leading terms.
    pub fn fitted_degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|c| !c.is_zero())
            .unwrap_or(0)
    }
}

/// Fits the degree-`(kl-1)` interpolant through `r = 1..=kl` and compares it
/// with the exact probabilities at `r = kl+1..=check_up_to` and at `r = ∞`.
pub fn verify_poly_degree(
    indexer: EdgeIndexer,
    constraints: &ConstraintSet,
    check_up_to: Option<u64>,
    guard: EnumerationGuard,
) -> Result<PolyCheck> {
    let k = constraints.len();
    let nodes = (k * indexer.l()) as u64;
    let check_up_to = check_up_to.unwrap_or(nodes + 3);
    let prob = |r: RangeParam| exact_constraint_prob(&DrSpec::new(indexer, r)?, constraints, guard);

    let fit_points: Vec<(u64, BigRational)> = (1..=nodes)
        .map(|r| Ok((r, prob(RangeParam::Finite(r))?)))
        .collect::<Result<_>>()?;
    let xs: Vec<BigRational> = fit_points
        .iter()
        .map(|&(r, _)| RangeParam::Finite(r).reciprocal())
        .collect();
    let ys: Vec<BigRational> = fit_points.iter().map(|(_, p)| p.clone()).collect();
    let coefficients = interpolate(&xs, &ys);

    let mut check = PolyCheck {
        degree_bound: nodes as usize - 1,
        coefficients,
        fit_points,
        residuals: Vec::new(),
    };
    let targets = ((nodes + 1)..=check_up_to)
        .map(RangeParam::Finite)
        .chain(std::iter::once(RangeParam::Infinite));
    for r in targets {
        let exact = prob(r)?;
        let predicted = check.evaluate(&r.reciprocal());
        check.residuals.push(Residual {
            r,
            exact,
            predicted,
        });
    }
    Ok(check)
}

/// Monomial coefficients of the Newton interpolant through `(xs, ys)`.
fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - level]);
        }
    }
    // Horner expansion of the Newton form.
    let mut coeffs = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        // coeffs <- coeffs * (t - xs[i]) + dd[i]
        let mut next = vec![BigRational::zero(); n];
        for j in 0..n {
            if coeffs[j].is_zero() {
                continue;
            }
            if j + 1 < n {
                next[j + 1] += &coeffs[j];
            }
            next[j] -= &coeffs[j] * &xs[i];
        }
        next[0] += &dd[i];
        coeffs = next;
    }
    coeffs
}
