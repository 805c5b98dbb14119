//! Hyperedges of `l`-uniform hypergraphs on `[n]`.
//!
//! Edges of each cardinality are ranked lexicographically on their sorted
//! vertex lists. The extended index space `[N]` lists the `l`-subsets first,
//! then the `(l-1)`-subsets, down to the singletons, so `[M]` is a prefix of
//! `[N]`. All vertex and edge indices in the public API are 1-based.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;

use crate::{Error, Result};

/// Largest extended index space an indexer will accept.
pub const MAX_EXTENDED: usize = 1 << 24;

/// Binomial coefficient, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Ranking of the hyperedges of an `l`-uniform hypergraph on `n` vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeIndexer {
    n: usize,
    l: usize,
    m: usize,
    ext: usize,
}

impl EdgeIndexer {
    pub fn new(n: usize, l: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if l == 0 || l > n {
            return Err(Error::InvalidParameter(format!(
                "uniformity l = {l} must satisfy 1 <= l <= n = {n}"
            )));
        }
        let m = binomial(n, l);
        let ext = (1..=l).try_fold(0usize, |acc, c| acc.checked_add(binomial(n, c)));
        match ext {
            Some(ext) if ext <= MAX_EXTENDED => Ok(Self { n, l, m, ext }),
            _ => Err(Error::DomainTooLarge(format!(
                "extended edge space for n = {n}, l = {l} exceeds {MAX_EXTENDED}"
            ))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of `l`-subsets, `C(n, l)`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Size of the extended space, `sum_{i=1}^{l} C(n, i)`.
    pub fn extended(&self) -> usize {
        self.ext
    }

    /// Number of indices before the block of `c`-subsets.
    fn class_offset(&self, c: usize) -> usize {
        ((c + 1)..=self.l).map(|j| binomial(self.n, j)).sum()
    }

    /// Rank of an edge given as a set of distinct vertices in any order.
    pub fn rank_edge(&self, edge: &[usize]) -> Result<usize> {
        if edge.is_empty() {
            return Err(Error::EmptyEdge);
        }
        if edge.len() > self.l {
            return Err(Error::EdgeTooLarge {
                size: edge.len(),
                l: self.l,
            });
        }
        let mut sorted = edge.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVertex(w[0]));
            }
        }
        for &v in &sorted {
            if v == 0 || v > self.n {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    n: self.n,
                });
            }
        }
        Ok(self.rank_sorted(&sorted))
    }

    /// Rank of a sorted, duplicate-free, in-range vertex list.
    pub(crate) fn rank_sorted(&self, sorted: &[usize]) -> usize {
        let c = sorted.len();
        let mut lex = 0;
        let mut prev = 0;
        for (j, &a) in sorted.iter().enumerate() {
            for v in (prev + 1)..a {
                lex += binomial(self.n - v, c - j - 1);
            }
            prev = a;
        }
        self.class_offset(c) + lex + 1
    }

    /// Sorted vertex list of the edge with the given index in `[N]`.
    pub fn unrank_edge(&self, index: usize) -> Result<Vec<usize>> {
        if index == 0 || index > self.ext {
            return Err(Error::IndexOutOfRange {
                index,
                bound: self.ext,
            });
        }
        let mut rest = index - 1;
        let mut c = self.l;
        loop {
            let size = binomial(self.n, c);
            if rest < size {
                break;
            }
            rest -= size;
            c -= 1;
        }
        let mut out = Vec::with_capacity(c);
        let mut v = 1;
        for j in 0..c {
            loop {
                let count = binomial(self.n - v, c - j - 1);
                if rest < count {
                    out.push(v);
                    v += 1;
                    break;
                }
                rest -= count;
                v += 1;
            }
        }
        Ok(out)
    }

    /// The `l`-subsets in index order, `edges()[i - 1]` being edge `i`.
    pub fn edges(&self) -> Vec<Vec<usize>> {
        (1..=self.n).combinations(self.l).collect()
    }
}

/// An `l`-uniform hypergraph as a presence bit per edge of `[M]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hypergraph {
    indexer: EdgeIndexer,
    bits: Vec<bool>,
}

impl Hypergraph {
    pub fn new(indexer: EdgeIndexer, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != indexer.m() {
            return Err(Error::InvalidParameter(format!(
                "expected {} edge bits, got {}",
                indexer.m(),
                bits.len()
            )));
        }
        Ok(Self { indexer, bits })
    }

    pub fn empty(indexer: EdgeIndexer) -> Self {
        Self {
            indexer,
            bits: vec![false; indexer.m()],
        }
    }

    /// Parses a string of `'0'`/`'1'` characters, edge 1 first.
    pub fn from_bitstring(indexer: EdgeIndexer, s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indexer, bits)
    }

    /// The `mask`-th hypergraph in the enumeration of `{0,1}^M`; bit `i` of
    /// `mask` is edge `i + 1`.
    pub fn from_mask(indexer: EdgeIndexer, mask: u64) -> Self {
        let bits = (0..indexer.m()).map(|i| mask >> i & 1 == 1).collect();
        Self { indexer, bits }
    }

    pub fn from_edges(indexer: EdgeIndexer, edges: &[&[usize]]) -> Result<Self> {
        let mut g = Self::empty(indexer);
        for e in edges {
            if e.len() != indexer.l() {
                return Err(Error::InvalidParameter(format!(
                    "edge {e:?} does not have {} vertices",
                    indexer.l()
                )));
            }
            let i = indexer.rank_edge(e)?;
            g.bits[i - 1] = true;
        }
        Ok(g)
    }

    pub fn indexer(&self) -> EdgeIndexer {
        self.indexer
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Presence bit of edge `i` in `[M]`.
    pub fn bit(&self, i: usize) -> Result<bool> {
        if i == 0 || i > self.bits.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.bits.len(),
            });
        }
        Ok(self.bits[i - 1])
    }

    pub fn set_bit(&mut self, i: usize, value: bool) -> Result<()> {
        self.bit(i)?;
        self.bits[i - 1] = value;
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, edge: &[usize]) -> Result<bool> {
        let i = self.indexer.rank_edge(edge)?;
        if i > self.indexer.m() {
            return Ok(false);
        }
        Ok(self.bits[i - 1])
    }

    /// `x ∘ F` for an edge map whose image lies in `[M]`.
    pub fn compose(&self, f: &EdgeMap) -> Result<Self> {
        if f.domain() != self.indexer.m() {
            return Err(Error::InvalidParameter(format!(
                "edge map domain {} does not match M = {}",
                f.domain(),
                self.indexer.m()
            )));
        }
        let bits = f
            .table()
            .iter()
            .map(|&j| {
                if j > self.indexer.m() {
                    Err(Error::IndexOutOfRange {
                        index: j,
                        bound: self.indexer.m(),
                    })
                } else {
                    Ok(self.bits[j - 1])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.indexer, bits)
    }

    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    /// Two-line text form: `n=<n> l=<l>` then the bit string.
    pub fn to_text(&self) -> String {
        format!(
            "n={} l={}\n{}\n",
            self.indexer.n(),
            self.indexer.l(),
            self.to_bitstring()
        )
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|s| !s.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let (mut n, mut l) = (None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed header field {field:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad number in {field:?}")))?;
            match key {
                "n" => n = Some(value),
                "l" => l = Some(value),
                _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
            }
        }
        let (n, l) = match (n, l) {
            (Some(n), Some(l)) => (n, l),
            _ => return Err(Error::Parse("header needs n= and l=".into())),
        };
        let body = lines
            .next()
            .ok_or_else(|| Error::Parse("missing bit line".into()))?;
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after bit line".into()));
        }
        Self::from_bitstring(EdgeIndexer::new(n, l)?, body)
    }
}

impl fmt::Display for Hypergraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// A function `[n] -> [n]`, stored 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexMap {
    table: Vec<usize>,
}

impl VertexMap {
    pub fn new(table: Vec<usize>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "vertex map on zero vertices".into(),
            ));
        }
        for &v in &table {
            if v == 0 || v > n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
        }
        Ok(Self { table })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            table: (1..=n).collect(),
        }
    }

    pub fn constant(n: usize, value: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Swaps `a` and `b`, fixing everything else.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut table: Vec<usize> = (1..=n).collect();
        if a == 0 || a > n {
            return Err(Error::VertexOutOfRange { vertex: a, n });
        }
        if b == 0 || b > n {
            return Err(Error::VertexOutOfRange { vertex: b, n });
        }
        table.swap(a - 1, b - 1);
        Ok(Self { table })
    }

    pub fn n(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, u: usize) -> usize {
        self.table[u - 1]
    }

    pub fn is_bijective(&self) -> bool {
        self.image_size() == self.table.len()
    }

    pub fn image_size(&self) -> usize {
        let mut seen = vec![false; self.table.len()];
        self.table
            .iter()
            .filter(|&&v| !std::mem::replace(&mut seen[v - 1], true))
            .count()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &VertexMap) -> Result<VertexMap> {
        if self.n() != other.n() {
            return Err(Error::InvalidParameter(
                "vertex maps of different size".into(),
            ));
        }
        Ok(Self {
            table: other.table.iter().map(|&u| self.apply(u)).collect(),
        })
    }

    /// All `n!` permutations of `[n]` in lexicographic order.
    pub fn permutations(n: usize) -> impl Iterator<Item = VertexMap> {
        (1..=n).permutations(n).map(|table| VertexMap { table })
    }
}

/// A function `[M] -> [N]` between edge indices, stored 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeMap {
    codomain: usize,
    table: Vec<usize>,
}

impl EdgeMap {
    pub fn new(codomain: usize, table: Vec<usize>) -> Result<Self> {
        for &j in &table {
            if j == 0 || j > codomain {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    bound: codomain,
                });
            }
        }
        Ok(Self { codomain, table })
    }

    /// The inclusion of `[M]` into `[N]`.
    pub fn identity(indexer: &EdgeIndexer) -> Self {
        Self {
            codomain: indexer.extended(),
            table: (1..=indexer.m()).collect(),
        }
    }

    pub fn domain(&self) -> usize {
        self.table.len()
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn get(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.table.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.table.len(),
            });
        }
        Ok(self.table[i - 1])
    }

    /// `Im(F) ∩ [m]`.
    pub fn image_within(&self, m: usize) -> BTreeSet<usize> {
        self.table.iter().copied().filter(|&j| j <= m).collect()
    }

    /// True when the map is a bijection of its domain onto `[domain]`.
    pub fn is_permutation(&self) -> bool {
        let m = self.table.len();
        self.image_within(m).len() == m
    }

    /// `self ∘ other`; `other`'s image must lie in `self`'s domain.
    pub fn compose(&self, other: &EdgeMap) -> Result<EdgeMap> {
        let table = other
            .table
            .iter()
            .map(|&j| self.get(j))
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeMap {
            codomain: self.codomain,
            table,
        })
    }
}

/// The edge map `F({u_1..u_l}) = {f(u_1)..f(u_l)}`; repeated images collapse,
/// so an edge may land on a smaller cardinality class of `[N]`.
pub fn induce_edge_map(f: &VertexMap, indexer: &EdgeIndexer) -> Result<EdgeMap> {
    if f.n() != indexer.n() {
        return Err(Error::InvalidParameter(format!(
            "vertex map on {} vertices used with n = {}",
            f.n(),
            indexer.n()
        )));
    }
    let mut image = Vec::with_capacity(indexer.l());
    let table = (1..=indexer.n())
        .combinations(indexer.l())
        .map(|edge| {
            image.clear();
            image.extend(edge.iter().map(|&u| f.apply(u)));
            image.sort_unstable();
            image.dedup();
            indexer.rank_sorted(&image)
        })
        .collect();
    Ok(EdgeMap {
        codomain: indexer.extended(),
        table,
    })
}

/// Result of reading bit `i` of `x ∘ F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MappedBit {
    Bit(bool),
    /// `F(i)` lies outside `[M]`, so the oracle leaves the bit register alone.
    Untouched,
}

pub fn apply_map_bit(x: &Hypergraph, f: &EdgeMap, i: usize) -> Result<MappedBit> {
    if i == 0 || i > x.indexer().m() {
        return Err(Error::IndexOutOfRange {
            index: i,
            bound: x.indexer().m(),
        });
    }
    let j = f.get(i)?;
    if j <= x.indexer().m() {
        Ok(MappedBit::Bit(x.bits[j - 1]))
    } else {
        Ok(MappedBit::Untouched)
    }
}

/// A (possibly partial) Boolean property of hypergraphs.
pub trait GraphProperty {
    fn indexer(&self) -> EdgeIndexer;

    fn in_promise(&self, _x: &Hypergraph) -> bool {
        true
    }

    fn value(&self, x: &Hypergraph) -> bool;

    fn name(&self) -> &str {
        "property"
    }
}

type Predicate = Box<dyn Fn(&Hypergraph) -> bool + Send + Sync>;

/// A property assembled from closures.
pub struct PredicateProperty {
    name: String,
    indexer: EdgeIndexer,
    promise: Option<Predicate>,
    value: Predicate,
}

impl PredicateProperty {
    pub fn new(
        name: impl Into<String>,
        indexer: EdgeIndexer,
        value: impl Fn(&Hypergraph) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            indexer,
            promise: None,
            value: Box::new(value),
        }
    }

    pub fn with_promise(
        mut self,
        promise: impl Fn(&Hypergraph) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.promise = Some(Box::new(promise));
        self
    }
}

impl GraphProperty for PredicateProperty {
    fn indexer(&self) -> EdgeIndexer {
        self.indexer
    }

    fn in_promise(&self, x: &Hypergraph) -> bool {
        self.promise.as_ref().is_none_or(|p| p(x))
    }

    fn value(&self, x: &Hypergraph) -> bool {
        (self.value)(x)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Ready-made properties used by the experiments and tests.
pub mod properties {
    use super::*;

    /// Graph (l = 2) contains a triangle.
    pub fn contains_triangle(n: usize) -> Result<PredicateProperty> {
        let indexer = EdgeIndexer::new(n, 2)?;
        let triangles: Vec<[usize; 3]> = (1..=n)
            .combinations(3)
            .map(|t| {
                [
                    indexer.rank_sorted(&[t[0], t[1]]),
                    indexer.rank_sorted(&[t[0], t[2]]),
                    indexer.rank_sorted(&[t[1], t[2]]),
                ]
            })
            .collect();
        Ok(PredicateProperty::new("triangle", indexer, move |x| {
            let bits = x.bits();
            triangles.iter().any(|t| t.iter().all(|&i| bits[i - 1]))
        }))
    }

    /// Odd number of hyperedges.
    pub fn edge_parity(indexer: EdgeIndexer) -> PredicateProperty {
        PredicateProperty::new("edge-parity", indexer, |x| x.edge_count() % 2 == 1)
    }

    /// Some vertex lies in at least `d` hyperedges.
    pub fn max_degree_at_least(indexer: EdgeIndexer, d: usize) -> PredicateProperty {
        let edges = indexer.edges();
        PredicateProperty::new(format!("max-degree>={d}"), indexer, move |x| {
            let mut deg = vec![0usize; indexer.n() + 1];
            for (e, &present) in edges.iter().zip(x.bits()) {
                if present {
                    for &v in e {
                        deg[v] += 1;
                    }
                }
            }
            deg.iter().any(|&c| c >= d)
        })
    }

    /// Edge `i` is present. Not invariant once some permutation moves `i`.
    pub fn bit_is_set(indexer: EdgeIndexer, i: usize) -> PredicateProperty {
        PredicateProperty::new(format!("bit-{i}"), indexer, move |x| x.bits()[i - 1])
    }
}

/// Limits for exhaustive invariance checking.
#[derive(Clone, Copy, Debug)]
pub struct InvarianceGuard {
    pub max_n: usize,
    pub max_m: usize,
}

impl Default for InvarianceGuard {
    fn default() -> Self {
        Self {
            max_n: 6,
            max_m: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Invariance {
    Holds {
        inputs_checked: usize,
        permutations: usize,
    },
    Violated {
        input: Hypergraph,
        permutation: VertexMap,
        /// True when membership in the promise changed, false when the value did.
        promise_broken: bool,
    },
}

impl Invariance {
    pub fn holds(&self) -> bool {
        matches!(self, Invariance::Holds { .. })
    }
}

/// Checks `x ∈ S ⇒ x∘Π ∈ S` and `P(x) = P(x∘Π)` for every input and every
/// permutation-induced `Π`.
pub fn check_invariance<P: GraphProperty + ?Sized>(
    property: &P,
    guard: InvarianceGuard,
) -> Result<Invariance> {
    let indexer = property.indexer();
    if indexer.n() > guard.max_n || indexer.m() > guard.max_m {
        return Err(Error::DomainTooLarge(format!(
            "exhaustive invariance check at n = {}, M = {} exceeds the guard (n <= {}, M <= {})",
            indexer.n(),
            indexer.m(),
            guard.max_n,
            guard.max_m
        )));
    }
    let perms: Vec<(VertexMap, EdgeMap)> = VertexMap::permutations(indexer.n())
        .map(|p| {
            let e = induce_edge_map(&p, &indexer)?;
            Ok((p, e))
        })
        .collect::<Result<_>>()?;
    let mut checked = 0;
    for mask in 0..(1u64 << indexer.m()) {
        let x = Hypergraph::from_mask(indexer, mask);
        if !property.in_promise(&x) {
            continue;
        }
        checked += 1;
        let value = property.value(&x);
        for (p, e) in &perms {
            let y = x.compose(e)?;
            if !property.in_promise(&y) {
                return Ok(Invariance::Violated {
                    input: x,
                    permutation: p.clone(),
                    promise_broken: true,
                });
            }
            if property.value(&y) != value {
                return Ok(Invariance::Violated {
                    input: x,
                    permutation: p.clone(),
                    promise_broken: false,
                });
            }
        }
    }
    Ok(Invariance::Holds {
        inputs_checked: checked,
        permutations: perms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(n: usize, l: usize) -> EdgeIndexer {
        EdgeIndexer::new(n, l).unwrap()
    }

    #[test]
    fn ranking_matches_the_worked_identification() {
        let ix = idx(4, 2);
        let expected = [[1, 2], [1, 3], [1, 4], [2, 3], [2, 4], [3, 4]];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(ix.rank_edge(e).unwrap(), i + 1);
        }
        assert_eq!(ix.rank_edge(&[4, 3]).unwrap(), 6);
        assert_eq!(idx(3, 3).rank_edge(&[1, 2, 3]).unwrap(), 1);
        assert_eq!(idx(3, 2).rank_edge(&[1]).unwrap(), 4);
        assert_eq!(idx(3, 2).rank_edge(&[3]).unwrap(), 6);
    }

    #[test]
    fn sizes() {
        let ix = idx(4, 2);
        assert_eq!((ix.m(), ix.extended()), (6, 10));
        let ix = idx(5, 3);
        assert_eq!((ix.m(), ix.extended()), (10, 25));
    }

    #[test]
    fn rank_errors() {
        let ix = idx(4, 2);
        assert_eq!(
            ix.rank_edge(&[1, 5]),
            Err(Error::VertexOutOfRange { vertex: 5, n: 4 })
        );
        assert_eq!(
            ix.rank_edge(&[1, 2, 3]),
            Err(Error::EdgeTooLarge { size: 3, l: 2 })
        );
        assert_eq!(ix.rank_edge(&[2, 2]), Err(Error::DuplicateVertex(2)));
        assert_eq!(ix.rank_edge(&[]), Err(Error::EmptyEdge));
        assert!(ix.unrank_edge(0).is_err());
        assert!(ix.unrank_edge(11).is_err());
        assert!(EdgeIndexer::new(3, 4).is_err());
        assert!(EdgeIndexer::new(0, 1).is_err());
    }

    #[test]
    fn rank_unrank_exhaustive() {
        for n in 1..=8 {
            for l in 1..=n.min(3) {
                let ix = idx(n, l);
                for i in 1..=ix.extended() {
                    let e = ix.unrank_edge(i).unwrap();
                    assert_eq!(ix.rank_edge(&e).unwrap(), i, "n={n} l={l} i={i}");
                }
                // Every nonempty subset of size <= l is hit exactly once.
                let mut count = 0;
                for c in 1..=l {
                    for e in (1..=n).combinations(c) {
                        let i = ix.rank_edge(&e).unwrap();
                        assert_eq!(ix.unrank_edge(i).unwrap(), e);
                        count += 1;
                    }
                }
                assert_eq!(count, ix.extended());
                // Classes are ordered l down to 1 and lexicographic inside.
                let ranked: Vec<Vec<usize>> = (1..=ix.extended())
                    .map(|i| ix.unrank_edge(i).unwrap())
                    .collect();
                for w in ranked.windows(2) {
                    assert!(w[0].len() > w[1].len() || (w[0].len() == w[1].len() && w[0] < w[1]));
                }
            }
        }
    }

    #[test]
    fn fig1_graph() {
        let ix = idx(4, 2);
        let x = Hypergraph::from_edges(ix, &[&[1, 2], &[2, 4], &[2, 3], &[3, 4]]).unwrap();
        assert_eq!(x.to_bitstring(), "100111");
        let f = EdgeMap::identity(&ix);
        assert_eq!(apply_map_bit(&x, &f, 1).unwrap(), MappedBit::Bit(true));
        assert_eq!(apply_map_bit(&x, &f, 2).unwrap(), MappedBit::Bit(false));
    }

    #[test]
    fn map_bit_untouched_and_zero() {
        let ix = idx(4, 2);
        let x = Hypergraph::from_bitstring(ix, "111111").unwrap();
        let f = EdgeMap::new(10, vec![7, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(apply_map_bit(&x, &f, 1).unwrap(), MappedBit::Untouched);
        let zero = Hypergraph::empty(ix);
        for i in 2..=6 {
            assert_eq!(apply_map_bit(&zero, &f, i).unwrap(), MappedBit::Bit(false));
        }
        assert!(apply_map_bit(&x, &f, 7).is_err());
    }

    #[test]
    fn induced_maps_small_cases() {
        let ix = idx(3, 2);
        let id = induce_edge_map(&VertexMap::identity(3), &ix).unwrap();
        assert_eq!(id.table(), &[1, 2, 3]);

        // (1 2): {1,2} fixed, {1,3} <-> {2,3}.
        let t = VertexMap::transposition(3, 1, 2).unwrap();
        let e = induce_edge_map(&t, &ix).unwrap();
        let r12 = ix.rank_edge(&[1, 2]).unwrap();
        let r13 = ix.rank_edge(&[1, 3]).unwrap();
        let r23 = ix.rank_edge(&[2, 3]).unwrap();
        assert_eq!(e.get(r12).unwrap(), r12);
        assert_eq!(e.get(r13).unwrap(), r23);
        assert_eq!(e.get(r23).unwrap(), r13);

        let c = induce_edge_map(&VertexMap::constant(3, 1).unwrap(), &ix).unwrap();
        assert_eq!(c.table(), &[4, 4, 4]);
        assert!(c.image_within(3).is_empty());
    }

    #[test]
    fn induced_action_is_a_homomorphism() {
        for n in 2..=5 {
            for l in 1..=n.min(3) {
                let ix = idx(n, l);
                let perms: Vec<VertexMap> = VertexMap::permutations(n).collect();
                let induced: Vec<EdgeMap> = perms
                    .iter()
                    .map(|p| induce_edge_map(p, &ix).unwrap())
                    .collect();
                for e in &induced {
                    assert!(e.is_permutation());
                }
                // Sample pairs to keep n = 5 cheap.
                for (a, (f, ef)) in perms.iter().zip(&induced).enumerate().step_by(7) {
                    for (g, eg) in perms.iter().zip(&induced).skip(a % 5).step_by(5) {
                        let fg = induce_edge_map(&f.compose(g).unwrap(), &ix).unwrap();
                        assert_eq!(fg, ef.compose(eg).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn invariance_of_standard_properties() {
        let guard = InvarianceGuard::default();
        let tri = properties::contains_triangle(4).unwrap();
        assert!(check_invariance(&tri, guard).unwrap().holds());
        let par = properties::edge_parity(idx(4, 2));
        assert_eq!(
            check_invariance(&par, guard).unwrap(),
            Invariance::Holds {
                inputs_checked: 64,
                permutations: 24
            }
        );
        let deg = properties::max_degree_at_least(idx(5, 2), 3);
        assert!(check_invariance(&deg, guard).unwrap().holds());
        let deg3 = properties::max_degree_at_least(idx(4, 3), 2);
        assert!(check_invariance(&deg3, guard).unwrap().holds());
    }

    #[test]
    fn invariance_counterexample() {
        let ix = idx(3, 2);
        let p = properties::bit_is_set(ix, 1);
        match check_invariance(&p, InvarianceGuard::default()).unwrap() {
            Invariance::Violated {
                input,
                permutation,
                promise_broken,
            } => {
                assert!(!promise_broken);
                let moved = input
                    .compose(&induce_edge_map(&permutation, &ix).unwrap())
                    .unwrap();
                assert_ne!(input.bits()[0], moved.bits()[0]);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn promise_breaking_is_reported() {
        // Promise "edge {1,2} absent" is not closed under relabelling.
        let ix = idx(3, 2);
        let p = PredicateProperty::new("const", ix, |_| false).with_promise(|x| !x.bits()[0]);
        match check_invariance(&p, InvarianceGuard::default()).unwrap() {
            Invariance::Violated { promise_broken, .. } => assert!(promise_broken),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn invariance_guard() {
        let p = properties::edge_parity(idx(7, 2));
        assert!(matches!(
            check_invariance(&p, InvarianceGuard::default()),
            Err(Error::DomainTooLarge(_))
        ));
    }

    #[test]
    fn text_format() {
        let ix = idx(4, 2);
        let x = Hypergraph::from_bitstring(ix, "100111").unwrap();
        assert_eq!(x.to_text(), "n=4 l=2\n100111\n");
        assert_eq!(Hypergraph::parse_text(&x.to_text()).unwrap(), x);
        assert!(Hypergraph::parse_text("n=4 l=2\n10011").is_err());
        assert!(Hypergraph::parse_text("n=4\n100111").is_err());
        assert!(Hypergraph::parse_text("n=4 l=2\n10011x").is_err());
    }

    proptest! {
        #[test]
        fn composition_with_permutation_preserves_edge_count(
            mask in 0u64..(1 << 10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let ix = idx(5, 2);
            let x = Hypergraph::from_mask(ix, mask);
            let mut table: Vec<usize> = (1..=5).collect();
            table.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p = VertexMap::new(table).unwrap();
            let y = x.compose(&induce_edge_map(&p, &ix).unwrap()).unwrap();
            prop_assert_eq!(x.edge_count(), y.edge_count());
        }
    }
}
