//! The randomized decision tree built from a boosted query circuit, and the
//! closeness of its collapsed-map output distribution to the permuted one.
//!
//! The tree draws `F ~ D_r`, reads the input bits whose indices lie in the
//! image of `F` inside `[M]`, and then answers like the circuit with every
//! oracle call routed through `F`. That last step only ever looks at the bits
//! already read, so it costs no further queries.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::dr::{self, DrSpec, EnumerationGuard, RangeParam, SampledMap};
use crate::edges::{EdgeIndexer, Hypergraph, VertexMap};
use crate::qsim::{substitute_oracles, EdgeBits, OutputDistribution, QueriedBits, QueryCircuit};
use crate::seed::trial_rng;
use crate::{Error, Result};

/// Degree bound of the acceptance probabilities as polynomials in `1/r`.
pub fn degree_bound(q: u64, l: u64) -> Result<u64> {
    12u64
        .checked_mul(q)
        .and_then(|v| v.checked_mul(l))
        .and_then(|v| v.checked_sub(1))
        .ok_or_else(|| {
            Error::InvalidParameter(format!("degree bound undefined for q = {q}, l = {l}"))
        })
}

/// `π² d³ / (3r)`: bound on `sum_z |P_{D_r}(z) - P_{D_∞}(z)|` for a circuit
/// with `3q` queries on an `l`-uniform input.
pub fn closeness_bound(q: u64, l: u64, r: RangeParam) -> Result<f64> {
    let d = degree_bound(q, l)? as f64;
    Ok(match r {
        RangeParam::Infinite => 0.0,
        RangeParam::Finite(r) => PI * PI * d.powi(3) / (3.0 * r as f64),
    })
}

/// Smallest range size for which the closeness bound is at most `2/27`.
pub fn s_param(q: u64, l: u64) -> Result<u64> {
    let d = degree_bound(q, l)? as f64;
    let s = (PI * PI * d.powi(3) / 3.0 * 13.5).ceil();
    if !s.is_finite() || s >= 2f64.powi(63) {
        return Err(Error::DomainTooLarge(format!(
            "s overflows for q = {q}, l = {l}"
        )));
    }
    Ok(s as u64)
}

/// A boosted circuit and the range size the tree samples with.
#[derive(Clone, Debug)]
pub struct DequantizerConfig {
    circuit: QueryCircuit,
    r: RangeParam,
    indexer: EdgeIndexer,
}

impl DequantizerConfig {
    pub fn new(circuit: QueryCircuit, r: RangeParam, indexer: EdgeIndexer) -> Result<Self> {
        let counts = circuit.oracle_counts();
        if counts.composed > 0 {
            return Err(Error::InvalidParameter(
                "the tree substitutes the oracles itself; pass the plain circuit".into(),
            ));
        }
        if counts.plain == 0 || !counts.plain.is_multiple_of(3) {
            return Err(Error::InvalidParameter(format!(
                "expected a boosted circuit with 3q queries, found {}",
                counts.plain
            )));
        }
        if circuit.index_dim() != Some(indexer.m()) {
            return Err(Error::LayoutMismatch(format!(
                "circuit index register does not match M = {}",
                indexer.m()
            )));
        }
        Ok(Self {
            circuit,
            r,
            indexer,
        })
    }

    pub fn circuit(&self) -> &QueryCircuit {
        &self.circuit
    }

    pub fn r(&self) -> RangeParam {
        self.r
    }

    pub fn indexer(&self) -> EdgeIndexer {
        self.indexer
    }

    /// Queries of the unboosted circuit.
    pub fn q(&self) -> u64 {
        (self.circuit.query_count() / 3) as u64
    }

    pub fn bound(&self) -> Result<f64> {
        closeness_bound(self.q(), self.indexer.l() as u64, self.r)
    }
}

/// One execution of the tree.
#[derive(Clone, Debug)]
pub struct TreeRun {
    pub output: bool,
    /// Output law of the substituted circuit for the drawn map.
    pub distribution: OutputDistribution,
    /// `Im(F) ∩ [M]`, the bits read.
    pub queried: Vec<usize>,
    /// Bits the simulation actually looked at; always a subset of `queried`.
    pub reads: Vec<usize>,
    pub map: SampledMap,
}

impl TreeRun {
    pub fn cost(&self) -> usize {
        self.queried.len()
    }
}

/// Reads `Im(F) ∩ [M]` from `x` and evaluates the substituted circuit on
/// those bits alone.
fn evaluate_on_image(
    circuit: &QueryCircuit,
    x: &dyn EdgeBits,
    map: &SampledMap,
) -> Result<(OutputDistribution, QueriedBits)> {
    let image = map.edge_map.image_within(x.m());
    let known = QueriedBits::restrict(x, image)?;
    let dist = substitute_oracles(circuit, &map.edge_map)?.run(&known)?;
    Ok((dist, known))
}

pub fn run_r<R: Rng + ?Sized>(
    cfg: &DequantizerConfig,
    x: &Hypergraph,
    rng: &mut R,
) -> Result<TreeRun> {
    if x.indexer() != cfg.indexer {
        return Err(Error::InvalidParameter(
            "input does not match the configured (n, l)".into(),
        ));
    }
    let map = dr::sample(&DrSpec::new(cfg.indexer, cfg.r)?, rng);
    let (distribution, known) = evaluate_on_image(&cfg.circuit, x, &map)?;
    let output = distribution.sample(rng);
    Ok(TreeRun {
        output,
        distribution,
        queried: known.known().keys().copied().collect(),
        reads: known.reads().into_iter().collect(),
        map,
    })
}

/// Mean of i.i.d. samples with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            std_err: 0.0,
            samples: 0,
        }
    }

    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::exact(f64::NAN);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// `z` standard errors.
    pub fn radius(&self, z: f64) -> f64 {
        z * self.std_err
    }
}

/// Whether success trials score the exact per-map probability of the right
/// answer or a sampled output bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScoreMode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuccessReport {
    pub success: Estimate,
    pub mean_cost: f64,
    pub max_cost: usize,
}

/// Success probability of the tree on `x` against `expected`, over `trials`
/// independent runs seeded from `root_seed`.
pub fn success_rate(
    cfg: &DequantizerConfig,
    x: &Hypergraph,
    expected: bool,
    trials: usize,
    root_seed: u64,
    mode: ScoreMode,
) -> Result<SuccessReport> {
    let mut scores = Vec::with_capacity(trials);
    let mut costs = Vec::with_capacity(trials);
    for t in 0..trials {
        let run = run_r(cfg, x, &mut trial_rng(root_seed, t as u64))?;
        scores.push(match mode {
            ScoreMode::Exact => run.distribution.prob(expected),
            ScoreMode::Sampled => f64::from(u8::from(run.output == expected)),
        });
        costs.push(run.cost());
    }
    Ok(SuccessReport {
        success: Estimate::from_samples(&scores),
        mean_cost: costs.iter().sum::<usize>() as f64 / trials.max(1) as f64,
        max_cost: costs.into_iter().max().unwrap_or(0),
    })
}

/// Limits for [`closeness_tv`].
#[derive(Clone, Copy, Debug)]
pub struct ClosenessBudget {
    /// Map samples per mixture when it cannot be enumerated.
    pub samples: usize,
    pub seed: u64,
    pub guard: EnumerationGuard,
}

impl Default for ClosenessBudget {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            guard: EnumerationGuard::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Closeness {
    pub r: String,
    /// `P(output 1)` under `D_r` and under `D_∞`.
    pub p1_r: Estimate,
    pub p1_inf: Estimate,
    /// `sum_z |P_r(z) - P_∞(z)|`.
    pub tv: f64,
    /// Four standard errors of `tv`; zero when both mixtures are exact.
    pub radius: f64,
    pub exact: bool,
}

/// Output law per vertex map, memoised: at desk scale far fewer distinct
/// maps occur than samples are drawn.
struct MixtureEvaluator<'a> {
    circuit: &'a QueryCircuit,
    x: &'a Hypergraph,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'a> MixtureEvaluator<'a> {
    fn p1(&mut self, f: &VertexMap) -> Result<f64> {
        if let Some(&p) = self.cache.get(f.table()) {
            return Ok(p);
        }
        let edge_map = crate::edges::induce_edge_map(f, &self.x.indexer())?;
        let map = SampledMap {
            f: f.clone(),
            edge_map,
            r: RangeParam::Infinite,
            seed: None,
        };
        let p = evaluate_on_image(self.circuit, self.x, &map)?.0.p1;
        self.cache.insert(f.table().to_vec(), p);
        Ok(p)
    }

    fn mixture(
        &mut self,
        r: RangeParam,
        budget: &ClosenessBudget,
        stream: u64,
    ) -> Result<(Estimate, bool)> {
        let spec = DrSpec::new(self.x.indexer(), r)?;
        match dr::enumerate_maps(&spec, budget.guard) {
            Ok(dist) => {
                let den = dist.denominator() as f64;
                let mut p = 0.0;
                for (f, w) in dist.support() {
                    p += self.p1(&f)? * (w as f64 / den);
                }
                Ok((Estimate::exact(p), true))
            }
            Err(Error::DomainTooLarge(_)) => {
                if budget.samples == 0 {
                    return Err(Error::InvalidParameter("sample budget is zero".into()));
                }
                let mut rng = trial_rng(budget.seed, stream);
                let values = (0..budget.samples)
                    .map(|_| self.p1(&dr::sample(&spec, &mut rng).f))
                    .collect::<Result<Vec<_>>>()?;
                Ok((Estimate::from_samples(&values), false))
            }
            Err(e) => Err(e),
        }
    }
}

/// Distance between the output laws of the circuit under `D_r` and under
/// `D_∞` on input `x`. `circuit` is the plain circuit (boosted or not); the
/// map substitution happens here.
pub fn closeness_tv(
    circuit: &QueryCircuit,
    x: &Hypergraph,
    r: RangeParam,
    budget: &ClosenessBudget,
) -> Result<Closeness> {
    let mut eval = MixtureEvaluator {
        circuit,
        x,
        cache: HashMap::new(),
    };
    let stream = match r {
        RangeParam::Finite(r) => r,
        RangeParam::Infinite => 0,
    };
    let (p1_inf, inf_exact) = eval.mixture(RangeParam::Infinite, budget, 0)?;
    let (p1_r, r_exact) = match r {
        RangeParam::Infinite => (p1_inf, inf_exact),
        _ => eval.mixture(r, budget, stream)?,
    };
    // Both outcomes differ by the same amount, so the L1 distance is twice
    // the gap in P(1).
    let tv = 2.0 * (p1_r.mean - p1_inf.mean).abs();
    let radius = if r == RangeParam::Infinite {
        0.0
    } else {
        2.0 * 4.0 * (p1_r.std_err.powi(2) + p1_inf.std_err.powi(2)).sqrt()
    };
    Ok(Closeness {
        r: r.to_string(),
        p1_r,
        p1_inf,
        tv,
        radius,
        exact: r_exact && inf_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::properties;
    use crate::edges::GraphProperty;
    use crate::qsim::{boost_majority3, library, run_circuit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn s_param_golden_values() {
        // Frozen from a 50-digit evaluation of ceil(π² (12ql-1)³ · 27 / 6).
        let golden = [
            ((1, 1), 59_114),
            ((1, 2), 540_376),
            ((1, 3), 1_904_217),
            ((2, 1), 540_376),
            ((2, 2), 4_611_114),
            ((2, 3), 15_895_980),
        ];
        for ((q, l), s) in golden {
            assert_eq!(s_param(q, l).unwrap(), s, "q={q} l={l}");
        }
        assert!(s_param(2, 2).unwrap() > s_param(1, 2).unwrap());
        assert!(s_param(0, 1).is_err());
        assert!(s_param(1 << 20, 1 << 20).is_err());
    }

    #[test]
    fn s_param_makes_bound_two_27ths() {
        for q in 1..4 {
            for l in 1..4 {
                let s = s_param(q, l).unwrap();
                let at = closeness_bound(q, l, RangeParam::Finite(s)).unwrap();
                let below = closeness_bound(q, l, RangeParam::Finite(s - 1)).unwrap();
                assert!(at <= 2.0 / 27.0 && below > 2.0 / 27.0);
            }
        }
    }

    fn parity_setup(n: usize, r: RangeParam) -> (DequantizerConfig, EdgeIndexer) {
        let ix = EdgeIndexer::new(n, 2).unwrap();
        let c = boost_majority3(&library::parity_circuit(ix.m()).unwrap()).unwrap();
        (DequantizerConfig::new(c, r, ix).unwrap(), ix)
    }

    #[test]
    fn config_rejects_unboosted_or_mismatched_circuits() {
        let ix = EdgeIndexer::new(3, 2).unwrap();
        let plain = library::parity_circuit(3).unwrap();
        assert!(DequantizerConfig::new(plain.clone(), RangeParam::Infinite, ix).is_err());
        let boosted = boost_majority3(&plain).unwrap();
        let other = EdgeIndexer::new(4, 2).unwrap();
        assert!(DequantizerConfig::new(boosted, RangeParam::Infinite, other).is_err());
    }

    #[test]
    fn permutations_give_exact_parity() {
        // Edge parity is invariant, so under D_∞ the tree always answers it.
        let (cfg, ix) = parity_setup(3, RangeParam::Infinite);
        let parity = properties::edge_parity(ix);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mask in 0..8 {
            let x = Hypergraph::from_mask(ix, mask);
            let run = run_r(&cfg, &x, &mut rng).unwrap();
            assert_eq!(run.cost(), 3);
            assert!((run.distribution.prob(parity.value(&x)) - 1.0).abs() < 1e-10);
            assert!(run.reads.iter().all(|i| run.queried.contains(i)));
        }
    }

    #[test]
    fn constant_maps_cost_nothing() {
        let (cfg, ix) = parity_setup(4, RangeParam::Finite(1));
        let x = Hypergraph::from_mask(ix, 0b110101);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let run = run_r(&cfg, &x, &mut rng).unwrap();
            assert_eq!(run.cost(), 0);
            assert!(run.reads.is_empty());
        }
    }

    #[test]
    fn reads_stay_inside_the_image() {
        let (cfg, ix) = parity_setup(4, RangeParam::Finite(3));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..40 {
            let x = Hypergraph::from_mask(ix, t * 13 % 64);
            let run = run_r(&cfg, &x, &mut rng).unwrap();
            let image = run.map.edge_map.image_within(ix.m());
            assert_eq!(run.queried, image.iter().copied().collect::<Vec<_>>());
            assert!(run.reads.iter().all(|i| image.contains(i)));
            assert!(run.cost() <= ix.m());
        }
    }

    #[test]
    fn tree_matches_direct_substitution() {
        let (cfg, ix) = parity_setup(3, RangeParam::Finite(2));
        let x = Hypergraph::from_mask(ix, 0b011);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let run = run_r(&cfg, &x, &mut rng).unwrap();
            let direct = substitute_oracles(cfg.circuit(), &run.map.edge_map)
                .unwrap()
                .run(&x)
                .unwrap();
            assert!((direct.p1 - run.distribution.p1).abs() < 1e-12);
        }
    }

    #[test]
    fn closeness_is_zero_at_infinity_and_exact_for_small_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ix = EdgeIndexer::new(3, 2).unwrap();
        let c = boost_majority3(&library::random_circuit(3, 1, 1, &mut rng).unwrap()).unwrap();
        let x = Hypergraph::from_mask(ix, 0b101);
        let b = ClosenessBudget::default();
        let inf = closeness_tv(&c, &x, RangeParam::Infinite, &b).unwrap();
        assert_eq!(inf.tv, 0.0);
        assert!(inf.exact);
        let r4 = closeness_tv(&c, &x, RangeParam::Finite(4), &b).unwrap();
        assert!(r4.exact && r4.radius == 0.0);

        // Independent check of the exact D_∞ mixture: average over all six
        // permutations of the plain circuit on the permuted input.
        let perms: Vec<_> = VertexMap::permutations(3).collect();
        let direct = perms
            .iter()
            .map(|p| {
                let f = crate::edges::induce_edge_map(p, &ix).unwrap();
                run_circuit(&c, &x.compose(&f).unwrap(), None).unwrap().p1
            })
            .sum::<f64>()
            / perms.len() as f64;
        assert!((inf.p1_inf.mean - direct).abs() < 1e-12);
    }

    #[test]
    fn sampled_closeness_agrees_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ix = EdgeIndexer::new(3, 2).unwrap();
        let c = boost_majority3(&library::random_circuit(3, 1, 1, &mut rng).unwrap()).unwrap();
        let x = Hypergraph::from_mask(ix, 0b110);
        let exact =
            closeness_tv(&c, &x, RangeParam::Finite(6), &ClosenessBudget::default()).unwrap();
        let sampled_budget = ClosenessBudget {
            samples: 20_000,
            seed: 3,
            guard: EnumerationGuard {
                max_r: 4,
                ..EnumerationGuard::default()
            },
        };
        let sampled = closeness_tv(&c, &x, RangeParam::Finite(6), &sampled_budget).unwrap();
        assert!(!sampled.exact);
        assert!((sampled.p1_r.mean - exact.p1_r.mean).abs() <= sampled.p1_r.radius(4.0) + 1e-12);
    }
}
