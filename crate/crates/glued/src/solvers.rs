//! Deciding whether the graph has a degree-5 vertex.
//!
//! The quantum algorithm runs in two stages. Stage 1 is classical: find a
//! POINTER by random probing, climb to ENTRANCE, and work out which two of
//! ENTRANCE's neighbours lead towards EXIT. Stage 2 runs the quantum walk
//! from ENTRANCE and measures; here the measurement is simulated by sampling
//! the walk's column distribution, and each walk of duration `t` is charged
//! `ceil(t)` queries. The sampled vertex is checked with real queries.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::instance::{GluedInstance, Label, Variant};
use crate::oracle::{is_exit_degree, AdjOracle};
use crate::walk::{best_exit_time, WalkHamiltonian};
use crate::{Error, Result};

/// Neighbour lists fetched so far, with a hard query budget.
pub struct Explorer<'o, 'a> {
    oracle: &'o mut AdjOracle<'a>,
    cache: HashMap<Label, Vec<Label>>,
    budget: u64,
    memo: bool,
}

impl<'o, 'a> Explorer<'o, 'a> {
    pub fn new(oracle: &'o mut AdjOracle<'a>, budget: u64) -> Self {
        Self {
            oracle,
            cache: HashMap::new(),
            budget,
            memo: true,
        }
    }

    /// Re-query every vertex on every visit.
    pub fn forgetful(oracle: &'o mut AdjOracle<'a>, budget: u64) -> Self {
        Self {
            memo: false,
            ..Self::new(oracle, budget)
        }
    }

    pub fn queries(&self) -> u64 {
        self.oracle.count()
    }

    pub fn exhausted(&self) -> bool {
        self.oracle.count() >= self.budget
    }

    pub fn random_label<R: Rng + ?Sized>(&self, rng: &mut R) -> Label {
        Label(rng.random_range(1..=self.oracle.n()))
    }

    /// Neighbours of `u`, or `None` if the budget ran out first.
    pub fn fetch(&mut self, u: Label) -> Result<Option<Vec<Label>>> {
        if let Some(nb) = self.cache.get(&u) {
            return Ok(Some(nb.clone()));
        }
        let nb = match self.oracle.mode() {
            crate::OracleMode::Full => {
                if self.exhausted() {
                    return Ok(None);
                }
                self.oracle.query_all(u)?
            }
            crate::OracleMode::Slot => {
                let mut nb = Vec::new();
                for slot in 1..=crate::instance::MAX_DEGREE {
                    if self.exhausted() {
                        return Ok(None);
                    }
                    match self.oracle.query(u, slot)? {
                        Some(v) => nb.push(v),
                        None => break,
                    }
                }
                nb
            }
        };
        if self.memo {
            self.cache.insert(u, nb.clone());
        }
        Ok(Some(nb))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage1Result {
    pub entrance: Label,
    /// ENTRANCE's neighbours that do not lead to a POINTER within `2k` steps.
    pub toward_exit: Vec<Label>,
    /// The neighbour the climb arrived from.
    pub arrived_from: Label,
    /// The neighbour eliminated by reaching a POINTER.
    pub eliminated: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Stage1Outcome {
    Entrance(Stage1Result),
    /// A vertex with two or five neighbours turned up along the way.
    ExitWitnessed {
        exit: Label,
        degree: usize,
    },
    BudgetExceeded,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage1Report {
    pub outcome: Stage1Outcome,
    pub queries: u64,
}

/// Default Stage-1 query budget, `500 k²`.
pub fn default_stage1_budget(k: u32) -> u64 {
    500 * (k as u64).pow(2)
}

enum Step {
    Found(Vec<Label>),
    Exit(Label, usize),
    OutOfBudget,
}

fn look(ex: &mut Explorer<'_, '_>, u: Label) -> Result<Step> {
    Ok(match ex.fetch(u)? {
        None => Step::OutOfBudget,
        Some(nb) if is_exit_degree(nb.len()) => Step::Exit(u, nb.len()),
        Some(nb) => Step::Found(nb),
    })
}

macro_rules! look_or_return {
    ($ex:expr, $u:expr) => {
        match look($ex, $u)? {
            Step::Found(nb) => nb,
            Step::Exit(exit, degree) => return Ok(Stage1Outcome::ExitWitnessed { exit, degree }),
            Step::OutOfBudget => return Ok(Stage1Outcome::BudgetExceeded),
        }
    };
}

pub fn stage1_find_entrance<R: Rng + ?Sized>(
    oracle: &mut AdjOracle<'_>,
    k: u32,
    budget: u64,
    rng: &mut R,
) -> Result<Stage1Report> {
    let start = oracle.count();
    let mut ex = Explorer::new(oracle, start + budget);
    let outcome = stage1_inner(&mut ex, k, rng)?;
    Ok(Stage1Report {
        outcome,
        queries: ex.queries() - start,
    })
}

fn stage1_inner<R: Rng + ?Sized>(
    ex: &mut Explorer<'_, '_>,
    k: u32,
    rng: &mut R,
) -> Result<Stage1Outcome> {
    // Probe until a degree-1 vertex turns up.
    let pointer = loop {
        let u = ex.random_label(rng);
        let nb = look_or_return!(ex, u);
        if nb.len() == 1 {
            break u;
        }
    };

    // Climb. `path[h]` is the vertex believed to be at height h; `wrong`
    // records, per vertex, the neighbour known to lead back down.
    let mut path = vec![pointer];
    let mut wrong: HashMap<Label, Label> = HashMap::new();
    let mut walk = vec![pointer];
    let entrance = loop {
        let cur = *walk.last().expect("walk starts at the pointer");
        let nb = look_or_return!(ex, cur);
        match nb.len() {
            4 => break cur,
            1 if walk.len() > 1 => {
                // Reached another POINTER after `steps` moves: the wrong turn
                // was taken at the midpoint.
                let steps = walk.len() - 1;
                let mid = steps / 2;
                if steps % 2 != 0 || mid == 0 {
                    return Err(Error::Internal(format!(
                        "pointer reached after {steps} steps"
                    )));
                }
                wrong.insert(walk[mid], walk[mid + 1]);
                walk.truncate(mid + 1);
                path.truncate(mid + 1);
                continue;
            }
            _ => {}
        }
        let prev = if walk.len() >= 2 {
            Some(walk[walk.len() - 2])
        } else {
            None
        };
        let on_path = walk.len() == path.len();
        let candidates: Vec<Label> = nb
            .iter()
            .copied()
            .filter(|&v| Some(v) != prev && (!on_path || wrong.get(&cur) != Some(&v)))
            .collect();
        let next = *candidates
            .choose(rng)
            .ok_or_else(|| Error::Internal(format!("no way forward from {cur}")))?;
        walk.push(next);
        if on_path {
            path.push(next);
        }
    };

    // Which of ENTRANCE's other three neighbours leads to a POINTER?
    let arrived_from = walk[walk.len() - 2];
    let nb = look_or_return!(ex, entrance);
    let others: Vec<Label> = nb.into_iter().filter(|&v| v != arrived_from).collect();
    let mut toward_exit = Vec::new();
    let mut eliminated = Vec::new();
    for &first in &others {
        let (mut prev, mut cur) = (entrance, first);
        let mut reached_pointer = false;
        for _ in 0..2 * k {
            let nb = look_or_return!(ex, cur);
            if nb.len() == 1 {
                reached_pointer = true;
                break;
            }
            let options: Vec<Label> = nb.into_iter().filter(|&v| v != prev).collect();
            let next = *options
                .choose(rng)
                .ok_or_else(|| Error::Internal(format!("dead end at {cur}")))?;
            (prev, cur) = (cur, next);
        }
        if !reached_pointer {
            // The last vertex may itself be the POINTER.
            reached_pointer = look_or_return!(ex, cur).len() == 1;
        }
        if reached_pointer {
            eliminated.push(first);
        } else {
            toward_exit.push(first);
        }
    }
    if eliminated.len() != 1 {
        return Err(Error::Internal(format!(
            "{} directions from ENTRANCE reached a POINTER",
            eliminated.len()
        )));
    }
    Ok(Stage1Outcome::Entrance(Stage1Result {
        entrance,
        toward_exit,
        arrived_from,
        eliminated: eliminated[0],
    }))
}

/// Measurement law of the Stage-2 walk: outcome groups with probabilities,
/// uniform within a group.
#[derive(Clone, Debug)]
pub struct WalkPlan {
    pub time: f64,
    /// Probability of measuring EXIT.
    pub exit_probability: f64,
    groups: Vec<(f64, Vec<Label>)>,
}

impl WalkPlan {
    /// Column-reduced walk, evolved to the time in `[0, t_max]` with the
    /// largest EXIT probability.
    pub fn reduced(g: &GluedInstance, t_max: f64) -> Result<Self> {
        let h = WalkHamiltonian::reduced(g.k())?;
        let (time, exit_probability) = best_exit_time(&h, t_max, 0.01)?;
        let profile = h.column_profile(time, h.entrance_index())?;
        let groups = profile
            .into_iter()
            .zip(g.columns().iter().cloned())
            .collect();
        Ok(Self {
            time,
            exit_probability,
            groups,
        })
    }

    /// Full-graph walk, optionally with the marker edges in the Hamiltonian.
    pub fn full(g: &GluedInstance, t_max: f64, include_markers: bool) -> Result<Self> {
        let h = WalkHamiltonian::full(g, include_markers)?;
        let (time, _) = best_exit_time(&h, t_max, 0.01)?;
        let probs = crate::walk::ctqw_evolve(&h, time, h.entrance_index())?;
        let WalkHamiltonian::Full { basis, .. } = &h else {
            unreachable!("built as full")
        };
        let exit_probability = basis
            .iter()
            .zip(&probs)
            .filter(|(u, _)| **u == g.exit())
            .map(|(_, p)| *p)
            .sum();
        let groups = probs
            .into_iter()
            .zip(basis.iter().map(|&u| vec![u]))
            .collect();
        Ok(Self {
            time,
            exit_probability,
            groups,
        })
    }

    /// Queries charged per walk.
    pub fn charge(&self) -> u64 {
        self.time.ceil() as u64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Label {
        let total: f64 = self.groups.iter().map(|g| g.0).sum();
        let mut x = rng.random::<f64>() * total;
        for (p, labels) in &self.groups {
            if x < *p && !labels.is_empty() {
                return *labels.choose(rng).expect("nonempty group");
            }
            x -= p;
        }
        let last = self
            .groups
            .iter()
            .rev()
            .find(|g| !g.1.is_empty())
            .expect("some group");
        *last.1.choose(rng).expect("nonempty group")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkBasis {
    Reduced,
    Full,
}

#[derive(Clone, Copy, Debug)]
pub struct DecideConfig {
    pub stage1_budget: Option<u64>,
    /// Walks attempted before abstaining.
    pub max_walks: usize,
    /// Walk times are searched in `[0, t_factor · k]`.
    pub t_factor: f64,
    pub basis: WalkBasis,
    /// Put the marker edges into the full-basis Hamiltonian.
    pub include_markers: bool,
}

impl Default for DecideConfig {
    fn default() -> Self {
        Self {
            stage1_budget: None,
            max_walks: 50,
            t_factor: 2.0,
            basis: WalkBasis::Reduced,
            include_markers: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    /// `Some(true)` iff a degree-5 vertex was seen; `None` on abstention.
    pub decision: Option<bool>,
    pub truth: bool,
    pub success: bool,
    /// Real oracle queries; always equal to the oracle's counter.
    pub oracle_queries: u64,
    /// Queries charged for walk evolutions.
    pub walk_charge: u64,
    /// `oracle_queries + walk_charge`.
    pub charged_queries: u64,
    pub stage1_queries: u64,
    pub walk_time: f64,
    pub walks: usize,
    /// Real queries made when EXIT was identified, if it was.
    pub queries_to_exit: Option<u64>,
}

impl SolveReport {
    fn new(truth: bool, decision: Option<bool>, oracle_queries: u64) -> Self {
        Self {
            decision,
            truth,
            success: decision == Some(truth),
            oracle_queries,
            walk_charge: 0,
            charged_queries: oracle_queries,
            stage1_queries: 0,
            walk_time: 0.0,
            walks: 0,
            queries_to_exit: None,
        }
    }
}

fn truth_of(oracle: &AdjOracle<'_>) -> bool {
    oracle.instance().variant() == Variant::B
}

pub fn decide_p5<R: Rng + ?Sized>(
    oracle: &mut AdjOracle<'_>,
    cfg: &DecideConfig,
    rng: &mut R,
) -> Result<SolveReport> {
    let g = oracle.instance();
    let k = g.k();
    let truth = truth_of(oracle);
    let stage1 = stage1_find_entrance(
        oracle,
        k,
        cfg.stage1_budget
            .unwrap_or_else(|| default_stage1_budget(k)),
        rng,
    )?;
    let finish = |oracle: &AdjOracle<'_>, decision: Option<bool>| {
        let mut r = SolveReport::new(truth, decision, oracle.count());
        r.stage1_queries = stage1.queries;
        r
    };
    match stage1.outcome {
        Stage1Outcome::BudgetExceeded => return Ok(finish(oracle, None)),
        Stage1Outcome::ExitWitnessed { degree, .. } => {
            let mut r = finish(oracle, Some(degree == 5));
            r.queries_to_exit = Some(oracle.count());
            return Ok(r);
        }
        Stage1Outcome::Entrance(_) => {}
    }

    let t_max = cfg.t_factor * k as f64;
    let plan = match cfg.basis {
        WalkBasis::Reduced => WalkPlan::reduced(g, t_max)?,
        WalkBasis::Full => WalkPlan::full(g, t_max, cfg.include_markers)?,
    };
    let mut walks = 0;
    let mut decision = None;
    let mut queries_to_exit = None;
    let mut ex = Explorer::new(oracle, u64::MAX);
    while walks < cfg.max_walks {
        walks += 1;
        let v = plan.sample(rng);
        let nb = ex.fetch(v)?.expect("unbounded budget");
        if is_exit_degree(nb.len()) {
            decision = Some(nb.len() == 5);
            queries_to_exit = Some(ex.queries());
            break;
        }
    }
    let mut r = finish(oracle, decision);
    r.walks = walks;
    r.walk_time = plan.time;
    r.walk_charge = walks as u64 * plan.charge();
    r.charged_queries = r.oracle_queries + r.walk_charge;
    r.queries_to_exit = queries_to_exit;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalStrategy {
    /// Memoryless random walk from a random label, restarting at isolated
    /// vertices; every step pays for the current vertex's neighbours.
    RandomWalk,
    /// Breadth-first search from one random label.
    ProbeBfs,
}

impl std::str::FromStr for ClassicalStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-walk" => Ok(ClassicalStrategy::RandomWalk),
            "random-probe+bfs" | "probe-bfs" => Ok(ClassicalStrategy::ProbeBfs),
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

impl std::fmt::Display for ClassicalStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassicalStrategy::RandomWalk => "random-walk",
            ClassicalStrategy::ProbeBfs => "random-probe+bfs",
        })
    }
}

/// Runs `strategy` until EXIT is identified or `budget` queries are spent.
pub fn classical_baseline<R: Rng + ?Sized>(
    oracle: &mut AdjOracle<'_>,
    budget: u64,
    strategy: ClassicalStrategy,
    rng: &mut R,
) -> Result<SolveReport> {
    let truth = truth_of(oracle);
    let start = oracle.count();
    let mut ex = match strategy {
        ClassicalStrategy::RandomWalk => Explorer::forgetful(oracle, start + budget),
        ClassicalStrategy::ProbeBfs => Explorer::new(oracle, start + budget),
    };
    let found = match strategy {
        ClassicalStrategy::RandomWalk => random_walk(&mut ex, rng)?,
        ClassicalStrategy::ProbeBfs => probe_bfs(&mut ex, rng)?,
    };
    let queries = ex.queries() - start;
    let mut r = SolveReport::new(truth, found.map(|d| d == 5), queries);
    r.queries_to_exit = found.map(|_| queries);
    Ok(r)
}

/// Degree of EXIT when found.
fn random_walk<R: Rng + ?Sized>(ex: &mut Explorer<'_, '_>, rng: &mut R) -> Result<Option<usize>> {
    let mut cur = ex.random_label(rng);
    loop {
        let Some(nb) = ex.fetch(cur)? else {
            return Ok(None);
        };
        if is_exit_degree(nb.len()) {
            return Ok(Some(nb.len()));
        }
        cur = match nb.choose(rng) {
            Some(&v) => v,
            None => ex.random_label(rng),
        };
    }
}

fn probe_bfs<R: Rng + ?Sized>(ex: &mut Explorer<'_, '_>, rng: &mut R) -> Result<Option<usize>> {
    loop {
        let root = ex.random_label(rng);
        let mut seen = HashSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let Some(nb) = ex.fetch(u)? else {
                return Ok(None);
            };
            if is_exit_degree(nb.len()) {
                return Ok(Some(nb.len()));
            }
            for v in nb {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        // The component had no EXIT (an isolated marker): probe again.
    }
}
