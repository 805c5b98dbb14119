//! The lower-bound games and the reductions between them.
//!
//! All four games use the full adjacency oracle (one query returns every
//! neighbour) and are won by querying EXIT. They differ in advice and in
//! which labels may be queried:
//!
//! | game | advice | legal queries |
//! |------|--------|---------------|
//! | A | none | any label |
//! | B | ENTRANCE, its neighbours, the two towards EXIT | any label |
//! | C | as B | ENTRANCE, and right-side labels given or returned |
//! | D | ENTRANCE | ENTRANCE, and labels returned |
//!
//! Game D is played on the glued-trees part alone.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::instance::{GluedInstance, Label};
use crate::oracle::{AdjOracle, OracleMode};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GameKind {
    A,
    B,
    C,
    D,
}

impl std::str::FromStr for GameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(GameKind::A),
            "B" => Ok(GameKind::B),
            "C" => Ok(GameKind::C),
            "D" => Ok(GameKind::D),
            _ => Err(Error::Parse(format!("unknown game {s:?}"))),
        }
    }
}

impl std::fmt::Display for GameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Advice {
    pub entrance: Label,
    /// Empty in Game D.
    pub neighbors: Vec<Label>,
    /// The two neighbours on the EXIT side; empty in Game D.
    pub toward_exit: Vec<Label>,
}

impl Advice {
    /// ENTRANCE's neighbours away from EXIT.
    pub fn away_from_exit(&self) -> impl Iterator<Item = Label> + '_ {
        self.neighbors
            .iter()
            .copied()
            .filter(|v| !self.toward_exit.contains(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameConfig {
    pub kind: GameKind,
    pub advice: Option<Advice>,
    pub budget: u64,
}

impl GameConfig {
    /// Rules of `kind` with the advice read off `g`.
    pub fn for_instance(kind: GameKind, g: &GluedInstance, budget: u64) -> Result<Self> {
        let entrance = g.entrance();
        let advice = match kind {
            GameKind::A => None,
            GameKind::B | GameKind::C => {
                let neighbors = g.neighbors(entrance)?.to_vec();
                let toward_exit = neighbors
                    .iter()
                    .copied()
                    .filter(|&v| g.column(v).ok().flatten() == Some(1))
                    .collect();
                Some(Advice {
                    entrance,
                    neighbors,
                    toward_exit,
                })
            }
            GameKind::D => Some(Advice {
                entrance,
                neighbors: Vec::new(),
                toward_exit: Vec::new(),
            }),
        };
        let cfg = Self {
            kind,
            advice,
            budget,
        };
        cfg.validate(g)?;
        Ok(cfg)
    }

    /// Checks that the advice agrees with `g`.
    pub fn validate(&self, g: &GluedInstance) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidParameter(format!(
                "game {}: {what}",
                self.kind
            )))
        };
        if self.kind == GameKind::D && !g.is_glued_only() {
            return bad("needs a glued-trees-only instance");
        }
        match (&self.advice, self.kind) {
            (None, GameKind::A) => Ok(()),
            (Some(_), GameKind::A) | (None, _) => bad("advice does not match the game"),
            (Some(a), kind) => {
                if a.entrance != g.entrance() {
                    return bad("wrong ENTRANCE");
                }
                if kind == GameKind::D {
                    return Ok(());
                }
                let mut given = a.neighbors.clone();
                let mut truth = g.neighbors(a.entrance)?.to_vec();
                given.sort();
                truth.sort();
                if given != truth {
                    return bad("wrong ENTRANCE neighbours");
                }
                let ok = a.toward_exit.len() == 2
                    && a.toward_exit.iter().all(|&v| {
                        a.neighbors.contains(&v) && g.column(v).ok().flatten() == Some(1)
                    });
                if ok {
                    Ok(())
                } else {
                    bad("wrong EXIT-side neighbours")
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Exchange {
    pub query: Label,
    pub response: Vec<Label>,
}

/// What a strategy sees before choosing its next query.
pub struct GameView<'a> {
    pub kind: GameKind,
    pub n: u32,
    pub advice: Option<&'a Advice>,
    pub transcript: &'a [Exchange],
    /// Real oracle queries made so far.
    pub oracle_queries: u64,
    allowed: Option<&'a HashSet<Label>>,
}

impl<'a> GameView<'a> {
    pub fn new(
        kind: GameKind,
        n: u32,
        advice: Option<&'a Advice>,
        transcript: &'a [Exchange],
        oracle_queries: u64,
        allowed: Option<&'a HashSet<Label>>,
    ) -> Self {
        Self {
            kind,
            n,
            advice,
            transcript,
            oracle_queries,
            allowed,
        }
    }

    pub fn is_allowed(&self, u: Label) -> bool {
        (1..=self.n).contains(&u.0) && self.allowed.is_none_or(|s| s.contains(&u))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Forfeit {
    /// A real response contained a label already fabricated.
    E1,
    /// The resampled labelling did not contain the queried label.
    E2,
    OutOfSteps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Query(Label),
    Forfeit(Forfeit),
}

pub trait Strategy {
    fn name(&self) -> String;
    fn next_query(&mut self, view: &GameView<'_>) -> Move;
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn next_query(&mut self, view: &GameView<'_>) -> Move {
        (**self).next_query(view)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GameEnd {
    Won,
    BudgetExhausted,
    Illegal { label: u32, reason: String },
    Forfeit(Forfeit),
}

#[derive(Clone, Debug, Serialize)]
pub struct GameOutcome {
    pub kind: GameKind,
    pub win: bool,
    pub queries: u64,
    pub end: GameEnd,
    pub transcript: Vec<Exchange>,
}

/// Plays one game; the strategy loses on its first illegal query.
pub fn play_game(
    cfg: &GameConfig,
    strategy: &mut dyn Strategy,
    g: &GluedInstance,
) -> Result<GameOutcome> {
    cfg.validate(g)?;
    let mut oracle = AdjOracle::new(g, OracleMode::Full);
    let mut transcript: Vec<Exchange> = Vec::new();
    let mut allowed: Option<HashSet<Label>> = match (cfg.kind, &cfg.advice) {
        (GameKind::C, Some(a)) => Some(a.toward_exit.iter().copied().chain([a.entrance]).collect()),
        (GameKind::D, Some(a)) => Some(HashSet::from([a.entrance])),
        _ => None,
    };
    let end = loop {
        if oracle.count() >= cfg.budget {
            break GameEnd::BudgetExhausted;
        }
        let view = GameView::new(
            cfg.kind,
            g.n(),
            cfg.advice.as_ref(),
            &transcript,
            oracle.count(),
            allowed.as_ref(),
        );
        let u = match strategy.next_query(&view) {
            Move::Forfeit(f) => break GameEnd::Forfeit(f),
            Move::Query(u) => u,
        };
        if !view.is_allowed(u) {
            let reason = if g.check_label(u).is_err() {
                "illegal query: label out of range".to_string()
            } else if cfg.kind == GameKind::C && g.column(u)?.is_none() {
                "illegal query: left of ENTRANCE".to_string()
            } else {
                "illegal query: label not yet returned".to_string()
            };
            break GameEnd::Illegal { label: u.0, reason };
        }
        let response = oracle.query_all(u)?;
        if let (Some(set), Some(a)) = (allowed.as_mut(), cfg.advice.as_ref()) {
            // ENTRANCE's other two neighbours are on the left.
            if cfg.kind == GameKind::D || u != a.entrance {
                set.extend(response.iter().copied());
            }
        }
        transcript.push(Exchange { query: u, response });
        if u == g.exit() {
            break GameEnd::Won;
        }
    };
    Ok(GameOutcome {
        kind: cfg.kind,
        win: end == GameEnd::Won,
        queries: oracle.count(),
        end,
        transcript,
    })
}

/// Simple random walk over the allowed neighbours of the last queried
/// vertex. Starts at ENTRANCE when advice gives it (and `use_advice`), else
/// at a random label; restarts when stuck.
pub struct RandomWalk {
    rng: ChaCha8Rng,
    use_advice: bool,
}

impl RandomWalk {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            use_advice: true,
        }
    }

    pub fn ignoring_advice(seed: u64) -> Self {
        Self {
            use_advice: false,
            ..Self::new(seed)
        }
    }

    fn start(&mut self, view: &GameView<'_>) -> Label {
        match view.advice {
            Some(a) if self.use_advice => a.entrance,
            _ => Label(self.rng.random_range(1..=view.n)),
        }
    }
}

impl Strategy for RandomWalk {
    fn name(&self) -> String {
        "random-walk".into()
    }

    fn next_query(&mut self, view: &GameView<'_>) -> Move {
        let next = view.transcript.last().and_then(|last| {
            let options: Vec<Label> = last
                .response
                .iter()
                .copied()
                .filter(|&v| view.is_allowed(v))
                .collect();
            (!options.is_empty()).then(|| options[self.rng.random_range(0..options.len())])
        });
        Move::Query(next.unwrap_or_else(|| self.start(view)))
    }
}

/// Queries uniformly random labels, hunting for POINTERs.
pub struct PointerProbe {
    rng: ChaCha8Rng,
}

impl PointerProbe {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Strategy for PointerProbe {
    fn name(&self) -> String {
        "pointer-probe".into()
    }

    fn next_query(&mut self, view: &GameView<'_>) -> Move {
        Move::Query(Label(self.rng.random_range(1..=view.n)))
    }
}

/// Per-run counters kept by [`BtoC`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AdapterRun {
    /// Queries made by the simulated Game-B strategy.
    pub steps: u64,
    pub action1: u64,
    pub action2: u64,
    pub e1: bool,
    /// Sum over real responses of the conditional probability of E1 given
    /// everything before it; its expectation is the E1 count.
    pub e1_hazard: f64,
    pub e2: bool,
    /// Real queries seen beyond those the adapter issued; must stay zero.
    pub unexplained_queries: u64,
}

/// Left-tree labelling, revealed lazily. Heap positions: root 0 is
/// ENTRANCE, position `p` has children `2p+1`, `2p+2`.
struct LazyLabelling {
    positions: u64,
    label_at: HashMap<u64, Label>,
    position_of: HashMap<Label, u64>,
}

impl LazyLabelling {
    fn neighbors(&self, p: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(3);
        if p > 0 {
            out.push((p - 1) / 2);
        }
        for c in [2 * p + 1, 2 * p + 2] {
            if c < self.positions {
                out.push(c);
            }
        }
        out
    }

    fn assign(&mut self, p: u64, l: Label) {
        self.label_at.insert(p, l);
        self.position_of.insert(l, p);
    }

    fn unassigned(&self) -> u64 {
        self.positions - self.label_at.len() as u64
    }
}

/// Game-C strategy simulating a Game-B strategy. Queries the inner
/// strategy may not make in Game C are answered from a random left-tree
/// labelling consistent with everything seen, without touching the oracle.
pub struct BtoC<S> {
    inner: S,
    rng: ChaCha8Rng,
    budget: u64,
    virtual_transcript: Vec<Exchange>,
    processed: usize,
    /// Labels the real oracle or the advice has shown.
    revealed: HashSet<Label>,
    /// Every label known not to be free: revealed or fabricated.
    seen: HashSet<Label>,
    fabricated: HashSet<Label>,
    labelling: Option<LazyLabelling>,
    run: AdapterRun,
}

impl<S: Strategy> BtoC<S> {
    /// `budget` caps the inner strategy's queries, real and simulated.
    pub fn new(inner: S, seed: u64, budget: u64) -> Self {
        Self {
            inner,
            rng: ChaCha8Rng::seed_from_u64(seed),
            budget,
            virtual_transcript: Vec::new(),
            processed: 0,
            revealed: HashSet::new(),
            seen: HashSet::new(),
            fabricated: HashSet::new(),
            labelling: None,
            run: AdapterRun::default(),
        }
    }

    pub fn run(&self) -> AdapterRun {
        self.run
    }

    fn init(&mut self, view: &GameView<'_>) {
        if self.labelling.is_some() {
            return;
        }
        let a = view.advice.expect("Game C has advice");
        let k = (2..=crate::instance::MAX_K)
            .step_by(2)
            .find(|&k| crate::instance::vertex_count(k) == view.n as u64)
            .expect("n matches a depth");
        let mut lab = LazyLabelling {
            positions: (1u64 << (2 * k + 1)) - 1,
            label_at: HashMap::new(),
            position_of: HashMap::new(),
        };
        lab.assign(0, a.entrance);
        for (i, v) in a.away_from_exit().enumerate() {
            lab.assign(1 + i as u64, v);
        }
        self.seen
            .extend(a.neighbors.iter().copied().chain([a.entrance]));
        self.revealed
            .extend(a.neighbors.iter().copied().chain([a.entrance]));
        self.labelling = Some(lab);
    }

    fn fresh_label(&mut self, n: u32) -> Label {
        loop {
            let l = Label(self.rng.random_range(1..=n));
            if !self.seen.contains(&l) {
                return l;
            }
        }
    }

    fn fabricate(&mut self, l: Label, n: u32) -> std::result::Result<Vec<Label>, Forfeit> {
        let lab = self.labelling.as_ref().expect("initialised");
        let p = match lab.position_of.get(&l) {
            Some(&p) => p,
            None => {
                let pool = n as u64 - self.seen.len() as u64 - u64::from(!self.seen.contains(&l));
                let in_labelling = self.rng.random_range(0..=pool) < lab.unassigned();
                if !in_labelling {
                    return Err(Forfeit::E2);
                }
                let p = loop {
                    let p = self.rng.random_range(0..lab.positions);
                    if !lab.label_at.contains_key(&p) {
                        break p;
                    }
                };
                self.seen.insert(l);
                self.fabricated.insert(l);
                self.labelling.as_mut().expect("initialised").assign(p, l);
                p
            }
        };
        let nbrs = self.labelling.as_ref().expect("initialised").neighbors(p);
        let mut response = Vec::with_capacity(nbrs.len());
        for q in nbrs {
            let existing = self
                .labelling
                .as_ref()
                .expect("initialised")
                .label_at
                .get(&q)
                .copied();
            let label = match existing {
                Some(v) => v,
                None => {
                    let v = self.fresh_label(n);
                    self.seen.insert(v);
                    self.fabricated.insert(v);
                    self.labelling.as_mut().expect("initialised").assign(q, v);
                    v
                }
            };
            response.push(label);
        }
        response.shuffle(&mut self.rng);
        Ok(response)
    }
}

impl<S: Strategy> Strategy for BtoC<S> {
    fn name(&self) -> String {
        format!("b-to-c({})", self.inner.name())
    }

    fn next_query(&mut self, view: &GameView<'_>) -> Move {
        self.init(view);
        self.run.unexplained_queries = view.oracle_queries.saturating_sub(self.run.action1);
        for ex in &view.transcript[self.processed..] {
            // Unrevealed vertices carry uniformly random unrevealed labels,
            // independent of the fabrications.
            let fresh = ex
                .response
                .iter()
                .filter(|v| !self.revealed.contains(v))
                .count();
            let unrevealed = view.n as f64 - self.revealed.len() as f64;
            let f = self.fabricated.len() as f64;
            let miss: f64 = (0..fresh)
                .map(|j| 1.0 - f / (unrevealed - j as f64))
                .product();
            self.run.e1_hazard += 1.0 - miss;
            self.revealed.insert(ex.query);
            self.revealed.extend(ex.response.iter().copied());
            if ex.response.iter().any(|v| self.fabricated.contains(v)) {
                self.run.e1 = true;
                return Move::Forfeit(Forfeit::E1);
            }
            self.seen.insert(ex.query);
            self.seen.extend(ex.response.iter().copied());
            self.virtual_transcript.push(ex.clone());
        }
        self.processed = view.transcript.len();

        loop {
            if self.run.steps >= self.budget {
                return Move::Forfeit(Forfeit::OutOfSteps);
            }
            let inner_view = GameView::new(
                GameKind::B,
                view.n,
                view.advice,
                &self.virtual_transcript,
                self.run.steps,
                None,
            );
            let l = match self.inner.next_query(&inner_view) {
                Move::Query(l) => l,
                forfeit => return forfeit,
            };
            self.run.steps += 1;
            if view.is_allowed(l) || !inner_view.is_allowed(l) {
                self.run.action1 += 1;
                return Move::Query(l);
            }
            self.run.action2 += 1;
            match self.fabricate(l, view.n) {
                Ok(response) => self
                    .virtual_transcript
                    .push(Exchange { query: l, response }),
                Err(f) => {
                    self.run.e2 = true;
                    return Move::Forfeit(f);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AdapterStats {
    pub trials: u64,
    pub e1: u64,
    pub e2: u64,
    /// Summed conditional E1 probabilities; see [`AdapterRun::e1_hazard`].
    pub e1_expected: f64,
    pub wins: u64,
    /// Per-trial query budget.
    pub budget: u64,
    /// Inner-strategy queries over all trials.
    pub steps: u64,
    pub action2: u64,
    pub unexplained_queries: u64,
}

impl AdapterStats {
    pub fn record(&mut self, run: &AdapterRun, win: bool) {
        self.trials += 1;
        self.e1 += u64::from(run.e1);
        self.e2 += u64::from(run.e2);
        self.e1_expected += run.e1_hazard;
        self.wins += u64::from(win);
        self.steps += run.steps;
        self.action2 += run.action2;
        self.unexplained_queries += run.unexplained_queries;
    }

    pub fn merge(&mut self, other: &AdapterStats) {
        self.trials += other.trials;
        self.e1 += other.e1;
        self.e2 += other.e2;
        self.e1_expected += other.e1_expected;
        self.wins += other.wins;
        self.steps += other.steps;
        self.action2 += other.action2;
        self.unexplained_queries += other.unexplained_queries;
        self.budget = self.budget.max(other.budget);
    }

    pub fn e1_rate(&self) -> f64 {
        self.e1 as f64 / self.steps.max(1) as f64
    }

    /// Low-variance estimate of the per-step E1 rate.
    pub fn e1_expected_rate(&self) -> f64 {
        self.e1_expected / self.steps.max(1) as f64
    }

    pub fn e2_rate(&self) -> f64 {
        self.e2 as f64 / self.steps.max(1) as f64
    }
}

/// Plays `inner` through the adapter in Game C on `g`.
pub fn adapt_b_to_c<S: Strategy>(
    inner: S,
    g: &GluedInstance,
    budget: u64,
    seed: u64,
) -> Result<(GameOutcome, AdapterRun)> {
    let cfg = GameConfig::for_instance(GameKind::C, g, budget)?;
    let mut adapter = BtoC::new(inner, seed, budget);
    let outcome = play_game(&cfg, &mut adapter, g)?;
    let mut run = adapter.run();
    // Audit once more after the last real query.
    run.unexplained_queries = outcome.queries.saturating_sub(run.action1);
    Ok((outcome, run))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionRecord {
    pub win_c: bool,
    pub win_d: bool,
    pub queries_c: u64,
    pub queries_d: u64,
    pub same_queries: bool,
}

/// Plays a Game-C strategy in Game C on `g` and, rebuilt by `make`, in
/// Game D on the glued trees alone.
pub fn reduce_c_to_d<S: Strategy>(
    make: impl Fn() -> S,
    g: &GluedInstance,
    budget: u64,
) -> Result<ReductionRecord> {
    let c = play_game(
        &GameConfig::for_instance(GameKind::C, g, budget)?,
        &mut make(),
        g,
    )?;
    let bare = g.glued_only();
    let d = play_game(
        &GameConfig::for_instance(GameKind::D, &bare, budget)?,
        &mut make(),
        &bare,
    )?;
    let qs = |o: &GameOutcome| o.transcript.iter().map(|e| e.query).collect::<Vec<_>>();
    Ok(ReductionRecord {
        win_c: c.win,
        win_d: d.win,
        queries_c: c.queries,
        queries_d: d.queries,
        same_queries: qs(&c) == qs(&d),
    })
}
