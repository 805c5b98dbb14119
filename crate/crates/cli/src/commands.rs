use clap::{Args, ValueEnum};
use num_traits::ToPrimitive;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use gpq_core::dequantizer::{self, ClosenessBudget, DequantizerConfig, ScoreMode};
use gpq_core::dr::{self, ConstraintSet, EnumerationGuard, RangeParam};
use gpq_core::edges::{
    check_invariance, properties, GraphProperty, Invariance, InvarianceGuard, PredicateProperty,
};
use gpq_core::qsim::{boost_majority3, library};
use gpq_core::seed::{derive_seed, trial_rng, ExperimentRng};
use gpq_core::{EdgeIndexer, Hypergraph};
use gpq_glued::games::{
    self, AdapterStats, GameConfig, GameKind, PointerProbe, RandomWalk, Strategy,
};
use gpq_glued::instance::build_instance;
use gpq_glued::solvers::{self, ClassicalStrategy, DecideConfig, WalkBasis};
use gpq_glued::{AdjOracle, GluedInstance, GluedParams, Variant};

use crate::output::{render, Format};
use crate::params::{parse_depths, parse_r, r_label};
use crate::{CliError, ModeArg, Result};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------- invariance

#[derive(Debug, Args)]
pub struct InvarianceArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    /// triangle, parity, max-degree-D or bit-I.
    #[arg(long, value_delimiter = ',', default_value = "triangle,parity")]
    pub property: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct InvarianceRow {
    pub property: String,
    pub n: usize,
    pub l: usize,
    pub inputs: usize,
    pub permutations: usize,
    pub holds: bool,
}

fn named_property(name: &str, ix: EdgeIndexer) -> Result<PredicateProperty> {
    let suffix = |p: &str| {
        name.strip_prefix(p)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| usage(format!("bad property {name:?}")))
    };
    Ok(match name {
        "triangle" => {
            if ix.l() != 2 {
                return Err(usage("triangle containment needs l = 2"));
            }
            properties::contains_triangle(ix.n())?
        }
        "parity" => properties::edge_parity(ix),
        _ if name.starts_with("max-degree-") => {
            properties::max_degree_at_least(ix, suffix("max-degree-")?)
        }
        _ if name.starts_with("bit-") => properties::bit_is_set(ix, suffix("bit-")?),
        _ => return Err(usage(format!("unknown property {name:?}"))),
    })
}

pub fn invariance(a: &InvarianceArgs, _seed: u64) -> Result<Vec<InvarianceRow>> {
    let ix = EdgeIndexer::new(a.n, a.l)?;
    a.property
        .iter()
        .map(|name| {
            let p = named_property(name, ix)?;
            let verdict = check_invariance(&p, InvarianceGuard::default())?;
            let (inputs, permutations) = match verdict {
                Invariance::Holds {
                    inputs_checked,
                    permutations,
                } => (inputs_checked, permutations),
                Invariance::Violated { .. } => (0, 0),
            };
            Ok(InvarianceRow {
                property: p.name().to_string(),
                n: a.n,
                l: a.l,
                inputs,
                permutations,
                holds: verdict.holds(),
            })
        })
        .collect()
}

// ------------------------------------------------------------------- dr-poly

#[derive(Debug, Args)]
pub struct DrPolyArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    /// Number of (edge, target) constraints per set.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Random constraint sets.
    #[arg(long, default_value_t = 1)]
    pub sets: u64,
    /// Largest r compared against the fit (default `2kl`).
    #[arg(long)]
    pub check_up_to: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct DrPolyRow {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub seed: u64,
    pub set: u64,
    pub constraints: String,
    pub r: String,
    /// `fit` for interpolation nodes, `check` otherwise.
    pub role: &'static str,
    pub exact: String,
    pub exact_f64: f64,
    pub residual: f64,
}

pub fn dr_poly(a: &DrPolyArgs, seed: u64) -> Result<Vec<DrPolyRow>> {
    let ix = EdgeIndexer::new(a.n, a.l)?;
    let check = a.check_up_to.unwrap_or((2 * a.k * a.l) as u64);
    let sets: Vec<Vec<DrPolyRow>> = (0..a.sets)
        .into_par_iter()
        .map(|set| {
            let cs = ConstraintSet::random(&ix, a.k, &mut trial_rng(seed, set))?;
            let fit = dr::verify_poly_degree(ix, &cs, Some(check), EnumerationGuard::default())?;
            let constraints = cs
                .pairs()
                .iter()
                .map(|(d, e)| format!("{d}->{e}"))
                .collect::<Vec<_>>()
                .join(" ");
            let row =
                |r: String, role, exact: &num_rational::BigRational, residual: f64| DrPolyRow {
                    n: a.n,
                    l: a.l,
                    k: a.k,
                    seed,
                    set,
                    constraints: constraints.clone(),
                    r,
                    role,
                    exact: exact.to_string(),
                    exact_f64: exact.to_f64().unwrap_or(f64::NAN),
                    residual,
                };
            let mut rows: Vec<DrPolyRow> = fit
                .fit_points
                .iter()
                .map(|(r, p)| row(r.to_string(), "fit", p, 0.0))
                .collect();
            rows.extend(
                fit.residuals
                    .iter()
                    .map(|res| row(r_label(res.r), "check", &res.exact, res.residual_f64())),
            );
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(sets.into_iter().flatten().collect())
}

// ----------------------------------------------------------------- closeness

#[derive(Debug, Args)]
pub struct ClosenessArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    /// Queries of the circuit before majority-of-three boosting.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Work-register dimension of the random circuits.
    #[arg(long, default_value_t = 2)]
    pub w: usize,
    /// Input as a bitstring over the M edges (default: drawn from the seed).
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_r,
          default_value = "2,4,8,16,32,64,128,256")]
    pub r: Vec<RangeParam>,
    /// Map samples per point when exact enumeration is out of reach.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Random circuits.
    #[arg(long, default_value_t = 1)]
    pub circuits: u64,
}

#[derive(Debug, Serialize)]
pub struct ClosenessRow {
    pub n: usize,
    pub l: usize,
    pub q: usize,
    pub seed: u64,
    pub circuit: u64,
    pub x: String,
    pub r: String,
    pub p1_r: f64,
    pub p1_inf: f64,
    pub tv: f64,
    pub radius: f64,
    pub bound: f64,
    pub exact: bool,
}

fn input_or_seeded(ix: EdgeIndexer, x: Option<&str>, seed: u64) -> Result<Hypergraph> {
    match x {
        Some(s) => Ok(Hypergraph::from_bitstring(ix, s)?),
        None => {
            let mask = if ix.m() >= 64 {
                u64::MAX
            } else {
                (1u64 << ix.m()) - 1
            };
            Ok(Hypergraph::from_mask(
                ix,
                derive_seed(seed, u64::MAX) & mask,
            ))
        }
    }
}

pub fn closeness(a: &ClosenessArgs, seed: u64) -> Result<Vec<ClosenessRow>> {
    let ix = EdgeIndexer::new(a.n, a.l)?;
    let x = input_or_seeded(ix, a.x.as_deref(), seed)?;
    let jobs: Vec<(u64, RangeParam)> = (0..a.circuits)
        .flat_map(|c| a.r.iter().map(move |&r| (c, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(c, r)| {
            let circuit = boost_majority3(&library::random_circuit(
                ix.m(),
                a.w,
                a.q,
                &mut trial_rng(seed, c),
            )?)?;
            let budget = ClosenessBudget {
                samples: a.samples,
                seed: derive_seed(seed, c),
                guard: EnumerationGuard::default(),
            };
            let cl = dequantizer::closeness_tv(&circuit, &x, r, &budget)?;
            Ok(ClosenessRow {
                n: a.n,
                l: a.l,
                q: a.q,
                seed,
                circuit: c,
                x: x.to_bitstring(),
                r: cl.r,
                p1_r: cl.p1_r.mean,
                p1_inf: cl.p1_inf.mean,
                tv: cl.tv,
                radius: cl.radius,
                bound: dequantizer::closeness_bound(a.q as u64, a.l as u64, r)?,
                exact: cl.exact,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- dequantize

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    /// Average the exact success probability of each sampled tree.
    Exact,
    /// Count sampled outputs.
    Sampled,
}

#[derive(Debug, Args)]
pub struct DequantizeArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_r, default_value = "64,256")]
    pub r: Vec<RangeParam>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Inputs as bitstrings (default: all inputs, when M <= 8).
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    #[arg(long, value_enum, default_value_t = ScoreArg::Exact)]
    pub score: ScoreArg,
}

#[derive(Debug, Serialize)]
pub struct DequantizeRow {
    pub n: usize,
    pub l: usize,
    pub seed: u64,
    pub x: String,
    pub r: String,
    pub expected: bool,
    pub trials: usize,
    pub success: f64,
    pub std_err: f64,
    /// `20/27` minus the closeness bound.
    pub threshold: f64,
    pub mean_cost: f64,
    pub max_cost: usize,
}

pub fn dequantize(a: &DequantizeArgs, seed: u64) -> Result<Vec<DequantizeRow>> {
    let ix = EdgeIndexer::new(a.n, a.l)?;
    let circuit = boost_majority3(&library::parity_circuit(ix.m())?)?;
    let inputs: Vec<Hypergraph> = if a.x.is_empty() {
        if ix.m() > 8 {
            return Err(usage(format!(
                "M = {} is too large to sweep every input; pass --x",
                ix.m()
            )));
        }
        (0..1u64 << ix.m())
            .map(|mask| Hypergraph::from_mask(ix, mask))
            .collect()
    } else {
        a.x.iter()
            .map(|s| Hypergraph::from_bitstring(ix, s))
            .collect::<gpq_core::Result<_>>()?
    };
    let mode = match a.score {
        ScoreArg::Exact => ScoreMode::Exact,
        ScoreArg::Sampled => ScoreMode::Sampled,
    };
    let jobs: Vec<(usize, &Hypergraph, RangeParam)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(i, x)| a.r.iter().map(move |&r| (i, x, r)))
        .collect();
    jobs.into_par_iter()
        .enumerate()
        .map(|(job, (_, x, r))| {
            let cfg = DequantizerConfig::new(circuit.clone(), r, ix)?;
            let expected = x.edge_count() % 2 == 1;
            let rep = dequantizer::success_rate(
                &cfg,
                x,
                expected,
                a.trials,
                derive_seed(seed, job as u64),
                mode,
            )?;
            Ok(DequantizeRow {
                n: a.n,
                l: a.l,
                seed,
                x: x.to_bitstring(),
                r: r_label(r),
                expected,
                trials: a.trials,
                success: rep.success.mean,
                std_err: rep.success.std_err,
                threshold: 20.0 / 27.0 - cfg.bound()?,
                mean_cost: rep.mean_cost,
                max_cost: rep.max_cost,
            })
        })
        .collect()
}

// --------------------------------------------------------------- glued-build

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    A,
    B,
    /// Alternate A and B across trials.
    Both,
}

impl VariantArg {
    fn pick(self, trial: u64) -> Variant {
        match self {
            VariantArg::A => Variant::A,
            VariantArg::B => Variant::B,
            VariantArg::Both if trial.is_multiple_of(2) => Variant::A,
            VariantArg::Both => Variant::B,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    /// One summary row.
    Summary,
    /// The instance itself: header plus adjacency lines.
    Text,
}

#[derive(Debug, Args)]
pub struct GluedBuildArgs {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, value_enum, default_value_t = VariantArg::A)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = Emit::Summary)]
    pub emit: Emit,
}

#[derive(Debug, Serialize)]
pub struct GluedRow {
    pub k: u32,
    pub variant: String,
    pub seed: u64,
    pub n: u32,
    pub entrance: u32,
    pub exit: u32,
    pub exit_degree: usize,
    pub pointers: u64,
    pub pointer_fraction: String,
    pub has_degree5: bool,
}

pub fn glued_build(a: &GluedBuildArgs, seed: u64, fmt: Format) -> Result<Vec<u8>> {
    if a.variant == VariantArg::Both {
        return Err(usage("glued-build takes --variant a or b"));
    }
    let g = build_instance(GluedParams::new(a.k, a.variant.pick(0), seed)?)?;
    match a.emit {
        Emit::Text => Ok(g.to_text(true).into_bytes()),
        Emit::Summary => render(
            &[GluedRow {
                k: a.k,
                variant: g.variant().to_string(),
                seed,
                n: g.n(),
                entrance: g.entrance().0,
                exit: g.exit().0,
                exit_degree: g.degree(g.exit())?,
                pointers: g.pointer_count(),
                pointer_fraction: g.pointer_fraction_without_markers().to_string(),
                has_degree5: g.has_degree5(),
            }],
            fmt,
        ),
    }
}

// -------------------------------------------------------------------- solvers

/// A whole `--k` list parsed from one flag value. Written as a path so clap
/// does not read it as a repeatable flag.
pub type Depths = std::vec::Vec<u32>;

/// Instance seed and solver generator for `trial` at depth `k`.
pub fn trial_streams(root: u64, k: u32, trial: u64) -> (u64, ExperimentRng) {
    let base = derive_seed(root, k as u64);
    (derive_seed(base, 2 * trial), trial_rng(base, 2 * trial + 1))
}

fn instance_for(
    root: u64,
    k: u32,
    trial: u64,
    variant: VariantArg,
) -> Result<(GluedInstance, ExperimentRng)> {
    let (seed, rng) = trial_streams(root, k, trial);
    Ok((
        build_instance(GluedParams::new(k, variant.pick(trial), seed)?)?,
        rng,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Reduced,
    Full,
}

#[derive(Debug, Args)]
pub struct SolveQuantumArgs {
    /// Even depths: `4`, `2,6` or `2..10`.
    #[arg(long, value_parser = parse_depths, default_value = "2")]
    pub k: Depths,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Slot)]
    pub mode: ModeArg,
    /// Walks before abstaining.
    #[arg(long, default_value_t = 50)]
    pub max_walks: usize,
    /// Walk times are searched in [0, t_factor k].
    #[arg(long, default_value_t = 2.0)]
    pub t_factor: f64,
    #[arg(long, value_enum, default_value_t = BasisArg::Reduced)]
    pub basis: BasisArg,
    /// Put the marker edges into the walk (full basis only).
    #[arg(long)]
    pub include_markers: bool,
    /// Stage-1 budget as a multiple of k².
    #[arg(long, default_value_t = 500)]
    pub stage1_factor: u64,
}

#[derive(Debug, Serialize)]
pub struct QuantumRow {
    pub k: u32,
    pub variant: String,
    pub seed: u64,
    pub trial: u64,
    pub mode: String,
    pub decision: String,
    pub success: bool,
    pub charged_queries: u64,
    pub oracle_queries: u64,
    pub stage1_queries: u64,
    pub walk_time: f64,
    pub walks: usize,
}

fn decision_label(d: Option<bool>) -> String {
    match d {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => "abstain".into(),
    }
}

pub fn solve_quantum(a: &SolveQuantumArgs, seed: u64) -> Result<Vec<QuantumRow>> {
    if a.include_markers && a.basis == BasisArg::Reduced {
        return Err(usage("--include-markers needs --basis full"));
    }
    let jobs: Vec<(u32, u64)> =
        a.k.iter()
            .flat_map(|&k| (0..a.trials).map(move |t| (k, t)))
            .collect();
    jobs.into_par_iter()
        .map(|(k, trial)| {
            let (g, mut rng) = instance_for(seed, k, trial, a.variant)?;
            let cfg = DecideConfig {
                stage1_budget: Some(a.stage1_factor * (k as u64).pow(2)),
                max_walks: a.max_walks,
                t_factor: a.t_factor,
                basis: match a.basis {
                    BasisArg::Reduced => WalkBasis::Reduced,
                    BasisArg::Full => WalkBasis::Full,
                },
                include_markers: a.include_markers,
            };
            let mut o = AdjOracle::new(&g, a.mode.into());
            let r = solvers::decide_p5(&mut o, &cfg, &mut rng)?;
            Ok(QuantumRow {
                k,
                variant: g.variant().to_string(),
                seed,
                trial,
                mode: o.mode().to_string(),
                decision: decision_label(r.decision),
                success: r.success,
                charged_queries: r.charged_queries,
                oracle_queries: r.oracle_queries,
                stage1_queries: r.stage1_queries,
                walk_time: r.walk_time,
                walks: r.walks,
            })
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct SolveClassicalArgs {
    /// Even depths: `4`, `2,6` or `2..10`.
    #[arg(long, value_parser = parse_depths, default_value = "2")]
    pub k: Depths,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Slot)]
    pub mode: ModeArg,
    /// random-walk or random-probe+bfs.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "random-walk,random-probe+bfs"
    )]
    pub strategy: Vec<ClassicalStrategy>,
    /// Query budget (default: budget-factor · k²).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub budget_factor: u64,
}

#[derive(Debug, Serialize)]
pub struct ClassicalRow {
    pub k: u32,
    pub variant: String,
    pub seed: u64,
    pub trial: u64,
    pub strategy: String,
    pub mode: String,
    pub budget: u64,
    pub success: bool,
    pub queries: u64,
    pub queries_to_exit: Option<u64>,
}

pub fn solve_classical(a: &SolveClassicalArgs, seed: u64) -> Result<Vec<ClassicalRow>> {
    let jobs: Vec<(u32, ClassicalStrategy, u64)> =
        a.k.iter()
            .flat_map(|&k| {
                a.strategy
                    .iter()
                    .flat_map(move |&s| (0..a.trials).map(move |t| (k, s, t)))
            })
            .collect();
    jobs.into_par_iter()
        .map(|(k, strategy, trial)| {
            let budget = a.budget.unwrap_or(a.budget_factor * (k as u64).pow(2));
            let (g, mut rng) = instance_for(seed, k, trial, a.variant)?;
            let mut o = AdjOracle::new(&g, a.mode.into());
            let r = solvers::classical_baseline(&mut o, budget, strategy, &mut rng)?;
            Ok(ClassicalRow {
                k,
                variant: g.variant().to_string(),
                seed,
                trial,
                strategy: strategy.to_string(),
                mode: o.mode().to_string(),
                budget,
                success: r.success,
                queries: r.oracle_queries,
                queries_to_exit: r.queries_to_exit,
            })
        })
        .collect()
}

// -------------------------------------------------------------------- scaling

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_parser = parse_depths, default_value = "2..6")]
    pub k: Depths,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Slot)]
    pub mode: ModeArg,
    /// Classical success is judged within budget-factor · k² queries.
    #[arg(long, default_value_t = 100)]
    pub budget_factor: u64,
    /// Classical runs stop here when measuring queries to EXIT.
    #[arg(long, default_value_t = 100_000_000)]
    pub cap: u64,
}

#[derive(Debug, Serialize)]
pub struct ScalingRow {
    pub k: u32,
    pub algorithm: String,
    pub mode: String,
    pub seed: u64,
    pub trials: u64,
    pub budget: Option<u64>,
    pub success_rate: f64,
    /// Quantum: charged queries. Classical: queries to EXIT (cap if never).
    pub median_queries: u64,
    pub p90_queries: u64,
}

fn quantile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

pub fn scaling(a: &ScalingArgs, seed: u64) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for &k in &a.k {
        let quantum = solve_quantum(
            &SolveQuantumArgs {
                k: vec![k],
                variant: VariantArg::Both,
                trials: a.trials,
                mode: a.mode,
                max_walks: 50,
                t_factor: 2.0,
                basis: BasisArg::Reduced,
                include_markers: false,
                stage1_factor: 500,
            },
            seed,
        )?;
        let mut charged: Vec<u64> = quantum.iter().map(|r| r.charged_queries).collect();
        charged.sort_unstable();
        rows.push(ScalingRow {
            k,
            algorithm: "quantum-walk".into(),
            mode: a.mode.to_possible_value().expect("named").get_name().into(),
            seed,
            trials: a.trials,
            budget: None,
            success_rate: quantum.iter().filter(|r| r.success).count() as f64
                / a.trials.max(1) as f64,
            median_queries: quantile(&charged, 0.5),
            p90_queries: quantile(&charged, 0.9),
        });
        let budget = a.budget_factor * (k as u64).pow(2);
        for strategy in [ClassicalStrategy::RandomWalk, ClassicalStrategy::ProbeBfs] {
            // One capped run per trial: within-budget success is reading the
            // same trajectory up to the budget.
            let runs = solve_classical(
                &SolveClassicalArgs {
                    k: vec![k],
                    variant: VariantArg::Both,
                    trials: a.trials,
                    mode: a.mode,
                    strategy: vec![strategy],
                    budget: Some(a.cap),
                    budget_factor: a.budget_factor,
                },
                seed,
            )?;
            let mut to_exit: Vec<u64> = runs
                .iter()
                .map(|r| r.queries_to_exit.unwrap_or(a.cap))
                .collect();
            to_exit.sort_unstable();
            let wins = runs
                .iter()
                .filter(|r| r.queries_to_exit.is_some_and(|q| q <= budget))
                .count();
            rows.push(ScalingRow {
                k,
                algorithm: strategy.to_string(),
                mode: a.mode.to_possible_value().expect("named").get_name().into(),
                seed,
                trials: a.trials,
                budget: Some(budget),
                success_rate: wins as f64 / a.trials.max(1) as f64,
                median_queries: quantile(&to_exit, 0.5),
                p90_queries: quantile(&to_exit, 0.9),
            });
        }
    }
    Ok(rows)
}

// ------------------------------------------------------------------- game-sim

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GameArg {
    A,
    B,
    C,
    D,
    /// A Game-B strategy run in Game C through the adapter.
    BToC,
    /// A Game-C strategy replayed in Game D on the glued trees alone.
    CToD,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    RandomWalk,
    PointerProbe,
}

#[derive(Debug, Args)]
pub struct GameSimArgs {
    #[arg(long, value_enum, default_value_t = GameArg::BToC)]
    pub game: GameArg,
    #[arg(long, value_parser = parse_depths, default_value = "4")]
    pub k: Depths,
    #[arg(long, value_enum, default_value_t = StrategyArg::RandomWalk)]
    pub strategy: StrategyArg,
    /// Query budget T (default k²).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    pub variant: VariantArg,
    /// Distinct instances per k, shared round-robin by the trials
    /// (default: one per trial).
    #[arg(long)]
    pub instances: Option<u64>,
    /// One aggregate row per k instead of one row per trial.
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Serialize)]
pub struct GameRow {
    pub variant: String,
    pub k: u32,
    pub strategy: String,
    #[serde(rename = "T")]
    pub t: u64,
    pub seed: u64,
    pub trial: u64,
    pub win: bool,
    #[serde(rename = "E1")]
    pub e1: bool,
    #[serde(rename = "E2")]
    pub e2: bool,
    pub queries: u64,
    /// Queries of the simulated strategy, real and answered by the adapter.
    pub steps: u64,
    pub e1_hazard: f64,
    pub unexplained_queries: u64,
}

fn make_strategy(s: StrategyArg, seed: u64) -> Box<dyn Strategy + Send> {
    match s {
        StrategyArg::RandomWalk => Box::new(RandomWalk::new(seed)),
        StrategyArg::PointerProbe => Box::new(PointerProbe::new(seed)),
    }
}

fn game_label(g: GameArg) -> &'static str {
    match g {
        GameArg::A => "A",
        GameArg::B => "B",
        GameArg::C => "C",
        GameArg::D => "D",
        GameArg::BToC => "B-to-C",
        GameArg::CToD => "C-to-D",
    }
}

pub fn game_sim(a: &GameSimArgs, seed: u64) -> Result<Vec<GameRow>> {
    let mut rows = Vec::new();
    for &k in &a.k {
        let t = a.budget.unwrap_or((k as u64).pow(2));
        let pool = a.instances.unwrap_or(a.trials).clamp(1, a.trials.max(1));
        let instances: Vec<GluedInstance> = (0..pool)
            .into_par_iter()
            .map(|i| instance_for(seed, k, i, a.variant).map(|(g, _)| g))
            .collect::<Result<_>>()?;
        let name = make_strategy(a.strategy, 0).name();
        let mut block: Vec<GameRow> = (0..a.trials)
            .into_par_iter()
            .map(|trial| {
                let g = &instances[(trial % pool) as usize];
                let (_, mut rng) = trial_streams(seed, k, trial);
                let s_seed = rng.next_u64();
                let a_seed = rng.next_u64();
                let mut row = GameRow {
                    variant: game_label(a.game).into(),
                    k,
                    strategy: name.clone(),
                    t,
                    seed,
                    trial,
                    win: false,
                    e1: false,
                    e2: false,
                    queries: 0,
                    steps: 0,
                    e1_hazard: 0.0,
                    unexplained_queries: 0,
                };
                match a.game {
                    GameArg::A | GameArg::B | GameArg::C | GameArg::D => {
                        let kind = match a.game {
                            GameArg::A => GameKind::A,
                            GameArg::B => GameKind::B,
                            GameArg::C => GameKind::C,
                            _ => GameKind::D,
                        };
                        let bare;
                        let g = if kind == GameKind::D {
                            bare = g.glued_only();
                            &bare
                        } else {
                            g
                        };
                        let out = games::play_game(
                            &GameConfig::for_instance(kind, g, t)?,
                            &mut make_strategy(a.strategy, s_seed),
                            g,
                        )?;
                        row.win = out.win;
                        row.queries = out.queries;
                        row.steps = out.queries;
                    }
                    GameArg::BToC => {
                        let (out, run) =
                            games::adapt_b_to_c(make_strategy(a.strategy, s_seed), g, t, a_seed)?;
                        row.win = out.win;
                        row.queries = out.queries;
                        row.e1 = run.e1;
                        row.e2 = run.e2;
                        row.steps = run.steps;
                        row.e1_hazard = run.e1_hazard;
                        row.unexplained_queries = run.unexplained_queries;
                    }
                    GameArg::CToD => {
                        let rec = games::reduce_c_to_d(|| make_strategy(a.strategy, s_seed), g, t)?;
                        row.win = rec.win_d;
                        row.queries = rec.queries_d;
                        row.steps = rec.queries_c;
                    }
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        rows.append(&mut block);
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct GameSummaryRow {
    pub variant: String,
    pub k: u32,
    pub strategy: String,
    #[serde(rename = "T")]
    pub t: u64,
    pub seed: u64,
    pub trials: u64,
    pub wins: u64,
    #[serde(rename = "E1")]
    pub e1: u64,
    #[serde(rename = "E2")]
    pub e2: u64,
    pub steps: u64,
    pub e1_rate: f64,
    pub e1_expected_rate: f64,
    pub e2_rate: f64,
    pub unexplained_queries: u64,
}

pub fn game_summary(a: &GameSimArgs, seed: u64) -> Result<Vec<GameSummaryRow>> {
    let rows = game_sim(a, seed)?;
    let mut out: Vec<GameSummaryRow> = Vec::new();
    for &k in &a.k {
        let mut stats = AdapterStats::default();
        let mut first = None;
        for r in rows.iter().filter(|r| r.k == k) {
            first.get_or_insert(r);
            stats.trials += 1;
            stats.wins += u64::from(r.win);
            stats.e1 += u64::from(r.e1);
            stats.e2 += u64::from(r.e2);
            stats.steps += r.steps;
            stats.e1_expected += r.e1_hazard;
            stats.unexplained_queries += r.unexplained_queries;
        }
        let Some(f) = first else { continue };
        out.push(GameSummaryRow {
            variant: f.variant.clone(),
            k,
            strategy: f.strategy.clone(),
            t: f.t,
            seed,
            trials: stats.trials,
            wins: stats.wins,
            e1: stats.e1,
            e2: stats.e2,
            steps: stats.steps,
            e1_rate: stats.e1_rate(),
            e1_expected_rate: stats.e1_expected_rate(),
            e2_rate: stats.e2_rate(),
            unexplained_queries: stats.unexplained_queries,
        });
    }
    Ok(out)
}
