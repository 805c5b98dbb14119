//! Query circuits: fixed gates interleaved with oracle slots.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::oracle::{apply_oracle, EdgeBits, OracleBinding};
use super::{Gate, PureState, Register, RegisterKind, RegisterLayout};
use crate::edges::EdgeMap;
use crate::{Error, Result};

/// Where an oracle call acts. A slot with `ext` set is a composed-oracle
/// call through that extended register; otherwise it queries the input
/// directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSlot {
    pub index: usize,
    pub bit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Gate(Gate),
    Oracle(OracleSlot),
}

/// How many independent runs feed the answer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repetition {
    #[default]
    Single,
    /// Three independent runs, majority vote of the three measured outputs.
    Majority3,
}

impl Repetition {
    pub fn runs(self) -> usize {
        match self {
            Repetition::Single => 1,
            Repetition::Majority3 => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryCircuit {
    layout: RegisterLayout,
    ops: Vec<Op>,
    /// Register measured at the end; must be a 2-dimensional register.
    output: usize,
    #[serde(default)]
    repetition: Repetition,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleCounts {
    pub plain: usize,
    pub composed: usize,
    pub shift: usize,
    pub shift_adjoint: usize,
}

impl QueryCircuit {
    pub fn new(layout: RegisterLayout, ops: Vec<Op>, output: usize) -> Result<Self> {
        let c = Self {
            layout,
            ops,
            output,
            repetition: Repetition::Single,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.layout.registers().get(self.output) {
            Some(r) if r.dim == 2 => {}
            _ => {
                return Err(Error::LayoutMismatch(format!(
                    "output register {} is not two-dimensional",
                    self.output
                )))
            }
        }
        for op in &self.ops {
            match op {
                Op::Gate(g) => g.validate(&self.layout)?,
                Op::Oracle(s) => {
                    self.layout
                        .require(s.index, RegisterKind::Index, "oracle slot")?;
                    self.layout
                        .require(s.bit, RegisterKind::Bit, "oracle slot")?;
                    if let Some(e) = s.ext {
                        self.layout
                            .require(e, RegisterKind::Extended, "oracle slot")?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn repetition(&self) -> Repetition {
        self.repetition
    }

    fn slots(&self) -> impl Iterator<Item = &OracleSlot> {
        self.ops.iter().filter_map(|op| match op {
            Op::Oracle(s) => Some(s),
            Op::Gate(_) => None,
        })
    }

    /// Oracle calls over all runs.
    pub fn oracle_counts(&self) -> OracleCounts {
        let runs = self.repetition.runs();
        let composed = self.slots().filter(|s| s.ext.is_some()).count() * runs;
        OracleCounts {
            plain: self.slots().filter(|s| s.ext.is_none()).count() * runs,
            composed,
            shift: composed,
            shift_adjoint: composed,
        }
    }

    /// Number of input queries over all runs.
    pub fn query_count(&self) -> usize {
        self.slots().count() * self.repetition.runs()
    }

    /// Largest index-register dimension used by an oracle slot.
    pub fn index_dim(&self) -> Option<usize> {
        self.slots().map(|s| self.layout.dim(s.index)).max()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        RegisterLayout::new(c.layout.registers().to_vec())?;
        c.validate()?;
        Ok(c)
    }

    /// State after one run from `|0...0>`.
    pub fn final_state(&self, x: &dyn EdgeBits, f: Option<&EdgeMap>) -> Result<PureState> {
        let mut state = PureState::zero(self.layout.clone());
        for op in &self.ops {
            match op {
                Op::Gate(g) => g.apply(&mut state)?,
                Op::Oracle(s) => {
                    let binding = match (s.ext, f) {
                        (None, _) => OracleBinding::Plain {
                            x,
                            index: s.index,
                            bit: s.bit,
                        },
                        (Some(ext), Some(f)) => OracleBinding::Composed {
                            x,
                            f,
                            index: s.index,
                            ext,
                            bit: s.bit,
                        },
                        (Some(_), None) => {
                            return Err(Error::InvalidParameter(
                                "composed oracle slot without an edge map".into(),
                            ))
                        }
                    };
                    apply_oracle(&mut state, binding)?;
                }
            }
        }
        Ok(state)
    }
}

/// Distribution of the measured output bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutputDistribution {
    pub p0: f64,
    pub p1: f64,
}

impl OutputDistribution {
    pub fn from_p1(p1: f64) -> Self {
        let p1 = p1.clamp(0.0, 1.0);
        Self { p0: 1.0 - p1, p1 }
    }

    pub fn prob(&self, z: bool) -> f64 {
        if z {
            self.p1
        } else {
            self.p0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.p1
    }

    /// `sum_z |p(z) - q(z)|`.
    pub fn l1(&self, other: &OutputDistribution) -> f64 {
        (self.p0 - other.p0).abs() + (self.p1 - other.p1).abs()
    }

    /// Weighted mixture of distributions.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a OutputDistribution)>) -> Self {
        let (w, p1) = parts
            .into_iter()
            .fold((0.0, 0.0), |(w, p), (wi, d)| (w + wi, p + wi * d.p1));
        Self::from_p1(if w > 0.0 { p1 / w } else { 0.0 })
    }
}

/// Probability that the majority of three independent bits with bias `p` is 1.
pub fn majority3(p: f64) -> f64 {
    3.0 * p * p * (1.0 - p) + p * p * p
}

pub fn run_circuit(
    c: &QueryCircuit,
    x: &dyn EdgeBits,
    f: Option<&EdgeMap>,
) -> Result<OutputDistribution> {
    let state = c.final_state(x, f)?;
    let p1 = state.probability(c.output, 1);
    Ok(OutputDistribution::from_p1(match c.repetition {
        Repetition::Single => p1,
        Repetition::Majority3 => majority3(p1),
    }))
}

/// Three independent runs and a majority vote of their outputs.
pub fn boost_majority3(c: &QueryCircuit) -> Result<QueryCircuit> {
    if c.repetition != Repetition::Single {
        return Err(Error::InvalidParameter("circuit is already boosted".into()));
    }
    Ok(QueryCircuit {
        repetition: Repetition::Majority3,
        ..c.clone()
    })
}

/// Majority boosting as one circuit: three register copies run side by side
/// and a final gate writes the majority of the three outputs to a fresh bit.
/// Matches [`boost_majority3`] exactly, at the cost of cubing the dimension.
pub fn boost_majority3_coherent(c: &QueryCircuit) -> Result<QueryCircuit> {
    if c.repetition != Repetition::Single {
        return Err(Error::InvalidParameter("circuit is already boosted".into()));
    }
    if c.slots().any(|s| s.ext.is_some()) {
        return Err(Error::InvalidParameter(
            "boost before substituting the oracles".into(),
        ));
    }
    let k = c.layout.len();
    let mut regs = Vec::with_capacity(3 * k + 1);
    for _ in 0..3 {
        regs.extend_from_slice(c.layout.registers());
    }
    regs.push(Register::bit());
    let layout = RegisterLayout::new(regs)?;
    let mut ops = Vec::with_capacity(3 * c.ops.len() + 1);
    for copy in 0..3 {
        let off = copy * k;
        for op in &c.ops {
            ops.push(match op {
                Op::Gate(g) => Op::Gate(Gate {
                    targets: g.targets.iter().map(|t| t + off).collect(),
                    kind: g.kind.clone(),
                }),
                Op::Oracle(s) => Op::Oracle(OracleSlot {
                    index: s.index + off,
                    bit: s.bit + off,
                    ext: None,
                }),
            });
        }
    }
    // |a b c r> -> |a b c r ⊕ maj(a, b, c)>
    let perm = (0..16)
        .map(|j: usize| {
            let (a, b, cc) = ((j >> 3) & 1, (j >> 2) & 1, (j >> 1) & 1);
            j ^ usize::from(a + b + cc >= 2)
        })
        .collect();
    let out = c.output;
    ops.push(Op::Gate(Gate::permutation(
        vec![out, out + k, out + 2 * k, 3 * k],
        perm,
    )));
    QueryCircuit::new(layout, ops, 3 * k)
}

/// A circuit whose oracle calls were replaced by composed calls for a fixed
/// edge map, sharing one appended extended register.
#[derive(Clone, Debug)]
pub struct SubstitutedCircuit {
    pub circuit: QueryCircuit,
    pub edge_map: EdgeMap,
}

impl SubstitutedCircuit {
    pub fn run(&self, x: &dyn EdgeBits) -> Result<OutputDistribution> {
        run_circuit(&self.circuit, x, Some(&self.edge_map))
    }

    pub fn oracle_counts(&self) -> OracleCounts {
        self.circuit.oracle_counts()
    }
}

pub fn substitute_oracles(c: &QueryCircuit, f: &EdgeMap) -> Result<SubstitutedCircuit> {
    if c.slots().any(|s| s.ext.is_some()) {
        return Err(Error::InvalidParameter(
            "circuit already uses composed oracles".into(),
        ));
    }
    if let Some(s) = c.slots().find(|s| c.layout.dim(s.index) != f.domain()) {
        return Err(Error::LayoutMismatch(format!(
            "index register of dimension {} for an edge map on [{}]",
            c.layout.dim(s.index),
            f.domain()
        )));
    }
    let mut regs = c.layout.registers().to_vec();
    let ext = regs.len();
    regs.push(Register::extended(f.codomain()));
    let layout = RegisterLayout::new(regs)?;
    let ops = c
        .ops
        .iter()
        .map(|op| match op {
            Op::Oracle(s) => Op::Oracle(OracleSlot {
                ext: Some(ext),
                ..*s
            }),
            g => g.clone(),
        })
        .collect();
    let circuit = QueryCircuit {
        layout,
        ops,
        output: c.output,
        repetition: c.repetition,
    };
    circuit.validate()?;
    Ok(SubstitutedCircuit {
        circuit,
        edge_map: f.clone(),
    })
}
