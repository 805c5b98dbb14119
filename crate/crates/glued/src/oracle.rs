//! The adjacency-list oracle with a query counter and log.

use serde::Serialize;

use crate::instance::{GluedInstance, Label, MAX_DEGREE};
use crate::{Error, Result};

/// `Slot` answers "the i-th neighbour of u" per query; `Full` returns the
/// whole neighbour list per query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Slot,
    Full,
}

impl std::str::FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slot" => Ok(OracleMode::Slot),
            "full" => Ok(OracleMode::Full),
            _ => Err(Error::Parse(format!(
                "mode must be slot or full, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for OracleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OracleMode::Slot => "slot",
            OracleMode::Full => "full",
        })
    }
}

/// True for the neighbour-list lengths that only EXIT has.
pub fn is_exit_degree(d: usize) -> bool {
    d == 2 || d == 5
}

#[derive(Debug)]
pub struct AdjOracle<'a> {
    graph: &'a GluedInstance,
    mode: OracleMode,
    count: u64,
    log: Vec<Label>,
}

impl<'a> AdjOracle<'a> {
    pub fn new(graph: &'a GluedInstance, mode: OracleMode) -> Self {
        Self {
            graph,
            mode,
            count: 0,
            log: Vec::new(),
        }
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    /// Size of the label space.
    pub fn n(&self) -> u32 {
        self.graph.n()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Subject label of every query, in order.
    pub fn log(&self) -> &[Label] {
        &self.log
    }

    /// Ground truth, for simulating measurements and for scoring. Solvers do
    /// not consult it for anything a query would tell them.
    pub(crate) fn instance(&self) -> &'a GluedInstance {
        self.graph
    }

    fn record(&mut self, u: Label) {
        self.count += 1;
        self.log.push(u);
    }

    /// The `slot`-th neighbour of `u` (1-based), or `None` for the star
    /// symbol when `u` has fewer neighbours.
    pub fn query(&mut self, u: Label, slot: usize) -> Result<Option<Label>> {
        if slot == 0 || slot > MAX_DEGREE {
            return Err(Error::SlotOutOfRange(slot));
        }
        let nb = self.graph.neighbors(u)?;
        self.record(u);
        Ok(nb.get(slot - 1).copied())
    }

    /// Every neighbour of `u` at the cost of one query.
    pub fn query_all(&mut self, u: Label) -> Result<Vec<Label>> {
        let nb = self.graph.neighbors(u)?.to_vec();
        self.record(u);
        Ok(nb)
    }

    /// The neighbour list obtained the cheapest way the mode allows: one
    /// query in full mode, slot queries until the first star (at most five)
    /// in slot mode.
    pub fn neighbors(&mut self, u: Label) -> Result<Vec<Label>> {
        match self.mode {
            OracleMode::Full => self.query_all(u),
            OracleMode::Slot => {
                let mut out = Vec::with_capacity(MAX_DEGREE);
                for slot in 1..=MAX_DEGREE {
                    match self.query(u, slot)? {
                        Some(v) => out.push(v),
                        None => break,
                    }
                }
                Ok(out)
            }
        }
    }
}
