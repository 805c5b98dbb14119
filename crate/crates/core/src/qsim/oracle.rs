//! The input oracles. All of them are basis permutations.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use super::{extended_index, PureState, RegisterKind};
use crate::edges::{EdgeMap, Hypergraph};
use crate::{Error, Result};

/// Read access to the edge bits of an input.
pub trait EdgeBits {
    fn m(&self) -> usize;
    /// Bit `i`, 1-based.
    fn edge_bit(&self, i: usize) -> Result<bool>;
}

impl EdgeBits for Hypergraph {
    fn m(&self) -> usize {
        self.indexer().m()
    }

    fn edge_bit(&self, i: usize) -> Result<bool> {
        self.bit(i)
    }
}

/// An input of which only some bits are known. Reading any other bit is an
/// error, which makes "the simulation only looked at queried bits" a checked
/// property rather than a convention. Reads are recorded.
#[derive(Debug, Clone)]
pub struct QueriedBits {
    m: usize,
    known: BTreeMap<usize, bool>,
    reads: RefCell<BTreeSet<usize>>,
}

impl QueriedBits {
    pub fn new(m: usize, known: BTreeMap<usize, bool>) -> Result<Self> {
        if let Some((&i, _)) = known.iter().find(|(&i, _)| i == 0 || i > m) {
            return Err(Error::IndexOutOfRange { index: i, bound: m });
        }
        Ok(Self {
            m,
            known,
            reads: RefCell::new(BTreeSet::new()),
        })
    }

    /// Copies the listed bits out of `x`.
    pub fn restrict(x: &dyn EdgeBits, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let known = indices
            .into_iter()
            .map(|i| Ok((i, x.edge_bit(i)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(x.m(), known)
    }

    pub fn known(&self) -> &BTreeMap<usize, bool> {
        &self.known
    }

    /// Indices read so far.
    pub fn reads(&self) -> BTreeSet<usize> {
        self.reads.borrow().clone()
    }
}

impl EdgeBits for QueriedBits {
    fn m(&self) -> usize {
        self.m
    }

    fn edge_bit(&self, i: usize) -> Result<bool> {
        let b = *self.known.get(&i).ok_or(Error::UnqueriedBit(i))?;
        self.reads.borrow_mut().insert(i);
        Ok(b)
    }
}

/// One oracle application with its wiring. Register arguments are positions
/// in the state's layout.
#[derive(Clone, Copy)]
pub enum OracleBinding<'a> {
    /// `|i, b> -> |i, b ⊕ x_i>`.
    Plain {
        x: &'a dyn EdgeBits,
        index: usize,
        bit: usize,
    },
    /// `|j, b> -> |j, b ⊕ x_j>` for `j <= M`, identity for `j > M`.
    Extended {
        x: &'a dyn EdgeBits,
        ext: usize,
        bit: usize,
    },
    /// `|i, j> -> |i, j + F(i) mod N>`.
    Shift {
        f: &'a EdgeMap,
        index: usize,
        ext: usize,
    },
    /// `|i, j> -> |i, j - F(i) mod N>`.
    ShiftAdjoint {
        f: &'a EdgeMap,
        index: usize,
        ext: usize,
    },
    /// Shift, extended oracle, shift back: `|i, 0, b> -> |i, 0, b ⊕ (x∘F)_i>`.
    Composed {
        x: &'a dyn EdgeBits,
        f: &'a EdgeMap,
        index: usize,
        ext: usize,
        bit: usize,
    },
}

pub fn apply_oracle(state: &mut PureState, binding: OracleBinding<'_>) -> Result<()> {
    let layout = state.layout().clone();
    match binding {
        OracleBinding::Plain { x, index, bit } => {
            layout.require(index, RegisterKind::Index, "plain oracle")?;
            layout.require(bit, RegisterKind::Bit, "plain oracle")?;
            check_m(layout.dim(index), x.m())?;
            state.permute_digits(&[index, bit], |d| {
                if x.edge_bit(d[0] + 1)? {
                    d[1] ^= 1;
                }
                Ok(())
            })
        }
        OracleBinding::Extended { x, ext, bit } => {
            layout.require(ext, RegisterKind::Extended, "extended oracle")?;
            layout.require(bit, RegisterKind::Bit, "extended oracle")?;
            let n = layout.dim(ext);
            let m = x.m();
            if m > n {
                return Err(Error::LayoutMismatch(format!(
                    "extended register of dimension {n} below M = {m}"
                )));
            }
            state.permute_digits(&[ext, bit], |d| {
                let j = extended_index(d[0], n);
                if j <= m && x.edge_bit(j)? {
                    d[1] ^= 1;
                }
                Ok(())
            })
        }
        OracleBinding::Shift { f, index, ext } => shift(state, f, index, ext, false),
        OracleBinding::ShiftAdjoint { f, index, ext } => shift(state, f, index, ext, true),
        OracleBinding::Composed {
            x,
            f,
            index,
            ext,
            bit,
        } => {
            shift(state, f, index, ext, false)?;
            apply_oracle(state, OracleBinding::Extended { x, ext, bit })?;
            shift(state, f, index, ext, true)
        }
    }
}

fn check_m(dim: usize, m: usize) -> Result<()> {
    if dim != m {
        return Err(Error::LayoutMismatch(format!(
            "index register of dimension {dim} for an input with M = {m}"
        )));
    }
    Ok(())
}

fn shift(
    state: &mut PureState,
    f: &EdgeMap,
    index: usize,
    ext: usize,
    inverse: bool,
) -> Result<()> {
    let layout = state.layout().clone();
    layout.require(index, RegisterKind::Index, "index shift")?;
    layout.require(ext, RegisterKind::Extended, "index shift")?;
    check_m(layout.dim(index), f.domain())?;
    let n = layout.dim(ext);
    if f.codomain() != n {
        return Err(Error::LayoutMismatch(format!(
            "edge map into [{}] with an extended register of dimension {n}",
            f.codomain()
        )));
    }
    let table = f.table();
    state.permute_digits(&[index, ext], |d| {
        let step = table[d[0]] % n;
        d[1] = if inverse {
            (d[1] + n - step) % n
        } else {
            (d[1] + step) % n
        };
        Ok(())
    })
}
