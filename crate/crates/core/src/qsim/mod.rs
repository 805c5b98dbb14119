//! Dense state-vector simulation of query circuits.
//!
//! A circuit acts on an ordered list of registers. The first register is the
//! most significant digit of the basis index. Register values are 0-based;
//! how they map to edge indices depends on the register kind:
//!
//! * `Index` (dimension `M`): value `v` is edge `v + 1`.
//! * `Extended` (dimension `N`): value `v` is extended index `v` for
//!   `v >= 1` and `N` for `v = 0`, so the index-shift oracle is plain
//!   addition mod `N` and `|0>` is the reset state.
//! * `Bit` (dimension 2) and `Work` (any dimension) carry no interpretation.

mod circuit;
pub mod library;
mod oracle;

pub use circuit::{
    boost_majority3, boost_majority3_coherent, majority3, run_circuit, substitute_oracles, Op,
    OracleCounts, OracleSlot, OutputDistribution, QueryCircuit, Repetition, SubstitutedCircuit,
};
pub use oracle::{apply_oracle, EdgeBits, OracleBinding, QueriedBits};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest state dimension the simulator will allocate.
pub const MAX_DIMENSION: usize = 1 << 18;

/// Tolerance for unitarity and normalisation checks.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegisterKind {
    Index,
    Extended,
    Bit,
    Work,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub kind: RegisterKind,
    pub dim: usize,
}

impl Register {
    pub fn index(m: usize) -> Self {
        Self {
            kind: RegisterKind::Index,
            dim: m,
        }
    }

    pub fn extended(n: usize) -> Self {
        Self {
            kind: RegisterKind::Extended,
            dim: n,
        }
    }

    pub fn bit() -> Self {
        Self {
            kind: RegisterKind::Bit,
            dim: 2,
        }
    }

    pub fn work(w: usize) -> Self {
        Self {
            kind: RegisterKind::Work,
            dim: w,
        }
    }
}

/// Extended index held by an `Extended` register value.
pub fn extended_index(value: usize, n: usize) -> usize {
    if value == 0 {
        n
    } else {
        value
    }
}

/// Register value holding extended index `i` in `[1, n]`.
pub fn extended_value(i: usize, n: usize) -> usize {
    i % n
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        if registers.is_empty() {
            return Err(Error::LayoutMismatch("layout has no registers".into()));
        }
        if let Some(r) = registers.iter().find(|r| r.dim == 0) {
            return Err(Error::LayoutMismatch(format!(
                "{:?} register of dimension 0",
                r.kind
            )));
        }
        if registers
            .iter()
            .any(|r| r.kind == RegisterKind::Bit && r.dim != 2)
        {
            return Err(Error::LayoutMismatch(
                "bit registers have dimension 2".into(),
            ));
        }
        let layout = Self { registers };
        layout.checked_total()?;
        Ok(layout)
    }

    /// The standard `C^M ⊗ C^2 ⊗ C^w` layout.
    pub fn standard(m: usize, w: usize) -> Result<Self> {
        Self::new(vec![Register::index(m), Register::bit(), Register::work(w)])
    }

    fn checked_total(&self) -> Result<usize> {
        self.registers
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.dim))
            .filter(|&d| d <= MAX_DIMENSION)
            .ok_or_else(|| {
                Error::DomainTooLarge(format!(
                    "state dimension of {:?} exceeds {MAX_DIMENSION}",
                    self.dims()
                ))
            })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn dim(&self, reg: usize) -> usize {
        self.registers[reg].dim
    }

    pub fn total(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    /// Stride of each register in the flat basis index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.registers.len()];
        for j in (0..self.registers.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.registers[j + 1].dim;
        }
        strides
    }

    pub fn encode(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.registers.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} digits for {} registers",
                digits.len(),
                self.registers.len()
            )));
        }
        let mut idx = 0;
        for (d, r) in digits.iter().zip(&self.registers) {
            if *d >= r.dim {
                return Err(Error::LayoutMismatch(format!(
                    "value {d} does not fit a register of dimension {}",
                    r.dim
                )));
            }
            idx = idx * r.dim + d;
        }
        Ok(idx)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut digits = vec![0; self.registers.len()];
        for (j, r) in self.registers.iter().enumerate().rev() {
            digits[j] = idx % r.dim;
            idx /= r.dim;
        }
        digits
    }

    pub(crate) fn require(&self, reg: usize, kind: RegisterKind, what: &str) -> Result<()> {
        match self.registers.get(reg) {
            Some(r) if r.kind == kind => Ok(()),
            Some(r) => Err(Error::LayoutMismatch(format!(
                "{what} expects register {reg} to be {kind:?}, found {:?}",
                r.kind
            ))),
            None => Err(Error::LayoutMismatch(format!("{what}: no register {reg}"))),
        }
    }

    /// Flat offsets of every assignment to `targets`, in row-major order of
    /// the targets, plus the list of base indices where all targets are 0.
    fn target_offsets(&self, targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &t in targets {
            let mut next = Vec::with_capacity(offsets.len() * self.registers[t].dim);
            for &o in &offsets {
                for v in 0..self.registers[t].dim {
                    next.push(o + v * strides[t]);
                }
            }
            offsets = next;
        }
        let bases = (0..self.total())
            .filter(|&idx| {
                targets
                    .iter()
                    .all(|&t| (idx / strides[t]).is_multiple_of(self.registers[t].dim))
            })
            .collect();
        (offsets, bases)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// `|0...0>`.
    pub fn zero(layout: RegisterLayout) -> Self {
        Self::basis(layout.clone(), &vec![0; layout.len()]).expect("zero digits fit")
    }

    pub fn basis(layout: RegisterLayout, digits: &[usize]) -> Result<Self> {
        let idx = layout.encode(digits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.total()];
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                layout.total()
            )));
        }
        let state = Self { layout, amplitudes };
        let dev = (state.norm_sqr() - 1.0).abs();
        if dev > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!(
                "state is not normalised (deviation {dev:e})"
            )));
        }
        Ok(state)
    }

    /// Haar-ish random state from normalised complex Gaussians.
    pub fn random<R: Rng + ?Sized>(layout: RegisterLayout, rng: &mut R) -> Self {
        let mut amplitudes: Vec<Complex64> = (0..layout.total())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<Complex64> {
        Ok(self.amplitudes[self.layout.encode(digits)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that register `reg` holds `value`.
    pub fn probability(&self, reg: usize, value: usize) -> f64 {
        let strides = self.layout.strides();
        let dim = self.layout.dim(reg);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / strides[reg]) % dim == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Sum of |a - b| over amplitudes.
    pub fn l1_distance(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .sum()
    }

    /// Appends a register in state `|0>`.
    pub fn extend(&self, reg: Register) -> Result<PureState> {
        let mut regs = self.layout.registers().to_vec();
        regs.push(reg);
        let layout = RegisterLayout::new(regs)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.total()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amplitudes[i * reg.dim] = *a;
        }
        Ok(Self { layout, amplitudes })
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.amplitudes
    }

    /// Applies a basis permutation that only reads and rewrites the digits of
    /// `regs`. Basis states with zero amplitude are never visited, so `map`
    /// is only evaluated where the state has support.
    pub(crate) fn permute_digits(
        &mut self,
        regs: &[usize],
        mut map: impl FnMut(&mut [usize]) -> Result<()>,
    ) -> Result<()> {
        let strides = self.layout.strides();
        let dims = self.layout.dims();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; self.amplitudes.len()];
        let mut digits = vec![0; regs.len()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a == zero {
                continue;
            }
            for (d, &r) in digits.iter_mut().zip(regs) {
                *d = (idx / strides[r]) % dims[r];
            }
            let before = digits.clone();
            map(&mut digits)?;
            let mut target = idx;
            for ((&new, &old), &r) in digits.iter().zip(&before).zip(regs) {
                target = target + new * strides[r] - old * strides[r];
            }
            out[target] = a;
        }
        self.amplitudes = out;
        Ok(())
    }
}

/// How a gate acts on the joint space of its target registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// Row-major `D x D` matrix.
    Dense(Vec<Complex64>),
    /// Basis permutation: `|j> -> |perm[j]>`.
    Permutation(Vec<usize>),
    Diagonal(Vec<Complex64>),
}

/// A fixed (input-independent) unitary on some registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub targets: Vec<usize>,
    pub kind: GateKind,
}

impl Gate {
    pub fn dense(targets: Vec<usize>, matrix: Vec<Complex64>) -> Self {
        Self {
            targets,
            kind: GateKind::Dense(matrix),
        }
    }

    pub fn permutation(targets: Vec<usize>, perm: Vec<usize>) -> Self {
        Self {
            targets,
            kind: GateKind::Permutation(perm),
        }
    }

    pub fn diagonal(targets: Vec<usize>, phases: Vec<Complex64>) -> Self {
        Self {
            targets,
            kind: GateKind::Diagonal(phases),
        }
    }

    fn sub_dim(&self) -> usize {
        match &self.kind {
            GateKind::Dense(m) => (m.len() as f64).sqrt().round() as usize,
            GateKind::Permutation(p) => p.len(),
            GateKind::Diagonal(d) => d.len(),
        }
    }

    /// Checks targets against the layout and unitarity within [`UNITARY_TOL`].
    pub fn validate(&self, layout: &RegisterLayout) -> Result<()> {
        let mut seen = vec![false; layout.len()];
        for &t in &self.targets {
            if t >= layout.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::LayoutMismatch(format!(
                    "gate targets {:?} invalid for {} registers",
                    self.targets,
                    layout.len()
                )));
            }
        }
        let d: usize = self.targets.iter().map(|&t| layout.dim(t)).product();
        if self.sub_dim() != d {
            return Err(Error::LayoutMismatch(format!(
                "gate of dimension {} on targets of joint dimension {d}",
                self.sub_dim()
            )));
        }
        match &self.kind {
            GateKind::Dense(m) => {
                if m.len() != d * d {
                    return Err(Error::LayoutMismatch("dense gate is not square".into()));
                }
                let dev = unitarity_deviation(m, d);
                if dev > UNITARY_TOL {
                    return Err(Error::NotUnitary(dev));
                }
            }
            GateKind::Permutation(p) => {
                let mut hit = vec![false; d];
                for &j in p {
                    if j >= d || std::mem::replace(&mut hit[j], true) {
                        return Err(Error::NotUnitary(1.0));
                    }
                }
            }
            GateKind::Diagonal(ph) => {
                let dev = ph
                    .iter()
                    .map(|z| (z.norm() - 1.0).abs())
                    .fold(0.0, f64::max);
                if dev > UNITARY_TOL {
                    return Err(Error::NotUnitary(dev));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, state: &mut PureState) -> Result<()> {
        self.validate(state.layout())?;
        let (offsets, bases) = state.layout().target_offsets(&self.targets);
        let d = offsets.len();
        let amps = state.amplitudes_mut();
        let mut buf = vec![Complex64::new(0.0, 0.0); d];
        for base in bases {
            for (b, &o) in buf.iter_mut().zip(&offsets) {
                *b = amps[base + o];
            }
            match &self.kind {
                GateKind::Dense(m) => {
                    for (row, &o) in offsets.iter().enumerate() {
                        amps[base + o] = m[row * d..(row + 1) * d]
                            .iter()
                            .zip(&buf)
                            .map(|(u, v)| u * v)
                            .sum();
                    }
                }
                GateKind::Permutation(p) => {
                    for (j, &pj) in p.iter().enumerate() {
                        amps[base + offsets[pj]] = buf[j];
                    }
                }
                GateKind::Diagonal(ph) => {
                    for (j, &o) in offsets.iter().enumerate() {
                        amps[base + o] = buf[j] * ph[j];
                    }
                }
            }
        }
        Ok(())
    }
}

/// max |(U^† U - I)_{ij}|.
pub fn unitarity_deviation(m: &[Complex64], d: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let s: Complex64 = (0..d).map(|k| m[k * d + i].conj() * m[k * d + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s - target).norm());
        }
    }
    dev
}

/// Random `d x d` unitary: Gram-Schmidt on the columns of a complex Gaussian
/// matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        // Two passes of modified Gram-Schmidt keep the columns orthonormal to
        // machine precision.
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(c).for_each(|(x, a)| *x -= proj * a);
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            m[i * d + j] = x;
        }
    }
    m
}
