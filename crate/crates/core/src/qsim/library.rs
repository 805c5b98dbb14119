//! Ready-made query circuits.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use super::circuit::{Op, OracleSlot, QueryCircuit};
use super::{random_unitary, Gate, Register, RegisterLayout};
use crate::Result;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `q` queries on the standard layout with Haar-random unitaries before,
/// between and after them. The output is the bit register.
pub fn random_circuit<R: Rng + ?Sized>(
    m: usize,
    w: usize,
    q: usize,
    rng: &mut R,
) -> Result<QueryCircuit> {
    let layout = RegisterLayout::standard(m, w)?;
    let d = layout.total();
    let slot = OracleSlot {
        index: 0,
        bit: 1,
        ext: None,
    };
    let mut ops = vec![Op::Gate(Gate::dense(vec![0, 1, 2], random_unitary(d, rng)))];
    for _ in 0..q {
        ops.push(Op::Oracle(slot));
        ops.push(Op::Gate(Gate::dense(vec![0, 1, 2], random_unitary(d, rng))));
    }
    QueryCircuit::new(layout, ops, 1)
}

/// Acts as a Hadamard on `span{|a>, |b>}` and as the identity elsewhere.
pub fn pair_hadamard(dim: usize, a: usize, b: usize) -> Vec<Complex64> {
    let mut m = vec![c(0.0); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = c(1.0);
    }
    m[a * dim + a] = c(FRAC_1_SQRT_2);
    m[a * dim + b] = c(FRAC_1_SQRT_2);
    m[b * dim + a] = c(FRAC_1_SQRT_2);
    m[b * dim + b] = c(-FRAC_1_SQRT_2);
    m
}

/// Transposition of two basis states.
pub fn swap_permutation(dim: usize, a: usize, b: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..dim).collect();
    p.swap(a, b);
    p
}

/// Extends an injective partial map on `[0, dim)` to a permutation, sending
/// unmapped points to unused images in increasing order.
pub fn complete_permutation(dim: usize, partial: &[(usize, usize)]) -> Vec<usize> {
    let mut perm = vec![usize::MAX; dim];
    let mut used = vec![false; dim];
    for &(from, to) in partial {
        perm[from] = to;
        used[to] = true;
    }
    let mut free = (0..dim).filter(|&j| !used[j]);
    for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
        *p = free.next().expect("partial map is injective");
    }
    perm
}

/// Exact parity of all `m` input bits using `ceil(m / 2)` queries.
///
/// Pairs of bits are read with one query each by phase kickback; each pair's
/// parity goes to its own work bit so the index register can be reset. An
/// odd bit left over is read directly at the end.
pub fn parity_circuit(m: usize) -> Result<QueryCircuit> {
    let pairs = m / 2;
    let w = 1usize << pairs;
    let layout = RegisterLayout::new(vec![Register::index(m), Register::bit(), Register::work(w)])?;
    let slot = Op::Oracle(OracleSlot {
        index: 0,
        bit: 1,
        ext: None,
    });
    let h = FRAC_1_SQRT_2;
    // H X sends |0> to |->; its adjoint sends |-> back to |0>.
    let minus = Gate::dense(vec![1], vec![c(h), c(h), c(-h), c(h)]);
    let unminus = Gate::dense(vec![1], vec![c(h), c(-h), c(h), c(h)]);

    let mut ops = Vec::new();
    if pairs > 0 {
        ops.push(Op::Gate(minus));
    }
    for j in 0..pairs {
        let (a, b) = (2 * j, 2 * j + 1);
        if a != 0 {
            ops.push(Op::Gate(Gate::permutation(
                vec![0],
                swap_permutation(m, 0, a),
            )));
        }
        ops.push(Op::Gate(Gate::dense(vec![0], pair_hadamard(m, a, b))));
        ops.push(slot.clone());
        ops.push(Op::Gate(Gate::dense(vec![0], pair_hadamard(m, a, b))));
        // |a, u> -> |0, u>, |b, u> -> |0, u + 2^j> on work values with bit j clear.
        let partial: Vec<(usize, usize)> = (0..w)
            .filter(|u| u & (1 << j) == 0)
            .flat_map(|u| [(a * w + u, u), (b * w + u, u | (1 << j))])
            .collect();
        ops.push(Op::Gate(Gate::permutation(
            vec![0, 2],
            complete_permutation(m * w, &partial),
        )));
    }
    if pairs > 0 {
        ops.push(Op::Gate(unminus));
    }
    if m % 2 == 1 {
        if m > 1 {
            ops.push(Op::Gate(Gate::permutation(
                vec![0],
                swap_permutation(m, 0, m - 1),
            )));
        }
        ops.push(slot);
    }
    // bit ^= parity of the work bits
    let fold = (0..2 * w)
        .map(|j| j ^ ((j / 2).count_ones() as usize & 1))
        .collect();
    ops.push(Op::Gate(Gate::permutation(vec![2, 1], fold)));
    QueryCircuit::new(layout, ops, 1)
}
