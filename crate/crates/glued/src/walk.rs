//! Continuous-time quantum walk `e^{-iHt}` on the glued-trees part.
//!
//! Started at ENTRANCE, the walk never leaves the span of the uniform column
//! states, where the adjacency matrix acts as a weighted path on `2k + 2`
//! sites: weight `√2` between consecutive columns inside a tree and `2`
//! across the gluing. [`WalkHamiltonian::reduced`] uses that path;
//! [`WalkHamiltonian::full`] uses the whole adjacency matrix.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::instance::{GluedInstance, Label};
use crate::{Error, Result};

/// Largest `k` for the full-graph Hamiltonian.
pub const MAX_FULL_K: u32 = 8;
/// Largest `k` for the reduced Hamiltonian.
pub const MAX_REDUCED_K: u32 = 200;

/// Real symmetric sparse matrix in row-compressed form.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds from `(row, col, value)` triples listing both triangles.
    pub fn new(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|a| (a.0, a.1));
        let lookup: HashMap<(usize, usize), f64> =
            entries.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        for &(i, j, v) in &entries {
            if i >= dim || j >= dim {
                return Err(Error::InvalidParameter(format!(
                    "entry ({i}, {j}) outside dimension {dim}"
                )));
            }
            if lookup.get(&(j, i)).is_none_or(|&w| (w - v).abs() > 1e-12) {
                return Err(Error::NotSymmetric);
            }
        }
        let mut row_start = vec![0; dim + 1];
        for &(i, _, _) in &entries {
            row_start[i + 1] += 1;
        }
        for i in 0..dim {
            row_start[i + 1] += row_start[i];
        }
        Ok(Self {
            dim,
            row_start,
            cols: entries.iter().map(|e| e.1).collect(),
            vals: entries.iter().map(|e| e.2).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                self.vals[self.row_start[i]..self.row_start[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.row_start[i]..self.row_start[i + 1])
                .map(|p| x[self.cols[p]] * self.vals[p])
                .sum();
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.row_start[i]..self.row_start[i + 1] {
                m[(i, self.cols[p])] = self.vals[p];
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub enum WalkHamiltonian {
    /// Adjacency matrix of the glued-trees subgraph; basis ordered by column,
    /// then label, with markers appended when included.
    Full {
        k: u32,
        basis: Vec<Label>,
        /// Column of each basis element, `None` for markers.
        column: Vec<Option<usize>>,
        matrix: SparseSymmetric,
    },
    /// Weighted path on the `2k + 2` column states, diagonalised once.
    Reduced {
        k: u32,
        weights: Vec<f64>,
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
    },
}

impl WalkHamiltonian {
    pub fn reduced(k: u32) -> Result<Self> {
        if k == 0 || k > MAX_REDUCED_K {
            return Err(Error::TooLarge(format!(
                "reduced walk needs 1 <= k <= {MAX_REDUCED_K}, got {k}"
            )));
        }
        let dim = 2 * k as usize + 2;
        let weights: Vec<f64> = (0..dim - 1)
            .map(|j| {
                if j == k as usize {
                    2.0
                } else {
                    std::f64::consts::SQRT_2
                }
            })
            .collect();
        let mut m = DMatrix::zeros(dim, dim);
        for (j, &w) in weights.iter().enumerate() {
            m[(j, j + 1)] = w;
            m[(j + 1, j)] = w;
        }
        let eig = SymmetricEigen::new(m);
        Ok(WalkHamiltonian::Reduced {
            k,
            weights,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    /// The glued-trees subgraph of `g`, plus the marker edges when
    /// `include_markers` is set.
    pub fn full(g: &GluedInstance, include_markers: bool) -> Result<Self> {
        let k = g.k();
        if k > MAX_FULL_K {
            return Err(Error::TooLarge(format!(
                "full walk needs k <= {MAX_FULL_K}, got {k}"
            )));
        }
        let mut basis: Vec<Label> = Vec::new();
        let mut column = Vec::new();
        for (c, col) in g.columns().iter().enumerate() {
            basis.extend(col);
            column.extend(std::iter::repeat_n(Some(c), col.len()));
        }
        if include_markers {
            basis.extend(g.markers());
            column.extend([None; 3]);
        }
        let index: HashMap<Label, usize> = basis.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let mut entries = Vec::new();
        for (i, &u) in basis.iter().enumerate() {
            for w in g.neighbors(u)? {
                if let Some(&j) = index.get(w) {
                    entries.push((i, j, 1.0));
                }
            }
        }
        let matrix = SparseSymmetric::new(basis.len(), entries)?;
        Ok(WalkHamiltonian::Full {
            k,
            basis,
            column,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            WalkHamiltonian::Full { basis, .. } => basis.len(),
            WalkHamiltonian::Reduced { weights, .. } => weights.len() + 1,
        }
    }

    pub fn k(&self) -> u32 {
        match self {
            WalkHamiltonian::Full { k, .. } | WalkHamiltonian::Reduced { k, .. } => *k,
        }
    }

    /// Index of ENTRANCE in the basis.
    pub fn entrance_index(&self) -> usize {
        0
    }

    /// Dense form, for checks.
    pub fn dense(&self) -> DMatrix<f64> {
        match self {
            WalkHamiltonian::Full { matrix, .. } => matrix.to_dense(),
            WalkHamiltonian::Reduced {
                eigenvalues,
                eigenvectors,
                ..
            } => eigenvectors * DMatrix::from_diagonal(eigenvalues) * eigenvectors.transpose(),
        }
    }

    /// Probability of each column at time `t`; for the full basis, marker
    /// probability is dropped.
    pub fn column_profile(&self, t: f64, start: usize) -> Result<Vec<f64>> {
        let p = ctqw_evolve(self, t, start)?;
        match self {
            WalkHamiltonian::Reduced { .. } => Ok(p),
            WalkHamiltonian::Full { k, column, .. } => {
                let mut out = vec![0.0; 2 * *k as usize + 2];
                for (pi, c) in p.iter().zip(column) {
                    if let Some(c) = c {
                        out[*c] += pi;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// `|<b| e^{-iHt} |start>|²` for every basis element `b`.
pub fn ctqw_evolve(h: &WalkHamiltonian, t: f64, start: usize) -> Result<Vec<f64>> {
    if start >= h.dim() {
        return Err(Error::InvalidParameter(format!(
            "start {start} outside dimension {}",
            h.dim()
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter("time must be finite".into()));
    }
    match h {
        WalkHamiltonian::Reduced {
            eigenvalues,
            eigenvectors,
            ..
        } => {
            let dim = eigenvalues.len();
            // ψ = V e^{-iΛt} Vᵀ e_start
            let coeff: Vec<Complex64> = (0..dim)
                .map(|m| Complex64::from_polar(eigenvectors[(start, m)], -eigenvalues[m] * t))
                .collect();
            Ok((0..dim)
                .map(|b| {
                    (0..dim)
                        .map(|m| coeff[m] * eigenvectors[(b, m)])
                        .sum::<Complex64>()
                        .norm_sqr()
                })
                .collect())
        }
        WalkHamiltonian::Full { matrix, .. } => {
            let mut psi = vec![Complex64::new(0.0, 0.0); matrix.dim()];
            psi[start] = Complex64::new(1.0, 0.0);
            taylor_propagate(matrix, t, &mut psi);
            Ok(psi.iter().map(|a| a.norm_sqr()).collect())
        }
    }
}

/// Applies `e^{-iHt}` by splitting `t` into steps with `|H| dt <= 1/2` and
/// summing each step's Taylor series to machine precision.
fn taylor_propagate(h: &SparseSymmetric, t: f64, psi: &mut [Complex64]) {
    let norm = h.norm_bound().max(1e-300);
    let steps = ((t.abs() * norm) / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut term = vec![Complex64::new(0.0, 0.0); psi.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(psi);
        for j in 1..64 {
            h.apply(&term, &mut next);
            let scale = Complex64::new(0.0, -dt / j as f64);
            let mut size = 0.0;
            for (tn, nx) in term.iter_mut().zip(&next) {
                *tn = nx * scale;
                size += tn.norm_sqr();
            }
            for (p, tn) in psi.iter_mut().zip(&term) {
                *p += tn;
            }
            if size < 1e-34 {
                break;
            }
        }
    }
}

/// Probability of the EXIT column at time `t`, from the reduced walk.
pub fn exit_column_probability(h: &WalkHamiltonian, t: f64) -> Result<f64> {
    let p = h.column_profile(t, h.entrance_index())?;
    Ok(*p.last().expect("nonempty profile"))
}

/// Time on the grid `0, step, 2·step, .., t_max` maximising the EXIT-column
/// probability, with that probability. Earliest time wins ties.
pub fn best_exit_time(h: &WalkHamiltonian, t_max: f64, step: f64) -> Result<(f64, f64)> {
    if step <= 0.0 || t_max < 0.0 {
        return Err(Error::InvalidParameter(
            "time grid needs step > 0 and t_max >= 0".into(),
        ));
    }
    let points = (t_max / step).floor() as usize;
    let mut best = (0.0, exit_column_probability(h, 0.0)?);
    for i in 1..=points {
        let t = i as f64 * step;
        let p = exit_column_probability(h, t)?;
        if p > best.1 {
            best = (t, p);
        }
    }
    Ok(best)
}
