//! Numerical irreducibility checks on a discretized mark space.
//!
//! The mark law is replaced by finitely many representative marks with
//! probability weights. The pair kernel `D[i][j] = d_φ(m_i, m_j)` then defines
//! a weighted graph whose connectivity decides the verdict.

use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::marks::MarkDistribution;
use crate::model::ConnectionModel;
use crate::unionfind::DisjointSets;

const WEIGHT_TOL: f64 = 1e-12;
const DEFAULT_RELATIVE_TOL: f64 = 1e-12;
/// Entries in `(tol, STRADDLE_FACTOR·tol]` make the verdict undetermined.
const STRADDLE_FACTOR: f64 = 10.0;
const MONOTONE_SLACK: f64 = 1e-9;

/// Representative marks `m_1 < … < m_k` with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkGrid {
    marks: Vec<f64>,
    weights: Vec<f64>,
    /// `true` where the mark is an atom of the underlying law.
    atoms: Vec<bool>,
}

impl MarkGrid {
    /// Grid from explicit points. Marks are sorted; none is flagged as an atom.
    pub fn new(marks: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let atoms = vec![false; marks.len()];
        Self::with_atoms(marks, weights, atoms)
    }

    pub fn with_atoms(marks: Vec<f64>, weights: Vec<f64>, atoms: Vec<bool>) -> Result<Self> {
        if marks.is_empty() || marks.len() != weights.len() || marks.len() != atoms.len() {
            return Err(RcmError::InvalidMarks("grid needs matching, nonempty marks and weights".into()));
        }
        if marks.iter().any(|m| !m.is_finite()) || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(RcmError::InvalidMarks("grid marks must be finite and weights positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(RcmError::InvalidMarks(format!("grid weights sum to {total}, not 1")));
        }
        let mut order: Vec<usize> = (0..marks.len()).collect();
        order.sort_by(|&a, &b| marks[a].total_cmp(&marks[b]));
        if order.windows(2).any(|w| marks[w[0]] == marks[w[1]]) {
            return Err(RcmError::InvalidMarks("grid marks must be distinct".into()));
        }
        Ok(Self {
            marks: order.iter().map(|&i| marks[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
            atoms: order.iter().map(|&i| atoms[i]).collect(),
        })
    }

    /// Atomic laws keep their atoms; continuous laws are split into `cells`
    /// equal-width cells represented by their midpoints.
    pub fn from_distribution(dist: &MarkDistribution, cells: usize) -> Result<Self> {
        dist.validate()?;
        match dist {
            MarkDistribution::PointMass { value } => Self::with_atoms(vec![*value], vec![1.0], vec![true]),
            MarkDistribution::Discrete { atoms } => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                Self::with_atoms(
                    atoms.iter().map(|a| a.0).collect(),
                    atoms.iter().map(|a| a.1 / total).collect(),
                    vec![true; atoms.len()],
                )
            }
            MarkDistribution::Uniform { lo, hi } | MarkDistribution::PowerLaw { lo, hi, .. } => {
                if cells == 0 {
                    return Err(RcmError::InvalidArgument("grid needs at least one cell".into()));
                }
                let width = (hi - lo) / cells as f64;
                let edges: Vec<f64> = (0..=cells).map(|i| if i == cells { *hi } else { lo + width * i as f64 }).collect();
                let marks = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
                let mut weights: Vec<f64> = edges.windows(2).map(|e| dist.cdf(e[1]) - dist.cdf(e[0])).collect();
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                Self::new(marks, weights)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> &[bool] {
        &self.atoms
    }
}

/// Symmetric nonnegative `k × k` matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(RcmError::InvalidArgument("kernel matrix must be square".into()));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if entries.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(RcmError::InvalidArgument("kernel entries must be finite and nonnegative".into()));
        }
        for i in 0..size {
            for j in 0..i {
                let (a, b) = (entries[i * size + j], entries[j * size + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(RcmError::InvalidArgument(format!("kernel not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// `A · diag(w) · B`, the discrete composition of two kernels.
    pub fn compose(&self, weights: &[f64], other: &KernelMatrix) -> Result<KernelMatrix> {
        let k = self.size;
        if other.size != k || weights.len() != k {
            return Err(RcmError::InvalidArgument("kernel sizes do not match".into()));
        }
        let mut entries = vec![0.0; k * k];
        for i in 0..k {
            for (r, w) in weights.iter().enumerate() {
                let a = self.get(i, r) * w;
                if a == 0.0 {
                    continue;
                }
                let row = other.row(r);
                for (e, b) in entries[i * k..(i + 1) * k].iter_mut().zip(row) {
                    *e += a * b;
                }
            }
        }
        Ok(KernelMatrix { size: k, entries })
    }

    fn symmetrize(&mut self) {
        let k = self.size;
        for i in 0..k {
            for j in 0..i {
                let avg = 0.5 * (self.entries[i * k + j] + self.entries[j * k + i]);
                self.entries[i * k + j] = avg;
                self.entries[j * k + i] = avg;
            }
        }
    }

    /// `n`-fold weighted power: `D⁽¹⁾ = D`, `D⁽ⁿ⁺¹⁾ = D⁽ⁿ⁾ · diag(w) · D`.
    pub fn power(&self, weights: &[f64], n: usize) -> Result<KernelMatrix> {
        if n == 0 {
            return Err(RcmError::InvalidArgument("power must be at least 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.compose(weights, self)?;
            // powers of one symmetric kernel commute; remove rounding asymmetry
            acc.symmetrize();
        }
        Ok(acc)
    }
}

/// `D[i][j] = d_φ(m_i, m_j)` on the grid.
pub fn build_kernel_matrix(model: &ConnectionModel, grid: &MarkGrid) -> Result<KernelMatrix> {
    let k = grid.len();
    let m = grid.marks();
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = model.pair_integral(m[i], m[j])?;
            if !v.is_finite() {
                return Err(RcmError::DivergentIntegral { p: m[i], q: m[j] });
            }
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    KernelMatrix::from_rows(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Irreducible,
    Reducible,
    Undetermined,
}

/// Reachability of the whole grid from an atom of the mark law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomReach {
    pub index: usize,
    pub mark: f64,
    pub reaches_all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalConditions {
    pub tolerance: f64,
    /// `Σ_j w_j D[i][j]` per row.
    pub row_mass: Vec<f64>,
    pub row_positive: Vec<bool>,
    /// Rows with no mass: points with these marks are isolated.
    pub isolated: Vec<usize>,
    pub atom_reach: Vec<AtomReach>,
    /// Every row is monotone in the mark order, all in the same direction.
    pub rows_monotone: bool,
    /// Monotone rows over real marks: row positivity alone decides.
    pub monotone_shortcut: bool,
}

impl MinimalConditions {
    pub fn all_rows_positive(&self) -> bool {
        self.isolated.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    pub verdict: Verdict,
    /// Connected components of the support graph, each sorted, ordered by first index.
    pub blocks: Vec<Vec<usize>>,
    pub tolerance: f64,
    /// Entries within a factor of ten above the tolerance.
    pub straddling_entries: usize,
    pub conditions: MinimalConditions,
    /// First `n` at which `Σ_{m ≤ n} D⁽ᵐ⁾` is entrywise positive, if within the horizon.
    pub power_positive_at: Option<usize>,
    pub power_horizon: usize,
}

impl IrreducibilityReport {
    /// Largest `D[i][j]` with `i`, `j` in different blocks.
    pub fn cross_block_mass(&self, kernel: &KernelMatrix) -> f64 {
        let mut block_of = vec![0; kernel.size()];
        for (b, members) in self.blocks.iter().enumerate() {
            for &i in members {
                block_of[i] = b;
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..kernel.size() {
            for j in 0..kernel.size() {
                if block_of[i] != block_of[j] {
                    worst = worst.max(kernel.get(i, j));
                }
            }
        }
        worst
    }
}

fn default_tolerance(kernel: &KernelMatrix) -> f64 {
    DEFAULT_RELATIVE_TOL * kernel.max_entry()
}

fn check_sizes(kernel: &KernelMatrix, grid: &MarkGrid) {
    assert_eq!(kernel.size(), grid.len(), "kernel and grid sizes differ");
}

fn support_components(kernel: &KernelMatrix, tol: f64) -> DisjointSets {
    let k = kernel.size();
    let mut sets = DisjointSets::new(k);
    for i in 0..k {
        for j in i + 1..k {
            if kernel.get(i, j) > tol {
                sets.union(i, j);
            }
        }
    }
    sets
}

/// Whether every row is nondecreasing, or every row nonincreasing, in mark order.
///
/// Mixed directions do not suffice: a two-block kernel has monotone rows of
/// both kinds and is reducible although every row is positive.
fn rows_share_monotone_direction(kernel: &KernelMatrix) -> bool {
    let rows: Vec<&[f64]> = (0..kernel.size()).map(|i| kernel.row(i)).collect();
    let slack = |row: &[f64]| MONOTONE_SLACK * row.iter().copied().fold(0.0, f64::max);
    let up = rows.iter().all(|r| r.windows(2).all(|w| w[1] >= w[0] - slack(r)));
    let down = rows.iter().all(|r| r.windows(2).all(|w| w[1] <= w[0] + slack(r)));
    up || down
}

fn minimal_conditions(kernel: &KernelMatrix, grid: &MarkGrid, tol: f64) -> MinimalConditions {
    check_sizes(kernel, grid);
    let k = kernel.size();
    let w = grid.weights();
    let row_positive: Vec<bool> = (0..k).map(|i| (0..k).any(|j| kernel.get(i, j) > tol)).collect();
    let row_mass = (0..k).map(|i| kernel.row(i).iter().zip(w).map(|(d, w)| d * w).sum()).collect();
    let isolated = (0..k).filter(|&i| !row_positive[i]).collect();
    let mut sets = support_components(kernel, tol);
    let atom_reach = (0..k)
        .filter(|&i| grid.atoms()[i])
        .map(|i| AtomReach {
            index: i,
            mark: grid.marks()[i],
            // a lone atom reaches itself only through a positive diagonal
            reaches_all: row_positive[i] && sets.set_size(i) == k,
        })
        .collect();
    let rows_monotone = rows_share_monotone_direction(kernel);
    MinimalConditions {
        tolerance: tol,
        row_mass,
        row_positive,
        isolated,
        atom_reach,
        rows_monotone,
        monotone_shortcut: rows_monotone,
    }
}

/// Row masses, atom reachability and the monotone-row scan at the default tolerance.
pub fn check_minimal_conditions(kernel: &KernelMatrix, grid: &MarkGrid) -> MinimalConditions {
    minimal_conditions(kernel, grid, default_tolerance(kernel))
}

/// First `n ≤ horizon` at which the partial sum of weighted powers of the
/// thresholded kernel has no zero entry.
fn first_positive_power(kernel: &KernelMatrix, weights: &[f64], tol: f64, horizon: usize) -> Option<usize> {
    let k = kernel.size();
    let thresholded = KernelMatrix {
        size: k,
        entries: kernel.entries.iter().map(|&v| if v > tol { v } else { 0.0 }).collect(),
    };
    let mut power = thresholded.clone();
    let mut reached = vec![false; k * k];
    for n in 1..=horizon {
        for (r, v) in reached.iter_mut().zip(&power.entries) {
            *r |= *v > 0.0;
        }
        if reached.iter().all(|&r| r) {
            return Some(n);
        }
        power = power.compose(weights, &thresholded).ok()?;
        // positivity is scale-free; rescale to avoid under- and overflow
        let top = power.max_entry();
        if top == 0.0 {
            return None;
        }
        power.entries.iter_mut().for_each(|v| *v /= top);
    }
    None
}

/// Verdict from the support graph `i ~ j ⇔ D[i][j] > tol`.
///
/// `positivity_tol` defaults to `1e-12` times the largest entry.
pub fn check_irreducible(kernel: &KernelMatrix, grid: &MarkGrid, positivity_tol: Option<f64>) -> IrreducibilityReport {
    check_sizes(kernel, grid);
    let k = kernel.size();
    let tol = positivity_tol.unwrap_or_else(|| default_tolerance(kernel)).max(0.0);
    let conditions = minimal_conditions(kernel, grid, tol);
    let straddling_entries = kernel.entries.iter().filter(|&&v| v > tol && v <= STRADDLE_FACTOR * tol).count();

    let mut sets = support_components(kernel, tol);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of_root = std::collections::HashMap::new();
    for i in 0..k {
        let root = sets.find(i);
        let b = *block_of_root.entry(root).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(i);
    }
    let connected = blocks.len() == 1;
    let verdict = if straddling_entries > 0 {
        Verdict::Undetermined
    } else if connected && conditions.all_rows_positive() {
        Verdict::Irreducible
    } else {
        Verdict::Reducible
    };
    let horizon = 2 * k;
    IrreducibilityReport {
        verdict,
        blocks,
        tolerance: tol,
        straddling_entries,
        power_positive_at: first_positive_power(kernel, grid.weights(), tol, horizon),
        power_horizon: horizon,
        conditions,
    }
}
