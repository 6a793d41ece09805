// Uniform cell grid for fixed-radius pair enumeration.
//
// The window is cut into cells of side at least `reach` along every axis, so
// all pairs within `reach` lie in the same or adjacent cells. Points are
// bucketed in CSR layout (cell offsets + sorted point indices). In torus mode
// neighbouring cells wrap around; duplicate neighbours produced by wrapping on
// grids with fewer than three cells per axis are removed.

use crate::geometry::{BoundaryMode, Window};

/// Upper bound on cells per axis (`side / 64` minimum cell side).
pub const MAX_CELLS_PER_AXIS: usize = 64;

#[derive(Debug, Clone)]
pub struct CellGrid {
    dims: Vec<usize>,
    cell_side: Vec<f64>,
    lower: Vec<f64>,
    torus: bool,
    cell_start: Vec<usize>,
    order: Vec<usize>,
}

impl CellGrid {
    /// Bucket `n = coords.len() / d` points of `window`.
    pub fn new(window: &Window, coords: &[f64], reach: f64) -> Self {
        let d = window.dimension();
        let mut dims = Vec::with_capacity(d);
        let mut cell_side = Vec::with_capacity(d);
        for a in 0..d {
            let side = window.side(a);
            let target = reach.max(side / MAX_CELLS_PER_AXIS as f64);
            let k = ((side / target).floor() as usize).clamp(1, MAX_CELLS_PER_AXIS);
            dims.push(k);
            cell_side.push(side / k as f64);
        }
        let n = coords.len() / d;
        let total: usize = dims.iter().product();
        let mut grid = CellGrid {
            dims,
            cell_side,
            lower: window.lower().to_vec(),
            torus: window.mode() == BoundaryMode::Torus,
            cell_start: vec![0; total + 1],
            order: vec![0; n],
        };
        let cells: Vec<usize> = (0..n).map(|i| grid.cell_of(&coords[i * d..(i + 1) * d])).collect();
        for &c in &cells {
            grid.cell_start[c + 1] += 1;
        }
        for c in 0..total {
            grid.cell_start[c + 1] += grid.cell_start[c];
        }
        let mut fill = grid.cell_start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.order[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn cell_coords(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .enumerate()
            .map(|(a, v)| {
                let k = ((v - self.lower[a]) / self.cell_side[a]).floor();
                (k.max(0.0) as usize).min(self.dims[a] - 1)
            })
            .collect()
    }

    fn flat(&self, c: &[usize]) -> usize {
        let mut idx = 0;
        for a in (0..c.len()).rev() {
            idx = idx * self.dims[a] + c[a];
        }
        idx
    }

    pub fn cell_of(&self, x: &[f64]) -> usize {
        let c = self.cell_coords(x);
        self.flat(&c)
    }

    pub fn cell_count(&self) -> usize {
        self.cell_start.len() - 1
    }

    fn members(&self, cell: usize) -> &[usize] {
        &self.order[self.cell_start[cell]..self.cell_start[cell + 1]]
    }

    /// Distinct cells adjacent to (and including) the cell with coordinates `c`.
    fn neighbour_cells(&self, c: &[usize], out: &mut Vec<usize>) {
        out.clear();
        let d = c.len();
        let mut offset = vec![-1i64; d];
        loop {
            let mut ok = true;
            let mut nc = vec![0usize; d];
            for a in 0..d {
                let v = c[a] as i64 + offset[a];
                let k = self.dims[a] as i64;
                if v < 0 || v >= k {
                    if self.torus {
                        nc[a] = v.rem_euclid(k) as usize;
                    } else {
                        ok = false;
                        break;
                    }
                } else {
                    nc[a] = v as usize;
                }
            }
            if ok {
                let f = self.flat(&nc);
                if !out.contains(&f) {
                    out.push(f);
                }
            }
            // odometer increment over {-1, 0, 1}^d
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                offset[a] += 1;
                if offset[a] <= 1 {
                    break;
                }
                offset[a] = -1;
                a += 1;
            }
        }
    }

    /// Call `f(i, j)` once for every unordered pair `i < j` of points in
    /// the same or adjacent cells. The caller applies the distance check.
    pub fn for_each_candidate_pair<F: FnMut(usize, usize)>(&self, d: usize, mut f: F) {
        let total = self.cell_count();
        let mut neigh = Vec::new();
        for cell in 0..total {
            let here = self.members(cell);
            if here.is_empty() {
                continue;
            }
            let mut c = vec![0usize; d];
            let mut rem = cell;
            for a in 0..d {
                c[a] = rem % self.dims[a];
                rem /= self.dims[a];
            }
            self.neighbour_cells(&c, &mut neigh);
            for &other in &neigh {
                if other < cell {
                    continue;
                }
                let there = self.members(other);
                if other == cell {
                    for (k, &i) in here.iter().enumerate() {
                        for &j in &here[k + 1..] {
                            f(i.min(j), i.max(j));
                        }
                    }
                } else {
                    for &i in here {
                        for &j in there {
                            f(i.min(j), i.max(j));
                        }
                    }
                }
            }
        }
    }

    /// Call `f(j)` for each stored point in cells adjacent to location `x`.
    pub fn for_each_near<F: FnMut(usize)>(&self, x: &[f64], mut f: F) {
        let c = self.cell_coords(x);
        let mut neigh = Vec::new();
        self.neighbour_cells(&c, &mut neigh);
        for cell in neigh {
            for &j in self.members(cell) {
                f(j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;
    use std::collections::BTreeSet;

    fn brute(window: &Window, coords: &[f64], d: usize, reach: f64) -> BTreeSet<(usize, usize)> {
        let n = coords.len() / d;
        let mut s = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                if window.distance_sq(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]) <= reach * reach {
                    s.insert((i, j));
                }
            }
        }
        s
    }

    fn via_grid(window: &Window, coords: &[f64], d: usize, reach: f64) -> BTreeSet<(usize, usize)> {
        let g = CellGrid::new(window, coords, reach);
        let mut s = BTreeSet::new();
        g.for_each_candidate_pair(d, |i, j| {
            if window.distance_sq(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]) <= reach * reach {
                assert!(s.insert((i, j)), "pair visited twice");
            }
        });
        s
    }

    #[test]
    fn matches_brute_force_free_and_torus() {
        let mut rng = RngStream::new(21, 0).rng();
        for (d, side, reach) in [(2, 10.0, 1.0), (2, 2.5, 1.0), (1, 7.0, 0.8), (3, 4.0, 1.1), (2, 100.0, 0.5)] {
            for mode in [BoundaryMode::Free, BoundaryMode::Torus] {
                let w = Window::cube(d, side, mode).unwrap();
                let n = 400;
                let coords: Vec<f64> = (0..n * d).map(|_| rng.gen_range(0.0..side)).collect();
                assert_eq!(brute(&w, &coords, d, reach), via_grid(&w, &coords, d, reach), "d={d} side={side} {mode:?}");
            }
        }
    }

    #[test]
    fn near_query_covers_reach() {
        let mut rng = RngStream::new(22, 0).rng();
        let w = Window::cube(2, 10.0, BoundaryMode::Torus).unwrap();
        let coords: Vec<f64> = (0..600).map(|_| rng.gen_range(0.0..10.0)).collect();
        let g = CellGrid::new(&w, &coords, 1.0);
        for _ in 0..50 {
            let x = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
            let mut found = BTreeSet::new();
            g.for_each_near(&x, |j| {
                found.insert(j);
            });
            for j in 0..300 {
                if w.distance_sq(&x, &coords[2 * j..2 * j + 2]) <= 1.0 {
                    assert!(found.contains(&j));
                }
            }
        }
    }
}
