//! Grid A* used as a length reference.
//!
//! Cell centers sit at `(i * cell, j * cell)` over the field. A cell is free
//! when its center is strictly outside every inflated obstacle. Moves are
//! 8-connected; a diagonal move needs both adjacent orthogonal cells free.
//! The reported length includes the straight connections from the start to
//! its cell center and from the end's cell center to the end.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Point2;
use crate::scenario::Scenario;

/// Occupancy grid over a scenario's field.
#[derive(Debug, Clone)]
pub struct Grid {
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `j * nx + i`.
    pub free: Vec<bool>,
}

impl Grid {
    pub fn new(scenario: &Scenario, cell: f64) -> Self {
        let nx = (scenario.bounds.w / cell).floor() as usize + 1;
        let ny = (scenario.bounds.h / cell).floor() as usize + 1;
        let mut free = vec![true; nx * ny];
        for o in scenario.obstacles.iter() {
            // only cells inside the bounding square can be covered
            let reach = o.effective_axes().0;
            let c = o.center();
            let lo_i = ((c.x - reach) / cell).floor().max(0.0) as usize;
            let lo_j = ((c.y - reach) / cell).floor().max(0.0) as usize;
            let hi_i = (((c.x + reach) / cell).ceil().max(0.0) as usize).min(nx - 1);
            let hi_j = (((c.y + reach) / cell).ceil().max(0.0) as usize).min(ny - 1);
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    if free[j * nx + i] && o.signed_margin(Point2::new(i as f64 * cell, j as f64 * cell)) <= 0.0 {
                        free[j * nx + i] = false;
                    }
                }
            }
        }
        Self { cell, nx, ny, free }
    }

    pub fn center(&self, idx: usize) -> Point2 {
        Point2::new((idx % self.nx) as f64 * self.cell, (idx / self.nx) as f64 * self.cell)
    }

    pub fn is_free(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny && self.free[j as usize * self.nx + i as usize]
    }

    /// Free cell nearest to `p` among the cells within two cells of it.
    pub fn snap(&self, p: Point2) -> Option<usize> {
        let (ci, cj) = ((p.x / self.cell).round() as isize, (p.y / self.cell).round() as isize);
        let mut best: Option<(f64, usize)> = None;
        for dj in -2..=2 {
            for di in -2..=2 {
                let (i, j) = (ci + di, cj + dj);
                if !self.is_free(i, j) {
                    continue;
                }
                let idx = j as usize * self.nx + i as usize;
                let d = self.center(idx).distance(p);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, idx));
                }
            }
        }
        best.map(|(_, idx)| idx)
    }

    /// Free neighbors of `idx` with step costs in cells.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (i, j) = ((idx % self.nx) as isize, (idx / self.nx) as isize);
        const STEPS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        STEPS.iter().filter_map(move |&(di, dj)| {
            let (ni, nj) = (i + di, j + dj);
            if !self.is_free(ni, nj) {
                return None;
            }
            if di != 0 && dj != 0 && !(self.is_free(i + di, j) && self.is_free(i, j + dj)) {
                return None;
            }
            let cost = if di != 0 && dj != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            Some((nj as usize * self.nx + ni as usize, cost))
        })
    }
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

/// Shortest grid path length in cell units between two cells.
pub fn grid_distance(grid: &Grid, from: usize, to: usize) -> Option<f64> {
    let coord = |idx: usize| (idx % grid.nx, idx / grid.nx);
    let goal = coord(to);
    let mut g = vec![f64::INFINITY; grid.free.len()];
    let mut closed = vec![false; grid.free.len()];
    let mut open = BinaryHeap::new();
    g[from] = 0.0;
    open.push(Open {
        f: octile(coord(from), goal),
        g: 0.0,
        idx: from,
    });
    while let Some(Open { g: cost, idx, .. }) = open.pop() {
        if idx == to {
            return Some(cost);
        }
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        for (next, step) in grid.neighbors(idx) {
            let cand = cost + step;
            if cand < g[next] {
                g[next] = cand;
                open.push(Open {
                    f: cand + octile(coord(next), goal),
                    g: cand,
                    idx: next,
                });
            }
        }
    }
    None
}

/// Length of the grid route from start to end, or `None` when the grid
/// disconnects them.
pub fn grid_astar_oracle(scenario: &Scenario, cell: f64) -> Option<f64> {
    if !(cell > 0.0) {
        return None;
    }
    let grid = Grid::new(scenario, cell);
    let from = grid.snap(scenario.start)?;
    let to = grid.snap(scenario.end)?;
    let cells = grid_distance(&grid, from, to)?;
    Some(scenario.start.distance(grid.center(from)) + cells * cell + grid.center(to).distance(scenario.end))
}
