//! Cartesian and radial grids.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};

/// Ball-shaped obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Obstacle {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 <= self.radius * self.radius
    }
}

/// Uniform grid on `[-L, L]^d`. With Dirichlet walls the nodes are
/// `-L + (i + 1) h`, `h = 2L / (n + 1)`; periodic grids use `-L + i h`, `h = 2L / n`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub l: f64,
    pub h: f64,
    pub periodic: bool,
    mask: Vec<bool>,
    index: Vec<Option<usize>>,
    nodes: Vec<usize>,
}

impl Grid {
    fn build(d: usize, n: usize, l: f64, periodic: bool) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return invalid(format!("grid dimension must be 1, 2 or 3, got {d}"));
        }
        if n < 2 || !(l > 0.0) {
            return invalid("grid needs n >= 2 and L > 0");
        }
        let h = if periodic { 2.0 * l / n as f64 } else { 2.0 * l / (n + 1) as f64 };
        let total = n.pow(d as u32);
        Ok(Self {
            d,
            n,
            l,
            h,
            periodic,
            mask: vec![false; total],
            index: (0..total).map(Some).collect(),
            nodes: (0..total).collect(),
        })
    }

    pub fn cartesian(d: usize, n: usize, l: f64) -> Result<Self> {
        Self::build(d, n, l, false)
    }

    pub fn periodic(d: usize, n: usize, l: f64) -> Result<Self> {
        Self::build(d, n, l, true)
    }

    /// Masks the nodes inside `obstacle` and checks that the rest is connected.
    pub fn with_obstacle(mut self, obstacle: &Obstacle) -> Result<Self> {
        if obstacle.center.len() != self.d {
            return invalid("obstacle dimension does not match the grid");
        }
        let total = self.mask.len();
        for f in 0..total {
            self.mask[f] = obstacle.contains(&self.coord(f));
        }
        if self.mask.iter().all(|&m| !m) {
            return invalid("obstacle contains no grid node");
        }
        self.reindex();
        if !self.exterior_connected() {
            return Err(Error::Domain("disconnected exterior".into()));
        }
        Ok(self)
    }

    fn reindex(&mut self) {
        self.nodes.clear();
        for (f, slot) in self.index.iter_mut().enumerate() {
            if self.mask[f] {
                *slot = None;
            } else {
                *slot = Some(self.nodes.len());
                self.nodes.push(f);
            }
        }
    }

    pub fn has_obstacle(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    pub fn masked(&self, full: usize) -> bool {
        self.mask[full]
    }

    pub fn total_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    /// Unknown number of a full-grid node, `None` if masked.
    pub fn unknown_of(&self, full: usize) -> Option<usize> {
        self.index[full]
    }

    pub fn full_of(&self, k: usize) -> usize {
        self.nodes[k]
    }

    pub fn multi_index(&self, full: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.d);
        let mut f = full;
        for _ in 0..self.d {
            out.push(f % self.n);
            f /= self.n;
        }
        out
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn axis_coord(&self, i: isize) -> f64 {
        if self.periodic {
            -self.l + i as f64 * self.h
        } else {
            -self.l + (i + 1) as f64 * self.h
        }
    }

    pub fn coord(&self, full: usize) -> Vec<f64> {
        self.multi_index(full).into_iter().map(|i| self.axis_coord(i as isize)).collect()
    }

    pub fn position(&self, k: usize) -> Vec<f64> {
        self.coord(self.nodes[k])
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.unknowns()).map(|k| self.position(k)).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.positions().iter().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
    }

    pub fn cell(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    fn exterior_connected(&self) -> bool {
        let m = self.unknowns();
        if m == 0 {
            return false;
        }
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(k) = queue.pop_front() {
            let idx = self.multi_index(self.nodes[k]);
            for j in 0..self.d {
                for step in [-1isize, 1] {
                    let mut nb = idx.clone();
                    let v = nb[j] as isize + step;
                    if self.periodic {
                        nb[j] = v.rem_euclid(self.n as isize) as usize;
                    } else if v < 0 || v >= self.n as isize {
                        continue;
                    } else {
                        nb[j] = v as usize;
                    }
                    if let Some(q) = self.index[self.flat(&nb)] {
                        if !seen[q] {
                            seen[q] = true;
                            count += 1;
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        count == m
    }
}

/// Radial grid. From the origin: `r_j = (j + 1/2) h`, `j = 0..n`, with outer wall
/// at `R = (n + 1/2) h`. Exterior of a ball: `r_j = r_in + (j + 1) h`, walls at
/// `r_in` and `r_in + (n + 1) h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub h: f64,
    pub r_inner: f64,
    pub from_origin: bool,
}

impl RadialGrid {
    /// Offset grid on `(0, r_max]` whose outer wall sits at `r_max`.
    pub fn origin(n: usize, r_max: f64) -> Result<Self> {
        if n < 2 || !(r_max > 0.0) {
            return invalid("radial grid needs n >= 2 and R > 0");
        }
        Ok(Self { n, h: r_max / (n as f64 + 0.5), r_inner: 0.0, from_origin: true })
    }

    /// Grid on `(r_in, r_out)` with walls at both ends.
    pub fn exterior(n: usize, r_in: f64, r_out: f64) -> Result<Self> {
        if n < 2 || !(r_in > 0.0) || !(r_out > r_in) {
            return invalid("exterior radial grid needs n >= 2 and 0 < r_in < r_out");
        }
        Ok(Self { n, h: (r_out - r_in) / (n + 1) as f64, r_inner: r_in, from_origin: false })
    }

    pub fn r(&self, j: usize) -> f64 {
        if self.from_origin {
            (j as f64 + 0.5) * self.h
        } else {
            self.r_inner + (j + 1) as f64 * self.h
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.r(j)).collect()
    }

    /// Position of the outer wall (ghost node).
    pub fn r_outer(&self) -> f64 {
        if self.from_origin {
            (self.n as f64 + 0.5) * self.h
        } else {
            self.r_inner + (self.n + 1) as f64 * self.h
        }
    }
}
