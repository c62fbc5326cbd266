//! Tensor midpoint quadrature with geometric grading at singular points.
//!
//! Nodes are cell midpoints of a uniform lattice anchored at the cube corner,
//! so they never touch cube faces or lattice-aligned singularities. Cells
//! whose closure contains a declared singular point are refined dyadically
//! towards it. The contributions of the successive refinement shells decay
//! geometrically for power-type singularities; the innermost cell is replaced
//! by the geometric tail of that sequence, and a non-decaying sequence is
//! reported as a non-integrable singularity.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Cube;
use crate::scalar::{to_f64_vec, Real};

/// Shell ratios at or above this value are treated as non-integrable.
const DIVERGENT_RATIO: f64 = 1.0 - 1e-9;
/// Midpoint nodes per axis inside each graded shell cell, by dimension.
fn shell_nodes(dim: usize) -> usize {
    match dim {
        1 => 16,
        2 => 8,
        _ => 4,
    }
}
/// Lattice cells (Chebyshev radius) around a graded cell that are also
/// subdivided into `shell_nodes` nodes per axis.
const NEAR_CELLS: usize = 2;

/// Quadrature resolution: nodes per unit length along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<T> {
    points_per_unit: T,
    singular_depth: u32,
    max_nodes: usize,
}

impl<T: Real> QuadratureGrid<T> {
    /// Node spacing `2^-refinement`.
    pub fn from_refinement(refinement: i32) -> Self {
        Self::with_points_per_unit(T::lit(2.0).powi(refinement))
    }

    pub fn with_points_per_unit(points_per_unit: T) -> Self {
        Self {
            points_per_unit,
            singular_depth: 20,
            max_nodes: 1 << 26,
        }
    }

    pub fn singular_depth(mut self, depth: u32) -> Self {
        self.singular_depth = depth;
        self
    }

    pub fn max_nodes(mut self, limit: usize) -> Self {
        self.max_nodes = limit;
        self
    }

    pub fn points_per_unit(&self) -> T {
        self.points_per_unit
    }

    pub fn depth(&self) -> u32 {
        self.singular_depth
    }

    /// `ceil(points_per_unit · side)`, at least one.
    pub fn nodes_per_axis(&self, side: T) -> usize {
        let raw = self.points_per_unit * side;
        let slack = T::one() - T::epsilon() * T::lit(16.0);
        (raw * slack).ceil().to_usize().unwrap_or(usize::MAX).max(1)
    }

    /// Builds the node set for `cube`, grading towards the given points.
    pub fn rule(&self, cube: &Cube<T>, singular: &[Vec<T>]) -> Result<QuadratureRule<T>> {
        let d = cube.dim();
        let n = self.nodes_per_axis(cube.side());
        let total = n
            .checked_pow(d as u32)
            .filter(|&t| t <= self.max_nodes)
            .ok_or(Error::TooManyNodes {
                nodes: n.saturating_pow(d as u32),
                limit: self.max_nodes,
            })?;
        let h = cube.side() / T::from_count(n);
        let corner = cube.corner();

        let mut graded: BTreeMap<usize, usize> = BTreeMap::new();
        for (zi, z) in singular.iter().enumerate() {
            if z.len() != d || !cube.contains_point(z) {
                continue;
            }
            let ranges: Vec<Vec<usize>> = (0..d)
                .map(|i| {
                    let t = ((z[i] - corner[i]) / h).floor().to_i64().unwrap_or(0);
                    (t - 1..=t + 1)
                        .filter(|&k| k >= 0 && (k as usize) < n)
                        .map(|k| k as usize)
                        .filter(|&k| {
                            let lo = corner[i] + h * T::from_count(k);
                            let hi = corner[i] + h * T::from_count(k + 1);
                            lo <= z[i] && z[i] <= hi
                        })
                        .collect()
                })
                .collect();
            for_each_product(&ranges, |idx| {
                let flat = idx.iter().fold(0, |acc, &k| acc * n + k);
                graded.entry(flat).or_insert(zi);
            });
        }

        let mut near: BTreeSet<usize> = BTreeSet::new();
        for &flat in graded.keys() {
            let mut centre = vec![0usize; d];
            let mut rem = flat;
            for axis in (0..d).rev() {
                centre[axis] = rem % n;
                rem /= n;
            }
            let ranges: Vec<Vec<usize>> = centre
                .iter()
                .map(|&c| (c.saturating_sub(NEAR_CELLS)..=(c + NEAR_CELLS).min(n - 1)).collect())
                .collect();
            for_each_product(&ranges, |idx| {
                let k = idx.iter().fold(0, |acc, &k| acc * n + k);
                if !graded.contains_key(&k) {
                    near.insert(k);
                }
            });
        }

        let cell_weight = h.powi(d as i32);
        let half = h / T::lit(2.0);
        let mut rule = QuadratureRule {
            dim: d,
            points: Vec::with_capacity(total * d),
            weights: Vec::with_capacity(total),
            pieces: Vec::new(),
            singular: singular.iter().map(|z| to_f64_vec(z)).collect(),
        };
        let mut run_start = 0;
        let mut idx = vec![0usize; d];
        for flat in 0..total {
            let mut rem = flat;
            for axis in (0..d).rev() {
                idx[axis] = rem % n;
                rem /= n;
            }
            if let Some(&zi) = graded.get(&flat) {
                let len = rule.weights.len();
                if len > run_start {
                    rule.pieces.push(Piece::Run(run_start, len));
                }
                let cell_corner: Vec<T> = (0..d)
                    .map(|i| corner[i] + h * T::from_count(idx[i]))
                    .collect();
                rule.push_graded(&cell_corner, h, &singular[zi], zi, self.singular_depth);
                run_start = rule.weights.len();
            } else if near.contains(&flat) {
                let cell_corner: Vec<T> = (0..d)
                    .map(|i| corner[i] + h * T::from_count(idx[i]))
                    .collect();
                rule.push_tensor(&cell_corner, &vec![h; d], shell_nodes(d));
            } else {
                for i in 0..d {
                    rule.points.push(corner[i] + h * T::from_count(idx[i]) + half);
                }
                rule.weights.push(cell_weight);
            }
        }
        if rule.weights.len() > run_start {
            rule.pieces.push(Piece::Run(run_start, rule.weights.len()));
        }
        Ok(rule)
    }
}

fn for_each_product(ranges: &[Vec<usize>], mut f: impl FnMut(&[usize])) {
    fn rec(ranges: &[Vec<usize>], cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == ranges.len() {
            f(cur);
            return;
        }
        for &k in &ranges[cur.len()] {
            cur.push(k);
            rec(ranges, cur, f);
            cur.pop();
        }
    }
    rec(ranges, &mut Vec::with_capacity(ranges.len()), &mut f);
}

#[derive(Debug, Clone)]
enum Piece {
    /// Consecutive regular nodes.
    Run(usize, usize),
    /// A cell graded towards singular point `point`: node ranges of the
    /// refinement shells, and of the innermost cells.
    Graded {
        shells: Vec<(usize, usize)>,
        core: (usize, usize),
        point: usize,
    },
}

/// Ordered node set of one cube; reusable across integrands.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
    pieces: Vec<Piece>,
    singular: Vec<Vec<f64>>,
}

impl<T: Real> QuadratureRule<T> {
    /// Splits the cell at `z` into boxes having `z` as a vertex and grades
    /// each box towards it; every box becomes one graded piece.
    fn push_graded(&mut self, corner: &[T], side: T, z: &[T], zi: usize, depth: u32) {
        let d = self.dim;
        // per axis: the (orientation, extent) of the parts on either side of z
        let parts: Vec<Vec<(bool, T)>> = (0..d)
            .map(|i| {
                let below = z[i] - corner[i];
                let above = corner[i] + side - z[i];
                [(false, below), (true, above)]
                    .into_iter()
                    .filter(|&(_, e)| e > T::zero())
                    .collect()
            })
            .collect();
        let scale = z.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let floor = T::epsilon() * T::lit(64.0) * scale;
        let ranges: Vec<Vec<usize>> = parts.iter().map(|p| (0..p.len()).collect()).collect();
        let mut boxes = Vec::new();
        for_each_product(&ranges, |idx| {
            boxes.push(idx.iter().enumerate().map(|(i, &k)| parts[i][k]).collect::<Vec<_>>());
        });
        for b in boxes {
            self.push_graded_box(z, &b, zi, depth, floor);
        }
    }

    /// `axes[i] = (up, extent)`: the box spans `[z_i, z_i + extent]` when
    /// `up`, else `[z_i - extent, z_i]`.
    fn push_graded_box(&mut self, z: &[T], axes: &[(bool, T)], zi: usize, depth: u32, floor: T) {
        let d = self.dim;
        let two = T::lit(2.0);
        let mut ext: Vec<T> = axes.iter().map(|a| a.1).collect();
        let mut shells = Vec::new();
        for _ in 0..depth {
            let half: Vec<T> = ext.iter().map(|&e| e / two).collect();
            if half.iter().any(|&e| e < floor) {
                break;
            }
            let start = self.weights.len();
            // children other than the one at z: bit 1 on an axis = far half
            for mask in 1..(1usize << d) {
                let mut lo = Vec::with_capacity(d);
                for i in 0..d {
                    let far = mask >> (d - 1 - i) & 1 == 1;
                    let (a, b) = if far { (half[i], ext[i]) } else { (T::zero(), half[i]) };
                    lo.push(if axes[i].0 { z[i] + a } else { z[i] - b });
                }
                let sides: Vec<T> = (0..d)
                    .map(|i| {
                        let far = mask >> (d - 1 - i) & 1 == 1;
                        if far {
                            ext[i] - half[i]
                        } else {
                            half[i]
                        }
                    })
                    .collect();
                self.push_tensor(&lo, &sides, shell_nodes(d));
            }
            shells.push((start, self.weights.len()));
            ext = half;
        }
        let start = self.weights.len();
        let lo: Vec<T> = (0..d)
            .map(|i| if axes[i].0 { z[i] } else { z[i] - ext[i] })
            .collect();
        self.push_tensor(&lo, &ext, 1);
        self.pieces.push(Piece::Graded {
            shells,
            core: (start, self.weights.len()),
            point: zi,
        });
    }

    /// `n^d` midpoint nodes on the box `corner + [0, sides]`.
    fn push_tensor(&mut self, corner: &[T], sides: &[T], n: usize) {
        let h: Vec<T> = sides.iter().map(|&s| s / T::from_count(n)).collect();
        let weight = h.iter().fold(T::one(), |a, &b| a * b);
        let half = T::lit(0.5);
        let total = n.pow(self.dim as u32);
        for k in 0..total {
            let mut rest = k;
            let start = self.points.len();
            self.points.extend(std::iter::repeat_n(T::zero(), self.dim));
            for axis in (0..self.dim).rev() {
                self.points[start + axis] =
                    corner[axis] + h[axis] * (T::from_count(rest % n) + half);
                rest /= n;
            }
            self.weights.push(weight);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    /// Number of graded cells.
    pub fn graded_cells(&self) -> usize {
        self.pieces
            .iter()
            .filter(|p| matches!(p, Piece::Graded { .. }))
            .count()
    }

    /// Sum of all node weights (the measure the rule integrates constants to).
    pub fn total_weight(&self) -> T {
        pairwise_sum(self.len(), |i| self.weights[i])
    }

    /// Integrates the node values `values[i]`.
    pub fn apply(&self, values: &[T]) -> Result<T> {
        self.apply_fn(|i| values[i])
    }

    /// Integrates the integrand whose value at node `i` is `value(i)`.
    pub fn apply_fn(&self, value: impl Fn(usize) -> T) -> Result<T> {
        let range_sum = |(s, e): (usize, usize)| -> Result<T> {
            let total = pairwise_sum(e - s, |k| self.weights[s + k] * value(s + k));
            if total.is_finite() {
                return Ok(total);
            }
            let bad = (s..e).find(|&i| !value(i).is_finite()).unwrap_or(s);
            Err(Error::NonFiniteNode {
                point: to_f64_vec(self.point(bad)),
            })
        };
        let mut parts = Vec::with_capacity(self.pieces.len());
        for piece in &self.pieces {
            let v = match piece {
                Piece::Run(s, e) => range_sum((*s, *e))?,
                Piece::Graded {
                    shells,
                    core,
                    point,
                } => {
                    let sums = shells
                        .iter()
                        .map(|&r| range_sum(r))
                        .collect::<Result<Vec<T>>>()?;
                    let shell_total = pairwise_sum(sums.len(), |k| sums[k]);
                    let core_sum = range_sum(*core)?;
                    match geometric_tail(&sums) {
                        Tail::Divergent => {
                            return Err(Error::NonIntegrable {
                                point: self.singular[*point].clone(),
                            })
                        }
                        Tail::Estimate(t) => shell_total + t,
                        Tail::Unavailable => shell_total + core_sum,
                    }
                }
            };
            parts.push(v);
        }
        Ok(pairwise_sum(parts.len(), |k| parts[k]))
    }
}

enum Tail<T> {
    Estimate(T),
    Divergent,
    Unavailable,
}

fn geometric_tail<T: Real>(shells: &[T]) -> Tail<T> {
    let k = shells.len();
    if k < 2 {
        return Tail::Unavailable;
    }
    let (a, b) = (shells[k - 2], shells[k - 1]);
    if a == T::zero() || b == T::zero() || (a > T::zero()) != (b > T::zero()) {
        return Tail::Unavailable;
    }
    let rho = b / a;
    if rho >= T::lit(DIVERGENT_RATIO) {
        Tail::Divergent
    } else {
        Tail::Estimate(b * rho / (T::one() - rho))
    }
}

/// Deterministic pairwise (tree) reduction of `term(0..n)`.
pub fn pairwise_sum<T: Real>(n: usize, term: impl Fn(usize) -> T) -> T {
    fn rec<T: Real>(lo: usize, hi: usize, term: &dyn Fn(usize) -> T) -> T {
        if hi - lo <= 16 {
            let mut s = T::zero();
            for i in lo..hi {
                s = s + term(i);
            }
            s
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    rec(0, n, &term)
}

/// Midpoint approximation of `∫_Q f`; singular points of `f` get graded cells.
pub fn integrate<T: Real>(f: &ScalarField<T>, cube: &Cube<T>, grid: &QuadratureGrid<T>) -> Result<T> {
    let rule = grid.rule(cube, f.singular_points())?;
    rule.apply_fn(|i| f.eval(rule.point(i)))
}
