//! Boxes, axis-parallel cubes, dyadic cube families and midpoint quadrature.

mod quadrature;

pub use quadrature::{integrate, pairwise_sum, QuadratureGrid, QuadratureRule};

use crate::error::{Error, Result};
use crate::scalar::{to_f64_vec, Real};

/// Axis-parallel box `center ± half_width` truncating `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox<T> {
    center: Vec<T>,
    half_width: T,
}

impl<T: Real> DomainBox<T> {
    pub fn new(center: Vec<T>, half_width: T) -> Result<Self> {
        if !(1..=3).contains(&center.len()) {
            return Err(Error::Dimension(center.len()));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Geometry(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        Ok(Self { center, half_width })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn centered(dim: usize, half_width: T) -> Result<Self> {
        Self::new(vec![T::zero(); dim], half_width)
    }

    /// `[lo, hi]^dim`.
    pub fn interval(dim: usize, lo: T, hi: T) -> Result<Self> {
        let two = T::lit(2.0);
        Self::new(vec![(lo + hi) / two; dim], (hi - lo) / two)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn lo(&self, axis: usize) -> T {
        self.center[axis] - self.half_width
    }

    pub fn hi(&self, axis: usize) -> T {
        self.center[axis] + self.half_width
    }

    pub fn as_cube(&self) -> Cube<T> {
        Cube {
            corner: (0..self.dim()).map(|i| self.lo(i)).collect(),
            side: self.half_width + self.half_width,
        }
    }

    pub fn contains_point(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lo(i) && v <= self.hi(i))
    }

    /// Containment with a relative slack of `1e-12 · half_width`.
    pub fn contains_cube(&self, q: &Cube<T>) -> bool {
        let slack = self.half_width * T::lit(1e-12);
        q.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                q.corner[i] >= self.lo(i) - slack && q.corner[i] + q.side <= self.hi(i) + slack
            })
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DomainMismatch(format!(
                "{:?}±{} vs {:?}±{}",
                to_f64_vec(&self.center),
                self.half_width,
                to_f64_vec(&other.center),
                other.half_width
            )))
        }
    }
}

/// Closed axis-parallel cube `corner + [0, side]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube<T> {
    corner: Vec<T>,
    side: T,
}

impl<T: Real> Cube<T> {
    pub fn new(corner: Vec<T>, side: T) -> Result<Self> {
        if !(1..=3).contains(&corner.len()) {
            return Err(Error::Dimension(corner.len()));
        }
        if !(side > T::zero()) || !side.is_finite() {
            return Err(Error::Geometry(format!("cube side must be positive, got {side}")));
        }
        Ok(Self { corner, side })
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn corner(&self) -> &[T] {
        &self.corner
    }

    pub fn side(&self) -> T {
        self.side
    }

    /// Lebesgue measure `side^d`.
    pub fn measure(&self) -> T {
        self.side.powi(self.dim() as i32)
    }

    pub fn center(&self) -> Vec<T> {
        let half = self.side / T::lit(2.0);
        self.corner.iter().map(|&c| c + half).collect()
    }

    pub fn contains_point(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.corner)
                .all(|(&v, &c)| v >= c && v <= c + self.side)
    }

    /// The `2^d` dyadic children in lexicographic corner order.
    pub fn children(&self) -> Vec<Cube<T>> {
        let d = self.dim();
        let half = self.side / T::lit(2.0);
        (0..1usize << d)
            .map(|mask| Cube {
                corner: (0..d)
                    .map(|i| {
                        // first axis is the most significant bit
                        let bit = (mask >> (d - 1 - i)) & 1;
                        if bit == 1 {
                            self.corner[i] + half
                        } else {
                            self.corner[i]
                        }
                    })
                    .collect(),
                side: half,
            })
            .collect()
    }
}

/// A cube of an enumerated dyadic family, tagged with its lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCube<T> {
    pub level: u32,
    /// 0 for the standard lattice, `k ≥ 1` for the k-th shifted copy.
    pub shift: u32,
    pub cube: Cube<T>,
}

/// Finite surrogate for the supremum over all cubes: every dyadic cube of
/// levels `0..=depth` inside a box, plus `shifts` translated lattices per
/// level, in level-major, shift-minor, lexicographic-corner order.
#[derive(Debug, Clone)]
pub struct CubeFamily<T> {
    domain: DomainBox<T>,
    depth: u32,
    shifts: u32,
    cubes: Vec<FamilyCube<T>>,
}

/// Depth limit: the finest side must stay above `2^-20 · half_width`.
pub const MAX_DYADIC_DEPTH: u32 = 21;

impl<T: Real> CubeFamily<T> {
    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn shifts(&self) -> u32 {
        self.shifts
    }

    pub fn cubes(&self) -> &[FamilyCube<T>] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FamilyCube<T>> {
        self.cubes.iter()
    }

    /// Subfamily restricted to levels `0..=depth`.
    pub fn truncated(&self, depth: u32) -> Self {
        Self {
            domain: self.domain.clone(),
            depth: depth.min(self.depth),
            shifts: self.shifts,
            cubes: self
                .cubes
                .iter()
                .filter(|c| c.level <= depth)
                .cloned()
                .collect(),
        }
    }
}

/// Enumerates the dyadic family of `domain` down to level `depth`.
///
/// The k-th shifted lattice at level `l` is offset by `k·side/(shifts+1)` in
/// every coordinate (a half-cell shift when `shifts = 1`); only shifted cubes
/// lying inside the box are kept, which gives `(2^l - 1)^d` of them.
pub fn enumerate_dyadic<T: Real>(
    domain: &DomainBox<T>,
    depth: u32,
    shifts: u32,
) -> Result<CubeFamily<T>> {
    if depth > MAX_DYADIC_DEPTH {
        return Err(Error::Geometry(format!(
            "depth {depth} underflows the minimum side 2^-20·half_width"
        )));
    }
    let d = domain.dim();
    let root = domain.as_cube();
    let mut cubes = Vec::new();
    for level in 0..=depth {
        let per_axis = 1usize << level;
        let side = root.side / T::from_count(per_axis);
        for shift in 0..=shifts {
            let (count, offset) = if shift == 0 {
                (per_axis, T::zero())
            } else {
                if per_axis < 2 {
                    continue;
                }
                (
                    per_axis - 1,
                    side * T::from_count(shift as usize) / T::from_count(shifts as usize + 1),
                )
            };
            let total = count.pow(d as u32);
            for flat in 0..total {
                let mut rem = flat;
                let mut idx = vec![0usize; d];
                for axis in (0..d).rev() {
                    idx[axis] = rem % count;
                    rem /= count;
                }
                let corner = (0..d)
                    .map(|i| root.corner[i] + offset + side * T::from_count(idx[i]))
                    .collect();
                cubes.push(FamilyCube {
                    level,
                    shift,
                    cube: Cube { corner, side },
                });
            }
        }
    }
    Ok(CubeFamily {
        domain: domain.clone(),
        depth,
        shifts,
        cubes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: f64, hi: f64) -> DomainBox<f64> {
        DomainBox::interval(1, lo, hi).unwrap()
    }

    #[test]
    fn one_level_in_one_dimension() {
        let fam = enumerate_dyadic(&interval(-1.0, 1.0), 1, 0).unwrap();
        let got: Vec<(f64, f64)> = fam.iter().map(|c| (c.cube.corner()[0], c.cube.side())).collect();
        assert_eq!(got, vec![(-1.0, 2.0), (-1.0, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn two_dimensional_count() {
        let dom = DomainBox::centered(2, 1.0).unwrap();
        assert_eq!(enumerate_dyadic(&dom, 1, 0).unwrap().len(), 5);
    }

    /// Independent brute-force count: test every lattice position of every
    /// level and keep the ones inside the box.
    fn brute_count(dim: usize, depth: u32, shifts: u32) -> usize {
        let mut n = 0;
        for level in 0..=depth {
            let m = 1i64 << level;
            for shift in 0..=shifts {
                let off = shift as f64 / (shifts as f64 + 1.0);
                let mut per_axis = 0;
                for k in -m..2 * m {
                    let lo = k as f64 + off;
                    if lo >= 0.0 && lo + 1.0 <= m as f64 {
                        per_axis += 1;
                    }
                }
                n += (per_axis as usize).pow(dim as u32);
            }
        }
        n
    }

    #[test]
    fn shifted_counts_match_brute_force() {
        for dim in 1..=2 {
            for depth in 0..=4 {
                for shifts in 0..=2 {
                    let dom = DomainBox::centered(dim, 1.0).unwrap();
                    let fam = enumerate_dyadic(&dom, depth, shifts).unwrap();
                    assert_eq!(fam.len(), brute_count(dim, depth, shifts), "{dim} {depth} {shifts}");
                }
            }
        }
        // d=1, D=2, shifts=1: (1+0) + (2+1) + (4+3)
        assert_eq!(enumerate_dyadic(&interval(-1.0, 1.0), 2, 1).unwrap().len(), 11);
    }

    #[test]
    fn cubes_lie_inside_and_are_unique() {
        let dom = DomainBox::centered(2, 8.0).unwrap();
        let fam = enumerate_dyadic(&dom, 3, 1).unwrap();
        for (i, a) in fam.iter().enumerate() {
            assert!(dom.contains_cube(&a.cube));
            for b in &fam.cubes()[i + 1..] {
                assert_ne!(a.cube, b.cube);
            }
        }
    }

    #[test]
    fn order_is_level_major() {
        let fam = enumerate_dyadic(&interval(0.0, 4.0), 3, 1).unwrap();
        let levels: Vec<u32> = fam.iter().map(|c| c.level).collect();
        assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn depth_underflow_rejected() {
        assert!(enumerate_dyadic(&interval(0.0, 1.0), 22, 0).is_err());
    }

    #[test]
    fn children_tile_parent() {
        let q = Cube::new(vec![0.0, 1.0], 2.0).unwrap();
        let kids = q.children();
        assert_eq!(kids.len(), 4);
        assert_eq!(kids[1].corner(), &[0.0, 2.0]);
        let total: f64 = kids.iter().map(Cube::measure).sum();
        assert_eq!(total, q.measure());
    }
}
