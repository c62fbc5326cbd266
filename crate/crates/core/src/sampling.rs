//! Deterministic point sets used for sampled bounds and identity checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::DomainBox;
use crate::scalar::Real;

/// How to sample a box.
///
/// Lattice plans are nested: level `k+1` contains every point of level `k`,
/// which makes sampled suprema monotone under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingPlan {
    /// `2^level + 1` equispaced points per axis, boundary included.
    Lattice { level: u32 },
    /// `count` uniform points from a ChaCha8 stream seeded with `seed`.
    Random { count: usize, seed: u64 },
}

impl SamplingPlan {
    /// About a thousand lattice points in any dimension.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => SamplingPlan::Lattice { level: 10 },
            2 => SamplingPlan::Lattice { level: 5 },
            _ => SamplingPlan::Lattice { level: 3 },
        }
    }

    pub fn refined(self) -> Self {
        match self {
            SamplingPlan::Lattice { level } => SamplingPlan::Lattice { level: level + 1 },
            SamplingPlan::Random { count, seed } => SamplingPlan::Random {
                count: count * 2,
                seed,
            },
        }
    }

    pub fn points<T: Real>(&self, domain: &DomainBox<T>) -> Vec<Vec<T>> {
        let d = domain.dim();
        match *self {
            SamplingPlan::Lattice { level } => lattice(domain, level),
            SamplingPlan::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let two = T::lit(2.0);
                (0..count)
                    .map(|_| {
                        (0..d)
                            .map(|i| {
                                let u: f64 = rng.gen();
                                domain.lo(i) + two * domain.half_width() * T::lit(u)
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

pub(crate) fn lattice<T: Real>(domain: &DomainBox<T>, level: u32) -> Vec<Vec<T>> {
    let d = domain.dim();
    let m = (1usize << level) + 1;
    let step = T::lit(2.0) * domain.half_width() / T::from_count(m - 1);
    let total = m.pow(d as u32);
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![T::zero(); d];
            for axis in (0..d).rev() {
                let k = rem % m;
                rem /= m;
                x[axis] = if k == m - 1 {
                    domain.hi(axis)
                } else {
                    domain.lo(axis) + step * T::from_count(k)
                };
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_is_nested() {
        let dom = DomainBox::<f64>::centered(2, 8.0).unwrap();
        let coarse = SamplingPlan::Lattice { level: 2 }.points(&dom);
        let fine = SamplingPlan::Lattice { level: 3 }.points(&dom);
        assert_eq!(coarse.len(), 25);
        assert_eq!(fine.len(), 81);
        for p in &coarse {
            assert!(fine.contains(p));
        }
    }

    #[test]
    fn random_is_seeded() {
        let dom = DomainBox::<f64>::centered(1, 1.0).unwrap();
        let plan = SamplingPlan::Random { count: 50, seed: 7 };
        let a = plan.points(&dom);
        assert_eq!(a, plan.points(&dom));
        assert!(a.iter().all(|x| dom.contains_point(x)));
    }
}
