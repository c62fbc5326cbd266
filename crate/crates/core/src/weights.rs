//! Muckenhoupt-type constants as maxima over dyadic cube families, the
//! duality and scaling transforms, and the reverse-Hölder probe.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponent::{conjugate, reciprocal_average, ExponentPairSpec, VariableExponent};
use crate::field::ScalarField;
use crate::geometry::{enumerate_dyadic, CubeFamily, DomainBox, FamilyCube, QuadratureGrid, QuadratureRule};
use crate::norms::{exponent_values, log_abs_values, ModularKernel, NormOptions};
use crate::scalar::{recip_ext, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum CubeStatus {
    Ok,
    /// The per-cube quantity could not be computed; the cube is excluded.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeRecord<T> {
    pub cube: FamilyCube<T>,
    pub value: Option<T>,
    pub status: CubeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightConstantReport<T> {
    /// Max of the per-cube quantity over the cubes that succeeded.
    pub estimate: T,
    pub witness: Option<FamilyCube<T>>,
    /// `(level, max over levels <= level)`; nondecreasing.
    pub per_level_max: Vec<(u32, T)>,
    /// `(level, max over that level only)`.
    pub level_max: Vec<(u32, T)>,
    pub depth: u32,
    pub shifts: u32,
    pub norm_tolerance: T,
    pub records: Vec<CubeRecord<T>>,
    pub failures: usize,
}

impl<T: Real> WeightConstantReport<T> {
    fn from_records(records: Vec<CubeRecord<T>>, family: &CubeFamily<T>, rtol: T) -> Self {
        let levels = family.depth() as usize + 1;
        let mut level_max = vec![T::neg_infinity(); levels];
        let mut estimate = T::neg_infinity();
        let mut witness = None;
        let mut failures = 0;
        for r in &records {
            match r.value {
                Some(v) => {
                    let l = r.cube.level as usize;
                    level_max[l] = level_max[l].max(v);
                    if v > estimate {
                        estimate = v;
                        witness = Some(r.cube.clone());
                    }
                }
                None => failures += 1,
            }
        }
        let mut running = T::neg_infinity();
        let per_level_max = level_max
            .iter()
            .enumerate()
            .map(|(l, &m)| {
                running = running.max(m);
                (l as u32, running)
            })
            .collect();
        Self {
            estimate: if witness.is_some() { estimate } else { T::nan() },
            witness,
            per_level_max,
            level_max: level_max.into_iter().enumerate().map(|(l, m)| (l as u32, m)).collect(),
            depth: family.depth(),
            shifts: family.shifts(),
            norm_tolerance: rtol,
            records,
            failures,
        }
    }

    /// Running max at `level`.
    pub fn running_max_at(&self, level: u32) -> Option<T> {
        self.per_level_max.iter().find(|(l, _)| *l == level).map(|&(_, v)| v)
    }
}

fn combined_singular<T: Real>(sets: &[&[Vec<T>]]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    for set in sets {
        for z in set.iter() {
            if !out.contains(z) {
                out.push(z.clone());
            }
        }
    }
    out
}

/// Maps every cube of `family` through `quantity` in parallel.
fn scan<T: Real>(
    family: &CubeFamily<T>,
    rtol: T,
    quantity: impl Fn(&FamilyCube<T>) -> Result<T> + Sync,
) -> WeightConstantReport<T> {
    let records = family
        .cubes()
        .par_iter()
        .map(|fc| match quantity(fc) {
            Ok(v) if v.is_finite() => CubeRecord {
                cube: fc.clone(),
                value: Some(v),
                status: CubeStatus::Ok,
            },
            Ok(v) => CubeRecord {
                cube: fc.clone(),
                value: None,
                status: CubeStatus::Failed(format!("non-finite value {v}")),
            },
            Err(e) => CubeRecord {
                cube: fc.clone(),
                value: None,
                status: CubeStatus::Failed(e.to_string()),
            },
        })
        .collect();
    WeightConstantReport::from_records(records, family, rtol)
}

/// `sup_Q |Q|^power ‖wχ_Q‖_{a(·)} ‖w⁻¹χ_Q‖_{b(·)}` over `family`.
fn two_norm_constant<T: Real>(
    w: &ScalarField<T>,
    a: &VariableExponent<T>,
    b: &VariableExponent<T>,
    power: T,
    family: &CubeFamily<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<WeightConstantReport<T>> {
    w.domain().ensure_compatible(a.domain())?;
    w.domain().ensure_compatible(b.domain())?;
    w.domain().ensure_compatible(family.domain())?;
    let singular = combined_singular(&[
        w.singular_points(),
        a.field().singular_points(),
        b.field().singular_points(),
    ]);
    Ok(scan(family, opts.rtol, |fc| {
        let rule = Arc::new(grid.rule(&fc.cube, &singular)?);
        let logs = Arc::new(log_abs_values(w, &rule)?);
        let ka = ModularKernel::from_parts(rule.clone(), logs.clone(), Arc::new(exponent_values(a, &rule)));
        let kb = ModularKernel::from_parts(rule.clone(), logs, Arc::new(exponent_values(b, &rule))).reciprocal();
        let na = ka.norm(opts)?.value;
        let nb = kb.norm(opts)?.value;
        Ok(fc.cube.measure().powf(power) * na * nb)
    }))
}

/// `[w]_{A^γ_{p(·),q(·)}}` estimated on `family`.
pub fn apq_constant<T: Real>(
    w: &ScalarField<T>,
    p: &VariableExponent<T>,
    q: &VariableExponent<T>,
    gamma: T,
    family: &CubeFamily<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<WeightConstantReport<T>> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} not in [0,1)")));
    }
    let pc = conjugate(p)?;
    two_norm_constant(w, q, &pc, gamma - T::one(), family, grid, opts)
}

/// The exponents `1/(1/q - 1/s₂)` and `1/(1/r₁ - 1/p)` of the limited-range
/// quantity.
pub fn limited_inner_exponents<T: Real>(
    p: &VariableExponent<T>,
    q: &VariableExponent<T>,
    spec: &ExponentPairSpec<T>,
) -> Result<(VariableExponent<T>, VariableExponent<T>)> {
    let structural = |what: &str, e: Error| {
        Error::Structural(format!("{what} is not a valid exponent: {e}"))
    };
    let outer_q = VariableExponent::from_reciprocal(q.reciprocal().offset(-recip_ext(spec.s2)))
        .map_err(|e| structural("1/(1/q - 1/s2)", e))?;
    let outer_p = VariableExponent::from_reciprocal(
        p.reciprocal().scale(-T::one()).offset(recip_ext(spec.r1)),
    )
    .map_err(|e| structural("1/(1/r1 - 1/p)", e))?;
    Ok((outer_q, outer_p))
}

/// `[w]_{(p(·),q(·)),(r⃗,s⃗)}` estimated on `family`.
pub fn limited_constant<T: Real>(
    w: &ScalarField<T>,
    p: &VariableExponent<T>,
    q: &VariableExponent<T>,
    spec: &ExponentPairSpec<T>,
    family: &CubeFamily<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<WeightConstantReport<T>> {
    let (a, b) = limited_inner_exponents(p, q, spec)?;
    two_norm_constant(w, &a, &b, -spec.alpha(), family, grid, opts)
}

/// `(w⁻¹, q', p')`.
pub fn duality_swap<T: Real>(
    w: &ScalarField<T>,
    p: &VariableExponent<T>,
    q: &VariableExponent<T>,
) -> Result<(ScalarField<T>, VariableExponent<T>, VariableExponent<T>)> {
    Ok((w.recip(), conjugate(q)?, conjugate(p)?))
}

/// `(w^σ, q(·)/σ)` with `σ = 1/(1-γ)`.
pub fn scaling_transform<T: Real>(
    w: &ScalarField<T>,
    q: &VariableExponent<T>,
    gamma: T,
) -> Result<(ScalarField<T>, VariableExponent<T>)> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} not in [0,1)")));
    }
    let sigma = (T::one() - gamma).recip();
    let scaled = q
        .scaled(T::one() - gamma)
        .map_err(|e| Error::Structural(format!("q/sigma: {e}")))?;
    if scaled.p_minus() <= T::one() {
        return Err(Error::Structural(format!(
            "(q/sigma)_- = {} <= 1",
            scaled.p_minus()
        )));
    }
    Ok((w.pow_const(sigma), scaled))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhiCubeRecord<T> {
    pub s: T,
    pub cube: FamilyCube<T>,
    pub ratio: Option<T>,
    pub status: CubeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhiLevel<T> {
    pub s: T,
    /// Max ratio over cubes that succeeded; `+∞` if any cube was beyond
    /// integrability.
    pub max_ratio: T,
    pub witness: Option<FamilyCube<T>>,
    pub beyond_integrability: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhiReport<T> {
    pub cap: T,
    pub levels: Vec<RhiLevel<T>>,
    /// Largest `s` of the leading run of grid values whose max ratio stays
    /// within the cap.
    pub s_max: Option<T>,
    pub records: Vec<RhiCubeRecord<T>>,
}

/// Reverse-Hölder ratios
/// `(|Q|^{-1/(s r_Q)}‖uχ_Q‖_{s r(·)}) / (|Q|^{-1/r_Q}‖uχ_Q‖_{r(·)})`
/// for each `s` of `s_grid` and each cube.
pub fn rhi_probe<T: Real>(
    u: &ScalarField<T>,
    r: &VariableExponent<T>,
    family: &CubeFamily<T>,
    s_grid: &[T],
    cap: T,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<RhiReport<T>> {
    if let Some(s) = s_grid.iter().find(|&&s| !(s >= T::one()) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("s = {s} must be finite and >= 1")));
    }
    u.domain().ensure_compatible(r.domain())?;
    u.domain().ensure_compatible(family.domain())?;
    let singular = combined_singular(&[u.singular_points(), r.field().singular_points()]);

    let per_cube: Vec<Vec<RhiCubeRecord<T>>> = family
        .cubes()
        .par_iter()
        .map(|fc| {
            let failed = |msg: String| {
                s_grid
                    .iter()
                    .map(|&s| RhiCubeRecord {
                        s,
                        cube: fc.clone(),
                        ratio: None,
                        status: CubeStatus::Failed(msg.clone()),
                    })
                    .collect::<Vec<_>>()
            };
            let base = (|| -> Result<(ModularKernel<T>, T, T)> {
                let rule: Arc<QuadratureRule<T>> = Arc::new(grid.rule(&fc.cube, &singular)?);
                let logs = Arc::new(log_abs_values(u, &rule)?);
                let kernel = ModularKernel::from_parts(rule.clone(), logs, Arc::new(exponent_values(r, &rule)));
                let r_q = match r.as_constant() {
                    Some(c) => c,
                    None => reciprocal_average(r, &rule)?.recip(),
                };
                let n = kernel.norm(opts)?.value;
                Ok((kernel, r_q, n))
            })();
            let (kernel, r_q, n) = match base {
                Ok(v) => v,
                Err(e) => return failed(format!("base norm: {e}")),
            };
            let measure = fc.cube.measure();
            let denom = measure.powf(-r_q.recip()) * n;
            s_grid
                .iter()
                .map(|&s| {
                    let result = if s == T::one() {
                        Ok(T::one())
                    } else {
                        kernel
                            .scaled_exponent(s)
                            .norm(opts)
                            .map(|m| measure.powf(-(s * r_q).recip()) * m.value / denom)
                    };
                    match result {
                        Ok(v) if v.is_finite() => RhiCubeRecord {
                            s,
                            cube: fc.clone(),
                            ratio: Some(v),
                            status: CubeStatus::Ok,
                        },
                        Ok(v) => RhiCubeRecord {
                            s,
                            cube: fc.clone(),
                            ratio: None,
                            status: CubeStatus::Failed(format!("beyond integrability: ratio {v}")),
                        },
                        Err(e) => RhiCubeRecord {
                            s,
                            cube: fc.clone(),
                            ratio: None,
                            status: CubeStatus::Failed(format!("beyond integrability: {e}")),
                        },
                    }
                })
                .collect()
        })
        .collect();

    let mut levels = Vec::with_capacity(s_grid.len());
    for (k, &s) in s_grid.iter().enumerate() {
        let mut max_ratio = T::neg_infinity();
        let mut witness = None;
        let mut beyond = 0;
        for recs in &per_cube {
            let rec = &recs[k];
            match rec.ratio {
                Some(v) if v > max_ratio => {
                    max_ratio = v;
                    witness = Some(rec.cube.clone());
                }
                Some(_) => {}
                None => beyond += 1,
            }
        }
        if beyond > 0 {
            max_ratio = T::infinity();
        }
        levels.push(RhiLevel {
            s,
            max_ratio,
            witness,
            beyond_integrability: beyond,
        });
    }
    let s_max = levels
        .iter()
        .take_while(|l| l.max_ratio <= cap)
        .last()
        .map(|l| l.s);
    let mut records = Vec::with_capacity(s_grid.len() * per_cube.len());
    for k in 0..s_grid.len() {
        for recs in &per_cube {
            records.push(recs[k].clone());
        }
    }
    Ok(RhiReport {
        cap,
        levels,
        s_max,
        records,
    })
}

/// Quadrature resolution tied to the finest cube of a depth-`depth` family:
/// `nodes_per_finest` nodes per axis on the smallest cubes.
pub fn scan_grid<T: Real>(domain: &DomainBox<T>, depth: u32, nodes_per_finest: u32) -> QuadratureGrid<T> {
    let side = domain.half_width() * T::lit(2.0);
    let ppu = T::from_count(nodes_per_finest as usize) * T::lit(2.0).powi(depth as i32) / side;
    QuadratureGrid::with_points_per_unit(ppu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthPoint<T> {
    pub depth: u32,
    pub report: WeightConstantReport<T>,
}

/// Runs `constant` on the dyadic family of each depth, with the resolution
/// of [`scan_grid`].
pub fn depth_scan<T: Real>(
    domain: &DomainBox<T>,
    depths: &[u32],
    shifts: u32,
    nodes_per_finest: u32,
    constant: impl Fn(&CubeFamily<T>, &QuadratureGrid<T>) -> Result<WeightConstantReport<T>> + Sync,
) -> Result<Vec<DepthPoint<T>>> {
    depths
        .iter()
        .map(|&depth| {
            let family = enumerate_dyadic(domain, depth, shifts)?;
            let grid = scan_grid(domain, depth, nodes_per_finest);
            Ok(DepthPoint {
                depth,
                report: constant(&family, &grid)?,
            })
        })
        .collect()
}

/// `|b - a| / |a|`.
pub fn relative_change<T: Real>(a: T, b: T) -> T {
    (b - a).abs() / a.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> DomainBox<f64> {
        DomainBox::centered(1, 8.0).unwrap()
    }

    fn cst(v: f64) -> VariableExponent<f64> {
        VariableExponent::constant(v, &dom()).unwrap()
    }

    fn field(src: &str) -> ScalarField<f64> {
        ScalarField::parse(src, &dom()).unwrap()
    }

    fn opts() -> NormOptions<f64> {
        NormOptions::default()
    }

    #[test]
    fn trivial_weight_is_one() {
        let fam = enumerate_dyadic(&dom(), 5, 1).unwrap();
        let grid = scan_grid(&dom(), 5, 4);
        let rep = apq_constant(&field("1"), &cst(2.0), &cst(2.0), 0.0, &fam, &grid, &opts()).unwrap();
        assert!((rep.estimate - 1.0).abs() < 1e-12);
        assert!(rep.records.iter().all(|r| (r.value.unwrap() - 1.0).abs() < 1e-12));
        assert_eq!(rep.failures, 0);
        assert!(rep.per_level_max.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn limited_trivial_diagonal() {
        let fam = enumerate_dyadic(&dom(), 4, 1).unwrap();
        let grid = scan_grid(&dom(), 4, 4);
        let spec = ExponentPairSpec::diagonal(2.0, 6.0).unwrap();
        let rep = limited_constant(&field("1"), &cst(3.0), &cst(3.0), &spec, &fam, &grid, &opts()).unwrap();
        assert!((rep.estimate - 1.0).abs() < 1e-12, "{}", rep.estimate);
    }

    #[test]
    fn limited_full_range_matches_apq() {
        let fam = enumerate_dyadic(&dom(), 4, 1).unwrap();
        let grid = scan_grid(&dom(), 4, 8);
        let w = field("pow(abs(x1), 0.2)");
        for (g, p, q) in [(0.0, 2.0, 2.0), (0.25, 2.0, 4.0)] {
            let spec = ExponentPairSpec::full_range(g).unwrap();
            let a = apq_constant(&w, &cst(p), &cst(q), g, &fam, &grid, &opts()).unwrap();
            let b = limited_constant(&w, &cst(p), &cst(q), &spec, &fam, &grid, &opts()).unwrap();
            for (x, y) in a.records.iter().zip(&b.records) {
                let (x, y) = (x.value.unwrap(), y.value.unwrap());
                assert!((x - y).abs() <= 1e-12 * x, "{x} {y}");
            }
        }
    }

    #[test]
    fn limited_rejects_out_of_window() {
        let spec = ExponentPairSpec::diagonal(2.0, 6.0).unwrap();
        let fam = enumerate_dyadic(&dom(), 1, 0).unwrap();
        let grid = scan_grid(&dom(), 1, 4);
        let err = limited_constant(&field("1"), &cst(1.5), &cst(1.5), &spec, &fam, &grid, &opts());
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn duality_examples() {
        let (w, qc, pc) = duality_swap(&field("1"), &cst(2.0), &cst(2.0)).unwrap();
        assert_eq!(w.as_constant(), Some(1.0));
        assert_eq!((qc.as_constant(), pc.as_constant()), (Some(2.0), Some(2.0)));
        let (_, qc, pc) = duality_swap(&field("1"), &cst(2.0), &cst(4.0)).unwrap();
        let (a, b) = (qc.as_constant().unwrap(), pc.as_constant().unwrap());
        assert!((a - 4.0 / 3.0).abs() < 1e-15 && b == 2.0);
        assert!((1.0 / a - 1.0 / b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn duality_power_weight() {
        let fam = enumerate_dyadic(&dom(), 5, 1).unwrap();
        let grid = scan_grid(&dom(), 5, 8);
        let w = field("pow(abs(x1), 0.25)");
        let a = apq_constant(&w, &cst(2.0), &cst(2.0), 0.0, &fam, &grid, &opts()).unwrap();
        let (wi, qc, pc) = duality_swap(&w, &cst(2.0), &cst(2.0)).unwrap();
        let b = apq_constant(&wi, &qc, &pc, 0.0, &fam, &grid, &opts()).unwrap();
        assert!(relative_change(a.estimate, b.estimate) < 1e-10);
    }

    #[test]
    fn scaling_examples() {
        let w = field("pow(abs(x1), 0.05)");
        let (ws, qs) = scaling_transform(&w, &cst(4.0), 0.0).unwrap();
        assert_eq!(qs.as_constant(), Some(4.0));
        assert_eq!(ws.eval(&[0.3]), w.eval(&[0.3]));
        let (ws, qs) = scaling_transform(&w, &cst(4.0), 0.5).unwrap();
        assert_eq!(qs.as_constant(), Some(2.0));
        assert!((ws.eval(&[0.3]) - 0.3f64.powf(0.1)).abs() < 1e-15);
        assert!(matches!(scaling_transform(&w, &cst(1.5), 0.5), Err(Error::Structural(_))));
    }

    #[test]
    fn depth_scan_dichotomy() {
        let run = |src: &str| {
            let w = field(src);
            depth_scan(&dom(), &[6, 7, 8], 1, 16, |fam, grid| {
                apq_constant(&w, &cst(2.0), &cst(2.0), 0.0, fam, grid, &opts())
            })
            .unwrap()
        };
        let good = run("pow(abs(x1), 0.25)");
        assert!(relative_change(good[0].report.estimate, good[2].report.estimate) < 0.01);
        let bad = run("abs(x1)");
        for pair in bad.windows(2) {
            assert!(pair[1].report.estimate / pair[0].report.estimate > 1.3);
        }
    }

    #[test]
    fn rhi_trivial_and_degenerate() {
        let fam = enumerate_dyadic(&dom(), 3, 1).unwrap();
        let grid = scan_grid(&dom(), 3, 8);
        let rep = rhi_probe(&field("1"), &cst(2.0), &fam, &[1.0, 1.5, 3.0], 4.0, &grid, &opts()).unwrap();
        for l in &rep.levels {
            assert!((l.max_ratio - 1.0).abs() < 1e-12);
        }
        assert_eq!(rep.s_max, Some(3.0));
        let u = field("pow(abs(x1), -0.25)").with_singular_point(vec![0.0]);
        let rep = rhi_probe(&u, &cst(2.0), &fam, &[1.0], 4.0, &grid, &opts()).unwrap();
        assert!(rep.records.iter().all(|r| r.ratio == Some(1.0)));
    }

    #[test]
    fn rhi_beyond_integrability() {
        let fam = enumerate_dyadic(&dom(), 3, 1).unwrap();
        let grid = scan_grid(&dom(), 3, 8);
        let u = field("pow(abs(x1), -0.25)").with_singular_point(vec![0.0]);
        let rep = rhi_probe(&u, &cst(2.0), &fam, &[1.5, 2.5], 4.0, &grid, &opts()).unwrap();
        assert!(rep.levels[0].max_ratio.is_finite());
        assert!(rep.levels[1].beyond_integrability > 0);
        assert_eq!(rep.s_max, Some(1.5));
    }
}
