//! Modulars and Luxemburg norms on cubes, plus numerical checks of the
//! homogeneity, Hölder and characteristic-function norm estimates.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponent::{harmonic_mean, VariableExponent, EPS_ID};
use crate::field::ScalarField;
use crate::geometry::{Cube, CubeFamily, QuadratureGrid, QuadratureRule};
use crate::sampling::SamplingPlan;
use crate::scalar::{to_f64_vec, Real};

/// Root-finding controls for [`luxemburg_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions<T> {
    /// Stop when `λ_hi - λ_lo <= rtol·λ_lo`.
    pub rtol: T,
    /// Starting point of the bracket search.
    pub initial: T,
    pub max_doublings: u32,
}

impl<T: Real> Default for NormOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            initial: T::one(),
            max_doublings: 200,
        }
    }
}

/// One evaluation of `λ ↦ ρ(f/λ)` during bracketing or bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep<T> {
    pub lambda: T,
    pub modular: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormResult<T> {
    pub value: T,
    /// `ρ(f/λ_hi) <= 1 < ρ(f/λ_lo)`; `(0, 0)` for the zero function.
    pub bracket: (T, T),
    pub iterations: u32,
    pub modular_at_value: T,
    pub trace: Vec<BisectionStep<T>>,
}

impl<T: Real> NormResult<T> {
    fn zero() -> Self {
        Self {
            value: T::zero(),
            bracket: (T::zero(), T::zero()),
            iterations: 0,
            modular_at_value: T::zero(),
            trace: Vec::new(),
        }
    }
}

/// Node values `ln|f|` and `p` on a fixed quadrature rule, so that
/// `ρ(f/λ) = Σ wᵢ exp(pᵢ(ln|fᵢ| - ln λ))` costs one pass per `λ`.
#[derive(Debug, Clone)]
pub struct ModularKernel<T> {
    rule: Arc<QuadratureRule<T>>,
    log_abs: Arc<Vec<T>>,
    sign: T,
    exponents: Arc<Vec<T>>,
    exponent_scale: T,
}

impl<T: Real> ModularKernel<T> {
    pub fn new(
        f: &ScalarField<T>,
        p: &VariableExponent<T>,
        cube: &Cube<T>,
        grid: &QuadratureGrid<T>,
    ) -> Result<Self> {
        f.domain().ensure_compatible(p.domain())?;
        let rule = Arc::new(build_rule(&[f.singular_points(), p.field().singular_points()], cube, grid, p)?);
        let log_abs = log_abs_values(f, &rule)?;
        let exponents = exponent_values(p, &rule);
        Ok(Self {
            rule,
            log_abs: Arc::new(log_abs),
            sign: T::one(),
            exponents: Arc::new(exponents),
            exponent_scale: T::one(),
        })
    }

    pub(crate) fn from_parts(
        rule: Arc<QuadratureRule<T>>,
        log_abs: Arc<Vec<T>>,
        exponents: Arc<Vec<T>>,
    ) -> Self {
        Self {
            rule,
            log_abs,
            sign: T::one(),
            exponents,
            exponent_scale: T::one(),
        }
    }

    /// Same nodes for `1/f`.
    pub fn reciprocal(&self) -> Self {
        Self {
            sign: -self.sign,
            ..self.clone()
        }
    }

    /// Same nodes with exponent `s·p(·)`.
    pub fn scaled_exponent(&self, s: T) -> Self {
        Self {
            exponent_scale: self.exponent_scale * s,
            ..self.clone()
        }
    }

    /// Same nodes and function with another exponent.
    pub fn with_exponent(&self, p: &VariableExponent<T>) -> Self {
        Self {
            exponents: Arc::new(exponent_values(p, &self.rule)),
            exponent_scale: T::one(),
            ..self.clone()
        }
    }

    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.rule
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs.iter().all(|&l| l == T::neg_infinity())
    }

    #[inline]
    fn log_at(&self, i: usize) -> T {
        let l = self.log_abs[i];
        if l == T::neg_infinity() {
            l
        } else {
            self.sign * l
        }
    }

    /// `ρ(f/λ)`; `+∞` when the integrand overflows.
    pub fn modular(&self, lambda: T) -> Result<T> {
        let ln_lambda = lambda.ln();
        let term = |i: usize| {
            let l = self.log_at(i);
            let p = self.exponents[i] * self.exponent_scale;
            if l == T::neg_infinity() || p.is_infinite() {
                T::zero()
            } else {
                (p * (l - ln_lambda)).exp()
            }
        };
        let integral = match self.rule.apply_fn(term) {
            Ok(v) => v,
            Err(Error::NonFiniteNode { .. }) => return Ok(T::infinity()),
            Err(Error::NonIntegrable { point }) => {
                return Err(Error::NotInSpace(format!(
                    "|f|^p is not integrable near {point:?}"
                )))
            }
            Err(e) => return Err(e),
        };
        // essential-sup part over nodes with p = ∞
        let sup = (0..self.rule.len())
            .filter(|&i| self.exponents[i].is_infinite())
            .map(|i| self.log_at(i))
            .fold(T::neg_infinity(), T::max);
        if sup == T::neg_infinity() {
            Ok(integral)
        } else {
            Ok(integral + (sup - ln_lambda).exp())
        }
    }

    /// `inf{λ > 0 : ρ(f/λ) <= 1}`.
    pub fn norm(&self, opts: &NormOptions<T>) -> Result<NormResult<T>> {
        if self.is_zero() {
            return Ok(NormResult::zero());
        }
        let one = T::one();
        let two = T::lit(2.0);
        let mut trace = Vec::new();
        let eval = |lambda: T, trace: &mut Vec<BisectionStep<T>>| -> Result<T> {
            let m = self.modular(lambda)?;
            trace.push(BisectionStep { lambda, modular: m });
            Ok(m)
        };

        let mut lambda = opts.initial;
        let first = eval(lambda, &mut trace)?;
        let (mut lo, mut hi, mut m_lo, mut m_hi);
        let mut steps = 0;
        if first > one {
            let mut seen_finite = first.is_finite();
            let mut prev = (lambda, first);
            loop {
                if steps == opts.max_doublings {
                    return Err(if seen_finite {
                        Error::BracketExhausted(steps)
                    } else {
                        Error::NotInSpace("modular is infinite at every tried scale".into())
                    });
                }
                lambda = lambda * two;
                steps += 1;
                let m = eval(lambda, &mut trace)?;
                seen_finite |= m.is_finite();
                if m <= one {
                    lo = prev.0;
                    m_lo = prev.1;
                    hi = lambda;
                    m_hi = m;
                    break;
                }
                prev = (lambda, m);
            }
        } else {
            let mut prev = (lambda, first);
            loop {
                if steps == opts.max_doublings {
                    return Err(Error::BracketExhausted(steps));
                }
                lambda = lambda / two;
                steps += 1;
                let m = eval(lambda, &mut trace)?;
                if m > one {
                    lo = lambda;
                    m_lo = m;
                    hi = prev.0;
                    m_hi = prev.1;
                    break;
                }
                prev = (lambda, m);
            }
        }

        let mut iterations = 0;
        while hi - lo > opts.rtol * lo && iterations < 400 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            let m = eval(mid, &mut trace)?;
            if m > one {
                lo = mid;
                m_lo = m;
            } else {
                hi = mid;
                m_hi = m;
            }
            iterations += 1;
        }

        // log-log secant inside the bracket; exact when p is constant
        let value = if m_lo.is_finite() && m_hi > T::zero() {
            let (y_lo, y_hi) = (m_lo.ln(), m_hi.ln());
            if y_hi == T::zero() {
                hi
            } else {
                let t = y_lo / (y_lo - y_hi);
                (lo.ln() + t * (hi.ln() - lo.ln())).exp().max(lo).min(hi)
            }
        } else {
            hi
        };
        let modular_at_value = self.modular(value)?;
        Ok(NormResult {
            value,
            bracket: (lo, hi),
            iterations: steps + iterations,
            modular_at_value,
            trace,
        })
    }
}

fn build_rule<T: Real>(
    singular: &[&[Vec<T>]],
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
    p: &VariableExponent<T>,
) -> Result<QuadratureRule<T>> {
    if !p.domain().contains_cube(cube) {
        return Err(Error::CubeOutsideDomain {
            corner: to_f64_vec(cube.corner()),
            side: cube.side().as_f64(),
        });
    }
    let mut points: Vec<Vec<T>> = Vec::new();
    for set in singular {
        for z in set.iter() {
            if !points.contains(z) {
                points.push(z.clone());
            }
        }
    }
    grid.rule(cube, &points)
}

pub(crate) fn log_abs_values<T: Real>(f: &ScalarField<T>, rule: &QuadratureRule<T>) -> Result<Vec<T>> {
    (0..rule.len())
        .map(|i| {
            let v = f.eval(rule.point(i));
            if v.is_finite() {
                Ok(v.abs().ln())
            } else {
                Err(Error::NonFiniteNode {
                    point: to_f64_vec(rule.point(i)),
                })
            }
        })
        .collect()
}

pub(crate) fn exponent_values<T: Real>(p: &VariableExponent<T>, rule: &QuadratureRule<T>) -> Vec<T> {
    match p.as_constant() {
        Some(c) => vec![c; rule.len()],
        None => (0..rule.len()).map(|i| p.eval(rule.point(i))).collect(),
    }
}

/// `∫_Q |f|^{p(x)} dx`.
pub fn modular<T: Real>(
    f: &ScalarField<T>,
    p: &VariableExponent<T>,
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    ModularKernel::new(f, p, cube, grid)?.modular(T::one())
}

/// `‖fχ_Q‖_{p(·)}`.
pub fn luxemburg_norm<T: Real>(
    f: &ScalarField<T>,
    p: &VariableExponent<T>,
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<NormResult<T>> {
    ModularKernel::new(f, p, cube, grid)?.norm(opts)
}

/// `‖fwχ_Q‖_{p(·)}`.
pub fn weighted_norm<T: Real>(
    f: &ScalarField<T>,
    w: &ScalarField<T>,
    p: &VariableExponent<T>,
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<NormResult<T>> {
    luxemburg_norm(&f.mul(w)?, p, cube, grid, opts)
}

/// Relative gap between two sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy<T> {
    pub lhs: T,
    pub rhs: T,
    pub value: T,
    pub tolerance: T,
    pub passed: bool,
}

/// Compares `‖|f|^s‖_{p(·)}` with `‖f‖_{sp(·)}^s`.
pub fn check_homogeneity<T: Real>(
    f: &ScalarField<T>,
    p: &VariableExponent<T>,
    s: T,
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<Discrepancy<T>> {
    if !(s > T::zero()) {
        return Err(Error::InvalidArgument(format!("s = {s} must be positive")));
    }
    let lhs = luxemburg_norm(&f.abs().pow_const(s), p, cube, grid, opts)?.value;
    let rhs = luxemburg_norm(f, &p.scaled(s)?, cube, grid, opts)?.value.powf(s);
    let value = (lhs - rhs).abs() / rhs.max(T::one());
    let tolerance = T::lit(10.0) * opts.rtol;
    Ok(Discrepancy {
        lhs,
        rhs,
        value,
        tolerance,
        passed: value <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport<T> {
    pub product_norm: T,
    pub factor_norms: Vec<T>,
    pub ratio: T,
    /// `5^{m-1}`.
    pub bound: T,
    /// `max |1/p - Σ 1/p_j|` over the validation samples.
    pub exponent_defect: T,
    pub passed: bool,
}

/// `‖Π f_j‖_{p(·)} / Π ‖f_j‖_{p_j(·)}` against `5^{m-1}`.
pub fn check_holder<T: Real>(
    factors: &[(ScalarField<T>, VariableExponent<T>)],
    p: &VariableExponent<T>,
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<HolderReport<T>> {
    let m = factors.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 factors, got {m}")));
    }
    let plan = SamplingPlan::default_for(p.dim());
    let mut exponent_defect = T::zero();
    for x in plan.points(p.domain()) {
        let sum = factors.iter().fold(T::zero(), |s, (_, pj)| s + pj.recip_at(&x));
        exponent_defect = exponent_defect.max((p.recip_at(&x) - sum).abs());
    }
    if exponent_defect > T::lit(EPS_ID) {
        return Err(Error::InvalidExponent(format!(
            "1/p differs from the sum of 1/p_j by {exponent_defect}"
        )));
    }
    let mut product = factors[0].0.clone();
    for (f, _) in &factors[1..] {
        product = product.mul(f)?;
    }
    let product_norm = luxemburg_norm(&product, p, cube, grid, opts)?.value;
    let factor_norms = factors
        .iter()
        .map(|(f, pj)| luxemburg_norm(f, pj, cube, grid, opts).map(|r| r.value))
        .collect::<Result<Vec<T>>>()?;
    let denom = factor_norms.iter().fold(T::one(), |a, &b| a * b);
    let ratio = if product_norm == T::zero() {
        T::zero()
    } else {
        product_norm / denom
    };
    let bound = T::lit(5.0).powi(m as i32 - 1);
    Ok(HolderReport {
        product_norm,
        factor_norms,
        ratio,
        bound,
        exponent_defect,
        passed: ratio <= bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeRatio<T> {
    pub level: u32,
    pub shift: u32,
    pub cube: Cube<T>,
    pub norm: T,
    pub harmonic_mean: T,
    /// `‖χ_Q‖_{p(·)} / |Q|^{1/p_Q}`.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport<T> {
    pub cubes: Vec<CubeRatio<T>>,
    pub min: T,
    pub max: T,
}

/// Characteristic-function norms against `|Q|^{1/p_Q}` over a family.
pub fn char_norm_ratio<T: Real>(
    p: &VariableExponent<T>,
    family: &CubeFamily<T>,
    grid: &QuadratureGrid<T>,
    opts: &NormOptions<T>,
) -> Result<RatioReport<T>> {
    let one = ScalarField::constant(T::one(), p.domain());
    let cubes = family
        .cubes()
        .par_iter()
        .map(|fc| {
            let norm = luxemburg_norm(&one, p, &fc.cube, grid, opts)?.value;
            let pq = harmonic_mean(p, &fc.cube, grid)?;
            Ok(CubeRatio {
                level: fc.level,
                shift: fc.shift,
                cube: fc.cube.clone(),
                norm,
                harmonic_mean: pq,
                ratio: norm / fc.cube.measure().powf(pq.recip()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min = cubes.iter().fold(T::infinity(), |m, c| m.min(c.ratio));
    let max = cubes.iter().fold(T::neg_infinity(), |m, c| m.max(c.ratio));
    Ok(RatioReport { cubes, min, max })
}
