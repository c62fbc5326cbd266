//! Variable exponents: bounds, log-Hölder constants, conjugation, harmonic
//! means and membership in the exponent classes `E⁰_(r,s)` and `E⃗^γ_(r⃗,s⃗)`.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Cube, DomainBox, QuadratureGrid};
use crate::sampling::{lattice, SamplingPlan};
use crate::scalar::{recip_ext, to_f64_vec, Real};

/// Margin used for the strict inequalities `r < p₋` and `p₊ < s`.
pub const EPS_CLASS: f64 = 1e-9;
/// Tolerance for closed-form reciprocal identities.
pub const EPS_ID: f64 = 1e-12;

/// Sampled lower bounds for the log-Hölder constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhConstants<T> {
    /// `max |p(x)-p(y)|·(-log|x-y|)` over sampled pairs with `|x-y| < 1/2`.
    pub c0: T,
    /// `max |p(x)-p∞|·log(e+|x|)` over samples.
    pub c_inf: T,
    pub p_inf: T,
    /// True when `p_inf` was supplied rather than taken from the outer shell.
    pub p_inf_given: bool,
}

/// A variable exponent `p(·)` with `1 ≤ p₋ ≤ p₊ < ∞` on a box.
#[derive(Debug, Clone)]
pub struct VariableExponent<T> {
    field: ScalarField<T>,
    p_minus: T,
    p_plus: T,
    lh: Option<LhConstants<T>>,
    p_infinity: Option<T>,
}

impl<T: Real> VariableExponent<T> {
    /// Samples `field` with the default plan to obtain `p₋, p₊`.
    pub fn new(field: ScalarField<T>) -> Result<Self> {
        let plan = SamplingPlan::default_for(field.dim());
        Self::with_plan(field, plan)
    }

    pub fn with_plan(field: ScalarField<T>, plan: SamplingPlan) -> Result<Self> {
        if let Some(c) = field.as_constant() {
            return Self::constant(c, field.domain());
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for x in plan.points(field.domain()) {
            let v = field.eval(&x);
            if v.is_nan() {
                return Err(Error::InvalidExponent(format!(
                    "exponent is NaN at {:?}",
                    to_f64_vec(&x)
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self::checked(field, lo, hi)
    }

    pub fn constant(value: T, domain: &DomainBox<T>) -> Result<Self> {
        Self::checked(ScalarField::constant(value, domain), value, value)
    }

    pub fn parse(src: &str, domain: &DomainBox<T>) -> Result<Self> {
        Self::new(ScalarField::parse(src, domain)?)
    }

    /// Builds the exponent whose reciprocal is `recip`; `1/p` is then
    /// evaluated without rounding through a second reciprocal.
    pub fn from_reciprocal(recip: ScalarField<T>) -> Result<Self> {
        if let Some(c) = recip.as_constant() {
            let p = recip_ext(c);
            if !(c > T::zero()) {
                return Err(Error::InvalidExponent(format!("reciprocal {c} is not positive")));
            }
            return Self::checked(recip.recip(), p, p);
        }
        let plan = SamplingPlan::default_for(recip.dim());
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for x in plan.points(recip.domain()) {
            let v = recip.eval(&x);
            if v.is_nan() || v <= T::zero() {
                return Err(Error::InvalidExponent(format!(
                    "reciprocal exponent {v} at {:?} is not positive",
                    to_f64_vec(&x)
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self::checked(recip.recip(), hi.recip(), lo.recip())
    }

    fn checked(field: ScalarField<T>, p_minus: T, p_plus: T) -> Result<Self> {
        if !(p_minus >= T::one()) {
            return Err(Error::InvalidExponent(format!("p_minus = {p_minus} < 1")));
        }
        if !p_plus.is_finite() {
            return Err(Error::InvalidExponent("p_plus = inf is not supported".into()));
        }
        Ok(Self {
            field,
            p_minus,
            p_plus,
            lh: None,
            p_infinity: None,
        })
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.field
    }

    pub fn domain(&self) -> &DomainBox<T> {
        self.field.domain()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn p_minus(&self) -> T {
        self.p_minus
    }

    pub fn p_plus(&self) -> T {
        self.p_plus
    }

    pub fn as_constant(&self) -> Option<T> {
        self.field.as_constant()
    }

    pub fn lh(&self) -> Option<&LhConstants<T>> {
        self.lh.as_ref()
    }

    pub fn p_infinity(&self) -> Option<T> {
        self.p_infinity
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        self.field.eval(x)
    }

    #[inline]
    pub fn recip_at(&self, x: &[T]) -> T {
        self.field.eval_recip(x)
    }

    /// Reciprocal field `1/p(·)`.
    pub fn reciprocal(&self) -> ScalarField<T> {
        self.field.recip()
    }

    pub fn with_p_infinity(mut self, p_inf: T) -> Self {
        self.p_infinity = Some(p_inf);
        self
    }

    /// Caches sampled LH constants.
    pub fn with_lh_estimates(mut self, plan: SamplingPlan) -> Result<Self> {
        self.lh = Some(estimate_lh_constants(&self, plan)?);
        Ok(self)
    }

    /// `s·p(·)`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        if !(s > T::zero()) {
            return Err(Error::InvalidArgument(format!("scale {s} must be positive")));
        }
        if s == T::one() {
            return Ok(self.clone());
        }
        let mut out = Self::checked(self.field.scale(s), self.p_minus * s, self.p_plus * s)?;
        out.p_infinity = self.p_infinity.map(|v| v * s);
        Ok(out)
    }
}

/// `p'(·)` with `1/p + 1/p' = 1`.
pub fn conjugate<T: Real>(p: &VariableExponent<T>) -> Result<VariableExponent<T>> {
    if p.p_minus <= T::one() {
        return Err(Error::InvalidExponent(
            "conjugate of an exponent with p_minus = 1 is unbounded".into(),
        ));
    }
    let one = T::one();
    let recip = p.reciprocal().scale(-one).offset(one);
    let conj_of = |v: T| (one - v.recip()).recip();
    let mut out = VariableExponent {
        field: recip.recip(),
        p_minus: conj_of(p.p_plus),
        p_plus: conj_of(p.p_minus),
        lh: None,
        p_infinity: p.p_infinity.map(conj_of),
    };
    if let Some(c) = p.as_constant() {
        out.field = ScalarField::constant(conj_of(c), p.domain());
    }
    Ok(out)
}

/// `p_Q` with `1/p_Q` the average of `1/p` over `cube`.
pub fn harmonic_mean<T: Real>(
    p: &VariableExponent<T>,
    cube: &Cube<T>,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    if !p.domain().contains_cube(cube) {
        return Err(Error::CubeOutsideDomain {
            corner: to_f64_vec(cube.corner()),
            side: cube.side().as_f64(),
        });
    }
    if let Some(c) = p.as_constant() {
        return Ok(c);
    }
    let rule = grid.rule(cube, p.field().singular_points())?;
    Ok(reciprocal_average(p, &rule)?.recip())
}

pub(crate) fn reciprocal_average<T: Real>(
    p: &VariableExponent<T>,
    rule: &crate::geometry::QuadratureRule<T>,
) -> Result<T> {
    let total = rule.apply_fn(|i| p.recip_at(rule.point(i)))?;
    Ok(total / rule.total_weight())
}

/// Outer-shell points: the boundary of the level-2 lattice of the box.
fn outer_shell<T: Real>(domain: &DomainBox<T>) -> Vec<Vec<T>> {
    lattice(domain, 2)
        .into_iter()
        .filter(|x| {
            x.iter()
                .enumerate()
                .any(|(i, &v)| v == domain.lo(i) || v == domain.hi(i))
        })
        .collect()
}

/// Sampled LH₀ / LH∞ constants. These are lower bounds of the true
/// constants; with nested lattice plans they are nondecreasing under
/// refinement.
pub fn estimate_lh_constants<T: Real>(
    p: &VariableExponent<T>,
    plan: SamplingPlan,
) -> Result<LhConstants<T>> {
    let mut pts = plan.points(p.domain());
    if pts.len() < 2 {
        return Err(Error::DegenerateSampler(format!("{} point(s)", pts.len())));
    }
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal));
    let vals: Vec<T> = pts.iter().map(|x| p.eval(x)).collect();
    let half = T::lit(0.5);
    let mut c0 = T::zero();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[j][0] - pts[i][0] >= half {
                break;
            }
            let dist = pts[i]
                .iter()
                .zip(&pts[j])
                .fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b))
                .sqrt();
            if dist > T::zero() && dist < half {
                c0 = c0.max((vals[i] - vals[j]).abs() * (-dist.ln()));
            }
        }
    }
    let (p_inf, p_inf_given) = match p.p_infinity {
        Some(v) => (v, true),
        None => {
            let shell = outer_shell(p.domain());
            let sum = shell.iter().fold(T::zero(), |s, x| s + p.eval(x));
            (sum / T::from_count(shell.len()), false)
        }
    };
    let e = T::E();
    let c_inf = pts.iter().zip(&vals).fold(T::zero(), |m, (x, &v)| {
        let norm = x.iter().fold(T::zero(), |s, &c| s + c * c).sqrt();
        m.max((v - p_inf).abs() * (e + norm).ln())
    });
    Ok(LhConstants {
        c0,
        c_inf,
        p_inf,
        p_inf_given,
    })
}

/// How a class verdict was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evidence {
    /// Bounds and LH constants hold on the sampled points only.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport<T> {
    pub r: T,
    pub s: T,
    pub p_minus: T,
    pub p_plus: T,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub lh: LhConstants<T>,
    pub lh_finite: bool,
    pub member: bool,
    pub evidence: Evidence,
}

/// Membership in `E⁰_(r,s)`: `r < p₋ ≤ p₊ < s` (margin [`EPS_CLASS`]) and
/// finite sampled LH constants.
pub fn check_class<T: Real>(p: &VariableExponent<T>, r: T, s: T) -> Result<ClassReport<T>> {
    let eps = T::lit(EPS_CLASS);
    let lh = match p.lh {
        Some(lh) => lh,
        None => estimate_lh_constants(p, SamplingPlan::default_for(p.dim()))?,
    };
    let lower_ok = p.p_minus > r + eps;
    let upper_ok = s.is_infinite() || p.p_plus < s - eps;
    let lh_finite = lh.c0.is_finite() && lh.c_inf.is_finite();
    Ok(ClassReport {
        r,
        s,
        p_minus: p.p_minus,
        p_plus: p.p_plus,
        lower_ok,
        upper_ok,
        lh,
        lh_finite,
        member: lower_ok && upper_ok && lh_finite,
        evidence: Evidence::Sampled,
    })
}

/// Parameters `(γ, r⃗, s⃗)` of an off-diagonal limited-range class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPairSpec<T> {
    pub gamma: T,
    pub r1: T,
    pub s1: T,
    pub r2: T,
    pub s2: T,
}

impl<T: Real> ExponentPairSpec<T> {
    /// Checks ranges only; use [`ExponentPairSpec::is_consistent`] for the
    /// relation between `γ`, `r⃗` and `s⃗`.
    pub fn new(gamma: T, r1: T, s1: T, r2: T, s2: T) -> Result<Self> {
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(Error::InvalidArgument(format!("gamma = {gamma} not in [0,1)")));
        }
        for (r, s) in [(r1, s1), (r2, s2)] {
            if !(r >= T::one() && r < s) || r.is_infinite() || s.is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "need 1 <= r < s <= inf, got ({r}, {s})"
                )));
            }
        }
        Ok(Self {
            gamma,
            r1,
            s1,
            r2,
            s2,
        })
    }

    /// `(1, 1/γ, 1/(1-γ), ∞)`: the limited-range class that coincides with
    /// the full-range class `A^γ`.
    pub fn full_range(gamma: T) -> Result<Self> {
        let one = T::one();
        Self::new(gamma, one, recip_ext(gamma), (one - gamma).recip(), T::infinity())
    }

    /// Diagonal window `γ = 0`, `r₁ = r₂ = r`, `s₁ = s₂ = s`.
    pub fn diagonal(r: T, s: T) -> Result<Self> {
        Self::new(T::zero(), r, s, r, s)
    }

    /// `max(|1/r₁-1/r₂-γ|, |1/s₁-1/s₂-γ|)`.
    pub fn consistency_defect(&self) -> T {
        let a = (recip_ext(self.r1) - recip_ext(self.r2) - self.gamma).abs();
        let b = (recip_ext(self.s1) - recip_ext(self.s2) - self.gamma).abs();
        a.max(b)
    }

    /// False means the class is empty.
    pub fn is_consistent(&self) -> bool {
        self.consistency_defect() <= T::lit(EPS_ID)
    }

    /// `1/r₁ - 1/s₁`, the power relating the class to its full-range image.
    pub fn alpha(&self) -> T {
        recip_ext(self.r1) - recip_ext(self.s1)
    }

    /// Parameters of the class of `(q', p')` when `(p, q)` belongs to `self`.
    pub fn dual(&self) -> Result<Self> {
        let conj = |v: T| -> T {
            let c = T::one() - recip_ext(v);
            recip_ext(c)
        };
        Self::new(
            self.gamma,
            conj(self.s2),
            conj(self.r2),
            conj(self.s1),
            conj(self.r1),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport<T> {
    pub structural_ok: bool,
    pub consistency_defect: T,
    /// `max |1/p(x) - 1/q(x) - γ|` over the samples.
    pub max_deviation: T,
    pub p_class: ClassReport<T>,
    pub q_class: ClassReport<T>,
    pub passed: bool,
}

/// Membership of `(p, q)` in `E⃗^γ_(r⃗,s⃗)` on the points of `plan`.
pub fn check_pair<T: Real>(
    p: &VariableExponent<T>,
    q: &VariableExponent<T>,
    spec: &ExponentPairSpec<T>,
    plan: SamplingPlan,
) -> Result<PairReport<T>> {
    p.domain().ensure_compatible(q.domain())?;
    let max_deviation = plan
        .points(p.domain())
        .iter()
        .fold(T::zero(), |m, x| {
            m.max((p.recip_at(x) - q.recip_at(x) - spec.gamma).abs())
        });
    let p_class = check_class(p, spec.r1, spec.s1)?;
    let q_class = check_class(q, spec.r2, spec.s2)?;
    let structural_ok = spec.is_consistent();
    let passed = structural_ok
        && max_deviation <= T::lit(EPS_ID)
        && p_class.member
        && q_class.member;
    Ok(PairReport {
        structural_ok,
        consistency_defect: spec.consistency_defect(),
        max_deviation,
        p_class,
        q_class,
        passed,
    })
}
