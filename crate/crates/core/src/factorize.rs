//! Full-range and limited-range weight factorization
//! `w = w0^{1-θ} w1^θ`, `1/p = (1-θ)/p0 + θ/p1`, with pointwise residual
//! checks and a-posteriori constant scans.

use crate::error::{Error, Result};
use crate::exponent::{check_pair, ExponentPairSpec, PairReport, VariableExponent, EPS_ID};
use crate::field::ScalarField;
use crate::geometry::{CubeFamily, QuadratureGrid};
use crate::norms::NormOptions;
use crate::sampling::SamplingPlan;
use crate::scalar::{recip_ext, to_f64_vec, Real};
use crate::weights::{apq_constant, limited_constant, WeightConstantReport};

/// Cap keeping [`eta_bound`] strictly below one.
pub const ETA_CAP: f64 = 1.0 - 1e-9;

/// `min((p1)₋/p₊, 1-1/p₋, (q1)₋/q₊, 1-1/q₋)`, capped below one. A necessary
/// condition on `θ` only.
pub fn eta_bound<T: Real>(
    p: &VariableExponent<T>,
    q: &VariableExponent<T>,
    p1: &VariableExponent<T>,
    q1: &VariableExponent<T>,
) -> T {
    let one = T::one();
    let terms = [
        p1.p_minus() / p.p_plus(),
        one - p.p_minus().recip(),
        q1.p_minus() / q.p_plus(),
        one - q.p_minus().recip(),
    ];
    terms
        .into_iter()
        .fold(T::lit(ETA_CAP), |m, t| m.min(t))
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if theta > T::zero() && theta < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta = {theta} not in (0,1)")))
    }
}

/// `p0` with `1/p0 = (1/p - θ/p1)/(1-θ)`, evaluated as
/// `p / (1 + k(1 - p/p1))`, `k = θ/(1-θ)`, so that `p = p1` gives `p0 = p`
/// exactly.
pub fn factor_exponents<T: Real>(
    p: &VariableExponent<T>,
    p1: &VariableExponent<T>,
    theta: T,
) -> Result<VariableExponent<T>> {
    check_theta(theta)?;
    p.domain().ensure_compatible(p1.domain())?;
    let one = T::one();
    let k = theta / (one - theta);
    let field = match (p.as_constant(), p1.as_constant()) {
        (Some(a), Some(b)) => ScalarField::constant(a / (one + k * (one - a / b)), p.domain()),
        _ => {
            let denom = p.field().div(p1.field())?.scale(-one).offset(one).scale(k).offset(one);
            p.field().div(&denom)?
        }
    };
    let plan = SamplingPlan::default_for(p.dim());
    let points = match field.as_constant() {
        Some(_) => vec![p.domain().center().to_vec()],
        None => plan.points(p.domain()),
    };
    if let Some((x, v)) = points
        .into_iter()
        .map(|x| {
            let v = field.eval(&x);
            (x, v)
        })
        .find(|(_, v)| !(*v > one) || !v.is_finite())
    {
        return Err(Error::ThetaTooLarge {
            point: to_f64_vec(&x),
            value: v.as_f64(),
        });
    }
    let p0 = VariableExponent::new(field)?;
    match p0.as_constant() {
        Some(_) => Ok(p0),
        None => p0.with_lh_estimates(plan),
    }
}

/// `w0 = w^{1/(1-θ)} w1^{-θ/(1-θ)}`, evaluated as `w·(w/w1)^{θ/(1-θ)}`.
pub fn factor_weight<T: Real>(w: &ScalarField<T>, w1: &ScalarField<T>, theta: T) -> Result<ScalarField<T>> {
    check_theta(theta)?;
    let k = theta / (T::one() - theta);
    w.mul(&w.div(w1)?.pow_const(k))
}

/// `φ_{r,s}(t) = (t - 1/s)/(1/r - 1/s)`.
pub fn phi_forward<T: Real>(t: T, r: T, s: T) -> Result<T> {
    check_window(r, s)?;
    let (lo, hi) = (recip_ext(s), recip_ext(r));
    let slack = T::lit(EPS_ID);
    if !(t >= lo - slack && t <= hi + slack) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [{lo}, {hi}]")));
    }
    Ok((t - lo) / (hi - lo))
}

/// Inverse of [`phi_forward`]: `c·v + c'` with `c = 1/r - 1/s`, `c' = 1/s`.
pub fn phi_inverse<T: Real>(v: T, r: T, s: T) -> Result<T> {
    let (c, c_prime) = affine_constants(r, s)?;
    Ok(c * v + c_prime)
}

fn check_window<T: Real>(r: T, s: T) -> Result<()> {
    if r >= T::one() && r < s && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("need 1 <= r < s <= inf, got ({r}, {s})")))
    }
}

/// `(c, c') = (1/r - 1/s, 1/s)`.
pub fn affine_constants<T: Real>(r: T, s: T) -> Result<(T, T)> {
    check_window(r, s)?;
    Ok((recip_ext(r) - recip_ext(s), recip_ext(s)))
}

/// `p_{r,s}` with `1/p_{r,s} = φ_{r,s}(1/p)`.
pub fn phi_exponent<T: Real>(p: &VariableExponent<T>, r: T, s: T) -> Result<VariableExponent<T>> {
    let (c, c_prime) = affine_constants(r, s)?;
    if c == T::one() && c_prime == T::zero() {
        return Ok(p.clone());
    }
    VariableExponent::from_reciprocal(p.reciprocal().offset(-c_prime).scale(c.recip()))
}

/// `u` with `1/u = c/u_{r,s} + c'`.
pub fn phi_inverse_exponent<T: Real>(u_rs: &VariableExponent<T>, r: T, s: T) -> Result<VariableExponent<T>> {
    let (c, c_prime) = affine_constants(r, s)?;
    if c == T::one() && c_prime == T::zero() {
        return Ok(u_rs.clone());
    }
    VariableExponent::from_reciprocal(u_rs.reciprocal().scale(c).offset(c_prime))
}

/// `w_{r,s} = w^{1/(1/r - 1/s)}`.
pub fn weight_power_transform<T: Real>(w: &ScalarField<T>, r: T, s: T) -> Result<ScalarField<T>> {
    let (c, _) = affine_constants(r, s)?;
    Ok(w.pow_const(c.recip()))
}

/// An exponent and weight in `φ_{r,s}` coordinates.
#[derive(Debug, Clone)]
pub struct TransformedSystem<T> {
    pub r: T,
    pub s: T,
    pub c: T,
    pub c_prime: T,
    pub original: VariableExponent<T>,
    pub exponent: VariableExponent<T>,
    pub weight: ScalarField<T>,
}

impl<T: Real> TransformedSystem<T> {
    pub fn new(p: &VariableExponent<T>, w: &ScalarField<T>, r: T, s: T) -> Result<Self> {
        let (c, c_prime) = affine_constants(r, s)?;
        Ok(Self {
            r,
            s,
            c,
            c_prime,
            original: p.clone(),
            exponent: phi_exponent(p, r, s)?,
            weight: weight_power_transform(w, r, s)?,
        })
    }

    /// `max |1/u - (c/u_{r,s} + c')|` over `plan`.
    pub fn affine_residual(&self, plan: SamplingPlan) -> T {
        plan.points(self.original.domain())
            .iter()
            .fold(T::zero(), |m, x| {
                let lhs = self.original.recip_at(x);
                let rhs = self.c * self.exponent.recip_at(x) + self.c_prime;
                m.max((lhs - rhs).abs())
            })
    }
}

#[derive(Debug, Clone)]
pub struct FactorizationInput<T> {
    pub p: VariableExponent<T>,
    pub q: VariableExponent<T>,
    pub p1: VariableExponent<T>,
    pub q1: VariableExponent<T>,
    pub w: ScalarField<T>,
    pub w1: ScalarField<T>,
    pub gamma: T,
    pub theta: T,
    pub spec: Option<ExponentPairSpec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizeOptions<T> {
    /// Number of random residual samples.
    pub samples: usize,
    pub seed: u64,
    pub tolerance: T,
    /// `ι` of the Hölder-splitting diagnostic.
    pub iota: T,
    /// Run the weight-constant scans.
    pub constants: bool,
    pub norm: NormOptions<T>,
}

impl<T: Real> Default for FactorizeOptions<T> {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            tolerance: T::lit(1e-12),
            iota: T::lit(0.05),
            constants: true,
            norm: NormOptions::default(),
        }
    }
}

/// Max pointwise residuals over the random samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `|1/p - (1-θ)/p0 - θ/p1|`.
    pub exponent_p: T,
    pub exponent_q: T,
    /// `|w0^{1-θ} w1^θ - w| / |w|`.
    pub weight: T,
    /// `|1/p0 - 1/q0 - γ|`.
    pub gamma: T,
    /// `|φ_{r₂,s₂}(1/q0) - φ_{r₁,s₁}(1/p0)|`, limited range only.
    pub cross: Option<T>,
    /// Relative gap of the transformed-route and direct `w0`, limited range only.
    pub route: Option<T>,
}

impl<T: Real> Residuals<T> {
    fn named(&self) -> Vec<(&'static str, T)> {
        let mut out = vec![
            ("exponent_p", self.exponent_p),
            ("exponent_q", self.exponent_q),
            ("weight", self.weight),
            ("gamma", self.gamma),
        ];
        if let Some(v) = self.cross {
            out.push(("cross", v));
        }
        if let Some(v) = self.route {
            out.push(("route", v));
        }
        out
    }

    pub fn max(&self) -> T {
        self.named().into_iter().fold(T::zero(), |m, (_, v)| m.max(v))
    }
}

/// Hölder-splitting exponents `e(·)`, `u(·)` with
/// `1/e + 1/u = (1-γ)(1 - (1+θ)/(1+ι))` and `t = (1+ι)/(1-θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDiagnostic<T> {
    pub iota: T,
    pub t: T,
    pub recip_e_range: (T, T),
    pub recip_u_range: (T, T),
    pub identity_residual: T,
}

#[derive(Debug, Clone)]
pub struct FactorizationResult<T> {
    pub p0: VariableExponent<T>,
    pub q0: VariableExponent<T>,
    pub w0: ScalarField<T>,
    pub theta: T,
    pub eta_bound: T,
    /// `θ >= eta_bound`.
    pub eta_warning: bool,
    pub residuals: Residuals<T>,
    pub class_report: PairReport<T>,
    pub split: SplitDiagnostic<T>,
    pub constant: Option<WeightConstantReport<T>>,
    pub input_constants: Option<(T, T)>,
    /// `estimate(w0) / (estimate(w)^{1/(1-θ)} estimate(w1)^{θ/(1-θ)})`.
    pub bound_ratio: Option<T>,
}

fn sample_points<T: Real>(p: &VariableExponent<T>, opts: &FactorizeOptions<T>) -> Vec<Vec<T>> {
    SamplingPlan::Random {
        count: opts.samples,
        seed: opts.seed,
    }
    .points(p.domain())
}

fn convexity_residual<T: Real>(
    p: &VariableExponent<T>,
    p0: &VariableExponent<T>,
    p1: &VariableExponent<T>,
    theta: T,
    xs: &[Vec<T>],
) -> T {
    let one = T::one();
    xs.iter().fold(T::zero(), |m, x| {
        let rhs = (one - theta) * p0.recip_at(x) + theta * p1.recip_at(x);
        m.max((p.recip_at(x) - rhs).abs())
    })
}

fn weight_residual<T: Real>(
    w: &ScalarField<T>,
    w0: &ScalarField<T>,
    w1: &ScalarField<T>,
    theta: T,
    xs: &[Vec<T>],
) -> T {
    let one = T::one();
    xs.iter()
        .filter(|x| !w.is_singular_point(x))
        .fold(T::zero(), |m, x| {
            let target = w.eval(x);
            if !(target.is_finite() && target != T::zero()) {
                return m;
            }
            let rebuilt = w0.eval(x).powf(one - theta) * w1.eval(x).powf(theta);
            m.max(((rebuilt - target) / target).abs())
        })
}

fn gamma_residual<T: Real>(p0: &VariableExponent<T>, q0: &VariableExponent<T>, gamma: T, xs: &[Vec<T>]) -> T {
    xs.iter().fold(T::zero(), |m, x| {
        m.max((p0.recip_at(x) - q0.recip_at(x) - gamma).abs())
    })
}

fn split_diagnostic<T: Real>(input: &FactorizationInput<T>, p0: &VariableExponent<T>, iota: T, xs: &[Vec<T>]) -> SplitDiagnostic<T> {
    let one = T::one();
    let theta = input.theta;
    let j = one + iota;
    let target = (one - input.gamma) * (one - (one + theta) / j);
    let mut e_range = (T::infinity(), T::neg_infinity());
    let mut u_range = (T::infinity(), T::neg_infinity());
    let mut identity_residual = T::zero();
    for x in xs {
        let rq = input.q.recip_at(x);
        let rq1 = input.q1.recip_at(x);
        let rp1c = one - input.p1.recip_at(x);
        let rpc = one - input.p.recip_at(x);
        let rp0c = one - p0.recip_at(x);
        let inv_e = ((one - theta).recip() - j.recip()) * rq - theta * (rq1 / (one - theta) + rp1c / j);
        let inv_u = rp0c - rpc / j - theta * rq1 / j;
        e_range = (e_range.0.min(inv_e), e_range.1.max(inv_e));
        u_range = (u_range.0.min(inv_u), u_range.1.max(inv_u));
        identity_residual = identity_residual.max((inv_e + inv_u - target).abs());
    }
    SplitDiagnostic {
        iota,
        t: j / (one - theta),
        recip_e_range: e_range,
        recip_u_range: u_range,
        identity_residual,
    }
}

fn enforce<T: Real>(residuals: &Residuals<T>, tolerance: T) -> Result<()> {
    for (what, v) in residuals.named() {
        if !(v <= tolerance) {
            return Err(Error::Residual {
                what: what.to_string(),
                residual: v.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
    }
    Ok(())
}

fn bound_ratio<T: Real>(w0: T, w: T, w1: T, theta: T) -> T {
    let one = T::one();
    w0 / (w.powf((one - theta).recip()) * w1.powf(theta / (one - theta)))
}

/// Builds `(p0, q0, w0)` directly, checks the identities, the class of
/// `(p0, q0)` and, optionally, the constant of `w0` on `family`.
pub fn factorize_full_range<T: Real>(
    input: &FactorizationInput<T>,
    family: &CubeFamily<T>,
    grid: &QuadratureGrid<T>,
    opts: &FactorizeOptions<T>,
) -> Result<FactorizationResult<T>> {
    let theta = input.theta;
    let p0 = factor_exponents(&input.p, &input.p1, theta)?;
    let q0 = factor_exponents(&input.q, &input.q1, theta)?;
    let w0 = factor_weight(&input.w, &input.w1, theta)?;
    let xs = sample_points(&input.p, opts);
    let residuals = Residuals {
        exponent_p: convexity_residual(&input.p, &p0, &input.p1, theta, &xs),
        exponent_q: convexity_residual(&input.q, &q0, &input.q1, theta, &xs),
        weight: weight_residual(&input.w, &w0, &input.w1, theta, &xs),
        gamma: gamma_residual(&p0, &q0, input.gamma, &xs),
        cross: None,
        route: None,
    };
    enforce(&residuals, opts.tolerance)?;
    let spec = ExponentPairSpec::full_range(input.gamma)?;
    let class_report = check_pair(&p0, &q0, &spec, SamplingPlan::default_for(p0.dim()))?;
    let eta = eta_bound(&input.p, &input.q, &input.p1, &input.q1);
    let split = split_diagnostic(input, &p0, opts.iota, &xs);

    let (constant, input_constants, ratio) = if opts.constants {
        let scan = |w: &ScalarField<T>, p: &VariableExponent<T>, q: &VariableExponent<T>| {
            apq_constant(w, p, q, input.gamma, family, grid, &opts.norm)
        };
        let c0 = scan(&w0, &p0, &q0)?;
        let cw = scan(&input.w, &input.p, &input.q)?.estimate;
        let cw1 = scan(&input.w1, &input.p1, &input.q1)?.estimate;
        let ratio = bound_ratio(c0.estimate, cw, cw1, theta);
        (Some(c0), Some((cw, cw1)), Some(ratio))
    } else {
        (None, None, None)
    };
    Ok(FactorizationResult {
        p0,
        q0,
        w0,
        theta,
        eta_bound: eta,
        eta_warning: theta >= eta,
        residuals,
        class_report,
        split,
        constant,
        input_constants,
        bound_ratio: ratio,
    })
}

/// Factorizes in `φ_{r₁,s₁}` coordinates, transforms back, and compares with
/// the direct construction.
pub fn factorize_limited_range<T: Real>(
    input: &FactorizationInput<T>,
    family: &CubeFamily<T>,
    grid: &QuadratureGrid<T>,
    opts: &FactorizeOptions<T>,
) -> Result<FactorizationResult<T>> {
    let spec = input
        .spec
        .ok_or_else(|| Error::InvalidArgument("limited-range factorization needs a spec".into()))?;
    if !spec.is_consistent() {
        return Err(Error::EmptyClass(format!(
            "consistency defect {}",
            spec.consistency_defect()
        )));
    }
    let theta = input.theta;
    let (r1, s1) = (spec.r1, spec.s1);
    let alpha = spec.alpha();

    let sys = TransformedSystem::new(&input.p, &input.w, r1, s1)?;
    let sys1 = TransformedSystem::new(&input.p1, &input.w1, r1, s1)?;
    let e0 = factor_exponents(&sys.exponent, &sys1.exponent, theta)?;
    let mu = factor_weight(&sys.weight, &sys1.weight, theta)?;
    let w0 = mu.pow_const(alpha);
    let p0 = phi_inverse_exponent(&e0, r1, s1)?;
    let q0 = factor_exponents(&input.q, &input.q1, theta)?;

    let xs = sample_points(&input.p, opts);
    let direct = factor_weight(&input.w, &input.w1, theta)?;
    let route = xs
        .iter()
        .filter(|x| !direct.is_singular_point(x))
        .fold(T::zero(), |m, x| {
            let (a, b) = (w0.eval(x), direct.eval(x));
            if b.is_finite() && b != T::zero() {
                m.max(((a - b) / b).abs())
            } else {
                m
            }
        });
    let (c2, c2_prime) = affine_constants(spec.r2, spec.s2)?;
    let (c1, c1_prime) = affine_constants(r1, s1)?;
    let cross = xs.iter().fold(T::zero(), |m, x| {
        let a = (q0.recip_at(x) - c2_prime) / c2;
        let b = (p0.recip_at(x) - c1_prime) / c1;
        m.max((a - b).abs())
    });
    let residuals = Residuals {
        exponent_p: convexity_residual(&input.p, &p0, &input.p1, theta, &xs),
        exponent_q: convexity_residual(&input.q, &q0, &input.q1, theta, &xs),
        weight: weight_residual(&input.w, &w0, &input.w1, theta, &xs),
        gamma: gamma_residual(&p0, &q0, input.gamma, &xs),
        cross: Some(cross),
        route: Some(route),
    };
    enforce(&residuals, opts.tolerance)?;
    let class_report = check_pair(&p0, &q0, &spec, SamplingPlan::default_for(p0.dim()))?;
    let eta = eta_bound(&input.p, &input.q, &input.p1, &input.q1);
    let split = split_diagnostic(input, &p0, opts.iota, &xs);

    let (constant, input_constants, ratio) = if opts.constants {
        let scan = |w: &ScalarField<T>, p: &VariableExponent<T>, q: &VariableExponent<T>| {
            limited_constant(w, p, q, &spec, family, grid, &opts.norm)
        };
        let c0 = scan(&w0, &p0, &q0)?;
        let cw = scan(&input.w, &input.p, &input.q)?.estimate;
        let cw1 = scan(&input.w1, &input.p1, &input.q1)?.estimate;
        let ratio = bound_ratio(c0.estimate, cw, cw1, theta);
        (Some(c0), Some((cw, cw1)), Some(ratio))
    } else {
        (None, None, None)
    };
    Ok(FactorizationResult {
        p0,
        q0,
        w0,
        theta,
        eta_bound: eta,
        eta_warning: theta >= eta,
        residuals,
        class_report,
        split,
        constant,
        input_constants,
        bound_ratio: ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_dyadic, DomainBox};
    use crate::weights::scan_grid;

    fn dom() -> DomainBox<f64> {
        DomainBox::centered(1, 8.0).unwrap()
    }

    fn cst(v: f64) -> VariableExponent<f64> {
        VariableExponent::constant(v, &dom()).unwrap()
    }

    fn field(src: &str) -> ScalarField<f64> {
        ScalarField::parse(src, &dom()).unwrap()
    }

    fn fast() -> FactorizeOptions<f64> {
        FactorizeOptions {
            constants: false,
            ..Default::default()
        }
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_bound(&cst(2.0), &cst(2.0), &cst(4.0), &cst(4.0)), 0.5);
        assert_eq!(eta_bound(&cst(2.0), &cst(2.0), &cst(2.0), &cst(2.0)), 0.5);
        let half = VariableExponent::new(ScalarField::piecewise(&dom(), vec![2], vec![3.0, 2.0]).unwrap()).unwrap();
        assert_eq!(eta_bound(&half, &half, &cst(2.0), &cst(2.0)), 0.5);
    }

    #[test]
    fn exponent_examples() {
        let p = VariableExponent::parse("2 + 1/log(2.718281828459045 + abs(x1))", &dom()).unwrap();
        for theta in [0.1, 0.5, 0.9] {
            let p0 = factor_exponents(&p, &p, theta).unwrap();
            for x in [-7.3, 0.0, 0.4, 5.5] {
                assert_eq!(p0.eval(&[x]), p.eval(&[x]));
            }
        }
        let p0 = factor_exponents(&cst(2.0), &cst(4.0), 0.2).unwrap();
        assert!((p0.as_constant().unwrap() - 16.0 / 9.0).abs() < 1e-15);
        match factor_exponents(&cst(2.0), &cst(4.0), 0.9) {
            Err(Error::ThetaTooLarge { value, .. }) => assert!((1.0 / value - 2.75).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weight_examples() {
        let w = field("pow(abs(x1), 0.1)");
        let w0 = factor_weight(&w, &w, 0.4).unwrap();
        assert_eq!(w0.eval(&[0.7]), w.eval(&[0.7]));
        let w0 = factor_weight(&w, &field("pow(abs(x1), -0.1)"), 0.5).unwrap();
        assert!((w0.eval(&[0.7]) - 0.7f64.powf(0.3)).abs() < 1e-15);
        let w0 = factor_weight(&field("1"), &field("pow(abs(x1), 0.2)"), 0.25).unwrap();
        assert!((w0.eval(&[3.0]) - 3f64.powf(-1.0 / 15.0)).abs() < 1e-15);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_forward(0.5, 2.0, 4.0).unwrap(), 1.0);
        assert_eq!(phi_forward(0.25, 2.0, 4.0).unwrap(), 0.0);
        assert!((phi_forward(1.0f64 / 3.0, 2.0, 4.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(phi_forward(0.3, 1.0, f64::INFINITY).unwrap(), 0.3);
        assert!(phi_forward(0.6, 2.0, 4.0).is_err());
        let t = phi_forward(0.4f64, 2.0, 6.0).unwrap();
        assert!((phi_inverse(t, 2.0, 6.0).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn power_transform_examples() {
        let w = field("pow(abs(x1), 0.1)");
        assert_eq!(weight_power_transform(&w, 1.0, f64::INFINITY).unwrap().eval(&[0.3]), w.eval(&[0.3]));
        let t = weight_power_transform(&w, 2.0, 4.0).unwrap();
        assert!((t.eval(&[0.3]) - 0.3f64.powf(0.4)).abs() < 1e-15);
    }

    #[test]
    fn transformed_system_affine() {
        let p = VariableExponent::parse("3 + 0.5/log(2.718281828459045 + abs(x1))", &dom()).unwrap();
        let sys = TransformedSystem::new(&p, &field("1"), 2.0, 6.0).unwrap();
        assert!(sys.affine_residual(SamplingPlan::default_for(1)) < 1e-14);
        assert!(sys.exponent.p_minus() > 1.0);
    }

    fn input(p: f64, p1: f64, w: &str, w1: &str, theta: f64) -> FactorizationInput<f64> {
        FactorizationInput {
            p: cst(p),
            q: cst(p),
            p1: cst(p1),
            q1: cst(p1),
            w: field(w),
            w1: field(w1),
            gamma: 0.0,
            theta,
            spec: None,
        }
    }

    #[test]
    fn full_range_fixed_point() {
        let fam = enumerate_dyadic(&dom(), 3, 1).unwrap();
        let grid = scan_grid(&dom(), 3, 8);
        let res = factorize_full_range(&input(2.0, 2.0, "1", "1", 0.3), &fam, &grid, &Default::default()).unwrap();
        assert_eq!(res.p0.as_constant(), Some(2.0));
        assert_eq!(res.w0.eval(&[1.3]), 1.0);
        assert!(res.residuals.max() < 1e-15);
        assert!((res.bound_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!(res.class_report.passed);
    }

    #[test]
    fn full_range_power_weights() {
        let res = factorize_full_range(
            &input(2.0, 4.0, "pow(abs(x1), 0.1)", "pow(abs(x1), 0.05)", 0.1),
            &enumerate_dyadic(&dom(), 1, 0).unwrap(),
            &scan_grid(&dom(), 1, 4),
            &fast(),
        )
        .unwrap();
        assert!((1.0 / res.p0.as_constant().unwrap() - 0.475 / 0.9).abs() < 1e-15);
        let x = 0.37f64;
        assert!((res.w0.eval(&[x]) - x.powf(0.095 / 0.9)).abs() < 1e-14);
        assert!(res.split.identity_residual < 1e-14);
        assert!(!res.eta_warning);
    }

    #[test]
    fn limited_full_range_spec_matches_full() {
        let mut inp = input(2.0, 4.0, "pow(abs(x1), 0.1)", "pow(abs(x1), 0.05)", 0.1);
        inp.spec = Some(ExponentPairSpec::full_range(0.0).unwrap());
        let fam = enumerate_dyadic(&dom(), 1, 0).unwrap();
        let grid = scan_grid(&dom(), 1, 4);
        let a = factorize_full_range(&inp, &fam, &grid, &fast()).unwrap();
        let b = factorize_limited_range(&inp, &fam, &grid, &fast()).unwrap();
        let (pa, pb) = (a.p0.as_constant().unwrap(), b.p0.as_constant().unwrap());
        assert!((pa - pb).abs() < 1e-12);
        assert!(b.residuals.route.unwrap() < 1e-12 && b.residuals.cross.unwrap() < 1e-12);
    }

    #[test]
    fn limited_diagonal_example() {
        let mut inp = input(3.0, 4.0, "pow(abs(x1), 0.03)", "pow(abs(x1), 0.02)", 0.1);
        inp.spec = Some(ExponentPairSpec::diagonal(2.0, 6.0).unwrap());
        let res = factorize_limited_range(
            &inp,
            &enumerate_dyadic(&dom(), 1, 0).unwrap(),
            &scan_grid(&dom(), 1, 4),
            &fast(),
        )
        .unwrap();
        let x = 2.5f64;
        assert!((res.w0.eval(&[x]) / x.powf(0.028 / 0.9) - 1.0).abs() < 1e-12);
        assert!(res.class_report.passed);
    }

    #[test]
    fn limited_off_diagonal_example() {
        let spec = ExponentPairSpec::new(1.0 / 12.0, 2.0, 4.0, 12.0 / 5.0, 6.0).unwrap();
        assert!(spec.is_consistent());
        let q1 = 1.0 / (0.4 - 1.0 / 12.0);
        let inp = FactorizationInput {
            p: cst(3.0),
            q: cst(4.0),
            p1: cst(2.5),
            q1: cst(q1),
            w: field("pow(abs(x1), 0.02)"),
            w1: field("pow(abs(x1), 0.01)"),
            gamma: 1.0 / 12.0,
            theta: 0.1,
            spec: Some(spec),
        };
        let res = factorize_limited_range(
            &inp,
            &enumerate_dyadic(&dom(), 1, 0).unwrap(),
            &scan_grid(&dom(), 1, 4),
            &fast(),
        )
        .unwrap();
        assert!(res.residuals.cross.unwrap() < 1e-12);
        assert!(res.class_report.passed);
    }

    #[test]
    fn limited_needs_consistent_spec() {
        let mut inp = input(3.0, 4.0, "1", "1", 0.1);
        inp.spec = Some(ExponentPairSpec::new(0.25, 1.0, 4.0, 2.0, 8.0).unwrap());
        let res = factorize_limited_range(
            &inp,
            &enumerate_dyadic(&dom(), 1, 0).unwrap(),
            &scan_grid(&dom(), 1, 4),
            &fast(),
        );
        assert!(matches!(res, Err(Error::EmptyClass(_))));
    }
}
