//! Seeded invariant suite behind the `verify` command.
//!
//! Every check produces one row; the row order and all random draws depend
//! only on the seed, so two runs with the same seed write identical bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varexp::field::{BinOp, Func};
use varexp::{
    apq_constant, char_norm_ratio, check_class, check_holder, check_homogeneity, conjugate,
    duality_swap, enumerate_dyadic, estimate_lh_constants, factor_exponents, factor_weight,
    factorize_full_range, factorize_limited_range, harmonic_mean, integrate, limited_constant,
    luxemburg_norm, parse_field, phi_forward, phi_inverse, rhi_probe, scaling_transform, Box1, Domain,
    Exponent, FactorizationInput, FactorizeOptions, Field, FieldExpr, Grid, NormOptions, PairSpec,
    SamplingPlan, TransformedSystem,
};

use crate::config::VerifyConfig;
use crate::output::{num, Table};

const E: &str = "2.718281828459045";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub module: &'static str,
    pub invariant: &'static str,
    pub case: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

struct Suite {
    rng: ChaCha8Rng,
    rows: Vec<Row>,
    opts: NormOptions<f64>,
    cases: usize,
    max_depth: u32,
}

type Checked = Result<f64, varexp::Error>;

impl Suite {
    /// Records `value <= tol`; an error counts as a failed row.
    fn check(&mut self, module: &'static str, invariant: &'static str, case: String, value: Checked, tol: f64) {
        let (value, passed) = match value {
            Ok(v) => (v, v <= tol),
            Err(e) => {
                eprintln!("verify {module}/{invariant} [{case}]: {e}");
                (f64::NAN, false)
            }
        };
        self.rows.push(Row {
            module,
            invariant,
            case,
            value,
            tolerance: tol,
            passed,
        });
    }

    fn coef(&mut self, lo: i32, hi: i32, scale: f64) -> f64 {
        self.rng.gen_range(lo..=hi) as f64 / scale
    }

    /// `a + b/log(e + |x1 - c|)`, log-Hölder with `p₋ >= a`.
    fn lh_exponent_src(&mut self, a_lo: i32, a_hi: i32) -> String {
        let a = self.coef(a_lo, a_hi, 1000.0);
        let b = self.coef(0, 1500, 1000.0);
        let c = self.coef(-2000, 2000, 1000.0);
        format!("{a} + {b}/log({E} + abs(x1 - {c}))")
    }

    /// Smooth positive function on R^1.
    fn positive_src(&mut self) -> String {
        let a = self.coef(500, 3000, 1000.0);
        let b = self.coef(-500, 500, 1000.0);
        let c = self.coef(0, 300, 1000.0);
        format!("{a} + {b}*x1/(1 + x1*x1) + {c}*exp(-x1*x1)")
    }

    fn points(&mut self, domain: &Domain, n: usize) -> Vec<Vec<f64>> {
        let seed = self.rng.gen();
        SamplingPlan::Random { count: n, seed }.points(domain)
    }

    fn random_cube(&mut self, domain: &Domain) -> Box1 {
        let hw = domain.half_width();
        let side = self.coef(1, 16, 8.0).min(hw);
        let corner = (0..domain.dim())
            .map(|i| domain.lo(i) + self.rng.gen_range(0.0..(2.0 * hw - side)))
            .collect();
        Box1::new(corner, side).expect("valid cube")
    }

    fn random_expr(&mut self, depth: usize, dim: usize) -> FieldExpr {
        let leaf = depth <= 1 || self.rng.gen_bool(0.25);
        if leaf {
            return if self.rng.gen_bool(0.5) {
                FieldExpr::Num(self.rng.gen_range(0..80) as f64 / 8.0)
            } else {
                FieldExpr::Coord(self.rng.gen_range(0..dim))
            };
        }
        match self.rng.gen_range(0..3) {
            0 => FieldExpr::Neg(Box::new(self.random_expr(depth - 1, dim))),
            1 => {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][self.rng.gen_range(0..4)];
                FieldExpr::Binary(
                    op,
                    Box::new(self.random_expr(depth - 1, dim)),
                    Box::new(self.random_expr(depth - 1, dim)),
                )
            }
            _ => {
                let func = Func::ALL[self.rng.gen_range(0..Func::ALL.len())];
                let n = match func.arity() {
                    (1, 1) => 1,
                    (2, 2) => 2,
                    _ => self.rng.gen_range(2..=3),
                };
                FieldExpr::Call(func, (0..n).map(|_| self.random_expr(depth - 1, dim)).collect())
            }
        }
    }
}

fn dom(dim: usize, hw: f64) -> Domain {
    Domain::centered(dim, hw).expect("valid domain")
}

fn exponent(src: &str, d: &Domain) -> Exponent {
    Exponent::parse(src, d).expect("valid exponent")
}

fn field(src: &str, d: &Domain) -> Field {
    Field::parse(src, d).expect("valid field")
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn exponent_checks(s: &mut Suite) {
    let d = dom(1, 8.0);
    for k in 0..s.cases {
        let src = s.lh_exponent_src(1200, 3000);
        let p = exponent(&src, &d);
        let pts = s.points(&d, 200);
        let involution = conjugate(&p).and_then(|c| conjugate(&c)).map(|pp| {
            pts.iter().map(|x| rel(pp.eval(x), p.eval(x))).fold(0.0, f64::max)
        });
        s.check("exponent", "conjugate_involution", format!("{k}: {src}"), involution, 1e-14);
        let identity = conjugate(&p).map(|c| {
            pts.iter()
                .map(|x| (p.recip_at(x) + c.recip_at(x) - 1.0).abs())
                .fold(0.0, f64::max)
        });
        s.check("exponent", "conjugate_identity", format!("{k}: {src}"), identity, 1e-14);

        let lh = (|| {
            let coarse = estimate_lh_constants(&p, SamplingPlan::Lattice { level: 6 })?;
            let fine = estimate_lh_constants(&p, SamplingPlan::Lattice { level: 7 })?;
            Ok((coarse.c0 - fine.c0).max(coarse.c_inf - fine.c_inf).max(0.0))
        })();
        s.check("exponent", "lh_monotone_refinement", format!("{k}: {src}"), lh, 0.0);

        let src2 = s.lh_exponent_src(1200, 3000);
        let p2 = exponent(&src2, &d);
        let t = s.coef(1, 999, 1000.0);
        let mix = Exponent::from_reciprocal(p.reciprocal().scale(t).add(&p2.reciprocal().scale(1.0 - t)).unwrap());
        let cube = s.random_cube(&d);
        let grid = Grid::from_refinement(8);
        let linear = mix.and_then(|m| {
            let lhs = harmonic_mean(&m, &cube, &grid)?.recip();
            let rhs = t / harmonic_mean(&p, &cube, &grid)? + (1.0 - t) / harmonic_mean(&p2, &cube, &grid)?;
            Ok(rel(lhs, rhs))
        });
        s.check("exponent", "harmonic_mean_linearity", format!("{k}: t={t}"), linear, 1e-13);

        let r = s.coef(1000, 1800, 1000.0);
        let sv = if k % 3 == 0 { f64::INFINITY } else { s.coef(3000, 6000, 1000.0) };
        let duality = (|| {
            let a = check_class(&p, r, sv)?.member;
            let pc = conjugate(&p)?;
            let sc = if sv.is_infinite() { 1.0 } else { 1.0 / (1.0 - 1.0 / sv) };
            let rc = if r == 1.0 { f64::INFINITY } else { 1.0 / (1.0 - 1.0 / r) };
            let b = check_class(&pc, sc, rc)?.member;
            Ok(if a == b { 0.0 } else { 1.0 })
        })();
        s.check("exponent", "diagonal_duality", format!("{k}: r={r} s={}", num(sv)), duality, 0.0);
    }

    let c = s.coef(1100, 5000, 1000.0);
    let pc = Exponent::constant(c, &d).unwrap();
    let cube = s.random_cube(&d);
    let hm = harmonic_mean(&pc, &cube, &Grid::from_refinement(6)).map(|v| (v - c).abs());
    s.check("exponent", "harmonic_mean_constant", format!("p={c}"), hm, 0.0);

    for gamma in [0.0, 0.25, 0.5] {
        let spec = PairSpec::full_range(gamma).unwrap();
        let twice = spec.dual().and_then(|a| a.dual()).map(|b| {
            [
                (b.r1, spec.r1),
                (b.s1, spec.s1),
                (b.r2, spec.r2),
                (b.s2, spec.s2),
            ]
            .iter()
            .map(|&(x, y)| if x == y { 0.0 } else { rel(x, y) })
            .fold(0.0, f64::max)
        });
        s.check("exponent", "pair_dual_involution", format!("gamma={gamma}"), twice, 1e-14);
        s.check(
            "exponent",
            "full_range_consistent",
            format!("gamma={gamma}"),
            Ok(spec.consistency_defect()),
            1e-12,
        );
    }
}

fn field_checks(s: &mut Suite) {
    let mut mismatched = 0usize;
    let mut disagree = 0usize;
    let mut nondeterministic = 0usize;
    for k in 0..1000 {
        let dim = 1 + k % 3;
        let depth = 1 + (k % 6);
        let e = s.random_expr(depth, dim);
        match parse_field(&e.to_string(), dim) {
            Ok(back) if back == e => {}
            _ => mismatched += 1,
        }
        let d = dom(dim, 2.0);
        let f = Field::from_expr(e.clone(), &d).expect("dimension fits");
        for x in s.points(&d, 4) {
            let (a, b) = (f.eval(&x), e.eval(&x));
            if !same_bits(a, b) {
                disagree += 1;
            }
            if !same_bits(a, f.eval(&x)) {
                nondeterministic += 1;
            }
        }
    }
    s.check("field", "parse_round_trip", "1000 trees, depth <= 6".into(), Ok(mismatched as f64), 0.0);
    s.check("field", "eval_matches_recursive", "1000 trees x 4 points".into(), Ok(disagree as f64), 0.0);
    s.check("field", "deterministic_eval", "1000 trees x 4 points".into(), Ok(nondeterministic as f64), 0.0);

    let d = dom(2, 4.0);
    for a in [-0.9, -0.3, 0.5, 1.7] {
        let w = field(&format!("pow(abs(x1) + abs(x2), {a})"), &d).with_singular_point(vec![0.0, 0.0]);
        let pts = s.points(&d, 500);
        let min = pts
            .iter()
            .filter(|x| !w.is_singular_point(x))
            .map(|x| w.eval(x))
            .fold(f64::INFINITY, f64::min);
        let violation = if min > 0.0 && min.is_finite() { 0.0 } else { 1.0 };
        s.check("field", "weight_positivity", format!("|x|^{a}"), Ok(violation), 0.0);
    }

    let d = dom(1, 8.0);
    for k in 0..s.cases {
        let src = s.positive_src();
        let f = field(&src, &d);
        let a = s.coef(-3000, 3000, 1000.0);
        let b = s.coef(-3000, 3000, 1000.0);
        let (ab, composed) = (f.pow_const(a * b), f.pow_const(a).pow_const(b));
        let err = s
            .points(&d, 200)
            .iter()
            .map(|x| rel(composed.eval(x), ab.eval(x)))
            .fold(0.0, f64::max);
        s.check("field", "pow_const_composition", format!("{k}: a={a} b={b}"), Ok(err), 1e-13);
    }
}

fn geometry_checks(s: &mut Suite) {
    for dim in 1..=3 {
        let d = dom(dim, 2.0);
        let max_depth = [5, 4, 3][dim - 1];
        for shifts in 0..=2u32 {
            let fam = enumerate_dyadic(&d, max_depth, shifts).unwrap();
            let mut keys: Vec<String> = fam
                .iter()
                .map(|c| format!("{}:{}:{:?}", c.level, c.shift, c.cube.corner()))
                .collect();
            let n = keys.len();
            keys.sort();
            keys.dedup();
            let expected: u64 = (0..=max_depth)
                .map(|l| {
                    let per = 1u64 << l;
                    per.pow(dim as u32) + shifts as u64 * (per - 1).pow(dim as u32)
                })
                .sum();
            let defect = (n - keys.len()) as f64 + (n as f64 - expected as f64).abs();
            let case = format!("d={dim} D={max_depth} shifts={shifts}");
            s.check("geometry", "family_exactly_once", case.clone(), Ok(defect), 0.0);
            let outside = fam.iter().filter(|c| !d.contains_cube(&c.cube)).count();
            s.check("geometry", "family_inside_domain", case, Ok(outside as f64), 0.0);
        }

        let grid = Grid::from_refinement(4);
        let cube = Box1::new(vec![-1.0; dim], 1.5).unwrap();
        let rule = grid.rule(&cube, &[]).unwrap();
        let n = grid.nodes_per_axis(cube.side());
        let count_defect = (rule.len() as f64 - (n as f64).powi(dim as i32)).abs();
        s.check("geometry", "node_count", format!("d={dim}"), Ok(count_defect), 0.0);
        let off = (0..rule.len())
            .filter(|&i| {
                rule.point(i)
                    .iter()
                    .zip(cube.corner())
                    .any(|(&x, &c)| !(x > c && x < c + cube.side()))
            })
            .count();
        s.check("geometry", "nodes_interior", format!("d={dim}"), Ok(off as f64), 0.0);

        let f = field(["exp(x1)", "exp(x1)*(1 + x2*x2)", "exp(x1 - x3)*(1 + x2*x2)"][dim - 1], &d);
        let grid = Grid::from_refinement(5);
        let cube = Box1::new(vec![-1.0; dim], 1.0).unwrap();
        let additivity = (|| {
            let whole = integrate(&f, &cube, &grid)?;
            let mut parts = 0.0;
            for child in cube.children() {
                parts += integrate(&f, &child, &grid)?;
            }
            Ok(rel(parts, whole))
        })();
        s.check("geometry", "quadrature_additivity", format!("d={dim}"), additivity, 1e-12);
    }

    let d = dom(1, 2.0);
    let f = field("exp(x1)", &d);
    let cube = Box1::new(vec![0.0], 1.0).unwrap();
    let exact = std::f64::consts::E - 1.0;
    let ratio = (|| {
        let coarse = integrate(&f, &cube, &Grid::from_refinement(4))? - exact;
        let fine = integrate(&f, &cube, &Grid::from_refinement(5))? - exact;
        Ok((fine / coarse - 0.25).abs())
    })();
    s.check("geometry", "refinement_convergence", "exp on [0,1], h=2^-4 vs 2^-5".into(), ratio, 0.01);
}

fn norm_checks(s: &mut Suite) {
    let d = dom(1, 8.0);
    let grid = Grid::from_refinement(8);
    let opts = s.opts;
    for k in 0..s.cases {
        let fsrc = s.positive_src();
        let f = field(&fsrc, &d);
        let psrc = s.lh_exponent_src(1100, 4000);
        let p = exponent(&psrc, &d);
        let cube = s.random_cube(&d);
        let case = format!("{k}: f={fsrc} p={psrc}");

        let base = luxemburg_norm(&f, &p, &cube, &grid, &opts);
        let c = s.coef(-5000, 5000, 1000.0);
        let scaling = base.clone().and_then(|b| {
            let scaled = luxemburg_norm(&f.scale(c), &p, &cube, &grid, &opts)?.value;
            Ok(rel(scaled, c.abs() * b.value))
        });
        s.check("norms", "scaling", format!("{case} c={c}"), scaling, 10.0 * opts.rtol);

        let t = s.coef(1, 2000, 1000.0);
        let mono = base.clone().and_then(|b| {
            let g = f.add(&field(&format!("{t}*abs(x1)"), &d))?;
            let big = luxemburg_norm(&g, &p, &cube, &grid, &opts)?.value;
            Ok(((b.value - big) / big).max(0.0))
        });
        s.check("norms", "monotonicity", format!("{case} t={t}"), mono, 10.0 * opts.rtol);

        let slack = 10.0 * opts.rtol * p.p_plus();
        let at_value = base.clone().map(|b| (b.modular_at_value - 1.0).abs());
        s.check("norms", "modular_at_norm", case.clone(), at_value, slack);
        let bracket = base.map(|b| {
            if b.bracket.0 <= b.value && b.value <= b.bracket.1 {
                (b.bracket.1 - b.bracket.0) / b.bracket.0
            } else {
                f64::INFINITY
            }
        });
        s.check("norms", "bracket_width", case.clone(), bracket, opts.rtol * (1.0 + 1e-9));

        let sv = s.coef(500, 3000, 1000.0);
        let homog = check_homogeneity(&f, &p, sv, &cube, &grid, &opts).map(|r| r.value);
        s.check("norms", "homogeneity", format!("{case} s={sv}"), homog, 10.0 * opts.rtol);

        let pc = s.coef(1000, 6000, 1000.0);
        let pconst = Exponent::constant(pc, &d).unwrap();
        let agree = (|| {
            let n = luxemburg_norm(&f, &pconst, &cube, &grid, &opts)?.value;
            let direct = integrate(&f.abs().pow_const(pc), &cube, &grid)?.powf(1.0 / pc);
            Ok(rel(n, direct))
        })();
        s.check("norms", "constant_exponent_agreement", format!("{k}: p={pc}"), agree, 1e-9);

        let p1src = s.lh_exponent_src(2000, 4000);
        let p2src = s.lh_exponent_src(2000, 4000);
        let (p1, p2) = (exponent(&p1src, &d), exponent(&p2src, &d));
        let holder = (|| {
            let target = Exponent::from_reciprocal(p1.reciprocal().add(&p2.reciprocal())?)?;
            let g = field(&s.positive_src(), &d);
            let r = check_holder(&[(f.clone(), p1.clone()), (g, p2.clone())], &target, &cube, &grid, &opts)?;
            Ok(r.ratio / r.bound)
        })();
        s.check("norms", "holder_bound", format!("{k}: p1={p1src} p2={p2src}"), holder, 1.0);
    }

    let zero = luxemburg_norm(&field("0", &d), &exponent("2", &d), &d.as_cube(), &grid, &opts).map(|r| r.value);
    s.check("norms", "zero_function", "f=0".into(), zero, 0.0);

    let fam = enumerate_dyadic(&d, 4, 1).unwrap();
    let ratio = char_norm_ratio(&exponent("2.5", &d), &fam, &Grid::from_refinement(4), &opts)
        .map(|r| (r.max - 1.0).abs().max((r.min - 1.0).abs()));
    s.check("norms", "char_norm_constant", "p=2.5, D=4".into(), ratio, 1e-9);
}

fn weight_checks(s: &mut Suite) {
    let d = dom(1, 8.0);
    let opts = s.opts;
    let depth = s.max_depth;
    let fam = enumerate_dyadic(&d, depth, 1).unwrap();
    let grid = varexp::scan_grid(&d, depth, 4);
    let one = field("1", &d);

    for k in 0..3 {
        let pc = s.coef(1100, 6000, 1000.0);
        let p = Exponent::constant(pc, &d).unwrap();
        let trivial = apq_constant(&one, &p, &p, 0.0, &fam, &grid, &opts).map(|r| {
            r.records
                .iter()
                .map(|c| c.value.map_or(f64::INFINITY, |v| (v - 1.0).abs()))
                .fold(0.0, f64::max)
        });
        s.check("weights", "trivial_weight", format!("{k}: p=q={pc}"), trivial, 1e-9);
    }

    let configs = [
        ("pow(abs(x1), 0.25)", "2", "2", 0.0),
        ("pow(abs(x1), -0.2)", "3", "3", 0.0),
        ("pow(abs(x1), 0.1)", "2", "4", 0.25),
        ("pow(abs(x1), 0.1)", &format!("2 + 0.5/log({E} + abs(x1))") as &str, "", 0.0),
    ];
    for (k, &(wsrc, psrc, qsrc, gamma)) in configs.iter().enumerate() {
        let w = field(wsrc, &d);
        let p = exponent(psrc, &d);
        let q = if qsrc.is_empty() { p.clone() } else { exponent(qsrc, &d) };
        let case = format!("{k}: w={wsrc} p={psrc} gamma={gamma}");
        let full = apq_constant(&w, &p, &q, gamma, &fam, &grid, &opts);

        let enlarge = full.clone().and_then(|r| {
            let small = apq_constant(&w, &p, &q, gamma, &fam.truncated(depth - 1), &grid, &opts)?;
            Ok((small.estimate - r.estimate).max(0.0))
        });
        s.check("weights", "family_enlargement", case.clone(), enlarge, 0.0);

        let running = full.clone().map(|r| {
            r.per_level_max.windows(2).map(|w| (w[0].1 - w[1].1).max(0.0)).fold(0.0, f64::max)
        });
        s.check("weights", "running_max_monotone", case.clone(), running, 0.0);

        let dual = full.clone().and_then(|r| {
            let (wd, pd, qd) = duality_swap(&w, &p, &q)?;
            let other = apq_constant(&wd, &pd, &qd, gamma, &fam, &grid, &opts)?;
            Ok(rel(other.estimate, r.estimate))
        });
        s.check("weights", "duality", case.clone(), dual, 1e-10);

        let recovery = full.and_then(|r| {
            let spec = PairSpec::full_range(gamma)?;
            let lim = limited_constant(&w, &p, &q, &spec, &fam, &grid, &opts)?;
            Ok(rel(lim.estimate, r.estimate))
        });
        s.check("weights", "full_range_recovery", case.clone(), recovery, 1e-10);

        if gamma > 0.0 {
            let st = scaling_transform(&w, &q, gamma).map(|(ws, qs)| {
                s.points(&d, 100)
                    .iter()
                    .filter(|x| x[0] != 0.0)
                    .map(|x| {
                        rel(ws.eval(x), w.eval(x).powf(1.0 / (1.0 - gamma)))
                            .max(rel(qs.eval(x), q.eval(x) * (1.0 - gamma)))
                    })
                    .fold(0.0, f64::max)
            });
            s.check("weights", "scaling_transform", case, st, 1e-14);
        }
    }

    let u = field("pow(abs(x1), -0.3)", &d).with_singular_point(vec![0.0]);
    let r = exponent("2", &d);
    let small = enumerate_dyadic(&d, depth.min(4), 1).unwrap();
    let rhi = rhi_probe(&u, &r, &small, &[1.0, 1.2], 4.0, &varexp::scan_grid(&d, depth.min(4), 4), &opts)
        .map(|rep| (rep.levels[0].max_ratio - 1.0).abs());
    s.check("weights", "rhi_unit_exponent", "u=|x|^-0.3, r=2".into(), rhi, 0.0);
}

fn factorize_checks(s: &mut Suite) {
    let d = dom(1, 8.0);
    let fam = enumerate_dyadic(&d, 3, 1).unwrap();
    let grid = varexp::scan_grid(&d, 3, 4);
    let opts = FactorizeOptions {
        samples: 1000,
        seed: s.rng.gen(),
        constants: false,
        norm: s.opts,
        ..FactorizeOptions::default()
    };

    let p = exponent(&format!("2 + 0.5/log({E} + abs(x1))"), &d);
    let w = field("pow(abs(x1), 0.1)", &d);
    let fixed = FactorizationInput {
        p: p.clone(),
        q: p.clone(),
        p1: p.clone(),
        q1: p.clone(),
        w: w.clone(),
        w1: w.clone(),
        gamma: 0.0,
        theta: 0.3,
        spec: None,
    };
    let fp = factorize_full_range(&fixed, &fam, &grid, &opts).map(|r| {
        s.points(&d, 1000)
            .iter()
            .filter(|x| x[0] != 0.0)
            .map(|x| {
                rel(r.p0.eval(x), p.eval(x))
                    .max(rel(r.q0.eval(x), p.eval(x)))
                    .max(rel(r.w0.eval(x), w.eval(x)))
            })
            .fold(0.0, f64::max)
    });
    s.check("factorize", "fixed_point", "p1=p, q1=q, w1=w".into(), fp, 1e-14);

    let mut last_gap = f64::INFINITY;
    let mut increases = 0usize;
    let p1 = exponent("4", &d);
    for theta in [0.2, 0.1, 0.05, 0.025] {
        let gap = factor_exponents(&p, &p1, theta).map(|p0| {
            s.points(&d, 200).iter().map(|x| (p0.eval(x) - p.eval(x)).abs()).fold(0.0, f64::max)
        });
        if let Ok(g) = gap {
            if g >= last_gap {
                increases += 1;
            }
            last_gap = g;
        } else {
            increases += 1;
        }
    }
    s.check("factorize", "theta_continuity", "theta -> 0".into(), Ok(increases as f64), 0.0);

    for k in 0..s.cases.min(10) {
        let psrc = s.lh_exponent_src(1500, 2500);
        let p1src = s.lh_exponent_src(3000, 4000);
        let a = s.coef(-100, 100, 1000.0);
        let a1 = s.coef(-100, 100, 1000.0);
        let theta = s.coef(50, 300, 1000.0);
        let w = field(&format!("pow(abs(x1), {a})"), &d);
        let w1 = field(&format!("pow(abs(x1), {a1})"), &d);
        let case = format!("{k}: p={psrc} p1={p1src} a={a} a1={a1} theta={theta}");
        let p = exponent(&psrc, &d);
        let p1 = exponent(&p1src, &d);
        let input = FactorizationInput {
            p: p.clone(),
            q: p.clone(),
            p1: p1.clone(),
            q1: p1.clone(),
            w: w.clone(),
            w1: w1.clone(),
            gamma: 0.0,
            theta,
            spec: None,
        };
        let tol = opts.tolerance;
        match factorize_full_range(&input, &fam, &grid, &opts) {
            Ok(r) => {
                let res = r.residuals;
                s.check("factorize", "convexity", case.clone(), Ok(res.exponent_p.max(res.exponent_q)), tol);
                s.check("factorize", "weight_round_trip", case.clone(), Ok(res.weight), tol);
                s.check("factorize", "gamma_preservation", case.clone(), Ok(res.gamma), tol);
                s.check("factorize", "split_identity", case.clone(), Ok(r.split.identity_residual), tol);
                let class = if r.class_report.passed || r.eta_warning { 0.0 } else { 1.0 };
                s.check("factorize", "class_below_eta", case.clone(), Ok(class), 0.0);
            }
            Err(e) => s.check("factorize", "convexity", case.clone(), Err(e), tol),
        }

        let direct = factor_weight(&w, &w1, theta).map(|w0| {
            s.points(&d, 200)
                .iter()
                .filter(|x| x[0] != 0.0)
                .map(|x| rel(w0.eval(x).powf(1.0 - theta) * w1.eval(x).powf(theta), w.eval(x)))
                .fold(0.0, f64::max)
        });
        s.check("factorize", "weight_formula", case, direct, 1e-12);
    }

    let spec = PairSpec::diagonal(2.0, 6.0).unwrap();
    let p = exponent(&format!("3 + 0.5/log({E} + abs(x1))"), &d);
    let p1 = exponent("4", &d);
    let input = FactorizationInput {
        p: p.clone(),
        q: p.clone(),
        p1: p1.clone(),
        q1: p1,
        w: field("pow(abs(x1), 0.05)", &d),
        w1: field("pow(abs(x1), 0.02)", &d),
        gamma: 0.0,
        theta: 0.2,
        spec: Some(spec),
    };
    match factorize_limited_range(&input, &fam, &grid, &opts) {
        Ok(r) => {
            let res = r.residuals;
            let case = "diagonal (2,6)".to_string();
            s.check("factorize", "limited_convexity", case.clone(), Ok(res.exponent_p.max(res.exponent_q)), 1e-12);
            s.check("factorize", "limited_cross", case.clone(), Ok(res.cross.unwrap_or(f64::NAN)), 1e-12);
            s.check("factorize", "limited_route", case, Ok(res.route.unwrap_or(f64::NAN)), 1e-12);
        }
        Err(e) => s.check("factorize", "limited_convexity", "diagonal (2,6)".into(), Err(e), 1e-12),
    }

    let affine = TransformedSystem::new(&p, &field("pow(abs(x1), 0.05)", &d), 2.0, 6.0)
        .map(|t| t.affine_residual(SamplingPlan::default_for(1)));
    s.check("factorize", "transform_affine", "p in (2,6)".into(), affine, 1e-14);

    let phi = (|| {
        let mut worst: f64 = 0.0;
        for k in 0..=20 {
            let t = 1.0 / 6.0 + (0.5 - 1.0 / 6.0) * k as f64 / 20.0;
            worst = worst.max((phi_inverse(phi_forward(t, 2.0, 6.0)?, 2.0, 6.0)? - t).abs());
        }
        Ok(worst)
    })();
    s.check("factorize", "phi_round_trip", "(r,s)=(2,6)".into(), phi, 1e-14);
}

/// Runs every invariant; rows appear in a fixed order.
pub fn run(seed: u64, cfg: &VerifyConfig, rtol: f64) -> Vec<Row> {
    let mut s = Suite {
        rng: ChaCha8Rng::seed_from_u64(seed),
        rows: Vec::new(),
        opts: NormOptions {
            rtol,
            ..NormOptions::default()
        },
        cases: cfg.cases.max(1),
        max_depth: cfg.max_depth.max(2),
    };
    exponent_checks(&mut s);
    field_checks(&mut s);
    geometry_checks(&mut s);
    norm_checks(&mut s);
    weight_checks(&mut s);
    factorize_checks(&mut s);
    s.rows
}

pub fn table(rows: &[Row], hash: &str) -> Table {
    let mut t = Table::new(&["module", "invariant", "case", "value", "tolerance", "passed"]);
    for r in rows {
        t.push(
            hash,
            vec![
                r.module.into(),
                r.invariant.into(),
                r.case.clone(),
                num(r.value),
                num(r.tolerance),
                r.passed.to_string(),
            ],
        );
    }
    t
}
