//! Acceptance suite: one pass/fail line per criterion, with its runtime
//! against the budget. Exits nonzero if any criterion fails.

use std::f64::consts::E;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varexp::{
    apq_constant, check_holder, check_homogeneity, conjugate, depth_scan, enumerate_dyadic,
    factorize_full_range, factorize_limited_range, limited_constant, luxemburg_norm, phi_exponent,
    relative_change, rhi_probe, scan_grid, Box1, Domain, Exponent, FactorizationInput,
    FactorizeOptions, Field, Grid, NormOptions, PairSpec, SamplingPlan, TransformedSystem,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn dom(dim: usize, hw: f64) -> Domain {
    Domain::centered(dim, hw).unwrap()
}

fn field(src: &str, d: &Domain) -> Field {
    Field::parse(src, d).unwrap()
}

fn exponent(src: &str, d: &Domain) -> Exponent {
    Exponent::parse(src, d).unwrap()
}

fn cube(corner: &[f64], side: f64) -> Box1 {
    Box1::new(corner.to_vec(), side).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn opts() -> NormOptions<f64> {
    NormOptions::default()
}

const LOG_E: &str = "2.718281828459045";

/// Closed-form `L^p` norms; the oracle values are written out by hand.
fn c1_constant_exponent() -> Verdict {
    let d1 = dom(1, 4.0);
    let d2 = dom(2, 2.0);
    let grid = Grid::from_refinement(16);
    let u = cube(&[0.0], 1.0);
    let cases: Vec<(&str, f64, Box1, &Domain, f64)> = vec![
        ("1", 1.5, u.clone(), &d1, 1.0),
        ("3", 2.5, cube(&[0.0], 2.0), &d1, 3.0 * 2f64.powf(1.0 / 2.5)),
        ("x1", 2.0, u.clone(), &d1, (1.0f64 / 3.0).sqrt()),
        ("x1", 3.0, u.clone(), &d1, 0.25f64.powf(1.0 / 3.0)),
        ("x1*x1", 2.0, u.clone(), &d1, 0.2f64.sqrt()),
        ("x1*x1", 3.0, u.clone(), &d1, (1.0f64 / 7.0).powf(1.0 / 3.0)),
        ("x1*x1*x1", 1.5, u.clone(), &d1, (1.0f64 / 5.5).powf(1.0 / 1.5)),
        ("exp(x1)", 2.0, u.clone(), &d1, ((E * E - 1.0) / 2.0).sqrt()),
        ("exp(x1)", 4.0, u.clone(), &d1, ((E.powi(4) - 1.0) / 4.0).powf(0.25)),
        ("exp(-x1)", 3.0, cube(&[0.0], 2.0), &d1, ((1.0 - (-6.0f64).exp()) / 3.0).powf(1.0 / 3.0)),
        ("1 + x1", 2.0, u.clone(), &d1, (7.0f64 / 3.0).sqrt()),
        ("1 + x1", 5.0, u.clone(), &d1, (63.0f64 / 6.0).powf(0.2)),
        ("2*x1", 2.0, u.clone(), &d1, 2.0 / 3f64.sqrt()),
        ("abs(x1)", 2.0, cube(&[-1.0], 2.0), &d1, (2.0f64 / 3.0).sqrt()),
        ("x1", 4.0, cube(&[1.0], 2.0), &d1, ((243.0 - 1.0) / 5.0f64).powf(0.25)),
        ("pow(x1, 0.5)", 2.0, u.clone(), &d1, 0.5f64.sqrt()),
        ("pow(x1, 1.5)", 2.0, u.clone(), &d1, 0.5),
        ("exp(2*x1)", 1.5, u, &d1, ((E.powi(3) - 1.0) / 3.0).powf(1.0 / 1.5)),
        ("2", 3.0, cube(&[0.0, 0.0], 1.0), &d2, 2.0),
        ("1", 2.0, cube(&[-1.0, -1.0], 2.0), &d2, 2.0),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_case = "";
    for (src, p, q, d, exact) in &cases {
        let grid = if d.dim() == 2 { Grid::from_refinement(6) } else { grid.clone() };
        let got = luxemburg_norm(&field(src, d), &Exponent::constant(*p, d).unwrap(), q, &grid, &opts())
            .unwrap()
            .value;
        let e = rel(got, *exact);
        if e > worst {
            worst = e;
            worst_case = src;
        }
    }
    verdict(
        worst <= 1e-8,
        format!("{} pairs, max rel err {worst:.2e} ({worst_case}) <= 1e-8", cases.len()),
    )
}

fn random_positive(rng: &mut ChaCha8Rng) -> String {
    let a = rng.gen_range(0.5..3.0);
    let b = rng.gen_range(-0.5..0.5);
    let c = rng.gen_range(0.0..0.5);
    format!("{a} + {b}*x1/(1 + x1*x1) + {c}*exp(-x1*x1)")
}

fn random_exponent(rng: &mut ChaCha8Rng, lo: f64, hi: f64, variable: bool) -> String {
    let a = rng.gen_range(lo..hi);
    if !variable {
        return format!("{a}");
    }
    let b = rng.gen_range(0.0..1.5);
    let c = rng.gen_range(-1.0..1.0);
    format!("{a} + {b}/log({LOG_E} + abs(x1 - {c}))")
}

fn c2_homogeneity() -> Verdict {
    let d = dom(1, 4.0);
    let grid = Grid::from_refinement(10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut variable = 0;
    let mut failed = 0;
    for k in 0..50 {
        let is_var = k % 2 == 1;
        variable += is_var as usize;
        let f = field(&random_positive(&mut rng), &d);
        let p = exponent(&random_exponent(&mut rng, 1.1, 4.0, is_var), &d);
        let s = rng.gen_range(0.5..3.0);
        let side = rng.gen_range(0.5..3.0);
        let q = cube(&[rng.gen_range(-4.0..(4.0 - side))], side);
        let r = check_homogeneity(&f, &p, s, &q, &grid, &opts()).unwrap();
        worst = worst.max(r.value);
        failed += (r.value > 1e-9) as usize;
    }
    verdict(
        failed == 0,
        format!("50 cases ({variable} variable p), max discrepancy {worst:.2e} <= 1e-9"),
    )
}

fn c3_holder() -> Verdict {
    let d = dom(1, 4.0);
    let grid = Grid::from_refinement(10);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_var: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    let mut ok = true;
    for k in 0..100 {
        let m = 2 + k % 2;
        let constant = (k / 2) % 2 == 0;
        let lo = m as f64;
        let factors: Vec<(Field, Exponent)> = (0..m)
            .map(|_| {
                (
                    field(&random_positive(&mut rng), &d),
                    exponent(&random_exponent(&mut rng, lo, lo + 3.0, !constant), &d),
                )
            })
            .collect();
        let recip = factors[1..]
            .iter()
            .fold(factors[0].1.reciprocal(), |acc, (_, p)| acc.add(&p.reciprocal()).unwrap());
        let target = Exponent::from_reciprocal(recip).unwrap();
        let side = rng.gen_range(0.5..3.0);
        let q = cube(&[rng.gen_range(-4.0..(4.0 - side))], side);
        let r = check_holder(&factors, &target, &q, &grid, &opts()).unwrap();
        ok &= r.passed;
        if constant {
            worst_const = worst_const.max(r.ratio);
            ok &= r.ratio <= 1.0;
        } else {
            worst_var = worst_var.max(r.ratio / r.bound);
        }
    }
    verdict(
        ok,
        format!("100 cases, max ratio/5^(m-1) {worst_var:.3} (variable), max ratio {worst_const:.12} <= 1 (constant)"),
    )
}

fn c4_trivial_weight() -> Verdict {
    let d = dom(1, 8.0);
    let one = field("1", &d);
    let two = Exponent::constant(2.0, &d).unwrap();
    let full = PairSpec::full_range(0.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut worst_limited: f64 = 0.0;
    let mut families = 0;
    for depth in 0..=10 {
        for shifts in 0..=1 {
            let fam = enumerate_dyadic(&d, depth, shifts).unwrap();
            let grid = scan_grid(&d, depth, 2);
            let a = apq_constant(&one, &two, &two, 0.0, &fam, &grid, &opts()).unwrap();
            let l = limited_constant(&one, &two, &two, &full, &fam, &grid, &opts()).unwrap();
            for (ra, rl) in a.records.iter().zip(&l.records) {
                let (va, vl) = (ra.value.unwrap(), rl.value.unwrap());
                worst = worst.max((va - 1.0).abs());
                worst_limited = worst_limited.max(rel(vl, va));
            }
            families += 1;
        }
    }
    verdict(
        worst <= 1e-9 && worst_limited <= 1e-10,
        format!("{families} families, max |K-1| {worst:.2e} <= 1e-9, limited vs apq {worst_limited:.2e} <= 1e-10"),
    )
}

fn c5_duality() -> Verdict {
    let d = dom(1, 8.0);
    let fam = enumerate_dyadic(&d, 6, 1).unwrap();
    let grid = scan_grid(&d, 6, 8);
    let lh = format!("2 + 0.5/log({LOG_E} + abs(x1))");
    let configs: [(&str, &str, &str, f64); 10] = [
        ("0.25", "2", "2", 0.0),
        ("-0.25", "2", "2", 0.0),
        ("0.1", "3", "3", 0.0),
        ("0.2", "1.5", "1.5", 0.0),
        ("0.1", "2", "4", 0.25),
        ("-0.1", "2", "4", 0.25),
        ("0.05", "1.3333333333333333", "4", 0.5),
        ("0.1", &lh, &lh, 0.0),
        ("-0.1", &lh, &lh, 0.0),
        ("0.3", "4", "4", 0.0),
    ];
    let mut worst: f64 = 0.0;
    for (a, p, q, gamma) in configs {
        let w = field(&format!("pow(abs(x1), {a})"), &d);
        let (p, q) = (exponent(p, &d), exponent(q, &d));
        let k = apq_constant(&w, &p, &q, gamma, &fam, &grid, &opts()).unwrap();
        let kd = apq_constant(&w.recip(), &conjugate(&q).unwrap(), &conjugate(&p).unwrap(), gamma, &fam, &grid, &opts())
            .unwrap();
        worst = worst.max(rel(kd.estimate, k.estimate));
    }
    verdict(worst <= 1e-10, format!("10 power weights, max rel gap {worst:.2e} <= 1e-10"))
}

fn c6_dichotomy() -> Verdict {
    let d = dom(1, 8.0);
    let two = Exponent::constant(2.0, &d).unwrap();
    let depths: Vec<u32> = (8..=12).collect();
    let scan = |src: &str| {
        let w = field(src, &d);
        depth_scan(&d, &depths, 1, 16, |fam, grid| apq_constant(&w, &two, &two, 0.0, fam, grid, &opts())).unwrap()
    };
    let good = scan("pow(abs(x1), 0.25)");
    let bad = scan("abs(x1)");
    let change = relative_change(good[0].report.estimate, good[4].report.estimate);
    let growth: Vec<f64> = bad.windows(2).map(|w| w[1].report.estimate / w[0].report.estimate).collect();
    let min_growth = growth.iter().cloned().fold(f64::INFINITY, f64::min);
    let near_origin = bad.iter().all(|p| {
        let c = &p.report.witness.as_ref().unwrap().cube;
        c.corner()[0] <= 0.0 && 0.0 <= c.corner()[0] + c.side()
    });
    verdict(
        change < 0.01 && min_growth >= 1.3 && near_origin,
        format!(
            "|x|^1/4: {:.6} -> {:.6} (change {:.3}%), |x|: min growth {min_growth:.3} per level, witnesses touch 0: {near_origin}",
            good[0].report.estimate,
            good[4].report.estimate,
            100.0 * change
        ),
    )
}

fn c7_factorization_sweep() -> Verdict {
    let d = dom(1, 8.0);
    let lh_p = format!("2 + 0.3/log({LOG_E} + abs(x1))");
    let lh_p1 = format!("2.5 + 0.3/log({LOG_E} + abs(x1 - 1))");
    let off_q = |p: &Exponent| Exponent::from_reciprocal(p.reciprocal().offset(-0.25)).unwrap();
    let fixed = format!("2 + 0.5/log({LOG_E} + abs(x1))");
    let pairs: Vec<(&str, Exponent, Exponent, Exponent, Exponent, f64)> = {
        let (pa, pa1) = (exponent("2", &d), exponent("4", &d));
        let (pb, pb1) = (exponent(&lh_p, &d), exponent(&lh_p1, &d));
        let pc = exponent(&fixed, &d);
        vec![
            ("diag const", pa.clone(), pa, pa1.clone(), pa1, 0.0),
            ("off-diag LH", pb.clone(), off_q(&pb), pb1.clone(), off_q(&pb1), 0.25),
            ("fixed", pc.clone(), pc.clone(), pc.clone(), pc, 0.0),
        ]
    };
    let weights = [
        ("pow(abs(x1), 0.1)", "pow(abs(x1), 0.05)"),
        ("pow(abs(x1), -0.05)", "pow(abs(x1), 0.1)"),
        ("pow(abs(x1), 0.1)", "pow(abs(x1), 0.1)"),
    ];
    let fopts = FactorizeOptions {
        samples: 1000,
        constants: false,
        ..FactorizeOptions::default()
    };
    let fam = enumerate_dyadic(&d, 2, 1).unwrap();
    let grid = scan_grid(&d, 2, 4);
    let mut worst: f64 = 0.0;
    let mut worst_change: f64 = 0.0;
    let mut fails = Vec::new();
    let mut runs = 0;
    for theta in [0.05, 0.1, 0.2] {
        for (name, p, q, p1, q1, gamma) in &pairs {
            for (ws, w1s) in weights {
                let input = FactorizationInput {
                    p: p.clone(),
                    q: q.clone(),
                    p1: p1.clone(),
                    q1: q1.clone(),
                    w: field(ws, &d),
                    w1: field(w1s, &d),
                    gamma: *gamma,
                    theta,
                    spec: None,
                };
                runs += 1;
                let r = match factorize_full_range(&input, &fam, &grid, &fopts) {
                    Ok(r) => r,
                    Err(e) => {
                        fails.push(format!("{name} {ws} theta={theta}: {e}"));
                        continue;
                    }
                };
                let res = r.residuals;
                worst = worst.max(res.exponent_p).max(res.exponent_q).max(res.weight).max(res.gamma);
                if !r.class_report.passed {
                    fails.push(format!("{name} {ws} theta={theta}: check_pair failed"));
                }
                let scan = depth_scan(&d, &[4, 5, 6, 7, 8], 1, 8, |fam, grid| {
                    apq_constant(&r.w0, &r.p0, &r.q0, *gamma, fam, grid, &opts())
                })
                .unwrap();
                let change = relative_change(scan[0].report.estimate, scan[4].report.estimate);
                worst_change = worst_change.max(change);
                if !(change < 0.01) {
                    fails.push(format!("{name} {ws} theta={theta}: w0 scan changed {change:.3e}"));
                }
            }
        }
    }
    let detail = format!(
        "{runs} runs, max residual {worst:.2e} <= 1e-12, max w0 scan change D=4..8 {:.3}% < 1%{}",
        100.0 * worst_change,
        if fails.is_empty() { String::new() } else { format!("; failures: {fails:?}") }
    );
    verdict(worst <= 1e-12 && fails.is_empty() && runs == 27, detail)
}

fn c8_limited_consistency() -> Verdict {
    let d = dom(1, 8.0);
    let fam = enumerate_dyadic(&d, 2, 1).unwrap();
    let grid = scan_grid(&d, 2, 4);
    let fopts = FactorizeOptions {
        constants: false,
        ..FactorizeOptions::default()
    };
    let lh = format!("3 + 0.5/log({LOG_E} + abs(x1))");
    let ex = |s: &str| exponent(s, &d);
    // q1 solves 1/q1 = 1/p1 - 1/12 so the pair stays inside the windows.
    let q1_off = Exponent::from_reciprocal(ex("2.5").reciprocal().offset(-1.0 / 12.0)).unwrap();
    let cases: Vec<(&str, FactorizationInput<f64>)> = vec![
        (
            "diagonal (2,6), LH p",
            FactorizationInput {
                p: ex(&lh),
                q: ex(&lh),
                p1: ex("4"),
                q1: ex("4"),
                w: field("pow(abs(x1), 0.05)", &d),
                w1: field("pow(abs(x1), 0.02)", &d),
                gamma: 0.0,
                theta: 0.2,
                spec: Some(PairSpec::diagonal(2.0, 6.0).unwrap()),
            },
        ),
        (
            "off-diagonal gamma=1/12",
            FactorizationInput {
                p: ex("3"),
                q: ex("4"),
                p1: ex("2.5"),
                q1: q1_off,
                w: field("pow(abs(x1), 0.02)", &d),
                w1: field("pow(abs(x1), 0.01)", &d),
                gamma: 1.0 / 12.0,
                theta: 0.1,
                spec: Some(PairSpec::new(1.0 / 12.0, 2.0, 4.0, 2.4, 6.0).unwrap()),
            },
        ),
    ];
    let mut worst_route: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    let mut fails = Vec::new();
    for (name, input) in &cases {
        match factorize_limited_range(input, &fam, &grid, &fopts) {
            Ok(r) => {
                worst_route = worst_route.max(r.residuals.route.unwrap());
                worst_cross = worst_cross.max(r.residuals.cross.unwrap());
            }
            Err(e) => fails.push(format!("{name}: {e}")),
        }
    }

    let mut worst_full: f64 = 0.0;
    let pts = SamplingPlan::Random { count: 1000, seed: 8 }.points(&d);
    for (gamma, p, q, p1, q1) in [(0.0, "2", "2", "4", "4"), (0.25, "2", "4", "2.5", "1/0.15")] {
        let mut input = FactorizationInput {
            p: ex(p),
            q: ex(q),
            p1: ex(p1),
            q1: ex(q1),
            w: field("pow(abs(x1), 0.1)", &d),
            w1: field("pow(abs(x1), -0.05)", &d),
            gamma,
            theta: 0.2,
            spec: None,
        };
        let full = factorize_full_range(&input, &fam, &grid, &fopts).unwrap();
        input.spec = Some(PairSpec::full_range(gamma).unwrap());
        let lim = factorize_limited_range(&input, &fam, &grid, &fopts).unwrap();
        for x in pts.iter().filter(|x| x[0] != 0.0) {
            worst_full = worst_full
                .max(rel(lim.p0.eval(x), full.p0.eval(x)))
                .max(rel(lim.q0.eval(x), full.q0.eval(x)))
                .max(rel(lim.w0.eval(x), full.w0.eval(x)));
        }
        worst_full = worst_full.max(rel(lim.eta_bound, full.eta_bound));
    }
    verdict(
        fails.is_empty() && worst_route <= 1e-12 && worst_cross <= 1e-12 && worst_full <= 1e-12,
        format!(
            "route {worst_route:.2e}, cross {worst_cross:.2e}, full-range spec vs full {worst_full:.2e} (all <= 1e-12){}",
            if fails.is_empty() { String::new() } else { format!("; {fails:?}") }
        ),
    )
}

fn c9_transform_identity() -> Verdict {
    let d = dom(1, 8.0);
    let fam = enumerate_dyadic(&d, 6, 1).unwrap();
    let grid = scan_grid(&d, 6, 8);
    let lh = format!("3 + 0.5/log({LOG_E} + abs(x1))");
    let configs: Vec<(&str, &str, &str, PairSpec)> = vec![
        ("0.05", "3", "3", PairSpec::diagonal(2.0, 6.0).unwrap()),
        ("0.1", "3", "3", PairSpec::diagonal(2.0, 4.0).unwrap()),
        ("-0.05", &lh, &lh, PairSpec::diagonal(2.0, 6.0).unwrap()),
        ("0.02", "3", "4", PairSpec::new(1.0 / 12.0, 2.0, 4.0, 2.4, 6.0).unwrap()),
        ("0.1", "2", "4", PairSpec::full_range(0.25).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for (a, p, q, spec) in &configs {
        let w = field(&format!("pow(abs(x1), {a})"), &d);
        let (p, q) = (exponent(p, &d), exponent(q, &d));
        let run = || -> varexp::Result<f64> {
            let lim = limited_constant(&w, &p, &q, spec, &fam, &grid, &opts())?;
            let t = TransformedSystem::new(&p, &w, spec.r1, spec.s1)?;
            let qt = phi_exponent(&q, spec.r2, spec.s2)?;
            let k = apq_constant(&t.weight, &t.exponent, &qt, 0.0, &fam, &grid, &opts())?;
            Ok(rel(lim.estimate, k.estimate.powf(spec.alpha())))
        };
        match run() {
            Ok(e) => worst = worst.max(e),
            Err(e) => fails.push(format!("w=|x|^{a}: {e}")),
        }
    }
    verdict(
        fails.is_empty() && worst <= 1e-8,
        format!(
            "5 configurations, max rel gap {worst:.2e} <= 1e-8{}",
            if fails.is_empty() { String::new() } else { format!("; {fails:?}") }
        ),
    )
}

fn c10_rhi() -> Verdict {
    let d = dom(1, 8.0);
    let fam = enumerate_dyadic(&d, 6, 1).unwrap();
    let grid = scan_grid(&d, 6, 8);
    let r = Exponent::constant(2.0, &d).unwrap();
    let s_grid = [
        1.005, 1.01, 1.015, 1.02, 1.03, 1.05, 1.1, 1.15, 1.2, 1.24, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 1.95, 2.0,
        2.5,
    ];
    let one = rhi_probe(&field("1", &d), &r, &fam, &s_grid, 4.0, &grid, &opts()).unwrap();
    let unit = one.levels.iter().map(|l| (l.max_ratio - 1.0).abs()).fold(0.0, f64::max);
    let mut s_max = Vec::new();
    for a in [-0.25, -0.4, -0.49] {
        let u = field(&format!("pow(abs(x1), {a})"), &d).with_singular_point(vec![0.0]);
        let rep = rhi_probe(&u, &r, &fam, &s_grid, 4.0, &grid, &opts()).unwrap();
        s_max.push(rep.s_max);
    }
    let finite = s_max.iter().all(|s| s.is_some_and(|v| v.is_finite() && v > 1.0));
    let values: Vec<f64> = s_max.iter().map(|s| s.unwrap_or(f64::NAN)).collect();
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        unit <= 1e-12 && finite && nonincreasing,
        format!("u=1: max |ratio-1| {unit:.1e}; s_max for a=-0.25,-0.4,-0.49: {values:?}"),
    )
}

fn c11_determinism() -> Verdict {
    let run = |dir: &std::path::Path| {
        let args = ["varexp", "verify", "--seed", "7", "--out", dir.to_str().unwrap()];
        let code = varexp_cli::run(args);
        (code, std::fs::read(dir.join("verify.csv")).unwrap_or_default())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    let (ca, xa) = run(a.path());
    let single = start.elapsed();
    let (cb, xb) = run(b.path());
    let rows = xa.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    verdict(
        ca == 0 && cb == 0 && !xa.is_empty() && xa == xb,
        format!("{rows} rows, {} bytes, identical: {}, one run {:.2}s", xa.len(), xa == xb, single.as_secs_f64()),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict, Duration); 11] = [
        (1, "constant-exponent norm agreement", c1_constant_exponent, Duration::from_secs(10)),
        (2, "homogeneity", c2_homogeneity, Duration::from_secs(30)),
        (3, "Holder bound", c3_holder, Duration::from_secs(60)),
        (4, "trivial-weight calibration", c4_trivial_weight, Duration::from_secs(30)),
        (5, "duality", c5_duality, Duration::from_secs(60)),
        (6, "A2 dichotomy probe", c6_dichotomy, Duration::from_secs(60)),
        (7, "factorization identity suite", c7_factorization_sweep, Duration::from_secs(300)),
        (8, "limited-range consistency", c8_limited_consistency, Duration::from_secs(120)),
        (9, "transform constant identity", c9_transform_identity, Duration::from_secs(120)),
        (10, "reverse Holder probe", c10_rhi, Duration::from_secs(180)),
        (11, "determinism of verify --seed 7", c11_determinism, Duration::from_secs(60)),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f, budget) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let took = start.elapsed();
        let ok = v.passed && took <= budget;
        failed += !ok as usize;
        println!(
            "criterion {n:>2} {} {name}: {} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
