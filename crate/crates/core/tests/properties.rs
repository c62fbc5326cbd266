use proptest::prelude::*;
use varexp::field::{BinOp, Func};
use varexp::{
    check_class, conjugate, estimate_lh_constants, harmonic_mean, integrate, luxemburg_norm, parse_field,
    Box1, Domain, Exponent, Field, FieldExpr, Grid, NormOptions, SamplingPlan,
};

fn dom() -> Domain {
    Domain::centered(1, 4.0).unwrap()
}

fn lh_src(a: f64, b: f64, c: f64) -> String {
    format!("{a} + {b}/log(2.718281828459045 + abs(x1 - {c}))")
}

fn expr(dim: usize) -> impl Strategy<Value = FieldExpr> {
    let leaf = prop_oneof![
        (0u32..200).prop_map(|k| FieldExpr::Num(k as f64 / 16.0)),
        (0..dim).prop_map(FieldExpr::Coord),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| FieldExpr::Neg(Box::new(e))),
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| FieldExpr::Binary(op, Box::new(a), Box::new(b))),
            (prop::sample::select(Func::ALL.to_vec()), prop::collection::vec(inner, 1..4)).prop_filter_map(
                "arity",
                |(f, args)| {
                    let (lo, hi) = f.arity();
                    (args.len() >= lo && args.len() <= hi).then_some(FieldExpr::Call(f, args))
                }
            ),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parser_round_trip(e in expr(3)) {
        let back = parse_field(&e.to_string(), 3).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn field_matches_expression(e in expr(2), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let d = Domain::centered(2, 2.0).unwrap();
        let f = Field::from_expr(e.clone(), &d).unwrap();
        let (a, b) = (f.eval(&[x, y]), e.eval(&[x, y]));
        prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }

    #[test]
    fn pow_const_composes(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -4.0f64..4.0) {
        let f = Field::parse("1.5 + x1*x1", &dom()).unwrap();
        let lhs = f.pow_const(a).pow_const(b).eval(&[x]);
        let rhs = f.pow_const(a * b).eval(&[x]);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs());
    }

    #[test]
    fn conjugate_is_an_involution(a in 1.1f64..4.0, b in 0.0f64..1.5, c in -2.0f64..2.0, x in -4.0f64..4.0) {
        let p = Exponent::parse(&lh_src(a, b, c), &dom()).unwrap();
        let pp = conjugate(&conjugate(&p).unwrap()).unwrap();
        prop_assert!((pp.eval(&[x]) - p.eval(&[x])).abs() <= 1e-14 * p.eval(&[x]));
    }

    #[test]
    fn norm_scales_and_is_monotone(
        a in 1.1f64..4.0, b in 0.0f64..1.0, c in -2.0f64..2.0,
        k in -5.0f64..5.0, t in 0.0f64..2.0,
    ) {
        let d = dom();
        let p = Exponent::parse(&lh_src(a, b, c), &d).unwrap();
        let f = Field::parse("1 + 0.5*exp(-x1*x1)", &d).unwrap();
        let q = Box1::new(vec![-1.0], 2.5).unwrap();
        let grid = Grid::from_refinement(8);
        let opts = NormOptions::default();
        let base = luxemburg_norm(&f, &p, &q, &grid, &opts).unwrap().value;
        let scaled = luxemburg_norm(&f.scale(k), &p, &q, &grid, &opts).unwrap().value;
        prop_assert!((scaled - k.abs() * base).abs() <= 10.0 * opts.rtol * base.max(scaled));
        let g = f.add(&Field::parse(&format!("{t}*abs(x1)"), &d).unwrap()).unwrap();
        let bigger = luxemburg_norm(&g, &p, &q, &grid, &opts).unwrap().value;
        prop_assert!(base <= bigger * (1.0 + 10.0 * opts.rtol));
    }

    #[test]
    fn quadrature_is_additive(x0 in -3.0f64..1.0, k in 0u32..3) {
        let d = dom();
        let f = Field::parse("exp(x1) + x1*x1", &d).unwrap();
        let side = 2f64.powi(-(k as i32));
        let q = Box1::new(vec![x0.floor()], side).unwrap();
        let grid = Grid::from_refinement(6);
        let whole = integrate(&f, &q, &grid).unwrap();
        let parts: f64 = q.children().iter().map(|c| integrate(&f, c, &grid).unwrap()).sum();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs());
    }

    #[test]
    fn lh_estimates_grow_under_refinement(a in 1.1f64..4.0, b in 0.0f64..1.5, c in -2.0f64..2.0, level in 2u32..8) {
        let p = Exponent::parse(&lh_src(a, b, c), &dom()).unwrap();
        let coarse = estimate_lh_constants(&p, SamplingPlan::Lattice { level }).unwrap();
        let fine = estimate_lh_constants(&p, SamplingPlan::Lattice { level: level + 1 }).unwrap();
        prop_assert!(coarse.c0 <= fine.c0);
        prop_assert!(coarse.c_inf <= fine.c_inf);
    }

    #[test]
    fn harmonic_mean_is_linear_in_reciprocals(
        a in 1.1f64..3.0, b in 0.0f64..1.0, a2 in 1.1f64..3.0, t in 0.0f64..1.0, x0 in -4.0f64..2.0,
    ) {
        let d = dom();
        let p1 = Exponent::parse(&lh_src(a, b, 0.3), &d).unwrap();
        let p2 = Exponent::parse(&format!("{a2} + 0.2*exp(-x1*x1)"), &d).unwrap();
        let mix = Exponent::from_reciprocal(
            p1.reciprocal().scale(t).add(&p2.reciprocal().scale(1.0 - t)).unwrap(),
        )
        .unwrap();
        let q = Box1::new(vec![x0], 1.5).unwrap();
        let grid = Grid::from_refinement(7);
        let lhs = 1.0 / harmonic_mean(&mix, &q, &grid).unwrap();
        let rhs = t / harmonic_mean(&p1, &q, &grid).unwrap() + (1.0 - t) / harmonic_mean(&p2, &q, &grid).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs);
    }

    #[test]
    fn diagonal_classes_are_dual(a in 1.05f64..5.0, b in 0.0f64..1.0, r in 1.0f64..2.0, s in 2.5f64..8.0) {
        let p = Exponent::parse(&lh_src(a, b, 0.0), &dom()).unwrap();
        let pc = conjugate(&p).unwrap();
        let dual = |v: f64| if v == 1.0 { f64::INFINITY } else { v / (v - 1.0) };
        let direct = check_class(&p, r, s).unwrap().member;
        let swapped = check_class(&pc, dual(s), dual(r)).unwrap().member;
        prop_assert_eq!(direct, swapped);
    }
}
