use noetherq_core::{parse, Binding, Expr};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        (-4i64..=4).prop_map(Expr::int),
        (-5i64..=5, 1i64..=4).prop_map(|(p, q)| Expr::rational(p, q)),
    ]
}

/// Random expressions in `x`, `y` that stay finite on `[-1.5, 1.5]²` apart
/// from division by values near zero.
fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.div(&b.powi(2).add(&Expr::one()))),
            (inner.clone(), 0i64..=3).prop_map(|(a, n)| a.powi(n)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.div(&Expr::int(4)).sin().exp()),
            inner.prop_map(|a| a.powi(2).add(&Expr::one()).sqrt()),
        ]
    })
}

fn at(x: f64, y: f64) -> Binding {
    Binding::new().with("x", x).with("y", y)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivative_matches_central_difference(e in expr(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let d = e.diff("x").eval(&at(x, y)).unwrap();
        let h = 1e-4;
        let f = |x: f64| e.eval(&at(x, y)).unwrap();
        // Fourth-order stencil.
        let fd = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
        let scale = [f(x - 2.0 * h), f(x), f(x + 2.0 * h)].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assume!(scale < 1e4);
        prop_assert!((d - fd).abs() <= 1e-6 * scale.max(d.abs()), "{e}: d/dx = {d}, fd = {fd}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplify_preserves_values(e in expr(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let before = e.eval(&at(x, y)).unwrap();
        let after = e.simplify().eval(&at(x, y)).unwrap();
        prop_assume!(before.abs() < 1e6);
        prop_assert!(close(before, after, 1e-12), "{e}: {before} vs {after}");
    }

    #[test]
    fn print_then_parse_round_trips(e in expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert!(back.sub(&e).is_zero(), "{}", text);
        // Parsing normalizes once; after that printing is a fixed point.
        let normal = back.to_string();
        prop_assert_eq!(parse(&normal).unwrap().to_string(), normal);
    }

    #[test]
    fn difference_with_self_is_zero(e in expr()) {
        prop_assert!(e.sub(&e).is_zero());
        prop_assert!(e.simplify().sub(&e).is_zero());
    }

    #[test]
    fn derivative_is_linear(a in expr(), b in expr(), k in -3i64..=3) {
        let lhs = a.add(&Expr::int(k).mul(&b)).diff("x");
        let rhs = a.diff("x").add(&Expr::int(k).mul(&b.diff("x")));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn product_rule(a in expr(), b in expr()) {
        let lhs = a.mul(&b).diff("y");
        let rhs = a.diff("y").mul(&b).add(&a.mul(&b.diff("y")));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn compiled_matches_tree_walk(e in expr(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let c = e.compile(&["x", "y"], &Binding::new()).unwrap();
        let tree = e.eval(&at(x, y)).unwrap();
        prop_assert!(close(c.eval(&[x, y]).unwrap(), tree, 1e-14));
    }
}
