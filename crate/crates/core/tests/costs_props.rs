use std::sync::Arc;

use proptest::prelude::*;
use wotlab::costs::*;
use wotlab::hulls::{ConvexFn, NormKind};
use wotlab::measures::{mean, DiscreteMeasure, Point};
use wotlab::orders::Order;

const GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.0, 1.0, 2.5];

fn grid() -> Vec<Point> {
    GRID.iter().map(|&v| Point::scalar(v)).collect()
}

/// A law on the fixed grid.
fn law() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(0u32..4, GRID.len())
        .prop_filter("nonzero", |w| w.iter().any(|&v| v > 0))
        .prop_map(|w| DiscreteMeasure::normalized(grid(), w.iter().map(|&v| v as f64).collect()).unwrap())
}

fn plugins() -> Vec<SharedCost> {
    vec![
        Arc::new(Barycentric::abs()),
        Arc::new(Barycentric::square()),
        Arc::new(Barycentric { theta: ConvexFn::PiecewiseLinear { slopes: vec![-2.0, 0.5], intercepts: vec![0.0, 0.0] } }),
        Arc::new(IcxPositivePart::new(1.0).unwrap()),
        Arc::new(monopolist(ConvexFn::abs(), 1).unwrap()),
        Arc::new(monopolist(ConvexFn::square(), 1).unwrap()),
        Arc::new(ClassicalLinear::new(PointCost::SqDist)),
        Arc::new(MonotoneHull::new(Arc::new(ClassicalLinear::new(PointCost::AbsY)), Order::Convex)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convex_in_rho(a in law(), b in law(), t in 0.05f64..0.95, x in -2.0f64..2.0) {
        let g = grid();
        let x = Point::scalar(x);
        let mix = a.mix(&b, t).unwrap();
        for c in plugins() {
            let (ca, cb, cm) = (c.evaluate_in(&x, &a, &g).unwrap(), c.evaluate_in(&x, &b, &g).unwrap(), c.evaluate_in(&x, &mix, &g).unwrap());
            if ca.is_finite() && cb.is_finite() {
                prop_assert!(cm <= t * ca + (1.0 - t) * cb + 1e-8, "{}: {cm} > mix of {ca}, {cb}", c.name());
            }
        }
    }

    #[test]
    fn linearizations_are_supporting(a in law(), b in law(), x in -2.0f64..2.0) {
        let g = grid();
        let x = Point::scalar(x);
        for c in plugins() {
            let ca = c.evaluate_in(&x, &a, &g).unwrap();
            let Some(lin) = c.linearize(&x, &a, &g).unwrap() else { continue };
            let cb = c.evaluate_in(&x, &b, &g).unwrap();
            let bound = ca + b.integrate_table(&g, &lin).unwrap() - a.integrate_table(&g, &lin).unwrap();
            prop_assert!(cb >= bound - 1e-7, "{}: {cb} < {bound}", c.name());
        }
    }

    #[test]
    fn row_model_reproduces_evaluation(a in law(), x in -2.0f64..2.0) {
        let g = grid();
        let x = Point::scalar(x);
        for c in plugins() {
            let direct = c.evaluate_in(&x, &a, &g).unwrap();
            let model = evaluate_by_model(c.as_ref(), &x, &a, &g).unwrap().map_or(f64::INFINITY, |v| v.0);
            prop_assert!((direct - model).abs() <= 1e-7 * (1.0 + direct.abs()), "{}: {direct} vs {model}", c.name());
        }
    }

    #[test]
    fn hull_is_below_inner_and_monotone(a in law(), x in -2.0f64..2.0) {
        let g = grid();
        let x = Point::scalar(x);
        let inner = Barycentric::square();
        let hull = monopolist(ConvexFn::square(), 1).unwrap();
        prop_assert!(hull.evaluate_in(&x, &a, &g).unwrap() <= inner.evaluate(&x, &a).unwrap() + 1e-9);
    }

    #[test]
    fn mcov_concave_and_bounded(a in law(), b in law(), t in 0.05f64..0.95) {
        let gamma = gauss_hermite(8, 1).unwrap();
        let mix = a.mix(&b, t).unwrap();
        let (va, vb, vm) = (mcov(&a, &gamma).unwrap(), mcov(&b, &gamma).unwrap(), mcov(&mix, &gamma).unwrap());
        prop_assert!(vm >= t * va + (1.0 - t) * vb - 1e-8);
        let c = NegativeMcov::new(gamma, 1e-9);
        let x = mean(&a);
        let v = c.evaluate(&x, &a).unwrap();
        let lb = c.metadata().lower_bound.unwrap();
        prop_assert!(v >= -lb.eval(&a) - 1e-9);
    }

    #[test]
    fn declared_lower_bounds_hold(a in law(), x in -2.0f64..2.0) {
        let g = grid();
        let x = Point::scalar(x);
        for c in plugins() {
            if let Some(lb) = c.metadata().lower_bound {
                prop_assert!(c.evaluate_in(&x, &a, &g).unwrap() >= -lb.eval(&a) - 1e-9);
            }
        }
    }
}

#[test]
fn declared_monotone_costs_pass_sampling() {
    let cases: Vec<(SharedCost, Order, usize)> = vec![
        (Arc::new(monopolist(ConvexFn::abs(), 1).unwrap()), Order::IncreasingConvex, 1),
        (Arc::new(IcxPositivePart::new(1.0).unwrap()), Order::IncreasingConvex, 2),
        (Arc::new(Barycentric::new(ConvexFn::Norm { norm: NormKind::L1, scale: 1.0 }, 2).unwrap()), Order::Convex, 2),
        (Arc::new(MartingaleIndicator::default()), Order::Convex, 2),
        (Arc::new(NegativeMcov::standard(1, 8, 1e-9).unwrap()), Order::Convex, 1),
        (Arc::new(ClassicalLinear::new(PointCost::NegInner)), Order::Convex, 1),
    ];
    for (c, order, d) in cases {
        assert!(c.metadata().decreasing_in(&order), "{}", c.name());
        let r = check_monotonicity(c.as_ref(), &order, d, 120, 7).unwrap();
        assert_eq!(r.violations, 0, "{}: {:?}", c.name(), r.first_violation);
    }
}

#[test]
fn configs_round_trip() {
    let json = r#"[
        {"cost": "barycentric", "params": {"theta": {"kind": "squared_norm", "scale": 1.0}}},
        {"cost": "martingale", "params": {}},
        {"cost": "icx_pos", "params": {"q": "inf"}},
        {"cost": "monopolist", "params": {"theta": {"kind": "norm", "norm": "l2", "scale": 1.0}}},
        {"cost": "neg_mcov", "params": {"gauss_nodes": 8}},
        {"cost": "classical", "params": {"c": {"kind": "abs_y"}}}
    ]"#;
    let cfgs: Vec<CostConfig> = serde_json::from_str(json).unwrap();
    for c in &cfgs {
        let back: CostConfig = serde_json::from_str(&serde_json::to_string(c).unwrap()).unwrap();
        assert_eq!(&back, c);
        c.build(1).unwrap();
    }
}
