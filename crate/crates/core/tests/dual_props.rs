use proptest::prelude::*;
use wotlab::costs::*;
use wotlab::dual::*;
use wotlab::hulls::{convex_hull, inf_convolution, ConvexFn, GridFunction, MaxAffinePotential};
use wotlab::measures::{DiscreteMeasure, Point};
use wotlab::orders::{ConeSpec, SeparatingFunction};
use wotlab::primal::solve_primal;

fn small_1d(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-6i32..7, 1u32..5), 1..=max_atoms).prop_map(|atoms| {
        let pts = atoms.iter().map(|(x, _)| Point::scalar(*x as f64 / 2.0)).collect();
        let w = atoms.iter().map(|(_, w)| *w as f64).collect();
        DiscreteMeasure::normalized(pts, w).unwrap()
    })
}

fn small_2d(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(((-3i32..4, -3i32..4), 1u32..4), 1..=max_atoms).prop_map(|atoms| {
        let pts = atoms.iter().map(|((a, b), _)| Point::new(vec![*a as f64 / 2.0, *b as f64 / 2.0])).collect();
        let w = atoms.iter().map(|(_, w)| *w as f64).collect();
        DiscreteMeasure::normalized(pts, w).unwrap()
    })
}

fn tight() -> DualOptions {
    DualOptions { tol: 1e-8, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convex_dual_matches_primal_for_barycentric(mu in small_1d(5), nu in small_1d(5), sq in any::<bool>()) {
        let c = if sq { Barycentric::square() } else { Barycentric::abs() };
        let p = solve_primal(&mu, &nu, &c).unwrap().value;
        let d = solve_dual_with(&mu, &nu, &c, &DualClass::Convex, &tight()).unwrap();
        prop_assert!(d.value <= p + 1e-8, "weak duality: {} > {}", d.value, p);
        prop_assert!((d.value - p).abs() <= 1e-5, "{} vs {}", d.value, p);
        let own = mu.integrate_table(mu.points(), &d.conjugate_values).unwrap() - nu.integrate_table(&d.grid, &d.psi_on_grid).unwrap();
        prop_assert!((own - d.value).abs() <= 1e-10);
        let w = attainment_witness(&d, &mu, &nu, &c).unwrap();
        prop_assert!(w.passed, "{:?}", w);
    }

    #[test]
    fn icx_dual_matches_primal_for_monotone_costs(mu in small_1d(4), nu in small_1d(4)) {
        for c in [Box::new(monopolist(ConvexFn::abs(), 1).unwrap()) as Box<dyn CostPlugin>, Box::new(IcxPositivePart::new(1.0).unwrap())] {
            let p = solve_primal(&mu, &nu, c.as_ref()).unwrap().value;
            let d = solve_dual_with(&mu, &nu, c.as_ref(), &DualClass::Icx, &tight()).unwrap();
            prop_assert!(d.value <= p + 1e-8);
            prop_assert!((d.value - p).abs() <= 1e-5, "{}: {} vs {}", c.name(), d.value, p);
            let SeparatingFunction::MaxAffine(pot) = &d.potential else { panic!("icx potentials are max-affine") };
            prop_assert!(pot.pieces.iter().all(|q| q.slope.0[0] >= 0.0));
            prop_assert!(attainment_witness(&d, &mu, &nu, c.as_ref()).unwrap().passed);
        }
    }

    #[test]
    fn martingale_dual_is_zero_on_ordered_pairs(mu in small_1d(3), nu in small_1d(4)) {
        let c = MartingaleIndicator::default();
        let ordered = wotlab::orders::check_convex_order(&mu, &nu).unwrap().verdict;
        let d = solve_dual(&mu, &nu, &c, &DualClass::Convex).unwrap();
        if ordered {
            prop_assert!(d.value.abs() <= 1e-6, "{}", d.value);
        } else {
            prop_assert!(d.value > 1e-3 || d.status == DualStatus::Unbounded);
        }
    }

    #[test]
    fn weak_duality_for_every_class(mu in small_1d(4), nu in small_1d(4)) {
        let cost = ClassicalLinear::new(PointCost::SqDist);
        let p = solve_primal(&mu, &nu, &cost).unwrap().value;
        let opts = DualOptions { enforce_class: false, ..Default::default() };
        for class in [DualClass::Convex, DualClass::Icx, DualClass::Cone(ConeSpec::icx())] {
            let d = solve_dual_with(&mu, &nu, &cost, &class, &opts).unwrap();
            prop_assert!(d.value <= p + 1e-8, "{:?}: {} > {}", class, d.value, p);
        }
    }

    #[test]
    fn hull_never_lowers_the_dual_objective(mu in small_1d(4), nu in small_1d(4), vals in prop::collection::vec(-4i32..5, 4)) {
        let c = Barycentric::square();
        let grid = working_grid(&mu, &nu, 0);
        let psi: Vec<f64> = grid.iter().enumerate().map(|(k, _)| vals[k % 4] as f64 / 2.0).collect();
        let f = GridFunction::new(grid.clone(), psi.clone()).unwrap();
        let h = convex_hull(&f);
        let objective = |v: &[f64]| {
            let conj: Vec<f64> = mu.points().iter().map(|x| conjugate_on_grid(v, &c, x, &grid).unwrap().value).collect();
            mu.integrate_table(mu.points(), &conj).unwrap() - nu.integrate_table(&grid, v).unwrap()
        };
        prop_assert!(objective(h.values()) >= objective(&psi) - 1e-8);
    }

    #[test]
    fn hull_stability_for_nonconvex_potentials(vals in prop::collection::vec(-8i32..9, 6), xs in prop::collection::vec(-30i32..31, 20)) {
        let grid: Vec<f64> = vec![-2.0, -1.0, -0.5, 0.5, 1.5, 3.0];
        let psi = GridFunction::on_line(&grid, &vals.iter().map(|&v| v as f64 / 4.0).collect::<Vec<_>>()).unwrap();
        let probes: Vec<Point> = xs.iter().map(|&x| Point::scalar(x as f64 / 10.0)).collect();
        let r = verify_hull_stability(&psi, &Barycentric::square(), &probes, false).unwrap();
        prop_assert!(r.max_deviation <= 1e-7, "{} at {:?}", r.max_deviation, r.worst_x);
        let r = verify_hull_stability(&psi, &monopolist(ConvexFn::square(), 1).unwrap(), &probes[..5], true).unwrap();
        prop_assert!(r.max_deviation <= 1e-7, "icx: {} at {:?}", r.max_deviation, r.worst_x);
    }

    #[test]
    fn barycentric_grid_conjugate_matches_inf_convolution(slopes in prop::collection::vec(-3i32..4, 1..4), x in -2.0f64..2.0) {
        // Lines through the origin kink only at a grid point, and the
        // minimizer x − ψ'/2 stays inside the grid hull, so the grid and
        // grid-free conjugates agree.
        let pieces: Vec<(f64, f64)> = slopes.iter().map(|&v| (v as f64, 0.0)).collect();
        let psi = MaxAffinePotential::on_line(&pieces, false).unwrap();
        let grid: Vec<Point> = (-8..=8).map(|k| Point::scalar(k as f64 / 2.0)).collect();
        let a = c_conjugate(&psi, &Barycentric::square(), &Point::scalar(x), &grid).unwrap();
        let b = inf_convolution(&psi, &ConvexFn::square(), &Point::scalar(x)).unwrap();
        prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn planar_convex_dual_matches_primal(mu in small_2d(3), nu in small_2d(3)) {
        let c = Barycentric::new(ConvexFn::Norm { norm: wotlab::hulls::NormKind::L1, scale: 1.0 }, 2).unwrap();
        let p = solve_primal(&mu, &nu, &c).unwrap().value;
        let d = solve_dual_with(&mu, &nu, &c, &DualClass::Convex, &tight()).unwrap();
        prop_assert!(d.value <= p + 1e-8);
        prop_assert!((d.value - p).abs() <= 1e-5, "{} vs {}", d.value, p);
    }

    #[test]
    fn negative_mcov_shifted_dual_matches_primal(mu in small_1d(3), nu in small_1d(5)) {
        let c = NegativeMcov::standard(1, 8, 1e-9).unwrap();
        let p = solve_primal(&mu, &nu, &c).unwrap();
        let d = solve_dual(&mu, &nu, &c, &DualClass::Convex).unwrap();
        prop_assert!(d.shift.is_some());
        if p.value.is_finite() {
            prop_assert!((d.value - p.value).abs() <= 1e-4, "{} vs {}", d.value, p.value);
        } else {
            prop_assert!(d.value > 1.0 || d.status == DualStatus::Unbounded);
        }
    }
}

#[test]
fn non_monotone_cost_leaves_a_gap() {
    let mu = DiscreteMeasure::dirac(Point::scalar(0.0));
    let nu = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    let g = duality_gap(&mu, &nu, &ClassicalLinear::new(PointCost::AbsY), &DualClass::Convex).unwrap();
    assert!(!g.monotone);
    assert!((g.primal - 1.0).abs() < 1e-9);
    assert!(g.dual <= 1e-9 && g.gap >= 1.0 - 1e-9, "{g:?}");
}

#[test]
fn martingale_gap_closes_on_ordered_marginals() {
    let mu = DiscreteMeasure::on_line(&[-0.5, 0.5], &[0.5, 0.5]).unwrap();
    let nu = DiscreteMeasure::on_line(&[-2.0, 0.0, 2.0], &[0.25, 0.5, 0.25]).unwrap();
    let g = duality_gap(&mu, &nu, &MartingaleIndicator::default(), &DualClass::Convex).unwrap();
    assert!(g.primal == 0.0 && g.dual.abs() <= 1e-6 && g.gap.abs() <= 1e-6, "{g:?}");
}

#[test]
fn constant_potential_on_zero_cost_is_admissible() {
    let grid: Vec<Point> = [0.0, 1.0].iter().map(|&v| Point::scalar(v)).collect();
    let zero = ClassicalLinear::new(PointCost::Table { xs: grid.clone(), ys: grid.clone(), values: vec![vec![0.0; 2]; 2] });
    let mu = DiscreteMeasure::uniform(grid.clone()).unwrap();
    let v = check_admissible(&[2.0, 2.0], &[2.0, 2.0], &mu, &zero, &grid, 16, 1).unwrap();
    assert!(v <= 1e-12);
}

#[test]
fn dual_result_serializes() {
    let mu = DiscreteMeasure::on_line(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
    let d = solve_dual(&mu, &mu, &Barycentric::abs(), &DualClass::Convex).unwrap();
    let json = serde_json::to_string(&d).unwrap();
    let back: DualResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.value, d.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cold_start_ascent_reaches_the_primal_value(mu in small_1d(3), nu in small_1d(3)) {
        let c = Barycentric::abs();
        let p = solve_primal(&mu, &nu, &c).unwrap().value;
        let opts = DualOptions { warm_start: false, tol: 1e-9, max_iterations: 2000, ..Default::default() };
        let d = solve_dual_with(&mu, &nu, &c, &DualClass::Convex, &opts).unwrap();
        prop_assert!(d.value <= p + 1e-8);
        prop_assert!((d.value - p).abs() <= 1e-6, "{} vs {} ({:?})", d.value, p, d.status);
    }
}
