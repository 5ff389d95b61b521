use proptest::prelude::*;
use wotlab::costs::*;
use wotlab::hulls::ConvexFn;
use wotlab::measures::{mean, Coupling, DiscreteMeasure, Point};
use wotlab::primal::*;

fn small_1d(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-6i32..7, 1u32..5), 1..=max_atoms).prop_map(|atoms| {
        let pts = atoms.iter().map(|(x, _)| Point::scalar(*x as f64 / 2.0)).collect();
        let w = atoms.iter().map(|(_, w)| *w as f64).collect();
        DiscreteMeasure::normalized(pts, w).unwrap()
    })
}

/// A pair whose plan has at most three free parameters.
fn tiny_pair() -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
    (small_1d(3), small_1d(3)).prop_filter("dof ≤ 3", |(a, b)| (a.len() - 1) * (b.len() - 1) <= 3 && a.len() * b.len() <= 12)
}

fn spread(nu: &DiscreteMeasure, h: f64) -> DiscreteMeasure {
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for (p, m) in nu.iter() {
        for s in [-1.0, 1.0] {
            pts.push(Point::scalar(p.0[0] + s * h));
            w.push(m / 2.0);
        }
    }
    DiscreteMeasure::new(pts, w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn agrees_with_exhaustive_scan((mu, nu) in tiny_pair(), sq in any::<bool>()) {
        let c = if sq { Barycentric::square() } else { Barycentric::abs() };
        let a = solve_primal(&mu, &nu, &c).unwrap();
        let b = solve_primal_exhaustive(&mu, &nu, &c).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-4, "{} vs {}", a.value, b.value);
        let coupling = a.coupling.as_ref().unwrap();
        prop_assert!(coupling.marginal_residual() <= 1e-10);
        prop_assert!((primal_objective(coupling, &c).unwrap() - a.value).abs() <= 1e-8);
        let product = primal_objective(&Coupling::product(&mu, &nu), &c).unwrap();
        prop_assert!(product >= a.value - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn value_monotone_under_cost_domination(mu in small_1d(4), nu in small_1d(4)) {
        // |w| ≤ |w|² + 1/4 pointwise.
        let low = solve_primal(&mu, &nu, &Barycentric::abs()).unwrap().value;
        let high = solve_primal(&mu, &nu, &Barycentric::square()).unwrap().value + 0.25;
        prop_assert!(low <= high + 1e-8);
        let hull = solve_primal(&mu, &nu, &monopolist(ConvexFn::square(), 1).unwrap()).unwrap().value;
        prop_assert!(hull <= solve_primal(&mu, &nu, &Barycentric::square()).unwrap().value + 1e-8);
    }

    #[test]
    fn dilating_nu_never_increases_value(mu in small_1d(3), nu in small_1d(3), h in 1i32..4) {
        let nu2 = spread(&nu, h as f64 / 2.0);
        for c in [Barycentric::abs(), Barycentric::square()] {
            let a = solve_primal(&mu, &nu, &c).unwrap().value;
            let b = solve_primal(&mu, &nu2, &c).unwrap().value;
            prop_assert!(b <= a + 1e-8, "{} after dilation vs {}", b, a);
        }
    }

    #[test]
    fn jensen_for_dirac_sources(x in -3.0f64..3.0, nu in small_1d(4)) {
        let mu = DiscreteMeasure::dirac(Point::scalar(x));
        let c = Barycentric::square();
        let v = solve_primal(&mu, &nu, &c).unwrap().value;
        let expect = (x - mean(&nu).0[0]).powi(2);
        prop_assert!((v - expect).abs() <= 1e-8 * (1.0 + expect));
    }

    #[test]
    fn martingale_feasibility_matches_convex_order(mu in small_1d(3), nu in small_1d(4)) {
        let r = solve_primal(&mu, &nu, &MartingaleIndicator::default()).unwrap();
        let ordered = wotlab::orders::check_convex_order(&mu, &nu).unwrap().verdict;
        prop_assert_eq!(r.value == 0.0, ordered);
        if !ordered {
            prop_assert_eq!(r.status, PrimalStatus::Infeasible);
            prop_assert!(r.certificate.unwrap().margin > 1e-9);
        }
    }
}

#[test]
fn submartingale_infeasibility_is_explained() {
    let mu = DiscreteMeasure::dirac(Point::scalar(1.0));
    let nu = DiscreteMeasure::on_line(&[-1.0, 2.0], &[0.5, 0.5]).unwrap();
    let r = solve_primal(&mu, &nu, &SubmartingaleIndicator::new(1e-9)).unwrap();
    assert_eq!(r.status, PrimalStatus::Infeasible);
    assert!(r.certificate.is_some());
    let r = solve_primal(&DiscreteMeasure::dirac(Point::scalar(0.5)), &nu, &SubmartingaleIndicator::new(1e-9)).unwrap();
    assert_eq!(r.value, 0.0);
}

#[test]
fn exhaustive_guard() {
    let big = DiscreteMeasure::on_line(&[0.0, 1.0, 2.0, 3.0], &[0.25; 4]).unwrap();
    assert!(solve_primal_exhaustive(&big, &big, &Barycentric::abs()).is_err());
}
