use proptest::prelude::*;
use wotlab::hulls::*;
use wotlab::measures::Point;
use wotlab::optim::{solve_lp, LinearProgram, RowSense};

fn grid_1d(xs: &[f64]) -> Vec<Point> {
    let mut v: Vec<f64> = xs.iter().map(|x| (x * 8.0).round() / 8.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.into_iter().map(Point::scalar).collect()
}

/// `inf ρ(f)` over ρ on the grid with `ρ(id) ≥ y` and `ρ((· − k)₊) ≥ (y − k)₊`
/// for every knot `k` of the grid.
fn hinge_oracle(f: &GridFunction, y: f64) -> f64 {
    let xs: Vec<f64> = f.support().iter().map(|p| p.0[0]).collect();
    let mut lp = LinearProgram::minimize();
    let v: Vec<usize> = f.values().iter().map(|&c| lp.add_nonneg(c)).collect();
    lp.add_row(v.iter().map(|&j| (j, 1.0)).collect(), RowSense::Eq, 1.0);
    lp.add_row(v.iter().zip(&xs).map(|(&j, &x)| (j, x)).collect(), RowSense::Ge, y);
    for &k in &xs {
        lp.add_row(v.iter().zip(&xs).map(|(&j, &x)| (j, (x - k).max(0.0))).collect(), RowSense::Ge, (y - k).max(0.0));
    }
    solve_lp(&lp).unwrap().objective
}

proptest! {
    #[test]
    fn hull_1d_matches_enumeration(
        xs in prop::collection::vec(-3.0f64..3.0, 2..12),
        vals in prop::collection::vec(-2.0f64..2.0, 12),
    ) {
        let grid = grid_1d(&xs);
        let f = GridFunction::new(grid.clone(), vals[..grid.len()].to_vec()).unwrap();
        let h = convex_hull(&f);
        for (p, v) in grid.iter().zip(h.values()) {
            prop_assert!((brute_force_hull(&f, p).unwrap() - v).abs() <= 1e-9);
        }
        for (a, b) in h.values().iter().zip(f.values()) {
            prop_assert!(*a <= *b + 1e-12);
        }
        let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(h.values().iter().all(|v| *v >= lo - 1e-12));
    }

    #[test]
    fn hull_2d_matches_enumeration(
        pts in prop::collection::vec((-2i32..3, -2i32..3), 3..10),
        vals in prop::collection::vec(-2.0f64..2.0, 10),
    ) {
        let mut grid: Vec<Point> = Vec::new();
        for (a, b) in pts {
            let p = Point::new(vec![a as f64, b as f64]);
            if !grid.contains(&p) { grid.push(p); }
        }
        let f = GridFunction::new(grid.clone(), vals[..grid.len()].to_vec()).unwrap();
        let h = convex_hull(&f);
        for (p, v) in grid.iter().zip(h.values()) {
            prop_assert!((brute_force_hull(&f, p).unwrap() - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn iconvex_matches_hinge_oracle(
        xs in prop::collection::vec(-3.0f64..3.0, 2..10),
        vals in prop::collection::vec(-2.0f64..2.0, 10),
    ) {
        let grid = grid_1d(&xs);
        let f = GridFunction::new(grid.clone(), vals[..grid.len()].to_vec()).unwrap();
        let h = iconvex_hull(&f);
        for (p, v) in grid.iter().zip(h.values()) {
            prop_assert!((hinge_oracle(&f, p.0[0]) - v).abs() <= 1e-9);
        }
        prop_assert!(h.values().windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn iconvex_2d_monotone_along_axes(vals in prop::collection::vec(-2.0f64..2.0, 9)) {
        let grid: Vec<Point> = (0..9).map(|k| Point::new(vec![(k / 3) as f64, (k % 3) as f64])).collect();
        let f = GridFunction::new(grid, vals).unwrap();
        let h = iconvex_hull(&f);
        let v = h.values();
        for i in 0..3 {
            for j in 0..2 {
                prop_assert!(v[3 * i + j] <= v[3 * i + j + 1] + 1e-9);
                prop_assert!(v[3 * j + i] <= v[3 * (j + 1) + i] + 1e-9);
            }
        }
        let c = convex_hull(&f);
        prop_assert!(v.iter().zip(c.values()).all(|(a, b)| *a <= *b + 1e-9));
    }

    #[test]
    fn hull_is_monotone_in_f(
        xs in prop::collection::vec(-3.0f64..3.0, 2..10),
        vals in prop::collection::vec(-2.0f64..2.0, 10),
        bumps in prop::collection::vec(0.0f64..1.0, 10),
    ) {
        let grid = grid_1d(&xs);
        let n = grid.len();
        let f = GridFunction::new(grid.clone(), vals[..n].to_vec()).unwrap();
        let g = f.with_values((0..n).map(|i| vals[i] + bumps[i]).collect()).unwrap();
        let (hf, hg) = (convex_hull(&f), convex_hull(&g));
        prop_assert!(hf.values().iter().zip(hg.values()).all(|(a, b)| a <= &(b + 1e-12)));
    }

    #[test]
    fn conv_r_decreases_to_hull(
        xs in prop::collection::vec(-3.0f64..3.0, 2..10),
        vals in prop::collection::vec(-2.0f64..2.0, 10),
        pick in 0usize..10,
    ) {
        let grid = grid_1d(&xs);
        let f = GridFunction::new(grid.clone(), vals[..grid.len()].to_vec()).unwrap();
        let y = &grid[pick % grid.len()];
        let full = brute_force_hull(&f, y).unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, f64::INFINITY] {
            let v = conv_r(&f, y, r).unwrap();
            prop_assert!(v <= prev + 1e-12);
            prop_assert!(v >= full - 1e-12);
            prop_assert!(v <= f.value_at(y).unwrap() + 1e-12);
            prev = v;
        }
        prop_assert!((prev - full).abs() <= 1e-8);
        prop_assert!((conv_r(&f, y, 8.0).unwrap() - full).abs() <= 1e-8);
    }

    #[test]
    fn growth_perturbation_decreases(
        xs in prop::collection::vec(-3.0f64..3.0, 2..10),
        vals in prop::collection::vec(-2.0f64..2.0, 10),
    ) {
        let grid = grid_1d(&xs);
        let n = grid.len();
        let f = GridFunction::new(grid.clone(), vals[..n].to_vec()).unwrap();
        let base = convex_hull(&f);
        let mut prev: Option<Vec<f64>> = None;
        for k in [1.0, 2.0, 4.0, 8.0, 16.0, 1e9] {
            let fk = f.with_values((0..n).map(|i| vals[i] + grid[i].norm2_sq() / k).collect()).unwrap();
            let hk = convex_hull(&fk).values().to_vec();
            if let Some(p) = &prev {
                prop_assert!(hk.iter().zip(p).all(|(a, b)| *a <= *b + 1e-12));
            }
            prev = Some(hk);
        }
        let last = prev.unwrap();
        prop_assert!(last.iter().zip(base.values()).all(|(a, b)| (a - b).abs() <= 1e-7));
    }

    #[test]
    fn inf_convolution_matches_scan(
        pieces in prop::collection::vec((-0.9f64..0.9, -1.0f64..1.0), 1..4),
        x in -2.0f64..2.0,
        square in any::<bool>(),
    ) {
        let psi = MaxAffinePotential::on_line(&pieces, false).unwrap();
        let theta = if square { ConvexFn::square() } else { ConvexFn::abs() };
        let v = inf_convolution(&psi, &theta, &Point::scalar(x)).unwrap();
        // Scan z on a fine grid, then refine around the best point.
        let obj = |z: f64| psi.eval(&Point::scalar(z)) + theta.eval(&[x - z]);
        let mut best = (x, obj(x));
        for s in 0..=40000 {
            let z = -20.0 + s as f64 * 1e-3;
            let o = obj(z);
            if o < best.1 { best = (z, o); }
        }
        let center = best.0;
        for s in 0..=20000 {
            let z = center - 1e-3 + s as f64 * 1e-7;
            best.1 = best.1.min(obj(z));
        }
        // Kinks of ψ and of θ(x − ·) are where the minimum sits.
        for p in &psi.pieces {
            for q in &psi.pieces {
                let (g1, g2) = (p.slope.0[0], q.slope.0[0]);
                if (g1 - g2).abs() > 1e-12 {
                    best.1 = best.1.min(obj((q.intercept - p.intercept) / (g1 - g2)));
                }
            }
        }
        best.1 = best.1.min(obj(x));
        prop_assert!((v - best.1).abs() <= 1e-8, "solver {} scan {}", v, best.1);
    }
}
