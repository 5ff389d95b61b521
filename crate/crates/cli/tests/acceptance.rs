//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p wotlab-cli --test acceptance -- --nocapture`.

use std::process::Command;
use std::time::{Duration, Instant};

use wotlab::verify::{run_check, CheckSummary};

const SEED: u64 = 7;

struct Criterion {
    id: usize,
    title: &'static str,
    checks: &'static [(&'static str, usize)],
    limit: Option<Duration>,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "Strassen equivalence, convex order (kernel LP vs 500-sample separation, margin > 1e-9)",
        checks: &[("strassen_convex_1d", 200), ("strassen_convex_2d", 100)],
        limit: Some(Duration::from_secs(60)),
    },
    Criterion {
        id: 2,
        title: "Strassen equivalence, increasing convex order (submartingale kernels)",
        checks: &[("strassen_icx_1d", 200), ("strassen_icx_2d", 100)],
        limit: None,
    },
    Criterion {
        id: 3,
        title: "restricted duality, |primal - dual| <= 1e-5 (1 + |primal|)",
        checks: &[
            ("duality_barycentric_abs", 50),
            ("duality_barycentric_square", 50),
            ("duality_martingale", 50),
            ("duality_icx_positive_part", 50),
            ("duality_monopolist_abs", 50),
        ],
        limit: Some(Duration::from_secs(300)),
    },
    Criterion {
        id: 4,
        title: "converse witness: primal 1, convex dual <= 1e-8, gap >= 1 - 1e-6",
        checks: &[("converse_gap", 1)],
        limit: None,
    },
    Criterion {
        id: 5,
        title: "hull oracles agree within 1e-9 (1D x100, 2D x30, convex and increasing convex)",
        checks: &[("convex_hull_1d", 100), ("convex_hull_2d", 30), ("iconvex_hull_1d", 100), ("iconvex_hull_2d", 30)],
        limit: None,
    },
    Criterion {
        id: 6,
        title: "conjugate stability, deviation <= 1e-7 (50 functions x 2 costs x 20 probes)",
        checks: &[("conjugate_stability", 50)],
        limit: None,
    },
    Criterion {
        id: 7,
        title: "conv_R schedule nonincreasing, terminal = convex hull within 1e-8 (all hull functions)",
        checks: &[("conv_r_schedule", 260)],
        limit: None,
    },
    Criterion {
        id: 8,
        title: "attainment witness for every monotone-cost dual solve of the duality battery",
        checks: &[("attainment", 50)],
        limit: None,
    },
    Criterion {
        id: 9,
        title: "three-way projection discrepancy <= 1e-5; Brenier-Strassen value 4 +- 1e-6, eta = delta_0",
        checks: &[("three_way_convex", 30), ("three_way_icx", 30), ("brenier_strassen", 1)],
        limit: None,
    },
    Criterion {
        id: 10,
        title: "martingale Benamou-Brenier |primal - dual| <= 1e-4 (1 + |primal|); MCov comonotone fixture",
        checks: &[("martingale_benamou_brenier", 10), ("mcov_comonotone_fixture", 1)],
        limit: None,
    },
];

fn run_criterion(c: &Criterion) -> (bool, String) {
    let start = Instant::now();
    let summaries: Vec<CheckSummary> = c.checks.iter().map(|(name, n)| run_check(name, *n, SEED).expect(name)).collect();
    let elapsed = start.elapsed();
    let in_time = c.limit.is_none_or(|l| elapsed <= l);
    let ok = in_time && summaries.iter().all(CheckSummary::ok);
    let mut detail = String::new();
    for s in &summaries {
        detail +=
            &format!("\n    {:<28} {:>4}/{:<4} worst {:.3e} (tolerance {:.0e})", s.name, s.passed, s.cases, s.worst, s.tolerance);
        for f in s.failures.iter().take(3) {
            detail += &format!("\n      case {} seed {}: {}", f.index, f.seed, f.detail);
        }
    }
    let limit = c.limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
    detail += &format!("\n    elapsed {:.2} s{limit}", elapsed.as_secs_f64());
    (ok, detail)
}

fn verify_report() -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_wotlab"))
        .args(["verify", "--suite", "all", "--seed", &SEED.to_string()])
        .output()
        .expect("run wotlab verify");
    out.stdout
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for c in CRITERIA {
        let (ok, detail) = run_criterion(c);
        println!("{} criterion {}: {}{detail}", if ok { "PASS" } else { "FAIL" }, c.id, c.title);
        if !ok {
            failed.push(c.id);
        }
    }

    let (a, b) = (verify_report(), verify_report());
    let identical = !a.is_empty() && a == b;
    println!(
        "{} criterion 11: verify --suite all --seed {SEED} twice gives byte-identical reports\n    {} bytes each",
        if identical { "PASS" } else { "FAIL" },
        a.len()
    );
    if !identical {
        failed.push(11);
    }

    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
