//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use netgeom::ahlfors::{ahlfors_check, net_count_bounds, net_count_radii};
use netgeom::exact::{frac, int, rational_from_f64, to_f64};
use netgeom::growth::{ball_count_table, fit_growth, geometric_ladder, parse_radii, select_centers, CenterSelection};
use netgeom::hausdorff::hausdorff_estimate;
use netgeom::measure::{normalized_counting_measure, quantize_measure, AtomicMeasure};
use netgeom::nets::{check_net, greedy_net, lipschitz_sandwich, NetOrder, PairSampling};
use netgeom::pipeline::{run_pipeline, PipelinePlan};
use netgeom::regularize::{regularize_degrees, verify_regularization};
use netgeom::spaces::{cantor_tree, tree_ball_card, GridSpec, GroupSpec, SpaceSpec, TreeSpec};
use netgeom::{BallKind, BallSpec, FiniteMetricSpace, Graph, PointId, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid(n: usize) -> FiniteMetricSpace {
    SpaceSpec::Grid(GridSpec::new(&[n, n])).build().unwrap()
}

fn timed(limit_s: f64, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let secs = start.elapsed().as_secs_f64();
    o.pass &= secs < limit_s;
    o.detail.push_str(&format!("; {secs:.2}s (limit {limit_s}s)"));
    o
}

fn c1_tree_growth() -> Outcome {
    timed(10.0, || {
        let s = cantor_tree(&TreeSpec::new(8, 2, 3).unwrap()).unwrap();
        let radii = parse_radii("geometric:1/2187,1,3").unwrap();
        let centers: Vec<PointId> = s.points().collect();
        let table = ball_count_table(&s, &centers, &radii, BallKind::Open).unwrap();
        let fit = fit_growth(&table, &radii[0], &int(1)).unwrap();
        outcome(
            (0.611..=0.651).contains(&fit.lambda),
            format!("lambda={:.4} (target ln2/ln3={:.4} ± 0.02)", fit.lambda, 2f64.ln() / 3f64.ln()),
        )
    })
}

fn c2_tree_oracle() -> Outcome {
    timed(5.0, || {
        let mut mismatches = 0;
        let mut checks = 0u64;
        for depth in 1..=5u32 {
            for (n, m) in [(2u64, 3u64), (3, 4), (2, 5)] {
                let spec = TreeSpec::new(depth, n, m).unwrap();
                let s = cantor_tree(&spec).unwrap();
                let lo = (m as f64).powi(-(depth as i32 + 1));
                let mut radii: Vec<Rational> = (0..=depth).map(|j| Rational::new(1, (m as i128).pow(j))).collect();
                for i in 1..=50 {
                    // log-spaced in ]lo, 1]
                    let x = (lo.ln() * (1.0 - i as f64 / 50.0)).exp();
                    radii.push(rational_from_f64(x).unwrap());
                }
                let lower = Rational::new(1, (m as i128).pow(depth + 1));
                radii.retain(|r| *r > lower && *r <= int(1));
                for leaf in s.points() {
                    for r in &radii {
                        checks += 1;
                        let brute = s.ball_card(&BallSpec::open(leaf.0, *r)).unwrap();
                        if tree_ball_card(&spec, r).unwrap() != brute {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
        outcome(mismatches == 0, format!("{checks} leaf/radius pairs, {mismatches} mismatches"))
    })
}

fn c3_grid() -> Outcome {
    timed(60.0, || {
        let s = grid(256);
        let radii = geometric_ladder(&int(8), &int(64), 2f64.powf(0.25)).unwrap();
        let centers = select_centers(&s, &CenterSelection::Bulk { margin: None }, &int(64)).unwrap();
        let table = ball_count_table(&s, &centers, &radii, BallKind::Open).unwrap();
        let fit = fit_growth(&table, &int(8), &int(64)).unwrap();
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let r_bound = int(65);
        let two = ahlfors_check(&s, &nu, 2.0, &r_bound, &centers, &radii, BallKind::Closed, None).unwrap();
        let three = ahlfors_check(&s, &nu, 3.0, &r_bound, &centers, &radii, BallKind::Closed, None).unwrap();
        outcome(
            (1.95..=2.05).contains(&fit.lambda) && two.spread() <= 4.0 && three.spread() >= 8.0,
            format!(
                "{} centers; lambda={:.4}; K/k at 2 = {:.3}; K/k at 3 = {:.3}",
                centers.len(),
                fit.lambda,
                two.spread(),
                three.spread()
            ),
        )
    })
}

fn fixtures() -> Vec<(&'static str, FiniteMetricSpace)> {
    let heis = SpaceSpec::Cayley {
        group: GroupSpec::heisenberg(),
        cap: 4,
    };
    vec![
        ("grid 20x20", grid(20)),
        (
            "holed grid 16x16 h=1/2",
            SpaceSpec::Grid(GridSpec::new(&[16, 16]).with_spacing(frac(1, 2)).with_hole(&[5, 5], &[9, 9]))
                .build()
                .unwrap(),
        ),
        ("cube 6^3", SpaceSpec::Grid(GridSpec::new(&[6, 6, 6])).build().unwrap()),
        ("tree N=5 n=2 m=3", cantor_tree(&TreeSpec::new(5, 2, 3).unwrap()).unwrap()),
        ("tree N=3 n=3 m=4", cantor_tree(&TreeSpec::new(3, 3, 4).unwrap()).unwrap()),
        (
            "cayley Z^2 cap 8",
            SpaceSpec::Cayley {
                group: GroupSpec::free_abelian(2),
                cap: 8,
            }
            .build()
            .unwrap(),
        ),
        ("heisenberg cap 4", heis.build().unwrap()),
        (
            "cycle Z/30",
            SpaceSpec::Cayley {
                group: GroupSpec::cyclic(30),
                cap: 15,
            }
            .build()
            .unwrap(),
        ),
        ("sierpinski 4", SpaceSpec::Sierpinski { level: 4 }.build().unwrap()),
        ("random explicit 40", random_explicit(40, 11)),
    ]
}

/// Shortest-path metric of a random weighted complete graph.
fn random_explicit(n: usize, seed: u64) -> FiniteMetricSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0i128; n]; n];
    for i in 0..n {
        for j in 0..i {
            let w = rng.random_range(1..=20);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    let rows: Vec<Vec<Rational>> = (0..n).map(|i| (0..i).map(|j| Rational::new(d[i][j], 4)).collect()).collect();
    FiniteMetricSpace::from_lower_triangle(&rows).unwrap()
}

fn deltas_for(s: &FiniteMetricSpace) -> Vec<Rational> {
    let eps = s.min_positive_distance().unwrap();
    vec![eps, eps * int(2), eps * Rational::new(5, 2), eps * int(4)]
}

fn c4_nets() -> Outcome {
    let mut nets = 0;
    let mut failures = Vec::new();
    for (name, s) in fixtures() {
        let all: Vec<PointId> = s.points().collect();
        for delta in deltas_for(&s) {
            for order in [NetOrder::Index, NetOrder::Seeded(3), NetOrder::FarthestPoint] {
                let net = greedy_net(&s, &delta, &order).unwrap();
                let check = check_net(&s, &net, &all).unwrap();
                nets += 1;
                if !check.passed() || check.gap >= delta {
                    failures.push(format!("{name} δ={delta} {order:?}"));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{nets} nets checked; failures: {failures:?}"))
}

fn c5_sandwich() -> Outcome {
    let s = grid(48);
    let unit = greedy_net(&s, &int(1), &NetOrder::Index).unwrap();
    let r1 = lipschitz_sandwich(&s, &unit, &PairSampling::All).unwrap();
    let ones = r1.c_min.as_ref().is_some_and(|c| c.0 == int(1)) && r1.max_ratio == Some(int(1));
    let two = greedy_net(&s, &int(2), &NetOrder::Index).unwrap();
    let r2 = lipschitz_sandwich(&s, &two, &PairSampling::All).unwrap();
    let c2 = r2.c_min.as_ref().map(|c| c.0).unwrap_or(int(0));
    let c2_ok = c2 >= frac(1, 2) && c2 <= int(1);
    let mut violations = r1.violations.len() + r2.violations.len();
    let mut runs = 2;
    for (_, f) in fixtures() {
        for delta in deltas_for(&f) {
            let net = greedy_net(&f, &delta, &NetOrder::Index).unwrap();
            violations += lipschitz_sandwich(&f, &net, &PairSampling::All).unwrap().violations.len();
            runs += 1;
        }
    }
    outcome(
        ones && c2_ok && violations == 0,
        format!(
            "δ=1: all ratios 1 = {ones} over {} pairs; δ=2: c_min={} ; upper violations {violations} over {runs} runs",
            r1.pairs_checked,
            c2
        ),
    )
}

fn c6_quantization() -> Outcome {
    let n = 1000;
    let nu = AtomicMeasure::random_probability(n, 1000, 2024).unwrap();
    let q = quantize_measure(&nu, 10 * n as u64, false).unwrap();
    let bracketing = q.bracketing_violations(&nu);
    let total_ok = q.total_mass_ok(&nu);
    let rep = q.max_subset_error(&nu, 1000, 7).unwrap();
    outcome(
        bracketing.is_empty() && total_ok && rep.max_error <= frac(1, 10) && rep.subsets_checked == 1000,
        format!(
            "bracketing violations {}; total ok {total_ok}; max subset error {:.5} over {} subsets (bound 0.1)",
            bracketing.len(),
            to_f64(&rep.max_error),
            rep.subsets_checked
        ),
    )
}

fn random_bounded_graph(n: usize, max_degree: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deg = vec![0; n];
    let mut edges = std::collections::BTreeSet::new();
    for _ in 0..20 * n {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v && deg[u] < max_degree && deg[v] < max_degree && edges.insert((u.min(v), u.max(v))) {
            deg[u] += 1;
            deg[v] += 1;
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

fn c7_regularization() -> Outcome {
    let random = random_bounded_graph(50, 6, 5);
    let cases = [
        ("K3 k=5", Graph::complete(3), 5),
        ("edge k=5", Graph::path(2), 5),
        ("random 50 k=9", random.clone(), 9),
    ];
    let mut pass = random.max_degree() == 6;
    let mut parts = Vec::new();
    for (name, g, k) in cases {
        let start = Instant::now();
        let r = regularize_degrees(&g, k).unwrap();
        let check = verify_regularization(&r);
        let secs = start.elapsed().as_secs_f64();
        pass &= check.passed() && secs < 5.0;
        parts.push(format!(
            "{name}: {} vertices, {}-regular={}, bridges {}, {secs:.3}s",
            r.spiked.union.n_vertices(),
            k + 1,
            check.passed(),
            r.spiked.bridges.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c8_net_counts() -> Outcome {
    let s = grid(128);
    let delta = int(2);
    let net = greedy_net(&s, &delta, &NetOrder::Index).unwrap();
    let radii: Vec<Rational> = [8, 12, 16, 24, 32].iter().map(|&r| int(r)).collect();
    let r_bound = int(65);
    let centers = select_centers(&s, &CenterSelection::Bulk { margin: Some(int(34)) }, &int(34)).unwrap();
    let nu = normalized_counting_measure(&s, &int(1)).unwrap();
    let cert_radii = net_count_radii(&delta, &radii);
    let cert = ahlfors_check(&s, &nu, 2.0, &r_bound, &centers, &cert_radii, BallKind::Open, None).unwrap();
    let mut violations = 0;
    let mut range = (f64::INFINITY, 0f64);
    let mut band = (0.0, 0.0);
    for &a in centers.iter().step_by(97) {
        let rep = net_count_bounds(&s, &net, 2.0, cert.k, cert.big_k, &r_bound, a, &radii).unwrap();
        violations += rep.violations.len();
        band = (rep.lower, rep.upper);
        for row in &rep.rows {
            range = (range.0.min(row.density), range.1.max(row.density));
        }
    }
    outcome(
        violations == 0,
        format!(
            "k={:.3} K={:.3}; band [{:.4}, {:.2}]; D in [{:.3}, {:.3}]; {violations} violations",
            cert.k, cert.big_k, band.0, band.1, range.0, range.1
        ),
    )
}

fn c9_hausdorff() -> Outcome {
    timed(30.0, || {
        let s = cantor_tree(&TreeSpec::new(8, 2, 3).unwrap()).unwrap();
        let all: Vec<PointId> = s.points().collect();
        let ladder: Vec<Rational> = (0..=8).map(|j| Rational::new(1, 3i128.pow(j))).collect();
        let l0 = 2f64.ln() / 3f64.ln();
        let sums = |l: f64| -> Vec<f64> { hausdorff_estimate(&s, l, &ladder, &all).unwrap().iter().map(|x| x.sum).collect() };
        let (up, mid, down) = (sums(l0 + 0.2), sums(l0), sums(l0 - 0.2));
        let decreasing = up.windows(2).all(|w| w[1] < w[0]) && up[8] < 0.2 * up[0];
        let increasing = down.windows(2).all(|w| w[1] > w[0]) && down[8] > 5.0 * down[0];
        let max = mid.iter().cloned().fold(f64::MIN, f64::max);
        let min = mid.iter().cloned().fold(f64::MAX, f64::min);
        outcome(
            decreasing && increasing && max / min <= 10.0,
            format!(
                "+0.2: {:.4}→{:.4}; -0.2: {:.4}→{:.4}; at ln2/ln3 max/min={:.6}",
                up[0], up[8], down[0], down[8], max / min
            ),
        )
    })
}

fn c10_pipeline() -> Outcome {
    let plan = PipelinePlan::from_toml(
        r#"
space = "kind=grid dims=128x128"
delta = "1"
radii = "8.5,10.5,12.5,14.5,17.5,20.5,24.5,28.5,32.5"
lambda = 2.0
lambda_tolerance = 0.05
measure = "counting:1"
quantization = 1
seed = 17
ball = "open"
centers = "bulk"
"#,
    )
    .unwrap();
    let a = run_pipeline(&plan).unwrap();
    let b = run_pipeline(&plan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let da = a.write(dir.path()).unwrap();
    let db = b.write(dir.path()).unwrap();
    let mut identical = da != db;
    for (name, _) in a.artifacts.iter().chain([("report.txt".to_string(), String::new())].iter()) {
        identical &= std::fs::read(da.join(name)).unwrap() == std::fs::read(db.join(name)).unwrap();
    }
    let statuses: Vec<String> = a.stages.iter().map(|s| format!("{}={}", s.name, s.status)).collect();
    let lambda = a.stage("fit_growth").and_then(|s| s.record.get("lambda")).unwrap_or("?").to_string();
    outcome(
        a.passed() && identical,
        format!("{}; lambda={lambda}; rerun byte-identical={identical}", statuses.join(" ")),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 Cantor-tree growth order", c1_tree_growth),
        ("2 tree ball formula vs brute force", c2_tree_oracle),
        ("3 grid dimension recovery and Ahlfors band", c3_grid),
        ("4 net separation and covering", c4_nets),
        ("5 Lipschitz sandwich", c5_sandwich),
        ("6 quantization error", c6_quantization),
        ("7 degree regularization", c7_regularization),
        ("8 net-count bounds", c8_net_counts),
        ("9 Hausdorff dimension threshold", c9_hausdorff),
        ("10 end-to-end pipeline", c10_pipeline),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
