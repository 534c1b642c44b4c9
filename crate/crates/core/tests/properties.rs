use netgeom::ahlfors::ahlfors_check;
use netgeom::exact::{frac, int};
use netgeom::graph::Graph;
use netgeom::growth::{fit_growth, growth_uniqueness_diag, CountTable};
use netgeom::hausdorff::{audit_vitali, vitali_pack};
use netgeom::length::{ball_nest_witness, NestOutcome};
use netgeom::measure::{normalized_counting_measure, quantize_measure, AtomicMeasure};
use netgeom::nets::{check_net, greedy_net, lipschitz_sandwich, NetOrder, PairSampling};
use netgeom::regularize::{default_k, regularize_degrees, verify_regularization};
use netgeom::spaces::{cantor_tree, tree_ball_card, GridSpec, SpaceSpec, TreeSpec};
use netgeom::{BallKind, BallSpec, FiniteMetricSpace, PointId, Rational};
use proptest::prelude::*;

/// Shortest-path closure of random positive weights, as an explicit space.
fn explicit_space() -> impl Strategy<Value = FiniteMetricSpace> {
    (2usize..14).prop_flat_map(|n| {
        proptest::collection::vec(1i128..30, n * (n - 1) / 2).prop_map(move |w| {
            let mut d = vec![vec![0i128; n]; n];
            let mut it = w.into_iter();
            for i in 0..n {
                for j in 0..i {
                    let x = it.next().unwrap();
                    d[i][j] = x;
                    d[j][i] = x;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                    }
                }
            }
            let rows: Vec<Vec<Rational>> = (0..n).map(|i| (0..i).map(|j| Rational::new(d[i][j], 3)).collect()).collect();
            FiniteMetricSpace::from_lower_triangle(&rows).unwrap()
        })
    })
}

fn small_space() -> impl Strategy<Value = FiniteMetricSpace> {
    prop_oneof![
        explicit_space(),
        (2usize..9, 2usize..9).prop_map(|(a, b)| SpaceSpec::Grid(GridSpec::new(&[a, b])).build().unwrap()),
        (1u32..5, 2u64..4, 3u64..5).prop_map(|(d, n, m)| cantor_tree(&TreeSpec::new(d, n, m).unwrap()).unwrap()),
    ]
}

fn radius() -> impl Strategy<Value = Rational> {
    (0i128..60, 1i128..7).prop_map(|(p, q)| Rational::new(p, q))
}

fn random_graph() -> impl Strategy<Value = Graph> {
    (1usize..16).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (u.min(v), u.max(v)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms_hold(space in small_space()) {
        let ultra = space.tree_spec().is_some();
        prop_assert!(space.verify_metric(50, 1, ultra).unwrap().passed());
    }

    #[test]
    fn balls_grow_and_open_is_inside_closed(space in small_space(), r in radius(), dr in radius(), c in 0usize..1000) {
        let c = c % space.n_points();
        let open = space.ball_members(&BallSpec::open(c, r)).unwrap();
        let closed = space.ball_members(&BallSpec::closed(c, r)).unwrap();
        prop_assert!(open.iter().all(|p| closed.contains(p)));
        let bigger = space.ball_card(&BallSpec::open(c, r + dr)).unwrap();
        prop_assert!(bigger >= open.len() as u64);
        prop_assert_eq!(space.ball_card(&BallSpec::open(c, int(0))).unwrap(), 0);
    }

    #[test]
    fn rescaling_scales_balls(space in small_space(), r in radius(), g in 1i128..7, h in 1i128..5, c in 0usize..1000) {
        let c = c % space.n_points();
        let gamma = Rational::new(g, h);
        let scaled = space.rescale(gamma).unwrap();
        for kind in [BallKind::Open, BallKind::Closed] {
            let a = scaled.ball_card(&BallSpec::new(PointId(c), r, kind).unwrap()).unwrap();
            let b = space.ball_card(&BallSpec::new(PointId(c), r * gamma, kind).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
        let back = scaled.rescale(Rational::new(h, g)).unwrap();
        for y in space.points() {
            prop_assert_eq!(back.distance(PointId(c), y).unwrap(), space.distance(PointId(c), y).unwrap());
        }
    }

    #[test]
    fn tree_formula_matches_enumeration(depth in 1u32..6, n in 2u64..4, m in 3u64..6, leaf in 0u64..10_000, p in 1i128..10_000) {
        let spec = TreeSpec::new(depth, n, m).unwrap();
        let s = cantor_tree(&spec).unwrap();
        let leaf = (leaf % spec.n_leaves()) as usize;
        let q = (m as i128).pow(depth + 1);
        // r = p/q ∈ ]m^-(N+1), 1] after folding
        let r = Rational::new(p % (q - 1) + 2, q);
        prop_assert_eq!(tree_ball_card(&spec, &r).unwrap(), s.ball_card(&BallSpec::open(leaf, r)).unwrap());
    }

    #[test]
    fn nets_are_separated_and_covering(space in small_space(), k in 1i128..5, seed in 0u64..100) {
        let delta = space.min_positive_distance().unwrap_or(int(1)) * Rational::new(k, 2);
        let all: Vec<PointId> = space.points().collect();
        for order in [NetOrder::Index, NetOrder::Seeded(seed), NetOrder::FarthestPoint] {
            let net = greedy_net(&space, &delta, &order).unwrap();
            let check = check_net(&space, &net, &all).unwrap();
            prop_assert!(check.passed());
            prop_assert!(check.gap < delta);
            let sw = lipschitz_sandwich(&space, &net, &PairSampling::All).unwrap();
            prop_assert!(sw.violations.is_empty());
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent(lambda in 0.5f64..3.0, sigma in 100.0f64..1000.0) {
        let radii: Vec<Rational> = (0..8).map(|i| int(1 << i)).collect();
        let table = CountTable {
            counts: vec![radii.iter().map(|r| (sigma * netgeom::exact::to_f64(r).powf(lambda)).round() as u64).collect()],
            radii: radii.clone(),
            centers: vec![PointId(0)],
            kind: BallKind::Closed,
        };
        let fit = fit_growth(&table, &int(1), &int(128)).unwrap();
        prop_assert!((fit.lambda - lambda).abs() < 1e-2);
        prop_assert!(fit.c <= 1.0 + 1e-9 && fit.big_c >= 1.0 - 1e-9);
    }

    #[test]
    fn uniqueness_bound_holds(l1 in 0.5f64..3.0, s1 in 10.0f64..100.0) {
        let radii: Vec<Rational> = (0..6).map(|i| int(1 << i)).collect();
        let table = |l: f64, s: f64| CountTable {
            counts: vec![radii.iter().map(|r| (s * netgeom::exact::to_f64(r).powf(l)).ceil() as u64).collect()],
            radii: radii.clone(),
            centers: vec![PointId(0)],
            kind: BallKind::Closed,
        };
        // both fits describe the same counts, so their exponents must agree within the bound
        let t = table(l1, s1);
        let a = fit_growth(&t, &int(1), &int(32)).unwrap();
        let b = fit_growth(&t, &int(2), &int(16)).unwrap();
        let diag = growth_uniqueness_diag(&a, &b).unwrap();
        prop_assert!(diag.respected);
    }

    #[test]
    fn quantization_invariants(masses in proptest::collection::vec((0i128..50, 1i128..20), 1..12), m in 1u64..40) {
        let nu = AtomicMeasure::from_masses(masses.iter().map(|&(p, q)| Rational::new(p, q)).collect()).unwrap();
        let q = quantize_measure(&nu, m, true).unwrap();
        prop_assert!(q.bracketing_violations(&nu).is_empty());
        prop_assert!(q.total_mass_ok(&nu));
        let rep = q.max_subset_error(&nu, 0, 0).unwrap();
        prop_assert!(rep.exhaustive);
        prop_assert!(rep.passed());
        prop_assert_eq!(q.carrier_len() as u64, q.multiplicities.iter().sum::<u64>());
        for y in 0..q.carrier_len() {
            let x = q.projection(y).unwrap();
            prop_assert!(q.multiplicities[x] > 0);
        }
    }

    #[test]
    fn regularization_is_regular(g in random_graph(), extra in 0usize..2) {
        let k = default_k(&g) + 2 * extra;
        let r = regularize_degrees(&g, k).unwrap();
        let check = verify_regularization(&r);
        prop_assert!(check.passed(), "{:?}", check);
        let spike_edges: usize = r.spiked.spikes.iter().map(|s| s.edges.len()).sum();
        prop_assert_eq!(r.spiked.union.n_edges(), g.n_edges() + spike_edges + r.spiked.bridges.len());
        let degree_sum: usize = r.spiked.union.degrees().iter().sum();
        prop_assert_eq!(degree_sum, 2 * r.spiked.union.n_edges());
        prop_assert_eq!(r.spiked.union.n_vertices(), g.n_vertices() * (k + 3));
    }

    #[test]
    fn vitali_packings_audit(w in 3usize..10, h in 3usize..10, rho in 1i128..6, keep in proptest::collection::vec(any::<bool>(), 100)) {
        let s = SpaceSpec::Grid(GridSpec::new(&[w, h])).build().unwrap();
        let u: Vec<PointId> = s.points().filter(|p| keep[p.0 % 100]).collect();
        prop_assume!(!u.is_empty());
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let p = vitali_pack(&s, &nu, &u, &int(rho), 2.0).unwrap();
        prop_assert!(audit_vitali(&s, &u, &int(rho), &p).unwrap().passed());
        prop_assert_eq!(p.packed_mass + p.residual_mass, nu.mass_of(&u).unwrap());
    }

    #[test]
    fn wrong_exponent_is_detected(n in 40usize..60, off in 0.5f64..1.5) {
        let s = SpaceSpec::Grid(GridSpec::new(&[n, n])).build().unwrap();
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let center = PointId((n / 2) * n + n / 2);
        let radii = [int(4), int(8), int(16)];
        let octaves = 2.0;
        let rep = ahlfors_check(&s, &nu, 2.0 + off, &int(17), &[center], &radii, BallKind::Closed, None).unwrap();
        prop_assert!(rep.spread() >= 2f64.powf(off * octaves * 0.5));
    }
}

#[test]
fn ball_nest_succeeds_on_grids_exhaustively() {
    let n = 16;
    let s = SpaceSpec::Grid(GridSpec::new(&[n, n])).build().unwrap();
    let mut calls = 0;
    for a in s.points() {
        let d = s.ticks_from(a).unwrap();
        for x in s.points() {
            let rho = int(d[x.0] as i128).max(int(1));
            for r in [rho, rho * frac(1, 2), rho * frac(1, 4)] {
                if r <= int(0) {
                    continue;
                }
                let out = ball_nest_witness(&s, a, x, &r, &rho).unwrap();
                assert!(matches!(out, NestOutcome::Found(_)), "a={a} x={x} r={r}");
                calls += 1;
            }
        }
    }
    assert!(calls > 3 * 65_000);
}

#[test]
fn ball_nest_fails_on_trees() {
    let spec = TreeSpec::new(5, 2, 3).unwrap();
    let s = cantor_tree(&spec).unwrap();
    let eps = s.min_positive_distance().unwrap();
    let m = int(3);
    let mut tested = 0;
    for a in s.points() {
        for x in s.points() {
            let d = s.distance(a, x).unwrap();
            // radii strictly between 2ε and d/m
            for r in [d / m - eps / int(2), eps * frac(5, 2)] {
                if r > eps * int(2) && r < d / m {
                    let out = ball_nest_witness(&s, a, x, &r, &d).unwrap();
                    assert!(matches!(out, NestOutcome::NotFound { .. }), "a={a} x={x} r={r}");
                    tested += 1;
                }
            }
        }
    }
    assert!(tested > 100);
}
