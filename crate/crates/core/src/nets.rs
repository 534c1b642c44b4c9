//! Separated nets, δ-graphs, δ-connectedness and the Lipschitz sandwich
//! between `δ · dist` on the net graph and the ambient metric.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, to_f64, Rational};
use crate::graph::{Graph, UNREACHED};
use crate::metric::{BallKind, FiniteMetricSpace, PointId};

/// Scan order for the greedy net.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum NetOrder {
    #[default]
    Index,
    /// Explicit scan order; must be a permutation of the candidates.
    Permutation(Vec<usize>),
    /// Seeded shuffle of the candidates.
    Seeded(u64),
    /// Start at the first candidate, then repeatedly take the candidate
    /// farthest from the current net (ties to the lowest index).
    FarthestPoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Net {
    /// Sorted carrier points.
    pub carrier: Vec<PointId>,
    pub delta: Rational,
    /// `max_x d(x, carrier)` over the points the net was built for.
    pub covering_radius: Rational,
    /// δ-graph on the carrier; vertex `i` is `carrier[i]`.
    pub net_graph: Graph,
}

impl Net {
    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }

    pub fn position(&self, p: PointId) -> Option<usize> {
        self.carrier.binary_search(&p).ok()
    }

    /// Header, sorted carrier, then the δ-graph edge list in carrier positions.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "delta={} covering_radius={} carrier_size={}",
            format_rational(&self.delta),
            format_rational(&self.covering_radius),
            self.carrier.len()
        );
        let ids: Vec<String> = self.carrier.iter().map(|p| p.0.to_string()).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
        out.push_str(&self.net_graph.to_edge_list());
        out
    }

    pub fn parse(text: &str) -> Result<Net> {
        let mut lines = text.lines();
        let header = crate::record::Record::parse(lines.next().ok_or_else(|| Error::parse(1, "empty net file"))?)?;
        let delta = parse_rational(header.require("delta")?)?;
        let covering_radius = parse_rational(header.require("covering_radius")?)?;
        let size: usize = header.parse_field("carrier_size")?.ok_or_else(|| Error::parse(1, "missing carrier_size"))?;
        let carrier = lines
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(|t| t.parse().map(PointId).map_err(|_| Error::parse(2, "bad carrier index")))
            .collect::<Result<Vec<_>>>()?;
        if carrier.len() != size {
            return Err(Error::parse(2, "carrier size mismatch"));
        }
        let rest: Vec<&str> = lines.collect();
        let net_graph = Graph::parse_edge_list(&format!("# vertices {size}\n{}", rest.join("\n")))?;
        Ok(Net {
            carrier,
            delta,
            covering_radius,
            net_graph,
        })
    }
}

fn check_delta(delta: &Rational) -> Result<()> {
    if !delta.is_positive() {
        return Err(Error::param(format!("δ must be positive, got {delta}")));
    }
    Ok(())
}

/// Greedy maximal δ-separated subset of the whole space.
pub fn greedy_net(space: &FiniteMetricSpace, delta: &Rational, order: &NetOrder) -> Result<Net> {
    let all: Vec<PointId> = space.points().collect();
    greedy_net_of(space, &all, delta, order)
}

/// Greedy maximal δ-separated subset of `target`. Separation is
/// `d ≥ δ`; maximality gives `d(x, carrier) < δ` for every `x ∈ target`.
pub fn greedy_net_of(space: &FiniteMetricSpace, target: &[PointId], delta: &Rational, order: &NetOrder) -> Result<Net> {
    check_delta(delta)?;
    for &p in target {
        space.check_point(p)?;
    }
    let mut candidates: Vec<usize> = target.iter().map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect();
    let open_ticks = space.radius_ticks(delta, BallKind::Open);
    let mut carrier = Vec::new();
    match order {
        NetOrder::FarthestPoint => {
            if let Some(&first) = candidates.first() {
                let threshold = open_ticks.map_or(0, |t| t + 1);
                let mut gap: HashMap<usize, u64> = candidates.iter().map(|&c| (c, UNREACHED)).collect();
                let mut next = Some(first);
                while let Some(p) = next {
                    carrier.push(p);
                    let row = space.ticks_from(PointId(p))?;
                    for (&c, g) in gap.iter_mut() {
                        *g = (*g).min(row[c]);
                    }
                    next = candidates
                        .iter()
                        .filter(|c| gap[c] >= threshold)
                        .max_by(|a, b| gap[a].cmp(&gap[b]).then(b.cmp(a)))
                        .copied();
                }
            }
        }
        _ => {
            match order {
                NetOrder::Permutation(perm) => {
                    let mut sorted = perm.clone();
                    sorted.sort_unstable();
                    if sorted != candidates {
                        return Err(Error::param("net order is not a permutation of the candidate points"));
                    }
                    candidates = perm.clone();
                }
                NetOrder::Seeded(seed) => candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed)),
                _ => {}
            }
            let mut blocked = vec![false; space.n_points()];
            for &p in &candidates {
                if blocked[p] {
                    continue;
                }
                carrier.push(p);
                if let Some(t) = open_ticks {
                    for (y, _) in space.within_ticks(p, t) {
                        blocked[y] = true;
                    }
                }
            }
        }
    }
    carrier.sort_unstable();
    let carrier: Vec<PointId> = carrier.into_iter().map(PointId).collect();
    let covering_radius = directed_gap(space, target, &carrier).unwrap_or_else(|_| Rational::zero());
    let net_graph = delta_graph(space, &carrier, delta)?;
    Ok(Net {
        carrier,
        delta: *delta,
        covering_radius,
        net_graph,
    })
}

/// Graph on `carrier` (vertex `i` is `carrier[i]`) with `{x, y}` an edge iff `0 < d(x, y) ≤ δ`.
pub fn delta_graph(space: &FiniteMetricSpace, carrier: &[PointId], delta: &Rational) -> Result<Graph> {
    if carrier.is_empty() {
        return Err(Error::param("δ-graph needs a nonempty carrier"));
    }
    for &p in carrier {
        space.check_point(p)?;
    }
    let position: HashMap<usize, usize> = carrier.iter().enumerate().map(|(i, p)| (p.0, i)).collect();
    let Some(t) = space.radius_ticks(delta, BallKind::Closed) else {
        return Ok(Graph::empty(carrier.len()));
    };
    let edges: Vec<(usize, usize)> = carrier
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| {
            space
                .within_ticks(p.0, t)
                .into_iter()
                .filter(|&(_, d)| d > 0)
                .filter_map(|(y, _)| position.get(&y).copied())
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
                .collect::<Vec<_>>()
        })
        .collect();
    Graph::from_edges(carrier.len(), edges)
}

/// `sup_{x ∈ A} inf_{y ∈ B} d(x, y)`; zero for empty `A`.
pub fn directed_gap(space: &FiniteMetricSpace, a: &[PointId], b: &[PointId]) -> Result<Rational> {
    if b.is_empty() {
        return Err(Error::param("directed gap needs a nonempty target set"));
    }
    for &p in a {
        space.check_point(p)?;
    }
    let to_b = space.ticks_to_set(b)?;
    let max = a.iter().map(|p| to_b[p.0]).max().unwrap_or(0);
    Ok(space.ticks_to_length(max))
}

/// Exhaustive separation and covering check of a net against a target set.
#[derive(Clone, Debug, Default)]
pub struct NetCheck {
    pub separation_violations: Vec<(PointId, PointId)>,
    pub uncovered: Vec<PointId>,
    pub gap: Rational,
}

impl NetCheck {
    pub fn passed(&self) -> bool {
        self.separation_violations.is_empty() && self.uncovered.is_empty()
    }
}

pub fn check_net(space: &FiniteMetricSpace, net: &Net, target: &[PointId]) -> Result<NetCheck> {
    if net.carrier.is_empty() {
        return Err(Error::param("empty net"));
    }
    let in_carrier: BTreeSet<usize> = net.carrier.iter().map(|p| p.0).collect();
    let mut check = NetCheck::default();
    if let Some(t) = space.radius_ticks(&net.delta, BallKind::Open) {
        for &p in &net.carrier {
            for (y, _) in space.within_ticks(p.0, t) {
                if y > p.0 && in_carrier.contains(&y) {
                    check.separation_violations.push((p, PointId(y)));
                }
            }
        }
    }
    let to_net = space.ticks_to_set(&net.carrier)?;
    let cover = space.radius_ticks(&net.delta, BallKind::Open);
    for &x in target {
        let d = to_net[x.0];
        if cover.is_none_or(|c| d > c) {
            check.uncovered.push(x);
        }
    }
    check.gap = space.ticks_to_length(target.iter().map(|p| to_net[p.0]).max().unwrap_or(0));
    Ok(check)
}

/// Seeded sample of `count` distinct-point pairs with `d(x, y) ≥ min_distance`.
pub fn sample_pairs(
    space: &FiniteMetricSpace,
    count: usize,
    min_distance: &Rational,
    seed: u64,
) -> Result<Vec<(PointId, PointId)>> {
    let n = space.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && n >= 2 {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::Degenerate("could not find enough pairs at the requested distance".into()));
        }
        let x = PointId(rng.random_range(0..n));
        let y = PointId(rng.random_range(0..n));
        if x != y && space.distance(x, y)? >= *min_distance {
            out.push((x, y));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ChainRecord {
    pub x: PointId,
    pub y: PointId,
    pub distance: Rational,
    /// Fewest steps of length ≤ δ from `x` to `y`; `None` if unreachable.
    pub steps: Option<u64>,
    /// `steps · δ / d(x, y)`.
    pub ratio: Option<Rational>,
}

#[derive(Clone, Debug)]
pub struct ConnectivityReport {
    pub delta: Rational,
    pub chains: Vec<ChainRecord>,
    pub max_ratio: Option<Rational>,
    pub unreachable: usize,
}

impl ConnectivityReport {
    /// Every sampled pair is joined by a δ-chain.
    pub fn connected(&self) -> bool {
        self.unreachable == 0
    }
}

/// Minimal δ-chains between sampled pairs, via BFS in the δ-graph on
/// `carrier` (the whole space when `None`).
pub fn delta_connectivity_report(
    space: &FiniteMetricSpace,
    carrier: Option<&[PointId]>,
    delta: &Rational,
    pairs: &[(PointId, PointId)],
) -> Result<ConnectivityReport> {
    check_delta(delta)?;
    let all: Vec<PointId>;
    let carrier = match carrier {
        Some(c) => c,
        None => {
            all = space.points().collect();
            &all
        }
    };
    let position: HashMap<PointId, usize> = carrier.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let graph = delta_graph(space, carrier, delta)?;
    let mut by_source: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut chains = Vec::with_capacity(pairs.len());
    for &(x, y) in pairs {
        let d = space.distance(x, y)?;
        if d < *delta {
            return Err(Error::param(format!("pair ({x}, {y}) is closer than δ")));
        }
        let (Some(&i), Some(&j)) = (position.get(&x), position.get(&y)) else {
            return Err(Error::param(format!("pair ({x}, {y}) is not in the carrier")));
        };
        let dist = by_source.entry(i).or_insert_with(|| graph.bfs_ticks(i));
        let steps = (dist[j] != UNREACHED).then_some(dist[j]);
        let ratio = steps.map(|n| int(n as i128) * delta / d);
        chains.push(ChainRecord {
            x,
            y,
            distance: d,
            steps,
            ratio,
        });
    }
    let max_ratio = chains.iter().filter_map(|c| c.ratio).max();
    let unreachable = chains.iter().filter(|c| c.steps.is_none()).count();
    Ok(ConnectivityReport {
        delta: *delta,
        chains,
        max_ratio,
        unreachable,
    })
}

/// Which carrier pairs the sandwich examines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairSampling {
    All,
    /// All pairs `(s, ·)` for `count` seeded source points.
    Sources { count: usize, seed: u64 },
}

pub const SANDWICH_BINS: usize = 10;

#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub delta: Rational,
    pub pairs_checked: u64,
    /// Pairs in different components of the net graph.
    pub unreachable: u64,
    /// `min d / (δ dist)` and its witness pair.
    pub c_min: Option<(Rational, PointId, PointId)>,
    pub max_ratio: Option<Rational>,
    /// Counts of `d / (δ dist)` in `[i/10, (i+1)/10)`, the last bin
    /// also holding ratio 1.
    pub ratio_histogram: [u64; SANDWICH_BINS],
    /// Pairs with `d > δ dist`, which the triangle inequality forbids.
    pub violations: Vec<(PointId, PointId)>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.c_min.as_ref().is_none_or(|(c, _, _)| c.is_positive())
    }

    pub fn to_record(&self) -> crate::record::Record {
        let mut r = crate::record::Record::new();
        r.push("delta", format_rational(&self.delta))
            .push("pairs_checked", self.pairs_checked)
            .push("unreachable", self.unreachable)
            .push("upper_violations", self.violations.len());
        match &self.c_min {
            Some((c, x, y)) => {
                r.push("c_min", format_rational(c))
                    .push("c_min_f64", to_f64(c))
                    .push("c_min_witness", format!("{x},{y}"));
            }
            None => {
                r.push("c_min", "none");
            }
        }
        if let Some(m) = &self.max_ratio {
            r.push("max_ratio", format_rational(m));
        }
        let hist: Vec<String> = self.ratio_histogram.iter().map(|h| h.to_string()).collect();
        r.push("ratio_histogram", hist.join(","));
        r
    }
}

/// Compares `d(x, y)` with `δ · dist(x, y)` (net-graph distance) on carrier pairs.
pub fn lipschitz_sandwich(space: &FiniteMetricSpace, net: &Net, sampling: &PairSampling) -> Result<SandwichReport> {
    check_delta(&net.delta)?;
    let m = net.carrier.len();
    let sources: Vec<usize> = match sampling {
        PairSampling::All => (0..m).collect(),
        PairSampling::Sources { count, seed } => {
            let mut idx: Vec<usize> = (0..m).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            idx.truncate(*count);
            idx.sort_unstable();
            idx
        }
    };
    struct Partial {
        checked: u64,
        unreachable: u64,
        c_min: Option<(Rational, PointId, PointId)>,
        max_ratio: Option<Rational>,
        hist: [u64; SANDWICH_BINS],
        violations: Vec<(PointId, PointId)>,
    }
    let delta = net.delta;
    let partials: Vec<Partial> = sources
        .par_iter()
        .map(|&i| {
            let graph_d = net.net_graph.bfs_ticks(i);
            let x = net.carrier[i];
            let ambient = space.ticks_from(x).expect("carrier points are valid");
            let mut p = Partial {
                checked: 0,
                unreachable: 0,
                c_min: None,
                max_ratio: None,
                hist: [0; SANDWICH_BINS],
                violations: Vec::new(),
            };
            for (j, &y) in net.carrier.iter().enumerate() {
                if j == i || (matches!(sampling, PairSampling::All) && j < i) {
                    continue;
                }
                p.checked += 1;
                if graph_d[j] == UNREACHED {
                    p.unreachable += 1;
                    continue;
                }
                let d = space.ticks_to_length(ambient[y.0]);
                let ratio = d / (delta * int(graph_d[j] as i128));
                if ratio > int(1) {
                    p.violations.push((x, y));
                }
                let bin = ((to_f64(&ratio) * SANDWICH_BINS as f64).floor() as usize).min(SANDWICH_BINS - 1);
                p.hist[bin] += 1;
                if p.c_min.as_ref().is_none_or(|(c, _, _)| ratio < *c) {
                    p.c_min = Some((ratio, x, y));
                }
                if p.max_ratio.is_none_or(|m| ratio > m) {
                    p.max_ratio = Some(ratio);
                }
            }
            p
        })
        .collect();
    let mut report = SandwichReport {
        delta,
        pairs_checked: 0,
        unreachable: 0,
        c_min: None,
        max_ratio: None,
        ratio_histogram: [0; SANDWICH_BINS],
        violations: Vec::new(),
    };
    for p in partials {
        report.pairs_checked += p.checked;
        report.unreachable += p.unreachable;
        for (h, v) in report.ratio_histogram.iter_mut().zip(p.hist) {
            *h += v;
        }
        report.violations.extend(p.violations);
        if let Some(c) = p.c_min {
            if report.c_min.as_ref().is_none_or(|(best, _, _)| c.0 < *best) {
                report.c_min = Some(c);
            }
        }
        if let Some(m) = p.max_ratio {
            if report.max_ratio.is_none_or(|best| m > best) {
                report.max_ratio = Some(m);
            }
        }
    }
    Ok(report)
}
