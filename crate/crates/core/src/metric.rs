//! Finite metric spaces with exact distances and ball queries.
//!
//! Every backend reports distances as an integer number of *ticks* times a
//! rational unit (grid spacing, `m^-N` for trees, `1/lcm` of the
//! denominators of an explicit matrix). Rescaling only changes the unit, so
//! `B_γ(x, r) = B(x, γ r)` holds bit for bit.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{floor_nonneg, int, lcm_all, Rational};
use crate::graph::{Graph, UNREACHED};
use crate::spaces::{SpaceSpec, TreeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId(pub usize);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum BallKind {
    /// `d(center, y) < r`
    #[default]
    Open,
    /// `d(center, y) ≤ r`
    Closed,
}

impl FromStr for BallKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(BallKind::Open),
            "closed" => Ok(BallKind::Closed),
            other => Err(Error::param(format!("ball kind must be open or closed, got {other:?}"))),
        }
    }
}

impl fmt::Display for BallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BallKind::Open => "open",
            BallKind::Closed => "closed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallSpec {
    pub center: PointId,
    pub radius: Rational,
    pub kind: BallKind,
}

impl BallSpec {
    pub fn new(center: PointId, radius: Rational, kind: BallKind) -> Result<Self> {
        if radius.is_negative() {
            return Err(Error::param("ball radius must be nonnegative"));
        }
        Ok(BallSpec { center, radius, kind })
    }

    pub fn open(center: usize, radius: Rational) -> Self {
        BallSpec::new(PointId(center), radius, BallKind::Open).expect("nonnegative radius")
    }

    pub fn closed(center: usize, radius: Rational) -> Self {
        BallSpec::new(PointId(center), radius, BallKind::Closed).expect("nonnegative radius")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Explicit,
    GraphBfs,
    ClosedForm,
}

/// Lower-triangular integer distance matrix.
#[derive(Clone, Debug)]
pub struct ExplicitMatrix {
    n: usize,
    ticks: Vec<u64>,
}

impl ExplicitMatrix {
    fn offset(i: usize, j: usize) -> usize {
        debug_assert!(j < i);
        i * (i - 1) / 2 + j
    }

    fn get(&self, i: usize, j: usize) -> u64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => self.ticks[Self::offset(i, j)],
            std::cmp::Ordering::Less => self.ticks[Self::offset(j, i)],
        }
    }
}

#[derive(Debug)]
pub(crate) enum Backend {
    Explicit(ExplicitMatrix),
    Graph(Graph),
    Tree(TreeSpec),
}

#[derive(Clone, Debug)]
pub struct FiniteMetricSpace {
    backend: Arc<Backend>,
    unit: Rational,
    gamma: Rational,
    origin: Option<SpaceSpec>,
}

impl FiniteMetricSpace {
    /// Explicit space from a lower-triangular matrix: `rows[i]` lists `d(i, 0..i)`.
    pub fn from_lower_triangle(rows: &[Vec<Rational>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i {
                return Err(Error::Construction(format!("row {i} has {} entries, expected {i}", row.len())));
            }
            if let Some(bad) = row.iter().find(|d| !d.is_positive()) {
                return Err(Error::Construction(format!("row {i} has non-positive off-diagonal distance {bad}")));
            }
        }
        let l = lcm_all(rows.iter().flatten().map(|d| *d.denom()));
        let unit = Rational::new(1, l);
        let mut ticks = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for d in rows.iter().flatten() {
            let t = (d * int(l)).to_integer();
            ticks.push(t.to_u64().ok_or_else(|| Error::Construction("distance too large".into()))?);
        }
        Ok(FiniteMetricSpace {
            backend: Arc::new(Backend::Explicit(ExplicitMatrix { n, ticks })),
            unit,
            gamma: Rational::one(),
            origin: None,
        })
    }

    /// Graph metric scaled by `step` per edge. The graph must be connected.
    pub fn from_graph(graph: Graph, step: Rational) -> Result<Self> {
        if !step.is_positive() {
            return Err(Error::param("edge length must be positive"));
        }
        if !graph.is_connected() {
            return Err(Error::Construction("graph is disconnected; distances would be infinite".into()));
        }
        Ok(FiniteMetricSpace {
            backend: Arc::new(Backend::Graph(graph)),
            unit: step,
            gamma: Rational::one(),
            origin: None,
        })
    }

    pub(crate) fn from_tree(spec: TreeSpec) -> Result<Self> {
        let denom = (spec.base as i128)
            .checked_pow(spec.depth)
            .ok_or_else(|| Error::param("base^depth overflows"))?;
        Ok(FiniteMetricSpace {
            backend: Arc::new(Backend::Tree(spec)),
            unit: Rational::new(1, denom),
            gamma: Rational::one(),
            origin: Some(SpaceSpec::Tree(spec)),
        })
    }

    pub(crate) fn with_origin(mut self, origin: SpaceSpec) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn origin(&self) -> Option<&SpaceSpec> {
        self.origin.as_ref()
    }

    pub fn n_points(&self) -> usize {
        match &*self.backend {
            Backend::Explicit(m) => m.n,
            Backend::Graph(g) => g.n_vertices(),
            Backend::Tree(t) => t.n_leaves() as usize,
        }
    }

    pub fn backend_kind(&self) -> BackendKind {
        match &*self.backend {
            Backend::Explicit(_) => BackendKind::Explicit,
            Backend::Graph(_) => BackendKind::GraphBfs,
            Backend::Tree(_) => BackendKind::ClosedForm,
        }
    }

    /// Length of one tick in the effective (rescaled) metric.
    pub fn unit(&self) -> Rational {
        self.unit
    }

    pub fn gamma(&self) -> Rational {
        self.gamma
    }

    pub fn graph(&self) -> Option<&Graph> {
        match &*self.backend {
            Backend::Graph(g) => Some(g),
            _ => None,
        }
    }

    pub fn tree_spec(&self) -> Option<TreeSpec> {
        match &*self.backend {
            Backend::Tree(t) => Some(*t),
            _ => None,
        }
    }

    pub fn check_point(&self, p: PointId) -> Result<()> {
        if p.0 < self.n_points() {
            Ok(())
        } else {
            Err(Error::Index {
                index: p.0,
                n_points: self.n_points(),
            })
        }
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> {
        (0..self.n_points()).map(PointId)
    }

    /// Distance in ticks.
    pub fn ticks(&self, x: PointId, y: PointId) -> Result<u64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.ticks_unchecked(x.0, y.0))
    }

    pub(crate) fn ticks_unchecked(&self, x: usize, y: usize) -> u64 {
        match &*self.backend {
            Backend::Explicit(m) => m.get(x, y),
            Backend::Graph(g) => g.hop_distance(x, y).expect("graph spaces are connected"),
            Backend::Tree(t) => t.ticks(x as u64, y as u64),
        }
    }

    /// Effective distance `d(x, y) / γ`.
    pub fn distance(&self, x: PointId, y: PointId) -> Result<Rational> {
        Ok(self.ticks_to_length(self.ticks(x, y)?))
    }

    pub fn ticks_to_length(&self, t: u64) -> Rational {
        self.unit * int(t as i128)
    }

    /// Ticks from `x` to every point.
    pub fn ticks_from(&self, x: PointId) -> Result<Vec<u64>> {
        self.check_point(x)?;
        Ok(match &*self.backend {
            Backend::Graph(g) => g.bfs_ticks(x.0),
            _ => (0..self.n_points()).map(|y| self.ticks_unchecked(x.0, y)).collect(),
        })
    }

    /// Ticks from every point to the nearest member of `set` (`u64::MAX` if `set` is empty).
    pub fn ticks_to_set(&self, set: &[PointId]) -> Result<Vec<u64>> {
        for &p in set {
            self.check_point(p)?;
        }
        Ok(match &*self.backend {
            Backend::Graph(g) => g.multi_source_ticks(set.iter().map(|p| p.0)),
            _ => {
                let mut best = vec![UNREACHED; self.n_points()];
                for &s in set {
                    for (y, b) in best.iter_mut().enumerate() {
                        *b = (*b).min(self.ticks_unchecked(s.0, y));
                    }
                }
                best
            }
        })
    }

    /// For every point, the position in `set` of its nearest member, ties
    /// to the lowest position.
    pub fn nearest_in_set(&self, set: &[PointId]) -> Result<Vec<usize>> {
        if set.is_empty() {
            return Err(Error::param("nearest point in an empty set"));
        }
        for &p in set {
            self.check_point(p)?;
        }
        Ok(match &*self.backend {
            Backend::Graph(g) => g.nearest_source(&set.iter().map(|p| p.0).collect::<Vec<_>>()),
            _ => (0..self.n_points())
                .map(|y| {
                    (0..set.len())
                        .min_by_key(|&i| (self.ticks_unchecked(set[i].0, y), i))
                        .expect("set is nonempty")
                })
                .collect(),
        })
    }

    /// Largest tick count inside a ball of the given radius and kind, or `None` if the ball is empty.
    pub fn radius_ticks(&self, radius: &Rational, kind: BallKind) -> Option<u64> {
        let q = radius / self.unit;
        match kind {
            BallKind::Closed => floor_nonneg(&q),
            BallKind::Open => {
                if !q.is_positive() {
                    None
                } else if q.is_integer() {
                    floor_nonneg(&(q - Rational::one()))
                } else {
                    floor_nonneg(&q.floor())
                }
            }
        }
    }

    /// Points within `max_ticks` of `center` together with their tick distance.
    pub(crate) fn within_ticks(&self, center: usize, max_ticks: u64) -> Vec<(usize, u64)> {
        match &*self.backend {
            Backend::Graph(g) => g.truncated_bfs(center, max_ticks),
            _ => (0..self.n_points())
                .filter_map(|y| {
                    let t = self.ticks_unchecked(center, y);
                    (t <= max_ticks).then_some((y, t))
                })
                .collect(),
        }
    }

    pub fn ball_members(&self, ball: &BallSpec) -> Result<Vec<PointId>> {
        self.check_point(ball.center)?;
        let Some(t) = self.radius_ticks(&ball.radius, ball.kind) else {
            return Ok(Vec::new());
        };
        let mut members: Vec<PointId> = self.within_ticks(ball.center.0, t).into_iter().map(|(y, _)| PointId(y)).collect();
        members.sort_unstable();
        Ok(members)
    }

    pub fn ball_card(&self, ball: &BallSpec) -> Result<u64> {
        self.check_point(ball.center)?;
        Ok(match self.radius_ticks(&ball.radius, ball.kind) {
            None => 0,
            Some(t) => self.within_ticks(ball.center.0, t).len() as u64,
        })
    }

    /// Ball cardinalities around `center` for each tick threshold
    /// (`None` is the empty ball).
    pub(crate) fn counts_at(&self, center: usize, thresholds: &[Option<u64>]) -> Vec<u64> {
        let Some(max) = thresholds.iter().flatten().copied().max() else {
            return vec![0; thresholds.len()];
        };
        match &*self.backend {
            Backend::Graph(g) => {
                let mut layers = g.layer_sizes(center, max);
                for i in 1..layers.len() {
                    layers[i] += layers[i - 1];
                }
                thresholds.iter().map(|t| t.map_or(0, |t| layers[t as usize])).collect()
            }
            _ => {
                let mut ticks: Vec<u64> = (0..self.n_points()).map(|y| self.ticks_unchecked(center, y)).collect();
                ticks.sort_unstable();
                thresholds
                    .iter()
                    .map(|t| t.map_or(0, |t| ticks.partition_point(|&d| d <= t) as u64))
                    .collect()
            }
        }
    }

    /// Smallest positive distance in ticks (`None` for a single point).
    pub fn min_positive_ticks(&self) -> Option<u64> {
        if self.n_points() < 2 {
            return None;
        }
        match &*self.backend {
            Backend::Graph(_) | Backend::Tree(_) => Some(1),
            Backend::Explicit(m) => m.ticks.iter().copied().min(),
        }
    }

    pub fn min_positive_distance(&self) -> Option<Rational> {
        self.min_positive_ticks().map(|t| self.ticks_to_length(t))
    }

    /// Exhaustive diameter; quadratic in the number of points.
    pub fn diameter(&self) -> Rational {
        let max = self
            .points()
            .map(|x| self.ticks_from(x).expect("valid point").into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        self.ticks_to_length(max)
    }

    /// Returns the same point set with effective distance `d / γ`.
    pub fn rescale(&self, gamma: Rational) -> Result<Self> {
        if !gamma.is_positive() {
            return Err(Error::param(format!("rescale factor must be positive, got {gamma}")));
        }
        Ok(FiniteMetricSpace {
            backend: Arc::clone(&self.backend),
            unit: self.unit / gamma,
            gamma: self.gamma * gamma,
            origin: self.origin.clone(),
        })
    }

    /// Checks identity, symmetry and the triangle inequality (and the
    /// ultrametric inequality if requested). Spaces with at most
    /// [`EXHAUSTIVE_AXIOM_LIMIT`] points are checked on every triple,
    /// larger ones on `sample_size` seeded random triples.
    pub fn verify_metric(&self, sample_size: usize, seed: u64, ultrametric: bool) -> Result<AxiomReport> {
        if sample_size == 0 {
            return Err(Error::param("sample_size must be at least 1"));
        }
        let n = self.n_points();
        let mut report = AxiomReport {
            seed,
            exhaustive: n <= EXHAUSTIVE_AXIOM_LIMIT,
            ultrametric,
            triples_checked: 0,
            violations: Vec::new(),
        };
        if n == 0 {
            return Ok(report);
        }
        let anchors: Vec<usize> = if report.exhaustive {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_indices(&mut rng, n, n.min(64)).into_vec()
        };
        let rows: Vec<Vec<u64>> = anchors.iter().map(|&a| self.ticks_from(PointId(a)).expect("valid")).collect();

        for (ai, &a) in anchors.iter().enumerate() {
            for (y, &t) in rows[ai].iter().enumerate() {
                if (y == a) != (t == 0) {
                    report.violations.push(AxiomViolation::Identity { x: a, y });
                }
            }
            for (bi, &b) in anchors.iter().enumerate() {
                if rows[ai][b] != rows[bi][a] {
                    report.violations.push(AxiomViolation::Symmetry { x: a, y: b });
                }
            }
        }

        let check = |ai: usize, bi: usize, z: usize, report: &mut AxiomReport| {
            let (x, y) = (anchors[ai], anchors[bi]);
            let (dxy, dyz, dxz) = (rows[ai][y], rows[bi][z], rows[ai][z]);
            report.triples_checked += 1;
            if dxz as u128 > dxy as u128 + dyz as u128 {
                report.violations.push(AxiomViolation::Triangle { x, y, z });
            }
            if ultrametric && dxz > dxy.max(dyz) {
                report.violations.push(AxiomViolation::Ultrametric { x, y, z });
            }
        };
        if report.exhaustive {
            for ai in 0..n {
                for bi in 0..n {
                    for z in 0..n {
                        check(ai, bi, z, &mut report);
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            for _ in 0..sample_size {
                let ai = rng.random_range(0..anchors.len());
                let bi = rng.random_range(0..anchors.len());
                let z = rng.random_range(0..n);
                check(ai, bi, z, &mut report);
            }
        }
        Ok(report)
    }

    /// Dense distance matrix in ticks; intended for small spaces.
    pub fn tick_matrix(&self) -> Vec<Vec<u64>> {
        self.points().map(|x| self.ticks_from(x).expect("valid point")).collect()
    }

    pub fn is_zero_distance(&self, x: PointId, y: PointId) -> Result<bool> {
        Ok(self.ticks(x, y)?.is_zero())
    }
}

/// Spaces up to this size are axiom-checked on every triple.
pub const EXHAUSTIVE_AXIOM_LIMIT: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomViolation {
    Identity { x: usize, y: usize },
    Symmetry { x: usize, y: usize },
    Triangle { x: usize, y: usize, z: usize },
    Ultrametric { x: usize, y: usize, z: usize },
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub seed: u64,
    pub exhaustive: bool,
    pub ultrametric: bool,
    pub triples_checked: u64,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn triangle_violations(&self) -> usize {
        self.violations.iter().filter(|v| matches!(v, AxiomViolation::Triangle { .. })).count()
    }
}
