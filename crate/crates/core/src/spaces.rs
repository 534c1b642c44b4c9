//! Generators for example spaces: taxicab grids (optionally with holes),
//! Cantor ultrametric trees, Cayley graphs and Sierpinski gasket graphs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, Rational};
use crate::graph::Graph;
use crate::metric::FiniteMetricSpace;
use crate::record::Record;

/// Inclusive axis-aligned box of lattice nodes removed from a grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HoleBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl HoleBox {
    fn contains(&self, coord: &[usize]) -> bool {
        coord.iter().zip(&self.lo).zip(&self.hi).all(|((c, lo), hi)| lo <= c && c <= hi)
    }

    fn overlaps(&self, other: &HoleBox) -> bool {
        (0..self.lo.len()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub spacing: Rational,
    pub holes: Vec<HoleBox>,
}

impl GridSpec {
    pub fn new(dims: &[usize]) -> Self {
        GridSpec {
            dims: dims.to_vec(),
            spacing: Rational::one(),
            holes: Vec::new(),
        }
    }

    pub fn with_spacing(mut self, h: Rational) -> Self {
        self.spacing = h;
        self
    }

    pub fn with_hole(mut self, lo: &[usize], hi: &[usize]) -> Self {
        self.holes.push(HoleBox {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        });
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::param("grid dims must be a nonempty list of positive sizes"));
        }
        if !self.spacing.is_positive() {
            return Err(Error::param("grid spacing must be positive"));
        }
        for (i, h) in self.holes.iter().enumerate() {
            if h.lo.len() != self.dims.len() || h.hi.len() != self.dims.len() {
                return Err(Error::param(format!("hole {i} has the wrong dimension")));
            }
            if h.lo.iter().zip(&h.hi).any(|(a, b)| a > b) || h.hi.iter().zip(&self.dims).any(|(b, d)| b >= d) {
                return Err(Error::param(format!("hole {i} is empty or outside the grid")));
            }
            if self.holes[..i].iter().any(|o| o.overlaps(h)) {
                return Err(Error::param(format!("hole {i} overlaps an earlier hole")));
            }
        }
        Ok(())
    }

    fn full_len(&self) -> usize {
        self.dims.iter().product()
    }

    fn decode(&self, mut flat: usize) -> Vec<usize> {
        let mut coord = vec![0; self.dims.len()];
        for axis in (0..self.dims.len()).rev() {
            coord[axis] = flat % self.dims[axis];
            flat /= self.dims[axis];
        }
        coord
    }

    fn encode(&self, coord: &[usize]) -> usize {
        coord.iter().zip(&self.dims).fold(0, |acc, (c, d)| acc * d + c)
    }

    /// Surviving lattice nodes in point order (row-major, last axis fastest).
    pub fn coordinates(&self) -> Vec<Vec<usize>> {
        (0..self.full_len())
            .map(|f| self.decode(f))
            .filter(|c| !self.holes.iter().any(|h| h.contains(c)))
            .collect()
    }

    /// Point index of a lattice node, `None` if it is outside the grid or in a hole.
    pub fn point_index(&self, coord: &[usize]) -> Option<usize> {
        if coord.len() != self.dims.len() || coord.iter().zip(&self.dims).any(|(c, d)| c >= d) {
            return None;
        }
        if self.holes.is_empty() {
            return Some(self.encode(coord));
        }
        if self.holes.iter().any(|h| h.contains(coord)) {
            return None;
        }
        let flat = self.encode(coord);
        Some((0..flat).filter(|&f| !self.holes.iter().any(|h| h.contains(&self.decode(f)))).count())
    }

    fn graph(&self) -> Graph {
        let full = self.full_len();
        let mut index = vec![usize::MAX; full];
        let mut next = 0;
        for (f, slot) in index.iter_mut().enumerate() {
            let c = self.decode(f);
            if !self.holes.iter().any(|h| h.contains(&c)) {
                *slot = next;
                next += 1;
            }
        }
        let mut strides = vec![1usize; self.dims.len()];
        for axis in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.dims[axis + 1];
        }
        let mut edges = Vec::new();
        for f in 0..full {
            if index[f] == usize::MAX {
                continue;
            }
            let c = self.decode(f);
            for axis in 0..self.dims.len() {
                if c[axis] + 1 < self.dims[axis] {
                    let g = f + strides[axis];
                    if index[g] != usize::MAX {
                        edges.push((index[f], index[g]));
                    }
                }
            }
        }
        Graph::from_edges(next, edges).expect("grid edges are valid")
    }
}

/// Uniform tree of depth `N`, branching `n`, with leaf metric `m^{-v}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TreeSpec {
    pub depth: u32,
    pub branching: u64,
    pub base: u64,
}

impl TreeSpec {
    pub fn new(depth: u32, branching: u64, base: u64) -> Result<Self> {
        let spec = TreeSpec { depth, branching, base };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.branching < 2 || self.base < 2 {
            return Err(Error::param("tree needs depth ≥ 1, branching ≥ 2, base ≥ 2"));
        }
        let leaves = self
            .branching
            .checked_pow(self.depth)
            .filter(|&l| l <= usize::MAX as u64)
            .ok_or_else(|| Error::param("branching^depth overflows"))?;
        let _ = leaves;
        (self.base as i128)
            .checked_pow(self.depth + 1)
            .ok_or_else(|| Error::param("base^(depth+1) overflows"))?;
        Ok(())
    }

    pub fn n_leaves(&self) -> u64 {
        self.branching.pow(self.depth)
    }

    /// Branch sequence `b_1 .. b_N` of a leaf, most significant first.
    pub fn path(&self, leaf: u64) -> Vec<u64> {
        let mut digits = vec![0; self.depth as usize];
        let mut x = leaf;
        for d in digits.iter_mut().rev() {
            *d = x % self.branching;
            x /= self.branching;
        }
        digits
    }

    /// First index (1-based) where the branch sequences differ; `None` for equal leaves.
    pub fn first_difference(&self, x: u64, y: u64) -> Option<u32> {
        if x == y {
            return None;
        }
        let mut p = self.branching.pow(self.depth - 1);
        for i in 1..=self.depth {
            if x / p != y / p {
                return Some(i);
            }
            p /= self.branching.max(1);
        }
        unreachable!("distinct leaves differ somewhere")
    }

    /// Distance in units of `m^{-N}`.
    pub(crate) fn ticks(&self, x: u64, y: u64) -> u64 {
        match self.first_difference(x, y) {
            None => 0,
            Some(v) => self.base.pow(self.depth - v),
        }
    }
}

/// `card B(x, r)` for the open ball in the Cantor tree, `r ∈ ]m^{-(N+1)}, 1]`.
///
/// Finds `j` with `m^{-(j+1)} < r ≤ m^{-j}` by exact comparison and returns `n^{N-j}`.
pub fn tree_ball_card(spec: &TreeSpec, r: &Rational) -> Result<u64> {
    spec.validate()?;
    let m = spec.base as i128;
    let n = spec.depth;
    let lower = Rational::new(1, m.pow(n + 1));
    if *r <= lower || *r > Rational::one() {
        return Err(Error::param(format!(
            "radius {r} outside ]{}^-{}, 1]",
            spec.base,
            n + 1
        )));
    }
    let mut j = 0u32;
    let mut next = Rational::new(1, m);
    while *r <= next {
        j += 1;
        next /= int(m);
    }
    Ok(spec.branching.pow(n - j))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// `Z^rank`, elements are integer vectors.
    FreeAbelian { rank: usize },
    /// Integer Heisenberg group, elements `(a, b, c)` with
    /// `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+a b')`.
    Heisenberg,
    /// Finite group given by its multiplication table, elements are indices.
    Table { table: Vec<Vec<usize>>, identity: usize },
}

/// Group plus a generating set. Elements are encoded as `Vec<i64>`
/// (a single entry for table groups).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub generators: Vec<Vec<i64>>,
}

impl GroupSpec {
    pub fn free_abelian(rank: usize) -> Self {
        let mut gens = Vec::new();
        for i in 0..rank {
            for s in [1, -1] {
                let mut g = vec![0; rank];
                g[i] = s;
                gens.push(g);
            }
        }
        GroupSpec {
            kind: GroupKind::FreeAbelian { rank },
            generators: gens,
        }
    }

    pub fn heisenberg() -> Self {
        GroupSpec {
            kind: GroupKind::Heisenberg,
            generators: vec![vec![1, 0, 0], vec![-1, 0, 0], vec![0, 1, 0], vec![0, -1, 0]],
        }
    }

    /// `Z/order` as an explicit table with generators `{±1}`.
    pub fn cyclic(order: usize) -> Self {
        let table = (0..order).map(|a| (0..order).map(|b| (a + b) % order).collect()).collect();
        let mut gens = vec![vec![1i64], vec![(order as i64 - 1).rem_euclid(order.max(1) as i64)]];
        gens.dedup();
        GroupSpec {
            kind: GroupKind::Table { table, identity: 0 },
            generators: gens,
        }
    }

    pub fn with_generators(mut self, generators: Vec<Vec<i64>>) -> Self {
        self.generators = generators;
        self
    }

    fn element_len(&self) -> usize {
        match &self.kind {
            GroupKind::FreeAbelian { rank } => *rank,
            GroupKind::Heisenberg => 3,
            GroupKind::Table { .. } => 1,
        }
    }

    pub fn identity(&self) -> Vec<i64> {
        match &self.kind {
            GroupKind::Table { identity, .. } => vec![*identity as i64],
            _ => vec![0; self.element_len()],
        }
    }

    fn valid_element(&self, g: &[i64]) -> bool {
        g.len() == self.element_len()
            && match &self.kind {
                GroupKind::Table { table, .. } => g[0] >= 0 && (g[0] as usize) < table.len(),
                _ => true,
            }
    }

    pub fn multiply(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        match &self.kind {
            GroupKind::FreeAbelian { .. } => x.iter().zip(y).map(|(a, b)| a + b).collect(),
            GroupKind::Heisenberg => vec![x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]],
            GroupKind::Table { table, .. } => vec![table[x[0] as usize][y[0] as usize] as i64],
        }
    }

    pub fn inverse(&self, x: &[i64]) -> Option<Vec<i64>> {
        match &self.kind {
            GroupKind::FreeAbelian { .. } => Some(x.iter().map(|a| -a).collect()),
            GroupKind::Heisenberg => Some(vec![-x[0], -x[1], -x[2] + x[0] * x[1]]),
            GroupKind::Table { table, identity } => {
                let row = &table[x[0] as usize];
                row.iter().position(|&p| p == *identity).map(|h| vec![h as i64])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let GroupKind::Table { table, identity } = &self.kind {
            let n = table.len();
            if n == 0 || *identity >= n || table.iter().any(|row| row.len() != n || row.iter().any(|&v| v >= n)) {
                return Err(Error::Spec("multiplication table must be square with entries in range".into()));
            }
            if (0..n).any(|a| table[*identity][a] != a || table[a][*identity] != a) {
                return Err(Error::Spec("identity element does not act trivially".into()));
            }
        }
        if let GroupKind::FreeAbelian { rank: 0 } = self.kind {
            return Err(Error::Spec("free abelian group needs rank ≥ 1".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::Spec("generating set is empty".into()));
        }
        let e = self.identity();
        let set: HashSet<&Vec<i64>> = self.generators.iter().collect();
        for g in &self.generators {
            if !self.valid_element(g) {
                return Err(Error::Spec(format!("generator {g:?} is not a group element")));
            }
            if *g == e {
                return Err(Error::Spec("generating set contains the identity".into()));
            }
            let inv = self
                .inverse(g)
                .ok_or_else(|| Error::Spec(format!("generator {g:?} has no inverse")))?;
            if !set.contains(&inv) {
                return Err(Error::Spec(format!("generating set is not symmetric: {g:?} lacks inverse {inv:?}")));
            }
        }
        Ok(())
    }
}

/// Cayley graph truncated to word length `radius_cap` around the identity.
#[derive(Clone, Debug)]
pub struct CayleyGraph {
    pub graph: Graph,
    /// Group element of each vertex; vertex 0 is the identity.
    pub elements: Vec<Vec<i64>>,
    pub word_length: Vec<u64>,
}

pub fn cayley_graph(spec: &GroupSpec, radius_cap: u64) -> Result<CayleyGraph> {
    spec.validate()?;
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut elements = vec![spec.identity()];
    let mut word_length = vec![0u64];
    index.insert(spec.identity(), 0);
    let mut edges = Vec::new();
    let mut head = 0;
    while head < elements.len() {
        let x = elements[head].clone();
        let lx = word_length[head];
        for g in &spec.generators {
            let y = spec.multiply(&x, g);
            let j = match index.get(&y) {
                Some(&j) => j,
                None if lx < radius_cap => {
                    let j = elements.len();
                    index.insert(y.clone(), j);
                    elements.push(y);
                    word_length.push(lx + 1);
                    j
                }
                None => continue,
            };
            edges.push((head, j));
        }
        head += 1;
    }
    let graph = Graph::from_edges(elements.len(), edges)?;
    Ok(CayleyGraph {
        graph,
        elements,
        word_length,
    })
}

/// Sierpinski gasket graph `SG_level`: `3^level` elementary triangles glued
/// at corners. Vertices 0, 1, 2 are the outer corners at every level.
pub fn sierpinski_graph(level: u32) -> Graph {
    let side = 1u64 << level;
    let mut cells = vec![(0u64, 0u64)];
    for l in (0..level).rev() {
        let half = 1u64 << l;
        cells = cells
            .into_iter()
            .flat_map(|(x, y)| [(x, y), (x + half, y), (x, y + half)])
            .collect();
    }
    let corners = [(0, 0), (side, 0), (0, side)];
    let mut ids: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for &(x, y) in &cells {
        for p in [(x, y), (x + 1, y), (x, y + 1)] {
            ids.insert(p, 0);
        }
    }
    let mut next = 3;
    for (p, id) in ids.iter_mut() {
        *id = match corners.iter().position(|c| c == p) {
            Some(i) => i,
            None => {
                next += 1;
                next - 1
            }
        };
    }
    let edges = cells.iter().flat_map(|&(x, y)| {
        let (a, b, c) = (ids[&(x, y)], ids[&(x + 1, y)], ids[&(x, y + 1)]);
        [(a, b), (b, c), (a, c)]
    });
    Graph::from_edges(ids.len(), edges).expect("gasket edges are valid")
}

pub fn taxicab_grid(spec: &GridSpec) -> Result<FiniteMetricSpace> {
    spec.validate()?;
    let graph = spec.graph();
    if graph.n_vertices() == 0 {
        return Err(Error::Construction("every grid node lies in a hole".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Construction("holes disconnect the grid".into()));
    }
    Ok(FiniteMetricSpace::from_graph(graph, spec.spacing)?.with_origin(SpaceSpec::Grid(spec.clone())))
}

pub fn cantor_tree(spec: &TreeSpec) -> Result<FiniteMetricSpace> {
    spec.validate()?;
    FiniteMetricSpace::from_tree(*spec)
}

/// A space generator description, serializable as a one-line record.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpaceSpec {
    Grid(GridSpec),
    Tree(TreeSpec),
    Cayley { group: GroupSpec, cap: u64 },
    Sierpinski { level: u32 },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<FiniteMetricSpace> {
        match self {
            SpaceSpec::Grid(g) => taxicab_grid(g),
            SpaceSpec::Tree(t) => cantor_tree(t),
            SpaceSpec::Cayley { group, cap } => {
                let c = cayley_graph(group, *cap)?;
                Ok(FiniteMetricSpace::from_graph(c.graph, Rational::one())?.with_origin(self.clone()))
            }
            SpaceSpec::Sierpinski { level } => {
                Ok(FiniteMetricSpace::from_graph(sierpinski_graph(*level), Rational::one())?.with_origin(self.clone()))
            }
        }
    }

    pub fn to_record(&self) -> Record {
        let join = |v: &[usize], sep: &str| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep);
        let elems = |gs: &[Vec<i64>]| {
            gs.iter()
                .map(|g| g.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut r = Record::new();
        match self {
            SpaceSpec::Grid(g) => {
                r.push("kind", "grid").push("dims", join(&g.dims, "x")).push("h", format_rational(&g.spacing));
                if !g.holes.is_empty() {
                    let holes: Vec<String> = g
                        .holes
                        .iter()
                        .map(|h| format!("{}..{}", join(&h.lo, ","), join(&h.hi, ",")))
                        .collect();
                    r.push("holes", holes.join(";"));
                }
            }
            SpaceSpec::Tree(t) => {
                r.push("kind", "tree")
                    .push("depth", t.depth)
                    .push("branching", t.branching)
                    .push("base", t.base);
            }
            SpaceSpec::Cayley { group, cap } => {
                r.push("kind", "cayley");
                match &group.kind {
                    GroupKind::FreeAbelian { rank } => {
                        r.push("group", "free-abelian").push("rank", rank);
                    }
                    GroupKind::Heisenberg => {
                        r.push("group", "heisenberg");
                    }
                    GroupKind::Table { table, identity } => {
                        let rows: Vec<String> = table.iter().map(|row| join(row, ",")).collect();
                        r.push("group", "table").push("rows", rows.join("|")).push("identity", identity);
                    }
                }
                r.push("gens", elems(&group.generators)).push("cap", cap);
            }
            SpaceSpec::Sierpinski { level } => {
                r.push("kind", "sierpinski").push("level", level);
            }
        }
        r
    }

    pub fn from_record(r: &Record) -> Result<Self> {
        let usize_list = |s: &str, sep: char| -> Result<Vec<usize>> {
            s.split(sep)
                .map(|t| t.trim().parse().map_err(|_| Error::param(format!("bad integer list {s:?}"))))
                .collect()
        };
        let elements = |s: &str| -> Result<Vec<Vec<i64>>> {
            s.split(';')
                .map(|g| {
                    g.split(',')
                        .map(|t| t.trim().parse().map_err(|_| Error::param(format!("bad generator {g:?}"))))
                        .collect()
                })
                .collect()
        };
        match r.require("kind")? {
            "grid" => {
                let dims = usize_list(r.require("dims")?, 'x')?;
                let spacing = match r.get("h") {
                    Some(h) => parse_rational(h)?,
                    None => Rational::one(),
                };
                let mut holes = Vec::new();
                if let Some(hs) = r.get("holes").filter(|h| !h.is_empty()) {
                    for h in hs.split(';') {
                        let (lo, hi) = h
                            .split_once("..")
                            .ok_or_else(|| Error::param(format!("hole {h:?} must look like lo..hi")))?;
                        holes.push(HoleBox {
                            lo: usize_list(lo, ',')?,
                            hi: usize_list(hi, ',')?,
                        });
                    }
                }
                Ok(SpaceSpec::Grid(GridSpec { dims, spacing, holes }))
            }
            "tree" => Ok(SpaceSpec::Tree(TreeSpec::new(
                r.parse_field("depth")?.ok_or_else(|| Error::param("tree needs depth"))?,
                r.parse_field("branching")?.ok_or_else(|| Error::param("tree needs branching"))?,
                r.parse_field("base")?.ok_or_else(|| Error::param("tree needs base"))?,
            )?)),
            "cayley" => {
                let cap = r.parse_field("cap")?.ok_or_else(|| Error::param("cayley needs cap"))?;
                let mut group = match r.require("group")? {
                    "free-abelian" => GroupSpec::free_abelian(r.parse_field("rank")?.unwrap_or(2)),
                    "heisenberg" => GroupSpec::heisenberg(),
                    "cyclic" => GroupSpec::cyclic(r.parse_field("order")?.ok_or_else(|| Error::param("cyclic needs order"))?),
                    "table" => {
                        let rows = r
                            .require("rows")?
                            .split('|')
                            .map(|row| usize_list(row, ','))
                            .collect::<Result<Vec<_>>>()?;
                        GroupSpec {
                            kind: GroupKind::Table {
                                table: rows,
                                identity: r.parse_field("identity")?.unwrap_or(0),
                            },
                            generators: Vec::new(),
                        }
                    }
                    other => return Err(Error::param(format!("unknown group {other:?}"))),
                };
                if let Some(g) = r.get("gens") {
                    group.generators = elements(g)?;
                }
                Ok(SpaceSpec::Cayley { group, cap })
            }
            "sierpinski" => Ok(SpaceSpec::Sierpinski {
                level: r.parse_field("level")?.ok_or_else(|| Error::param("sierpinski needs level"))?,
            }),
            other => Err(Error::param(format!("unknown space kind {other:?}"))),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record().inline())
    }
}

impl std::str::FromStr for SpaceSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SpaceSpec::from_record(&Record::parse(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;
    use crate::metric::{BallSpec, PointId};

    #[test]
    fn grid_basics() {
        let s = taxicab_grid(&GridSpec::new(&[3, 3])).unwrap();
        assert_eq!(s.n_points(), 9);
        assert_eq!(s.diameter(), int(4));
        let line = taxicab_grid(&GridSpec::new(&[2])).unwrap();
        assert_eq!(line.distance(PointId(0), PointId(1)).unwrap(), int(1));
    }

    #[test]
    fn grid_distance_is_l1() {
        let spec = GridSpec::new(&[4, 4]);
        let s = taxicab_grid(&spec).unwrap();
        let a = spec.point_index(&[0, 0]).unwrap();
        let b = spec.point_index(&[2, 1]).unwrap();
        assert_eq!(s.distance(PointId(a), PointId(b)).unwrap(), int(3));
    }

    #[test]
    fn holed_grid_routes_around() {
        let spec = GridSpec::new(&[5, 5]).with_hole(&[2, 2], &[2, 2]);
        let s = taxicab_grid(&spec).unwrap();
        assert_eq!(s.n_points(), 24);
        let a = spec.point_index(&[1, 2]).unwrap();
        let b = spec.point_index(&[3, 2]).unwrap();
        assert_eq!(s.distance(PointId(a), PointId(b)).unwrap(), int(4));
        let c = spec.point_index(&[2, 1]).unwrap();
        assert_eq!(s.distance(PointId(a), PointId(c)).unwrap(), int(2));
        assert_eq!(spec.point_index(&[2, 2]), None);
        assert_eq!(spec.coordinates().len(), 24);
    }

    #[test]
    fn grid_spacing_scales_distances() {
        let spec = GridSpec::new(&[3]).with_spacing(frac(1, 4));
        let s = taxicab_grid(&spec).unwrap();
        assert_eq!(s.distance(PointId(0), PointId(2)).unwrap(), frac(1, 2));
    }

    #[test]
    fn disconnecting_holes_rejected() {
        let spec = GridSpec::new(&[3, 3]).with_hole(&[1, 0], &[1, 2]);
        assert!(matches!(taxicab_grid(&spec), Err(Error::Construction(_))));
        let overlapping = GridSpec::new(&[5, 5]).with_hole(&[1, 1], &[2, 2]).with_hole(&[2, 2], &[3, 3]);
        assert!(taxicab_grid(&overlapping).is_err());
    }

    #[test]
    fn cantor_tree_distances() {
        let spec = TreeSpec::new(3, 2, 3).unwrap();
        let s = cantor_tree(&spec).unwrap();
        assert_eq!(s.n_points(), 8);
        assert_eq!(s.diameter(), frac(1, 3));
        assert_eq!(s.distance(PointId(0), PointId(1)).unwrap(), frac(1, 27));
        assert_eq!(s.distance(PointId(5), PointId(5)).unwrap(), int(0));
        // paths 000 and 010 first differ at branch 2
        assert_eq!(s.distance(PointId(0), PointId(2)).unwrap(), frac(1, 9));
        assert_eq!(spec.path(6), vec![1, 1, 0]);
    }

    #[test]
    fn tree_overflow_rejected() {
        assert!(TreeSpec::new(70, 2, 2).is_err());
        assert!(TreeSpec::new(3, 1, 3).is_err());
    }

    #[test]
    fn tree_ball_formula_examples() {
        let spec = TreeSpec::new(3, 2, 3).unwrap();
        assert_eq!(tree_ball_card(&spec, &int(1)).unwrap(), 8);
        assert_eq!(tree_ball_card(&spec, &frac(1, 3)).unwrap(), 4);
        assert_eq!(tree_ball_card(&spec, &(frac(1, 81) + frac(1, 1_000_000))).unwrap(), 1);
        assert!(tree_ball_card(&spec, &frac(1, 81)).is_err());
        assert!(tree_ball_card(&spec, &frac(3, 2)).is_err());
        let s = cantor_tree(&spec).unwrap();
        assert_eq!(s.ball_card(&BallSpec::open(0, frac(1, 3))).unwrap(), 4);
    }

    #[test]
    fn cyclic_cayley_is_cycle() {
        let c = cayley_graph(&GroupSpec::cyclic(6), 10).unwrap();
        assert_eq!(c.graph.n_vertices(), 6);
        assert!(c.graph.degrees().iter().all(|&d| d == 2));
        assert!(c.graph.is_connected());
        assert_eq!(c.graph.n_edges(), 6);
    }

    #[test]
    fn cayley_rejects_bad_generators() {
        let asym = GroupSpec::free_abelian(2).with_generators(vec![vec![1, 0], vec![0, 1], vec![0, -1]]);
        assert!(matches!(cayley_graph(&asym, 3), Err(Error::Spec(_))));
        let with_identity = GroupSpec::cyclic(4).with_generators(vec![vec![0], vec![1], vec![3]]);
        assert!(matches!(cayley_graph(&with_identity, 3), Err(Error::Spec(_))));
    }

    #[test]
    fn z2_cayley_ball_matches_taxicab() {
        let c = cayley_graph(&GroupSpec::free_abelian(2), 10).unwrap();
        let s = FiniteMetricSpace::from_graph(c.graph, int(1)).unwrap();
        assert_eq!(s.ball_card(&BallSpec::closed(0, int(2))).unwrap(), 13);
    }

    #[test]
    fn heisenberg_inverse_and_product() {
        let h = GroupSpec::heisenberg();
        let x = vec![2, -3, 5];
        let inv = h.inverse(&x).unwrap();
        assert_eq!(h.multiply(&x, &inv), vec![0, 0, 0]);
        assert_eq!(h.multiply(&inv, &x), vec![0, 0, 0]);
        // the commutator of the two generators is central
        let (a, b) = (vec![1, 0, 0], vec![0, 1, 0]);
        let ab = h.multiply(&a, &b);
        let ba = h.multiply(&b, &a);
        assert_eq!(ab, vec![1, 1, 1]);
        assert_eq!(ba, vec![1, 1, 0]);
    }

    #[test]
    fn sierpinski_small_levels() {
        let g0 = sierpinski_graph(0);
        assert_eq!((g0.n_vertices(), g0.n_edges()), (3, 3));
        let g1 = sierpinski_graph(1);
        assert_eq!((g1.n_vertices(), g1.n_edges()), (6, 9));
        for level in 0..6u32 {
            let g = sierpinski_graph(level);
            assert_eq!(g.n_vertices() as u64, 3 * (3u64.pow(level) + 1) / 2);
            assert_eq!(g.n_edges() as u64, 3u64.pow(level + 1));
            for corner in 0..3 {
                assert_eq!(g.degree(corner), 2);
            }
        }
    }

    #[test]
    fn spec_records_round_trip() {
        let specs = [
            SpaceSpec::Grid(GridSpec::new(&[5, 5]).with_hole(&[2, 2], &[2, 2]).with_spacing(frac(1, 2))),
            SpaceSpec::Tree(TreeSpec::new(3, 2, 3).unwrap()),
            SpaceSpec::Cayley {
                group: GroupSpec::heisenberg(),
                cap: 4,
            },
            SpaceSpec::Cayley {
                group: GroupSpec::cyclic(5),
                cap: 4,
            },
            SpaceSpec::Sierpinski { level: 2 },
        ];
        for s in specs {
            let text = s.to_string();
            assert_eq!(text.parse::<SpaceSpec>().unwrap(), s, "{text}");
        }
    }
}
