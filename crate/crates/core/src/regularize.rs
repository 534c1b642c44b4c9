//! Spiked graphs and degree regularization.
//!
//! Every base vertex `x` of degree `d` receives a gadget `F_x = {x} ∪ A ∪ B`
//! with `|A| = s = k + 1 − d` and `|B| = d + 1`, so `|F_x| = k + 3`. `x` is
//! joined to all of `A`, `A × B` is complete, `B` is complete, and the
//! graph on `A` is `(s − 2)`-regular. Then every vertex has degree `k + 1`.
//!
//! When `d` is odd, `s` is odd and no `(s − 2)`-regular graph on `s`
//! vertices exists. No self-contained gadget can fix this: inside `F_x` the
//! degree sum is `s + (|F_x| − 1)(k + 1)`, which is odd. The odd-degree base
//! vertices are therefore paired along a T-join `J` of the base graph (a set
//! of base edges in which exactly those vertices have odd degree), and each
//! edge `xy` of `J` becomes a bridge between one gadget vertex of `F_x` and
//! one of `F_y`. Each bridged vertex drops one internal edge to compensate.
//! Bridges are recorded separately from the base and spike edges.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::record::Record;

/// Circulant graph on `Z/s` with connection set `±1, …, ±r/2`.
pub fn circulant_regular(s: usize, r: usize) -> Result<Graph> {
    if s < 4 || !s.is_multiple_of(2) {
        return Err(Error::param(format!("circulant size must be even and ≥ 4, got {s}")));
    }
    if r < 2 || !r.is_multiple_of(2) || r > s - 2 {
        return Err(Error::param(format!("circulant degree must be even in [2, {}], got {r}", s - 2)));
    }
    let mut edges = Vec::with_capacity(s * r / 2);
    for i in 0..s {
        for step in 1..=r / 2 {
            edges.push((i, (i + step) % s));
        }
    }
    Graph::from_edges(s, edges)
}

/// A gadget attached to one base vertex, in union vertex ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spike {
    pub base: usize,
    /// All gadget vertices, including `base`.
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl Spike {
    pub fn trivial(base: usize) -> Spike {
        Spike {
            base,
            vertices: vec![base],
            edges: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpikedGraph {
    pub base: Graph,
    /// One gadget per base vertex, indexed by base vertex.
    pub spikes: Vec<Spike>,
    pub union: Graph,
    /// Union vertex → base vertex.
    pub projection: Vec<usize>,
    /// Union edges joining two different gadgets outside the base graph.
    pub bridges: Vec<(usize, usize)>,
}

/// Assembles the union of `base` and the gadgets. Base vertex `v` keeps id
/// `v`; the remaining gadget vertices must fill `n_base..N` exactly once.
/// Base vertices without a gadget get the trivial one.
pub fn spike_union(base: &Graph, spikes: &[Spike]) -> Result<SpikedGraph> {
    assemble(base, spikes, Vec::new())
}

fn assemble(base: &Graph, spikes: &[Spike], bridges: Vec<(usize, usize)>) -> Result<SpikedGraph> {
    let n = base.n_vertices();
    let mut by_base: Vec<Option<Spike>> = vec![None; n];
    for sp in spikes {
        if sp.base >= n {
            return Err(Error::Construction(format!("spike for unknown base vertex {}", sp.base)));
        }
        if by_base[sp.base].is_some() {
            return Err(Error::Construction(format!("two spikes for base vertex {}", sp.base)));
        }
        by_base[sp.base] = Some(sp.clone());
    }
    let spikes: Vec<Spike> = by_base
        .into_iter()
        .enumerate()
        .map(|(v, sp)| sp.unwrap_or_else(|| Spike::trivial(v)))
        .collect();
    let total: usize = spikes.iter().map(|s| s.vertices.len()).sum();
    let mut projection = vec![usize::MAX; total];
    for sp in &spikes {
        if !sp.vertices.contains(&sp.base) {
            return Err(Error::Construction(format!("spike of {} does not contain it", sp.base)));
        }
        for &y in &sp.vertices {
            if y >= total {
                return Err(Error::Construction(format!("vertex id {y} leaves the range 0..{total}")));
            }
            if y < n && y != sp.base {
                return Err(Error::Construction(format!("spike of {} claims base vertex {y}", sp.base)));
            }
            if projection[y] != usize::MAX {
                return Err(Error::Construction(format!("vertex {y} lies in two spikes")));
            }
            projection[y] = sp.base;
        }
    }
    let mut edges = base.edges();
    for sp in &spikes {
        let members: BTreeSet<usize> = sp.vertices.iter().copied().collect();
        for &(u, v) in &sp.edges {
            if u == v {
                return Err(Error::Construction(format!("loop at {u} in spike of {}", sp.base)));
            }
            if !members.contains(&u) || !members.contains(&v) {
                return Err(Error::Construction(format!("edge {u}-{v} leaves spike of {}", sp.base)));
            }
            edges.push((u, v));
        }
        let local: HashMap<usize, usize> = sp.vertices.iter().enumerate().map(|(i, &y)| (y, i)).collect();
        let g = Graph::from_edges(sp.vertices.len(), sp.edges.iter().map(|(u, v)| (local[u], local[v])))?;
        if !g.is_connected() {
            return Err(Error::Construction(format!("spike of {} is disconnected", sp.base)));
        }
    }
    for &(u, v) in &bridges {
        if u >= total || v >= total || projection[u] == projection[v] {
            return Err(Error::Construction(format!("bridge {u}-{v} does not join two spikes")));
        }
        edges.push((u, v));
    }
    let union = Graph::from_edges(total, edges)?;
    Ok(SpikedGraph {
        base: base.clone(),
        spikes,
        union,
        projection,
        bridges,
    })
}

#[derive(Clone, Debug)]
pub struct RegularizationResult {
    pub spiked: SpikedGraph,
    pub k: usize,
    pub target_degree: usize,
    pub gadget_sizes: Vec<usize>,
    /// Base vertices of odd degree, whose gadgets carry bridges.
    pub parity_fixes: Vec<usize>,
}

/// Smallest odd `k ≥ 3 + Δ`.
pub fn default_k(base: &Graph) -> usize {
    let k = 3 + base.max_degree();
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

/// Edges of a T-join for the odd-degree vertices: in every component a
/// spanning tree is walked leaves first, taking the parent edge whenever
/// the current vertex still has the wrong parity.
fn odd_vertex_join(base: &Graph) -> Vec<(usize, usize)> {
    let n = base.n_vertices();
    let mut odd: Vec<bool> = (0..n).map(|v| base.degree(v) % 2 == 1).collect();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in base.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut join = Vec::new();
    for &v in order.iter().rev() {
        if odd[v] && parent[v] != usize::MAX {
            let p = parent[v];
            join.push((v.min(p), v.max(p)));
            odd[v] = false;
            odd[p] = !odd[p];
        }
    }
    debug_assert!(odd.iter().all(|o| !o), "every component has an even number of odd vertices");
    join.sort_unstable();
    join
}

/// Local gadget: 0 is the base vertex, `1..=s` is `A`, the rest is `B`.
/// The first `j` gadget vertices after the base (A first, then B) are the
/// bridge endpoints and get one internal edge less.
fn gadget_edges(s: usize, b: usize, j: usize) -> Vec<(usize, usize)> {
    let a = |i: usize| 1 + i;
    let bb = |i: usize| 1 + s + i;
    let j_a = j.min(s);
    let j_b = j - j_a;
    debug_assert!(j_b.is_multiple_of(2) && j_b <= b);
    let mut edges = Vec::new();
    for i in 0..s {
        edges.push((0, a(i)));
    }
    // intra-A: K_s minus a removal graph R with degree 2 on deficit vertices and 1 elsewhere
    let mut removed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut remove = |u: usize, v: usize| {
        removed.insert((u.min(v), u.max(v)));
    };
    if j_a == 0 {
        let c = circulant_regular(s, s - 2).expect("s is even and at least 4");
        edges.extend(c.edges().into_iter().map(|(u, v)| (a(u), a(v))));
    } else {
        if j_a == s {
            for i in 0..s {
                remove(i, (i + 1) % s);
            }
        } else {
            // path n1 - d_0 - ... - d_{j-1} - n2, then a matching on the other normal vertices
            let (n1, n2) = (j_a, j_a + 1);
            remove(n1, 0);
            for i in 1..j_a {
                remove(i - 1, i);
            }
            remove(j_a - 1, n2);
            let mut i = j_a + 2;
            while i + 1 < s {
                remove(i, i + 1);
                i += 2;
            }
        }
        for u in 0..s {
            for v in u + 1..s {
                if !removed.contains(&(u, v)) {
                    edges.push((a(u), a(v)));
                }
            }
        }
    }
    let mut a_side = 0usize;
    let mut b_side = vec![0usize; b];
    for i in 0..s {
        for (l, slot) in b_side.iter_mut().enumerate() {
            edges.push((a(i), bb(l)));
            a_side += 1;
            *slot += 1;
        }
    }
    assert_eq!(a_side, s * b, "A half-edges");
    assert_eq!(b_side.iter().sum::<usize>(), b * s, "B half-edges");
    for u in 0..b {
        for v in u + 1..b {
            let matched = v == u + 1 && u % 2 == 0 && v < j_b;
            if !matched {
                edges.push((bb(u), bb(v)));
            }
        }
    }
    edges
}

/// Attaches gadgets so that the union is `(k + 1)`-regular with every
/// gadget vertex within distance 2 of its base vertex.
pub fn regularize_degrees(base: &Graph, k: usize) -> Result<RegularizationResult> {
    if k.is_multiple_of(2) {
        return Err(Error::param(format!("k must be odd, got {k}")));
    }
    if k < 3 + base.max_degree() {
        return Err(Error::param(format!(
            "k must be at least 3 + max degree = {}, got {k}",
            3 + base.max_degree()
        )));
    }
    let n = base.n_vertices();
    let join = odd_vertex_join(base);
    let mut join_degree = vec![0usize; n];
    for &(u, v) in &join {
        join_degree[u] += 1;
        join_degree[v] += 1;
    }
    let size = k + 3;
    let offset = |x: usize| n + x * (size - 1);
    let spikes: Vec<Spike> = (0..n)
        .into_par_iter()
        .map(|x| {
            let d = base.degree(x);
            let s = k + 1 - d;
            let local = gadget_edges(s, d + 1, join_degree[x]);
            let id = |i: usize| if i == 0 { x } else { offset(x) + i - 1 };
            Spike {
                base: x,
                vertices: (0..size).map(id).collect(),
                edges: local.into_iter().map(|(u, v)| (id(u), id(v))).collect(),
            }
        })
        .collect();
    // bridge endpoints: the first join_degree[x] non-base vertices of F_x
    let mut next = vec![0usize; n];
    let bridges: Vec<(usize, usize)> = join
        .iter()
        .map(|&(x, y)| {
            let u = offset(x) + next[x];
            let v = offset(y) + next[y];
            next[x] += 1;
            next[y] += 1;
            (u, v)
        })
        .collect();
    let spiked = assemble(base, &spikes, bridges)?;
    let spike_edges: usize = spiked.spikes.iter().map(|s| s.edges.len()).sum();
    assert_eq!(
        spiked.union.n_edges(),
        base.n_edges() + spike_edges + spiked.bridges.len(),
        "edge conservation"
    );
    Ok(RegularizationResult {
        spiked,
        k,
        target_degree: k + 1,
        gadget_sizes: vec![size; n],
        parity_fixes: (0..n).filter(|&x| base.degree(x) % 2 == 1).collect(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegularizationCheck {
    /// `(vertex, degree)` for every vertex whose degree is not `k + 1`.
    pub degree_violations: Vec<(usize, usize)>,
    pub loops: Vec<usize>,
    /// Base vertices whose gadget is disconnected.
    pub disconnected_spikes: Vec<usize>,
    /// Gadget vertices farther than 2 from their base vertex (`None` = unreachable).
    pub far_vertices: Vec<(usize, Option<u64>)>,
    /// Vertices whose projection is missing, out of range, or disagrees with the gadgets.
    pub projection_errors: Vec<usize>,
    /// Union edges that are neither base, spike nor bridge edges, or listed
    /// bridges that are absent.
    pub stray_edges: Vec<(usize, usize)>,
}

impl RegularizationCheck {
    pub fn passed(&self) -> bool {
        self.degree_violations.is_empty()
            && self.loops.is_empty()
            && self.disconnected_spikes.is_empty()
            && self.far_vertices.is_empty()
            && self.projection_errors.is_empty()
            && self.stray_edges.is_empty()
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new()
            .with("passed", self.passed())
            .with("degree_violations", self.degree_violations.len())
            .with("loops", self.loops.len())
            .with("disconnected_spikes", self.disconnected_spikes.len())
            .with("far_vertices", self.far_vertices.len())
            .with("projection_errors", self.projection_errors.len())
            .with("stray_edges", self.stray_edges.len());
        if let Some(&(v, d)) = self.degree_violations.first() {
            r.push("degree_witness", format!("{v}:{d}"));
        }
        if let Some(&(v, d)) = self.far_vertices.first() {
            r.push("far_witness", format!("{v}:{}", d.map_or("inf".to_string(), |d| d.to_string())));
        }
        if let Some(&v) = self.projection_errors.first() {
            r.push("projection_witness", v);
        }
        if let Some(&(u, v)) = self.stray_edges.first() {
            r.push("stray_witness", format!("{u}-{v}"));
        }
        r
    }
}

/// Exhaustive check of a regularization: uniform degree `k + 1`, no loops,
/// connected gadgets, every gadget vertex within union distance 2 of its
/// base vertex, a consistent projection, and edge conservation
/// `union = base ∪ spikes ∪ bridges`.
pub fn verify_regularization(result: &RegularizationResult) -> RegularizationCheck {
    let sp = &result.spiked;
    let g = &sp.union;
    let n = sp.base.n_vertices();
    let total = g.n_vertices();
    let mut check = RegularizationCheck::default();
    for v in 0..total {
        let deg = g.degree(v);
        if deg != result.target_degree {
            check.degree_violations.push((v, deg));
        }
        if g.has_edge(v, v) {
            check.loops.push(v);
        }
    }
    let mut fiber: Vec<Option<usize>> = vec![None; total];
    for (x, spike) in sp.spikes.iter().enumerate() {
        if spike.base != x {
            check.projection_errors.push(x);
        }
        for &y in &spike.vertices {
            if y < total {
                fiber[y] = Some(x);
            }
        }
    }
    for v in 0..total {
        let p = sp.projection.get(v).copied();
        let ok = p.is_some() && p == fiber[v] && (v >= n || p == Some(v));
        if !ok {
            check.projection_errors.push(v);
        }
    }
    check.projection_errors.sort_unstable();
    check.projection_errors.dedup();
    for (x, spike) in sp.spikes.iter().enumerate() {
        let members: Vec<usize> = spike.vertices.iter().copied().filter(|&y| y < total).collect();
        if !g.induced(&members).is_connected() {
            check.disconnected_spikes.push(x);
        }
        let dist = g.distances(x.min(total.saturating_sub(1))).unwrap_or_default();
        for &y in &members {
            match dist.get(y).copied().flatten() {
                Some(d) if d <= 2 => {}
                other => check.far_vertices.push((y, other)),
            }
        }
    }
    let bridges: BTreeSet<(usize, usize)> = sp.bridges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    for (u, v) in g.edges() {
        let (pu, pv) = (sp.projection.get(u), sp.projection.get(v));
        let same_spike = pu.is_some() && pu == pv;
        let base_edge = u < n && v < n && sp.base.has_edge(u, v);
        if !(same_spike || base_edge || bridges.contains(&(u, v))) {
            check.stray_edges.push((u, v));
        }
    }
    for &(u, v) in &bridges {
        if u >= total || v >= total || !g.has_edge(u, v) {
            check.stray_edges.push((u, v));
        }
    }
    for (u, v) in sp.base.edges() {
        if u >= total || v >= total || !g.has_edge(u, v) {
            check.stray_edges.push((u, v));
        }
    }
    check
}

impl RegularizationResult {
    /// Header record, then `[edges]`, `[projection]` (`union_vertex base_vertex`),
    /// `[parity_fixes]` and `[bridges]` sections.
    pub fn serialize(&self) -> String {
        let sp = &self.spiked;
        let mut out = Record::new()
            .with("k", self.k)
            .with("target_degree", self.target_degree)
            .with("base_vertices", sp.base.n_vertices())
            .with("union_vertices", sp.union.n_vertices())
            .inline();
        out.push_str("\n[edges]\n");
        for (u, v) in sp.union.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out.push_str("[projection]\n");
        for (y, p) in sp.projection.iter().enumerate() {
            let _ = writeln!(out, "{y} {p}");
        }
        out.push_str("[parity_fixes]\n");
        for x in &self.parity_fixes {
            let _ = writeln!(out, "{x}");
        }
        out.push_str("[bridges]\n");
        for (u, v) in &sp.bridges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Reads [`serialize`](Self::serialize) output. Only the file's own
    /// consistency is required here; whether it is a valid regularization is
    /// for [`verify_regularization`] to decide. The base graph is the union
    /// restricted to the base vertices minus the bridges.
    pub fn parse(text: &str) -> Result<RegularizationResult> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        });
        let (_, head) = lines.next().ok_or_else(|| Error::parse(1, "empty regularization file"))?;
        let header = Record::parse(head)?;
        let need = |key: &str| -> Result<usize> { header.parse_field(key)?.ok_or_else(|| Error::parse(1, format!("missing {key}"))) };
        let (k, target_degree, n, total) = (need("k")?, need("target_degree")?, need("base_vertices")?, need("union_vertices")?);
        let mut section = "";
        let mut edges = Vec::new();
        let mut projection = vec![usize::MAX; total];
        let mut parity_fixes = Vec::new();
        let mut bridges = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.starts_with('[') {
                section = match line {
                    "[edges]" | "[projection]" | "[parity_fixes]" | "[bridges]" => line,
                    other => return Err(Error::parse(i + 1, format!("unknown section {other}"))),
                };
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|e| Error::parse(i + 1, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let bad = || Error::parse(i + 1, format!("malformed line {line:?}"));
            match (section, nums.as_slice()) {
                ("[edges]", &[u, v]) if u < total && v < total => edges.push((u, v)),
                ("[projection]", &[y, p]) if y < total && p < n => projection[y] = p,
                ("[parity_fixes]", &[x]) if x < n => parity_fixes.push(x),
                ("[bridges]", &[u, v]) if u < total && v < total => bridges.push((u, v)),
                _ => return Err(bad()),
            }
        }
        let union = Graph::from_edges(total, edges)?;
        let bridge_set: BTreeSet<(usize, usize)> = bridges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        let base = Graph::from_edges(
            n,
            union
                .edges()
                .into_iter()
                .filter(|&(u, v)| u < n && v < n && !bridge_set.contains(&(u, v))),
        )?;
        let mut spikes: Vec<Spike> = (0..n).map(|x| Spike { base: x, vertices: Vec::new(), edges: Vec::new() }).collect();
        for (y, &p) in projection.iter().enumerate() {
            if p != usize::MAX {
                spikes[p].vertices.push(y);
            }
        }
        for (u, v) in union.edges() {
            if projection[u] != usize::MAX && projection[u] == projection[v] && !(u < n && v < n) {
                spikes[projection[u]].edges.push((u, v));
            }
        }
        let gadget_sizes = spikes.iter().map(|s| s.vertices.len()).collect();
        Ok(RegularizationResult {
            spiked: SpikedGraph {
                base,
                spikes,
                union,
                projection,
                bridges,
            },
            k,
            target_degree,
            gadget_sizes,
            parity_fixes,
        })
    }
}
