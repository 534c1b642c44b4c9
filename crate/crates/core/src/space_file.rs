//! Text format for spaces.
//!
//! The first line is a header record `backend=... n_points=...` followed by
//! either generator parameters (`kind=grid dims=3x3 ...`), the rows
//! `d(i, 0..i)` of an explicit matrix as comma separated exact decimals, or
//! a `u v` edge list for an unnamed graph space. A `gamma=` field records a
//! rescale.

use std::fmt::Write as _;

use num_traits::One;

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, Rational};
use crate::graph::Graph;
use crate::metric::{BackendKind, FiniteMetricSpace, PointId};
use crate::record::Record;
use crate::spaces::SpaceSpec;

fn backend_name(kind: BackendKind) -> &'static str {
    match kind {
        BackendKind::Explicit => "explicit",
        BackendKind::GraphBfs => "graph-bfs",
        BackendKind::ClosedForm => "closed-form",
    }
}

pub fn write_space_file(space: &FiniteMetricSpace) -> String {
    let mut header = Record::new()
        .with("backend", backend_name(space.backend_kind()))
        .with("n_points", space.n_points());
    if let Some(origin) = space.origin() {
        for (k, v) in origin.to_record().fields() {
            header.push(k, v);
        }
    }
    if space.origin().is_none() && space.backend_kind() == BackendKind::GraphBfs {
        header.push("step", format_rational(&(space.unit() * space.gamma())));
    }
    if !space.gamma().is_one() {
        header.push("gamma", format_rational(&space.gamma()));
    }
    let mut out = header.inline();
    out.push('\n');
    if space.origin().is_some() {
        return out;
    }
    match space.backend_kind() {
        BackendKind::Explicit => {
            let base_unit = space.unit() * space.gamma();
            for i in 1..space.n_points() {
                let row: Vec<String> = (0..i)
                    .map(|j| {
                        let t = space.ticks(PointId(i), PointId(j)).expect("valid");
                        format_rational(&(base_unit * Rational::from_integer(t as i128)))
                    })
                    .collect();
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        BackendKind::GraphBfs => {
            out.push_str(&space.graph().expect("graph backend").to_edge_list());
        }
        BackendKind::ClosedForm => unreachable!("closed-form spaces always carry their spec"),
    }
    out
}

pub fn read_space_file(text: &str) -> Result<FiniteMetricSpace> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('#')
    });
    let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty space file"))?;
    let header = Record::parse(first)?;
    let n: usize = header
        .parse_field("n_points")?
        .ok_or_else(|| Error::parse(1, "header lacks n_points"))?;
    let space = if header.get("kind").is_some() {
        SpaceSpec::from_record(&header)?.build()?
    } else {
        match header.require("backend")? {
            "explicit" => {
                let mut rows = vec![Vec::new()];
                for (i, line) in lines {
                    let row = line
                        .split(',')
                        .map(parse_rational)
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::parse(i + 1, e.to_string()))?;
                    rows.push(row);
                }
                if n == 0 {
                    rows.clear();
                }
                FiniteMetricSpace::from_lower_triangle(&rows)?
            }
            "graph-bfs" => {
                let step = match header.get("step") {
                    Some(s) => parse_rational(s)?,
                    None => Rational::one(),
                };
                let body: Vec<&str> = lines.map(|(_, l)| l).collect();
                let graph = Graph::parse_edge_list(&format!("# vertices {n}\n{}", body.join("\n")))?;
                FiniteMetricSpace::from_graph(graph, step)?
            }
            other => return Err(Error::param(format!("unknown backend {other:?}"))),
        }
    };
    if space.n_points() != n {
        return Err(Error::parse(1, format!("header says {n} points, content has {}", space.n_points())));
    }
    match header.get("gamma") {
        Some(g) => space.rescale(parse_rational(g)?),
        None => Ok(space),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{frac, int};
    use crate::spaces::{GridSpec, TreeSpec};

    fn same_distances(a: &FiniteMetricSpace, b: &FiniteMetricSpace) {
        assert_eq!(a.n_points(), b.n_points());
        for x in a.points() {
            for y in a.points() {
                assert_eq!(a.distance(x, y).unwrap(), b.distance(x, y).unwrap());
            }
        }
    }

    #[test]
    fn explicit_round_trip() {
        let rows = vec![vec![], vec![frac(1, 2)], vec![frac(1, 3), frac(5, 4)]];
        let s = FiniteMetricSpace::from_lower_triangle(&rows).unwrap();
        let text = write_space_file(&s);
        assert_eq!(text, "backend=explicit n_points=3\n0.5\n1/3,1.25\n");
        same_distances(&s, &read_space_file(&text).unwrap());
    }

    #[test]
    fn generated_and_rescaled_round_trip() {
        let grid = SpaceSpec::Grid(GridSpec::new(&[3, 4])).build().unwrap().rescale(int(2)).unwrap();
        let back = read_space_file(&write_space_file(&grid)).unwrap();
        same_distances(&grid, &back);
        assert_eq!(back.gamma(), int(2));
        let tree = SpaceSpec::Tree(TreeSpec::new(3, 2, 3).unwrap()).build().unwrap();
        same_distances(&tree, &read_space_file(&write_space_file(&tree)).unwrap());
    }

    #[test]
    fn plain_graph_round_trip() {
        let s = FiniteMetricSpace::from_graph(Graph::cycle(5), frac(1, 2)).unwrap();
        let text = write_space_file(&s);
        same_distances(&s, &read_space_file(&text).unwrap());
    }

    #[test]
    fn count_mismatch_rejected() {
        assert!(read_space_file("backend=explicit n_points=3\n1\n").is_err());
        assert!(read_space_file("").is_err());
    }
}
