//! Undirected simple graphs and their on-disk formats.
//!
//! Two formats are accepted:
//!
//! - edge list: vertex count on the first line, then one `u v` pair per line.
//!   Blank lines and lines starting with `#` are ignored.
//! - JSON: `{ "n": 4, "edges": [[0, 1], [0, 2]] }`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected simple graph on vertices `0..n_vertices`.
///
/// Edges are stored normalised as `(min, max)` in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        Graph::new(f.n, f.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        GraphFile {
            n: g.n_vertices,
            edges: g.edges.into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl Graph {
    pub fn new<I>(n_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {u}")));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has an endpoint >= n = {n_vertices}"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            out.push(e);
        }
        Ok(Self {
            n_vertices,
            edges: out,
        })
    }

    pub fn empty(n_vertices: usize) -> Self {
        Self {
            n_vertices,
            edges: Vec::new(),
        }
    }

    pub fn complete(n_vertices: usize) -> Self {
        let edges = (0..n_vertices)
            .flat_map(|u| (u + 1..n_vertices).map(move |v| (u, v)))
            .collect();
        Self { n_vertices, edges }
    }

    /// The four-vertex example graph with edges 01, 02, 03, 13.
    pub fn four_node_example() -> Self {
        Self::new(4, [(0, 1), (0, 2), (0, 3), (1, 3)]).expect("valid example graph")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    count += 1;
                    stack.push(b);
                }
            }
        }
        count == self.n_vertices
    }

    /// Whether the vertex set `in_cover` touches every edge.
    pub fn is_vertex_cover(&self, in_cover: &[bool]) -> bool {
        self.edges.iter().all(|&(u, v)| in_cover[u] || in_cover[v])
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let n: usize = first
            .parse()
            .map_err(|_| Error::Parse(format!("line 1: expected vertex count, got {first:?}")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let mut it = line.split_whitespace();
            let (Some(u), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: expected `u v`, got {line:?}",
                    lineno + 1
                )));
            };
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad vertex {s:?}", lineno + 1)))
            };
            edges.push((parse(u)?, parse(v)?));
        }
        Self::new(n, edges)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let f: GraphFile = serde_json::from_str(text)?;
        f.try_into()
    }

    /// Load from disk; `.json` files use the JSON format, anything else is
    /// read as an edge list.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::parse_json(&text)
        } else {
            Self::parse_edge_list(&text)
        }
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n_vertices);
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_duplicates_and_out_of_range() {
        assert!(matches!(Graph::new(3, [(1, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(
            Graph::new(3, [(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(Graph::new(3, [(0, 3)]), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn example_degrees() {
        let g = Graph::four_node_example();
        assert_eq!(g.degrees(), vec![3, 2, 1, 2]);
        assert_eq!(g.n_edges(), 4);
        assert!(g.is_connected());
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("4\n0 1\n0 2\n# comment\n\n0 3\n1 3\n").unwrap();
        assert_eq!(g, Graph::four_node_example());
        assert!(Graph::parse_edge_list("").is_err());
        assert!(Graph::parse_edge_list("3\n0 1 2\n").is_err());
        assert!(Graph::parse_edge_list("3\n0 x\n").is_err());
        assert!(Graph::parse_edge_list("x\n").is_err());
    }

    #[test]
    fn json_parsing_validates() {
        let g = Graph::parse_json(r#"{ "n": 4, "edges": [[0,1],[0,2],[0,3],[1,3]] }"#).unwrap();
        assert_eq!(g, Graph::four_node_example());
        assert!(Graph::parse_json(r#"{ "n": 2, "edges": [[0,0]] }"#).is_err());
        assert_eq!(Graph::parse_json(&g.to_json()).unwrap(), g);
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn connectivity() {
        assert!(Graph::complete(5).is_connected());
        assert!(!Graph::empty(2).is_connected());
        assert!(Graph::empty(1).is_connected());
        assert!(!Graph::new(4, [(0, 1), (2, 3)]).unwrap().is_connected());
    }
}
