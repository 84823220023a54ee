//! Immutable input graphs and the plain-text edge-list format.
//!
//! The format is one edge per line as two whitespace-separated vertex ids.
//! An optional `n <count>` line before the first edge fixes the vertex count;
//! otherwise `n` is the largest id seen. Lines starting with `#` are comments.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::Vertex;

/// Exact all-sources diameter is refused above this many vertices.
pub const DIAMETER_VERTEX_LIMIT: usize = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: vertex id below 1")]
    VertexBelowOne { line: usize },
    #[error("line {line}: `{token}` is not a vertex id")]
    NonInteger { line: usize, token: String },
    #[error("line {line}: expected two vertex ids, found {found} tokens")]
    Malformed { line: usize, found: usize },
    #[error("edge list is empty")]
    EmptyEdgeList,
    #[error("declared n = {declared} is smaller than vertex id {max_id}")]
    DeclaredTooSmall { declared: u64, max_id: u64 },
    #[error("a graph needs at least two vertices, got {0}")]
    TooFewVertices(u64),
    #[error("edge ({0}, {1}) has an end outside 1..=n")]
    EndOutOfRange(Vertex, Vertex),
    #[error("exact diameter is limited to {DIAMETER_VERTEX_LIMIT} vertices, graph has {0}")]
    DiameterTooLarge(usize),
}

/// An undirected multigraph on vertices `1..=n`.
///
/// Duplicate edges and self-loops are kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: u32,
    edges: Vec<(Vertex, Vertex)>,
    offsets: Vec<usize>,
    neighbors: Vec<Vertex>,
}

impl Graph {
    pub fn new(n: u32, edges: Vec<(Vertex, Vertex)>) -> Result<Self, GraphError> {
        if n <= 1 {
            return Err(GraphError::TooFewVertices(n as u64));
        }
        if edges.is_empty() {
            return Err(GraphError::EmptyEdgeList);
        }
        for &(v, w) in &edges {
            if v == 0 || w == 0 || v > n || w > n {
                return Err(GraphError::EndOutOfRange(v, w));
            }
        }
        let mut degree = vec![0usize; n as usize + 2];
        for &(v, w) in &edges {
            degree[v as usize + 1] += 1;
            degree[w as usize + 1] += 1;
        }
        for i in 1..degree.len() {
            degree[i] += degree[i - 1];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut neighbors = vec![0; 2 * edges.len()];
        for &(v, w) in &edges {
            neighbors[fill[v as usize]] = w;
            fill[v as usize] += 1;
            neighbors[fill[w as usize]] = v;
            fill[w as usize] += 1;
        }
        Ok(Graph { n, edges, offsets, neighbors })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        1..=self.n
    }

    /// Neighbors of `v`, one entry per incident edge end (a self-loop shows up twice).
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).len()
    }

    /// Renders the graph in edge-list format, always with an `n` header.
    pub fn to_edge_list(&self) -> String {
        self.to_edge_list_with_comments(&[])
    }

    /// Like [`Graph::to_edge_list`] with leading `# ...` comment lines.
    pub fn to_edge_list_with_comments(&self, comments: &[String]) -> String {
        let mut out = String::with_capacity(12 * self.edges.len() + 64);
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "n {}", self.n);
        for &(v, w) in &self.edges {
            let _ = writeln!(out, "{v} {w}");
        }
        out
    }

    /// Exact components by breadth-first search.
    pub fn components_bfs(&self) -> Components {
        let n = self.n as usize;
        let mut label = vec![0 as Vertex; n + 1];
        let mut queue = VecDeque::new();
        let mut count = 0;
        for s in self.vertices() {
            if label[s as usize] != 0 {
                continue;
            }
            count += 1;
            label[s as usize] = s;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if label[w as usize] == 0 {
                        label[w as usize] = s;
                        queue.push_back(w);
                    }
                }
            }
        }
        Components { label, count }
    }

    /// BFS distances from `source`; unreachable vertices get `u32::MAX`.
    pub fn bfs_distances(&self, source: Vertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n as usize + 1];
        self.bfs_into(source, &mut dist, &mut VecDeque::new());
        dist
    }

    fn bfs_into(&self, source: Vertex, dist: &mut [u32], queue: &mut VecDeque<Vertex>) -> (Vertex, u32) {
        dist.fill(u32::MAX);
        dist[source as usize] = 0;
        queue.clear();
        queue.push_back(source);
        let mut far = (source, 0);
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            if d > far.1 {
                far = (v, d);
            }
            for &w in self.neighbors(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        far
    }

    /// Maximum over components of the component diameter, by BFS from every vertex.
    pub fn diameter(&self) -> Result<u32, GraphError> {
        let n = self.n as usize;
        if n > DIAMETER_VERTEX_LIMIT {
            return Err(GraphError::DiameterTooLarge(n));
        }
        let mut dist = vec![u32::MAX; n + 1];
        let mut queue = VecDeque::new();
        let mut d = 0;
        for s in self.vertices() {
            let (_, ecc) = self.bfs_into(s, &mut dist, &mut queue);
            d = d.max(ecc);
        }
        Ok(d)
    }

    /// Lower bound on [`Graph::diameter`] from repeated BFS sweeps per
    /// component. Exact when the graph is a forest.
    pub fn diameter_lower_bound(&self) -> u32 {
        let comps = self.components_bfs();
        let mut dist = vec![u32::MAX; self.n as usize + 1];
        let mut queue = VecDeque::new();
        let mut best = 0;
        for v in self.vertices() {
            if comps.label[v as usize] != v {
                continue;
            }
            let (a, _) = self.bfs_into(v, &mut dist, &mut queue);
            let (b, ecc_a) = self.bfs_into(a, &mut dist, &mut queue);
            let (_, ecc_b) = self.bfs_into(b, &mut dist, &mut queue);
            best = best.max(ecc_a).max(ecc_b);
        }
        best
    }

    /// True when the graph has no cycles (counting self-loops and parallel edges).
    pub fn is_forest(&self) -> bool {
        self.m() + self.components_bfs().count() == self.n as usize
    }

    /// Exact diameter when affordable: the sweep bound for forests, all-sources
    /// BFS up to `budget` vertex-edge visits, `None` otherwise.
    pub fn diameter_if_cheap(&self, budget: u64) -> Option<u32> {
        if self.is_forest() {
            return Some(self.diameter_lower_bound());
        }
        let cost = self.n as u64 * (self.n as u64 + 2 * self.m() as u64);
        if cost <= budget {
            self.diameter().ok()
        } else {
            None
        }
    }
}

/// A partition of the vertices into connected components, keyed by each
/// component's minimum vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    /// `label[v]` is the minimum vertex of `v`'s component (slot 0 unused).
    pub label: Vec<Vertex>,
    count: usize,
}

impl Components {
    pub(crate) fn from_labels(label: Vec<Vertex>) -> Self {
        let count = label
            .iter()
            .enumerate()
            .skip(1)
            .filter(|&(v, &l)| v as Vertex == l)
            .count();
        Components { label, count }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn minimum(&self, v: Vertex) -> Vertex {
        self.label[v as usize]
    }

    pub fn same(&self, v: Vertex, w: Vertex) -> bool {
        self.label[v as usize] == self.label[w as usize]
    }

    /// Component sizes indexed by vertex: `sizes[v]` is the size of `v`'s component.
    pub fn sizes(&self) -> Vec<usize> {
        let mut by_min = vec![0usize; self.label.len()];
        for &l in &self.label[1..] {
            by_min[l as usize] += 1;
        }
        let mut sizes = vec![0usize; self.label.len()];
        for v in 1..self.label.len() {
            sizes[v] = by_min[self.label[v] as usize];
        }
        sizes
    }

    /// Components as sorted vertex lists, ordered by minimum vertex.
    pub fn members(&self) -> Vec<Vec<Vertex>> {
        let mut index = vec![usize::MAX; self.label.len()];
        let mut out: Vec<Vec<Vertex>> = Vec::with_capacity(self.count);
        for v in 1..self.label.len() {
            let l = self.label[v] as usize;
            if index[l] == usize::MAX {
                index[l] = out.len();
                out.push(Vec::new());
            }
            out[index[l]].push(v as Vertex);
        }
        out
    }
}

/// Parses the edge-list format described in the module docs.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut declared: Option<u64> = None;
    let mut edges = Vec::new();
    let mut max_id: u64 = 0;
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !seen_content && tokens.first() == Some(&"n") {
            seen_content = true;
            if tokens.len() != 2 {
                return Err(GraphError::Malformed { line: line_no, found: tokens.len() });
            }
            declared = Some(parse_id(tokens[1], line_no)?);
            continue;
        }
        seen_content = true;
        if tokens.len() != 2 {
            return Err(GraphError::Malformed { line: line_no, found: tokens.len() });
        }
        let v = parse_id(tokens[0], line_no)?;
        let w = parse_id(tokens[1], line_no)?;
        max_id = max_id.max(v).max(w);
        edges.push((v as Vertex, w as Vertex));
    }
    if edges.is_empty() {
        return Err(GraphError::EmptyEdgeList);
    }
    let n = match declared {
        Some(d) if d < max_id => return Err(GraphError::DeclaredTooSmall { declared: d, max_id }),
        Some(d) => d,
        None => max_id,
    };
    if n <= 1 {
        return Err(GraphError::TooFewVertices(n));
    }
    let n = u32::try_from(n).map_err(|_| GraphError::NonInteger { line: 0, token: n.to_string() })?;
    Graph::new(n, edges)
}

fn parse_id(token: &str, line: usize) -> Result<u64, GraphError> {
    match token.parse::<i64>() {
        Ok(x) if x < 1 => Err(GraphError::VertexBelowOne { line }),
        Ok(x) if x > u32::MAX as i64 => Err(GraphError::NonInteger { line, token: token.to_string() }),
        Ok(x) => Ok(x as u64),
        Err(_) => Err(GraphError::NonInteger { line, token: token.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: u32, edges: &[(u32, u32)]) -> Graph {
        Graph::new(n, edges.to_vec()).unwrap()
    }

    #[test]
    fn parses_plain_pairs() {
        let graph = parse_edge_list("1 2\n2 3").unwrap();
        assert_eq!(graph.n(), 3);
        assert_eq!(graph.edges(), &[(1, 2), (2, 3)]);
    }

    #[test]
    fn header_fixes_vertex_count() {
        let graph = parse_edge_list("n 5\n1 2\n").unwrap();
        assert_eq!(graph.n(), 5);
        assert_eq!(graph.m(), 1);
        assert_eq!(graph.degree(4), 0);
        assert_eq!(graph.components_bfs().count(), 4);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_edge_list("0 4"), Err(GraphError::VertexBelowOne { line: 1 }));
        assert_eq!(parse_edge_list("-3 4"), Err(GraphError::VertexBelowOne { line: 1 }));
        assert!(matches!(parse_edge_list("1 x"), Err(GraphError::NonInteger { line: 1, .. })));
        assert!(matches!(parse_edge_list("1 2.5"), Err(GraphError::NonInteger { .. })));
        assert_eq!(parse_edge_list("# only a comment\n\n"), Err(GraphError::EmptyEdgeList));
        assert_eq!(parse_edge_list("n 4\n"), Err(GraphError::EmptyEdgeList));
        assert_eq!(
            parse_edge_list("n 2\n1 3"),
            Err(GraphError::DeclaredTooSmall { declared: 2, max_id: 3 })
        );
        assert_eq!(parse_edge_list("1 1"), Err(GraphError::TooFewVertices(1)));
        assert_eq!(parse_edge_list("1 2 3"), Err(GraphError::Malformed { line: 1, found: 3 }));
    }

    #[test]
    fn crlf_comments_duplicates_and_loops() {
        let graph = parse_edge_list("# made by hand\r\nn 4\r\n1 2\r\n1 2\r\n3 3\r\n").unwrap();
        assert_eq!(graph.n(), 4);
        assert_eq!(graph.edges(), &[(1, 2), (1, 2), (3, 3)]);
        assert_eq!(graph.neighbors(3), &[3, 3]);
        assert_eq!(graph.neighbors(1), &[2, 2]);
    }

    #[test]
    fn serialize_then_parse() {
        let graph = g(6, &[(1, 2), (5, 6), (2, 2)]);
        let text = graph.to_edge_list_with_comments(&["recipe: test".into()]);
        assert!(text.starts_with("# recipe: test\nn 6\n"));
        assert_eq!(parse_edge_list(&text).unwrap(), graph);
    }

    #[test]
    fn components() {
        let path = g(3, &[(1, 2), (2, 3)]);
        assert_eq!(path.components_bfs().members(), vec![vec![1, 2, 3]]);
        let two = g(4, &[(1, 2), (3, 4)]);
        assert_eq!(two.components_bfs().members(), vec![vec![1, 2], vec![3, 4]]);
        let star = g(5, &[(1, 2), (1, 3), (1, 4), (1, 5)]);
        assert_eq!(star.components_bfs().count(), 1);
        assert_eq!(star.components_bfs().members()[0].len(), 5);
    }

    #[test]
    fn diameters() {
        let path5 = g(5, &[(1, 2), (2, 3), (3, 4), (4, 5)]);
        assert_eq!(path5.diameter(), Ok(4));
        let k4 = g(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(k4.diameter(), Ok(1));
        let mut edges = vec![(1, 2), (2, 3)];
        edges.extend((4..10).map(|v| (v, v + 1)));
        let two_paths = g(10, &edges);
        assert_eq!(two_paths.diameter(), Ok(6));
        assert_eq!(two_paths.diameter_lower_bound(), 6);
        assert!(two_paths.is_forest());
    }

    #[test]
    fn path_diameter_for_all_small_lengths() {
        for k in 2..=100u32 {
            let edges = (1..k).map(|v| (v, v + 1)).collect();
            let path = Graph::new(k, edges).unwrap();
            assert_eq!(path.diameter(), Ok(k - 1));
        }
    }

    #[test]
    fn diameter_refuses_large_graphs() {
        let n = DIAMETER_VERTEX_LIMIT as u32 + 1;
        let graph = g(n, &[(1, 2)]);
        assert_eq!(graph.diameter(), Err(GraphError::DiameterTooLarge(n as usize)));
    }
}
