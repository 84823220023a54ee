//! Deterministic graph families.
//!
//! Recipes have a compact text form used by the CLI and written into
//! provenance headers: `path:k`, `cycle:k`, `star:k`, `complete:k`,
//! `grid:r,c`, `gnp:n,p,seed`, `W:k`, and `g:<recipe>` for the generator
//! transform of another recipe.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::Vertex;

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("{family} needs {what}, got {got}")]
    OutOfRange { family: &'static str, what: &'static str, got: String },
    #[error("gnp({n}, {p}, seed {seed}) produced no edges")]
    EmptyRandomGraph { n: u32, p: f64, seed: u64 },
    #[error("cannot parse recipe `{0}`")]
    BadRecipe(String),
    #[error("graph too large: {0} vertices")]
    TooLarge(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn check(ok: bool, family: &'static str, what: &'static str, got: impl fmt::Display) -> Result<(), GeneratorError> {
    if ok {
        Ok(())
    } else {
        Err(GeneratorError::OutOfRange { family, what, got: got.to_string() })
    }
}

pub fn path(k: u32) -> Result<Graph, GeneratorError> {
    check(k >= 2, "path", "at least 2 vertices", k)?;
    Ok(Graph::new(k, (1..k).map(|i| (i, i + 1)).collect())?)
}

pub fn cycle(k: u32) -> Result<Graph, GeneratorError> {
    check(k >= 3, "cycle", "at least 3 vertices", k)?;
    let mut edges: Vec<_> = (1..k).map(|i| (i, i + 1)).collect();
    edges.push((k, 1));
    Ok(Graph::new(k, edges)?)
}

/// Center 1 joined to every other vertex.
pub fn star(k: u32) -> Result<Graph, GeneratorError> {
    check(k >= 2, "star", "at least 2 vertices", k)?;
    Ok(Graph::new(k, (2..=k).map(|i| (1, i)).collect())?)
}

pub fn complete(k: u32) -> Result<Graph, GeneratorError> {
    check(k >= 2, "complete", "at least 2 vertices", k)?;
    check(k <= 5000, "complete", "at most 5000 vertices", k)?;
    Ok(Graph::new(k, (1..=k).flat_map(|v| (v + 1..=k).map(move |w| (v, w))).collect())?)
}

/// `r` rows by `c` columns, numbered row by row.
pub fn grid(r: u32, c: u32) -> Result<Graph, GeneratorError> {
    check(r >= 1 && c >= 1 && r * c >= 2, "grid", "at least 2 cells", format!("{r}x{c}"))?;
    let id = |i: u32, j: u32| i * c + j + 1;
    let mut edges = Vec::new();
    for i in 0..r {
        for j in 0..c {
            if j + 1 < c {
                edges.push((id(i, j), id(i, j + 1)));
            }
            if i + 1 < r {
                edges.push((id(i, j), id(i + 1, j)));
            }
        }
    }
    Ok(Graph::new(r * c, edges)?)
}

/// Erdős–Rényi graph: each pair `v < w` independently with probability `p`,
/// in lexicographic pair order, using geometric skips.
pub fn gnp(n: u32, p: f64, seed: u64) -> Result<Graph, GeneratorError> {
    check(n >= 2, "gnp", "at least 2 vertices", n)?;
    check(p > 0.0 && p < 1.0, "gnp", "0 < p < 1", p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_q = (1.0 - p).ln();
    let total = n as u64 * (n as u64 - 1) / 2;
    let mut edges = Vec::new();
    let mut idx: u64 = 0;
    // walk the pair index with row/column kept in step
    let (mut v, mut row_start, mut row_len) = (1u32, 0u64, n as u64 - 1);
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (total - idx) as f64 {
            break;
        }
        idx += skip as u64;
        while idx >= row_start + row_len {
            row_start += row_len;
            v += 1;
            row_len -= 1;
        }
        let w = v + 1 + (idx - row_start) as u32;
        edges.push((v, w));
        idx += 1;
        if idx >= total {
            break;
        }
    }
    if edges.is_empty() {
        return Err(GeneratorError::EmptyRandomGraph { n, p, seed });
    }
    Ok(Graph::new(n, edges)?)
}

/// `g(G)`: a new vertex `i + n'` for every vertex `i`, edges `(i, i + n')`,
/// and every edge `(i, j)` of `G` moved to `(i + n', j + n')`.
pub fn generator_transform(g: &Graph) -> Result<Graph, GeneratorError> {
    let n = g.n();
    if n as u64 * 2 > u32::MAX as u64 / 2 {
        return Err(GeneratorError::TooLarge(n as u64 * 2));
    }
    let mut edges: Vec<(Vertex, Vertex)> = (1..=n).map(|i| (i, i + n)).collect();
    edges.extend(g.edges().iter().map(|&(v, w)| (v + n, w + n)));
    Ok(Graph::new(2 * n, edges)?)
}

/// Disjoint union of `g^i(P)` for `i = 0..k`, `P` the path on `2^k + 1`
/// vertices, each component on a consecutive block of ids in order of `i`.
pub fn worst_case_w(k: u32) -> Result<Graph, GeneratorError> {
    check(k >= 2, "W", "k >= 2", k)?;
    check(k <= 13, "W", "k <= 13", k)?;
    let mut part = path((1 << k) + 1)?;
    let mut offset = 0;
    let mut edges = Vec::new();
    for i in 0..k {
        if i > 0 {
            part = generator_transform(&part)?;
        }
        edges.extend(part.edges().iter().map(|&(v, w)| (v + offset, w + offset)));
        offset += part.n();
    }
    Ok(Graph::new(offset, edges)?)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Recipe {
    Path(u32),
    Cycle(u32),
    Star(u32),
    Complete(u32),
    Grid(u32, u32),
    Gnp { n: u32, p: f64, seed: u64 },
    WorstCase(u32),
    Transform(Box<Recipe>),
}

impl Recipe {
    pub fn build(&self) -> Result<Graph, GeneratorError> {
        match self {
            Recipe::Path(k) => path(*k),
            Recipe::Cycle(k) => cycle(*k),
            Recipe::Star(k) => star(*k),
            Recipe::Complete(k) => complete(*k),
            Recipe::Grid(r, c) => grid(*r, *c),
            Recipe::Gnp { n, p, seed } => gnp(*n, *p, *seed),
            Recipe::WorstCase(k) => worst_case_w(*k),
            Recipe::Transform(inner) => generator_transform(&inner.build()?),
        }
    }

    /// Exact diameter when known in closed form.
    pub fn analytic_diameter(&self) -> Option<u32> {
        match self {
            Recipe::Path(k) => Some(k - 1),
            Recipe::Cycle(k) => Some(k / 2),
            Recipe::Star(k) => Some(if *k == 2 { 1 } else { 2 }),
            Recipe::Complete(_) => Some(1),
            Recipe::Grid(r, c) => Some(r + c - 2),
            _ => None,
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipe::Path(k) => write!(f, "path:{k}"),
            Recipe::Cycle(k) => write!(f, "cycle:{k}"),
            Recipe::Star(k) => write!(f, "star:{k}"),
            Recipe::Complete(k) => write!(f, "complete:{k}"),
            Recipe::Grid(r, c) => write!(f, "grid:{r},{c}"),
            Recipe::Gnp { n, p, seed } => write!(f, "gnp:{n},{p},{seed}"),
            Recipe::WorstCase(k) => write!(f, "W:{k}"),
            Recipe::Transform(inner) => write!(f, "g:{inner}"),
        }
    }
}

impl FromStr for Recipe {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeneratorError::BadRecipe(s.to_string());
        let (family, args) = s.trim().split_once(':').ok_or_else(bad)?;
        if family == "g" {
            return Ok(Recipe::Transform(Box::new(args.parse()?)));
        }
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<u32, GeneratorError> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let arity = |k: usize| if parts.len() == k { Ok(()) } else { Err(bad()) };
        let recipe = match family {
            "path" => Recipe::Path(int(0)?),
            "cycle" => Recipe::Cycle(int(0)?),
            "star" => Recipe::Star(int(0)?),
            "complete" => Recipe::Complete(int(0)?),
            "W" | "w" => Recipe::WorstCase(int(0)?),
            "grid" => {
                arity(2)?;
                Recipe::Grid(int(0)?, int(1)?)
            }
            "gnp" => {
                arity(3)?;
                Recipe::Gnp {
                    n: int(0)?,
                    p: parts[1].parse().map_err(|_| bad())?,
                    seed: parts[2].parse().map_err(|_| bad())?,
                }
            }
            _ => return Err(bad()),
        };
        if !matches!(recipe, Recipe::Grid(..) | Recipe::Gnp { .. }) {
            arity(1)?;
        }
        Ok(recipe)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_components;

    #[test]
    fn small_families() {
        assert_eq!(path(3).unwrap().edges(), &[(1, 2), (2, 3)]);
        assert_eq!(star(4).unwrap().edges(), &[(1, 2), (1, 3), (1, 4)]);
        assert_eq!(cycle(3).unwrap().m(), 3);
        assert_eq!(complete(4).unwrap().m(), 6);
        let g = grid(2, 3).unwrap();
        assert_eq!((g.n(), g.m()), (6, 7));
        assert!(path(1).is_err());
        assert!(cycle(2).is_err());
        assert!(gnp(10, 0.0, 1).is_err());
        assert!(gnp(10, 1.0, 1).is_err());
    }

    #[test]
    fn gnp_is_seeded() {
        let a = gnp(100, 0.05, 7).unwrap();
        let b = gnp(100, 0.05, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gnp(100, 0.05, 8).unwrap());
        assert!(a.edges().iter().all(|&(v, w)| v < w));
        assert!(a.edges().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gnp_density_is_plausible() {
        let g = gnp(1000, 0.01, 3).unwrap();
        let expected = 0.01 * 1000.0 * 999.0 / 2.0;
        assert!((g.m() as f64 - expected).abs() < 5.0 * expected.sqrt(), "{} edges", g.m());
    }

    #[test]
    fn gnp_reports_empty_graphs() {
        let hit = (0..200).find_map(|s| gnp(3, 0.01, s).err());
        assert!(matches!(hit, Some(GeneratorError::EmptyRandomGraph { .. })));
    }

    #[test]
    fn transform_of_triangle() {
        let g = generator_transform(&complete(3).unwrap()).unwrap();
        assert_eq!(g.n(), 6);
        let mut e = g.edges().to_vec();
        e.sort();
        assert_eq!(e, vec![(1, 4), (2, 5), (3, 6), (4, 5), (4, 6), (5, 6)]);
    }

    #[test]
    fn repeated_transform_counts() {
        let base = path(9).unwrap();
        let (n0, m0) = (base.n() as u64, base.m() as u64);
        let mut g = base;
        for r in 1..=5u32 {
            g = generator_transform(&g).unwrap();
            assert_eq!(g.n() as u64, n0 << r);
            assert_eq!(g.m() as u64, n0 * ((1 << r) - 1) + m0);
            assert!(g.is_forest());
            assert_eq!(oracle_components(&g).count(), 1);
        }
    }

    #[test]
    fn worst_case_counts() {
        let w2 = worst_case_w(2).unwrap();
        assert_eq!((w2.n(), w2.m()), (15, 13));
        for k in 2..=8u32 {
            let w = worst_case_w(k).unwrap();
            let comps = oracle_components(&w).count() as u64;
            assert_eq!(w.n() as u64, (1u64 << (2 * k)) - 1);
            assert_eq!(comps, k as u64);
            assert_eq!(w.m() as u64, w.n() as u64 - comps, "each component is a tree");
            assert_eq!(w.m() as u64, (1u64 << (2 * k)) - k as u64 - 1);
        }
        assert!(worst_case_w(1).is_err());
    }

    #[test]
    fn recipes_round_trip() {
        for text in ["path:9", "cycle:4", "star:5", "complete:17", "grid:3,7", "gnp:100,0.05,7", "W:3", "g:path:3"] {
            let r: Recipe = text.parse().unwrap();
            assert_eq!(r.to_string(), text);
        }
        assert_eq!("W:3".parse::<Recipe>().unwrap().build().unwrap().n(), 63);
        assert_eq!("path:9".parse::<Recipe>().unwrap().build().unwrap().m(), 8);
        for bad in ["path", "path:x", "grid:3", "gnp:10,0.5", "torus:3", "path:3,4"] {
            assert!(bad.parse::<Recipe>().is_err(), "{bad}");
        }
    }

    #[test]
    fn analytic_diameters_agree() {
        for text in ["path:17", "cycle:9", "cycle:100", "star:5", "star:2", "complete:6", "grid:3,7"] {
            let r: Recipe = text.parse().unwrap();
            assert_eq!(r.analytic_diameter(), Some(r.build().unwrap().diameter().unwrap()), "{text}");
        }
    }
}
