//! Built-in graph suites.

use std::sync::OnceLock;

use crate::generators::{GeneratorError, Recipe};
use crate::graph::Graph;

/// All-sources BFS budget (vertex-edge visits) for exact diameters.
pub const EXACT_DIAMETER_BUDGET: u64 = 400_000_000;

/// What is known about a graph's diameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diameter {
    Exact(u32),
    /// From BFS sweeps; the true diameter may be larger.
    AtLeast(u32),
}

impl Diameter {
    pub fn value(self) -> u32 {
        match self {
            Diameter::Exact(d) | Diameter::AtLeast(d) => d,
        }
    }

    pub fn exact(self) -> Option<u32> {
        match self {
            Diameter::Exact(d) => Some(d),
            Diameter::AtLeast(_) => None,
        }
    }
}

/// A suite member, built on demand.
#[derive(Debug)]
pub struct SuiteGraph {
    pub recipe: Recipe,
    graph: OnceLock<Graph>,
}

impl SuiteGraph {
    pub fn new(recipe: Recipe) -> Self {
        SuiteGraph { recipe, graph: OnceLock::new() }
    }

    pub fn label(&self) -> String {
        self.recipe.to_string()
    }

    pub fn build(&self) -> Result<Graph, GeneratorError> {
        match self.graph.get() {
            Some(g) => Ok(g.clone()),
            None => self.recipe.build(),
        }
    }

    /// Builds and caches the graph.
    pub fn graph(&self) -> &Graph {
        self.graph.get_or_init(|| self.recipe.build().expect("suite recipes are valid"))
    }

    /// Cheapest diameter information that is still sound for upper-bound checks
    /// of the form `rounds <= d + c`: closed form, exact on forests, else sweeps.
    pub fn diameter_estimate(&self, g: &Graph) -> Diameter {
        if let Some(d) = self.recipe.analytic_diameter() {
            return Diameter::Exact(d);
        }
        if g.is_forest() {
            return Diameter::Exact(g.diameter_lower_bound());
        }
        Diameter::AtLeast(g.diameter_lower_bound())
    }
}

pub const PATH_SIZES: [u32; 6] = [2, 3, 5, 17, 64, 1025];
pub const CYCLE_SIZES: [u32; 5] = [3, 4, 9, 100, 1001];
pub const STAR_SIZES: [u32; 4] = [2, 5, 100, 2000];
pub const COMPLETE_SIZES: [u32; 4] = [2, 4, 17, 60];
pub const GRID_SHAPES: [(u32, u32); 4] = [(2, 2), (3, 7), (10, 10), (32, 32)];
pub const GNP_SIZES: [u32; 5] = [10, 50, 200, 1000, 5000];
pub const GNP_SEEDS: usize = 25;

/// Paths, cycles, stars, complete graphs, grids, and `W(k)` for `k = 2..=6`.
pub fn structured_suite() -> Vec<SuiteGraph> {
    let mut out = Vec::new();
    out.extend(PATH_SIZES.iter().map(|&k| Recipe::Path(k)));
    out.extend(CYCLE_SIZES.iter().map(|&k| Recipe::Cycle(k)));
    out.extend(STAR_SIZES.iter().map(|&k| Recipe::Star(k)));
    out.extend(COMPLETE_SIZES.iter().map(|&k| Recipe::Complete(k)));
    out.extend(GRID_SHAPES.iter().map(|&(r, c)| Recipe::Grid(r, c)));
    out.extend((2..=6).map(Recipe::WorstCase));
    out.into_iter().map(SuiteGraph::new).collect()
}

/// The three edge probabilities used for `n` vertices.
pub fn gnp_probabilities(n: u32) -> [f64; 3] {
    [1.5 / n as f64, 0.01, 0.1]
}

/// `seeds` random graphs per (n, p) pair. Seeds run 0, 1, 2, ... skipping any
/// that produce no edges, so every member has at least one edge.
pub fn gnp_suite(seeds: usize) -> Vec<SuiteGraph> {
    let mut out = Vec::new();
    for n in GNP_SIZES {
        for p in gnp_probabilities(n) {
            let mut seed = 0u64;
            let mut found = 0;
            while found < seeds {
                let recipe = Recipe::Gnp { n, p, seed };
                if has_edge(n, p, seed) {
                    out.push(SuiteGraph::new(recipe));
                    found += 1;
                }
                seed += 1;
            }
        }
    }
    out
}

fn has_edge(n: u32, p: f64, seed: u64) -> bool {
    // only tiny graphs can come out empty; build those to check
    if (n as f64) * (n as f64 - 1.0) / 2.0 * p > 50.0 {
        return true;
    }
    crate::generators::gnp(n, p, seed).is_ok()
}

/// Structured suite followed by the random suite.
pub fn full_suite() -> Vec<SuiteGraph> {
    let mut out = structured_suite();
    out.extend(gnp_suite(GNP_SEEDS));
    out
}

/// Paths on `2^i + 1` vertices.
pub fn power_paths(range: std::ops::RangeInclusive<u32>) -> Vec<SuiteGraph> {
    range.map(|i| SuiteGraph::new(Recipe::Path((1 << i) + 1))).collect()
}
