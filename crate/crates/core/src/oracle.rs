//! Ground truth for connectivity, final-labeling verification, and search for
//! small graphs on which two algorithms make different parent changes.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drivers::{run_lockstep, AlgorithmKind, AlgorithmSpec, LockstepOutcome, RunError};
use crate::forest::LabelForest;
use crate::graph::{Components, Graph};
use crate::Vertex;

/// Union-find with union by size and path compression.
#[derive(Clone, Debug)]
pub struct Dsu {
    parent: Vec<Vertex>,
    size: Vec<u32>,
    count: usize,
}

impl Dsu {
    /// `n` singletons `1..=n`.
    pub fn new(n: u32) -> Self {
        Dsu { parent: (0..=n).collect(), size: vec![1; n as usize + 1], count: n as usize }
    }

    pub fn find(&mut self, v: Vertex) -> Vertex {
        let mut r = v;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut x = v;
        while self.parent[x as usize] != r {
            let next = self.parent[x as usize];
            self.parent[x as usize] = r;
            x = next;
        }
        r
    }

    /// Returns false when `v` and `w` were already together.
    pub fn union(&mut self, v: Vertex, w: Vertex) -> bool {
        let (mut a, mut b) = (self.find(v), self.find(w));
        if a == b {
            return false;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        self.count -= 1;
        true
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Exact partition of `g`, labeled by component minimum.
pub fn oracle_components(g: &Graph) -> Components {
    let mut dsu = Dsu::new(g.n());
    for &(v, w) in g.edges() {
        dsu.union(v, w);
    }
    let n = g.n() as usize;
    let mut min = vec![Vertex::MAX; n + 1];
    for v in 1..=g.n() {
        let r = dsu.find(v) as usize;
        min[r] = min[r].min(v);
    }
    let mut label = vec![0; n + 1];
    for v in 1..=g.n() {
        label[v as usize] = min[dsu.find(v) as usize];
    }
    Components::from_labels(label)
}

/// Why a final labeling is wrong.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
pub enum Counterexample {
    #[error("forest is not flat at vertex {vertex}")]
    NotFlat { vertex: Vertex },
    #[error("{v} and {w} are in one component but have labels {label_v} and {label_w}")]
    SplitComponent { v: Vertex, w: Vertex, label_v: Vertex, label_w: Vertex },
    #[error("{v} and {w} are in different components but share label {label}")]
    MergedComponents { v: Vertex, w: Vertex, label: Vertex },
    #[error("label {label} of {vertex} lies outside its component")]
    ForeignLabel { vertex: Vertex, label: Vertex },
    #[error("label {label} of {vertex} is not its component minimum {minimum}")]
    NotMinimum { vertex: Vertex, label: Vertex, minimum: Vertex },
    #[error("forest has {forest} vertices, graph has {graph}")]
    SizeMismatch { forest: u32, graph: u32 },
}

/// Checks a terminated run's forest against the oracle partition.
pub fn verify_final(f: &LabelForest, g: &Graph, min_labeling: bool) -> Result<(), Counterexample> {
    if f.n() != g.n() {
        return Err(Counterexample::SizeMismatch { forest: f.n(), graph: g.n() });
    }
    for v in f.vertices() {
        if !f.is_root(f.parent(v)) {
            return Err(Counterexample::NotFlat { vertex: v });
        }
    }
    let comps = oracle_components(g);
    let n = g.n() as usize;
    // label -> component minimum and a witness vertex, component minimum -> label and witness
    let mut comp_of_label: Vec<(Vertex, Vertex)> = vec![(0, 0); n + 1];
    let mut label_of_comp: Vec<(Vertex, Vertex)> = vec![(0, 0); n + 1];
    for v in f.vertices() {
        let label = f.parent(v);
        let c = comps.minimum(v);
        if comps.minimum(label) != c {
            return Err(Counterexample::ForeignLabel { vertex: v, label });
        }
        if min_labeling && label != c {
            return Err(Counterexample::NotMinimum { vertex: v, label, minimum: c });
        }
        let (seen_c, w) = comp_of_label[label as usize];
        if seen_c == 0 {
            comp_of_label[label as usize] = (c, v);
        } else if seen_c != c {
            return Err(Counterexample::MergedComponents { v: w, w: v, label });
        }
        let (seen_l, w) = label_of_comp[c as usize];
        if seen_l == 0 {
            label_of_comp[c as usize] = (label, v);
        } else if seen_l != label {
            return Err(Counterexample::SplitComponent { v: w, w: v, label_v: seen_l, label_w: label });
        }
    }
    Ok(())
}

/// Checks that `edge_ids` form a spanning forest of `g`.
pub fn verify_spanning_forest(g: &Graph, edge_ids: &[u32]) -> Result<(), String> {
    let mut dsu = Dsu::new(g.n());
    for &e in edge_ids {
        let &(v, w) = g.edges().get(e as usize).ok_or_else(|| format!("edge id {e} out of range"))?;
        if !dsu.union(v, w) {
            return Err(format!("edge {e} = ({v},{w}) closes a cycle"));
        }
    }
    let comps = oracle_components(g).count();
    let expected = g.n() as usize - comps;
    if edge_ids.len() != expected {
        return Err(format!("{} edges, expected n - components = {expected}", edge_ids.len()));
    }
    Ok(())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("max_n {0} is outside 2..=13")]
    BoundOutOfRange(u32),
    #[error("search budget of {budget} graphs exhausted before reaching n = {reached_n}")]
    BudgetExhausted { budget: u64, reached_n: u32 },
    #[error(transparent)]
    Run(#[from] RunError),
}

/// A graph on which two algorithms diverge, with the lockstep report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub graph: Graph,
    pub outcome: LockstepOutcome,
    pub examined: u64,
}

impl Witness {
    /// Edge-list text with a provenance comment.
    pub fn to_edge_list(&self, a: AlgorithmKind, b: AlgorithmKind) -> String {
        let mut comments = vec![format!(
            "divergence witness for {a} vs {b}: n={} m={}, {} graphs examined",
            self.graph.n(),
            self.graph.m(),
            self.examined
        )];
        if let LockstepOutcome::Diverged { step, left, right, vertex, .. } = &self.outcome {
            let side = |p: &Option<crate::drivers::StepPosition>| match p {
                Some(p) => format!("round {} {}", p.round, p.op),
                None => "terminated".into(),
            };
            comments.push(format!(
                "first divergence at step {step}: {a} {} / {b} {}{}",
                side(left),
                side(right),
                vertex.map(|v| format!(", vertex {v}")).unwrap_or_default()
            ));
        }
        self.graph.to_edge_list_with_comments(&comments)
    }
}

/// Default cap on graphs examined by [`divergence_search`].
pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;

/// Smallest connected graph, in (n, m, lexicographic edge list) order, on
/// which `a` and `b` make different parent changes.
///
/// Labeled graphs are enumerated without isomorph pruning: the algorithms
/// depend on vertex order, so relabeled copies are genuinely different
/// inputs. Disconnected graphs are skipped.
pub fn divergence_search(
    a: AlgorithmKind,
    b: AlgorithmKind,
    max_n: u32,
    budget: u64,
) -> Result<Option<Witness>, SearchError> {
    if !(2..=13).contains(&max_n) {
        return Err(SearchError::BoundOutOfRange(max_n));
    }
    let (sa, sb) = (AlgorithmSpec::new(a), AlgorithmSpec::new(b));
    let examined = AtomicU64::new(0);
    for n in 2..=max_n {
        let pairs: Vec<(Vertex, Vertex)> =
            (1..=n).flat_map(|v| (v + 1..=n).map(move |w| (v, w))).collect();
        let total = pairs.len();
        for m in (n as usize - 1)..=total {
            let before = examined.load(Ordering::Relaxed);
            let count = binomial(total as u64, m as u64);
            if before.saturating_add(count.unwrap_or(u64::MAX)) > budget {
                return Err(SearchError::BudgetExhausted { budget, reached_n: n });
            }
            let count = count.unwrap() as usize;
            // combinations in lexicographic order, sharded by rank
            const CHUNK: usize = 4096;
            let chunks = count.div_ceil(CHUNK);
            let found = (0..chunks)
                .into_par_iter()
                .map(|c| -> Result<Option<Witness>, RunError> {
                    let start = c * CHUNK;
                    let end = (start + CHUNK).min(count);
                    let mut comb = unrank_combination(total, m, start as u64);
                    for _ in start..end {
                        examined.fetch_add(1, Ordering::Relaxed);
                        let edges: Vec<_> = comb.iter().map(|&i| pairs[i]).collect();
                        let g = Graph::new(n, edges).expect("valid edges");
                        if is_connected(&g) {
                            let outcome = run_lockstep(&sa, &sb, &g)?;
                            if !outcome.is_equal() {
                                return Ok(Some(Witness { graph: g, outcome, examined: 0 }));
                            }
                        }
                        next_combination(&mut comb, total);
                    }
                    Ok(None)
                })
                .find_first(|r| !matches!(r, Ok(None)));
            match found {
                Some(Ok(Some(mut w))) => {
                    w.examined = examined.load(Ordering::Relaxed);
                    return Ok(Some(w));
                }
                Some(Err(e)) => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(None)
}

fn is_connected(g: &Graph) -> bool {
    let mut dsu = Dsu::new(g.n());
    for &(v, w) in g.edges() {
        dsu.union(v, w);
    }
    dsu.count() == 1
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return None;
        }
    }
    Some(r as u64)
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
fn unrank_combination(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut x = next;
        loop {
            let remaining = binomial((n - x - 1) as u64, (k - slot - 1) as u64).unwrap_or(u64::MAX);
            if rank < remaining {
                break;
            }
            rank -= remaining;
            x += 1;
        }
        out.push(x);
        next = x + 1;
    }
    out
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn components_with_minima() {
        let g = Graph::new(6, vec![(2, 3), (5, 6)]).unwrap();
        let c = oracle_components(&g);
        assert_eq!(c.count(), 4);
        let minima: Vec<Vertex> = (1..=6).map(|v| c.minimum(v)).collect();
        assert_eq!(minima, vec![1, 2, 2, 4, 5, 5]);

        let path = Graph::new(5, (1..5).map(|i| (i, i + 1)).collect()).unwrap();
        assert_eq!(oracle_components(&path).count(), 1);
    }

    #[test]
    fn verification_cases() {
        let path = Graph::new(5, (1..5).map(|i| (i, i + 1)).collect()).unwrap();
        let all_one = LabelForest::from_parents(&[1, 1, 1, 1, 1]).unwrap();
        assert_eq!(verify_final(&all_one, &path, true), Ok(()));

        let triangle = Graph::new(3, vec![(1, 2), (2, 3), (1, 3)]).unwrap();
        let split = LabelForest::from_parents(&[1, 1, 3]).unwrap();
        assert!(matches!(verify_final(&split, &triangle, false), Err(Counterexample::SplitComponent { .. })));

        let other_root = LabelForest::from_parents(&[3, 3, 3]).unwrap();
        assert_eq!(verify_final(&other_root, &triangle, false), Ok(()));
        assert!(matches!(verify_final(&other_root, &triangle, true), Err(Counterexample::NotMinimum { .. })));

        let two = Graph::new(4, vec![(1, 2), (3, 4)]).unwrap();
        let merged = LabelForest::from_parents(&[1, 1, 1, 1]).unwrap();
        assert!(matches!(verify_final(&merged, &two, false), Err(Counterexample::ForeignLabel { .. })));

        let deep = LabelForest::from_parents(&[1, 1, 2]).unwrap();
        assert_eq!(verify_final(&deep, &triangle, true), Err(Counterexample::NotFlat { vertex: 3 }));
    }

    #[test]
    fn spanning_forest_check() {
        let g = Graph::new(4, vec![(1, 2), (2, 3), (1, 3), (3, 4)]).unwrap();
        assert!(verify_spanning_forest(&g, &[0, 1, 3]).is_ok());
        assert!(verify_spanning_forest(&g, &[0, 1, 2]).is_err());
        assert!(verify_spanning_forest(&g, &[0, 1]).is_err());
    }

    #[test]
    fn combination_enumeration() {
        let mut all = Vec::new();
        let mut c = unrank_combination(5, 3, 0);
        loop {
            all.push(c.clone());
            if !next_combination(&mut c, 5) {
                break;
            }
        }
        assert_eq!(all.len(), 10);
        for (rank, comb) in all.iter().enumerate() {
            assert_eq!(&unrank_combination(5, 3, rank as u64), comb);
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn search_bounds() {
        assert_eq!(
            divergence_search(AlgorithmKind::R, AlgorithmKind::RA, 14, 10).unwrap_err(),
            SearchError::BoundOutOfRange(14)
        );
        assert!(matches!(
            divergence_search(AlgorithmKind::R, AlgorithmKind::RA, 8, 10),
            Err(SearchError::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn equivalent_pairs_have_no_small_witness() {
        assert_eq!(divergence_search(AlgorithmKind::R, AlgorithmKind::RA, 5, u64::MAX).unwrap(), None);
        assert_eq!(divergence_search(AlgorithmKind::S, AlgorithmKind::SA, 5, u64::MAX).unwrap(), None);
    }

    proptest! {
        #[test]
        fn dsu_matches_bfs(n in 2u32..60, pairs in prop::collection::vec((1u32..60, 1u32..60), 1..90)) {
            let mut edges: Vec<_> = pairs.into_iter().filter(|&(v, w)| v <= n && w <= n).collect();
            if edges.is_empty() {
                edges.push((1, 2));
            }
            let g = Graph::new(n, edges).unwrap();
            let a = oracle_components(&g);
            let b = g.components_bfs();
            prop_assert_eq!(a.count(), b.count());
            for v in 1..=n {
                prop_assert_eq!(a.minimum(v), b.minimum(v));
            }
        }
    }
}
