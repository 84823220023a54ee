//! The label forest and the measurements taken on it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::EdgeState;
use crate::Vertex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("a forest needs at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("parent {parent} of vertex {vertex} is outside 1..=n")]
    ParentOutOfRange { vertex: Vertex, parent: Vertex },
    #[error("label digraph has a cycle through vertex {vertex}: {cycle:?}")]
    Cycle { vertex: Vertex, cycle: Vec<Vertex> },
}

/// Parent array over vertices `1..=n`. A vertex with `parent(v) == v` is a root.
///
/// Serializes as a JSON array of 1-indexed parent ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Vertex>", try_from = "Vec<Vertex>")]
pub struct LabelForest {
    // slot 0 is unused so vertex ids index directly
    parent: Vec<Vertex>,
}

impl From<LabelForest> for Vec<Vertex> {
    fn from(f: LabelForest) -> Self {
        f.parent[1..].to_vec()
    }
}

impl TryFrom<Vec<Vertex>> for LabelForest {
    type Error = ForestError;

    fn try_from(parents: Vec<Vertex>) -> Result<Self, ForestError> {
        LabelForest::from_parents(&parents)
    }
}

impl LabelForest {
    /// Every vertex labeled with itself.
    pub fn identity(n: u32) -> Result<Self, ForestError> {
        if n <= 1 {
            return Err(ForestError::TooFewVertices(n as usize));
        }
        Ok(LabelForest { parent: (0..=n).collect() })
    }

    /// Builds a forest from 1-indexed parent ids (`parents[0]` is vertex 1's parent).
    /// Acyclicity is not checked here; see [`assert_forest`].
    pub fn from_parents(parents: &[Vertex]) -> Result<Self, ForestError> {
        if parents.len() <= 1 {
            return Err(ForestError::TooFewVertices(parents.len()));
        }
        let n = parents.len() as Vertex;
        for (i, &p) in parents.iter().enumerate() {
            if p == 0 || p > n {
                return Err(ForestError::ParentOutOfRange { vertex: i as Vertex + 1, parent: p });
            }
        }
        let mut parent = Vec::with_capacity(parents.len() + 1);
        parent.push(0);
        parent.extend_from_slice(parents);
        Ok(LabelForest { parent })
    }

    pub fn n(&self) -> u32 {
        (self.parent.len() - 1) as u32
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        1..=self.n()
    }

    #[inline]
    pub fn parent(&self, v: Vertex) -> Vertex {
        self.parent[v as usize]
    }

    #[inline]
    pub(crate) fn set_parent(&mut self, v: Vertex, p: Vertex) {
        self.parent[v as usize] = p;
    }

    #[inline]
    pub fn is_root(&self, v: Vertex) -> bool {
        self.parent[v as usize] == v
    }

    /// Parent ids of vertices `1..=n`, in order.
    pub fn parents(&self) -> &[Vertex] {
        &self.parent[1..]
    }

    /// Parent array including the unused slot 0.
    pub(crate) fn raw(&self) -> &[Vertex] {
        &self.parent
    }

    pub(crate) fn raw_mut(&mut self) -> &mut Vec<Vertex> {
        &mut self.parent
    }

    /// True when every vertex's parent is a root.
    pub fn is_flat(&self) -> bool {
        self.vertices().all(|v| self.is_root(self.parent(v)))
    }

    /// Root and depth of every vertex (slot 0 unused). Fails on a cycle.
    pub fn shape(&self) -> Result<ForestShape, ForestError> {
        assert_forest(self)?;
        let n = self.n() as usize;
        let mut root = vec![0 as Vertex; n + 1];
        let mut depth = vec![u32::MAX; n + 1];
        let mut stack = Vec::new();
        for v in self.vertices() {
            let mut x = v;
            while depth[x as usize] == u32::MAX && !self.is_root(x) {
                stack.push(x);
                x = self.parent(x);
            }
            if depth[x as usize] == u32::MAX {
                depth[x as usize] = 0;
                root[x as usize] = x;
            }
            let (r, mut d) = (root[x as usize], depth[x as usize]);
            while let Some(y) = stack.pop() {
                d += 1;
                depth[y as usize] = d;
                root[y as usize] = r;
            }
        }
        Ok(ForestShape { root, depth })
    }
}

/// Per-vertex root and depth of an acyclic forest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestShape {
    pub root: Vec<Vertex>,
    pub depth: Vec<u32>,
}

/// Checks that following parents from every vertex reaches a self-labeled root.
/// Runs in O(n) using visitation stamps.
pub fn assert_forest(f: &LabelForest) -> Result<(), ForestError> {
    const DONE: u32 = u32::MAX;
    let n = f.n() as usize;
    let mut stamp = vec![0u32; n + 1];
    for v in f.vertices() {
        let mut x = v;
        loop {
            let s = stamp[x as usize];
            if s == DONE || f.is_root(x) {
                break;
            }
            if s == v {
                let mut cycle = vec![x];
                let mut y = f.parent(x);
                while y != x {
                    cycle.push(y);
                    y = f.parent(y);
                }
                return Err(ForestError::Cycle { vertex: *cycle.iter().min().unwrap(), cycle });
            }
            stamp[x as usize] = v;
            x = f.parent(x);
        }
        let mut y = v;
        while stamp[y as usize] == v {
            stamp[y as usize] = DONE;
            y = f.parent(y);
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub root: Vertex,
    pub size: u32,
    /// A singleton has height 0.
    pub height: u32,
    /// Every child's parent is the root; singletons count as flat.
    pub flat: bool,
}

/// Size, height and flatness of every tree, ordered by root.
pub fn tree_stats(f: &LabelForest) -> Result<Vec<TreeStats>, ForestError> {
    let shape = f.shape()?;
    Ok(tree_stats_from_shape(&shape))
}

pub(crate) fn tree_stats_from_shape(shape: &ForestShape) -> Vec<TreeStats> {
    let n = shape.root.len() - 1;
    let mut size = vec![0u32; n + 1];
    let mut height = vec![0u32; n + 1];
    for v in 1..=n {
        let r = shape.root[v] as usize;
        size[r] += 1;
        height[r] = height[r].max(shape.depth[v]);
    }
    (1..=n)
        .filter(|&v| shape.root[v] as usize == v)
        .map(|r| TreeStats {
            root: r as Vertex,
            size: size[r],
            height: height[r],
            flat: height[r] <= 1,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColoringMode {
    /// Green iff a root or an end of a live edge (loops included). Used for A and RA.
    EdgeBased,
    /// Red iff a leaf: a non-root with no children. Used for every other algorithm.
    TreeBased,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    green: Vec<bool>,
    pub mode: ColoringMode,
}

impl Coloring {
    #[inline]
    pub fn is_green(&self, v: Vertex) -> bool {
        self.green[v as usize]
    }

    pub fn green_count(&self) -> usize {
        self.green[1..].iter().filter(|&&g| g).count()
    }

    pub fn red_count(&self) -> usize {
        self.green.len() - 1 - self.green_count()
    }
}

pub fn colorize(f: &LabelForest, edges: &[EdgeState], mode: ColoringMode) -> Coloring {
    let n = f.n() as usize;
    let mut green = vec![false; n + 1];
    match mode {
        ColoringMode::EdgeBased => {
            for v in f.vertices() {
                green[v as usize] = f.is_root(v);
            }
            for e in edges.iter().filter(|e| e.alive) {
                green[e.cur.0 as usize] = true;
                green[e.cur.1 as usize] = true;
            }
        }
        ColoringMode::TreeBased => {
            for v in f.vertices() {
                let p = f.parent(v);
                if p == v {
                    green[v as usize] = true;
                } else {
                    green[p as usize] = true;
                }
            }
        }
    }
    green[0] = false;
    Coloring { green, mode }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LevelError {
    #[error("green child {child} has red parent {parent}")]
    RedParent { child: Vertex, parent: Vertex },
    #[error("green child {child} has parent {parent} that is not smaller")]
    ParentNotSmaller { child: Vertex, parent: Vertex },
}

/// Levels of green children under an order-preserving renumbering of the
/// green vertices to `1..=n'`, fixed at the moment of measurement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelAssignment {
    renumber: Vec<u32>,
    green_count: u32,
    level: Vec<Option<u32>>,
}

impl LevelAssignment {
    /// New number of `v`, if `v` was green when the renumbering was fixed.
    pub fn renumbered(&self, v: Vertex) -> Option<u32> {
        match self.renumber[v as usize] {
            0 => None,
            r => Some(r),
        }
    }

    pub fn green_count(&self) -> u32 {
        self.green_count
    }

    /// Level of a green child; `None` for roots and red vertices.
    pub fn level(&self, v: Vertex) -> Option<u32> {
        self.level[v as usize]
    }

    /// Level of `v` in a later forest `f`, keeping this renumbering.
    /// `None` when `v` is a root of `f` or either end was not green.
    pub fn level_in(&self, f: &LabelForest, v: Vertex) -> Option<u32> {
        let p = f.parent(v);
        if p == v {
            return None;
        }
        let (a, b) = (self.renumbered(v)?, self.renumbered(p)?);
        (a > b).then(|| floor_lg(a - b))
    }
}

pub(crate) fn floor_lg(x: u32) -> u32 {
    31 - x.leading_zeros()
}

pub fn levels(f: &LabelForest, c: &Coloring) -> Result<LevelAssignment, LevelError> {
    let n = f.n() as usize;
    let mut renumber = vec![0u32; n + 1];
    let mut next = 0;
    for v in f.vertices() {
        if c.is_green(v) {
            next += 1;
            renumber[v as usize] = next;
        }
    }
    let mut level = vec![None; n + 1];
    for v in f.vertices() {
        let p = f.parent(v);
        if p == v || !c.is_green(v) {
            continue;
        }
        if !c.is_green(p) {
            return Err(LevelError::RedParent { child: v, parent: p });
        }
        let (a, b) = (renumber[v as usize], renumber[p as usize]);
        if a <= b {
            return Err(LevelError::ParentNotSmaller { child: v, parent: p });
        }
        level[v as usize] = Some(floor_lg(a - b));
    }
    Ok(LevelAssignment { renumber, green_count: next, level })
}

/// The longest tree path of green vertices, from a deepest green vertex up to
/// (and including) its topmost green ancestor.
pub fn longest_green_path(f: &LabelForest, c: &Coloring) -> Result<Vec<Vertex>, ForestError> {
    let shape = f.shape()?;
    let mut best: Vec<Vertex> = Vec::new();
    let mut order: Vec<Vertex> = f.vertices().filter(|&v| c.is_green(v)).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(shape.depth[v as usize]));
    for v in order {
        if (shape.depth[v as usize] as usize) < best.len() {
            break;
        }
        let mut path = vec![v];
        let mut x = v;
        while !f.is_root(x) && c.is_green(f.parent(x)) {
            x = f.parent(x);
            path.push(x);
        }
        if path.len() > best.len() {
            best = path;
        }
    }
    Ok(best)
}
