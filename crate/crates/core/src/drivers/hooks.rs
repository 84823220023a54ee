//! Invariant hooks run after every primitive of a run.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{AlgorithmKind, Op};
use crate::forest::{assert_forest, colorize, Coloring, ColoringMode, LabelForest};
use crate::graph::{Components, Graph};
use crate::primitives::{EdgeState, LoopMode};
use crate::Vertex;

/// What a hook sees after one primitive.
pub struct StepView<'v> {
    pub round: u64,
    pub op: Op,
    /// Message waves elapsed since the start of the run, this primitive included.
    pub waves: u64,
    pub graph: &'v Graph,
    pub before: &'v LabelForest,
    pub after: &'v LabelForest,
    pub edges: &'v [EdgeState],
}

pub trait StepHook {
    fn name(&self) -> &'static str;

    fn after_step(&mut self, view: &StepView) -> Result<(), String>;

    fn after_round(&mut self, _round: u64, _f: &LabelForest, _edges: &[EdgeState]) -> Result<(), String> {
        Ok(())
    }
}

/// Which built-in hooks to attach to a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HookSet {
    pub acyclic: bool,
    pub monotone: bool,
    pub green_target: bool,
    /// Also require the vertex whose parent changes to be green.
    pub green_target_strong: bool,
    pub color_lemmas: bool,
    pub root_paths: bool,
    pub distance: bool,
    pub flat: bool,
}

impl HookSet {
    pub const NONE: HookSet = HookSet {
        acyclic: false,
        monotone: false,
        green_target: false,
        green_target_strong: false,
        color_lemmas: false,
        root_paths: false,
        distance: false,
        flat: false,
    };

    /// The cheap structural hooks.
    pub fn standard() -> Self {
        HookSet { acyclic: true, monotone: true, flat: true, ..Self::NONE }
    }

    /// Everything, including the per-step color and path checks.
    pub fn all() -> Self {
        HookSet {
            acyclic: true,
            monotone: true,
            green_target: true,
            green_target_strong: false,
            color_lemmas: true,
            root_paths: true,
            distance: true,
            flat: true,
        }
    }

    /// Instantiates the hooks of this set that apply to `kind` under `loops`.
    pub fn build(&self, kind: AlgorithmKind, loops: LoopMode, g: &Graph) -> Vec<Box<dyn StepHook>> {
        let mut out: Vec<Box<dyn StepHook>> = Vec::new();
        if self.acyclic {
            out.push(Box::new(AcyclicHook));
        }
        if self.monotone && kind.is_min_labeling() {
            out.push(Box::new(MonotoneParentHook));
        }
        if self.green_target || self.green_target_strong {
            if let Some(mode) = green_target_mode(kind, loops) {
                let strong = self.green_target_strong && kind != AlgorithmKind::E;
                out.push(Box::new(GreenTargetHook { mode, strong }));
            }
        }
        if self.color_lemmas && kind == AlgorithmKind::A && loops == LoopMode::RetainLoop {
            out.push(Box::new(ColorLemmaHook));
        }
        if self.root_paths && kind.uses_alter() {
            out.push(Box::new(RootPathHook::new(g)));
        }
        if self.distance {
            out.push(Box::new(DistanceHook::new(g.n())));
        }
        if self.flat && kind == AlgorithmKind::Reif {
            out.push(Box::new(FlatHook));
        }
        out
    }
}

impl Default for HookSet {
    fn default() -> Self {
        Self::standard()
    }
}

/// Coloring under which connect targets must be green, if the check applies.
/// Edge-based greenness relies on loops being kept.
pub fn green_target_mode(kind: AlgorithmKind, loops: LoopMode) -> Option<ColoringMode> {
    use AlgorithmKind::*;
    match kind {
        P | E | R | S => Some(ColoringMode::TreeBased),
        A | RA if loops == LoopMode::RetainLoop => Some(ColoringMode::EdgeBased),
        _ => None,
    }
}

pub struct AcyclicHook;

impl StepHook for AcyclicHook {
    fn name(&self) -> &'static str {
        "acyclic"
    }

    fn after_step(&mut self, view: &StepView) -> Result<(), String> {
        if !view.op.mutates_parents() {
            return Ok(());
        }
        assert_forest(view.after).map_err(|e| e.to_string())
    }
}

/// Parents never increase and non-roots stay non-roots.
pub struct MonotoneParentHook;

impl StepHook for MonotoneParentHook {
    fn name(&self) -> &'static str {
        "monotone-parent"
    }

    fn after_step(&mut self, view: &StepView) -> Result<(), String> {
        for v in view.after.vertices() {
            let (old, new) = (view.before.parent(v), view.after.parent(v));
            if new > old {
                return Err(format!("parent of {v} increased from {old} to {new}"));
            }
            if old != v && new == v {
                return Err(format!("non-root {v} became a root"));
            }
        }
        Ok(())
    }
}

/// A connect that gives `v` the new parent `w` does so only when `w` is
/// green beforehand (and `v` too, in the strong form).
pub struct GreenTargetHook {
    pub mode: ColoringMode,
    pub strong: bool,
}

impl StepHook for GreenTargetHook {
    fn name(&self) -> &'static str {
        if self.strong {
            "green-target-strong"
        } else {
            "green-target"
        }
    }

    fn after_step(&mut self, view: &StepView) -> Result<(), String> {
        if !view.op.is_update() {
            return Ok(());
        }
        let mut coloring: Option<Coloring> = None;
        for v in view.after.vertices() {
            let w = view.after.parent(v);
            if w == view.before.parent(v) {
                continue;
            }
            let c = coloring.get_or_insert_with(|| colorize(view.before, view.edges, self.mode));
            if !c.is_green(w) {
                return Err(format!("{v} got new parent {w}, which was red"));
            }
            if self.strong && !c.is_green(v) {
                return Err(format!("{v} was red when its parent changed to {w}"));
            }
        }
        Ok(())
    }
}

/// Edge-based coloring facts for algorithm A with loops kept: a green vertex
/// is a root or has a green parent; a red vertex has a green grandparent, and
/// a green parent right after a shortcut.
pub struct ColorLemmaHook;

impl StepHook for ColorLemmaHook {
    fn name(&self) -> &'static str {
        "color-lemmas"
    }

    fn after_step(&mut self, view: &StepView) -> Result<(), String> {
        let f = view.after;
        let c = colorize(f, view.edges, ColoringMode::EdgeBased);
        for v in f.vertices() {
            let p = f.parent(v);
            if c.is_green(v) {
                if p != v && !c.is_green(p) {
                    return Err(format!("green {v} has red parent {p}"));
                }
            } else {
                if !c.is_green(f.parent(p)) {
                    return Err(format!("red {v} has red grandparent {}", f.parent(p)));
                }
                if view.op.is_shortcut() && !c.is_green(p) {
                    return Err(format!("red {v} has red parent {p} after shortcut"));
                }
            }
        }
        Ok(())
    }
}

/// Any two roots in one component are joined by a path of current edges.
pub struct RootPathHook {
    components: Components,
}

impl RootPathHook {
    pub fn new(g: &Graph) -> Self {
        RootPathHook { components: g.components_bfs() }
    }

    fn check(&self, f: &LabelForest, edges: &[EdgeState]) -> Result<(), String> {
        let mut dsu = crate::oracle::Dsu::new(f.n());
        for e in edges.iter().filter(|e| e.alive) {
            dsu.union(e.cur.0, e.cur.1);
        }
        // first root seen per input component
        let mut first: Vec<Vertex> = vec![0; f.n() as usize + 1];
        for r in f.vertices().filter(|&v| f.is_root(v)) {
            let c = self.components.minimum(r) as usize;
            if first[c] == 0 {
                first[c] = r;
            } else if dsu.find(first[c]) != dsu.find(r) {
                return Err(format!("roots {} and {r} are not joined by current edges", first[c]));
            }
        }
        Ok(())
    }
}

impl StepHook for RootPathHook {
    fn name(&self) -> &'static str {
        "root-paths"
    }

    fn after_step(&mut self, view: &StepView) -> Result<(), String> {
        if matches!(view.op, Op::Alter) || view.op.is_update() {
            self.check(view.after, view.edges)
        } else {
            Ok(())
        }
    }

    fn after_round(&mut self, _round: u64, f: &LabelForest, edges: &[EdgeState]) -> Result<(), String> {
        self.check(f, edges)
    }
}

/// After `s` waves every vertex's parent lies within graph distance `2^s`.
pub struct DistanceHook {
    dist: Vec<u32>,
    queue: VecDeque<Vertex>,
    touched: Vec<Vertex>,
}

impl DistanceHook {
    pub fn new(n: u32) -> Self {
        DistanceHook { dist: vec![u32::MAX; n as usize + 1], queue: VecDeque::new(), touched: Vec::new() }
    }

    /// Whether `target` is within `radius` of `source`.
    fn within(&mut self, g: &Graph, source: Vertex, target: Vertex, radius: u64) -> bool {
        let mut found = source == target;
        self.dist[source as usize] = 0;
        self.touched.push(source);
        self.queue.push_back(source);
        while let Some(x) = self.queue.pop_front() {
            if found {
                break;
            }
            let d = self.dist[x as usize];
            if d as u64 >= radius {
                continue;
            }
            for &y in g.neighbors(x) {
                if self.dist[y as usize] == u32::MAX {
                    self.dist[y as usize] = d + 1;
                    self.touched.push(y);
                    if y == target {
                        found = true;
                        break;
                    }
                    self.queue.push_back(y);
                }
            }
        }
        self.queue.clear();
        for &t in &self.touched {
            self.dist[t as usize] = u32::MAX;
        }
        self.touched.clear();
        found
    }
}

impl StepHook for DistanceHook {
    fn name(&self) -> &'static str {
        "distance"
    }

    fn after_step(&mut self, view: &StepView) -> Result<(), String> {
        if !view.op.mutates_parents() || view.waves >= 32 || (1u64 << view.waves) >= view.graph.n() as u64 {
            return Ok(());
        }
        let radius = 1u64 << view.waves;
        for v in view.after.vertices() {
            let p = view.after.parent(v);
            if p != view.before.parent(v) && !self.within(view.graph, v, p, radius) {
                return Err(format!("parent {p} of {v} is farther than {radius} after {} waves", view.waves));
            }
        }
        Ok(())
    }
}

/// Every tree is flat at the end of each round.
pub struct FlatHook;

impl StepHook for FlatHook {
    fn name(&self) -> &'static str {
        "flat"
    }

    fn after_step(&mut self, _view: &StepView) -> Result<(), String> {
        Ok(())
    }

    fn after_round(&mut self, round: u64, f: &LabelForest, _edges: &[EdgeState]) -> Result<(), String> {
        if f.is_flat() {
            Ok(())
        } else {
            Err(format!("forest not flat at the end of round {round}"))
        }
    }
}
