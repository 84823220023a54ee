//! Round loops for the eleven algorithms.
//!
//! | kind | round |
//! |------|-------|
//! | P    | parent-connect; update; shortcut |
//! | E    | extended-connect; update; shortcut |
//! | A    | connect; update; shortcut; alter |
//! | R    | parent-connect; root-update; shortcut |
//! | RA   | connect; root-update; shortcut; alter |
//! | S    | parent-connect; root-update; shortcut to fixpoint |
//! | SA   | connect; root-update; shortcut to fixpoint; alter |
//! | SRT  | one composite six-wave round |
//! | SV   | shortcut; parent-connect; arbitrary-root-update; max-parent-connect; passive-root-update; shortcut |
//! | AS   | parent-connect; flat-root-update; max-parent-connect; flat-root-update; shortcut |
//! | REIF | coin flips; random-connect; arbitrary-root-update; shortcut |
//!
//! Runs repeat rounds until a round changes no parent. REIF additionally
//! requires that no edge joins two trees, since an unlucky round of coins
//! changes nothing without being final.

pub mod hooks;
pub mod potential;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{colorize, ColoringMode, ForestError, LabelForest};
use crate::graph::Graph;
use crate::primitives::{self as prim, AlterOptions, ArbitraryPolicy, EdgeState, Inbox, LoopMode, MessageSink, PrimitiveError, Resolution, Sender, Tally, UpdateRule};
use crate::{EdgeId, Vertex};

pub use hooks::{HookSet, StepHook, StepView};
pub use potential::{potential_report, PotentialError, PotentialRound};
pub use trace::{MetricsRow, RoundRecord, RunTrace, Snapshot, Totals, TraceHeader, TreeRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmKind {
    P,
    E,
    A,
    R,
    RA,
    S,
    SA,
    SRT,
    SV,
    AS,
    #[serde(rename = "REIF")]
    Reif,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 11] = [
        AlgorithmKind::P,
        AlgorithmKind::E,
        AlgorithmKind::A,
        AlgorithmKind::R,
        AlgorithmKind::RA,
        AlgorithmKind::S,
        AlgorithmKind::SA,
        AlgorithmKind::SRT,
        AlgorithmKind::SV,
        AlgorithmKind::AS,
        AlgorithmKind::Reif,
    ];

    /// Parents only ever decrease, so each final root is its component minimum.
    pub fn is_min_labeling(self) -> bool {
        !matches!(self, AlgorithmKind::SV | AlgorithmKind::AS | AlgorithmKind::Reif)
    }

    /// Every tree of a round lies inside a single tree of the next round.
    pub fn is_monotone(self) -> bool {
        matches!(self, AlgorithmKind::R | AlgorithmKind::RA | AlgorithmKind::S | AlgorithmKind::SA)
    }

    pub fn uses_alter(self) -> bool {
        matches!(self, AlgorithmKind::A | AlgorithmKind::RA | AlgorithmKind::SA)
    }

    pub fn uses_policy(self) -> bool {
        !self.is_min_labeling()
    }

    pub fn update_rule(self) -> UpdateRule {
        match self {
            AlgorithmKind::P | AlgorithmKind::E | AlgorithmKind::A | AlgorithmKind::SRT => UpdateRule::AllVertices,
            _ => UpdateRule::RootsOnly,
        }
    }

    /// The coloring under which the green/red analysis is stated.
    pub fn coloring_mode(self) -> ColoringMode {
        if matches!(self, AlgorithmKind::A | AlgorithmKind::RA) {
            ColoringMode::EdgeBased
        } else {
            ColoringMode::TreeBased
        }
    }

    /// Primitive sequence of one round.
    pub fn plan(self, shortcuts: u32) -> Vec<Op> {
        use Op::*;
        let sc = |ops: &mut Vec<Op>| ops.extend(std::iter::repeat_n(Shortcut, shortcuts as usize));
        let mut ops = Vec::new();
        match self {
            AlgorithmKind::P => {
                ops.extend([ParentConnect, Update]);
                sc(&mut ops);
            }
            AlgorithmKind::E => {
                ops.extend([ExtendedConnect, Update]);
                sc(&mut ops);
            }
            AlgorithmKind::A => {
                ops.extend([Connect, Update]);
                sc(&mut ops);
                ops.push(Alter);
            }
            AlgorithmKind::R => {
                ops.extend([ParentConnect, RootUpdate]);
                sc(&mut ops);
            }
            AlgorithmKind::RA => {
                ops.extend([Connect, RootUpdate]);
                sc(&mut ops);
                ops.push(Alter);
            }
            AlgorithmKind::S => ops.extend([ParentConnect, RootUpdate, ShortcutToFixpoint]),
            AlgorithmKind::SA => ops.extend([Connect, RootUpdate, ShortcutToFixpoint, Alter]),
            AlgorithmKind::SRT => ops.push(SrtRound),
            AlgorithmKind::SV => ops.extend([
                Shortcut,
                ParentConnect,
                ArbitraryRootUpdate,
                MaxParentConnect,
                PassiveRootUpdate,
                Shortcut,
            ]),
            AlgorithmKind::AS => {
                ops.extend([ParentConnect, FlatRootUpdate, MaxParentConnect, FlatRootUpdate, Shortcut])
            }
            AlgorithmKind::Reif => ops.extend([FlipCoins, RandomConnect, ArbitraryRootUpdate, Shortcut]),
        }
        ops
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgorithmKind::P => "P",
            AlgorithmKind::E => "E",
            AlgorithmKind::A => "A",
            AlgorithmKind::R => "R",
            AlgorithmKind::RA => "RA",
            AlgorithmKind::S => "S",
            AlgorithmKind::SA => "SA",
            AlgorithmKind::SRT => "SRT",
            AlgorithmKind::SV => "SV",
            AlgorithmKind::AS => "AS",
            AlgorithmKind::Reif => "REIF",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm `{0}` (expected one of P, E, A, R, RA, S, SA, SRT, SV, AS, REIF)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for AlgorithmKind {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.to_string() == upper)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// One primitive of a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    Connect,
    ParentConnect,
    ExtendedConnect,
    MaxParentConnect,
    FlipCoins,
    RandomConnect,
    Update,
    RootUpdate,
    ArbitraryRootUpdate,
    FlatRootUpdate,
    PassiveRootUpdate,
    Shortcut,
    ShortcutToFixpoint,
    Alter,
    SrtRound,
}

impl Op {
    pub fn is_update(self) -> bool {
        matches!(
            self,
            Op::Update | Op::RootUpdate | Op::ArbitraryRootUpdate | Op::FlatRootUpdate | Op::PassiveRootUpdate
        )
    }

    pub fn is_shortcut(self) -> bool {
        matches!(self, Op::Shortcut | Op::ShortcutToFixpoint)
    }

    /// Steps that may change parents; lockstep comparison happens after each.
    pub fn mutates_parents(self) -> bool {
        self.is_update() || self.is_shortcut() || self == Op::SrtRound
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Connect => "connect",
            Op::ParentConnect => "parent-connect",
            Op::ExtendedConnect => "extended-connect",
            Op::MaxParentConnect => "max-parent-connect",
            Op::FlipCoins => "flip-coins",
            Op::RandomConnect => "random-connect",
            Op::Update => "update",
            Op::RootUpdate => "root-update",
            Op::ArbitraryRootUpdate => "arbitrary-root-update",
            Op::FlatRootUpdate => "flat-root-update",
            Op::PassiveRootUpdate => "passive-root-update",
            Op::Shortcut => "shortcut",
            Op::ShortcutToFixpoint => "shortcut-to-fixpoint",
            Op::Alter => "alter",
            Op::SrtRound => "srt-round",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    /// Shortcuts per round; S and SA iterate to a fixpoint instead.
    pub shortcuts_per_round: u32,
    pub loop_mode: LoopMode,
    /// RA only: also delete edges joining a child to its parent.
    pub strengthened_deletion: bool,
    /// SV, AS and REIF: arbitrary-pick order and coin seed.
    pub policy_seed: u64,
    /// R and RA only.
    pub record_spanning_forest: bool,
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind) -> Self {
        AlgorithmSpec {
            kind,
            shortcuts_per_round: 1,
            loop_mode: LoopMode::Delete,
            strengthened_deletion: false,
            policy_seed: 0,
            record_spanning_forest: false,
        }
    }

    pub fn with_loop_mode(mut self, loop_mode: LoopMode) -> Self {
        self.loop_mode = loop_mode;
        self
    }

    pub fn with_policy_seed(mut self, seed: u64) -> Self {
        self.policy_seed = seed;
        self
    }

    pub fn with_shortcuts(mut self, shortcuts: u32) -> Self {
        self.shortcuts_per_round = shortcuts;
        self
    }

    pub fn strengthened(mut self) -> Self {
        self.strengthened_deletion = true;
        self
    }

    pub fn spanning_forest(mut self) -> Self {
        self.record_spanning_forest = true;
        self
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.shortcuts_per_round == 0 {
            return Err(RunError::InvalidSpec("shortcuts per round must be positive".into()));
        }
        if self.strengthened_deletion && self.kind != AlgorithmKind::RA {
            return Err(RunError::InvalidSpec(format!(
                "strengthened deletion requires RA, not {}",
                self.kind
            )));
        }
        if self.record_spanning_forest && !matches!(self.kind, AlgorithmKind::R | AlgorithmKind::RA) {
            return Err(RunError::InvalidSpec(format!(
                "spanning forests are recorded only by R and RA, not {}",
                self.kind
            )));
        }
        Ok(())
    }
}

/// A deliberately broken primitive, for checking that the checks notice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    /// Skip every shortcut of the given round, or of every round.
    SkipShortcut { round: Option<u64> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub hooks: HookSet,
    /// Record per-tree data (activity, constituents) and colorings each round.
    pub instrument: bool,
    /// Keep the parent array after every primitive.
    pub snapshots: bool,
    pub fault: Option<Fault>,
    /// Overrides the default limit of `64 n` rounds.
    pub round_limit: Option<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("invalid algorithm spec: {0}")]
    InvalidSpec(String),
    #[error("no termination within {limit} rounds")]
    RoundLimit { limit: u64 },
    #[error("hook {hook} failed in round {round} after {op}: {detail}")]
    HookViolation { hook: String, round: u64, op: String, detail: String },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
}

/// Result of one parent-mutating step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub round: u64,
    pub op: Op,
    pub changed: u64,
}

/// An in-progress run that can be advanced one parent-mutating step at a time.
pub struct Execution<'g> {
    spec: AlgorithmSpec,
    opts: RunOptions,
    g: &'g Graph,
    forest: LabelForest,
    before: LabelForest,
    edges: Vec<EdgeState>,
    inbox: Inbox,
    plan: Vec<Op>,
    pc: usize,
    round: u64,
    round_limit: u64,
    round_changed: u64,
    round_tally: Tally,
    round_passes: u64,
    totals: Totals,
    done: bool,
    hooks: Vec<Box<dyn StepHook + 'g>>,
    rounds: Vec<RoundRecord>,
    snapshots: Option<Vec<Snapshot>>,
    heads: Vec<bool>,
    coin_string: Option<String>,
    /// Round of each vertex's latest parent change (0 = never).
    last_change: Vec<u64>,
    /// Tree sizes by root at the start of the round, when instrumented.
    start_sizes: Vec<u32>,
    prev_roots: Vec<Vertex>,
    spanning: Option<Vec<EdgeId>>,
}

impl<'g> Execution<'g> {
    pub fn new(spec: &AlgorithmSpec, g: &'g Graph, opts: &RunOptions) -> Result<Self, RunError> {
        spec.validate()?;
        let n = g.n();
        let forest = LabelForest::identity(n)?;
        let resolution = if spec.kind.uses_policy() {
            Resolution::Arbitrary(ArbitraryPolicy::seeded(spec.policy_seed, g.m()))
        } else {
            Resolution::Min
        };
        let hooks = opts.hooks.build(spec.kind, spec.loop_mode, g);
        let mut exec = Execution {
            spec: spec.clone(),
            opts: *opts,
            g,
            before: forest.clone(),
            forest,
            edges: prim::edge_states(g),
            inbox: Inbox::new(n, resolution),
            plan: spec.kind.plan(spec.shortcuts_per_round),
            pc: 0,
            round: 1,
            round_limit: opts.round_limit.unwrap_or(64 * n as u64),
            round_changed: 0,
            round_tally: Tally::default(),
            round_passes: 0,
            totals: Totals::default(),
            done: false,
            hooks,
            rounds: Vec::new(),
            snapshots: opts.snapshots.then(Vec::new),
            heads: vec![false; n as usize + 1],
            coin_string: None,
            last_change: vec![0; n as usize + 1],
            start_sizes: Vec::new(),
            prev_roots: Vec::new(),
            spanning: spec.record_spanning_forest.then(Vec::new),
        };
        if exec.opts.instrument {
            exec.prev_roots = (1..=n).collect();
            exec.start_sizes = vec![1; n as usize + 1];
        }
        Ok(exec)
    }

    /// Attaches an extra hook.
    pub fn add_hook(&mut self, hook: Box<dyn StepHook + 'g>) {
        self.hooks.push(hook);
    }

    pub fn forest(&self) -> &LabelForest {
        &self.forest
    }

    pub fn edges(&self) -> &[EdgeState] {
        &self.edges
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Executes primitives up to and including the next one that may change
    /// parents. Returns `None` once the run has terminated.
    pub fn step(&mut self) -> Result<Option<StepRecord>, RunError> {
        while !self.done {
            let op = self.plan[self.pc];
            let round = self.round;
            let changed = self.exec_op(op)?;
            self.pc += 1;
            if self.pc == self.plan.len() {
                self.finish_round()?;
            }
            if op.mutates_parents() {
                return Ok(Some(StepRecord { round, op, changed }));
            }
        }
        Ok(None)
    }

    /// Runs to termination.
    pub fn run_to_end(mut self) -> Result<RunTrace, RunError> {
        while self.step()?.is_some() {}
        Ok(self.into_trace())
    }

    fn into_trace(self) -> RunTrace {
        let mut notes = Vec::new();
        if self.spec.kind == AlgorithmKind::SV {
            notes.push(
                "passive trees reconstructed: no vertex changed parent since the start of the previous round".into(),
            );
        }
        if let Some(Fault::SkipShortcut { round }) = self.opts.fault {
            notes.push(match round {
                Some(r) => format!("fault injected: shortcuts skipped in round {r}"),
                None => "fault injected: all shortcuts skipped".into(),
            });
        }
        RunTrace {
            header: TraceHeader {
                algorithm: self.spec.kind.to_string(),
                n: self.g.n(),
                m: self.g.m(),
                seed: self.spec.policy_seed,
                options: self.spec.clone(),
                notes,
            },
            rounds: self.rounds,
            totals: self.totals,
            final_forest: self.forest,
            spanning_forest: self.spanning,
            snapshots: self.snapshots,
        }
    }

    fn charge(&mut self, t: Tally) {
        self.round_tally += t;
        self.totals.waves += t.waves;
        self.totals.messages += t.messages;
    }

    fn skip_shortcut(&self) -> bool {
        match self.opts.fault {
            Some(Fault::SkipShortcut { round }) => round.is_none_or(|r| r == self.round),
            None => false,
        }
    }

    fn exec_op(&mut self, op: Op) -> Result<u64, RunError> {
        self.before.raw_mut().copy_from_slice(self.forest.raw());
        let changed: u64 = match op {
            Op::Connect => {
                self.inbox.clear();
                let t = prim::connect(&self.edges, &mut self.inbox);
                self.charge(t);
                0
            }
            Op::ParentConnect => {
                self.inbox.clear();
                let t = prim::parent_connect(&self.edges, &self.forest, &mut self.inbox);
                self.charge(t);
                0
            }
            Op::ExtendedConnect => {
                self.inbox.clear();
                let t = prim::extended_connect(&self.edges, &self.forest, &mut self.inbox);
                self.charge(t);
                0
            }
            Op::MaxParentConnect => {
                self.inbox.clear();
                let t = prim::max_parent_connect(&self.edges, &self.forest, &mut self.inbox);
                self.charge(t);
                0
            }
            Op::FlipCoins => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.spec.policy_seed);
                rng.set_stream(self.round);
                for h in self.heads.iter_mut().skip(1) {
                    *h = rng.random_bool(0.5);
                }
                self.coin_string =
                    Some(self.heads[1..].iter().map(|&h| if h { 'H' } else { 'T' }).collect());
                0
            }
            Op::RandomConnect => {
                self.inbox.clear();
                let t = prim::random_connect(&self.edges, &self.forest, &self.heads, &mut self.inbox)?;
                self.charge(t);
                0
            }
            Op::Update => prim::update(&mut self.forest, &self.inbox) as u64,
            Op::RootUpdate => {
                let c = prim::root_update(&mut self.forest, &self.inbox) as u64;
                if let Some(span) = self.spanning.as_mut() {
                    for v in self.forest.vertices() {
                        if self.forest.parent(v) != self.before.parent(v) {
                            if let Some(Sender::Edge(e)) = self.inbox.sender(v) {
                                span.push(e);
                            }
                        }
                    }
                }
                c
            }
            Op::ArbitraryRootUpdate => prim::arbitrary_root_update(&mut self.forest, &self.inbox) as u64,
            Op::FlatRootUpdate => {
                let flat = flat_roots(&self.forest)?;
                prim::flat_root_update(&mut self.forest, &self.inbox, &flat)? as u64
            }
            Op::PassiveRootUpdate => {
                let passive = self.passive_roots()?;
                prim::passive_root_update(&mut self.forest, &self.inbox, &passive)? as u64
            }
            Op::Shortcut => {
                if self.skip_shortcut() {
                    0
                } else {
                    let (c, t) = prim::shortcut(&mut self.forest);
                    self.charge(t);
                    self.round_passes += 1;
                    c as u64
                }
            }
            Op::ShortcutToFixpoint => {
                if self.skip_shortcut() {
                    0
                } else {
                    let (iters, t) = prim::shortcut_to_fixpoint(&mut self.forest);
                    self.charge(t);
                    self.round_passes += iters as u64;
                    self.count_changes()
                }
            }
            Op::Alter => {
                let opts = AlterOptions {
                    loops: self.spec.loop_mode,
                    strengthened: self.spec.strengthened_deletion,
                    update_rule: self.spec.kind.update_rule(),
                };
                let out = prim::alter(&mut self.edges, &self.forest, opts)?;
                self.charge(out.tally);
                0
            }
            Op::SrtRound => {
                let t = srt_round(&mut self.forest, &self.edges, &mut self.inbox);
                self.charge(t);
                self.count_changes()
            }
        };
        if op.mutates_parents() {
            for v in self.forest.vertices() {
                if self.forest.parent(v) != self.before.parent(v) {
                    self.last_change[v as usize] = self.round;
                }
            }
        }
        self.round_changed += changed;
        if let Some(s) = self.snapshots.as_mut() {
            s.push(Snapshot { round: self.round, at: op.name().into(), parents: self.forest.parents().to_vec() });
        }
        if !self.hooks.is_empty() {
            let view = StepView {
                round: self.round,
                op,
                waves: self.totals.waves,
                graph: self.g,
                before: &self.before,
                after: &self.forest,
                edges: &self.edges,
            };
            for h in self.hooks.iter_mut() {
                h.after_step(&view).map_err(|detail| RunError::HookViolation {
                    hook: h.name().into(),
                    round: self.round,
                    op: op.name().into(),
                    detail,
                })?;
            }
        }
        Ok(changed)
    }

    fn count_changes(&self) -> u64 {
        self.forest.vertices().filter(|&v| self.forest.parent(v) != self.before.parent(v)).count() as u64
    }

    /// Roots whose tree has had no parent change since the start of the
    /// previous round. Nothing is passive in round 1.
    fn passive_roots(&self) -> Result<Vec<bool>, RunError> {
        let n = self.forest.n() as usize;
        let mut passive = vec![false; n + 1];
        if self.round < 2 {
            return Ok(passive);
        }
        let shape = self.forest.shape()?;
        for (v, p) in passive.iter_mut().enumerate().skip(1) {
            *p = self.forest.is_root(v as Vertex);
        }
        for v in 1..=n {
            if self.last_change[v] + 1 >= self.round {
                passive[shape.root[v] as usize] = false;
            }
        }
        Ok(passive)
    }

    fn finish_round(&mut self) -> Result<(), RunError> {
        self.pc = 0;
        for h in self.hooks.iter_mut() {
            h.after_round(self.round, &self.forest, &self.edges).map_err(|detail| RunError::HookViolation {
                hook: h.name().into(),
                round: self.round,
                op: "round-end".into(),
                detail,
            })?;
        }
        let mut record = RoundRecord {
            round: self.round,
            waves: self.round_tally.waves,
            messages: self.round_tally.messages,
            changed: self.round_changed,
            shortcut_passes: self.round_passes,
            trees: None,
            green: None,
            red: None,
            coins: self.coin_string.take(),
        };
        if self.opts.instrument {
            self.instrument_round(&mut record)?;
        }
        if let Some(s) = self.snapshots.as_mut() {
            s.push(Snapshot { round: self.round, at: "round-end".into(), parents: self.forest.parents().to_vec() });
        }
        self.rounds.push(record);
        self.totals.rounds = self.round;
        self.totals.shortcut_passes += self.round_passes;

        let mut finished = self.round_changed == 0;
        if finished && self.spec.kind == AlgorithmKind::Reif {
            finished = !self.edges.iter().any(|e| {
                e.alive && self.forest.parent(e.cur.0) != self.forest.parent(e.cur.1)
            });
        }
        if finished {
            self.done = true;
        } else if self.round >= self.round_limit {
            return Err(RunError::RoundLimit { limit: self.round_limit });
        } else {
            self.round += 1;
            self.round_changed = 0;
            self.round_tally = Tally::default();
            self.round_passes = 0;
        }
        Ok(())
    }

    fn instrument_round(&mut self, record: &mut RoundRecord) -> Result<(), RunError> {
        let shape = self.forest.shape()?;
        let stats = crate::forest::tree_stats_from_shape(&shape);
        let n = self.forest.n() as usize;
        let mut changed_in_tree = vec![false; n + 1];
        for v in 1..=n {
            if self.last_change[v] == self.round {
                changed_in_tree[shape.root[v] as usize] = true;
            }
        }
        let mut constituents: Vec<Vec<Vertex>> = vec![Vec::new(); n + 1];
        for &r in &self.prev_roots {
            constituents[shape.root[r as usize] as usize].push(r);
        }
        let mut trees = Vec::with_capacity(stats.len());
        for s in &stats {
            let r = s.root as usize;
            let active = self.round <= 2 || changed_in_tree[r] || self.start_sizes[r] != s.size;
            trees.push(TreeRecord {
                root: s.root,
                size: s.size,
                height: s.height,
                flat: s.flat,
                active,
                constituents: std::mem::take(&mut constituents[r]),
            });
        }
        self.prev_roots = stats.iter().map(|s| s.root).collect();
        self.start_sizes.fill(0);
        for s in &stats {
            self.start_sizes[s.root as usize] = s.size;
        }
        let coloring = colorize(&self.forest, &self.edges, self.spec.kind.coloring_mode());
        record.green = Some(coloring.green_count());
        record.red = Some(coloring.red_count());
        record.trees = Some(trees);
        Ok(())
    }
}

/// Flags the roots of trees of height at most one.
fn flat_roots(f: &LabelForest) -> Result<Vec<bool>, RunError> {
    let shape = f.shape()?;
    let mut flat = vec![false; f.n() as usize + 1];
    for v in f.vertices() {
        if f.is_root(v) {
            flat[v as usize] = true;
        }
    }
    for v in f.vertices() {
        if shape.depth[v as usize] > 1 {
            flat[shape.root[v as usize] as usize] = false;
        }
    }
    Ok(flat)
}

/// One composite round of SRT over the edges' current ends.
///
/// Waves: parent fetch (request, reply) and the conditional edge send; the
/// notify send to old parents; the fetch of `new(v).p` (request, reply).
pub fn srt_round(f: &mut LabelForest, edges: &[EdgeState], scratch: &mut Inbox) -> Tally {
    let n = f.n();
    let old = f.clone();
    let mut messages = 0u64;

    scratch.clear();
    for e in edges.iter().filter(|e| e.alive) {
        messages += 2;
        let (v, w) = e.cur;
        let (vp, wp) = (old.parent(v), old.parent(w));
        if vp < wp {
            scratch.send(w, vp, Sender::Edge(e.id));
        } else {
            scratch.send(v, wp, Sender::Edge(e.id));
        }
        messages += 1;
    }
    let new: Vec<Vertex> = (0..=n)
        .map(|v| if v == 0 { 0 } else { scratch.get(v).map_or(old.parent(v), |x| x.min(old.parent(v))) })
        .collect();

    scratch.clear();
    for v in 1..=n {
        let p = old.parent(v);
        if new[v as usize] < p {
            scratch.send(p, new[v as usize], Sender::Vertex(v));
            if p != v {
                messages += 1;
            }
        }
    }
    for v in 1..=n {
        let x = new[v as usize];
        scratch.send(v, old.parent(x), Sender::Vertex(x));
        if x != v {
            messages += 1;
        }
    }
    for v in 1..=n {
        if let Some(x) = scratch.get(v) {
            if x < f.parent(v) {
                f.set_parent(v, x);
            }
        }
    }
    Tally { waves: 6, messages }
}

/// Runs `spec` on `g` to termination.
pub fn run(spec: &AlgorithmSpec, g: &Graph, opts: &RunOptions) -> Result<RunTrace, RunError> {
    Execution::new(spec, g, opts)?.run_to_end()
}

/// Where one side of a lockstep comparison stood at a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepPosition {
    pub round: u64,
    pub op: Op,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockstepOutcome {
    /// Both runs made identical parent changes and terminated together.
    Equal { steps: u64 },
    Diverged {
        /// 1-based index of the first differing parent-mutating step.
        step: u64,
        /// `None` when that side had already terminated.
        left: Option<StepPosition>,
        right: Option<StepPosition>,
        /// Smallest vertex whose parents differ, if both sides stepped.
        vertex: Option<Vertex>,
        left_parents: Vec<Vertex>,
        right_parents: Vec<Vertex>,
    },
}

impl LockstepOutcome {
    pub fn is_equal(&self) -> bool {
        matches!(self, LockstepOutcome::Equal { .. })
    }
}

/// Advances both algorithms one parent-mutating step at a time and compares
/// parent arrays after each.
pub fn run_lockstep(a: &AlgorithmSpec, b: &AlgorithmSpec, g: &Graph) -> Result<LockstepOutcome, RunError> {
    let opts = RunOptions { hooks: HookSet::NONE, ..RunOptions::default() };
    let mut ea = Execution::new(a, g, &opts)?;
    let mut eb = Execution::new(b, g, &opts)?;
    let mut step = 0;
    loop {
        let sa = ea.step()?;
        let sb = eb.step()?;
        if sa.is_none() && sb.is_none() {
            return Ok(LockstepOutcome::Equal { steps: step });
        }
        step += 1;
        let (fa, fb) = (ea.forest().parents(), eb.forest().parents());
        if sa.is_none() || sb.is_none() || fa != fb {
            let vertex = match (sa, sb) {
                (Some(_), Some(_)) => fa.iter().zip(fb).position(|(x, y)| x != y).map(|i| i as Vertex + 1),
                _ => None,
            };
            let pos = |s: Option<StepRecord>| s.map(|s| StepPosition { round: s.round, op: s.op });
            return Ok(LockstepOutcome::Diverged {
                step,
                left: pos(sa),
                right: pos(sb),
                vertex,
                left_parents: fa.to_vec(),
                right_parents: fb.to_vec(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::MessageBatch;

    fn path(n: u32) -> Graph {
        Graph::new(n, (1..n).map(|i| (i, i + 1)).collect()).unwrap()
    }

    #[test]
    fn kind_names_round_trip() {
        for k in AlgorithmKind::ALL {
            assert_eq!(k.to_string().parse::<AlgorithmKind>().unwrap(), k);
        }
        assert_eq!("reif".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::Reif);
        assert!("Q".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(AlgorithmSpec::new(AlgorithmKind::A).strengthened().validate().is_err());
        assert!(AlgorithmSpec::new(AlgorithmKind::RA).strengthened().validate().is_ok());
        assert!(AlgorithmSpec::new(AlgorithmKind::P).spanning_forest().validate().is_err());
        assert!(AlgorithmSpec::new(AlgorithmKind::R).with_shortcuts(0).validate().is_err());
    }

    #[test]
    fn r_on_path_of_five() {
        let g = path(5);
        let t = run(&AlgorithmSpec::new(AlgorithmKind::R), &g, &RunOptions::default()).unwrap();
        assert_eq!(t.final_forest.parents(), &[1, 1, 1, 1, 1]);
        assert!(t.rounds() <= 30);
        assert_eq!(t.rounds.last().unwrap().changed, 0);
    }

    #[test]
    fn srt_first_round_on_an_edge() {
        let g = path(2);
        let mut f = LabelForest::identity(2).unwrap();
        let edges = prim::edge_states(&g);
        let mut inbox = Inbox::new(2, Resolution::Min);
        let t = srt_round(&mut f, &edges, &mut inbox);
        assert_eq!(f.parents(), &[1, 1]);
        assert_eq!(t.waves, 6);
    }

    #[test]
    fn srt_skips_notify_when_nothing_improves() {
        // vertex 2 already has parent 1 and learns nothing smaller
        let g = path(2);
        let mut f = LabelForest::from_parents(&[1, 1]).unwrap();
        let edges = prim::edge_states(&g);
        let mut inbox = Inbox::new(2, Resolution::Min);
        let t = srt_round(&mut f, &edges, &mut inbox);
        // 3 for the edge, no notify, no fetch for vertex 1 (new(1) = 1); vertex 2 fetches 1.p
        assert_eq!(t.messages, 4);
    }

    #[test]
    fn reif_single_edge_with_favourable_coins() {
        let g = path(2);
        let f = LabelForest::identity(2).unwrap();
        let edges = prim::edge_states(&g);
        let mut batch = MessageBatch::default();
        prim::random_connect(&edges, &f, &[false, true, false], &mut batch).unwrap();
        let mut f2 = f.clone();
        let inbox = batch.resolve(2, Resolution::Arbitrary(ArbitraryPolicy::first_by_edge_id()));
        prim::arbitrary_root_update(&mut f2, &inbox);
        assert_eq!(f2.parents(), &[1, 1]);
    }

    #[test]
    fn as_terminates_at_once_on_isolated_flat_trees() {
        let g = Graph::new(3, vec![(2, 2)]).unwrap();
        let t = run(&AlgorithmSpec::new(AlgorithmKind::AS), &g, &RunOptions::default()).unwrap();
        assert_eq!(t.rounds(), 1);
    }

    #[test]
    fn sv_on_path_of_eight() {
        let g = path(8);
        let t = run(&AlgorithmSpec::new(AlgorithmKind::SV), &g, &RunOptions::default()).unwrap();
        let root = t.final_forest.parent(1);
        assert!(t.final_forest.parents().iter().all(|&p| p == root));
    }

    #[test]
    fn lockstep_r_ra_equal_on_path() {
        let g = path(17);
        let out =
            run_lockstep(&AlgorithmSpec::new(AlgorithmKind::R), &AlgorithmSpec::new(AlgorithmKind::RA), &g).unwrap();
        assert!(out.is_equal(), "{out:?}");
    }

    #[test]
    fn lockstep_reports_early_termination() {
        let g = path(9);
        let out =
            run_lockstep(&AlgorithmSpec::new(AlgorithmKind::E), &AlgorithmSpec::new(AlgorithmKind::S), &g).unwrap();
        assert!(!out.is_equal());
    }

    #[test]
    fn round_limit_is_reported() {
        let g = path(64);
        let opts = RunOptions { round_limit: Some(2), ..RunOptions::default() };
        assert_eq!(
            run(&AlgorithmSpec::new(AlgorithmKind::R), &g, &opts).unwrap_err(),
            RunError::RoundLimit { limit: 2 }
        );
    }

    #[test]
    fn snapshots_follow_every_primitive() {
        let g = path(3);
        let opts = RunOptions { snapshots: true, ..RunOptions::default() };
        let t = run(&AlgorithmSpec::new(AlgorithmKind::R), &g, &opts).unwrap();
        let snaps = t.snapshots.unwrap();
        assert_eq!(snaps.len() as u64, t.totals.rounds * 4);
        assert_eq!(snaps[1].at, "root-update");
        assert_eq!(snaps[1].parents, vec![1, 1, 2]);
    }

    #[test]
    fn reif_coins_are_recorded_and_replayable() {
        let g = path(6);
        let spec = AlgorithmSpec::new(AlgorithmKind::Reif).with_policy_seed(3);
        let a = run(&spec, &g, &RunOptions::default()).unwrap();
        let b = run(&spec, &g, &RunOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.rounds.iter().all(|r| r.coins.as_ref().is_some_and(|c| c.len() == 6)));
    }
}
