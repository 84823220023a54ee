//! Primitive steps: the message waves and local updates every algorithm is
//! composed from.
//!
//! Cost model. One synchronous message wave is one step. Fixed wave costs:
//! `connect` 1, `parent_connect`/`extended_connect`/`max_parent_connect` 3
//! (request, reply, send), `random_connect` 1, `shortcut` 2, `alter` 2, all
//! updates 0. A message is counted when it carries a vertex value to another
//! process: replies and sends count, bare requests and a vertex asking itself
//! do not, and an edge whose end parents coincide sends nothing.
//!
//! Within a wave every read sees the pre-wave state. Connect-style primitives
//! write into a [`MessageSink`]; the [`Inbox`] sink combines on the fly
//! (minimum, or a seeded arbitrary pick), and [`MessageBatch`] keeps the full
//! multiset so the combination can be replayed and compared.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::LabelForest;
use crate::graph::Graph;
use crate::{EdgeId, Vertex};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrimitiveError {
    #[error("flag array has {got} entries, expected {expected}")]
    FlagSizeMismatch { expected: usize, got: usize },
    #[error("strengthened deletion is only valid when updates are restricted to roots")]
    StrengthenedWithoutRootUpdate,
}

/// Current state of one input edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeState {
    pub id: EdgeId,
    pub orig: (Vertex, Vertex),
    pub cur: (Vertex, Vertex),
    pub alive: bool,
    /// Both current ends coincide. Sticky once set.
    pub looped: bool,
}

impl EdgeState {
    pub fn new(id: EdgeId, v: Vertex, w: Vertex) -> Self {
        EdgeState { id, orig: (v, w), cur: (v, w), alive: true, looped: v == w }
    }

    #[inline]
    fn live_pair(&self) -> bool {
        self.alive && !self.looped
    }
}

/// Fresh edge states for every input edge, in input order.
pub fn edge_states(g: &Graph) -> Vec<EdgeState> {
    g.edges()
        .iter()
        .enumerate()
        .map(|(i, &(v, w))| EdgeState::new(i as EdgeId, v, w))
        .collect()
}

/// Waves and messages spent by a primitive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub waves: u64,
    pub messages: u64,
}

impl std::ops::AddAssign for Tally {
    fn add_assign(&mut self, rhs: Tally) {
        self.waves += rhs.waves;
        self.messages += rhs.messages;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sender {
    Edge(EdgeId),
    Vertex(Vertex),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub target: Vertex,
    pub value: Vertex,
    pub sender: Sender,
}

pub trait MessageSink {
    fn send(&mut self, target: Vertex, value: Vertex, sender: Sender);
}

/// Ranking of senders used by arbitrary write resolution: the edge with the
/// lowest rank wins. Seed 0 ranks edges by id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArbitraryPolicy {
    seed: u64,
    rank: Option<Vec<u32>>,
}

impl ArbitraryPolicy {
    pub fn first_by_edge_id() -> Self {
        ArbitraryPolicy { seed: 0, rank: None }
    }

    /// A seeded permutation of `m` edge ids; seed 0 is [`ArbitraryPolicy::first_by_edge_id`].
    pub fn seeded(seed: u64, m: usize) -> Self {
        if seed == 0 {
            return Self::first_by_edge_id();
        }
        let mut rank: Vec<u32> = (0..m as u32).collect();
        rank.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        ArbitraryPolicy { seed, rank: Some(rank) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn key(&self, sender: Sender) -> u64 {
        match sender {
            Sender::Edge(e) => match &self.rank {
                Some(r) => r[e as usize] as u64,
                None => e as u64,
            },
            Sender::Vertex(v) => (1u64 << 32) | v as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Resolution {
    /// Each target receives the minimum value addressed to it.
    Min,
    /// Each target receives the value from its lowest-ranked sender, ignoring
    /// values equal to the target itself.
    Arbitrary(ArbitraryPolicy),
}

#[inline]
fn sender_key(sender: Sender) -> u64 {
    match sender {
        Sender::Edge(e) => e as u64,
        Sender::Vertex(v) => (1u64 << 32) | v as u64,
    }
}

/// Per-vertex combined delivery of one wave.
#[derive(Clone, Debug)]
pub struct Inbox {
    resolution: Resolution,
    value: Vec<Vertex>,
    sender: Vec<Sender>,
    key: Vec<u64>,
}

impl Inbox {
    pub fn new(n: u32, resolution: Resolution) -> Self {
        let len = n as usize + 1;
        Inbox { resolution, value: vec![0; len], sender: vec![Sender::Vertex(0); len], key: vec![0; len] }
    }

    pub fn resolution(&self) -> &Resolution {
        &self.resolution
    }

    pub fn set_resolution(&mut self, resolution: Resolution) {
        self.resolution = resolution;
    }

    pub fn clear(&mut self) {
        self.value.fill(0);
    }

    /// The delivered value for `v`, if any message reached it.
    #[inline]
    pub fn get(&self, v: Vertex) -> Option<Vertex> {
        match self.value[v as usize] {
            0 => None,
            x => Some(x),
        }
    }

    /// The sender whose message was delivered to `v`.
    pub fn sender(&self, v: Vertex) -> Option<Sender> {
        self.get(v).map(|_| self.sender[v as usize])
    }

    pub fn n(&self) -> u32 {
        (self.value.len() - 1) as u32
    }
}

impl MessageSink for Inbox {
    #[inline]
    fn send(&mut self, target: Vertex, value: Vertex, sender: Sender) {
        let t = target as usize;
        let cur = self.value[t];
        match &self.resolution {
            Resolution::Min => {
                let k = sender_key(sender);
                if cur == 0 || value < cur || (value == cur && k < self.key[t]) {
                    self.value[t] = value;
                    self.sender[t] = sender;
                    self.key[t] = k;
                }
            }
            Resolution::Arbitrary(policy) => {
                if value == target {
                    return;
                }
                let k = policy.key(sender);
                if cur == 0 || k < self.key[t] {
                    self.value[t] = value;
                    self.sender[t] = sender;
                    self.key[t] = k;
                }
            }
        }
    }
}

/// The full multiset of messages of a wave, in send order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageBatch {
    pub messages: Vec<Message>,
}

impl MessageSink for MessageBatch {
    fn send(&mut self, target: Vertex, value: Vertex, sender: Sender) {
        self.messages.push(Message { target, value, sender });
    }
}

impl MessageBatch {
    /// Combines the batch under `resolution` for a graph on `n` vertices.
    pub fn resolve(&self, n: u32, resolution: Resolution) -> Inbox {
        let mut inbox = Inbox::new(n, resolution);
        for m in &self.messages {
            inbox.send(m.target, m.value, m.sender);
        }
        inbox
    }

    /// Sorted `(target, value)` pairs, for comparisons that ignore senders.
    pub fn pairs(&self) -> Vec<(Vertex, Vertex)> {
        let mut p: Vec<_> = self.messages.iter().map(|m| (m.target, m.value)).collect();
        p.sort_unstable();
        p
    }
}

/// Each live edge sends its smaller current end to its larger one.
pub fn connect<S: MessageSink>(edges: &[EdgeState], sink: &mut S) -> Tally {
    let mut messages = 0;
    for e in edges.iter().filter(|e| e.live_pair()) {
        let (x, y) = e.cur;
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        sink.send(hi, lo, Sender::Edge(e.id));
        messages += 1;
    }
    Tally { waves: 1, messages }
}

#[inline]
fn end_parents(e: &EdgeState, f: &LabelForest) -> (Vertex, Vertex) {
    (f.parent(e.cur.0), f.parent(e.cur.1))
}

/// Each edge fetches its ends' parents and sends the smaller to the larger.
pub fn parent_connect<S: MessageSink>(edges: &[EdgeState], f: &LabelForest, sink: &mut S) -> Tally {
    let mut messages = 0;
    for e in edges.iter().filter(|e| e.alive) {
        messages += 2;
        let (x, y) = end_parents(e, f);
        if x != y {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            sink.send(hi, lo, Sender::Edge(e.id));
            messages += 1;
        }
    }
    Tally { waves: 3, messages }
}

/// With end parents `x` (v-end) and `y` (w-end): if `y < x` send `y` to the
/// v-end and to `x`, else send `x` to the w-end and to `y`.
pub fn extended_connect<S: MessageSink>(edges: &[EdgeState], f: &LabelForest, sink: &mut S) -> Tally {
    let mut messages = 0;
    for e in edges.iter().filter(|e| e.alive) {
        messages += 4;
        let (v, w) = e.cur;
        let (x, y) = end_parents(e, f);
        let s = Sender::Edge(e.id);
        if y < x {
            sink.send(v, y, s);
            sink.send(x, y, s);
        } else {
            sink.send(w, x, s);
            sink.send(y, x, s);
        }
    }
    Tally { waves: 3, messages }
}

/// Like [`parent_connect`] but sends the larger parent to the smaller.
pub fn max_parent_connect<S: MessageSink>(edges: &[EdgeState], f: &LabelForest, sink: &mut S) -> Tally {
    let mut messages = 0;
    for e in edges.iter().filter(|e| e.alive) {
        messages += 2;
        let (x, y) = end_parents(e, f);
        if x != y {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            sink.send(lo, hi, Sender::Edge(e.id));
            messages += 1;
        }
    }
    Tally { waves: 3, messages }
}

/// For each edge, a heads parent sends itself to a tails parent.
/// `heads` is indexed by vertex id (slot 0 unused).
pub fn random_connect<S: MessageSink>(
    edges: &[EdgeState],
    f: &LabelForest,
    heads: &[bool],
    sink: &mut S,
) -> Result<Tally, PrimitiveError> {
    check_flags(f, heads)?;
    let mut messages = 0;
    for e in edges.iter().filter(|e| e.alive) {
        let (x, y) = end_parents(e, f);
        let s = Sender::Edge(e.id);
        if heads[x as usize] && !heads[y as usize] {
            sink.send(y, x, s);
            messages += 1;
        } else if heads[y as usize] && !heads[x as usize] {
            sink.send(x, y, s);
            messages += 1;
        }
    }
    Ok(Tally { waves: 1, messages })
}

fn check_flags(f: &LabelForest, flags: &[bool]) -> Result<(), PrimitiveError> {
    let expected = f.n() as usize + 1;
    if flags.len() != expected {
        return Err(PrimitiveError::FlagSizeMismatch { expected, got: flags.len() });
    }
    Ok(())
}

/// Every vertex takes the minimum of its parent and what it received.
/// Returns the number of parents changed.
pub fn update(f: &mut LabelForest, inbox: &Inbox) -> usize {
    let mut changed = 0;
    for v in 1..=f.n() {
        if let Some(x) = inbox.get(v) {
            if x < f.parent(v) {
                f.set_parent(v, x);
                changed += 1;
            }
        }
    }
    changed
}

/// Like [`update`] but only roots change.
pub fn root_update(f: &mut LabelForest, inbox: &Inbox) -> usize {
    let mut changed = 0;
    for v in 1..=f.n() {
        if let Some(x) = inbox.get(v) {
            if f.is_root(v) && x < v {
                f.set_parent(v, x);
                changed += 1;
            }
        }
    }
    changed
}

/// Each root adopts the delivered value if it differs from itself, whatever
/// its order. The inbox's resolution decides which value was delivered.
pub fn arbitrary_root_update(f: &mut LabelForest, inbox: &Inbox) -> usize {
    gated_root_update(f, inbox, |_| true)
}

/// [`arbitrary_root_update`] restricted to roots of flat trees.
/// `flat` is indexed by root vertex id (slot 0 unused).
pub fn flat_root_update(f: &mut LabelForest, inbox: &Inbox, flat: &[bool]) -> Result<usize, PrimitiveError> {
    check_flags(f, flat)?;
    Ok(gated_root_update(f, inbox, |v| flat[v as usize]))
}

/// [`arbitrary_root_update`] restricted to roots of passive trees.
pub fn passive_root_update(f: &mut LabelForest, inbox: &Inbox, passive: &[bool]) -> Result<usize, PrimitiveError> {
    check_flags(f, passive)?;
    Ok(gated_root_update(f, inbox, |v| passive[v as usize]))
}

fn gated_root_update(f: &mut LabelForest, inbox: &Inbox, gate: impl Fn(Vertex) -> bool) -> usize {
    let mut changed = 0;
    for v in 1..=f.n() {
        if let Some(x) = inbox.get(v) {
            if x != v && f.is_root(v) && gate(v) {
                f.set_parent(v, x);
                changed += 1;
            }
        }
    }
    changed
}

/// Simultaneously replaces every parent by its grandparent.
/// Returns the number of parents changed.
pub fn shortcut(f: &mut LabelForest) -> (usize, Tally) {
    let old = f.raw().to_vec();
    let parent = f.raw_mut();
    let mut changed = 0;
    let mut messages = 0;
    for v in 1..parent.len() {
        let p = old[v];
        if p as usize != v {
            messages += 1;
            let g = old[p as usize];
            if g != p {
                parent[v] = g;
                changed += 1;
            }
        }
    }
    (changed, Tally { waves: 2, messages })
}

/// Repeats [`shortcut`] until a pass changes nothing. The confirming pass is
/// included in the returned iteration count.
pub fn shortcut_to_fixpoint(f: &mut LabelForest) -> (u32, Tally) {
    let mut total = Tally::default();
    let mut iterations = 0;
    loop {
        let (changed, t) = shortcut(f);
        total += t;
        iterations += 1;
        if changed == 0 {
            return (iterations, total);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopMode {
    /// Edges whose new ends coincide are deleted.
    Delete,
    /// Edges whose new ends coincide become loops and stay alive.
    RetainLoop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateRule {
    AllVertices,
    RootsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlterOptions {
    pub loops: LoopMode,
    /// Also delete edges joining a child with its parent.
    pub strengthened: bool,
    /// Update rule of the algorithm being run; strengthened deletion needs roots-only.
    pub update_rule: UpdateRule,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlterOutcome {
    pub tally: Tally,
    pub deleted: usize,
    pub looped: usize,
}

/// Replaces each live edge's current ends by their parents.
pub fn alter(edges: &mut [EdgeState], f: &LabelForest, opts: AlterOptions) -> Result<AlterOutcome, PrimitiveError> {
    if opts.strengthened && opts.update_rule != UpdateRule::RootsOnly {
        return Err(PrimitiveError::StrengthenedWithoutRootUpdate);
    }
    let mut out = AlterOutcome { tally: Tally { waves: 2, messages: 0 }, ..Default::default() };
    for e in edges.iter_mut().filter(|e| e.alive) {
        out.tally.messages += 2;
        let (v, w) = e.cur;
        let (x, y) = (f.parent(v), f.parent(w));
        if x == y {
            match opts.loops {
                LoopMode::Delete => {
                    e.alive = false;
                    out.deleted += 1;
                }
                LoopMode::RetainLoop => {
                    e.cur = (x, y);
                    if !e.looped {
                        e.looped = true;
                        out.looped += 1;
                    }
                }
            }
        } else if opts.strengthened && (v == y || w == x) {
            e.alive = false;
            out.deleted += 1;
        } else {
            e.cur = (x, y);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn forest(p: &[Vertex]) -> LabelForest {
        LabelForest::from_parents(p).unwrap()
    }

    fn edges(pairs: &[(Vertex, Vertex)]) -> Vec<EdgeState> {
        pairs.iter().enumerate().map(|(i, &(v, w))| EdgeState::new(i as EdgeId, v, w)).collect()
    }

    #[test]
    fn connect_sends_min_to_max() {
        let es = edges(&[(3, 5), (5, 2)]);
        let mut batch = MessageBatch::default();
        let t = connect(&es, &mut batch);
        assert_eq!(t, Tally { waves: 1, messages: 2 });
        assert_eq!(batch.pairs(), vec![(5, 2), (5, 3)]);
        assert_eq!(batch.resolve(5, Resolution::Min).get(5), Some(2));

        let mut batch = MessageBatch::default();
        connect(&edges(&[(4, 4)]), &mut batch);
        assert!(batch.messages.is_empty());

        let mut batch = MessageBatch::default();
        assert_eq!(connect(&[], &mut batch).messages, 0);
    }

    #[test]
    fn parent_connect_cases() {
        let f = forest(&[1, 2, 3, 3]);
        let mut batch = MessageBatch::default();
        let t = parent_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(3, 2)]);
        assert_eq!(t, Tally { waves: 3, messages: 3 });

        let f = forest(&[1, 1, 3, 1]);
        let mut batch = MessageBatch::default();
        let t = parent_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert!(batch.messages.is_empty());
        assert_eq!(t.messages, 2);

        let f = LabelForest::identity(3).unwrap();
        let mut batch = MessageBatch::default();
        parent_connect(&edges(&[(1, 2), (2, 3)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(2, 1), (3, 2)]);
    }

    #[test]
    fn parent_connect_example_with_distinct_parents() {
        // edge (2,4), 2.p = 1, 4.p = 3 -> message (3, 1)
        let f = forest(&[1, 1, 3, 3]);
        let mut batch = MessageBatch::default();
        parent_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(3, 1)]);
    }

    #[test]
    fn extended_connect_cases() {
        let f = forest(&[1, 1, 3, 3]);
        let mut batch = MessageBatch::default();
        extended_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(3, 1), (4, 1)]);

        let mut batch = MessageBatch::default();
        extended_connect(&edges(&[(4, 2)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(3, 1), (4, 1)]);

        // equal parents: x goes to the w-end and to y = x
        let f = forest(&[1, 1, 3, 1]);
        let mut batch = MessageBatch::default();
        extended_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(1, 1), (4, 1)]);
        let mut g = f.clone();
        update(&mut g, &batch.resolve(4, Resolution::Min));
        assert_eq!(g, f);
    }

    #[test]
    fn max_parent_connect_cases() {
        let f = forest(&[1, 1, 3, 3]);
        let mut batch = MessageBatch::default();
        max_parent_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(1, 3)]);

        let f = forest(&[1, 1, 3, 1]);
        let mut batch = MessageBatch::default();
        max_parent_connect(&edges(&[(2, 4)]), &f, &mut batch);
        assert!(batch.messages.is_empty());

        let f = LabelForest::identity(6).unwrap();
        let mut batch = MessageBatch::default();
        max_parent_connect(&edges(&[(5, 6)]), &f, &mut batch);
        assert_eq!(batch.pairs(), vec![(5, 6)]);
    }

    #[test]
    fn random_connect_cases() {
        let f = LabelForest::identity(4).unwrap();
        let coins = |h: &[Vertex]| (0..=4).map(|v| h.contains(&v)).collect::<Vec<bool>>();

        let mut batch = MessageBatch::default();
        random_connect(&edges(&[(1, 2)]), &f, &coins(&[1]), &mut batch).unwrap();
        assert_eq!(batch.pairs(), vec![(2, 1)]);

        let mut batch = MessageBatch::default();
        random_connect(&edges(&[(1, 2)]), &f, &coins(&[1, 2]), &mut batch).unwrap();
        assert!(batch.messages.is_empty());

        let mut batch = MessageBatch::default();
        random_connect(&edges(&[(3, 4)]), &f, &coins(&[4]), &mut batch).unwrap();
        assert_eq!(batch.pairs(), vec![(3, 4)]);

        assert_eq!(
            random_connect(&edges(&[(3, 4)]), &f, &[true; 3], &mut batch),
            Err(PrimitiveError::FlagSizeMismatch { expected: 5, got: 3 })
        );
    }

    fn inbox_with(n: u32, msgs: &[(Vertex, Vertex)], resolution: Resolution) -> Inbox {
        let mut inbox = Inbox::new(n, resolution);
        for (i, &(t, v)) in msgs.iter().enumerate() {
            inbox.send(t, v, Sender::Edge(i as EdgeId));
        }
        inbox
    }

    #[test]
    fn updates() {
        let mut f = LabelForest::identity(5).unwrap();
        assert_eq!(update(&mut f, &inbox_with(5, &[(5, 2), (5, 3)], Resolution::Min)), 1);
        assert_eq!(f.parent(5), 2);

        let mut f = forest(&[1, 2, 3, 4, 1]);
        assert_eq!(update(&mut f, &inbox_with(5, &[(5, 2)], Resolution::Min)), 0);
        assert_eq!(f.parent(5), 1);

        let mut f = forest(&[1, 1, 2, 3, 4]);
        let before = f.clone();
        update(&mut f, &Inbox::new(5, Resolution::Min));
        assert_eq!(f, before);
    }

    #[test]
    fn root_updates() {
        let mut f = LabelForest::identity(5).unwrap();
        root_update(&mut f, &inbox_with(5, &[(5, 2)], Resolution::Min));
        assert_eq!(f.parent(5), 2);

        let mut f = forest(&[1, 2, 3, 4, 4]);
        root_update(&mut f, &inbox_with(5, &[(5, 2)], Resolution::Min));
        assert_eq!(f.parent(5), 4);

        let mut f = LabelForest::identity(5).unwrap();
        assert_eq!(root_update(&mut f, &inbox_with(5, &[(5, 5)], Resolution::Min)), 0);
        assert!(f.is_root(5));
    }

    #[test]
    fn arbitrary_root_updates() {
        // 7 arrives over edge 0, 5 over edge 1
        let first = Resolution::Arbitrary(ArbitraryPolicy::first_by_edge_id());
        let mut f = LabelForest::identity(7).unwrap();
        arbitrary_root_update(&mut f, &inbox_with(7, &[(3, 7), (3, 5)], first.clone()));
        assert_eq!(f.parent(3), 7);

        let mut f = LabelForest::identity(7).unwrap();
        assert_eq!(arbitrary_root_update(&mut f, &inbox_with(7, &[(3, 3)], first)), 0);

        // with min resolution the pick degenerates to root_update
        let msgs = [(5, 3), (5, 2), (4, 1), (6, 6)];
        let mut a = LabelForest::identity(7).unwrap();
        let mut b = a.clone();
        arbitrary_root_update(&mut a, &inbox_with(7, &msgs, Resolution::Min));
        root_update(&mut b, &inbox_with(7, &msgs, Resolution::Min));
        assert_eq!(a, b);
    }

    #[test]
    fn gated_updates() {
        let policy = Resolution::Arbitrary(ArbitraryPolicy::first_by_edge_id());
        let mut f = LabelForest::identity(4).unwrap();
        let open = vec![true; 5];
        flat_root_update(&mut f, &inbox_with(4, &[(3, 2)], policy.clone()), &open).unwrap();
        assert_eq!(f.parent(3), 2);

        let mut f = LabelForest::identity(4).unwrap();
        let closed = vec![false; 5];
        flat_root_update(&mut f, &inbox_with(4, &[(3, 2)], policy.clone()), &closed).unwrap();
        assert!(f.is_root(3));

        let mut f = LabelForest::identity(4).unwrap();
        assert_eq!(passive_root_update(&mut f, &Inbox::new(4, policy.clone()), &open), Ok(0));
        assert_eq!(
            passive_root_update(&mut f, &Inbox::new(4, policy), &[true]),
            Err(PrimitiveError::FlagSizeMismatch { expected: 5, got: 1 })
        );
    }

    #[test]
    fn shortcut_uses_old_grandparents() {
        let mut f = forest(&[1, 1, 2, 3]);
        let (changed, t) = shortcut(&mut f);
        assert_eq!(f.parents(), &[1, 1, 1, 2]);
        assert_eq!(changed, 2);
        assert_eq!(t, Tally { waves: 2, messages: 3 });

        let mut f = forest(&[1, 1, 2, 3, 4]);
        shortcut(&mut f);
        assert_eq!(f.parents(), &[1, 1, 1, 2, 3]);

        let mut f = forest(&[1, 1, 1, 4, 4]);
        assert_eq!(shortcut(&mut f).0, 0);
        assert_eq!(f.parents(), &[1, 1, 1, 4, 4]);
    }

    #[test]
    fn shortcut_fixpoint_counts_confirming_pass() {
        let mut f = forest(&[1, 1, 2, 3, 4]);
        let (iters, t) = shortcut_to_fixpoint(&mut f);
        assert_eq!(iters, 3);
        assert_eq!(t.waves, 6);
        assert!(f.is_flat());

        let mut f = forest(&[1, 1, 1]);
        assert_eq!(shortcut_to_fixpoint(&mut f).0, 1);
    }

    #[test]
    fn shortcut_fixpoint_on_long_chains_is_logarithmic() {
        for k in 1..=12u32 {
            let len = (1u32 << k) + 1;
            let parents: Vec<Vertex> = (1..=len).map(|v| v.saturating_sub(1).max(1)).collect();
            let mut f = forest(&parents);
            let (iters, _) = shortcut_to_fixpoint(&mut f);
            // height 2^k halves to 1 in k passes, plus the confirming pass
            assert_eq!(iters, k + 1, "chain of {len}");
        }
    }

    const PLAIN: AlterOptions = AlterOptions {
        loops: LoopMode::Delete,
        strengthened: false,
        update_rule: UpdateRule::AllVertices,
    };

    #[test]
    fn alter_cases() {
        let f = forest(&[1, 2, 3, 2, 5, 3]);
        let mut es = edges(&[(4, 6)]);
        let out = alter(&mut es, &f, PLAIN).unwrap();
        assert_eq!(es[0].cur, (2, 3));
        assert_eq!(out.tally, Tally { waves: 2, messages: 2 });

        let f = forest(&[1, 2, 3, 2, 5, 2]);
        let mut es = edges(&[(4, 6)]);
        alter(&mut es, &f, PLAIN).unwrap();
        assert!(!es[0].alive);
        let mut es = edges(&[(4, 6)]);
        alter(&mut es, &f, AlterOptions { loops: LoopMode::RetainLoop, ..PLAIN }).unwrap();
        assert!(es[0].alive && es[0].looped);
        assert_eq!(es[0].cur, (2, 2));
        // a loop keeps following parents and stays a loop
        let g = forest(&[1, 1, 3, 2, 5, 2]);
        alter(&mut es, &g, AlterOptions { loops: LoopMode::RetainLoop, ..PLAIN }).unwrap();
        assert_eq!(es[0].cur, (1, 1));
        assert!(es[0].looped);
    }

    #[test]
    fn strengthened_alter() {
        // one RA round on edge (4,6): connect sends 4 to 6, root update makes 6.p = 4,
        // and the alter sees x = 4.p = 4, y = 6.p = 4
        let f = forest(&[1, 2, 3, 4, 5, 4]);
        let opts = AlterOptions { strengthened: true, update_rule: UpdateRule::RootsOnly, ..PLAIN };
        let mut es = edges(&[(4, 6)]);
        alter(&mut es, &f, opts).unwrap();
        assert!(!es[0].alive);

        // child-parent edge with distinct new ends: e.v = y
        let f = forest(&[1, 2, 2, 2, 5, 4]);
        let mut es = edges(&[(4, 6)]);
        alter(&mut es, &f, opts).unwrap();
        assert!(!es[0].alive);
        let mut es = edges(&[(4, 6)]);
        alter(&mut es, &f, AlterOptions { update_rule: UpdateRule::RootsOnly, ..PLAIN }).unwrap();
        assert_eq!(es[0].cur, (2, 4));

        let mut es = edges(&[(4, 6)]);
        assert_eq!(
            alter(&mut es, &f, AlterOptions { strengthened: true, ..PLAIN }),
            Err(PrimitiveError::StrengthenedWithoutRootUpdate)
        );
    }

    fn arb_forest_and_edges() -> impl Strategy<Value = (LabelForest, Vec<EdgeState>)> {
        (2u32..40).prop_flat_map(|n| {
            let parents = (1..=n).map(|v| 1..=v).collect::<Vec<_>>();
            let es = prop::collection::vec((1..=n, 1..=n), 0..80);
            (parents, es).prop_map(|(p, pairs)| {
                let f = LabelForest::from_parents(&p).unwrap();
                (f, edges(&pairs))
            })
        })
    }

    proptest! {
        // streaming combination must match combining the recorded multiset
        #[test]
        fn inbox_matches_batch((f, es) in arb_forest_and_edges(), seed in 0u64..4) {
            let n = f.n();
            let policy = Resolution::Arbitrary(ArbitraryPolicy::seeded(seed, es.len()));
            for resolution in [Resolution::Min, policy] {
                let mut batch = MessageBatch::default();
                let mut inbox = Inbox::new(n, resolution.clone());
                prop_assert_eq!(
                    extended_connect(&es, &f, &mut batch),
                    extended_connect(&es, &f, &mut inbox)
                );
                let replay = batch.resolve(n, resolution.clone());
                for v in 1..=n {
                    prop_assert_eq!(replay.get(v), inbox.get(v));
                    prop_assert_eq!(replay.sender(v), inbox.sender(v));
                }
                if resolution == Resolution::Min {
                    for v in 1..=n {
                        let min = batch.messages.iter().filter(|m| m.target == v).map(|m| m.value).min();
                        prop_assert_eq!(inbox.get(v), min);
                    }
                }
            }
        }

        #[test]
        fn min_labeling_primitives_keep_parent_below_vertex((f, es) in arb_forest_and_edges()) {
            let mut f = f;
            let mut inbox = Inbox::new(f.n(), Resolution::Min);
            parent_connect(&es, &f, &mut inbox);
            update(&mut f, &inbox);
            shortcut(&mut f);
            for v in 1..=f.n() {
                prop_assert!(f.parent(v) <= v);
            }
            prop_assert!(crate::forest::assert_forest(&f).is_ok());
        }

        #[test]
        fn shortcut_is_idempotent_on_flat_forests((f, _es) in arb_forest_and_edges()) {
            let mut f = f;
            let before = crate::forest::tree_stats(&f).unwrap();
            shortcut(&mut f);
            let after = crate::forest::tree_stats(&f).unwrap();
            for (a, b) in before.iter().zip(&after) {
                prop_assert!(b.height <= a.height);
            }
            shortcut_to_fixpoint(&mut f);
            let flat = f.clone();
            prop_assert_eq!(shortcut(&mut f).0, 0);
            prop_assert_eq!(f, flat);
        }
    }
}
