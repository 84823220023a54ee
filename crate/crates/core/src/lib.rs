//! Bulk-synchronous simulator for concurrent labeling algorithms that compute
//! connected components.
//!
//! Every vertex carries a label (its *parent*); the labels form a forest that
//! the algorithms collapse into one flat tree per component. Work happens in
//! synchronous message *waves*: within a wave all reads see the pre-wave state
//! and all writes land together, with conflicting writes combined by minimum
//! (or by a seeded arbitrary pick for the classical reference algorithms).
//!
//! Module map:
//!
//! * [`graph`]: input graphs, the edge-list format, BFS components and diameter.
//! * [`forest`]: the label forest, structural queries, green/red colorings and
//!   level measurements.
//! * [`primitives`]: the per-wave building blocks (connect variants, updates,
//!   shortcut, alter) with wave and message accounting.
//! * [`drivers`]: round loops for the eleven algorithms, invariant hooks,
//!   traces, lockstep comparison and potential instrumentation.
//! * [`generators`]: deterministic graph families, including the worst case
//!   for flatten-every-round variants.
//! * [`oracle`]: union-find ground truth, final-labeling verification and
//!   exhaustive divergence search.
//! * [`suite`] and [`battery`]: the built-in graph suites and the invariant
//!   battery used by `labelcc verify`.

pub mod battery;
pub mod checks;
pub mod drivers;
pub mod forest;
pub mod generators;
pub mod graph;
pub mod oracle;
pub mod primitives;
pub mod suite;

/// A vertex id. Vertices are numbered `1..=n`; `0` is never a vertex.
pub type Vertex = u32;

/// Index of an edge in the input edge list (0-based, in input order).
pub type EdgeId = u32;

pub use drivers::{run, run_lockstep, AlgorithmKind, AlgorithmSpec, LockstepOutcome, RunTrace};
pub use forest::LabelForest;
pub use graph::Graph;
