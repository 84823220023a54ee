//! Per-graph invariant battery shared by `labelcc verify` and the acceptance
//! suite.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checks::{check_potential, r_round_bound, R_MESSAGES_PER_EDGE_ROUND};
use crate::drivers::{run, run_lockstep, AlgorithmKind, AlgorithmSpec, Fault, HookSet, RunOptions, RunTrace};
use crate::graph::Graph;
use crate::oracle::{verify_final, verify_spanning_forest};
use crate::primitives::LoopMode;
use crate::suite::{Diameter, SuiteGraph, EXACT_DIAMETER_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckGroup {
    /// Every algorithm terminates with a verified labeling; R and RA spanning forests.
    Correctness,
    /// R/RA and S/SA make identical parent changes.
    Lockstep,
    /// R's logarithmic round bound and its message budget.
    Bounds,
    /// Potential facts for R.
    Potential,
    /// Diameter round bounds for E, A (loops kept) and SRT.
    Diameter,
    /// Green-target, color and root-path hooks.
    Color,
    /// Parent distance stays within `2^waves`.
    Distance,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 7] = [
        CheckGroup::Correctness,
        CheckGroup::Lockstep,
        CheckGroup::Bounds,
        CheckGroup::Potential,
        CheckGroup::Diameter,
        CheckGroup::Color,
        CheckGroup::Distance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckGroup::Correctness => "correctness",
            CheckGroup::Lockstep => "lockstep",
            CheckGroup::Bounds => "bounds",
            CheckGroup::Potential => "potential",
            CheckGroup::Diameter => "diameter",
            CheckGroup::Color => "color",
            CheckGroup::Distance => "distance",
        }
    }
}

impl fmt::Display for CheckGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckGroup::ALL
            .into_iter()
            .find(|g| g.name() == s.trim())
            .ok_or_else(|| format!("unknown check group `{s}`"))
    }
}

/// One named check on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub group: CheckGroup,
    pub check: String,
    pub graph: String,
    pub passed: bool,
    pub detail: String,
}

/// Distance checks are skipped on graphs denser than this many edges per vertex.
pub const DISTANCE_MAX_DENSITY: usize = 4;

pub struct Battery {
    pub groups: Vec<CheckGroup>,
    pub fault: Option<Fault>,
}

impl Battery {
    pub fn new(groups: &[CheckGroup]) -> Self {
        Battery { groups: groups.to_vec(), fault: None }
    }

    fn on(&self, g: CheckGroup) -> bool {
        self.groups.contains(&g)
    }

    fn opts(&self, hooks: HookSet) -> RunOptions {
        RunOptions { hooks, fault: self.fault, ..RunOptions::default() }
    }

    /// Runs the selected groups on one suite graph.
    pub fn check(&self, entry: &SuiteGraph) -> Vec<CheckOutcome> {
        let g = match entry.build() {
            Ok(g) => g,
            Err(e) => {
                return vec![CheckOutcome {
                    group: CheckGroup::Correctness,
                    check: "build".into(),
                    graph: entry.label(),
                    passed: false,
                    detail: e.to_string(),
                }]
            }
        };
        let label = entry.label();
        let mut out = Vec::new();
        let mut push = |group: CheckGroup, check: &str, res: Result<String, String>| {
            let (passed, detail) = match res {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            out.push(CheckOutcome { group, check: check.into(), graph: label.clone(), passed, detail });
        };

        if self.on(CheckGroup::Correctness) {
            for kind in AlgorithmKind::ALL {
                let mut spec = AlgorithmSpec::new(kind);
                if matches!(kind, AlgorithmKind::R | AlgorithmKind::RA) {
                    spec.record_spanning_forest = true;
                }
                push(CheckGroup::Correctness, &kind.to_string(), self.correctness(&spec, &g));
            }
            let strengthened = AlgorithmSpec::new(AlgorithmKind::RA).strengthened();
            push(CheckGroup::Correctness, "RA-strengthened", self.correctness(&strengthened, &g));
        }

        if self.on(CheckGroup::Lockstep) {
            for (a, b) in [(AlgorithmKind::R, AlgorithmKind::RA), (AlgorithmKind::S, AlgorithmKind::SA)] {
                let res = match run_lockstep(&AlgorithmSpec::new(a), &AlgorithmSpec::new(b), &g) {
                    Ok(o) if o.is_equal() => Ok(format!("{o:?}")),
                    Ok(o) => Err(format!("{o:?}")),
                    Err(e) => Err(e.to_string()),
                };
                push(CheckGroup::Lockstep, &format!("{a}={b}"), res);
            }
        }

        let need_r = self.on(CheckGroup::Bounds) || self.on(CheckGroup::Potential);
        if need_r {
            let opts = RunOptions { instrument: self.on(CheckGroup::Potential), ..self.opts(HookSet::standard()) };
            match run(&AlgorithmSpec::new(AlgorithmKind::R), &g, &opts) {
                Ok(trace) => {
                    if self.on(CheckGroup::Bounds) {
                        push(CheckGroup::Bounds, "R-rounds", r_rounds(&trace, &g));
                        push(CheckGroup::Bounds, "R-messages", r_messages(&trace, &g));
                    }
                    if self.on(CheckGroup::Potential) {
                        push(
                            CheckGroup::Potential,
                            "R-potential",
                            check_potential(&trace, &g).map(|s| format!("{s:?}")),
                        );
                    }
                }
                Err(e) => {
                    for group in [CheckGroup::Bounds, CheckGroup::Potential].into_iter().filter(|&x| self.on(x)) {
                        push(group, "R-run", Err(e.to_string()));
                    }
                }
            }
        }

        if self.on(CheckGroup::Diameter) {
            let d = entry.diameter_estimate(&g);
            let cases = [
                (AlgorithmSpec::new(AlgorithmKind::E), 1),
                (AlgorithmSpec::new(AlgorithmKind::A).with_loop_mode(LoopMode::RetainLoop), 2),
                (AlgorithmSpec::new(AlgorithmKind::SRT), 1),
            ];
            for (spec, slack) in cases {
                let res = match run(&spec, &g, &self.opts(HookSet::standard())) {
                    Ok(t) => diameter_bound(&g, d, t.rounds(), slack),
                    Err(e) => Err(e.to_string()),
                };
                push(CheckGroup::Diameter, &format!("{}<=d+{slack}", spec.kind), res);
            }
        }

        if self.on(CheckGroup::Color) {
            let color_hooks =
                HookSet { green_target: true, color_lemmas: true, root_paths: true, ..HookSet::standard() };
            let a = AlgorithmSpec::new(AlgorithmKind::A).with_loop_mode(LoopMode::RetainLoop);
            push(CheckGroup::Color, "A-retain", self.hooked(&a, &g, color_hooks));
            let green = HookSet { green_target: true, ..HookSet::standard() };
            for kind in [AlgorithmKind::P, AlgorithmKind::E, AlgorithmKind::R] {
                push(CheckGroup::Color, &format!("{kind}-green-target"), self.hooked(&AlgorithmSpec::new(kind), &g, green));
            }
        }

        if self.on(CheckGroup::Distance) && g.m() <= DISTANCE_MAX_DENSITY * g.n() as usize {
            let hooks = HookSet { distance: true, ..HookSet::standard() };
            for kind in AlgorithmKind::ALL {
                push(CheckGroup::Distance, &kind.to_string(), distance_run(&AlgorithmSpec::new(kind), &g, &self.opts(hooks)));
            }
        }
        out
    }

    fn correctness(&self, spec: &AlgorithmSpec, g: &Graph) -> Result<String, String> {
        let trace = run(spec, g, &self.opts(HookSet::standard())).map_err(|e| e.to_string())?;
        verify_final(&trace.final_forest, g, spec.kind.is_min_labeling()).map_err(|e| e.to_string())?;
        if let Some(span) = &trace.spanning_forest {
            verify_spanning_forest(g, span)?;
        }
        Ok(format!("{} rounds", trace.rounds()))
    }

    fn hooked(&self, spec: &AlgorithmSpec, g: &Graph, hooks: HookSet) -> Result<String, String> {
        let trace = run(spec, g, &self.opts(hooks)).map_err(|e| e.to_string())?;
        Ok(format!("{} rounds", trace.rounds()))
    }
}

/// Runs with the distance hook and also checks `waves >= lg d`.
pub fn distance_run(spec: &AlgorithmSpec, g: &Graph, opts: &RunOptions) -> Result<String, String> {
    let trace = run(spec, g, opts).map_err(|e| e.to_string())?;
    let d = g.diameter_lower_bound();
    let waves = trace.totals.waves;
    if d > 1 && (waves as f64) < (d as f64).log2() {
        return Err(format!("{waves} waves on diameter {d}"));
    }
    Ok(format!("{waves} waves, d >= {d}"))
}

fn r_rounds(trace: &RunTrace, g: &Graph) -> Result<String, String> {
    let bound = r_round_bound(g.n());
    if trace.rounds() <= bound {
        Ok(format!("{} <= {bound}", trace.rounds()))
    } else {
        Err(format!("{} rounds > bound {bound}", trace.rounds()))
    }
}

fn r_messages(trace: &RunTrace, g: &Graph) -> Result<String, String> {
    let allowance = R_MESSAGES_PER_EDGE_ROUND * g.m() as u64 * trace.rounds();
    if trace.totals.messages <= allowance {
        Ok(format!("{} <= {allowance}", trace.totals.messages))
    } else {
        Err(format!("{} messages > {allowance}", trace.totals.messages))
    }
}

/// `rounds <= d + slack`, falling back to the exact diameter when only a
/// lower bound was at hand and it was not enough.
pub fn diameter_bound(g: &Graph, d: Diameter, rounds: u64, slack: u64) -> Result<String, String> {
    if rounds <= d.value() as u64 + slack {
        return Ok(format!("{rounds} <= {} + {slack}", d.value()));
    }
    if d.exact().is_none() {
        if let Some(exact) = g.diameter_if_cheap(EXACT_DIAMETER_BUDGET) {
            if rounds <= exact as u64 + slack {
                return Ok(format!("{rounds} <= {exact} + {slack}"));
            }
            return Err(format!("{rounds} rounds > d + {slack} with d = {exact}"));
        }
        return Err(format!("{rounds} rounds > {} + {slack}; exact diameter too costly", d.value()));
    }
    Err(format!("{rounds} rounds > d + {slack} with d = {}", d.value()))
}
