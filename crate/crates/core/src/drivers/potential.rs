//! Tree potentials for monotone runs.
//!
//! A tree's potential in a round is 0 when passive, 3 when active and flat,
//! and `h + 1` when its height `h` is at least 2. The potential of a tree `T`
//! in an earlier round is the sum over the earlier trees whose vertices lie in
//! `T`; in a monotone run every earlier tree lies wholly inside one later tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AlgorithmKind, RunTrace};
use crate::Vertex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PotentialError {
    #[error("potentials are undefined for non-monotone algorithm {0}")]
    NonMonotone(AlgorithmKind),
    #[error("trace has no per-tree records; run with instrumentation enabled")]
    NotInstrumented,
}

pub fn phi(active: bool, height: u32) -> u64 {
    match (active, height) {
        (false, _) => 0,
        (true, 0 | 1) => 3,
        (true, h) => h as u64 + 1,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePotential {
    pub root: Vertex,
    pub size: u32,
    pub active: bool,
    pub phi: u64,
    /// Summed potential of this tree's constituents one round earlier;
    /// `None` in the first reported round.
    pub phi_prev: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialRound {
    pub round: u64,
    pub total: u64,
    pub trees: Vec<TreePotential>,
}

/// Potentials for every round from round 2 on.
pub fn potential_report(trace: &RunTrace) -> Result<Vec<PotentialRound>, PotentialError> {
    let kind: AlgorithmKind = trace.header.options.kind;
    if !kind.is_monotone() {
        return Err(PotentialError::NonMonotone(kind));
    }
    let n = trace.header.n as usize;
    let mut prev_phi: Vec<u64> = vec![0; n + 1];
    let mut have_prev = false;
    let mut out = Vec::new();
    for rec in &trace.rounds {
        let trees = rec.trees.as_ref().ok_or(PotentialError::NotInstrumented)?;
        let mut cur_phi = vec![0u64; n + 1];
        let mut round = PotentialRound { round: rec.round, total: 0, trees: Vec::with_capacity(trees.len()) };
        for t in trees {
            let p = phi(t.active, t.height);
            cur_phi[t.root as usize] = p;
            round.total += p;
            let phi_prev = have_prev.then(|| t.constituents.iter().map(|&c| prev_phi[c as usize]).sum());
            round.trees.push(TreePotential { root: t.root, size: t.size, active: t.active, phi: p, phi_prev });
        }
        if rec.round >= 2 {
            out.push(round);
            have_prev = true;
        }
        prev_phi = cur_phi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_cases() {
        assert_eq!(phi(true, 1), 3);
        assert_eq!(phi(true, 3), 4);
        assert_eq!(phi(false, 7), 0);
        assert_eq!(phi(true, 2), 3);
    }
}
