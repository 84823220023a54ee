//! Bound and invariant checks over finished runs.

use serde::{Deserialize, Serialize};

use crate::drivers::{potential_report, RunTrace};
use crate::graph::Graph;

/// Base of the per-round potential decay for R: `(4/3)^(1/5)`.
pub fn decay_base() -> f64 {
    (4.0f64 / 3.0).powf(0.2)
}

/// Round bound for R on `n` vertices: `ceil(lg n / lg a) + 2`.
pub fn r_round_bound(n: u32) -> u64 {
    if n <= 1 {
        return 2;
    }
    let x = (n as f64).log2() / decay_base().log2();
    x.ceil() as u64 + 2
}

/// Per-round, per-edge message allowance for R. Parent-connect sends at most
/// three messages per edge and a shortcut one per non-root, and there are at
/// most `m` non-roots.
pub const R_MESSAGES_PER_EDGE_ROUND: u64 = 8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSummary {
    pub rounds_checked: u64,
    pub trees_checked: u64,
    /// Largest `Φ_k(T) / (2|T| / a^(k-2))` seen.
    pub worst_decay_ratio: f64,
}

/// Checks the potential facts for an instrumented R or RA run:
///
/// * after round 2 every tree of a component with two or more vertices has
///   at least two vertices;
/// * every round but the last has an active tree;
/// * for active `T` in round `k >= 3`: `Φ_{k-1}(T) >= Φ_k(T)`, and
///   `5 Φ_{k-1}(T) >= 6 Φ_k(T)` whenever `Φ_k(T) >= 5`;
/// * for active `T` in round `k >= 2`: `Φ_k(T) <= 2|T| / a^(k-2)`.
///
/// Isolated vertices are left out.
pub fn check_potential(trace: &RunTrace, g: &Graph) -> Result<PotentialSummary, String> {
    let report = potential_report(trace).map_err(|e| e.to_string())?;
    let comps = g.components_bfs();
    let sizes = comps.sizes();
    let isolated = |v: u32| sizes[comps.minimum(v) as usize] == 1;
    let ln_a = decay_base().ln();
    let last = trace.rounds();
    let mut summary = PotentialSummary::default();
    for round in &report {
        let k = round.round;
        let mut any_active = false;
        for t in round.trees.iter().filter(|t| !isolated(t.root)) {
            if k >= 2 && t.size < 2 {
                return Err(format!("round {k}: tree {} is a singleton", t.root));
            }
            if !t.active {
                continue;
            }
            any_active = true;
            summary.trees_checked += 1;
            if let (true, Some(prev)) = (k >= 3, t.phi_prev) {
                if prev < t.phi {
                    return Err(format!("round {k}: tree {} potential rose from {prev} to {}", t.root, t.phi));
                }
                if t.phi >= 5 && 5 * prev < 6 * t.phi {
                    return Err(format!(
                        "round {k}: tree {} potential {} not a 6/5 drop from {prev}",
                        t.root, t.phi
                    ));
                }
            }
            // Φ <= 2|T| a^-(k-2), compared in logs
            let lhs = (t.phi as f64).ln();
            let rhs = (2.0 * t.size as f64).ln() - (k as f64 - 2.0) * ln_a;
            let ratio = (lhs - rhs).exp();
            summary.worst_decay_ratio = summary.worst_decay_ratio.max(ratio);
            if lhs > rhs + 1e-12 {
                return Err(format!(
                    "round {k}: tree {} (size {}) potential {} exceeds 2|T|/a^(k-2) = {:.4}",
                    t.root,
                    t.size,
                    t.phi,
                    rhs.exp()
                ));
            }
        }
        let nontrivial = round.trees.iter().any(|t| !isolated(t.root));
        if !any_active && nontrivial && k < last {
            return Err(format!("round {k} has no active tree but is not the last"));
        }
        summary.rounds_checked += 1;
    }
    Ok(summary)
}

/// Least-squares line through `(x, y)` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_bounds() {
        assert_eq!(r_round_bound(5), 30);
        assert_eq!(r_round_bound(1025), 123);
        assert!(decay_base() > 1.05 && decay_base() < 1.06);
    }

    #[test]
    fn fits() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        let noisy = linear_fit(&xs, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(noisy.r_squared < 0.5);
    }
}
