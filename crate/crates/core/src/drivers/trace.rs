//! Run traces and their JSON/CSV forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AlgorithmSpec;
use crate::forest::LabelForest;
use crate::{EdgeId, Vertex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub algorithm: String,
    pub n: u32,
    pub m: usize,
    pub seed: u64,
    pub options: AlgorithmSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// One tree at the end of a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub root: Vertex,
    pub size: u32,
    pub height: u32,
    pub flat: bool,
    pub active: bool,
    /// Roots of the previous round's trees whose root now lies in this tree.
    pub constituents: Vec<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub waves: u64,
    pub messages: u64,
    /// Parent changes made during the round.
    pub changed: u64,
    pub shortcut_passes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<TreeRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red: Option<usize>,
    /// Coin flips of the round as a string of `H`/`T`, vertex 1 first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coins: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub rounds: u64,
    pub waves: u64,
    pub messages: u64,
    pub shortcut_passes: u64,
}

/// Parent array captured after a primitive or at the end of a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round: u64,
    /// Name of the primitive just executed, or `round-end`.
    pub at: String,
    pub parents: Vec<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub rounds: Vec<RoundRecord>,
    pub totals: Totals,
    pub final_forest: LabelForest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spanning_forest: Option<Vec<EdgeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<Snapshot>>,
}

impl RunTrace {
    pub fn rounds(&self) -> u64 {
        self.totals.rounds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Per-round shortcut pass counts, first round first.
    pub fn shortcut_passes_per_round(&self) -> Vec<u64> {
        self.rounds.iter().map(|r| r.shortcut_passes).collect()
    }
}

pub const CSV_VERSION_LINE: &str = "# labelcc-metrics v1";

/// One CSV row of run metrics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub graph: String,
    pub algorithm: String,
    pub n: u32,
    pub m: usize,
    pub d: Option<u32>,
    pub rounds: u64,
    pub waves: u64,
    pub messages: u64,
    pub shortcut_passes: u64,
    pub ok: bool,
}

impl MetricsRow {
    pub fn from_trace(graph: &str, trace: &RunTrace, d: Option<u32>, ok: bool) -> Self {
        MetricsRow {
            graph: graph.to_string(),
            algorithm: trace.header.algorithm.clone(),
            n: trace.header.n,
            m: trace.header.m,
            d,
            rounds: trace.totals.rounds,
            waves: trace.totals.waves,
            messages: trace.totals.messages,
            shortcut_passes: trace.totals.shortcut_passes,
            ok,
        }
    }
}

/// Writes the version comment, the header row and `rows`.
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["graph", "algorithm", "n", "m", "d", "rounds", "waves", "messages", "shortcut_passes", "ok"])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses CSV written by [`write_metrics_csv`].
pub fn read_metrics_csv(text: &str) -> csv::Result<Vec<MetricsRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: Option<u32>) -> MetricsRow {
        MetricsRow {
            graph: "path:5".into(),
            algorithm: "R".into(),
            n: 5,
            m: 4,
            d,
            rounds: 3,
            waves: 15,
            messages: 30,
            shortcut_passes: 3,
            ok: true,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(Some(4)), row(None)];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# labelcc-metrics v1\ngraph,algorithm,n,m,d,rounds,waves,messages,shortcut_passes,ok\n"));
        assert!(text.contains("path:5,R,5,4,,3,15,30,3,true"));
        assert_eq!(read_metrics_csv(&text).unwrap(), rows);
    }

    #[test]
    fn empty_csv_keeps_header() {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
