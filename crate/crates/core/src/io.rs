//! Temporal CSV export in Gephi's interval syntax, and run reports.
//!
//! `nodes.csv` has columns `Id,Label,Timeset,Community`. A node alive at
//! steps `a..=b` has the timeset `<[a,b+1)>`; its community label over time
//! is a dynamic attribute `<[a,c,x);[c,b+1,y)>` with one half-open interval
//! per maximal run of a label.
//!
//! `edges.csv` has columns `Source,Target,Type,Timeset`, one row per node
//! pair with `Source < Target`, type `Undirected`, and one interval per
//! maximal run of steps in which the link exists, e.g. `<[0,2);[3,4)>`.
//! Rows are sorted by id.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembler::{NodeId, Snapshot};
use crate::error::{Error, Result};
use crate::lifecycle::{EventRecord, Side};
use crate::metrics::Metric;
use crate::transition::{FlowMatrix, Heuristic};

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";

/// Maximal runs of consecutive steps, as half-open `(start, end)` pairs.
fn runs(steps: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &t in steps {
        match out.last_mut() {
            Some(r) if r.1 == t => r.1 = t + 1,
            _ => out.push((t, t + 1)),
        }
    }
    out
}

fn format_intervals(runs: &[(usize, usize)]) -> String {
    let parts: Vec<String> = runs.iter().map(|(a, b)| format!("[{a},{b})")).collect();
    format!("<{}>", parts.join(";"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Validation(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Contents of `nodes.csv`.
pub fn nodes_csv(snapshots: &[Snapshot]) -> Result<String> {
    let mut history: BTreeMap<NodeId, Vec<(usize, u64)>> = BTreeMap::new();
    for s in snapshots {
        for n in &s.nodes {
            history.entry(n.id).or_default().push((s.t, s.labels[n.community]));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Id", "Label", "Timeset", "Community"]).map_err(csv_error)?;
    for (id, steps) in &history {
        let alive: Vec<usize> = steps.iter().map(|s| s.0).collect();
        let mut community: Vec<(usize, usize, u64)> = Vec::new();
        for &(t, label) in steps {
            match community.last_mut() {
                Some(r) if r.1 == t && r.2 == label => r.1 = t + 1,
                _ => community.push((t, t + 1, label)),
            }
        }
        let attr: Vec<String> = community.iter().map(|(a, b, c)| format!("[{a},{b},{c})")).collect();
        let id = id.to_string();
        let timeset = format_intervals(&runs(&alive));
        let attr = format!("<{}>", attr.join(";"));
        w.write_record([id.as_str(), id.as_str(), timeset.as_str(), attr.as_str()])
            .map_err(csv_error)?;
    }
    finish(w)
}

/// Contents of `edges.csv`.
pub fn edges_csv(snapshots: &[Snapshot]) -> Result<String> {
    let mut history: BTreeMap<(NodeId, NodeId), Vec<usize>> = BTreeMap::new();
    for s in snapshots {
        for &l in &s.links {
            history.entry(l).or_default().push(s.t);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Source", "Target", "Type", "Timeset"]).map_err(csv_error)?;
    for ((a, b), steps) in &history {
        w.write_record([a.to_string(), b.to_string(), "Undirected".into(), format_intervals(&runs(steps))])
            .map_err(csv_error)?;
    }
    finish(w)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `nodes.csv` and `edges.csv` into `dir`, which must exist.
pub fn export_temporal_csv(snapshots: &[Snapshot], dir: &Path) -> Result<()> {
    write_file(&dir.join(NODES_FILE), &nodes_csv(snapshots)?)?;
    write_file(&dir.join(EDGES_FILE), &edges_csv(snapshots)?)
}

/// One step of a temporal network read back from CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepView {
    /// Community label of every node alive at the step.
    pub nodes: BTreeMap<NodeId, u64>,
    pub links: Vec<(NodeId, NodeId)>,
}

fn parse_intervals(field: &str, with_value: bool) -> Result<Vec<(usize, usize, u64)>> {
    let bad = || Error::Validation(format!("malformed interval list {field:?}"));
    let inner = field
        .strip_prefix('<')
        .and_then(|f| f.strip_suffix('>'))
        .ok_or_else(bad)?;
    let mut out = Vec::new();
    for part in inner.split(';').filter(|p| !p.is_empty()) {
        let body = part
            .strip_prefix('[')
            .and_then(|p| p.strip_suffix(')'))
            .ok_or_else(bad)?;
        let nums: Vec<u64> = body
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (with_value, nums.as_slice()) {
            (false, &[a, b]) | (true, &[a, b, _]) if a < b => {
                out.push((a as usize, b as usize, nums.get(2).copied().unwrap_or(0)))
            }
            _ => return Err(bad()),
        }
    }
    Ok(out)
}

/// Rebuilds per-step node labels and links from the two CSV files. The step
/// count is the end of the latest interval.
pub fn parse_temporal_csv(nodes: &str, edges: &str) -> Result<Vec<StepView>> {
    let mut steps: Vec<StepView> = Vec::new();
    let grow = |steps: &mut Vec<StepView>, end: usize| {
        if steps.len() < end {
            steps.resize_with(end, StepView::default);
        }
    };
    let mut r = csv::Reader::from_reader(nodes.as_bytes());
    for row in r.records() {
        let row = row.map_err(csv_error)?;
        let id = NodeId(row[0].parse().map_err(|_| Error::Validation(format!("bad node id {:?}", &row[0])))?);
        let alive = parse_intervals(&row[2], false)?;
        let community = parse_intervals(&row[3], true)?;
        let covered: usize = alive.iter().map(|(a, b, _)| b - a).sum();
        let labelled: usize = community.iter().map(|(a, b, _)| b - a).sum();
        if covered != labelled {
            return Err(Error::Validation(format!("node {id}: community intervals do not cover its lifetime")));
        }
        for (a, b, label) in community {
            grow(&mut steps, b);
            for s in &mut steps[a..b] {
                s.nodes.insert(id, label);
            }
        }
    }
    let mut r = csv::Reader::from_reader(edges.as_bytes());
    for row in r.records() {
        let row = row.map_err(csv_error)?;
        let parse = |s: &str| s.parse::<u64>().map(NodeId).map_err(|_| Error::Validation(format!("bad node id {s:?}")));
        let (a, b) = (parse(&row[0])?, parse(&row[1])?);
        for (s, e, _) in parse_intervals(&row[3], false)? {
            grow(&mut steps, e);
            for v in &mut steps[s..e] {
                v.links.push((a, b));
            }
        }
    }
    for s in &mut steps {
        s.links.sort_unstable();
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub t: usize,
    pub nodes: usize,
    pub links: usize,
    pub intra_links: usize,
    pub communities: usize,
    /// Persistent label of each community.
    pub labels: Vec<u64>,
    pub sizes: Vec<usize>,
    pub assortativity: Metric,
    pub modularity: f64,
    /// Links broken by wiring repairs.
    pub repairs: usize,
    /// `(community, components)` for communities whose intra subgraph is
    /// disconnected.
    pub disconnected: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub from: usize,
    pub to: usize,
    /// Nodes alive at `from` that are still alive at `to`.
    pub survivors: usize,
    pub explicit_kills: usize,
    pub random_kills: usize,
    pub births: usize,
    /// Row names of `flow`: community labels, then `birth` if present.
    pub rows: Vec<String>,
    /// Column names of `flow`: community labels, then `death` if present.
    pub cols: Vec<String>,
    pub flow: FlowMatrix,
    pub vi: f64,
    pub seed_vi: f64,
    pub seed_heuristic: Heuristic,
    pub search_moves: usize,
    pub events: Vec<EventRecord>,
    pub temporal_correlation: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub timesteps: usize,
    pub config: serde_json::Value,
    pub snapshots: Vec<SnapshotSummary>,
    pub boundaries: Vec<BoundaryReport>,
}

impl RunReport {
    pub fn temporal_correlation_series(&self) -> Vec<f64> {
        self.boundaries.iter().map(|b| b.temporal_correlation.value).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Validation(format!("report serialization: {e}")))
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "Temporal network report");
        let _ = writeln!(o, "seed: {}", self.seed);
        let _ = writeln!(o, "timesteps: {}", self.timesteps);
        for s in &self.snapshots {
            let _ = writeln!(o, "\nSnapshot {}", s.t);
            let _ = writeln!(
                o,
                "  nodes: {}  links: {} ({} intra)  communities: {}",
                s.nodes, s.links, s.intra_links, s.communities
            );
            let _ = writeln!(o, "  degree assortativity: {}", fmt_metric(&s.assortativity));
            let _ = writeln!(o, "  ground-truth modularity: {:.6}", s.modularity);
            let _ = writeln!(o, "  wiring repairs: {}", s.repairs);
            for (c, parts) in &s.disconnected {
                let _ = writeln!(o, "  warning: community c{} has {parts} components", s.labels[*c]);
            }
        }
        for b in &self.boundaries {
            self.boundary_text(&mut o, b);
        }
        if !self.boundaries.is_empty() {
            let series: Vec<String> = self.temporal_correlation_series().iter().map(|v| format!("{v:.6}")).collect();
            let mean = self.temporal_correlation_series().iter().sum::<f64>() / self.boundaries.len() as f64;
            let _ = writeln!(o, "\nTemporal degree correlation series: {}", series.join(" "));
            let _ = writeln!(o, "Mean temporal degree correlation: {mean:.6}");
        }
        o
    }

    fn boundary_text(&self, o: &mut String, b: &BoundaryReport) {
        let _ = writeln!(o, "\nBoundary {} -> {}", b.from, b.to);
        let _ = writeln!(
            o,
            "  survivors: {}  explicit kills: {}  random kills: {}  births: {}",
            b.survivors, b.explicit_kills, b.random_kills, b.births
        );
        let _ = writeln!(
            o,
            "  variation of information: {:.6} (seed {:.6} from {}, {} search moves)",
            b.vi, b.seed_vi, b.seed_heuristic, b.search_moves
        );
        let _ = writeln!(o, "  temporal degree correlation: {}", fmt_metric(&b.temporal_correlation));
        let _ = writeln!(o, "  node flow:");
        let width = b
            .rows
            .iter()
            .chain(&b.cols)
            .map(String::len)
            .chain(b.flow.cells().iter().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1);
        let mut header = format!("    {:>width$}", "");
        for c in &b.cols {
            let _ = write!(header, " {c:>width$}");
        }
        let _ = writeln!(o, "{header}");
        for (i, r) in b.rows.iter().enumerate() {
            let mut line = format!("    {r:>width$}");
            for v in b.flow.row(i) {
                let _ = write!(line, " {v:>width$}");
            }
            let _ = writeln!(o, "{line}");
        }
        let from = &self.snapshots[b.from].labels;
        let to = &self.snapshots[b.to].labels;
        for (side, title, own, other) in [
            (Side::EndOfT, format!("Event @ end of time {}", b.from), from, to),
            (Side::StartOfT1, format!("Event @ beginning of time {}", b.to), to, from),
        ] {
            let _ = writeln!(o, "  {title}");
            for e in b.events.iter().filter(|e| e.side == side) {
                let names: Vec<String> = e.counterparts.iter().map(|&c| format!("c{}", other[c])).collect();
                let line = format!("    c{:<8} {} {}", own[e.community], e.kind, names.join(", "));
                let _ = writeln!(o, "{}", line.trim_end());
            }
        }
    }
}

fn fmt_metric(m: &Metric) -> String {
    if m.degenerate {
        "0 (undefined: zero variance)".into()
    } else {
        format!("{:.6}", m.value)
    }
}

/// Writes `report.txt` and `report.json` into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    write_file(&dir.join(REPORT_TEXT_FILE), &report.to_text())?;
    write_file(&dir.join(REPORT_JSON_FILE), &(report.to_json()? + "\n"))
}

/// Per-run output directory `seed-<seed>-<unix seconds>` under `root`,
/// created on demand.
pub fn create_run_dir(root: &Path, seed: u64) -> Result<PathBuf> {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut dir = root.join(format!("seed-{seed}-{secs}"));
    let mut n = 1;
    while dir.exists() {
        dir = root.join(format!("seed-{seed}-{secs}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::Node;

    fn node(id: u64, total: u32, intra: u32, community: usize, t: usize) -> Node {
        Node {
            id: NodeId(id),
            total,
            intra,
            community,
            born_at: t,
            died_at: None,
        }
    }

    fn two_steps() -> Vec<Snapshot> {
        let s0 = Snapshot {
            t: 0,
            nodes: vec![node(0, 1, 1, 0, 0), node(1, 2, 1, 0, 0), node(2, 1, 0, 1, 0)],
            links: vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))],
            communities: vec![vec![NodeId(0), NodeId(1)], vec![NodeId(2)]],
            labels: vec![0, 1],
        };
        let s1 = Snapshot {
            t: 1,
            nodes: vec![node(1, 1, 1, 0, 0), node(2, 1, 1, 0, 0)],
            links: vec![(NodeId(1), NodeId(2))],
            communities: vec![vec![NodeId(1), NodeId(2)]],
            labels: vec![0],
        };
        s0.verify().unwrap();
        s1.verify().unwrap();
        vec![s0, s1]
    }

    #[test]
    fn golden_two_step_export() {
        let s = two_steps();
        let nodes = nodes_csv(&s).unwrap();
        let edges = edges_csv(&s).unwrap();
        assert_eq!(
            nodes,
            "Id,Label,Timeset,Community\n\
             0,0,\"<[0,1)>\",\"<[0,1,0)>\"\n\
             1,1,\"<[0,2)>\",\"<[0,2,0)>\"\n\
             2,2,\"<[0,2)>\",\"<[0,1,1);[1,2,0)>\"\n"
        );
        assert_eq!(
            edges,
            "Source,Target,Type,Timeset\n\
             0,1,Undirected,\"<[0,1)>\"\n\
             1,2,Undirected,\"<[0,2)>\"\n"
        );
    }

    #[test]
    fn empty_network_has_headers_only() {
        assert_eq!(nodes_csv(&[]).unwrap(), "Id,Label,Timeset,Community\n");
        assert_eq!(edges_csv(&[]).unwrap(), "Source,Target,Type,Timeset\n");
    }

    #[test]
    fn round_trip() {
        let s = two_steps();
        let view = parse_temporal_csv(&nodes_csv(&s).unwrap(), &edges_csv(&s).unwrap()).unwrap();
        assert_eq!(view.len(), 2);
        for (v, snap) in view.iter().zip(&s) {
            assert_eq!(v.links, snap.links);
            let labels: BTreeMap<NodeId, u64> = snap.nodes.iter().map(|n| (n.id, snap.labels[n.community])).collect();
            assert_eq!(v.nodes, labels);
        }
    }

    #[test]
    fn gaps_make_separate_intervals() {
        assert_eq!(runs(&[0, 1, 3, 4, 6]), vec![(0, 2), (3, 5), (6, 7)]);
        assert_eq!(format_intervals(&runs(&[0, 1, 3])), "<[0,2);[3,4)>");
        assert_eq!(parse_intervals("<[0,2);[3,4)>", false).unwrap(), vec![(0, 2, 0), (3, 4, 0)]);
        assert!(parse_intervals("<[2,2)>", false).is_err());
        assert!(parse_intervals("[0,1)", false).is_err());
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        export_temporal_csv(&two_steps(), dir.path()).unwrap();
        assert!(dir.path().join(NODES_FILE).exists());
        let err = export_temporal_csv(&two_steps(), &dir.path().join("missing"));
        assert!(matches!(err, Err(Error::Io { .. })));
        let run = create_run_dir(dir.path(), 7).unwrap();
        assert!(run.file_name().unwrap().to_str().unwrap().starts_with("seed-7-"));
        let again = create_run_dir(dir.path(), 7).unwrap();
        assert_ne!(run, again);
    }
}
