//! Run configuration and the timestep loop.
//!
//! Each step acquires its sequences, passes the graphability gate, places
//! nodes into communities and wires a snapshot. Between steps, kills are
//! applied, the populations are balanced with birth and death adjustment
//! communities, the lowest-VI node flow is searched, and surviving nodes
//! are moved along it before drawing their new degrees.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::assembler::{
    assign_initial, assign_tuples, build_snapshot, check_connectivity, repair_intra_parity, Assignment, Node,
    NodeId, ShapeParams, Snapshot, WiringConfig,
};
use crate::error::{Error, Result};
use crate::graphability::{check_graphable, GraphabilityReport};
use crate::io::{self, BoundaryReport, RunReport, SnapshotSummary};
use crate::lifecycle::{classify_events, inherit_labels, LifecycleConfig};
use crate::metrics::{assortativity_coefficient, modularity, temporal_degree_correlation};
use crate::sequences::{
    fix_parity, parse_sequence_file, partition_nodes, sample_degrees, sample_sizes, split_degrees, CommunitySpec,
    DegreeSpec, SamplerConfig, StepSequences,
};
use crate::transition::{
    best_seed, materialize_flow, seed_pool, taboo_search, FlowMatrix, FlowSystem, KernelBasis, SearchConfig,
};
use crate::{seeded_rng, Rng};

/// Sequences of one timestep drawn from samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    /// Node count; community sizes are drawn until they cover it.
    #[serde(default)]
    pub nodes: Option<usize>,
    /// Community count, used when `nodes` is absent; the node count is then
    /// the sum of the drawn sizes.
    #[serde(default)]
    pub communities: Option<usize>,
    pub sizes: SamplerConfig,
    /// Total degree sampler; its mix settings split degrees into intra and
    /// inter parts.
    pub degrees: SamplerConfig,
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.nodes, self.communities) {
            (Some(0), _) | (None, Some(0)) => return Err(Error::Config("step node and community counts must be positive".into())),
            (None, None) => return Err(Error::Config("a step needs `nodes` or `communities`".into())),
            _ => {}
        }
        self.sizes.validate()?;
        self.degrees.validate()
    }
}

/// Nodes removed at the boundary after step `at`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillSpec {
    pub at: usize,
    /// Explicit node ids.
    #[serde(default)]
    pub ids: Vec<u64>,
    /// Additional nodes drawn uniformly among the remaining ones.
    #[serde(default)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureMode {
    /// Stop at the first non-graphable step.
    #[default]
    Batch,
    /// Draw fresh sequences, up to `retries` times.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WiringSection {
    /// Beta shape of the partner draw.
    pub alpha: f64,
    pub beta: f64,
    pub repair_factor: usize,
}

impl Default for WiringSection {
    fn default() -> Self {
        WiringSection {
            alpha: 1.0,
            beta: 1.0,
            repair_factor: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    #[serde(flatten)]
    pub search: SearchConfig,
    /// Keep the best seed flow and skip the taboo search.
    pub skip: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            search: SearchConfig::default(),
            skip: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Defaults to the number of blocks of `sequence_file` when that is set.
    #[serde(default)]
    pub timesteps: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Template used for every step not covered by `steps`.
    #[serde(default)]
    pub step: Option<StepConfig>,
    /// Explicit per-step configurations; a list shorter than the run repeats
    /// its last entry.
    #[serde(default)]
    pub steps: Vec<StepConfig>,
    /// Plain-text sequence file replacing the samplers.
    #[serde(default)]
    pub sequence_file: Option<PathBuf>,
    #[serde(default)]
    pub kills: Vec<KillSpec>,
    #[serde(default)]
    pub wiring: WiringSection,
    /// Beta shape of the temporal degree draw.
    #[serde(default)]
    pub temporal: ShapeParams,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub lifecycle: LifecycleConfig,
    #[serde(default)]
    pub mode: FailureMode,
    /// Sequence redraws in resample mode, and assignment attempts per step.
    #[serde(default = "default_retries")]
    pub retries: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn default_retries() -> usize {
    10
}

impl RunConfig {
    /// A config with a single step template and defaults elsewhere.
    pub fn new(seed: u64, timesteps: usize, step: StepConfig) -> Self {
        RunConfig {
            seed,
            timesteps: Some(timesteps),
            output_dir: default_output_dir(),
            step: Some(step),
            steps: Vec::new(),
            sequence_file: None,
            kills: Vec::new(),
            wiring: WiringSection::default(),
            temporal: ShapeParams::UNIFORM,
            search: SearchSection::default(),
            lifecycle: LifecycleConfig::default(),
            mode: FailureMode::Batch,
            retries: default_retries(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config. A relative `sequence_file` is resolved against
    /// the config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_toml_str(&text)?;
        if let (Some(f), Some(dir)) = (&cfg.sequence_file, path.parent()) {
            if f.is_relative() {
                cfg.sequence_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timesteps == Some(0) {
            return Err(Error::Config("timesteps must be at least 1".into()));
        }
        if self.sequence_file.is_none() {
            if self.step.is_none() && self.steps.is_empty() {
                return Err(Error::Config("no step configuration and no sequence file".into()));
            }
            if self.timesteps.is_none() {
                return Err(Error::Config("timesteps is required without a sequence file".into()));
            }
        }
        for s in self.step.iter().chain(&self.steps) {
            s.validate()?;
        }
        ShapeParams::new(self.wiring.alpha, self.wiring.beta)?;
        if self.wiring.repair_factor == 0 {
            return Err(Error::Config("repair_factor must be positive".into()));
        }
        self.temporal.validate()?;
        self.search.search.validate()?;
        self.lifecycle.validate()?;
        if self.retries == 0 {
            return Err(Error::Config("retries must be at least 1".into()));
        }
        Ok(())
    }

    fn step_config(&self, t: usize) -> &StepConfig {
        if t < self.steps.len() {
            &self.steps[t]
        } else if let Some(s) = &self.step {
            s
        } else {
            self.steps.last().expect("validated")
        }
    }
}

/// Birth and death accounting for one boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub survivors: usize,
    pub explicit_kills: usize,
    /// Kills beyond the explicit set, needed when the next step is smaller.
    pub random_kills: usize,
    pub births: usize,
}

impl TransitionPlan {
    pub fn deaths(&self) -> usize {
        self.explicit_kills + self.random_kills
    }
}

/// Balances populations across a boundary: with `n_t` nodes now, `kills`
/// of them removed explicitly and `n_t1` nodes next, the shortfall is
/// covered by births and the excess by random kills.
pub fn plan_transition(n_t: usize, n_t1: usize, kills: usize) -> Result<TransitionPlan> {
    if kills > n_t {
        return Err(Error::Validation(format!("{kills} kills requested from {n_t} nodes")));
    }
    let left = n_t - kills;
    let random_kills = left.saturating_sub(n_t1);
    let births = n_t1.saturating_sub(left);
    Ok(TransitionPlan {
        survivors: left - random_kills,
        explicit_kills: kills,
        random_kills,
        births,
    })
}

/// All snapshots of a run and its report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub report: RunReport,
}

impl RunOutput {
    /// Writes CSV exports and reports into a fresh per-run directory under
    /// `root` and returns it.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let dir = io::create_run_dir(root, self.report.seed)?;
        io::export_temporal_csv(&self.snapshots, &dir)?;
        io::write_report(&self.report, &dir)?;
        Ok(dir)
    }
}

/// State carried from a step to the next.
struct Carry<'a> {
    prev: &'a Snapshot,
    kills: Vec<NodeId>,
}

/// Result of the boundary part of a step.
struct Moved {
    community_of: Vec<usize>,
    ids: Vec<NodeId>,
    previous_total: Vec<Option<u32>>,
    born_at: Vec<usize>,
    died: Vec<NodeId>,
    flow: FlowMatrix,
    plan: TransitionPlan,
    seed_vi: f64,
    vi: f64,
    seed_heuristic: crate::transition::Heuristic,
    moves: usize,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let file_steps = load_sequence_file(cfg)?;
    let timesteps = resolve_timesteps(cfg, file_steps.as_deref())?;
    for k in &cfg.kills {
        if k.at + 1 >= timesteps {
            return Err(Error::Config(format!("kill set at step {} has no following step", k.at)));
        }
    }

    let wiring = WiringConfig {
        shape: ShapeParams::new(cfg.wiring.alpha, cfg.wiring.beta)?,
        repair_factor: cfg.wiring.repair_factor,
    };
    let mut master = seeded_rng(cfg.seed);
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut summaries = Vec::new();
    let mut boundaries = Vec::new();
    let mut next_id = 0u64;
    let mut next_label = 0u64;

    for t in 0..timesteps {
        let mut rng = seeded_rng(master.next_u64());
        let attempts = match (cfg.mode, &file_steps) {
            (FailureMode::Resample, None) => cfg.retries,
            _ => 1,
        };
        let mut last_report = None;
        let mut built = None;
        'attempt: for _ in 0..attempts {
            let (sizes, spec) = match &file_steps {
                Some(f) => (f[t].sizes.clone(), f[t].degrees.clone()),
                None => draw_sequences(cfg.step_config(t), &mut rng)?,
            };
            let gate = check_graphable(&sizes, &spec, None)?;
            if !gate.ok {
                last_report = Some(gate);
                continue;
            }
            let carry = match snapshots.last() {
                Some(prev) => Some(Carry {
                    prev,
                    kills: pick_kills(cfg, t - 1, prev, &mut rng)?,
                }),
                None => None,
            };
            let moved = match &carry {
                Some(c) => Some(move_nodes(cfg, c, &sizes, &mut next_id, &mut rng)?),
                None => None,
            };
            for _ in 0..cfg.retries {
                let assignment = match &moved {
                    None => assign_initial(&sizes, &spec, &mut rng),
                    Some(m) => assign_tuples(&m.community_of, &m.previous_total, &sizes, &spec, cfg.temporal, &mut rng),
                };
                let mut assignment = match assignment {
                    Ok(a) => a,
                    Err(Error::Graphability { report, .. }) => {
                        last_report = Some(report);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                match repair_intra_parity(&mut assignment, sizes.sizes(), &mut rng) {
                    Ok(_) => {}
                    Err(Error::Graphability { report, .. }) => {
                        last_report = Some(report);
                        continue;
                    }
                    Err(e) => return Err(e),
                }
                let membership = assignment.membership();
                let report = check_graphable(&sizes, &assignment.degree_spec()?, Some(&membership))?;
                if report.ok {
                    built = Some((sizes, assignment, moved));
                    break 'attempt;
                }
                last_report = Some(report);
            }
        }
        let Some((sizes, assignment, moved)) = built else {
            return Err(Error::Graphability {
                step: t,
                report: last_report.unwrap_or_else(|| GraphabilityReport::fail(crate::Condition::AssignmentInfeasible, None)),
            });
        };
        if t == 0 {
            next_id = assignment.placements.len() as u64;
        }

        let k = sizes.len();
        let nodes = build_nodes(&assignment, moved.as_ref(), t);
        let labels = match (&moved, snapshots.last()) {
            (Some(m), Some(prev)) => {
                let real = real_contingency(&m.flow, prev.communities.len(), k);
                inherit_labels(
                    &real,
                    &community_sizes(prev),
                    &widen(sizes.sizes()),
                    &prev.labels,
                    cfg.lifecycle.continuation_threshold,
                    &mut next_label,
                )
            }
            _ => {
                next_label = k as u64;
                (0..k as u64).collect()
            }
        };
        let (snapshot, stats) = build_snapshot(t, nodes, k, labels, &wiring, &mut rng)?;

        if let (Some(m), Some(prev)) = (&moved, snapshots.last_mut()) {
            for n in &mut prev.nodes {
                if m.died.binary_search(&n.id).is_ok() {
                    n.died_at = Some(t - 1);
                }
            }
            let prev: &Snapshot = prev;
            let real = real_contingency(&m.flow, prev.communities.len(), k);
            let events = classify_events(&real, &community_sizes(prev), &widen(sizes.sizes()), &cfg.lifecycle)?;
            boundaries.push(BoundaryReport {
                from: t - 1,
                to: t,
                survivors: m.plan.survivors,
                explicit_kills: m.plan.explicit_kills,
                random_kills: m.plan.random_kills,
                births: m.plan.births,
                rows: axis_names(&prev.labels, m.plan.births > 0, "birth"),
                cols: axis_names(&snapshot.labels, m.plan.random_kills > 0, "death"),
                flow: m.flow.clone(),
                vi: m.vi,
                seed_vi: m.seed_vi,
                seed_heuristic: m.seed_heuristic,
                search_moves: m.moves,
                events,
                temporal_correlation: temporal_degree_correlation(prev, &snapshot),
            });
        }
        summaries.push(summarize(&snapshot, stats.repairs));
        snapshots.push(snapshot);
    }

    let report = RunReport {
        seed: cfg.seed,
        timesteps,
        config: serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?,
        snapshots: summaries,
        boundaries,
    };
    Ok(RunOutput { snapshots, report })
}

/// Sequences of one step with their graphability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCheck {
    pub t: usize,
    pub nodes: usize,
    pub communities: usize,
    pub report: GraphabilityReport,
}

/// Draws each step's sequences as [`run`] does on its first attempt and
/// runs the graphability gate on them, without assembling anything.
pub fn check(cfg: &RunConfig) -> Result<Vec<StepCheck>> {
    cfg.validate()?;
    let file_steps = load_sequence_file(cfg)?;
    let timesteps = resolve_timesteps(cfg, file_steps.as_deref())?;
    let mut master = seeded_rng(cfg.seed);
    let mut out = Vec::with_capacity(timesteps);
    for t in 0..timesteps {
        let mut rng = seeded_rng(master.next_u64());
        let (sizes, spec) = match &file_steps {
            Some(f) => (f[t].sizes.clone(), f[t].degrees.clone()),
            None => draw_sequences(cfg.step_config(t), &mut rng)?,
        };
        out.push(StepCheck {
            t,
            nodes: sizes.node_count(),
            communities: sizes.len(),
            report: check_graphable(&sizes, &spec, None)?,
        });
    }
    Ok(out)
}

fn load_sequence_file(cfg: &RunConfig) -> Result<Option<Vec<StepSequences>>> {
    match &cfg.sequence_file {
        Some(p) => Ok(Some(parse_sequence_file(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?)),
        None => Ok(None),
    }
}

fn resolve_timesteps(cfg: &RunConfig, file_steps: Option<&[StepSequences]>) -> Result<usize> {
    match (file_steps, cfg.timesteps) {
        (Some(f), None) => Ok(f.len()),
        (Some(f), Some(t)) if t > f.len() => Err(Error::Config(format!(
            "{t} timesteps requested but the sequence file has {} blocks",
            f.len()
        ))),
        (_, Some(t)) => Ok(t),
        (None, None) => Err(Error::Config("timesteps is required without a sequence file".into())),
    }
}

/// Runs and writes outputs under `cfg.output_dir`.
pub fn run_and_write(cfg: &RunConfig) -> Result<(RunOutput, PathBuf)> {
    let out = run(cfg)?;
    let dir = out.write(&cfg.output_dir)?;
    Ok((out, dir))
}

fn draw_sequences(sc: &StepConfig, rng: &mut Rng) -> Result<(CommunitySpec, DegreeSpec)> {
    let sizes = match sc.nodes {
        Some(n) => partition_nodes(&sc.sizes, n, rng)?,
        None => sample_sizes(&sc.sizes, sc.communities.expect("validated"), rng)?,
    };
    let total = sample_degrees(&sc.degrees, sizes.node_count(), rng)?;
    let draft = split_degrees(&total, sc.degrees.mix_ratio, sc.degrees.mix_mode, sc.degrees.rounding, rng);
    let spec = fix_parity(draft, (sc.degrees.min, sc.degrees.max), rng)?;
    Ok((sizes, spec))
}

fn pick_kills(cfg: &RunConfig, at: usize, prev: &Snapshot, rng: &mut Rng) -> Result<Vec<NodeId>> {
    let mut kills: Vec<NodeId> = Vec::new();
    let mut count = 0usize;
    for k in cfg.kills.iter().filter(|k| k.at == at) {
        for &id in &k.ids {
            let id = NodeId(id);
            if prev.index_of(id).is_none() {
                return Err(Error::Validation(format!("kill set at step {at} names node {id}, which is not alive")));
            }
            kills.push(id);
        }
        count += k.count;
    }
    kills.sort_unstable();
    kills.dedup();
    if kills.len() + count > prev.node_count() {
        return Err(Error::Validation(format!(
            "{} kills requested at step {at} from {} nodes",
            kills.len() + count,
            prev.node_count()
        )));
    }
    let rest: Vec<NodeId> = prev.nodes.iter().map(|n| n.id).filter(|id| kills.binary_search(id).is_err()).collect();
    kills.extend(rest.choose_multiple(rng, count).copied());
    kills.sort_unstable();
    Ok(kills)
}

fn move_nodes(cfg: &RunConfig, carry: &Carry<'_>, sizes: &CommunitySpec, next_id: &mut u64, rng: &mut Rng) -> Result<Moved> {
    let prev = carry.prev;
    let plan = plan_transition(prev.node_count(), sizes.node_count(), carry.kills.len())?;
    let mut rows: Vec<Vec<NodeId>> = prev
        .communities
        .iter()
        .map(|c| c.iter().copied().filter(|id| carry.kills.binary_search(id).is_err()).collect())
        .collect();
    let mut row_sizes: Vec<u64> = rows.iter().map(|r| r.len() as u64).collect();
    let birth_row = (plan.births > 0).then(|| {
        rows.push(Vec::new());
        row_sizes.push(plan.births as u64);
        rows.len() - 1
    });
    let mut col_sizes = widen(sizes.sizes());
    if plan.random_kills > 0 {
        col_sizes.push(plan.random_kills as u64);
    }
    let sys = FlowSystem::new(row_sizes, col_sizes)?;
    let pool = seed_pool(&sys);
    let seed = best_seed(&pool);
    let (flow, vi, moves) = if cfg.search.skip {
        (seed.flow.clone(), seed.vi, 0)
    } else {
        let out = taboo_search(&sys, &seed.flow, &KernelBasis::for_system(&sys), &cfg.search.search);
        (out.flow, out.vi, out.moves)
    };
    let targets = materialize_flow(&flow, &rows, birth_row, next_id, rng)?;

    let k1 = sizes.len();
    let mut placed: Vec<(NodeId, usize)> = targets[..k1]
        .iter()
        .enumerate()
        .flat_map(|(j, ids)| ids.iter().map(move |&id| (id, j)))
        .collect();
    placed.sort_unstable();
    let mut died: Vec<NodeId> = carry.kills.clone();
    if plan.random_kills > 0 {
        died.extend_from_slice(&targets[k1]);
    }
    died.sort_unstable();
    let t1 = prev.t + 1;
    let mut previous_total = Vec::with_capacity(placed.len());
    let mut born_at = Vec::with_capacity(placed.len());
    for &(id, _) in &placed {
        match prev.index_of(id) {
            Some(i) => {
                previous_total.push(Some(prev.nodes[i].total));
                born_at.push(prev.nodes[i].born_at);
            }
            None => {
                previous_total.push(None);
                born_at.push(t1);
            }
        }
    }
    Ok(Moved {
        community_of: placed.iter().map(|p| p.1).collect(),
        ids: placed.iter().map(|p| p.0).collect(),
        previous_total,
        born_at,
        died,
        flow,
        plan,
        seed_vi: seed.vi,
        vi,
        seed_heuristic: seed.heuristic,
        moves,
    })
}

fn build_nodes(assignment: &Assignment, moved: Option<&Moved>, t: usize) -> Vec<Node> {
    assignment
        .placements
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (id, born_at) = match moved {
                Some(m) => (m.ids[i], m.born_at[i]),
                None => (NodeId(i as u64), t),
            };
            Node {
                id,
                total: p.tuple.total,
                intra: p.tuple.intra,
                community: p.community,
                born_at,
                died_at: None,
            }
        })
        .collect()
}

/// The flow restricted to real communities on both sides.
fn real_contingency(flow: &FlowMatrix, k: usize, l: usize) -> FlowMatrix {
    let rows = (0..k).map(|i| flow.row(i)[..l].to_vec()).collect();
    FlowMatrix::from_rows(rows).expect("non-empty real communities")
}

fn community_sizes(s: &Snapshot) -> Vec<u64> {
    s.communities.iter().map(|c| c.len() as u64).collect()
}

fn widen(v: &[u32]) -> Vec<u64> {
    v.iter().map(|&x| u64::from(x)).collect()
}

fn axis_names(labels: &[u64], extra: bool, name: &str) -> Vec<String> {
    let mut v: Vec<String> = labels.iter().map(|l| format!("c{l}")).collect();
    if extra {
        v.push(name.to_string());
    }
    v
}

fn summarize(s: &Snapshot, repairs: usize) -> SnapshotSummary {
    let intra_links = s
        .links
        .iter()
        .filter(|(a, b)| {
            s.nodes[s.index_of(*a).expect("endpoint")].community == s.nodes[s.index_of(*b).expect("endpoint")].community
        })
        .count();
    let disconnected = (0..s.communities.len())
        .map(|c| (c, check_connectivity(s, c)))
        .filter(|&(_, parts)| parts > 1)
        .collect();
    SnapshotSummary {
        t: s.t,
        nodes: s.node_count(),
        links: s.link_count(),
        intra_links,
        communities: s.communities.len(),
        labels: s.labels.clone(),
        sizes: s.communities.iter().map(Vec::len).collect(),
        assortativity: assortativity_coefficient(s),
        modularity: modularity(s),
        repairs,
        disconnected,
    }
}
