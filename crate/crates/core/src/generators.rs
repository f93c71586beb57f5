//! Seeded synthetic dynamic graphs with planted change points and events.
//!
//! Every `(view, time step)` draws from its own ChaCha8 stream (stream id =
//! view, word offset = `t << 32`), so a view's snapshots do not depend on
//! how many other views are generated or in which order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{DynamicGraph, GraphSnapshot};

/// Number of steps in every benchmark schedule.
pub const BENCHMARK_STEPS: usize = 151;
/// Time points at which the benchmark schedules change.
pub const BENCHMARK_ANOMALIES: [usize; 7] = [16, 31, 61, 76, 91, 106, 136];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Start,
    ChangePoint,
    Event,
    /// Return to the pre-event model the step after an event.
    Resume,
}

impl SegmentKind {
    pub fn is_anomaly(self) -> bool {
        matches!(self, SegmentKind::ChangePoint | SegmentKind::Event)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Start => "start",
            SegmentKind::ChangePoint => "change_point",
            SegmentKind::Event => "event",
            SegmentKind::Resume => "resume",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "start" => Some(SegmentKind::Start),
            "change_point" | "change" => Some(SegmentKind::ChangePoint),
            "event" => Some(SegmentKind::Event),
            "resume" => Some(SegmentKind::Resume),
            _ => None,
        }
    }
}

/// Generative model active during a segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphModel {
    /// Equal-sized blocks with within/cross edge probabilities.
    Sbm { blocks: usize, p_in: f64, p_ex: f64 },
    /// Preferential attachment with `m_attach` edges per arriving node.
    Ba { m_attach: usize },
}

impl GraphModel {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            GraphModel::Sbm { blocks, p_in, p_ex } => {
                if blocks == 0 || blocks > n.max(1) {
                    return Err(invalid(format!("{blocks} blocks for {n} nodes")));
                }
                if !(0.0..=1.0).contains(&p_ex) || !(0.0..=1.0).contains(&p_in) || p_ex > p_in {
                    return Err(invalid(format!(
                        "SBM probabilities must satisfy 0 <= p_ex <= p_in <= 1 (got p_in={p_in}, p_ex={p_ex})"
                    )));
                }
            }
            GraphModel::Ba { m_attach } => {
                if m_attach == 0 || m_attach >= n {
                    return Err(invalid(format!(
                        "BA needs 1 <= m_attach < n (got m_attach={m_attach}, n={n})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<GraphSnapshot> {
        match *self {
            GraphModel::Sbm { blocks, p_in, p_ex } => {
                Ok(sbm_snapshot(&block_sizes(n, blocks), p_in, p_ex, rng))
            }
            GraphModel::Ba { m_attach } => ba_snapshot(n, m_attach, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub model: GraphModel,
    pub length: usize,
}

/// One row of a schedule table: from `time` on, `model` is active. Event
/// rows last one step and then fall back to the last non-event model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleRow {
    pub time: usize,
    pub kind: SegmentKind,
    pub model: GraphModel,
}

/// Ordered segments covering `0..T`, with the planted anomalies.
#[derive(Clone, Debug, PartialEq)]
pub struct AnomalySchedule {
    segments: Vec<Segment>,
}

impl AnomalySchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| invalid("empty schedule"))?;
        if first.kind.is_anomaly() {
            return Err(invalid("time step 0 cannot be an anomaly"));
        }
        for s in &segments {
            if s.length == 0 {
                return Err(invalid("segments must be at least one step long"));
            }
            if s.kind == SegmentKind::Event && s.length != 1 {
                return Err(invalid("event segments last exactly one step"));
            }
        }
        Ok(Self { segments })
    }

    /// Expands table rows into segments; see [`ScheduleRow`].
    pub fn from_rows(rows: &[ScheduleRow], total_steps: usize) -> Result<Self> {
        if rows.is_empty() || rows[0].time != 0 {
            return Err(invalid("schedule must start with a row at time 0"));
        }
        if rows.windows(2).any(|w| w[0].time >= w[1].time) {
            return Err(invalid("schedule rows must have increasing times"));
        }
        let last = rows.last().expect("non-empty").time;
        if last >= total_steps {
            return Err(invalid(format!(
                "row at time {last} is beyond the {total_steps}-step horizon"
            )));
        }
        let mut segments = Vec::new();
        let mut base = rows[0].model;
        for (i, row) in rows.iter().enumerate() {
            let end = rows.get(i + 1).map_or(total_steps, |r| r.time);
            let span = end - row.time;
            match row.kind {
                SegmentKind::Event => {
                    segments.push(Segment {
                        kind: SegmentKind::Event,
                        model: row.model,
                        length: 1,
                    });
                    if span > 1 {
                        segments.push(Segment {
                            kind: SegmentKind::Resume,
                            model: base,
                            length: span - 1,
                        });
                    }
                }
                kind => {
                    base = row.model;
                    segments.push(Segment {
                        kind,
                        model: row.model,
                        length: span,
                    });
                }
            }
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_steps(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Planted anomalies as `(t, kind)`, in time order.
    pub fn ground_truth(&self) -> Vec<(usize, SegmentKind)> {
        let mut t = 0;
        let mut out = Vec::new();
        for s in &self.segments {
            if s.kind.is_anomaly() {
                out.push((t, s.kind));
            }
            t += s.length;
        }
        out
    }

    pub fn anomaly_steps(&self) -> Vec<usize> {
        self.ground_truth().into_iter().map(|(t, _)| t).collect()
    }

    /// Model and the kind of the segment containing each step, plus whether
    /// the step opens its segment.
    fn steps(&self) -> Vec<(GraphModel, SegmentKind, bool)> {
        let mut out = Vec::with_capacity(self.total_steps());
        for s in &self.segments {
            for i in 0..s.length {
                out.push((s.model, s.kind, i == 0));
            }
        }
        out
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.segments.iter().try_for_each(|s| s.model.validate(n))
    }
}

/// Sampling parameters shared by all views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    #[serde(default = "default_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_views")]
    pub n_views: usize,
    /// Probability that a node pair keeps its previous state inside a
    /// segment. Change points and events always resample.
    #[serde(default)]
    pub continuity: f64,
    /// Per-pair flip probability applied on top of every snapshot.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_nodes() -> usize {
    500
}

fn default_views() -> usize {
    1
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_nodes: default_nodes(),
            n_views: default_views(),
            continuity: 0.0,
            noise: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.n_views == 0 {
            return Err(invalid("need at least one node and one view"));
        }
        for (name, p) in [("continuity", self.continuity), ("noise", self.noise)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Equal block sizes; the remainder goes one node each to the first blocks.
pub fn block_sizes(n: usize, blocks: usize) -> Vec<usize> {
    let base = n / blocks;
    let extra = n % blocks;
    (0..blocks).map(|b| base + usize::from(b < extra)).collect()
}

/// RNG for one `(view, step)` cell of a run seeded with `seed`.
pub fn step_rng(seed: u64, view: usize, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(view as u64);
    rng.set_word_pos((t as u128) << 32);
    rng
}

/// Unit-weight stochastic block model sample. Pairs are visited in
/// lexicographic order, one uniform draw each.
pub fn sbm_snapshot(sizes: &[usize], p_in: f64, p_ex: f64, rng: &mut impl Rng) -> GraphSnapshot {
    let n: usize = sizes.iter().sum();
    let block: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block[i] == block[j] { p_in } else { p_ex };
            if rng.gen::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    GraphSnapshot::from_sorted_pairs(n, pairs)
}

/// Walks all `i < j` pairs in order alongside two sorted edge lists.
fn merge_pairs<F>(n: usize, a: &[(usize, usize, f64)], b: &[(usize, usize, f64)], mut f: F)
where
    F: FnMut(usize, usize, Option<f64>, Option<f64>),
{
    let (mut ia, mut ib) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            let wa = match a.get(ia) {
                Some(&(x, y, w)) if x == i && y == j => {
                    ia += 1;
                    Some(w)
                }
                _ => None,
            };
            let wb = match b.get(ib) {
                Some(&(x, y, w)) if x == i && y == j => {
                    ib += 1;
                    Some(w)
                }
                _ => None,
            };
            f(i, j, wa, wb);
        }
    }
}

/// Per pair: with probability `rho` keep `prev`'s state, else take
/// `sample`'s.
pub fn apply_continuity(
    prev: &GraphSnapshot,
    sample: &GraphSnapshot,
    rho: f64,
    rng: &mut impl Rng,
) -> Result<GraphSnapshot> {
    let n = prev.node_count();
    if sample.node_count() != n {
        return Err(invalid("continuity needs snapshots of equal size"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("continuity must lie in [0, 1]"));
    }
    let mut edges = Vec::new();
    merge_pairs(n, prev.edges(), sample.edges(), |i, j, wp, ws| {
        let keep_prev = rng.gen::<f64>() < rho;
        if let Some(w) = if keep_prev { wp } else { ws } {
            edges.push((i, j, w));
        }
    });
    Ok(GraphSnapshot::from_canonical(n, edges))
}

/// Flips each unordered pair's presence independently with probability `p_n`.
pub fn flip_noise(g: &GraphSnapshot, p_n: f64, rng: &mut impl Rng) -> Result<GraphSnapshot> {
    if !g.is_unit_weight() {
        return Err(invalid("noise flipping needs a unit-weight graph"));
    }
    if !(0.0..=1.0).contains(&p_n) {
        return Err(invalid("noise must lie in [0, 1]"));
    }
    let n = g.node_count();
    let mut pairs = Vec::new();
    merge_pairs(n, g.edges(), &[], |i, j, w, _| {
        let flip = rng.gen::<f64>() < p_n;
        if w.is_some() != flip {
            pairs.push((i, j));
        }
    });
    Ok(GraphSnapshot::from_sorted_pairs(n, pairs))
}

/// Preferential attachment graph with exactly `m (n - m)` edges.
///
/// Nodes `0..m` start isolated; node `m` links to all of them, and every
/// later node links to `m` distinct earlier nodes drawn proportionally to
/// degree.
pub fn ba_snapshot(n: usize, m_attach: usize, rng: &mut impl Rng) -> Result<GraphSnapshot> {
    GraphModel::Ba { m_attach }.validate(n)?;
    let mut targets: Vec<usize> = (0..m_attach).collect();
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * m_attach * n);
    let mut edges = Vec::with_capacity(m_attach * (n - m_attach));
    let mut chosen = vec![false; n];
    for source in m_attach..n {
        for &t in &targets {
            edges.push((t, source, 1.0));
        }
        repeated.extend_from_slice(&targets);
        repeated.extend(std::iter::repeat_n(source, m_attach));
        for &t in &targets {
            chosen[t] = false;
        }
        targets.clear();
        while targets.len() < m_attach {
            let &pick = repeated.choose(rng).expect("non-empty after first arrival");
            if !std::mem::replace(&mut chosen[pick], true) {
                targets.push(pick);
            }
        }
    }
    Ok(GraphSnapshot::from_canonical(n, edges))
}

/// Snapshots of one view.
///
/// A step that opens a change point or event segment (and step 0) is a fresh
/// sample. Other steps apply continuity against the last non-event graph, so
/// the step after an event continues from the graph before it. Continuity is
/// only applied to SBM segments. Noise is layered on afterwards and is not
/// carried forward.
pub fn generate_view(
    schedule: &AnomalySchedule,
    cfg: &GenConfig,
    view: usize,
) -> Result<Vec<GraphSnapshot>> {
    let n = cfg.n_nodes;
    let mut base: Option<GraphSnapshot> = None;
    let mut out = Vec::with_capacity(schedule.total_steps());
    for (t, (model, kind, opens)) in schedule.steps().into_iter().enumerate() {
        let mut rng = step_rng(cfg.seed, view, t);
        let fresh = t == 0 || (opens && kind.is_anomaly());
        let persist = match model {
            GraphModel::Sbm { .. } if !fresh => cfg.continuity,
            _ => 0.0,
        };
        let clean = match base.as_ref() {
            Some(prev) if persist >= 1.0 => prev.clone(),
            Some(prev) if persist > 0.0 => {
                let sample = model.sample(n, &mut rng)?;
                apply_continuity(prev, &sample, persist, &mut rng)?
            }
            _ => model.sample(n, &mut rng)?,
        };
        let observed = if cfg.noise > 0.0 {
            flip_noise(&clean, cfg.noise, &mut rng)?
        } else {
            clean.clone()
        };
        if kind != SegmentKind::Event {
            base = Some(clean);
        }
        out.push(observed);
    }
    Ok(out)
}

/// Generates all views plus the ground truth.
pub fn generate_experiment(
    schedule: &AnomalySchedule,
    cfg: &GenConfig,
) -> Result<(DynamicGraph, Vec<(usize, SegmentKind)>)> {
    cfg.validate()?;
    schedule.validate_for(cfg.n_nodes)?;
    let views = (0..cfg.n_views)
        .into_par_iter()
        .map(|r| generate_view(schedule, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    Ok((DynamicGraph::from_views(views)?, schedule.ground_truth()))
}

fn rows_at_benchmark_times(kinds_models: [(SegmentKind, GraphModel); 8]) -> Vec<ScheduleRow> {
    let times = std::iter::once(0).chain(BENCHMARK_ANOMALIES);
    times
        .zip(kinds_models)
        .map(|(time, (kind, model))| ScheduleRow { time, kind, model })
        .collect()
}

fn sbm(blocks: usize, p_in: f64, p_ex: f64) -> GraphModel {
    GraphModel::Sbm { blocks, p_in, p_ex }
}

/// Single-view change points in the number of blocks.
pub fn pure_schedule() -> AnomalySchedule {
    use SegmentKind::*;
    let rows = rows_at_benchmark_times([
        (Start, sbm(4, 0.25, 0.05)),
        (ChangePoint, sbm(10, 0.25, 0.05)),
        (ChangePoint, sbm(2, 0.5, 0.05)),
        (ChangePoint, sbm(4, 0.25, 0.05)),
        (ChangePoint, sbm(10, 0.25, 0.05)),
        (ChangePoint, sbm(2, 0.5, 0.05)),
        (ChangePoint, sbm(4, 0.25, 0.05)),
        (ChangePoint, sbm(10, 0.25, 0.05)),
    ]);
    AnomalySchedule::from_rows(&rows, BENCHMARK_STEPS).expect("valid preset")
}

/// Single-view mix of cross-block bursts (events) and block changes.
pub fn hybrid_schedule() -> AnomalySchedule {
    use SegmentKind::*;
    let rows = rows_at_benchmark_times([
        (Start, sbm(4, 0.25, 0.05)),
        (Event, sbm(4, 0.25, 0.15)),
        (ChangePoint, sbm(10, 0.25, 0.05)),
        (Event, sbm(10, 0.25, 0.15)),
        (ChangePoint, sbm(2, 0.5, 0.05)),
        (Event, sbm(2, 0.5, 0.15)),
        (ChangePoint, sbm(4, 0.25, 0.05)),
        (Event, sbm(4, 0.25, 0.15)),
    ]);
    AnomalySchedule::from_rows(&rows, BENCHMARK_STEPS).expect("valid preset")
}

/// Sparse multi-view SBM whose block count changes 2,4,6,10,20,10,6,4.
pub fn sbm_change_point_schedule(p_in: f64, p_ex: f64) -> Result<AnomalySchedule> {
    use SegmentKind::*;
    let rows = rows_at_benchmark_times([
        (Start, sbm(2, p_in, p_ex)),
        (ChangePoint, sbm(4, p_in, p_ex)),
        (ChangePoint, sbm(6, p_in, p_ex)),
        (ChangePoint, sbm(10, p_in, p_ex)),
        (ChangePoint, sbm(20, p_in, p_ex)),
        (ChangePoint, sbm(10, p_in, p_ex)),
        (ChangePoint, sbm(6, p_in, p_ex)),
        (ChangePoint, sbm(4, p_in, p_ex)),
    ]);
    let schedule = AnomalySchedule::from_rows(&rows, BENCHMARK_STEPS)?;
    schedule.validate_for(500)?;
    Ok(schedule)
}

/// Sparse multi-view SBM with events (p_ex 0.004 to 0.012) and block changes.
pub fn sbm_event_schedule() -> AnomalySchedule {
    use SegmentKind::*;
    let (p_in, base, burst) = (0.024, 0.004, 0.012);
    let rows = rows_at_benchmark_times([
        (Start, sbm(4, p_in, base)),
        (Event, sbm(4, p_in, burst)),
        (ChangePoint, sbm(10, p_in, base)),
        (Event, sbm(10, p_in, burst)),
        (ChangePoint, sbm(2, p_in, base)),
        (Event, sbm(2, p_in, burst)),
        (ChangePoint, sbm(4, p_in, base)),
        (Event, sbm(4, p_in, burst)),
    ]);
    AnomalySchedule::from_rows(&rows, BENCHMARK_STEPS).expect("valid preset")
}

/// Preferential attachment densifying from `m = 1` to `m = 8`.
pub fn ba_schedule() -> AnomalySchedule {
    use SegmentKind::*;
    let ba = |m_attach| GraphModel::Ba { m_attach };
    let rows = rows_at_benchmark_times([
        (Start, ba(1)),
        (ChangePoint, ba(2)),
        (ChangePoint, ba(3)),
        (ChangePoint, ba(4)),
        (ChangePoint, ba(5)),
        (ChangePoint, ba(6)),
        (ChangePoint, ba(7)),
        (ChangePoint, ba(8)),
    ]);
    AnomalySchedule::from_rows(&rows, BENCHMARK_STEPS).expect("valid preset")
}

/// TOML experiment description: generator settings plus schedule rows.
///
/// ```toml
/// steps = 151
/// nodes = 500
/// views = 1
/// continuity = 1.0
/// seed = 7
///
/// [[rows]]
/// time = 0
/// kind = "start"
/// blocks = 4
/// p_in = 0.25
/// p_ex = 0.05
/// ```
///
/// A row with `m_attach` instead of block parameters is a BA segment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_views")]
    pub views: usize,
    #[serde(default)]
    pub continuity: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    pub rows: Vec<RowFile>,
}

fn default_steps() -> usize {
    BENCHMARK_STEPS
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFile {
    pub time: usize,
    pub kind: String,
    pub blocks: Option<usize>,
    pub p_in: Option<f64>,
    pub p_ex: Option<f64>,
    pub m_attach: Option<usize>,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validated schedule and generator config.
    pub fn resolve(&self) -> Result<(AnomalySchedule, GenConfig)> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let kind = SegmentKind::parse(&r.kind)
                .filter(|k| *k != SegmentKind::Resume)
                .ok_or_else(|| Error::Config(format!("unknown row kind {:?}", r.kind)))?;
            let model = match (r.m_attach, r.blocks, r.p_in, r.p_ex) {
                (Some(m_attach), None, None, None) => GraphModel::Ba { m_attach },
                (None, Some(blocks), Some(p_in), Some(p_ex)) => {
                    GraphModel::Sbm { blocks, p_in, p_ex }
                }
                _ => {
                    return Err(Error::Config(format!(
                        "row at time {} needs either m_attach or blocks/p_in/p_ex",
                        r.time
                    )))
                }
            };
            rows.push(ScheduleRow {
                time: r.time,
                kind,
                model,
            });
        }
        let schedule = AnomalySchedule::from_rows(&rows, self.steps)?;
        let cfg = GenConfig {
            n_nodes: self.nodes,
            n_views: self.views,
            continuity: self.continuity,
            noise: self.noise,
            seed: self.seed,
        };
        cfg.validate()?;
        schedule.validate_for(cfg.n_nodes)?;
        Ok((schedule, cfg))
    }
}
