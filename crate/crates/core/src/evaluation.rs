//! Metrics and the multi-trial experiment harness.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::baselines::{activity_detect, aggregate_scores, AggregationMode};
use crate::detector::{
    rank_descending, resolve_k, score_signatures, view_signatures, AnomalyScoreSeries,
    DetectorConfig, LaplacianKind,
};
use crate::error::{invalid, Error, Result};
use crate::generators::{
    ba_schedule, generate_experiment, hybrid_schedule, pure_schedule, sbm_change_point_schedule,
    sbm_event_schedule, AnomalySchedule, GenConfig, SegmentKind,
};
use crate::graph::{DynamicGraph, GraphSnapshot};
use crate::multiview::{aggregate_view_spectra, score_aggregated, PowerMeanConfig};
use crate::spectral::SignatureVector;

/// Share of `truth` found among the `n` highest `z_star` steps (earlier
/// step first on ties). Duplicate truth entries count once.
pub fn hits_at_n(scores: &AnomalyScoreSeries, truth: &[usize], n: usize) -> Result<f64> {
    let truth: BTreeSet<usize> = truth.iter().copied().collect();
    if truth.is_empty() {
        return Err(invalid("ground truth is empty"));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let top = scores.top_n(n);
    let hits = top.iter().filter(|t| truth.contains(t)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Returned when a value deviates from a window with zero spread.
pub const OUTLIER_CAP: f64 = 1e9;

/// `|x_t - mean| / std` over the trailing `window` values before `t`
/// (population std). Steps before `window` score 0; a zero-spread window
/// scores 0 for an equal value and [`OUTLIER_CAP`] otherwise.
pub fn property_outlier_score(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 2 {
        return Err(invalid("outlier window must be at least 2"));
    }
    let mut out = vec![0.0; series.len()];
    for t in window..series.len() {
        let past = &series[t - window..t];
        let (mean, std) = mean_std(past);
        let dev = (series[t] - mean).abs();
        out[t] = if std > 0.0 {
            dev / std
        } else if dev > 0.0 {
            OUTLIER_CAP
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Writes `t,kind` rows with a header.
pub fn write_truth<W: Write>(truth: &[(usize, SegmentKind)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,kind")?;
    for (t, kind) in truth {
        writeln!(out, "{t},{}", kind.as_str())?;
    }
    Ok(())
}

/// Parses a `t,kind` file. Row order is irrelevant; `#` lines and a
/// `t,kind` header are skipped.
pub fn parse_truth(text: &str) -> Result<Vec<(usize, SegmentKind)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (out.is_empty() && line == "t,kind") {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (t, kind) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected `t,kind`".into()))?;
        let t = t
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err(format!("bad time step {t:?}: {e}")))?;
        let kind = SegmentKind::parse(kind.trim())
            .filter(|k| k.is_anomaly())
            .ok_or_else(|| parse_err(format!("unknown anomaly kind {:?}", kind.trim())))?;
        out.push((t, kind));
    }
    Ok(out)
}

/// Mean and population standard deviation, summed left to right.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("spearman needs two series of equal length >= 2"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(invalid("spearman input contains NaN"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "a series has no rank variance".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphProperty {
    Components,
    Transitivity,
    Edges,
    MeanDegree,
}

impl GraphProperty {
    pub const ALL: [GraphProperty; 4] = [
        GraphProperty::Components,
        GraphProperty::Transitivity,
        GraphProperty::Edges,
        GraphProperty::MeanDegree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphProperty::Components => "connected components",
            GraphProperty::Transitivity => "transitivity",
            GraphProperty::Edges => "edges",
            GraphProperty::MeanDegree => "average degree",
        }
    }

    pub fn of(self, g: &GraphSnapshot) -> f64 {
        match self {
            GraphProperty::Components => connected_components(g) as f64,
            GraphProperty::Transitivity => transitivity(g),
            GraphProperty::Edges => g.edge_count() as f64,
            GraphProperty::MeanDegree => {
                if g.node_count() == 0 {
                    0.0
                } else {
                    2.0 * g.edge_count() as f64 / g.node_count() as f64
                }
            }
        }
    }
}

/// Number of connected components, isolated nodes included.
pub fn connected_components(g: &GraphSnapshot) -> usize {
    let adj = g.neighbors();
    let mut seen = vec![false; g.node_count()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for s in 0..g.node_count() {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !std::mem::replace(&mut seen[v], true) {
                    queue.push_back(v);
                }
            }
        }
    }
    count
}

/// `3 * triangles / connected triples`; 0 when there are no triples.
pub fn transitivity(g: &GraphSnapshot) -> f64 {
    let adj = g.neighbors();
    let n = g.node_count();
    let mut mark = vec![false; n];
    let mut closed = 0u64;
    let mut triples = 0u64;
    for u in 0..n {
        let d = adj[u].len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        for &v in &adj[u] {
            mark[v] = true;
        }
        // each triangle is seen from each of its 3 corners, once per edge
        // pair, so count ordered (v, w) with v < w
        for &v in &adj[u] {
            for &w in &adj[v] {
                if w > v && mark[w] {
                    closed += 1;
                }
            }
        }
        for &v in &adj[u] {
            mark[v] = false;
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

/// Spearman correlation between `z_star` and each property's outlier score,
/// over steps from `max(startup_len, window)` on.
pub fn property_correlations(
    view: &[GraphSnapshot],
    scores: &AnomalyScoreSeries,
    window: usize,
) -> Result<Vec<(GraphProperty, Result<f64>)>> {
    if view.len() != scores.len() {
        return Err(invalid("scores and snapshots differ in length"));
    }
    let from = scores.startup_len.max(window);
    GraphProperty::ALL
        .iter()
        .map(|&p| {
            let series: Vec<f64> = view.iter().map(|g| p.of(g)).collect();
            let outlier = property_outlier_score(&series, window)?;
            let rho = if from >= view.len() {
                Err(invalid("no steps after startup"))
            } else {
                spearman(&scores.z_star[from..], &outlier[from..])
            };
            Ok((p, rho))
        })
        .collect()
}

/// Per-method results over a set of trials.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub method: String,
    pub experiment: String,
    pub hits: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub n_trials: usize,
    pub seed_base: u64,
    /// View whose scores were reported, for single-view methods on
    /// multi-view data.
    pub view: Option<usize>,
}

impl TrialReport {
    pub fn new(
        method: &str,
        experiment: &str,
        hits: Vec<f64>,
        seed_base: u64,
        view: Option<usize>,
    ) -> Self {
        let (mean, std) = mean_std(&hits);
        Self {
            method: method.to_string(),
            experiment: experiment.to_string(),
            n_trials: hits.len(),
            hits,
            mean,
            std,
            seed_base,
            view,
        }
    }
}

/// What a [`Method`] runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MethodKind {
    /// Single-view detector; on multi-view data the best view by mean is
    /// reported.
    Lad(LaplacianKind),
    MultiLad { p: f64 },
    /// Per-view detector scores merged per step.
    Aggregate(LaplacianKind, AggregationMode),
    /// Activity vector with the short window; best view as for `Lad`.
    Activity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Method {
    pub name: String,
    pub kind: MethodKind,
    /// Use only the first `views` views.
    pub views: Option<usize>,
}

impl Method {
    pub fn new(name: impl Into<String>, kind: MethodKind) -> Self {
        Self {
            name: name.into(),
            kind,
            views: None,
        }
    }

    pub fn lad() -> Self {
        Self::new("LAD", MethodKind::Lad(LaplacianKind::Unnormalized))
    }

    pub fn nl_lad() -> Self {
        Self::new("NL LAD", MethodKind::Lad(LaplacianKind::Normalized))
    }

    pub fn multilad(p: f64) -> Self {
        Self::new("MultiLAD", MethodKind::MultiLad { p })
    }

    pub fn aggregate(kind: LaplacianKind, mode: AggregationMode) -> Self {
        let prefix = if kind == LaplacianKind::Normalized { "NL " } else { "" };
        let op = match mode {
            AggregationMode::Max => "max",
            AggregationMode::Mean => "mean",
        };
        Self::new(format!("{prefix}{op}LAD"), MethodKind::Aggregate(kind, mode))
    }

    pub fn activity() -> Self {
        Self::new("Activity vector", MethodKind::Activity)
    }

    /// Restricts to the first `m` views and tags the name with `(mv)`.
    pub fn with_views(mut self, m: usize) -> Self {
        self.views = Some(m);
        self.name = format!("{} ({m}v)", self.name);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The seven methods compared on multi-view data.
    pub fn multi_view_suite() -> Vec<Method> {
        use AggregationMode::*;
        use LaplacianKind::*;
        vec![
            Method::multilad(-10.0),
            Method::lad(),
            Method::nl_lad(),
            Method::aggregate(Unnormalized, Max),
            Method::aggregate(Unnormalized, Mean),
            Method::aggregate(Normalized, Max),
            Method::aggregate(Normalized, Mean),
        ]
    }
}

/// A generator setup plus detector settings; `gen.seed` is replaced per trial.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub id: String,
    pub schedule: AnomalySchedule,
    pub gen: GenConfig,
    pub detector: DetectorConfig,
    /// `n` of Hits@n; defaults to the number of planted anomalies.
    pub top_n: usize,
}

impl Experiment {
    pub fn new(id: impl Into<String>, schedule: AnomalySchedule, gen: GenConfig) -> Self {
        let top_n = schedule.anomaly_steps().len().max(1);
        Self {
            id: id.into(),
            schedule,
            gen,
            detector: DetectorConfig::default(),
            top_n,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<(DynamicGraph, Vec<usize>)> {
        let cfg = GenConfig {
            seed,
            ..self.gen.clone()
        };
        let (g, truth) = generate_experiment(&self.schedule, &cfg)?;
        Ok((g, truth.into_iter().map(|(t, _)| t).collect()))
    }
}

/// One trial's data and lazily computed per-view spectra.
pub struct TrialData {
    pub graph: DynamicGraph,
    pub truth: Vec<usize>,
    k: usize,
    spectra: [OnceLock<Vec<Vec<SignatureVector>>>; 2],
    views_needed: [usize; 2],
}

fn kind_slot(kind: LaplacianKind) -> usize {
    match kind {
        LaplacianKind::Unnormalized => 0,
        LaplacianKind::Normalized => 1,
    }
}

impl TrialData {
    fn new(graph: DynamicGraph, truth: Vec<usize>, det: &DetectorConfig, methods: &[Method]) -> Result<Self> {
        let k = resolve_k(det.k, graph.views().iter().flatten())?;
        let all = graph.num_views();
        let mut views_needed = [0, 0];
        for m in methods {
            let used = m.views.unwrap_or(all).min(all);
            let slots: &[usize] = match m.kind {
                MethodKind::Lad(kind) | MethodKind::Aggregate(kind, _) => &[kind_slot(kind)],
                MethodKind::MultiLad { .. } => &[1],
                MethodKind::Activity => &[],
            };
            for &s in slots {
                views_needed[s] = views_needed[s].max(used);
            }
        }
        Ok(Self {
            graph,
            truth,
            k,
            spectra: [OnceLock::new(), OnceLock::new()],
            views_needed,
        })
    }

    fn spectra(&self, kind: LaplacianKind, det: &DetectorConfig) -> Result<&[Vec<SignatureVector>]> {
        let slot = kind_slot(kind);
        if let Some(s) = self.spectra[slot].get() {
            return Ok(s);
        }
        let computed = self.graph.views()[..self.views_needed[slot]]
            .par_iter()
            .map(|v| view_signatures(v, kind, self.k, &det.solver))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.spectra[slot].get_or_init(|| computed))
    }
}

/// Hits per used view (single-view methods) or a single value.
fn evaluate_method(
    exp: &Experiment,
    data: &TrialData,
    method: &Method,
) -> Result<Vec<f64>> {
    let det = &exp.detector;
    let m = method.views.unwrap_or(data.graph.num_views()).min(data.graph.num_views());
    if m == 0 {
        return Err(invalid(format!("method {} uses no views", method.name)));
    }
    let hits = |s: &AnomalyScoreSeries| hits_at_n(s, &data.truth, exp.top_n);
    let per_view_scores = |kind: LaplacianKind| -> Result<Vec<AnomalyScoreSeries>> {
        let cfg = DetectorConfig {
            laplacian: kind,
            shift: 0.0,
            ..det.clone()
        };
        data.spectra(kind, det)?[..m]
            .iter()
            .map(|sigs| score_signatures(sigs, &cfg))
            .collect()
    };
    match method.kind {
        MethodKind::Lad(kind) => per_view_scores(kind)?.iter().map(hits).collect(),
        MethodKind::Aggregate(kind, mode) => {
            Ok(vec![hits(&aggregate_scores(&per_view_scores(kind)?, mode)?)?])
        }
        MethodKind::MultiLad { p } => {
            let pm = PowerMeanConfig::new(p)?;
            let spectra = data.spectra(LaplacianKind::Normalized, det)?;
            let merged = aggregate_view_spectra(&spectra[..m], &pm)?;
            Ok(vec![hits(&score_aggregated(&merged, det)?)?])
        }
        MethodKind::Activity => data.graph.views()[..m]
            .iter()
            .map(|v| hits(&activity_detect(v, det.short_window, &det.solver)?))
            .collect(),
    }
}

/// Runs every method on `n_trials` generated datasets (trial `i` uses seed
/// `base_seed + i`). Trials run on the current rayon pool; results are
/// ordered by trial index regardless of scheduling.
pub fn run_trials(
    exp: &Experiment,
    methods: &[Method],
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialReport>> {
    if n_trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    exp.detector.validate()?;
    let per_trial: Vec<Vec<Vec<f64>>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let run = || -> Result<Vec<Vec<f64>>> {
                let (graph, truth) = exp.generate(seed)?;
                let data = TrialData::new(graph, truth, &exp.detector, methods)?;
                methods.iter().map(|m| evaluate_method(exp, &data, m)).collect()
            };
            run().map_err(|e| with_context(e, &exp.id, i, seed))
        })
        .collect::<Result<_>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(j, method)| {
            let views = per_trial[0][j].len();
            // best view by mean hits; earliest view on ties
            let mut best = 0;
            let mut best_mean = f64::NEG_INFINITY;
            for r in 0..views {
                let column: Vec<f64> = per_trial.iter().map(|t| t[j][r]).collect();
                let (mean, _) = mean_std(&column);
                if mean > best_mean {
                    best = r;
                    best_mean = mean;
                }
            }
            let hits = per_trial.iter().map(|t| t[j][best]).collect();
            let single = matches!(method.kind, MethodKind::Lad(_) | MethodKind::Activity);
            TrialReport::new(&method.name, &exp.id, hits, base_seed, single.then_some(best))
        })
        .collect())
}

fn with_context(e: Error, id: &str, trial: usize, seed: u64) -> Error {
    let ctx = format!("{id}, trial {trial} (seed {seed})");
    match e {
        Error::Validation(m) => Error::Validation(format!("{ctx}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{ctx}: {m}")),
        other => {
            log::error!("{ctx}: {other}");
            other
        }
    }
}

/// `experiment,method,view,n_trials,seed_base,mean,std,hits` rows; per-trial
/// hits are `;`-separated.
pub fn write_reports_csv<W: Write>(reports: &[TrialReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "experiment,method,view,n_trials,seed_base,mean,std,hits")?;
    for r in reports {
        let hits: Vec<String> = r.hits.iter().map(|h| h.to_string()).collect();
        let view = r.view.map_or(String::new(), |v| v.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment,
            r.method,
            view,
            r.n_trials,
            r.seed_base,
            r.mean,
            r.std,
            hits.join(";")
        )?;
    }
    Ok(())
}

/// Plain-text `mean ± std` table grouped by experiment.
pub fn format_table(reports: &[TrialReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut s = String::new();
    let mut current = None;
    for r in reports {
        if current != Some(&r.experiment) {
            let _ = writeln!(s, "{} ({} trials)", r.experiment, r.n_trials);
            current = Some(&r.experiment);
        }
        let _ = writeln!(s, "  {:width$}  {:.3} ± {:.3}", r.method, r.mean, r.std);
    }
    s
}

/// Overrides for [`bench_family`]; unset fields use the family's sweep.
#[derive(Clone, Debug, Default)]
pub struct BenchOptions {
    pub c_out: Option<f64>,
    pub noise: Option<f64>,
    pub views: Option<usize>,
    pub p: Option<f64>,
}

pub const BENCH_FAMILIES: [&str; 8] = [
    "pure",
    "hybrid",
    "resampled",
    "sbm-cout-sweep",
    "sbm-noise-sweep",
    "sbm-views-sweep",
    "ba-views-sweep",
    "p-ablation",
];

const SPARSE_P_IN: f64 = 0.024;
const VIEW_SWEEP: [usize; 7] = [1, 2, 4, 6, 8, 10, 12];

/// Three-view sparse SBM with block-count change points and `p_ex = c_out / 500`.
pub fn sbm_views_experiment(c_out: f64, views: usize) -> Result<Experiment> {
    let schedule = sbm_change_point_schedule(SPARSE_P_IN, c_out / 500.0)?;
    let gen = GenConfig {
        n_views: views,
        ..GenConfig::default()
    };
    Ok(Experiment::new(format!("sbm c_out={c_out} {views}v"), schedule, gen))
}

/// Sparse SBM with events and change points and per-view flip noise.
pub fn sbm_noise_experiment(noise: f64, views: usize) -> Experiment {
    let gen = GenConfig {
        n_views: views,
        noise,
        ..GenConfig::default()
    };
    Experiment::new(format!("sbm noise={noise} {views}v"), sbm_event_schedule(), gen)
}

pub fn ba_experiment(views: usize) -> Experiment {
    let gen = GenConfig {
        n_views: views,
        ..GenConfig::default()
    };
    Experiment::new(format!("ba {views}v"), ba_schedule(), gen)
}

/// Single-view SBM settings: `pure` (frozen within segments), `hybrid`
/// (continuity 0.9) and `resampled` (hybrid schedule, continuity 0).
pub fn single_view_experiment(id: &str) -> Result<Experiment> {
    let (schedule, continuity) = match id {
        "pure" => (pure_schedule(), 1.0),
        "hybrid" => (hybrid_schedule(), 0.9),
        "resampled" => (hybrid_schedule(), 0.0),
        other => return Err(invalid(format!("unknown single-view setting {other:?}"))),
    };
    let gen = GenConfig {
        continuity,
        ..GenConfig::default()
    };
    Ok(Experiment::new(id, schedule, gen))
}

fn views_sweep_methods(max_views: usize, sweep: &[usize]) -> Vec<Method> {
    let mut methods = Vec::new();
    for &v in sweep.iter().filter(|&&v| v <= max_views) {
        for m in Method::multi_view_suite() {
            methods.push(m.with_views(v));
        }
    }
    methods
}

/// Experiments and methods of a named benchmark family.
pub fn bench_family(id: &str, opts: &BenchOptions) -> Result<Vec<(Experiment, Vec<Method>)>> {
    let one_or = |v: Option<f64>, sweep: &[f64]| v.map_or(sweep.to_vec(), |x| vec![x]);
    match id {
        "pure" | "hybrid" | "resampled" => Ok(vec![(
            single_view_experiment(id)?,
            vec![Method::lad(), Method::activity()],
        )]),
        "sbm-cout-sweep" => one_or(opts.c_out, &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
            .into_iter()
            .map(|c| Ok((sbm_views_experiment(c, opts.views.unwrap_or(3))?, Method::multi_view_suite())))
            .collect(),
        "sbm-noise-sweep" => Ok(one_or(opts.noise, &[0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
            .into_iter()
            .map(|p| (sbm_noise_experiment(p, opts.views.unwrap_or(3)), Method::multi_view_suite()))
            .collect()),
        "sbm-views-sweep" | "ba-views-sweep" => {
            let sweep: Vec<usize> = opts.views.map_or(VIEW_SWEEP.to_vec(), |v| vec![v]);
            let max = *sweep.iter().max().expect("non-empty");
            let exp = if id == "ba-views-sweep" {
                ba_experiment(max)
            } else {
                sbm_views_experiment(opts.c_out.unwrap_or(6.0), max)?
            };
            Ok(vec![(exp, views_sweep_methods(max, &sweep))])
        }
        "p-ablation" => {
            let ps = one_or(opts.p, &[-10.0, -5.0, -1.0, 1.0, 5.0, 10.0]);
            let methods = ps
                .iter()
                .map(|&p| Method::multilad(p).with_name(format!("MultiLAD p={p}")))
                .collect();
            Ok(vec![(
                sbm_views_experiment(opts.c_out.unwrap_or(4.0), opts.views.unwrap_or(3))?,
                methods,
            )])
        }
        other => Err(Error::Config(format!(
            "unknown experiment {other:?}; expected one of {}",
            BENCH_FAMILIES.join(", ")
        ))),
    }
}

/// Indices of the `n` largest values, ties to the earlier index.
pub fn top_indices(values: &[f64], n: usize) -> Vec<usize> {
    let mut r = rank_descending(values);
    r.truncate(n);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(z_star: Vec<f64>, startup_len: usize) -> AnomalyScoreSeries {
        AnomalyScoreSeries {
            z_short: z_star.clone(),
            z_long: z_star.clone(),
            z_star,
            startup_len,
        }
    }

    #[test]
    fn hits_perfect_and_disjoint() {
        let mut z = vec![0.0; 30];
        for (i, t) in [3, 9, 12].iter().enumerate() {
            z[*t] = 1.0 + i as f64;
        }
        let s = series(z, 0);
        assert_eq!(hits_at_n(&s, &[12, 3, 9], 3).unwrap(), 1.0);
        assert_eq!(hits_at_n(&s, &[12, 3, 9, 3], 3).unwrap(), 1.0);
        assert_eq!(hits_at_n(&s, &[1, 2], 3).unwrap(), 0.0);
        assert!(hits_at_n(&s, &[], 3).is_err());
    }

    #[test]
    fn ties_go_to_earlier_steps() {
        let s = series(vec![0.5; 10], 0);
        assert_eq!(hits_at_n(&s, &[0, 1], 2).unwrap(), 1.0);
        assert_eq!(hits_at_n(&s, &[8, 9], 2).unwrap(), 0.0);
    }

    #[test]
    fn random_scores_hit_at_chance_rate() {
        let (steps, startup) = (151, 11);
        let truth = [16, 31, 61, 76, 91, 106, 136];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let runs = 4000;
        let mut total = 0.0;
        for _ in 0..runs {
            let z = (0..steps)
                .map(|t| if t < startup { 0.0 } else { rng.gen::<f64>() })
                .collect();
            total += hits_at_n(&series(z, startup), &truth, 7).unwrap();
        }
        let expect = 7.0 / (steps - startup) as f64;
        // hypergeometric variance of hits / 7
        let pop = (steps - startup) as f64;
        let var = 7.0 * (7.0 / pop) * (1.0 - 7.0 / pop) * (pop - 7.0) / (pop - 1.0) / 49.0;
        assert!((total / runs as f64 - expect).abs() <= 4.0 * (var / runs as f64).sqrt());
    }

    #[test]
    fn outlier_score_examples() {
        assert!(property_outlier_score(&[3.0; 10], 4).unwrap().iter().all(|y| *y == 0.0));
        let y = property_outlier_score(&[0.0, 0.0, 0.0, 0.0, 0.0, 10.0], 5).unwrap();
        assert_eq!(y[5], OUTLIER_CAP);
        assert!(property_outlier_score(&[1.0], 1).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y = property_outlier_score(&x, 6).unwrap();
        for t in 0..40 {
            if t < 6 {
                assert_eq!(y[t], 0.0);
                continue;
            }
            let w = &x[t - 6..t];
            let mut mean = 0.0;
            for v in w {
                mean += v;
            }
            mean /= 6.0;
            let mut var = 0.0;
            for v in w {
                var += (v - mean).powi(2);
            }
            let std = (var / 6.0).sqrt();
            assert!((y[t] - (x[t] - mean).abs() / std).abs() < 1e-12);
        }
    }

    /// Ranks by counting, independent of the sorting implementation.
    fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let below = v.iter().filter(|b| *b < a).count() as f64;
                    let equal = v.iter().filter(|b| *b == a).count() as f64;
                    below + (equal + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = x.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn spearman_examples() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman(&x, &rev).unwrap(), -1.0);
        assert!(matches!(
            spearman(&x, &[1.0; 10]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(spearman(&[1.0], &[1.0]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let a: Vec<f64> = (0..20).map(|_| f64::from(rng.gen_range(0..8))).collect();
            let b: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
            assert!((spearman(&a, &b).unwrap() - oracle_spearman(&a, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn truth_round_trip() {
        let truth = vec![(16, SegmentKind::Event), (31, SegmentKind::ChangePoint)];
        let mut buf = Vec::new();
        write_truth(&truth, &mut buf).unwrap();
        assert_eq!(parse_truth(std::str::from_utf8(&buf).unwrap()).unwrap(), truth);
        assert_eq!(
            parse_truth("# planted\n31,change_point\n16,event\n").unwrap(),
            vec![(31, SegmentKind::ChangePoint), (16, SegmentKind::Event)]
        );
        assert!(matches!(parse_truth("t,kind\n5,start\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_truth("x,event\n").is_err());
        assert!(parse_truth("4").is_err());
    }

    #[test]
    fn graph_properties() {
        let tri = GraphSnapshot::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0)])
            .unwrap();
        assert_eq!(connected_components(&tri), 2);
        assert!((transitivity(&tri) - 1.0).abs() < 1e-15);
        let path = GraphSnapshot::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(transitivity(&path), 0.0);
        assert_eq!(GraphProperty::MeanDegree.of(&path), 4.0 / 3.0);
        assert_eq!(connected_components(&GraphSnapshot::empty(4)), 4);
    }

    #[test]
    fn transitivity_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 25;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < 0.2 {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = GraphSnapshot::from_edges(n, edges).unwrap();
        let (mut tri, mut triples) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if a != b && b != c && a != c && g.has_edge(a, b) && g.has_edge(b, c) {
                        triples += 1.0;
                        if g.has_edge(a, c) {
                            tri += 1.0;
                        }
                    }
                }
            }
        }
        assert!((transitivity(&g) - tri / triples).abs() < 1e-12);
    }

    #[test]
    fn report_statistics_recompute() {
        let r = TrialReport::new("m", "e", vec![0.5, 1.0, 0.25], 7, None);
        let (mean, std) = mean_std(&r.hits);
        assert_eq!((r.mean, r.std), (mean, std));
        assert_eq!(TrialReport::new("m", "e", vec![0.4], 0, None).std, 0.0);
    }

    fn tiny_experiment() -> Experiment {
        let mut exp = sbm_views_experiment(2.0, 2).unwrap();
        exp.gen.n_nodes = 40;
        exp
    }

    #[test]
    fn trials_are_deterministic() {
        let exp = tiny_experiment();
        let methods = Method::multi_view_suite();
        let a = run_trials(&exp, &methods, 2, 5).unwrap();
        let b = run_trials(&exp, &methods, 2, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), methods.len());
        for r in &a {
            assert_eq!(r.n_trials, 2);
            assert!(r.hits.iter().all(|h| (0.0..=1.0).contains(h)));
        }
    }

    #[test]
    fn view_limit_matches_fewer_generated_views() {
        let exp = tiny_experiment();
        let mut one = exp.clone();
        one.gen.n_views = 1;
        let limited = run_trials(&exp, &[Method::multilad(-10.0).with_views(1)], 1, 3).unwrap();
        let direct = run_trials(&one, &[Method::multilad(-10.0)], 1, 3).unwrap();
        assert_eq!(limited[0].hits, direct[0].hits);
    }

    #[test]
    fn families_resolve() {
        for id in BENCH_FAMILIES {
            assert!(!bench_family(id, &BenchOptions::default()).unwrap().is_empty());
        }
        assert!(matches!(
            bench_family("nope", &BenchOptions::default()),
            Err(Error::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn hits_invariant_under_monotone_transform(
            z in proptest::collection::vec(0.0f64..1.0, 20..60),
            truth in proptest::collection::btree_set(0usize..20, 1..6),
            n in 1usize..10,
        ) {
            let truth: Vec<usize> = truth.into_iter().collect();
            let a = hits_at_n(&series(z.clone(), 0), &truth, n).unwrap();
            let t: Vec<f64> = z.iter().map(|v| (3.0 * v).exp() + 1.0).collect();
            prop_assert_eq!(a, hits_at_n(&series(t, 0), &truth, n).unwrap());
        }

        #[test]
        fn spearman_self_is_one(x in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            prop_assume!(x.iter().any(|v| *v != x[0]));
            prop_assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
