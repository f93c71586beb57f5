//! Multi-view dynamic graph data model, the `time,view,src,dst,weight`
//! edge-stream format, and Laplacian construction.
//!
//! Snapshots are undirected and weighted. Directed input is symmetrized by
//! summing both directions, duplicate records are summed, and self-loops are
//! dropped with a warning.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::sparse::SymmetricCsr;

/// One line of an edge stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRecord {
    pub time: usize,
    pub view: usize,
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Sparse weighted undirected graph for one view at one time step.
///
/// Edges are kept as `(i, j, w)` with `i < j`, sorted and unique, so the
/// adjacency is symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSnapshot {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl GraphSnapshot {
    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Builds a snapshot from arbitrary `(src, dst, weight)` triples.
    ///
    /// Orientation is ignored, duplicates are summed and self-loops dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut canon = Vec::new();
        let mut loops = 0usize;
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!(
                    "edge ({a}, {b}) outside node universe of size {n}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(invalid(format!("edge ({a}, {b}) has non-positive weight {w}")));
            }
            if a == b {
                loops += 1;
                continue;
            }
            canon.push((a.min(b), a.max(b), w));
        }
        if loops > 0 {
            log::warn!("dropped {loops} self-loop record(s)");
        }
        let g = Self::from_canonical(n, canon);
        if let Some(&(i, j, _)) = g.edges.iter().find(|e| !e.2.is_finite()) {
            return Err(invalid(format!("summed weight of edge ({i}, {j}) overflows")));
        }
        Ok(g)
    }

    /// `edges` must already satisfy `i < j < n` with positive weights.
    pub(crate) fn from_canonical(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps duplicate summation in input order
        edges.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for (i, j, w) in edges {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => merged.push((i, j, w)),
            }
        }
        Self { n, edges: merged }
    }

    /// Unit-weight graph from sorted, unique `i < j` pairs.
    pub(crate) fn from_sorted_pairs(n: usize, pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        Self {
            n,
            edges: pairs.into_iter().map(|(i, j)| (i, j, 1.0)).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Canonical `(i, j, w)` edges with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Symmetric weight lookup; zero when absent.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        match self.edges.binary_search_by_key(&key, |&(i, j, _)| (i, j)) {
            Ok(pos) => self.edges[pos].2,
            Err(_) => 0.0,
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.weight(a, b) > 0.0
    }

    /// Sum of edge weights, each undirected edge counted once.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, w) in &self.edges {
            d[i] += w;
            d[j] += w;
        }
        d
    }

    pub fn is_unit_weight(&self) -> bool {
        self.edges.iter().all(|e| e.2 == 1.0)
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(invalid("permutation length differs from node count"));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(invalid("not a permutation"));
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|&(i, j, w)| {
                let (a, b) = (perm[i], perm[j]);
                (a.min(b), a.max(b), w)
            })
            .collect();
        Ok(Self::from_canonical(self.n, edges))
    }

    /// Dense symmetric adjacency matrix.
    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    /// Sparse symmetric adjacency matrix.
    pub fn adjacency(&self) -> SymmetricCsr {
        let mut rows = vec![Vec::new(); self.n];
        for &(i, j, w) in &self.edges {
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        SymmetricCsr::from_rows(rows)
    }

    /// Sorted neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// `L = D - A`.
pub fn unnormalized_laplacian(g: &GraphSnapshot) -> SymmetricCsr {
    let degrees = g.degrees();
    let mut rows: Vec<Vec<(usize, f64)>> = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| if d > 0.0 { vec![(i, d)] } else { Vec::new() })
        .collect();
    for &(i, j, w) in g.edges() {
        rows[i].push((j, -w));
        rows[j].push((i, -w));
    }
    SymmetricCsr::from_rows(rows)
}

/// `L_sym = I - D^{-1/2} A D^{-1/2}`.
///
/// Isolated nodes get `(D^{-1/2})_ii = 0`, leaving an all-zero row and column.
pub fn normalized_laplacian(g: &GraphSnapshot) -> SymmetricCsr {
    let inv_sqrt: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut rows: Vec<Vec<(usize, f64)>> = inv_sqrt
        .iter()
        .enumerate()
        .map(|(i, &s)| if s > 0.0 { vec![(i, 1.0)] } else { Vec::new() })
        .collect();
    for &(i, j, w) in g.edges() {
        let v = -w * inv_sqrt[i] * inv_sqrt[j];
        rows[i].push((j, v));
        rows[j].push((i, v));
    }
    SymmetricCsr::from_rows(rows)
}

/// Ordered `T x m` grid of snapshots, stored view-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicGraph {
    views: Vec<Vec<GraphSnapshot>>,
}

impl DynamicGraph {
    /// `views[r][t]` is view `r` at time `t`. Every view must have the same
    /// number of steps, and there must be at least one of each.
    pub fn from_views(views: Vec<Vec<GraphSnapshot>>) -> Result<Self> {
        if views.is_empty() {
            return Err(invalid("dynamic graph needs at least one view"));
        }
        let steps = views[0].len();
        if steps == 0 {
            return Err(invalid("dynamic graph needs at least one time step"));
        }
        if views.iter().any(|v| v.len() != steps) {
            return Err(invalid("views have different numbers of time steps"));
        }
        Ok(Self { views })
    }

    /// Single-view convenience constructor.
    pub fn single_view(snapshots: Vec<GraphSnapshot>) -> Result<Self> {
        Self::from_views(vec![snapshots])
    }

    pub fn num_steps(&self) -> usize {
        self.views[0].len()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn snapshot(&self, t: usize, view: usize) -> &GraphSnapshot {
        &self.views[view][t]
    }

    pub fn view(&self, view: usize) -> &[GraphSnapshot] {
        &self.views[view]
    }

    pub fn views(&self) -> &[Vec<GraphSnapshot>] {
        &self.views
    }

    /// `node_counts()[t][r]`.
    pub fn node_counts(&self) -> Vec<Vec<usize>> {
        (0..self.num_steps())
            .map(|t| self.views.iter().map(|v| v[t].node_count()).collect())
            .collect()
    }

    pub fn min_node_count(&self) -> usize {
        self.views
            .iter()
            .flatten()
            .map(GraphSnapshot::node_count)
            .min()
            .unwrap_or(0)
    }

    pub fn max_node_count(&self) -> usize {
        self.views
            .iter()
            .flatten()
            .map(GraphSnapshot::node_count)
            .max()
            .unwrap_or(0)
    }

    /// Sum of all edge weights, time-major then view order.
    pub fn total_weight(&self) -> f64 {
        let mut total = 0.0;
        for t in 0..self.num_steps() {
            for v in &self.views {
                total += v[t].total_weight();
            }
        }
        total
    }

    /// Keeps only the first `m` views.
    pub fn truncate_views(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.num_views() {
            return Err(invalid(format!(
                "cannot keep {m} of {} views",
                self.num_views()
            )));
        }
        Ok(Self {
            views: self.views[..m].to_vec(),
        })
    }
}

/// Optional `#@ key=value ...` directive at the top of an edge stream.
///
/// Declares the grid shape so trailing empty snapshots survive a round trip,
/// and marks files produced by the synthetic generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StreamHeader {
    pub steps: Option<usize>,
    pub views: Option<usize>,
    pub nodes: Option<usize>,
    pub synthetic: bool,
}

impl StreamHeader {
    fn parse_directive(&mut self, body: &str, line: usize) -> Result<()> {
        for token in body.split_whitespace() {
            let (key, value) = match token.split_once('=') {
                Some(kv) => kv,
                None => {
                    if token == "synthetic" {
                        self.synthetic = true;
                    }
                    continue;
                }
            };
            let parse = |v: &str| {
                v.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad header value {token:?}"),
                })
            };
            match key {
                "steps" => self.steps = Some(parse(value)?),
                "views" => self.views = Some(parse(value)?),
                "nodes" => self.nodes = Some(parse(value)?),
                "origin" => self.synthetic = value == "synthetic",
                _ => {}
            }
        }
        Ok(())
    }

    fn render(&self) -> String {
        let mut s = String::from("#@");
        if let Some(v) = self.steps {
            let _ = write!(s, " steps={v}");
        }
        if let Some(v) = self.views {
            let _ = write!(s, " views={v}");
        }
        if let Some(v) = self.nodes {
            let _ = write!(s, " nodes={v}");
        }
        if self.synthetic {
            s.push_str(" origin=synthetic");
        }
        s
    }
}

const COLUMN_HEADER: &str = "time,view,src,dst,weight";

/// Largest `steps * views` grid a stream may declare or imply. Every cell
/// holds a snapshot, so a stray huge time stamp would otherwise exhaust memory.
pub const MAX_GRID_CELLS: usize = 1 << 22;

/// Parses one data line of the edge stream.
pub fn parse_edge_record(line: &str, line_no: usize) -> Result<EdgeRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected 5 comma-separated fields, found {}", fields.len()),
        });
    }
    let int = |idx: usize, name: &str| {
        fields[idx].parse::<usize>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("{name} {:?} is not a non-negative integer", fields[idx]),
        })
    };
    let time = int(0, "time")?;
    let view = int(1, "view")?;
    let src = int(2, "src")?;
    let dst = int(3, "dst")?;
    let weight = fields[4].parse::<f64>().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("weight {:?} is not a number", fields[4]),
    })?;
    if !(weight.is_finite() && weight > 0.0) {
        return Err(invalid(format!(
            "line {line_no}: weight must be positive and finite, got {weight}"
        )));
    }
    Ok(EdgeRecord {
        time,
        view,
        src,
        dst,
        weight,
    })
}

/// Parses an edge stream into a dynamic graph.
///
/// `T` and `m` are one past the largest time and view seen (or the header's
/// declared values, if larger); steps with no records become empty
/// snapshots. The node universe is `node_universe`, else the header's
/// `nodes`, else one past the largest node id.
pub fn parse_edge_stream(text: &str, node_universe: Option<usize>) -> Result<DynamicGraph> {
    parse_edge_stream_with_header(text, node_universe).map(|(g, _)| g)
}

/// As [`parse_edge_stream`], also returning the `#@` header.
pub fn parse_edge_stream_with_header(
    text: &str,
    node_universe: Option<usize>,
) -> Result<(DynamicGraph, StreamHeader)> {
    let mut header = StreamHeader::default();
    let mut records = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix("#@") {
            header.parse_directive(body, line_no)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !seen_data && line.replace(' ', "") == COLUMN_HEADER {
            seen_data = true;
            continue;
        }
        seen_data = true;
        records.push(parse_edge_record(line, line_no)?);
    }

    let max_id = records.iter().map(|r| r.src.max(r.dst)).max();
    let n = match node_universe.or(header.nodes) {
        Some(u) => {
            if let Some(id) = max_id.filter(|&id| id >= u) {
                return Err(invalid(format!(
                    "node id {id} outside declared universe of {u} nodes"
                )));
            }
            u
        }
        None => match max_id {
            Some(id) => id
                .checked_add(1)
                .ok_or_else(|| invalid(format!("node id {id} is too large")))?,
            None => 0,
        },
    };
    let steps = records
        .iter()
        .map(|r| r.time.saturating_add(1))
        .chain(header.steps)
        .max()
        .ok_or_else(|| invalid("edge stream contains no records and no header"))?;
    let views = records
        .iter()
        .map(|r| r.view.saturating_add(1))
        .chain(header.views)
        .max()
        .unwrap_or(1);
    if steps.checked_mul(views).is_none_or(|cells| cells > MAX_GRID_CELLS) {
        return Err(invalid(format!(
            "{steps} steps x {views} views exceeds the limit of {MAX_GRID_CELLS} snapshots"
        )));
    }
    if let Some(s) = header.steps.filter(|&s| s < steps) {
        return Err(invalid(format!("record time {} beyond declared steps={s}", steps - 1)));
    }
    if let Some(v) = header.views.filter(|&v| v < views) {
        return Err(invalid(format!("record view {} beyond declared views={v}", views - 1)));
    }

    let mut buckets: Vec<Vec<Vec<(usize, usize, f64)>>> = vec![vec![Vec::new(); steps]; views];
    for r in &records {
        buckets[r.view][r.time].push((r.src, r.dst, r.weight));
    }
    let mut grid = Vec::with_capacity(views);
    for view in buckets {
        let mut snaps = Vec::with_capacity(steps);
        for edges in view {
            snaps.push(GraphSnapshot::from_edges(n, edges)?);
        }
        grid.push(snaps);
    }
    Ok((DynamicGraph::from_views(grid)?, header))
}

/// Writes the graph in edge-stream form, one line per undirected edge,
/// ordered by time, view, then `(src, dst)` with `src < dst`.
pub fn write_edge_stream<W: Write>(
    g: &DynamicGraph,
    header: &StreamHeader,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{}", header.render())?;
    writeln!(out, "{COLUMN_HEADER}")?;
    for t in 0..g.num_steps() {
        for r in 0..g.num_views() {
            for &(i, j, w) in g.snapshot(t, r).edges() {
                writeln!(out, "{t},{r},{i},{j},{w}")?;
            }
        }
    }
    Ok(())
}

/// Header describing `g` exactly.
pub fn header_for(g: &DynamicGraph, synthetic: bool) -> StreamHeader {
    StreamHeader {
        steps: Some(g.num_steps()),
        views: Some(g.num_views()),
        nodes: Some(g.max_node_count()),
        synthetic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dense_spectrum_oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k2() -> GraphSnapshot {
        GraphSnapshot::from_edges(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn single_edge_stream() {
        let g = parse_edge_stream("0,0,0,1,1.0", None).unwrap();
        assert_eq!(g.num_steps(), 1);
        assert_eq!(g.num_views(), 1);
        assert_eq!(g.snapshot(0, 0).edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn duplicate_and_reversed_records_are_summed() {
        let g = parse_edge_stream("0,0,0,1,1.0\n0,0,1,0,2.0", None).unwrap();
        let s = g.snapshot(0, 0);
        assert_eq!(s.edge_count(), 1);
        assert_eq!(s.weight(0, 1), 3.0);
        assert_eq!(s.weight(1, 0), 3.0);
    }

    #[test]
    fn comments_header_and_gaps() {
        let text = "# a comment\n#@ steps=4 views=2 nodes=5 origin=synthetic\ntime,view,src,dst,weight\n\
                    0,0,0,1,1\n2,1,3,4,0.5\n";
        let (g, h) = parse_edge_stream_with_header(text, None).unwrap();
        assert!(h.synthetic);
        assert_eq!(g.num_steps(), 4);
        assert_eq!(g.num_views(), 2);
        assert!(g.snapshot(1, 0).is_empty());
        assert!(g.snapshot(3, 1).is_empty());
        assert_eq!(g.snapshot(2, 1).node_count(), 5);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_edge_stream("0,0,0,1,1\n0,0,x,1,1", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_edge_stream("0,0,0,1", None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn non_positive_weight_is_validation_error() {
        assert!(matches!(
            parse_edge_stream("0,0,0,1,0", None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_edge_stream("0,0,0,1,-2.5", None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn node_universe_is_enforced() {
        assert!(parse_edge_stream("0,0,0,7,1", Some(5)).is_err());
        let g = parse_edge_stream("0,0,0,1,1", Some(5)).unwrap();
        assert_eq!(g.snapshot(0, 0).node_count(), 5);
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = parse_edge_stream("0,0,2,2,1\n0,0,0,1,1", None).unwrap();
        assert_eq!(g.snapshot(0, 0).edge_count(), 1);
        assert_eq!(g.snapshot(0, 0).node_count(), 3);
    }

    #[test]
    fn random_file_total_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut text = String::new();
        let mut raw_sum = 0.0;
        for _ in 0..10 {
            let (t, v) = (rng.gen_range(0..3), rng.gen_range(0..2));
            let a = rng.gen_range(0..6);
            let b = (a + rng.gen_range(1..6)) % 6;
            let w: f64 = rng.gen_range(0.1..5.0);
            raw_sum += w;
            text.push_str(&format!("{t},{v},{a},{b},{w}\n"));
        }
        // independent recomputation straight from the text
        let from_text: f64 = text
            .lines()
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((raw_sum - from_text).abs() < 1e-12);
        let g = parse_edge_stream(&text, None).unwrap();
        assert!((g.total_weight() - from_text).abs() < 1e-9);
    }

    #[test]
    fn k2_laplacians() {
        let l = unnormalized_laplacian(&k2()).to_dense();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let ls = normalized_laplacian(&k2()).to_dense();
        assert_eq!(ls, l);
        let spec = dense_spectrum_oracle(&ls).unwrap();
        assert!((spec.values()[0] - 2.0).abs() < 1e-12 && spec.values()[1].abs() < 1e-12);
    }

    #[test]
    fn empty_graph_laplacian_is_zero() {
        let l = unnormalized_laplacian(&GraphSnapshot::empty(3)).to_dense();
        assert_eq!(l, DMatrix::zeros(3, 3));
    }

    #[test]
    fn k4_normalized_spectrum() {
        let edges = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j, 1.0)));
        let g = GraphSnapshot::from_edges(4, edges).unwrap();
        let spec = dense_spectrum_oracle(&normalized_laplacian(&g).to_dense()).unwrap();
        let expected = [4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 0.0];
        for (a, b) in spec.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn isolated_node_has_zero_row() {
        let g = GraphSnapshot::from_edges(3, [(0, 1, 2.0)]).unwrap();
        let ls = normalized_laplacian(&g).to_dense();
        for k in 0..3 {
            assert_eq!(ls[(2, k)], 0.0);
            assert_eq!(ls[(k, 2)], 0.0);
        }
        assert_eq!(ls[(0, 0)], 1.0);
    }

    #[test]
    fn round_trip_preserves_total_weight() {
        let g = parse_edge_stream("0,0,0,1,1.5\n1,1,2,3,0.25\n1,0,3,1,2", None).unwrap();
        let mut buf = Vec::new();
        write_edge_stream(&g, &header_for(&g, false), &mut buf).unwrap();
        let back = parse_edge_stream(std::str::from_utf8(&buf).unwrap(), None).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.total_weight(), g.total_weight());
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> GraphSnapshot {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    let w = if weighted { rng.gen_range(0.1..3.0) } else { 1.0 };
                    edges.push((i, j, w));
                }
            }
        }
        GraphSnapshot::from_edges(n, edges).unwrap()
    }

    fn count_components(g: &GraphSnapshot) -> usize {
        let adj = g.neighbors();
        let mut seen = vec![false; g.node_count()];
        let mut count = 0;
        for s in 0..g.node_count() {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn zero_multiplicity_equals_component_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let n = 2 + trial % 11;
            let g = random_graph(&mut rng, n, 0.25, trial % 2 == 0);
            let spec = dense_spectrum_oracle(&unnormalized_laplacian(&g).to_dense()).unwrap();
            let zeros = spec.values().iter().filter(|v| v.abs() < 1e-9).count();
            assert_eq!(zeros, count_components(&g), "trial {trial}");
        }
    }

    #[test]
    fn oversized_grids_are_rejected() {
        let far = format!("{},0,0,1,1\n", usize::MAX);
        assert!(matches!(parse_edge_stream(&far, None), Err(Error::Validation(_))));
        assert!(parse_edge_stream("#@ steps=5000 views=5000\n", None).is_err());
        let wide = format!("0,0,0,{},1\n", usize::MAX);
        assert!(parse_edge_stream(&wide, None).is_err());
        let heavy = format!("0,0,0,1,{}\n0,0,1,0,{}\n", f64::MAX, f64::MAX);
        assert!(parse_edge_stream(&heavy, None).is_err());
    }

    proptest! {
        #[test]
        fn laplacian_symmetric_with_zero_row_sums(seed in any::<u64>(), n in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, n, 0.3, true);
            let l = unnormalized_laplacian(&g);
            prop_assert!(l.asymmetry() <= 1e-10);
            for i in 0..n {
                let s: f64 = l.row(i).map(|(_, v)| v).sum();
                prop_assert!(s.abs() <= 1e-10);
            }
        }

        #[test]
        fn normalized_spectrum_in_unit_interval(seed in any::<u64>(), n in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, n, 0.3, true);
            let spec = dense_spectrum_oracle(&normalized_laplacian(&g).to_dense()).unwrap();
            for &v in spec.values() {
                prop_assert!((0.0..=2.0 + 1e-9).contains(&v));
            }
        }
    }
}
