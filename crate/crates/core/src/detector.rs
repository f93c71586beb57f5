//! Single-view detection: one Laplacian spectrum per snapshot, a short and a
//! long sliding window of past spectra, and cosine-distance scores against
//! each window's normal behavior vector.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::graph::{normalized_laplacian, unnormalized_laplacian, GraphSnapshot};
use crate::spectral::{
    dominant_left_singular_vector, l2_normalized, top_k_singular_values, SignatureVector,
    SolverOptions,
};

/// Which Laplacian a signature is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    Unnormalized,
    Normalized,
}

/// Signature length: the whole spectrum or a fixed top-k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignatureSize {
    /// Node count of the smallest snapshot in the sequence.
    Full,
    Top(usize),
}

impl SignatureSize {
    pub fn resolve(self, smallest_snapshot: usize) -> Result<usize> {
        let k = match self {
            SignatureSize::Full => smallest_snapshot,
            SignatureSize::Top(k) => k,
        };
        if k == 0 {
            return Err(invalid("signature length must be at least 1"));
        }
        Ok(k)
    }
}

impl std::str::FromStr for SignatureSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(SignatureSize::Full);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(SignatureSize::Top(k)),
            _ => Err(format!("expected `full` or a positive integer, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DetectorConfig {
    pub short_window: usize,
    pub long_window: usize,
    pub k: SignatureSize,
    pub laplacian: LaplacianKind,
    pub solver: SolverOptions,
    /// Added to every singular value before normalization.
    pub shift: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            short_window: 5,
            long_window: 10,
            k: SignatureSize::Full,
            laplacian: LaplacianKind::Unnormalized,
            solver: SolverOptions::default(),
            shift: 0.0,
        }
    }
}

impl DetectorConfig {
    pub fn normalized() -> Self {
        Self {
            laplacian: LaplacianKind::Normalized,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.short_window == 0 || self.short_window > self.long_window {
            return Err(invalid(format!(
                "windows must satisfy 1 <= w_s <= w_l (got {} and {})",
                self.short_window, self.long_window
            )));
        }
        if let SignatureSize::Top(0) = self.k {
            return Err(invalid("k must be at least 1"));
        }
        if !(self.shift.is_finite() && self.shift >= 0.0) {
            return Err(invalid("shift must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Per-step scores. `z_star` is what rankings use.
#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyScoreSeries {
    pub z_short: Vec<f64>,
    pub z_long: Vec<f64>,
    pub z_star: Vec<f64>,
    /// Steps `t < startup_len` carry no score.
    pub startup_len: usize,
}

impl AnomalyScoreSeries {
    pub fn len(&self) -> usize {
        self.z_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_star.is_empty()
    }

    /// Time steps by descending `z_star`, earlier step first on ties.
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.z_star)
    }

    pub fn top_n(&self, n: usize) -> Vec<usize> {
        let mut r = self.ranking();
        r.truncate(n);
        r
    }

    /// `t,z_short,z_long,z_star` with a header row. Values use Rust's
    /// shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,z_short,z_long,z_star")?;
        for t in 0..self.len() {
            writeln!(
                out,
                "{t},{},{},{}",
                self.z_short[t], self.z_long[t], self.z_star[t]
            )?;
        }
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv). Rows must be in time order
    /// starting at 0; the startup length is recovered as the leading run of
    /// all-zero rows.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut z_short = Vec::new();
        let mut z_long = Vec::new();
        let mut z_star = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            }
            let t: usize = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad time {:?}", fields[0])))?;
            if t != z_star.len() {
                return Err(bad(format!("expected time {}, found {t}", z_star.len())));
            }
            let mut vals = [0.0; 3];
            for (slot, f) in vals.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("bad score {f:?}")))?;
            }
            if vals[2] < 0.0 {
                return Err(bad("z_star must be non-negative".into()));
            }
            z_short.push(vals[0]);
            z_long.push(vals[1]);
            z_star.push(vals[2]);
        }
        if z_star.is_empty() {
            return Err(invalid("score file has no rows"));
        }
        let startup_len = (0..z_star.len())
            .take_while(|&t| z_short[t] == 0.0 && z_long[t] == 0.0 && z_star[t] == 0.0)
            .count();
        Ok(Self {
            z_short,
            z_long,
            z_star,
            startup_len,
        })
    }
}

/// Indices by descending value; ties go to the smaller index.
pub(crate) fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Top-`k` singular values of the configured Laplacian of `g`, zero-padded
/// when the snapshot has fewer than `k` nodes.
pub fn signature_with_k(
    g: &GraphSnapshot,
    kind: LaplacianKind,
    k: usize,
    solver: &SolverOptions,
) -> Result<SignatureVector> {
    let n = g.node_count();
    if n == 0 {
        return SignatureVector::new(vec![0.0; k]);
    }
    let lap = match kind {
        LaplacianKind::Unnormalized => unnormalized_laplacian(g),
        LaplacianKind::Normalized => normalized_laplacian(g),
    };
    let sig = top_k_singular_values(&lap, k.min(n), solver)?;
    Ok(if sig.len() < k { sig.resized(k) } else { sig })
}

/// Signature of one snapshot under `cfg`. `SignatureSize::Full` means this
/// snapshot's node count.
pub fn signature(g: &GraphSnapshot, cfg: &DetectorConfig) -> Result<SignatureVector> {
    let k = cfg.k.resolve(g.node_count())?;
    signature_with_k(g, cfg.laplacian, k, &cfg.solver)
}

/// Raw (unshifted, unnormalized) signatures of a whole view with a common `k`.
pub fn view_signatures(
    view: &[GraphSnapshot],
    kind: LaplacianKind,
    k: usize,
    solver: &SolverOptions,
) -> Result<Vec<SignatureVector>> {
    view.iter()
        .map(|g| signature_with_k(g, kind, k, solver))
        .collect()
}

/// Resolves the signature length for a set of snapshots.
pub fn resolve_k<'a, I>(size: SignatureSize, snapshots: I) -> Result<usize>
where
    I: IntoIterator<Item = &'a GraphSnapshot>,
{
    let smallest = snapshots
        .into_iter()
        .map(GraphSnapshot::node_count)
        .min()
        .ok_or_else(|| invalid("no snapshots"))?;
    size.resolve(smallest)
}

/// `k x l` matrix whose columns are `history[t-l] .. history[t-1]`.
pub fn context_matrix(history: &[Vec<f64>], l: usize, t: usize) -> Result<DMatrix<f64>> {
    if l == 0 {
        return Err(invalid("window length must be at least 1"));
    }
    if t < l || t > history.len() {
        return Err(invalid(format!(
            "need {l} steps of history before t = {t} (have {})",
            history.len().min(t)
        )));
    }
    let k = history[t - l].len();
    if history[t - l..t].iter().any(|v| v.len() != k) {
        return Err(invalid("history vectors differ in length"));
    }
    Ok(DMatrix::from_fn(k, l, |i, j| history[t - l + j][i]))
}

/// Normal behavior vector: the dominant left singular vector of the context.
pub fn normal_behavior(c: &DMatrix<f64>) -> Result<DVector<f64>> {
    dominant_left_singular_vector(c)
}

/// `Z = 1 - sigᵀ normal` for unit vectors. A zero `sig` (empty graph)
/// scores 1.
pub fn z_score(sig: &[f64], normal: &[f64]) -> Result<f64> {
    if sig.len() != normal.len() {
        return Err(invalid("signature and normal vector differ in length"));
    }
    let unit = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= 1e-6;
    let sig_zero = sig.iter().all(|x| *x == 0.0);
    if !unit(normal) || !(sig_zero || unit(sig)) {
        return Err(invalid("z score inputs must be unit vectors"));
    }
    let dot: f64 = sig.iter().zip(normal).map(|(a, b)| a * b).sum();
    Ok(1.0 - dot)
}

/// Z of `sig` against context `c`. A context of empty graphs has no normal
/// direction: an empty `sig` matches it (0), anything else scores 1.
pub(crate) fn score_against(sig: &[f64], c: &DMatrix<f64>) -> Result<f64> {
    match normal_behavior(c) {
        Ok(normal) => z_score(sig, normal.as_slice()),
        Err(Error::Degenerate(_)) if sig.iter().all(|x| *x == 0.0) => Ok(0.0),
        Err(Error::Degenerate(_)) => Ok(1.0),
        Err(e) => Err(e),
    }
}

fn window_scores(vectors: &[Vec<f64>], l: usize, first: usize) -> Result<Vec<f64>> {
    let mut z = vec![0.0; vectors.len()];
    for t in first..vectors.len() {
        let c = context_matrix(vectors, l, t)?;
        z[t] = score_against(&vectors[t], &c)?;
    }
    Ok(z)
}

/// Positive part of the step-to-step increase; zero before `first + 1`.
fn positive_increase(z: &[f64], first: usize) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    for t in first + 1..z.len() {
        out[t] = (z[t] - z[t - 1]).max(0.0);
    }
    out
}

/// Dual-window scoring of a sequence of unit (or zero) vectors.
///
/// Both windows are scored from `t = w_l` on. Differencing starts one step
/// later, so `z_star` is zero for `t <= w_l` and `startup_len = w_l + 1`.
pub fn score_vectors(
    vectors: &[Vec<f64>],
    short_window: usize,
    long_window: usize,
) -> Result<AnomalyScoreSeries> {
    if short_window == 0 || short_window > long_window {
        return Err(invalid("windows must satisfy 1 <= w_s <= w_l"));
    }
    if vectors.len() <= long_window {
        return Err(invalid(format!(
            "sequence of {} steps is too short for a long window of {long_window}",
            vectors.len()
        )));
    }
    let z_short = window_scores(vectors, short_window, long_window)?;
    let z_long = if short_window == long_window {
        z_short.clone()
    } else {
        window_scores(vectors, long_window, long_window)?
    };
    let s = positive_increase(&z_short, long_window);
    let l = positive_increase(&z_long, long_window);
    let z_star = s.iter().zip(&l).map(|(a, b)| a.max(*b)).collect();
    Ok(AnomalyScoreSeries {
        z_short,
        z_long,
        z_star,
        startup_len: long_window + 1,
    })
}

/// Shifts, normalizes and scores a sequence of signatures.
pub fn score_signatures(
    signatures: &[SignatureVector],
    cfg: &DetectorConfig,
) -> Result<AnomalyScoreSeries> {
    cfg.validate()?;
    let vectors: Vec<Vec<f64>> = signatures
        .iter()
        .map(|s| {
            if cfg.shift == 0.0 {
                s.normalized()
            } else {
                l2_normalized(s.shifted(cfg.shift).values())
            }
        })
        .collect();
    score_vectors(&vectors, cfg.short_window, cfg.long_window)
}

/// Laplacian anomaly detection on one view.
pub fn lad_detect(view: &[GraphSnapshot], cfg: &DetectorConfig) -> Result<AnomalyScoreSeries> {
    cfg.validate()?;
    if view.len() <= cfg.long_window {
        return Err(invalid(format!(
            "need more than {} steps, got {}",
            cfg.long_window,
            view.len()
        )));
    }
    let k = resolve_k(cfg.k, view)?;
    let sigs = view_signatures(view, cfg.laplacian, k, &cfg.solver)?;
    score_signatures(&sigs, cfg)
}
