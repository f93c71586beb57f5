//! Multi-view detection: per-view normalized Laplacian spectra, shifted and
//! merged entrywise with a scalar power mean, then scored with the same
//! dual-window pipeline as the single-view detector.

use std::io::Write;

use rayon::prelude::*;

use crate::detector::{
    resolve_k, score_vectors, view_signatures, AnomalyScoreSeries, DetectorConfig, LaplacianKind,
};
use crate::error::{invalid, Error, Result};
use crate::graph::DynamicGraph;
use crate::spectral::{l2_normalized, SignatureVector};

/// Power `p` of the mean and the diagonal shift applied to every spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerMeanConfig {
    pub p: f64,
    pub epsilon: f64,
}

impl PowerMeanConfig {
    /// `epsilon = ln(1 + |p|)` for negative `p`, zero otherwise.
    pub fn new(p: f64) -> Result<Self> {
        let epsilon = if p < 0.0 { p.abs().ln_1p() } else { 0.0 };
        Self::with_epsilon(p, epsilon)
    }

    pub fn with_epsilon(p: f64, epsilon: f64) -> Result<Self> {
        if p == 0.0 || !p.is_finite() {
            return Err(invalid("power p must be finite and non-zero"));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(invalid("shift must be finite and non-negative"));
        }
        Ok(Self { p, epsilon })
    }
}

impl Default for PowerMeanConfig {
    fn default() -> Self {
        Self::new(-10.0).expect("p = -10 is valid")
    }
}

/// `((1/m) Σ x_i^p)^(1/p)`.
///
/// Identical inputs return that value exactly, and the result is clamped to
/// `[min, max]` of the inputs so rounding never breaks the mean's bounds.
pub fn scalar_power_mean(xs: &[f64], p: f64) -> Result<f64> {
    let first = *xs.first().ok_or_else(|| invalid("power mean of no values"))?;
    if p == 0.0 || !p.is_finite() {
        return Err(invalid("power p must be finite and non-zero"));
    }
    if xs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid("power mean inputs must be finite and non-negative"));
    }
    if p < 0.0 && xs.contains(&0.0) {
        return Err(Error::Domain { p });
    }
    if xs.iter().all(|x| *x == first) {
        return Ok(first);
    }
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let m = xs.len() as f64;
    let mean: f64 = xs.iter().map(|x| x.powf(p)).sum::<f64>() / m;
    let value = if mean.is_finite() && mean > 0.0 {
        mean.powf(1.0 / p)
    } else {
        // x^p left the representable range; rescale by the max
        let scaled: f64 = xs.iter().map(|x| (x / hi).powf(p)).sum::<f64>() / m;
        hi * scaled.powf(1.0 / p)
    };
    Ok(value.clamp(lo, hi))
}

/// Entrywise power mean of already-shifted spectra.
pub fn power_mean_spectrum(
    signatures: &[SignatureVector],
    cfg: &PowerMeanConfig,
) -> Result<SignatureVector> {
    let k = signatures
        .first()
        .ok_or_else(|| invalid("no spectra to aggregate"))?
        .len();
    if signatures.iter().any(|s| s.len() != k) {
        return Err(invalid("spectra differ in length"));
    }
    let mut column = Vec::with_capacity(signatures.len());
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        column.clear();
        column.extend(signatures.iter().map(|s| s.values()[i]));
        out.push(scalar_power_mean(&column, cfg.p)?);
    }
    SignatureVector::new(out)
}

/// Raw per-view spectra, `[view][t]`, of the normalized Laplacian with a
/// shared `k`. Views are computed in parallel.
pub fn per_view_spectra(
    g: &DynamicGraph,
    det: &DetectorConfig,
) -> Result<Vec<Vec<SignatureVector>>> {
    let k = resolve_k(det.k, g.views().iter().flatten())?;
    g.views()
        .par_iter()
        .map(|view| view_signatures(view, LaplacianKind::Normalized, k, &det.solver))
        .collect()
}

/// Aggregated spectrum per time step from raw per-view spectra.
pub fn aggregate_view_spectra(
    per_view: &[Vec<SignatureVector>],
    pm: &PowerMeanConfig,
) -> Result<Vec<SignatureVector>> {
    let steps = per_view
        .first()
        .ok_or_else(|| invalid("no views"))?
        .len();
    if per_view.iter().any(|v| v.len() != steps) {
        return Err(invalid("views differ in length"));
    }
    (0..steps)
        .map(|t| {
            let shifted: Vec<SignatureVector> =
                per_view.iter().map(|v| v[t].shifted(pm.epsilon)).collect();
            power_mean_spectrum(&shifted, pm)
        })
        .collect()
}

/// Scores aggregated spectra with the detector's windows.
pub fn score_aggregated(
    aggregated: &[SignatureVector],
    det: &DetectorConfig,
) -> Result<AnomalyScoreSeries> {
    det.validate()?;
    let vectors: Vec<Vec<f64>> = aggregated.iter().map(|s| l2_normalized(s.values())).collect();
    score_vectors(&vectors, det.short_window, det.long_window)
}

/// Aggregated (shifted, power-mean) spectrum for every time step.
pub fn multilad_spectra(
    g: &DynamicGraph,
    det: &DetectorConfig,
    pm: &PowerMeanConfig,
) -> Result<Vec<SignatureVector>> {
    let per_view = per_view_spectra(g, det)?;
    aggregate_view_spectra(&per_view, pm)
}

/// Multi-view Laplacian anomaly detection.
///
/// Always uses the normalized Laplacian; `det.laplacian` and `det.shift`
/// are ignored in favor of `pm.epsilon`.
pub fn multilad_detect(
    g: &DynamicGraph,
    det: &DetectorConfig,
    pm: &PowerMeanConfig,
) -> Result<AnomalyScoreSeries> {
    det.validate()?;
    if g.num_steps() <= det.long_window {
        return Err(invalid(format!(
            "need more than {} steps, got {}",
            det.long_window,
            g.num_steps()
        )));
    }
    let spectra = multilad_spectra(g, det, pm)?;
    score_aggregated(&spectra, det)
}

/// Writes `t,lambda_1,..,lambda_k` rows of spectra.
pub fn write_spectrum_csv<W: Write>(
    spectra: &[SignatureVector],
    mut out: W,
) -> std::io::Result<()> {
    let k = spectra.first().map_or(0, SignatureVector::len);
    let mut header = String::from("t");
    for i in 1..=k {
        header.push_str(&format!(",lambda_{i}"));
    }
    writeln!(out, "{header}")?;
    for (t, s) in spectra.iter().enumerate() {
        let row: Vec<String> = s.values().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{t},{}", row.join(","))?;
    }
    Ok(())
}
