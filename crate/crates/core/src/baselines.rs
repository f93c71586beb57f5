//! Comparison methods: the activity-vector detector and per-view score
//! aggregation (maxLAD / meanLAD).

use nalgebra::DVector;

use crate::detector::{context_matrix, score_against, AnomalyScoreSeries};
use crate::error::{invalid, Error, Result};
use crate::graph::GraphSnapshot;
use crate::spectral::{fix_sign, lanczos_largest, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregationMode {
    Max,
    Mean,
}

/// Principal eigenvector of the adjacency matrix, unit length, entries
/// summing to a non-negative value.
pub fn activity_vector(g: &GraphSnapshot, solver: &SolverOptions) -> Result<DVector<f64>> {
    if g.is_empty() {
        return Err(Error::Degenerate("activity vector of an empty graph".into()));
    }
    let adjacency = g.adjacency();
    let mut pairs = lanczos_largest(&adjacency, 1, solver)?;
    let mut v = pairs.vectors.swap_remove(0);
    v /= v.norm();
    fix_sign(&mut v);
    Ok(v)
}

/// Activity-vector detection with a single context window of `window` steps.
///
/// Scores start at `t = window`; `z_star` is the positive step increase from
/// `window + 1` on. `z_long` mirrors `z_short`.
pub fn activity_detect(
    view: &[GraphSnapshot],
    window: usize,
    solver: &SolverOptions,
) -> Result<AnomalyScoreSeries> {
    if window == 0 {
        return Err(invalid("window must be at least 1"));
    }
    if view.len() <= window {
        return Err(invalid(format!(
            "need more than {window} steps, got {}",
            view.len()
        )));
    }
    let n = view
        .iter()
        .map(GraphSnapshot::node_count)
        .max()
        .unwrap_or(0);
    let vectors = view
        .iter()
        .map(|g| {
            if g.is_empty() {
                return Ok(vec![0.0; n]);
            }
            let mut v: Vec<f64> = activity_vector(g, solver)?.iter().copied().collect();
            v.resize(n, 0.0);
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut z = vec![0.0; view.len()];
    for t in window..view.len() {
        let c = context_matrix(&vectors, window, t)?;
        z[t] = score_against(&vectors[t], &c)?;
    }
    let mut z_star = vec![0.0; view.len()];
    for t in window + 1..view.len() {
        z_star[t] = (z[t] - z[t - 1]).max(0.0);
    }
    Ok(AnomalyScoreSeries {
        z_long: z.clone(),
        z_short: z,
        z_star,
        startup_len: window + 1,
    })
}

/// Per-step max or mean across views of every score column.
pub fn aggregate_scores(
    per_view: &[AnomalyScoreSeries],
    mode: AggregationMode,
) -> Result<AnomalyScoreSeries> {
    let first = per_view.first().ok_or_else(|| invalid("no series to aggregate"))?;
    let len = first.len();
    if per_view
        .iter()
        .any(|s| s.len() != len || s.z_short.len() != len || s.z_long.len() != len)
    {
        return Err(invalid("score series differ in length"));
    }
    let column = |pick: fn(&AnomalyScoreSeries) -> &[f64]| -> Vec<f64> {
        (0..len)
            .map(|t| {
                let values = per_view.iter().map(|s| pick(s)[t]);
                match mode {
                    AggregationMode::Max => values.fold(f64::NEG_INFINITY, f64::max),
                    AggregationMode::Mean => values.sum::<f64>() / per_view.len() as f64,
                }
            })
            .collect()
    };
    Ok(AnomalyScoreSeries {
        z_short: column(|s| &s.z_short),
        z_long: column(|s| &s.z_long),
        z_star: column(|s| &s.z_star),
        startup_len: per_view.iter().map(|s| s.startup_len).max().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    /// Dominant eigenvector from a dense eigensolver, sign-fixed.
    fn dense_oracle(g: &GraphSnapshot) -> DVector<f64> {
        let eig = g.adjacency_dense().symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let mut v = eig.eigenvectors.column(top).into_owned();
        fix_sign(&mut v);
        v
    }

    #[test]
    fn complete_graph_is_uniform() {
        let n = 7;
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)));
        let g = GraphSnapshot::from_edges(n, edges).unwrap();
        let v = activity_vector(&g, &opts()).unwrap();
        for x in v.iter() {
            assert!((x - 1.0 / (n as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn star_hub_and_leaves() {
        let g = GraphSnapshot::from_edges(6, (1..6).map(|j| (0, j, 1.0))).unwrap();
        let v = activity_vector(&g, &opts()).unwrap();
        let oracle = dense_oracle(&g);
        assert!((v[0] - 0.5f64.sqrt()).abs() < 1e-10);
        for j in 1..6 {
            assert!((v[j] - 0.1f64.sqrt()).abs() < 1e-10);
        }
        assert!((&v - &oracle).amax() < 1e-9);
    }

    #[test]
    fn heavier_component_wins() {
        let g = GraphSnapshot::from_edges(4, [(0, 1, 3.0), (2, 3, 1.0)]).unwrap();
        let v = activity_vector(&g, &opts()).unwrap();
        assert!((&v - &dense_oracle(&g)).amax() < 1e-9);
        assert!(v[0] > 0.7 && v[2].abs() < 1e-9);
    }

    #[test]
    fn empty_graph_is_degenerate() {
        assert!(matches!(
            activity_vector(&GraphSnapshot::empty(4), &opts()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rescaling_weights_keeps_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut edges = Vec::new();
        for i in 0..40 {
            for j in i + 1..40 {
                if rng.gen::<f64>() < 0.2 {
                    edges.push((i, j, rng.gen_range(0.5..2.0)));
                }
            }
        }
        let g = GraphSnapshot::from_edges(40, edges.clone()).unwrap();
        let scaled =
            GraphSnapshot::from_edges(40, edges.iter().map(|&(i, j, w)| (i, j, 3.5 * w))).unwrap();
        let a = activity_vector(&g, &opts()).unwrap();
        let b = activity_vector(&scaled, &opts()).unwrap();
        assert!((&a - &b).amax() < 1e-8);
        assert!((&a - &dense_oracle(&g)).amax() < 1e-8);
    }

    #[test]
    fn constant_sequence_scores_zero() {
        let g = GraphSnapshot::from_edges(5, [(0, 1, 1.0), (1, 2, 2.0), (3, 4, 1.0)]).unwrap();
        let s = activity_detect(&vec![g; 12], 3, &opts()).unwrap();
        assert!(s.z_star.iter().all(|z| z.abs() < 1e-10));
        assert_eq!(s.startup_len, 4);
        assert!(activity_detect(&[GraphSnapshot::empty(2)], 1, &opts()).is_err());
    }

    fn series(z: Vec<f64>) -> AnomalyScoreSeries {
        AnomalyScoreSeries {
            z_short: z.clone(),
            z_long: z.clone(),
            z_star: z,
            startup_len: 0,
        }
    }

    #[test]
    fn aggregation_examples() {
        let a = series(vec![0.0, 0.1, 0.3]);
        let b = series(vec![0.0, 0.9, 0.2]);
        for mode in [AggregationMode::Max, AggregationMode::Mean] {
            assert_eq!(aggregate_scores(std::slice::from_ref(&a), mode).unwrap(), a);
        }
        let max = aggregate_scores(&[a.clone(), b.clone()], AggregationMode::Max).unwrap();
        assert_eq!(max.z_star, vec![0.0, 0.9, 0.3]);
        assert!(aggregate_scores(&[a, series(vec![0.0])], AggregationMode::Mean).is_err());
    }

    #[test]
    fn mean_matches_loop_and_is_below_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let views: Vec<AnomalyScoreSeries> = (0..3)
            .map(|_| series((0..20).map(|_| rng.gen::<f64>()).collect()))
            .collect();
        let mean = aggregate_scores(&views, AggregationMode::Mean).unwrap();
        let max = aggregate_scores(&views, AggregationMode::Max).unwrap();
        for t in 0..20 {
            let mut acc = 0.0;
            for v in &views {
                acc += v.z_star[t];
            }
            assert!((mean.z_star[t] - acc / 3.0).abs() < 1e-15);
            assert!(max.z_star[t] >= mean.z_star[t]);
        }
    }
}
