//! Case-study pipelines: daily density dynamics between juxtaposed groups,
//! class density matrices, and coverage-versus-centrality rank comparison.

use std::fmt::Write as _;

use serde::Serialize;

use crate::centrality::{superimposed_from_exposure, CentralityError, CentralityReport, SolverOptions};
use crate::measures::{density_matrix_with, density_stream, interlayer_density, Density, DensityMatrix, MeasureError};
use crate::model::{LayerId, MultilayerStreamGraph};
use crate::output::{csv_field, fmt_num};
use crate::par::Execution;
use crate::projections::{aggregated_stream, collapse_aspects, filter_layers, time_window, ProjectionError};
use crate::time::{Instant, Interval};
use crate::walks::{layer_coverage_with, layer_exposure_with, ExposureMatrix, StartScheme, WalkPolicy};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("graph has no aspect named {0:?}")]
    MissingAspect(String),
    #[error("aspect {aspect:?} has no elementary layer {value:?}")]
    MissingLayer { aspect: String, value: String },
    #[error("rank comparison needs at least two layers, found {0}")]
    FewerThanTwoLayers(usize),
    #[error("window length must be positive")]
    InvalidWindow,
    #[error("at least one seed is required")]
    NoSeeds,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Centrality(#[from] CentralityError),
}

/// Keeps only the layers whose coordinate on `aspect` is `value`.
pub fn restrict_to(
    g: &MultilayerStreamGraph,
    aspect: &str,
    value: &str,
) -> Result<MultilayerStreamGraph, AnalysisError> {
    let idx = g
        .space()
        .aspect_index(aspect)
        .ok_or_else(|| AnalysisError::MissingAspect(aspect.into()))?;
    let pos = g.aspects()[idx]
        .position(value)
        .ok_or_else(|| AnalysisError::MissingLayer {
            aspect: aspect.into(),
            value: value.into(),
        })?;
    Ok(filter_layers(g, |l| g.space().coordinate(l, idx) == pos))
}

/// Consecutive closed windows `[origin + kW, origin + (k+1)W]` covering the
/// study interval from `origin` on.
pub fn windows(study: Interval, origin: Instant, length: i64) -> Result<Vec<Interval>, AnalysisError> {
    if length <= 0 {
        return Err(AnalysisError::InvalidWindow);
    }
    let mut out = Vec::new();
    let mut start = origin.0;
    while start < study.end.0 || (out.is_empty() && start <= study.end.0) {
        let end = start + length;
        if end >= study.start.0 {
            out.push(Interval::closed(start, end));
        }
        start = end;
    }
    Ok(out)
}

/// Start of the day containing `t`, for `day` ticks per day.
pub fn floor_to(t: Instant, day: i64) -> Instant {
    Instant(t.0.div_euclid(day) * day)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub window: Interval,
    /// `intra_<x>` for each group, then `inter_<x><y>` for each pair.
    pub values: Vec<(String, Density)>,
    pub global: Density,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityDynamics {
    pub aspect: String,
    pub rows: Vec<DensityRow>,
}

impl DensityDynamics {
    pub fn columns(&self) -> Vec<String> {
        self.rows
            .first()
            .map(|r| r.values.iter().map(|(n, _)| n.clone()).collect())
            .unwrap_or_default()
    }

    /// `day,window_start,window_end,<columns>,global,empty_denominators`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("day,window_start,window_end");
        for c in self.columns() {
            let _ = write!(out, ",{}", csv_field(&c));
        }
        out.push_str(",global,empty_denominators\n");
        for (day, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{},{},{}", day + 1, row.window.start, row.window.end);
            let mut empty = Vec::new();
            for (name, d) in &row.values {
                let _ = write!(out, ",{}", fmt_num(d.value()));
                if d.empty_denominator() {
                    empty.push(name.as_str());
                }
            }
            if row.global.empty_denominator() {
                empty.push("global");
            }
            let _ = writeln!(out, ",{},{}", fmt_num(row.global.value()), csv_field(&empty.join(";")));
        }
        out
    }
}

/// Densities inside and between the groups of a juxtaposed aspect over
/// consecutive windows. With `interaction = Some((aspect, value))` the graph
/// is first restricted to that interaction layer; the remaining aspects are
/// then collapsed onto `aspect`. `global` is the density of the aggregated
/// stream of the restricted window graph.
pub fn density_dynamics(
    g: &MultilayerStreamGraph,
    aspect: &str,
    interaction: Option<(&str, &str)>,
    origin: Instant,
    window: i64,
) -> Result<DensityDynamics, AnalysisError> {
    if g.space().aspect_index(aspect).is_none() {
        return Err(AnalysisError::MissingAspect(aspect.into()));
    }
    let base = match interaction {
        Some((a, v)) => restrict_to(g, a, v)?,
        None => g.clone(),
    };
    let mut rows = Vec::new();
    for w in windows(g.study_interval(), origin, window)? {
        let day = time_window(&base, w);
        let collapsed = collapse_aspects(&day, &[aspect])?;
        let groups = &collapsed.aspects()[0].elementary_layers;
        let ids: Vec<LayerId> = collapsed.space().ids().collect();
        let mut values = Vec::new();
        for (i, &a) in ids.iter().enumerate() {
            values.push((format!("intra_{}", groups[i]), interlayer_density(&collapsed, a, a)?));
        }
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let name = format!("inter_{}{}", groups[i], groups[j]);
                values.push((name, interlayer_density(&collapsed, ids[i], ids[j])?));
            }
        }
        let global = density_stream(&aggregated_stream(&day));
        rows.push(DensityRow {
            window: w,
            values,
            global,
        });
    }
    Ok(DensityDynamics {
        aspect: aspect.into(),
        rows,
    })
}

/// `Δ` over the elementary layers of `aspect`, in aspect order, after the
/// optional interaction restriction and collapse.
pub fn class_matrix(
    g: &MultilayerStreamGraph,
    aspect: &str,
    interaction: Option<(&str, &str)>,
    exec: Execution,
) -> Result<DensityMatrix, AnalysisError> {
    if g.space().aspect_index(aspect).is_none() {
        return Err(AnalysisError::MissingAspect(aspect.into()));
    }
    let base = match interaction {
        Some((a, v)) => restrict_to(g, a, v)?,
        None => g.clone(),
    };
    let collapsed = collapse_aspects(&base, &[aspect])?;
    let ids: Vec<LayerId> = collapsed.space().ids().collect();
    Ok(density_matrix_with(&collapsed, &ids, exec)?)
}

/// Ranks with 1 for the largest value; ties share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks. `NaN` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "paired samples");
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankComparison {
    pub layers: Vec<String>,
    pub coverage: Vec<f64>,
    pub coverage_rank: Vec<f64>,
    pub centrality: Vec<f64>,
    pub centrality_rank: Vec<f64>,
    pub rho: f64,
    pub seeds: Vec<u64>,
    pub report: CentralityReport,
}

impl RankComparison {
    /// `layer,coverage,coverage_rank,centrality,centrality_rank`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,coverage,coverage_rank,centrality,centrality_rank\n");
        for i in 0..self.layers.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&self.layers[i]),
                fmt_num(self.coverage[i]),
                fmt_num(self.coverage_rank[i]),
                fmt_num(self.centrality[i]),
                fmt_num(self.centrality_rank[i]),
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        format!("layers,spearman_rho\n{},{}\n", self.layers.len(), fmt_num(self.rho))
    }
}

/// Element-wise mean of exposure matrices computed with the same graph and
/// policy under different seeds.
pub fn mean_exposure(runs: &[ExposureMatrix]) -> ExposureMatrix {
    let mut out = runs[0].clone();
    let n = runs.len() as f64;
    for (i, row) in out.values.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let mut col: Vec<f64> = runs.iter().map(|r| r.values[i][j]).collect();
            col.sort_unstable_by(f64::total_cmp);
            *x = col.iter().sum::<f64>() / n;
        }
    }
    out
}

/// Coverage of each layer against its superimposed centrality score, both
/// averaged over `seeds`. `policy.num_walks` is per start node for exposure;
/// coverage draws the same total, `num_walks` times the node count.
pub fn rank_compare(
    g: &MultilayerStreamGraph,
    starts: StartScheme,
    policy: &WalkPolicy,
    seeds: &[u64],
    opts: SolverOptions,
    exec: Execution,
) -> Result<RankComparison, AnalysisError> {
    if seeds.is_empty() {
        return Err(AnalysisError::NoSeeds);
    }
    policy
        .check(g)
        .map_err(|e| AnalysisError::Centrality(CentralityError::InvalidPolicy(e)))?;
    let k = g.layers_in_use().len();
    if k < 2 {
        return Err(AnalysisError::FewerThanTwoLayers(k));
    }
    let runs: Vec<ExposureMatrix> = seeds
        .iter()
        .map(|&seed| layer_exposure_with(g, starts, &WalkPolicy { seed, ..*policy }, exec))
        .collect();
    let exposure = mean_exposure(&runs);
    let report = superimposed_from_exposure(&exposure, opts)?;
    let mut coverage = vec![0.0; k];
    for &seed in seeds {
        let total = policy.num_walks * g.node_count();
        let c = layer_coverage_with(
            g,
            starts,
            &WalkPolicy {
                seed,
                num_walks: total,
                ..*policy
            },
            exec,
        );
        for (acc, x) in coverage.iter_mut().zip(c.raw) {
            *acc += x;
        }
    }
    coverage.iter_mut().for_each(|x| *x /= seeds.len() as f64);
    let centrality = report.scores.clone();
    Ok(RankComparison {
        layers: report.layers.clone(),
        coverage_rank: average_ranks(&coverage),
        centrality_rank: average_ranks(&centrality),
        rho: spearman(&coverage, &centrality),
        coverage,
        centrality,
        seeds: seeds.to_vec(),
        report,
    })
}
