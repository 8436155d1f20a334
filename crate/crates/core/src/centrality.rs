//! Layer centralities: juxtaposed (Perron vector of the interlayer density
//! matrix) and superimposed (dominant eigenpair of the covariance of walker
//! exposures), on top of a small power-iteration solver.
//!
//! Every reduction inside the solver sums its terms in sorted order, which
//! makes results exactly equivariant under a permutation of the layers.

use std::fmt::Write as _;

use serde::Serialize;

use crate::measures::DensityMatrix;
use crate::model::MultilayerStreamGraph;
use crate::output::{csv_field, fmt_num};
use crate::par::Execution;
use crate::walks::{layer_exposure_with, ExposureMatrix, StartScheme, WalkPolicy};

#[derive(Debug, thiserror::Error)]
pub enum CentralityError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not symmetric at ({i}, {j})")]
    NonSymmetric { i: usize, j: usize },
    #[error("matrix has a negative entry at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("matrix has a non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("power iteration did not converge within {max_iter} iterations (last eigenvalue estimate {})", last.value)]
    NotConverged { max_iter: usize, last: Box<Eigenpair> },
    #[error("density matrix is identically zero")]
    ZeroMatrix,
    #[error("covariance needs at least 2 rows, got {0}")]
    InsufficientRows(usize),
    #[error("no layer carries any link")]
    NoLayers,
    #[error("invalid walk policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit norm, largest-magnitude entry positive.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `‖Mv − λv‖₂`.
    pub residual: f64,
}

fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64], buf: &mut Vec<f64>) -> Vec<f64> {
    m.iter()
        .map(|row| {
            buf.clear();
            buf.extend(row.iter().zip(v).map(|(a, b)| a * b));
            sorted_sum(buf)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64], buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(a.iter().zip(b).map(|(x, y)| x * y));
    sorted_sum(buf)
}

fn norm(v: &[f64], buf: &mut Vec<f64>) -> f64 {
    dot(v, v, buf).sqrt()
}

fn residual(mv: &[f64], v: &[f64], lambda: f64, buf: &mut Vec<f64>) -> f64 {
    let r: Vec<f64> = mv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
    norm(&r, buf)
}

fn sign_normalize(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let top: Vec<f64> = v.iter().copied().filter(|x| x.abs() == max).collect();
    let positive = if top.iter().all(|&x| x >= 0.0) {
        true
    } else if top.iter().all(|&x| x <= 0.0) {
        false
    } else {
        let mut all = v.to_vec();
        sorted_sum(&mut all) >= 0.0
    };
    if !positive {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_square(m: &[Vec<f64>]) -> Result<usize, CentralityError> {
    let n = m.len();
    if n == 0 {
        return Err(CentralityError::Empty);
    }
    if m.iter().any(|r| r.len() != n) {
        return Err(CentralityError::NotSquare);
    }
    for (i, row) in m.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(CentralityError::NonFinite { i, j });
            }
        }
    }
    Ok(n)
}

fn check_symmetric(m: &[Vec<f64>]) -> Result<(), CentralityError> {
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let (a, b) = (m[i][j], m[j][i]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(CentralityError::NonSymmetric { i, j });
            }
        }
    }
    Ok(())
}

fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()))
}

// Power iteration on M + shift·I, Rayleigh quotients taken on M.
fn power_iterate(
    m: &[Vec<f64>],
    start: Vec<f64>,
    shift: f64,
    opts: SolverOptions,
) -> Result<Option<Eigenpair>, CentralityError> {
    let mut buf = Vec::with_capacity(m.len());
    let res_tol = opts.tol * max_abs(m).max(1.0);
    let n0 = norm(&start, &mut buf);
    let mut v: Vec<f64> = start.iter().map(|x| x / n0).collect();
    let mut mv = mat_vec(m, &v, &mut buf);
    let mut lambda = dot(&v, &mv, &mut buf);
    let mut res = residual(&mv, &v, lambda, &mut buf);
    for it in 1..=opts.max_iter {
        let w: Vec<f64> = mv.iter().zip(&v).map(|(a, b)| a + shift * b).collect();
        let nw = norm(&w, &mut buf);
        if nw == 0.0 {
            // start vector lies in the null space of M + shift·I
            return Ok(None);
        }
        v = w.iter().map(|x| x / nw).collect();
        mv = mat_vec(m, &v, &mut buf);
        let next = dot(&v, &mv, &mut buf);
        res = residual(&mv, &v, next, &mut buf);
        let delta = (next - lambda).abs();
        lambda = next;
        if delta < opts.tol && res < res_tol {
            log::debug!("power iteration converged after {it} iterations, residual {res:e}");
            sign_normalize(&mut v);
            return Ok(Some(Eigenpair {
                value: lambda,
                vector: v,
                iterations: it,
                residual: res,
            }));
        }
    }
    sign_normalize(&mut v);
    Err(CentralityError::NotConverged {
        max_iter: opts.max_iter,
        last: Box::new(Eigenpair {
            value: lambda,
            vector: v,
            iterations: opts.max_iter,
            residual: res,
        }),
    })
}

/// Dominant eigenpair of a symmetric non-negative matrix by power iteration
/// from the all-ones vector. The iteration runs on `M + s·I` with `s` half the
/// largest row sum, which removes the `−ρ` eigenvalue that would otherwise
/// make bipartite patterns oscillate; convergence requires successive
/// Rayleigh quotients within `tol` and a residual below `tol` (scaled by
/// the largest entry when it exceeds 1).
pub fn dominant_eigenpair(m: &[Vec<f64>], opts: SolverOptions) -> Result<Eigenpair, CentralityError> {
    let n = check_square(m)?;
    check_symmetric(m)?;
    for (i, row) in m.iter().enumerate() {
        if let Some(j) = row.iter().position(|&x| x < 0.0) {
            return Err(CentralityError::NegativeEntry { i, j });
        }
    }
    let mut buf = Vec::new();
    let max_row = m
        .iter()
        .map(|r| {
            buf.clear();
            buf.extend_from_slice(r);
            sorted_sum(&mut buf)
        })
        .fold(0.0f64, f64::max);
    match power_iterate(m, vec![1.0; n], max_row / 2.0, opts)? {
        Some(pair) => Ok(pair),
        // only possible for the zero matrix
        None => {
            let mut v = vec![1.0 / (n as f64).sqrt(); n];
            sign_normalize(&mut v);
            Ok(Eigenpair {
                value: 0.0,
                vector: v,
                iterations: 0,
                residual: 0.0,
            })
        }
    }
}

/// Dominant eigenpair of a symmetric positive semi-definite matrix (entries
/// may be negative). Runs from the all-ones vector and from every basis
/// vector, keeping the largest eigenvalue; the basis vectors span the space,
/// so at least one start has a component along the dominant eigenvector.
pub fn dominant_eigenpair_psd(m: &[Vec<f64>], opts: SolverOptions) -> Result<Eigenpair, CentralityError> {
    let n = check_square(m)?;
    check_symmetric(m)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b][b].total_cmp(&m[a][a]));
    let starts = std::iter::once(vec![1.0; n]).chain(order.into_iter().map(|j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        e
    }));
    let mut best: Option<Eigenpair> = None;
    for start in starts {
        if let Some(pair) = power_iterate(m, start, 0.0, opts)? {
            let scale = pair.value.abs().max(1e-300);
            if best.as_ref().is_none_or(|b| pair.value > b.value + 1e-12 * scale) {
                best = Some(pair);
            }
        }
    }
    Ok(best.unwrap_or_else(|| Eigenpair {
        value: 0.0,
        vector: {
            let mut v = vec![1.0 / (n as f64).sqrt(); n];
            sign_normalize(&mut v);
            v
        },
        iterations: 0,
        residual: 0.0,
    }))
}

/// Σ_X over layers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CovarianceMatrix {
    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|&x| x == 0.0)
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.labels, &self.values)
    }
}

fn matrix_csv(labels: &[String], values: &[Vec<f64>]) -> String {
    let mut out = String::from("layer");
    for l in labels {
        out.push(',');
        out.push_str(&csv_field(l));
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(values) {
        out.push_str(&csv_field(l));
        for &x in row {
            let _ = write!(out, ",{}", fmt_num(x));
        }
        out.push('\n');
    }
    out
}

/// Population covariance of the exposure columns, uniform over rows.
pub fn covariance_of_exposures(x: &ExposureMatrix) -> Result<CovarianceMatrix, CentralityError> {
    covariance(&x.layer_labels, &x.values)
}

pub fn covariance(labels: &[String], rows: &[Vec<f64>]) -> Result<CovarianceMatrix, CentralityError> {
    let n = rows.len();
    if n < 2 {
        return Err(CentralityError::InsufficientRows(n));
    }
    let k = labels.len();
    let mut buf = Vec::with_capacity(n);
    let means: Vec<f64> = (0..k)
        .map(|j| {
            buf.clear();
            buf.extend(rows.iter().map(|r| r[j]));
            sorted_sum(&mut buf) / n as f64
        })
        .collect();
    let mut values = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            buf.clear();
            buf.extend(rows.iter().map(|r| (r[a] - means[a]) * (r[b] - means[b])));
            let c = sorted_sum(&mut buf) / n as f64;
            values[a][b] = c;
            values[b][a] = c;
        }
    }
    Ok(CovarianceMatrix {
        labels: labels.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentralityKind {
    Juxtaposed,
    Superimposed,
}

/// Spread of the superimposed outputs across independent walk batches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSpread {
    pub batches: usize,
    pub walks_per_batch: usize,
    pub eigenvalue_sigma: f64,
    pub score_sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub kind: CentralityKind,
    pub layers: Vec<String>,
    pub scores: Vec<f64>,
    pub dominant_eigenvalue: f64,
    /// Layers by descending score.
    pub ranking: Vec<String>,
    /// 1-based rank of each layer, aligned with `layers`.
    pub ranks: Vec<usize>,
    /// Groups of layers whose scores tie within 1e-12, ordered by name.
    pub ties: Vec<Vec<String>>,
    pub iterations: usize,
    pub residual: f64,
    /// Set when Δ splits into non-interacting blocks; scores in different
    /// blocks are not comparable.
    pub reducible: bool,
    pub blocks: Vec<Vec<String>>,
    /// Set when Σ_X is the zero matrix; all scores are then equal.
    pub degenerate: bool,
    pub spread: Option<BatchSpread>,
}

impl CentralityReport {
    /// `layer,score,rank` rows in ranking order.
    pub fn to_csv(&self) -> String {
        let mut order: Vec<usize> = (0..self.layers.len()).collect();
        order.sort_by_key(|&i| self.ranks[i]);
        let mut out = String::from("layer,score,rank\n");
        for i in order {
            let _ = writeln!(
                out,
                "{},{},{}",
                csv_field(&self.layers[i]),
                fmt_num(self.scores[i]),
                self.ranks[i]
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn score_of(&self, layer: &str) -> Option<f64> {
        self.layers.iter().position(|l| l == layer).map(|i| self.scores[i])
    }
}

pub const TIE_TOLERANCE: f64 = 1e-12;

/// Descending-score ranking with lexicographic tie-break.
/// Returns (ranking, ranks aligned with `labels`, tie groups).
pub fn rank_layers(labels: &[String], scores: &[f64]) -> (Vec<String>, Vec<usize>, Vec<Vec<String>>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| labels[a].cmp(&labels[b])));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if (scores[*g.last().unwrap()] - scores[i]).abs() <= TIE_TOLERANCE => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut ranking = Vec::with_capacity(labels.len());
    let mut ranks = vec![0; labels.len()];
    let mut ties = Vec::new();
    for mut g in groups {
        g.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        if g.len() > 1 {
            ties.push(g.iter().map(|&i| labels[i].clone()).collect());
        }
        for i in g {
            ranking.push(labels[i].clone());
            ranks[i] = ranking.len();
        }
    }
    (ranking, ranks, ties)
}

// Connected components of the positive off-diagonal pattern.
fn blocks(m: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut block = vec![s];
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && j != i && m[i][j] > 0.0 {
                    seen[j] = true;
                    block.push(j);
                    stack.push(j);
                }
            }
        }
        block.sort_unstable();
        out.push(block);
    }
    out
}

/// Perron vector of Δ as per-layer scores. A reducible Δ is split into
/// blocks; each block's unit Perron vector is scaled by `√(|block|/k)`
/// (blocks with a zero eigenvalue score 0) and the result renormalized.
pub fn juxtaposed_centrality(delta: &DensityMatrix, opts: SolverOptions) -> Result<CentralityReport, CentralityError> {
    let m = &delta.values;
    let k = check_square(m)?;
    check_symmetric(m)?;
    for (i, row) in m.iter().enumerate() {
        if let Some(j) = row.iter().position(|&x| x < 0.0) {
            return Err(CentralityError::NegativeEntry { i, j });
        }
    }
    if m.iter().flatten().all(|&x| x == 0.0) {
        return Err(CentralityError::ZeroMatrix);
    }
    let parts = blocks(m);
    let reducible = parts.len() > 1;
    let mut scores = vec![0.0; k];
    let mut value = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut res = 0.0f64;
    if !reducible {
        let pair = dominant_eigenpair(m, opts)?;
        scores = pair.vector;
        value = pair.value;
        iterations = pair.iterations;
        res = pair.residual;
    } else {
        let mut any_zero = false;
        for b in &parts {
            let sub: Vec<Vec<f64>> = b.iter().map(|&i| b.iter().map(|&j| m[i][j]).collect()).collect();
            let pair = dominant_eigenpair(&sub, opts)?;
            value = value.max(pair.value);
            iterations = iterations.max(pair.iterations);
            res = res.max(pair.residual);
            if pair.value <= 0.0 {
                any_zero = true;
                continue;
            }
            let scale = (b.len() as f64 / k as f64).sqrt();
            for (&i, &x) in b.iter().zip(&pair.vector) {
                scores[i] = x * scale;
            }
        }
        if any_zero {
            let mut buf = Vec::new();
            let nrm = norm(&scores, &mut buf);
            scores.iter_mut().for_each(|x| *x /= nrm);
        }
    }
    let (ranking, ranks, ties) = rank_layers(&delta.labels, &scores);
    Ok(CentralityReport {
        kind: CentralityKind::Juxtaposed,
        layers: delta.labels.clone(),
        scores,
        dominant_eigenvalue: value,
        ranking,
        ranks,
        ties,
        iterations,
        residual: res,
        reducible,
        blocks: parts
            .iter()
            .map(|b| b.iter().map(|&i| delta.labels[i].clone()).collect())
            .collect(),
        degenerate: false,
        spread: None,
    })
}

/// Scores and eigenvalue from a covariance matrix; the zero matrix gives
/// equal scores and the degenerate flag.
fn superimposed_scores(cov: &CovarianceMatrix, opts: SolverOptions) -> Result<(Eigenpair, bool), CentralityError> {
    let k = cov.labels.len();
    if cov.is_zero() {
        let v = vec![1.0 / (k as f64).sqrt(); k];
        return Ok((
            Eigenpair {
                value: 0.0,
                vector: v,
                iterations: 0,
                residual: 0.0,
            },
            true,
        ));
    }
    let mut pair = dominant_eigenpair_psd(&cov.values, opts)?;
    pair.vector.iter_mut().for_each(|x| *x = x.abs());
    Ok((pair, false))
}

/// Superimposed centrality of an already computed exposure matrix.
pub fn superimposed_from_exposure(
    x: &ExposureMatrix,
    opts: SolverOptions,
) -> Result<CentralityReport, CentralityError> {
    if x.columns() == 0 {
        return Err(CentralityError::NoLayers);
    }
    let cov = covariance_of_exposures(x)?;
    let (pair, degenerate) = superimposed_scores(&cov, opts)?;
    let (ranking, ranks, ties) = rank_layers(&x.layer_labels, &pair.vector);
    Ok(CentralityReport {
        kind: CentralityKind::Superimposed,
        layers: x.layer_labels.clone(),
        scores: pair.vector,
        dominant_eigenvalue: pair.value,
        ranking,
        ranks,
        ties,
        iterations: pair.iterations,
        residual: pair.residual,
        reducible: false,
        blocks: vec![x.layer_labels.clone()],
        degenerate,
        spread: None,
    })
}

// Seed of batch `b`, decorrelated from the main run.
fn batch_seed(seed: u64, b: usize) -> u64 {
    let mut z = seed ^ (b as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn population_sigma(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mut t = xs.to_vec();
    let mean = sorted_sum(&mut t) / n;
    let mut sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (sorted_sum(&mut sq) / n).sqrt()
}

/// Exposure matrix, Σ_X and its dominant eigenpair. With `batches ≥ 2`, the
/// same pipeline is rerun on that many independent batches of
/// `num_walks / batches` walks and the spread of the outputs is reported.
pub fn superimposed_centrality(
    g: &MultilayerStreamGraph,
    starts: StartScheme,
    policy: &WalkPolicy,
    opts: SolverOptions,
    batches: usize,
    exec: Execution,
) -> Result<CentralityReport, CentralityError> {
    policy.check(g).map_err(CentralityError::InvalidPolicy)?;
    let x = layer_exposure_with(g, starts, policy, exec);
    let mut report = superimposed_from_exposure(&x, opts)?;
    if batches >= 2 {
        let per = (policy.num_walks / batches).max(1);
        let mut values = Vec::with_capacity(batches);
        let mut scores = vec![Vec::with_capacity(batches); report.layers.len()];
        for b in 0..batches {
            let p = WalkPolicy {
                seed: batch_seed(policy.seed, b),
                num_walks: per,
                ..*policy
            };
            let xb = layer_exposure_with(g, starts, &p, exec);
            let (pair, _) = superimposed_scores(&covariance_of_exposures(&xb)?, opts)?;
            values.push(pair.value);
            for (s, v) in scores.iter_mut().zip(pair.vector) {
                s.push(v);
            }
        }
        report.spread = Some(BatchSpread {
            batches,
            walks_per_batch: per,
            eigenvalue_sigma: population_sigma(&values),
            score_sigma: scores.iter().map(|s| population_sigma(s)).collect(),
        });
    }
    Ok(report)
}
