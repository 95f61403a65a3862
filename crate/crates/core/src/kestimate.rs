//! Estimating the number of authorial clusters.
//!
//! G-means and the Gap statistic are combined for the unsupervised variant;
//! the semi-supervised variant grid-searches k with COP-KMeans and keeps the k
//! minimizing DBI * k. Every distance here is the cosine distance
//! `1 - x.y` between unit vectors.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::cluster::{
    spherical_centroid, spherical_kmeans_from, Clustering, CopKMeans, CopOutcome, SphericalKMeans,
};
use crate::constraints::{check_feasible, ConstraintSet};
use crate::error::{Error, Result};
use crate::seed;

pub const GMEANS_SIGNIFICANCE: f64 = 1e-4;
/// Clusters smaller than this are never split by G-means.
pub const GMEANS_MIN_SPLIT: usize = 8;
pub const GAP_REFERENCES: usize = 10;
pub const GAP_K_CAP: usize = 10;
/// Restarts for every spherical k-means fit made by the estimators.
pub const ESTIMATOR_N_INIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gmeans,
    Gap,
    Intrinsic,
    Averaged,
    ConstrainedGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntrinsicMetric {
    Silhouette,
    CalinskiHarabasz,
    DaviesBouldin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KEstimate {
    pub k: usize,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    Gmeans {
        rounds: usize,
    },
    Gap(GapCurve),
    Intrinsic(IntrinsicScores),
    Averaged {
        gmeans: usize,
        gap: usize,
        gap_curve: GapCurve,
    },
    /// Carries the winning COP-KMeans clustering so callers need not refit.
    ConstrainedGrid {
        report: GridReport,
        clustering: Clustering,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub ks: Vec<usize>,
    pub log_wk: Vec<f64>,
    pub expected_log_wk: Vec<f64>,
    pub gap: Vec<f64>,
    pub s: Vec<f64>,
    pub b_refs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicTriple {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntrinsicScores {
    pub per_k: BTreeMap<usize, IntrinsicTriple>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridReport {
    /// k -> DBI * k for every k where COP-KMeans succeeded
    pub dbi_k: BTreeMap<usize, f64>,
    /// ks for which COP-KMeans (or the feasibility screen) failed
    pub failed: Vec<usize>,
}

fn cos_dist(data: ArrayView2<'_, f64>, a: usize, b: usize) -> f64 {
    (1.0 - data.row(a).dot(&data.row(b))).max(0.0)
}

fn check_labels(data: ArrayView2<'_, f64>, clustering: &Clustering) -> Result<()> {
    if clustering.len() != data.nrows() {
        return Err(Error::SizeMismatch {
            expected: data.nrows(),
            actual: clustering.len(),
        });
    }
    if clustering.k() < 2 {
        return Err(Error::SingleCluster);
    }
    Ok(())
}

/// Mean silhouette with cosine distance; points in singleton clusters
/// contribute 0.
pub fn silhouette(data: ArrayView2<'_, f64>, clustering: &Clustering) -> Result<f64> {
    check_labels(data, clustering)?;
    let n = data.nrows();
    let k = clustering.k();
    let labels = clustering.labels();
    let sizes = clustering.sizes();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        if sizes[labels[i]] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[labels[j]] += cos_dist(data, i, j);
            }
        }
        let own = labels[i];
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

fn cluster_centroids(data: ArrayView2<'_, f64>, clustering: &Clustering) -> Vec<ndarray::Array1<f64>> {
    clustering
        .members()
        .iter()
        .map(|m| spherical_centroid(data, m).unwrap_or_else(|| data.row(m[0]).to_owned()))
        .collect()
}

/// Calinski-Harabasz with spherical centroids and cosine dispersion.
pub fn calinski_harabasz(data: ArrayView2<'_, f64>, clustering: &Clustering) -> Result<f64> {
    check_labels(data, clustering)?;
    let n = data.nrows();
    let k = clustering.k();
    let centroids = cluster_centroids(data, clustering);
    let all: Vec<usize> = (0..n).collect();
    let overall = spherical_centroid(data, &all).unwrap_or_else(|| centroids[0].clone());
    let within: f64 = clustering
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| (1.0 - data.row(i).dot(&centroids[l])).max(0.0))
        .sum();
    let between: f64 = clustering
        .sizes()
        .iter()
        .zip(&centroids)
        .map(|(&s, c)| s as f64 * (1.0 - c.dot(&overall)).max(0.0))
        .sum();
    if n == k || within == 0.0 {
        return Ok(if between > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Davies-Bouldin with spherical centroids and cosine distance. Pairs of
/// coincident zero-scatter clusters contribute 0.
pub fn davies_bouldin(data: ArrayView2<'_, f64>, clustering: &Clustering) -> Result<f64> {
    check_labels(data, clustering)?;
    let k = clustering.k();
    let centroids = cluster_centroids(data, clustering);
    let members = clustering.members();
    let scatter: Vec<f64> = members
        .iter()
        .zip(&centroids)
        .map(|(m, c)| {
            m.iter()
                .map(|&i| (1.0 - data.row(i).dot(c)).max(0.0))
                .sum::<f64>()
                / m.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = (1.0 - centroids[i].dot(&centroids[j])).max(0.0);
            let spread = scatter[i] + scatter[j];
            let r = if spread == 0.0 {
                0.0
            } else if sep == 0.0 {
                f64::INFINITY
            } else {
                spread / sep
            };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

pub fn intrinsic_score(
    data: ArrayView2<'_, f64>,
    clustering: &Clustering,
    metric: IntrinsicMetric,
) -> Result<f64> {
    match metric {
        IntrinsicMetric::Silhouette => silhouette(data, clustering),
        IntrinsicMetric::CalinskiHarabasz => calinski_harabasz(data, clustering),
        IntrinsicMetric::DaviesBouldin => davies_bouldin(data, clustering),
    }
}

/// Scores every k in `ks` (each >= 2) with spherical k-means and returns the
/// k optimizing `metric`.
pub fn estimate_k_intrinsic(
    data: ArrayView2<'_, f64>,
    ks: std::ops::RangeInclusive<usize>,
    metric: IntrinsicMetric,
    seed: u64,
) -> Result<KEstimate> {
    let mut scores = IntrinsicScores::default();
    let mut best: Option<(usize, f64)> = None;
    for k in ks {
        if k < 2 || k > data.nrows() {
            continue;
        }
        let (c, _) = SphericalKMeans::new(k)
            .with_n_init(ESTIMATOR_N_INIT)
            .fit(data, seed::derive_indexed(seed, "intrinsic", k))?;
        if c.k() < 2 {
            continue;
        }
        let triple = IntrinsicTriple {
            silhouette: silhouette(data, &c)?,
            calinski_harabasz: calinski_harabasz(data, &c)?,
            davies_bouldin: davies_bouldin(data, &c)?,
        };
        // higher is better, so DBI is negated
        let value = match metric {
            IntrinsicMetric::Silhouette => triple.silhouette,
            IntrinsicMetric::CalinskiHarabasz => triple.calinski_harabasz,
            IntrinsicMetric::DaviesBouldin => -triple.davies_bouldin,
        };
        scores.per_k.insert(k, triple);
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((k, value));
        }
    }
    let (k, _) = best.ok_or_else(|| Error::InvalidParameter("no k >= 2 to score".into()))?;
    Ok(KEstimate {
        k,
        method: Method::Intrinsic,
        diagnostics: Diagnostics::Intrinsic(scores),
    })
}

/// Anderson-Darling statistic of standardized samples against N(0, 1),
/// corrected for estimated mean and variance, and its p-value
/// (D'Agostino & Stephens, 1986).
pub fn anderson_darling(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var.is_nan() || var <= 0.0 {
        return None;
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let cdf = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
    let mut s = 0.0;
    for (i, &zi) in z.iter().enumerate() {
        let lo = cdf(zi).clamp(1e-300, 1.0);
        let hi = (1.0 - cdf(z[n - 1 - i])).clamp(1e-300, 1.0);
        s += (2.0 * i as f64 + 1.0) * (lo.ln() + hi.ln());
    }
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Some((a, p.clamp(0.0, 1.0)))
}

/// G-means: grow k from 1, splitting every cluster whose projection onto its
/// two children's axis fails the Anderson-Darling test at `significance`.
pub fn estimate_k_gmeans(data: ArrayView2<'_, f64>, significance: f64, seed: u64) -> Result<KEstimate> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter("G-means needs n >= 2".into()));
    }
    crate::lssr::ensure_unit_rows(data, 1e-8)?;
    let all: Vec<usize> = (0..n).collect();
    let first = spherical_centroid(data, &all).unwrap_or_else(|| data.row(0).to_owned());
    let mut centroids = Array2::zeros((1, data.ncols()));
    centroids.row_mut(0).assign(&first);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let (clustering, model) = spherical_kmeans_from(data, centroids, crate::cluster::DEFAULT_MAX_ITER);
        let k = clustering.k();
        if k >= n {
            return Ok(gmeans_result(n, rounds));
        }
        let mut next: Vec<ndarray::Array1<f64>> = Vec::new();
        let mut split_any = false;
        for (j, members) in clustering.members().iter().enumerate() {
            let parent = model.centroids.row(j).to_owned();
            match try_split(
                data,
                members,
                significance,
                seed::derive(seed, &["gmeans", &rounds.to_string(), &j.to_string()]),
            ) {
                Some((a, b)) if k + next.len() - j < n => {
                    next.push(a);
                    next.push(b);
                    split_any = true;
                }
                _ => next.push(parent),
            }
        }
        if !split_any {
            return Ok(KEstimate {
                k,
                method: Method::Gmeans,
                diagnostics: Diagnostics::Gmeans { rounds },
            });
        }
        let mut c = Array2::zeros((next.len(), data.ncols()));
        for (j, v) in next.iter().enumerate() {
            c.row_mut(j).assign(v);
        }
        centroids = c;
    }
}

fn gmeans_result(k: usize, rounds: usize) -> KEstimate {
    KEstimate {
        k,
        method: Method::Gmeans,
        diagnostics: Diagnostics::Gmeans { rounds },
    }
}

/// Children centroids when the cluster should be split.
fn try_split(
    data: ArrayView2<'_, f64>,
    members: &[usize],
    significance: f64,
    seed: u64,
) -> Option<(ndarray::Array1<f64>, ndarray::Array1<f64>)> {
    if members.len() < GMEANS_MIN_SPLIT {
        return None;
    }
    let mut sub = Array2::zeros((members.len(), data.ncols()));
    for (r, &i) in members.iter().enumerate() {
        sub.row_mut(r).assign(&data.row(i));
    }
    let (children, model) = SphericalKMeans::new(2)
        .with_n_init(3)
        .fit(sub.view(), seed)
        .ok()?;
    if children.k() < 2 {
        return None;
    }
    let axis = &model.centroids.row(0) - &model.centroids.row(1);
    let norm2 = axis.dot(&axis);
    if norm2 == 0.0 {
        return None;
    }
    let proj: Vec<f64> = sub.rows().into_iter().map(|x| x.dot(&axis) / norm2).collect();
    let (_, p) = anderson_darling(&proj)?;
    (p < significance).then(|| {
        (
            model.centroids.row(0).to_owned(),
            model.centroids.row(1).to_owned(),
        )
    })
}

/// Within-cluster dispersion: sum over clusters of pairwise cosine distances
/// divided by twice the cluster size.
pub fn within_dispersion(data: ArrayView2<'_, f64>, clustering: &Clustering) -> f64 {
    clustering
        .members()
        .iter()
        .map(|m| {
            let mut sum = ndarray::Array1::<f64>::zeros(data.ncols());
            for &i in m {
                sum += &data.row(i);
            }
            let size = m.len() as f64;
            // sum_{i,j} (1 - x_i.x_j) = size^2 - |sum|^2 for unit rows
            ((size * size - sum.dot(&sum)).max(0.0)) / (2.0 * size)
        })
        .sum()
}

const LOG_W_FLOOR: f64 = 1e-12;

fn log_w(data: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<f64> {
    let (c, _) = SphericalKMeans::new(k)
        .with_n_init(ESTIMATOR_N_INIT)
        .fit(data, seed)?;
    Ok(within_dispersion(data, &c).max(LOG_W_FLOOR).ln())
}

/// Gap statistic with spherical k-means. Reference sets are uniform in the
/// data's bounding box and projected back onto the unit sphere.
pub fn estimate_k_gap(
    data: ArrayView2<'_, f64>,
    k_max: usize,
    b_refs: usize,
    seed: u64,
) -> Result<KEstimate> {
    let n = data.nrows();
    if k_max < 1 || k_max > n {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} outside [1, {n}]"
        )));
    }
    if b_refs < 1 {
        return Err(Error::InvalidParameter(
            "gap needs at least one reference set".into(),
        ));
    }
    crate::lssr::ensure_unit_rows(data, 1e-8)?;
    let t = data.ncols();
    let lo: Vec<f64> = (0..t)
        .map(|j| data.column(j).fold(f64::INFINITY, |a, &b| a.min(b)))
        .collect();
    let hi: Vec<f64> = (0..t)
        .map(|j| data.column(j).fold(f64::NEG_INFINITY, |a, &b| a.max(b)))
        .collect();

    let mut rng = seed::rng(seed::derive(seed, &["gap", "references"]));
    let mut refs = Vec::with_capacity(b_refs);
    for _ in 0..b_refs {
        refs.push(uniform_reference(n, &lo, &hi, &mut rng));
    }

    let ks: Vec<usize> = (1..=k_max).collect();
    let rows: Vec<(f64, f64, f64)> = ks
        .par_iter()
        .map(|&k| -> Result<(f64, f64, f64)> {
            let lw = log_w(data, k, seed::derive_indexed(seed, "gap-data", k))?;
            let ref_logs: Vec<f64> = refs
                .iter()
                .enumerate()
                .map(|(b, r)| {
                    log_w(
                        r.view(),
                        k,
                        seed::derive(seed, &["gap-ref", &k.to_string(), &b.to_string()]),
                    )
                })
                .collect::<Result<_>>()?;
            let mean = ref_logs.iter().sum::<f64>() / b_refs as f64;
            let sd = (ref_logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / b_refs as f64).sqrt();
            Ok((lw, mean, sd * (1.0 + 1.0 / b_refs as f64).sqrt()))
        })
        .collect::<Result<_>>()?;

    let log_wk: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let expected_log_wk: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let gap: Vec<f64> = expected_log_wk.iter().zip(&log_wk).map(|(e, l)| e - l).collect();
    let chosen = (0..ks.len().saturating_sub(1))
        .find(|&i| gap[i] >= gap[i + 1] - s[i + 1])
        .map_or(k_max, |i| ks[i]);
    Ok(KEstimate {
        k: chosen,
        method: Method::Gap,
        diagnostics: Diagnostics::Gap(GapCurve {
            ks,
            log_wk,
            expected_log_wk,
            gap,
            s,
            b_refs,
        }),
    })
}

fn uniform_reference(n: usize, lo: &[f64], hi: &[f64], rng: &mut seed::Rng) -> Array2<f64> {
    let t = lo.len();
    let mut out = Array2::zeros((n, t));
    for mut row in out.rows_mut() {
        loop {
            for j in 0..t {
                row[j] = if hi[j] > lo[j] {
                    rng.random_range(lo[j]..hi[j])
                } else {
                    lo[j]
                };
            }
            let norm = row.dot(&row).sqrt();
            if norm > 1e-12 {
                row.mapv_inplace(|x| x / norm);
                break;
            }
        }
    }
    out
}

pub fn default_gap_k_max(n: usize) -> usize {
    n.saturating_sub(1).clamp(1, GAP_K_CAP)
}

/// Mean of the two estimates, halves rounded up, clamped to `[2, n]`.
pub fn average_estimates(k_gmeans: usize, k_gap: usize, n: usize) -> usize {
    let k = (k_gmeans + k_gap).div_ceil(2);
    k.clamp(2.min(n), n)
}

/// G-means and Gap, averaged.
pub fn estimate_k_unsupervised(data: ArrayView2<'_, f64>, seed: u64) -> Result<KEstimate> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter("need n >= 2".into()));
    }
    let gm = estimate_k_gmeans(data, GMEANS_SIGNIFICANCE, seed::derive(seed, &["gmeans"]))?;
    let gap = estimate_k_gap(
        data,
        default_gap_k_max(n),
        GAP_REFERENCES,
        seed::derive(seed, &["gap"]),
    )?;
    let curve = match gap.diagnostics {
        Diagnostics::Gap(c) => c,
        _ => unreachable!("gap returns its curve"),
    };
    Ok(KEstimate {
        k: average_estimates(gm.k, gap.k, n),
        method: Method::Averaged,
        diagnostics: Diagnostics::Averaged {
            gmeans: gm.k,
            gap: gap.k,
            gap_curve: curve,
        },
    })
}

/// Grid search over `[2, n-1]` keeping the feasible k with the smallest
/// DBI * k (ties go to the smaller k).
pub fn estimate_k_constrained(
    data: ArrayView2<'_, f64>,
    constraints: &ConstraintSet,
    seed: u64,
) -> Result<KEstimate> {
    let n = data.nrows();
    let (lo, hi) = (2, n.saturating_sub(1));
    if hi < lo {
        return Err(Error::NoFeasibleK { lo, hi });
    }
    let results: Vec<(usize, Option<(f64, Clustering)>)> = (lo..=hi)
        .into_par_iter()
        .map(|k| -> Result<(usize, Option<(f64, Clustering)>)> {
            if !check_feasible(constraints, k, n) {
                return Ok((k, None));
            }
            let out = CopKMeans::new(k).fit(data, constraints, seed::derive_indexed(seed, "cop-grid", k))?;
            Ok(match out {
                CopOutcome::Success(c, _) if c.k() >= 2 => {
                    (k, Some((davies_bouldin(data, &c)? * k as f64, c)))
                }
                _ => (k, None),
            })
        })
        .collect::<Result<_>>()?;
    let mut report = GridReport::default();
    let mut best: Option<(usize, f64, Clustering)> = None;
    for (k, scored) in results {
        match scored {
            Some((s, c)) => {
                report.dbi_k.insert(k, s);
                if best.as_ref().is_none_or(|(_, b, _)| s < *b) {
                    best = Some((k, s, c));
                }
            }
            None => report.failed.push(k),
        }
    }
    let (k, _, clustering) = best.ok_or(Error::NoFeasibleK { lo, hi })?;
    Ok(KEstimate {
        k,
        method: Method::ConstrainedGrid,
        diagnostics: Diagnostics::ConstrainedGrid { report, clustering },
    })
}
