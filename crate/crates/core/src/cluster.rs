//! Spherical k-means, COP-KMeans and the two naive baselines.
//!
//! All algorithms work on unit-norm rows and use cosine similarity (the dot
//! product) to compare points with centroids. Centroids are normalized means.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng as _;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::lssr::ensure_unit_rows;
use crate::seed::{self, Rng};

const INPUT_NORM_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_COP_RESTARTS: usize = 10;

/// Renumber labels densely in order of first appearance.
pub fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// A hard partition of n documents into k non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: Vec<usize>,
    k: usize,
}

impl Clustering {
    /// Arbitrary labels are renumbered densely by first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let (labels, k) = densify(labels);
        Clustering { labels, k }
    }

    /// Labels already dense in `0..k` with no empty cluster; kept verbatim so
    /// that label `j` keeps matching centroid row `j`.
    fn from_dense(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!({
            let mut seen = vec![false; k];
            labels.iter().for_each(|&l| seen[l] = true);
            seen.into_iter().all(|s| s)
        });
        Clustering { labels, k }
    }

    pub fn singletons(n: usize) -> Self {
        Clustering {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalModel {
    /// k x t unit vectors; row j is the centroid of label j.
    pub centroids: Array2<f64>,
    /// Sum of cosine similarities between points and their centroids.
    pub objective: f64,
    pub iterations_run: usize,
    /// Objective after every iteration.
    pub objective_trace: Vec<f64>,
}

pub(crate) fn normalized(v: Array1<f64>) -> Option<Array1<f64>> {
    let norm = v.dot(&v).sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v / norm)
}

/// Normalized mean of the rows in `members`.
pub(crate) fn spherical_centroid(data: ArrayView2<'_, f64>, members: &[usize]) -> Option<Array1<f64>> {
    let mut sum = Array1::<f64>::zeros(data.ncols());
    for &i in members {
        sum += &data.row(i);
    }
    normalized(sum)
}

fn best_centroid(x: ArrayView1<'_, f64>, centroids: &Array2<f64>, current: Option<usize>) -> usize {
    let mut best = current.unwrap_or(0);
    let mut best_sim = x.dot(&centroids.row(best));
    for (j, c) in centroids.rows().into_iter().enumerate() {
        let s = x.dot(&c);
        if s > best_sim {
            best = j;
            best_sim = s;
        }
    }
    best
}

/// k-means++ seeding with squared cosine distance as the sampling weight.
pub(crate) fn kmeanspp(data: ArrayView2<'_, f64>, k: usize, rng: &mut Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = (0..n)
        .map(|i| (1.0 - data.row(i).dot(&data.row(chosen[0]))).max(0.0))
        .collect();
    while chosen.len() < k {
        let weights: Vec<f64> = dist.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in weights.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            // every point coincides with a centre: draw among the unused
            let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen.push(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min((1.0 - data.row(i).dot(&data.row(next))).max(0.0));
        }
    }
    let mut centroids = Array2::zeros((k, data.ncols()));
    for (j, &i) in chosen.iter().enumerate() {
        centroids.row_mut(j).assign(&data.row(i));
    }
    centroids
}

fn objective(data: ArrayView2<'_, f64>, labels: &[usize], centroids: &Array2<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| data.row(i).dot(&centroids.row(l)))
        .sum()
}

/// Move the worst-fitting point of a multi-point cluster into each empty
/// cluster and seat the empty centroid on it.
fn repair_empty(
    data: ArrayView2<'_, f64>,
    labels: &mut [usize],
    centroids: &mut Array2<f64>,
    can_move: impl Fn(usize) -> bool,
) {
    let k = centroids.nrows();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let mut worst: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 || !can_move(i) {
                continue;
            }
            let s = data.row(i).dot(&centroids.row(l));
            if worst.is_none_or(|(_, ws)| s < ws) {
                worst = Some((i, s));
            }
        }
        if let Some((i, _)) = worst {
            sizes[labels[i]] -= 1;
            sizes[j] += 1;
            labels[i] = j;
            centroids.row_mut(j).assign(&data.row(i));
        }
    }
}

fn update_centroids(data: ArrayView2<'_, f64>, labels: &[usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let mut members = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    for (j, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let c = spherical_centroid(data, m).unwrap_or_else(|| data.row(m[0]).to_owned());
        centroids.row_mut(j).assign(&c);
    }
}

/// Lloyd iterations from the given centroids until assignments stop
/// changing or `max_iter` is reached.
pub fn spherical_kmeans_from(
    data: ArrayView2<'_, f64>,
    mut centroids: Array2<f64>,
    max_iter: usize,
) -> (Clustering, SphericalModel) {
    let n = data.nrows();
    let k = centroids.nrows();
    let mut labels: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let mut next: Vec<usize> = (0..n)
            .map(|i| best_centroid(data.row(i), &centroids, labels.as_ref().map(|l| l[i])))
            .collect();
        repair_empty(data, &mut next, &mut centroids, |_| true);
        update_centroids(data, &next, &mut centroids);
        trace.push(objective(data, &next, &centroids));
        let done = labels.as_ref() == Some(&next);
        labels = Some(next);
        if done {
            break;
        }
    }
    let labels = labels.unwrap_or_default();
    let objective = trace.last().copied().unwrap_or(0.0);
    let (clustering, centroids) = finish(labels, centroids, k);
    (
        clustering,
        SphericalModel {
            centroids,
            objective,
            iterations_run: iterations,
            objective_trace: trace,
        },
    )
}

/// Drop centroids whose cluster ended empty and renumber.
fn finish(labels: Vec<usize>, centroids: Array2<f64>, k: usize) -> (Clustering, Array2<f64>) {
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    if sizes.iter().all(|&s| s > 0) {
        return (Clustering::from_dense(labels, k), centroids);
    }
    let live: Vec<usize> = (0..k).filter(|&j| sizes[j] > 0).collect();
    let mut remap = vec![usize::MAX; k];
    for (new, &old) in live.iter().enumerate() {
        remap[old] = new;
    }
    let mut kept = Array2::zeros((live.len(), centroids.ncols()));
    for (new, &old) in live.iter().enumerate() {
        kept.row_mut(new).assign(&centroids.row(old));
    }
    let labels = labels.into_iter().map(|l| remap[l]).collect();
    (Clustering::from_dense(labels, live.len()), kept)
}

/// Spherical k-means with k-means++ seeding and optional restarts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphericalKMeans {
    pub k: usize,
    pub max_iter: usize,
    /// Independent seedings; the run with the highest objective wins.
    pub n_init: usize,
}

impl SphericalKMeans {
    pub fn new(k: usize) -> Self {
        SphericalKMeans {
            k,
            max_iter: DEFAULT_MAX_ITER,
            n_init: 1,
        }
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init.max(1);
        self
    }

    pub fn fit(&self, data: ArrayView2<'_, f64>, seed: u64) -> Result<(Clustering, SphericalModel)> {
        let n = data.nrows();
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidParameter(format!(
                "k = {} outside [1, {n}]",
                self.k
            )));
        }
        ensure_unit_rows(data, INPUT_NORM_TOLERANCE)?;
        let mut best: Option<(Clustering, SphericalModel)> = None;
        for run in 0..self.n_init {
            let run_seed = if run == 0 {
                seed
            } else {
                seed::derive_indexed(seed, "spkmeans-init", run)
            };
            let mut rng = seed::rng(run_seed);
            let init = kmeanspp(data, self.k, &mut rng);
            let fit = spherical_kmeans_from(data, init, self.max_iter);
            if best.as_ref().is_none_or(|(_, m)| fit.1.objective > m.objective) {
                best = Some(fit);
            }
        }
        Ok(best.expect("n_init >= 1"))
    }
}

/// Single-seeding spherical k-means.
pub fn spherical_kmeans(
    data: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
) -> Result<(Clustering, SphericalModel)> {
    SphericalKMeans::new(k).fit(data, seed)
}

/// Reason a COP-KMeans run could not produce a legal clustering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopFailure {
    /// Document with no legal cluster, or one end of a contradictory pair.
    pub point: usize,
    pub iteration: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CopOutcome {
    Success(Clustering, SphericalModel),
    Failure(CopFailure),
}

impl CopOutcome {
    pub fn clustering(&self) -> Option<&Clustering> {
        match self {
            CopOutcome::Success(c, _) => Some(c),
            CopOutcome::Failure(_) => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, CopOutcome::Failure(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CopKMeans {
    pub k: usize,
    pub max_iter: usize,
    /// Attempts with derived seeds before giving up.
    pub restarts: usize,
}

impl CopKMeans {
    pub fn new(k: usize) -> Self {
        CopKMeans {
            k,
            max_iter: DEFAULT_MAX_ITER,
            restarts: DEFAULT_COP_RESTARTS,
        }
    }

    pub fn fit(
        &self,
        data: ArrayView2<'_, f64>,
        constraints: &ConstraintSet,
        seed: u64,
    ) -> Result<CopOutcome> {
        let n = data.nrows();
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidParameter(format!(
                "k = {} outside [1, {n}]",
                self.k
            )));
        }
        if constraints.n != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: constraints.n,
            });
        }
        ensure_unit_rows(data, INPUT_NORM_TOLERANCE)?;

        let graph = match ConstraintGraph::build(constraints) {
            Ok(g) => g,
            Err(point) => {
                return Ok(CopOutcome::Failure(CopFailure {
                    point,
                    iteration: 0,
                    attempts: 0,
                }))
            }
        };

        let attempts = self.restarts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            let attempt_seed = if attempt == 0 {
                seed
            } else {
                seed::derive_indexed(seed, "cop-restart", attempt)
            };
            match self.attempt(data, &graph, attempt_seed) {
                Ok((clustering, model)) => {
                    debug_assert_eq!(constraints.violations(clustering.labels()), 0);
                    return Ok(CopOutcome::Success(clustering, model));
                }
                Err((point, iteration)) => last = Some((point, iteration)),
            }
        }
        let (point, iteration) = last.expect("at least one attempt");
        Ok(CopOutcome::Failure(CopFailure {
            point,
            iteration,
            attempts,
        }))
    }

    fn attempt(
        &self,
        data: ArrayView2<'_, f64>,
        graph: &ConstraintGraph,
        seed: u64,
    ) -> std::result::Result<(Clustering, SphericalModel), (usize, usize)> {
        let n = data.nrows();
        let k = self.k;
        let mut rng = seed::rng(seed);
        let mut centroids = kmeanspp(data, k, &mut rng);
        let mut prev: Option<Vec<usize>> = None;
        let mut trace = Vec::new();
        let mut iterations = 0;
        let mut order: Vec<(usize, f64)> = Vec::with_capacity(k);
        while iterations < self.max_iter.max(1) {
            iterations += 1;
            let mut labels: Vec<Option<usize>> = vec![None; n];
            for i in 0..n {
                order.clear();
                order.extend(
                    centroids
                        .rows()
                        .into_iter()
                        .enumerate()
                        .map(|(j, c)| (j, data.row(i).dot(&c))),
                );
                order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                let legal = order.iter().map(|&(j, _)| j).find(|&j| {
                    graph.ml[i].iter().all(|&o| labels[o].is_none_or(|l| l == j))
                        && graph.cl[i].iter().all(|&o| labels[o] != Some(j))
                });
                match legal {
                    Some(j) => labels[i] = Some(j),
                    None => return Err((i, iterations)),
                }
            }
            let mut labels: Vec<usize> = labels.into_iter().map(|l| l.expect("assigned")).collect();
            repair_empty(data, &mut labels, &mut centroids, |i| graph.ml[i].is_empty());
            update_centroids(data, &labels, &mut centroids);
            trace.push(objective(data, &labels, &centroids));
            let done = prev.as_ref() == Some(&labels);
            prev = Some(labels);
            if done {
                break;
            }
        }
        let labels = prev.unwrap_or_default();
        let objective = trace.last().copied().unwrap_or(0.0);
        let (clustering, centroids) = finish(labels, centroids, k);
        Ok((
            clustering,
            SphericalModel {
                centroids,
                objective,
                iterations_run: iterations,
                objective_trace: trace,
            },
        ))
    }
}

/// Must-link closure and cannot-link adjacency after propagation through
/// must-link components.
struct ConstraintGraph {
    ml: Vec<Vec<usize>>,
    cl: Vec<Vec<usize>>,
}

impl ConstraintGraph {
    /// Err carries a document whose must-link closure contains a cannot-link.
    fn build(constraints: &ConstraintSet) -> std::result::Result<Self, usize> {
        let n = constraints.n;
        let (comp, n_comp) = constraints.ml_components();
        let mut members = vec![Vec::new(); n_comp];
        for (i, &c) in comp.iter().enumerate() {
            members[c].push(i);
        }
        let ml = (0..n)
            .map(|i| members[comp[i]].iter().copied().filter(|&j| j != i).collect())
            .collect();
        let mut cl_sets = vec![std::collections::BTreeSet::new(); n];
        for &(a, b) in &constraints.cl {
            if comp[a] == comp[b] {
                return Err(a);
            }
            for &x in &members[comp[a]] {
                for &y in &members[comp[b]] {
                    cl_sets[x].insert(y);
                    cl_sets[y].insert(x);
                }
            }
        }
        let cl = cl_sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(ConstraintGraph { ml, cl })
    }
}

pub fn cop_kmeans(
    data: ArrayView2<'_, f64>,
    k: usize,
    constraints: &ConstraintSet,
    seed: u64,
) -> Result<CopOutcome> {
    CopKMeans::new(k).fit(data, constraints, seed)
}

/// Random number of clusters, uniform on `[1, n]`, and uniform random labels.
pub fn baseline_random(n: usize, seed: u64) -> Result<Clustering> {
    if n == 0 {
        return Err(Error::InvalidParameter("baseline needs n >= 1".into()));
    }
    let mut rng = seed::rng(seed);
    let k = rng.random_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    Ok(Clustering::from_labels(&labels))
}

/// Every document in its own cluster.
pub fn baseline_singleton(n: usize) -> Result<Clustering> {
    if n == 0 {
        return Err(Error::InvalidParameter("baseline needs n >= 1".into()));
    }
    Ok(Clustering::singletons(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn one_cluster_closed_form() {
        let data = array![[1.0, 0.0], [0.0, 1.0]];
        let (c, m) = spherical_kmeans(data.view(), 1, 0).unwrap();
        assert_eq!(c.k(), 1);
        assert!((m.centroids[[0, 0]] - R).abs() < 1e-12);
        assert!((m.centroids[[0, 1]] - R).abs() < 1e-12);
        assert!((m.objective - 2.0 * R).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let data = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [R, R, 0.0]];
        let (c, m) = spherical_kmeans(data.view(), 4, 11).unwrap();
        assert_eq!(c.k(), 4);
        assert_eq!(c.sizes(), vec![1, 1, 1, 1]);
        assert!((m.objective - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let data = array![[1.0, 0.0], [0.0, 2.0]];
        assert!(matches!(
            spherical_kmeans(data.view(), 1, 0),
            Err(Error::Unnormalized(1))
        ));
        let data = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(spherical_kmeans(data.view(), 3, 0).is_err());
        assert!(spherical_kmeans(data.view(), 0, 0).is_err());
    }

    #[test]
    fn duplicated_points_with_empty_repair() {
        // three identical points, k = 3: every cluster must still be non-empty
        let data = array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]];
        let (c, _) = spherical_kmeans(data.view(), 3, 4).unwrap();
        assert_eq!(c.k(), 3);
    }

    #[test]
    fn cop_pigeonhole_failure() {
        let data = array![[1.0, 0.0], [0.0, 1.0]];
        let cs = ConstraintSet::from_pairs(2, &[], &[(0, 1)]);
        assert!(cop_kmeans(data.view(), 1, &cs, 0).unwrap().is_failure());
        let out = cop_kmeans(data.view(), 2, &cs, 0).unwrap();
        let c = out.clustering().unwrap();
        assert_ne!(c.labels()[0], c.labels()[1]);
    }

    #[test]
    fn cop_must_link_trace() {
        let mut d = array![[1.0, 0.0], [0.995, 0.0998749], [0.0, 1.0_f64]];
        for mut r in d.rows_mut() {
            let n = r.dot(&r).sqrt();
            r /= n;
        }
        let cs = ConstraintSet::from_pairs(3, &[(0, 1)], &[]);
        for seed in 0..10 {
            let out = cop_kmeans(d.view(), 2, &cs, seed).unwrap();
            let l = out.clustering().unwrap().labels().to_vec();
            assert_eq!(l[0], l[1]);
            assert_ne!(l[0], l[2]);
        }
    }

    #[test]
    fn contradictory_constraints_fail_immediately() {
        let data = array![[1.0, 0.0], [0.0, 1.0], [R, R]];
        let cs = ConstraintSet::from_pairs(3, &[(0, 1), (1, 2)], &[(0, 2)]);
        match cop_kmeans(data.view(), 2, &cs, 0).unwrap() {
            CopOutcome::Failure(f) => assert_eq!(f.attempts, 0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn baselines() {
        assert_eq!(baseline_singleton(3).unwrap().labels(), &[0, 1, 2]);
        assert_eq!(baseline_random(1, 5).unwrap().k(), 1);
        assert_eq!(baseline_random(20, 5).unwrap(), baseline_random(20, 5).unwrap());
        let c = baseline_random(20, 6).unwrap();
        assert!(c.k() >= 1 && c.k() <= 20);
        assert!(c.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn densify_orders_by_first_appearance() {
        assert_eq!(densify(&[7, 3, 7, 9]), (vec![0, 1, 0, 2], 3));
    }
}
