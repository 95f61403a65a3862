//! Must-link / cannot-link constraints sampled from ground truth.

use std::collections::BTreeSet;

use rand::seq::index;

use crate::corpus::Truth;
use crate::error::{Error, Result};
use crate::seed;

/// Share of all pairwise links revealed as constraints in the semi-supervised
/// setting.
pub const DEFAULT_RATIO: f64 = 0.12;

pub type Pair = (usize, usize);

fn ordered(a: usize, b: usize) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Unordered document-index pairs that must share / must not share a cluster.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub n: usize,
    pub ml: BTreeSet<Pair>,
    pub cl: BTreeSet<Pair>,
    pub ratio: f64,
    pub total_links: usize,
}

impl ConstraintSet {
    pub fn empty(n: usize) -> Self {
        ConstraintSet {
            n,
            total_links: total_links(n),
            ..Default::default()
        }
    }

    /// Builds a set from explicit pairs. Panics on self-pairs or indices
    /// outside `0..n`.
    pub fn from_pairs(n: usize, ml: &[Pair], cl: &[Pair]) -> Self {
        let norm = |pairs: &[Pair]| -> BTreeSet<Pair> {
            pairs
                .iter()
                .map(|&(a, b)| {
                    assert!(a != b && a < n && b < n, "bad constraint pair ({a}, {b})");
                    ordered(a, b)
                })
                .collect()
        };
        let total = total_links(n);
        let ml = norm(ml);
        let cl = norm(cl);
        let ratio = if total == 0 {
            0.0
        } else {
            (ml.len() + cl.len()) as f64 / total as f64
        };
        ConstraintSet {
            n,
            ml,
            cl,
            ratio,
            total_links: total,
        }
    }

    pub fn len(&self) -> usize {
        self.ml.len() + self.cl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of pair constraints broken by `labels`.
    pub fn violations(&self, labels: &[usize]) -> usize {
        let ml = self.ml.iter().filter(|&&(a, b)| labels[a] != labels[b]).count();
        let cl = self.cl.iter().filter(|&&(a, b)| labels[a] == labels[b]).count();
        ml + cl
    }

    /// Must-link components: `component[i]` is the representative id of the
    /// transitive closure containing document i, numbered densely.
    pub fn ml_components(&self) -> (Vec<usize>, usize) {
        let mut uf = UnionFind::new(self.n);
        for &(a, b) in &self.ml {
            uf.union(a, b);
        }
        let roots: Vec<usize> = (0..self.n).map(|i| uf.find(i)).collect();
        crate::cluster::densify(&roots)
    }
}

pub fn total_links(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn budget(ratio: f64, links: usize) -> usize {
    ((ratio * links as f64) + 0.5).floor() as usize
}

/// Sample `round_half_up(ratio * l)` distinct pairs out of all `l = n(n-1)/2`
/// and label each one must-link when both documents share a truth cluster.
pub fn derive_constraints(truth: &Truth, ratio: f64, seed: u64) -> Result<ConstraintSet> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidParameter(format!(
            "constraint ratio {ratio} outside [0, 1]"
        )));
    }
    let n = truth.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "constraints need at least 2 documents".into(),
        ));
    }
    let links = total_links(n);
    let pairs: Vec<Pair> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let take = budget(ratio, links).min(links);
    let mut rng = seed::rng(seed);
    let labels = truth.labels();
    let mut ml = BTreeSet::new();
    let mut cl = BTreeSet::new();
    for idx in index::sample(&mut rng, links, take).into_iter() {
        let (a, b) = pairs[idx];
        if labels[a] == labels[b] {
            ml.insert((a, b));
        } else {
            cl.insert((a, b));
        }
    }
    Ok(ConstraintSet {
        n,
        ml,
        cl,
        ratio,
        total_links: links,
    })
}

/// Necessary (not sufficient) screen for whether a k-clustering with no empty
/// cluster can satisfy `constraints`.
pub fn check_feasible(constraints: &ConstraintSet, k: usize, n: usize) -> bool {
    if k == 0 || k > n || constraints.n != n {
        return false;
    }
    let (comp, n_comp) = constraints.ml_components();
    if n_comp < k {
        return false;
    }
    let mut adj = vec![BTreeSet::new(); n_comp];
    for &(a, b) in &constraints.cl {
        let (ca, cb) = (comp[a], comp[b]);
        if ca == cb {
            return false;
        }
        adj[ca].insert(cb);
        adj[cb].insert(ca);
    }
    greedy_clique(&adj) <= k
}

/// Size of the largest clique found by greedy growth from every vertex.
fn greedy_clique(adj: &[BTreeSet<usize>]) -> usize {
    let mut by_degree: Vec<usize> = (0..adj.len()).collect();
    by_degree.sort_by(|&a, &b| adj[b].len().cmp(&adj[a].len()).then(a.cmp(&b)));
    let mut best = usize::from(!adj.is_empty());
    for &start in &by_degree {
        if adj[start].len() < best {
            continue;
        }
        let mut clique = vec![start];
        for &v in &by_degree {
            if v != start && clique.iter().all(|u| adj[*u].contains(&v)) {
                clique.push(v);
            }
        }
        best = best.max(clique.len());
    }
    best
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
