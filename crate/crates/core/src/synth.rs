//! Synthetic fixtures: unit-vector mixtures and author-styled toy corpora.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Normal};

use crate::artifacts::write_json;
use crate::corpus::NATIVE_TRUTH_FILE;
use crate::error::{Error, Result};
use crate::seed;

/// `k` clusters of `per_cluster` unit vectors in `dim` dimensions. Cluster
/// `c` is centred on basis vector `c` (on random positive directions once
/// `k > dim`) and perturbed with isotropic Gaussian noise before
/// renormalization.
pub fn unit_mixture(
    k: usize,
    per_cluster: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            if k <= dim {
                (0..dim).map(|j| if j == c { 1.0 } else { 0.0 }).collect()
            } else {
                let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            }
        })
        .collect();
    let n = k * per_cluster;
    let mut data = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for (i, mut row) in data.rows_mut().into_iter().enumerate() {
        let c = i / per_cluster;
        labels.push(c);
        for j in 0..dim {
            row[j] = centers[c][j] + noise * normal.sample(&mut rng);
        }
        let norm = row.dot(&row).sqrt();
        row.mapv_inplace(|x| x / norm);
    }
    (data, labels)
}

/// Groups of identical basis vectors, one group per entry of `sizes`.
pub fn duplicated_groups(sizes: &[usize], dim: usize) -> (Array2<f64>, Vec<usize>) {
    assert!(sizes.len() <= dim, "one basis direction per group");
    let n: usize = sizes.iter().sum();
    let mut data = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (g, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            data[[row, g]] = 1.0;
            labels.push(g);
            row += 1;
        }
    }
    (data, labels)
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ten", "ra", "su", "vel", "do", "ne", "qui", "bar", "os", "ith", "pe", "gra", "un",
];
const PUNCT: [&str; 5] = [",", ".", ";", "!", "?"];

fn pseudo_word(i: usize) -> String {
    let a = SYLLABLES[i % SYLLABLES.len()];
    let b = SYLLABLES[(i / SYLLABLES.len() + 3 * i) % SYLLABLES.len()];
    format!("{a}{b}{}", if i.is_multiple_of(3) { "s" } else { "" })
}

/// A vocabulary preference profile: sparse weights over pseudo-words plus
/// a punctuation habit.
#[derive(Debug, Clone)]
pub struct AuthorStyle {
    words: Vec<f64>,
    punct: Vec<f64>,
    punct_rate: f64,
}

pub const VOCAB_SIZE: usize = 120;

impl AuthorStyle {
    pub fn random(rng: &mut seed::Rng) -> Self {
        let sparse = Gamma::new(0.2, 1.0).expect("gamma");
        let words = (0..VOCAB_SIZE).map(|_| sparse.sample(rng)).collect();
        let punct = (0..PUNCT.len()).map(|_| sparse.sample(rng) + 1e-3).collect();
        AuthorStyle {
            words,
            punct,
            punct_rate: rng.random_range(0.05..0.25),
        }
    }

    pub fn write(&self, tokens: usize, rng: &mut seed::Rng) -> String {
        let pick = |w: &[f64], rng: &mut seed::Rng| {
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, &x) in w.iter().enumerate() {
                if u < x {
                    return i;
                }
                u -= x;
            }
            w.len() - 1
        };
        let mut out = String::new();
        for t in 0..tokens {
            if t > 0 {
                out.push(' ');
            }
            out.push_str(&pseudo_word(pick(&self.words, rng)));
            if rng.random::<f64>() < self.punct_rate {
                out.push_str(PUNCT[pick(&self.punct, rng)]);
            }
        }
        out.push('.');
        out
    }
}

/// Texts for a problem with the given author cluster sizes, in author order.
pub fn author_texts(
    cluster_sizes: &[usize],
    tokens: std::ops::Range<usize>,
    seed: u64,
) -> (Vec<String>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let styles: Vec<AuthorStyle> = cluster_sizes
        .iter()
        .map(|_| AuthorStyle::random(&mut rng))
        .collect();
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    for (a, &size) in cluster_sizes.iter().enumerate() {
        for _ in 0..size {
            let len = rng.random_range(tokens.clone());
            texts.push(styles[a].write(len, &mut rng));
            labels.push(a);
        }
    }
    (texts, labels)
}

/// Writes `docNNN.txt` files and a `truth.json`.
pub fn write_problem(dir: &Path, texts: &[String], labels: &[usize]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut clusters: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, (text, &l)) in texts.iter().zip(labels).enumerate() {
        let name = format!("doc{i:03}.txt");
        let path = dir.join(&name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        clusters.entry(l).or_default().push(name);
    }
    let clusters: Vec<Vec<String>> = clusters.into_values().collect();
    write_json(
        &dir.join(NATIVE_TRUTH_FILE),
        &serde_json::json!({ "clusters": clusters }),
    )
}

/// A collection of `n_problems` problems under `root` with a `groups.json`
/// spreading them over `groups`.
pub fn write_suite(root: &Path, n_problems: usize, groups: &[&str], seed: u64) -> Result<()> {
    let mut rng = seed::rng(seed);
    let mut manifest = BTreeMap::new();
    for p in 0..n_problems {
        let id = format!("problem{:03}", p + 1);
        let n_authors = rng.random_range(2..=5);
        let sizes: Vec<usize> = (0..n_authors).map(|_| rng.random_range(1..=4)).collect();
        let (texts, labels) = author_texts(&sizes, 40..80, seed::derive(seed, &[&id]));
        write_problem(&root.join(&id), &texts, &labels)?;
        if !groups.is_empty() {
            manifest.insert(id, groups[p % groups.len()].to_string());
        }
    }
    if !manifest.is_empty() {
        write_json(&root.join(crate::pipeline::GROUPS_FILE), &manifest)?;
    }
    Ok(())
}
