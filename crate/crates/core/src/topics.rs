//! Hierarchical Dirichlet process topic model, fitted by collapsed Gibbs
//! sampling in the Chinese restaurant franchise.
//!
//! Each document is a restaurant whose tables serve dishes (topics). A sweep
//! resamples the table of every token and then the dish of every table, so a
//! whole table can migrate to another or a brand new topic in one move. Empty
//! topics are dropped and ids re-densified at the end of each sweep. The
//! concentration parameters of the top level (gamma) and the documents
//! (alpha) are resampled from their Gamma hyperpriors with the usual
//! auxiliary-variable updates.

use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Gamma(shape, scale) hyperprior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    pub const fn new(shape: f64, scale: f64) -> Self {
        GammaPrior { shape, scale }
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Seat tokens one at a time from the sampler's own predictive.
    #[default]
    Sequential,
    /// One table per document, all serving topic 0.
    SingleTopic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdpConfig {
    /// Symmetric Dirichlet prior on topic-word distributions.
    pub eta: f64,
    pub gamma_prior: GammaPrior,
    pub alpha_prior: GammaPrior,
    pub iterations: usize,
    pub seed: u64,
    pub resample_concentrations: bool,
    pub init: InitMode,
    /// Record the per-word log likelihood every this many sweeps.
    pub trace_interval: usize,
    /// When non-zero, also average document-topic counts over this many
    /// final sweeps.
    pub average_last: usize,
}

impl HdpConfig {
    /// Shorter runs used by the CLI and `RunConfig::default`.
    pub const DESK_ITERATIONS: usize = 2_000;
    /// Preset default.
    pub const FULL_ITERATIONS: usize = 10_000;

    /// eta = 0.3, gamma and alpha ~ Gamma(0.1, 1.0).
    pub fn sparse() -> Self {
        HdpConfig {
            eta: 0.3,
            gamma_prior: GammaPrior::new(0.1, 1.0),
            alpha_prior: GammaPrior::new(0.1, 1.0),
            iterations: Self::FULL_ITERATIONS,
            seed: 0,
            resample_concentrations: true,
            init: InitMode::Sequential,
            trace_interval: 10,
            average_last: 0,
        }
    }

    /// eta = 0.8, gamma and alpha ~ Gamma(1.5, 1.0).
    pub fn dense() -> Self {
        HdpConfig {
            eta: 0.8,
            gamma_prior: GammaPrior::new(1.5, 1.0),
            alpha_prior: GammaPrior::new(1.5, 1.0),
            ..Self::sparse()
        }
    }

    /// eta = 0.5, gamma and alpha ~ Gamma(1.0, 1.0).
    pub fn standard() -> Self {
        HdpConfig {
            eta: 0.5,
            gamma_prior: GammaPrior::new(1.0, 1.0),
            alpha_prior: GammaPrior::new(1.0, 1.0),
            ..Self::sparse()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "sparse" => Some(Self::sparse()),
            "dense" => Some(Self::dense()),
            "default" | "standard" => Some(Self::standard()),
            _ => None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be > 0");
        }
        for p in [self.gamma_prior, self.alpha_prior] {
            if !(p.shape > 0.0 && p.scale > 0.0) {
                return bad("gamma hyperprior shape and scale must be > 0");
            }
        }
        if self.trace_interval < 1 {
            return bad("trace_interval must be >= 1");
        }
        Ok(())
    }
}

impl Default for HdpConfig {
    fn default() -> Self {
        Self::sparse()
    }
}

/// Result of a sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicPosterior {
    pub doc_ids: Vec<String>,
    pub terms: Vec<String>,
    /// n x t token counts per document and topic, from the final sample.
    pub doc_topic_counts: Array2<u32>,
    /// t x V
    pub topic_word_counts: Array2<u32>,
    pub per_word_ll: f64,
    /// (sweep, per-word log likelihood)
    pub ll_trace: Vec<(usize, f64)>,
    /// Document-topic counts averaged over the final sweeps, when requested.
    /// Columns follow `doc_topic_counts`.
    pub doc_topic_mean: Option<Array2<f64>>,
    pub gamma: f64,
    pub alpha: f64,
}

impl TopicPosterior {
    pub fn n_topics(&self) -> usize {
        self.doc_topic_counts.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Table {
    topic: usize,
    count: u32,
}

/// Mutable sampler state.
#[derive(Debug, Clone)]
pub struct HdpSampler {
    cfg: HdpConfig,
    n_terms: usize,
    doc_ids: Vec<String>,
    terms: Vec<String>,
    /// word id of every token, per document
    words: Vec<Vec<u32>>,
    /// table index of every token, per document
    seating: Vec<Vec<usize>>,
    tables: Vec<Vec<Table>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_total: Vec<u64>,
    topic_tables: Vec<u64>,
    topic_uid: Vec<u64>,
    next_uid: u64,
    gamma: f64,
    alpha: f64,
    rng: Rng,
    sweeps: usize,
    trace: Vec<(usize, f64)>,
    average: HashMap<u64, Vec<f64>>,
    averaged_sweeps: usize,
    // scratch
    weights: Vec<f64>,
    topic_f: Vec<f64>,
}

const CONCENTRATION_STEPS: usize = 20;

impl HdpSampler {
    pub fn new(dtm: &DocTermMatrix, cfg: HdpConfig) -> Result<Self> {
        cfg.validate()?;
        if dtm.n_terms() == 0 {
            return Err(Error::InvalidParameter("empty vocabulary".into()));
        }
        let mut words = Vec::with_capacity(dtm.n_docs());
        for (d, row) in dtm.counts.rows().into_iter().enumerate() {
            let mut toks = Vec::new();
            for (w, &c) in row.iter().enumerate() {
                toks.extend(std::iter::repeat_n(w as u32, c as usize));
            }
            if toks.is_empty() {
                return Err(Error::EmptyDocument(dtm.doc_ids[d].clone()));
            }
            words.push(toks);
        }
        let n_docs = words.len();
        let mut s = HdpSampler {
            n_terms: dtm.n_terms(),
            doc_ids: dtm.doc_ids.clone(),
            terms: dtm.vocabulary.terms.clone(),
            seating: words.iter().map(|w| vec![0; w.len()]).collect(),
            tables: vec![Vec::new(); n_docs],
            doc_topic: vec![Vec::new(); n_docs],
            topic_word: Vec::new(),
            topic_total: Vec::new(),
            topic_tables: Vec::new(),
            topic_uid: Vec::new(),
            next_uid: 0,
            gamma: cfg.gamma_prior.mean(),
            alpha: cfg.alpha_prior.mean(),
            rng: seed::rng(cfg.seed),
            sweeps: 0,
            trace: Vec::new(),
            average: HashMap::new(),
            averaged_sweeps: 0,
            weights: Vec::new(),
            topic_f: Vec::new(),
            words,
            cfg,
        };
        match s.cfg.init {
            InitMode::SingleTopic => s.init_single_topic(),
            InitMode::Sequential => s.init_sequential(),
        }
        s.compact();
        let ll = s.per_word_log_likelihood();
        s.trace.push((0, ll));
        Ok(s)
    }

    fn init_single_topic(&mut self) {
        let k = self.new_topic();
        for d in 0..self.words.len() {
            self.tables[d].push(Table { topic: k, count: 0 });
            self.topic_tables[k] += 1;
            for i in 0..self.words[d].len() {
                self.seat(d, i, 0);
            }
        }
    }

    fn init_sequential(&mut self) {
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let t = self.draw_table(d, self.words[d][i]);
                self.seat(d, i, t);
            }
        }
    }

    pub fn config(&self) -> &HdpConfig {
        &self.cfg
    }

    pub fn n_topics(&self) -> usize {
        self.topic_total.len()
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn trace(&self) -> &[(usize, f64)] {
        &self.trace
    }

    pub fn total_tokens(&self) -> u64 {
        self.topic_total.iter().sum()
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_total
    }

    pub fn tables_per_doc(&self) -> Vec<usize> {
        self.tables.iter().map(Vec::len).collect()
    }

    fn new_topic(&mut self) -> usize {
        for row in &mut self.doc_topic {
            row.push(0);
        }
        self.topic_word.push(vec![0; self.n_terms]);
        self.topic_total.push(0);
        self.topic_tables.push(0);
        self.topic_uid.push(self.next_uid);
        self.next_uid += 1;
        self.topic_total.len() - 1
    }

    #[inline]
    fn word_prob(&self, k: usize, w: usize) -> f64 {
        let v = self.n_terms as f64;
        (f64::from(self.topic_word[k][w]) + self.cfg.eta) / (self.topic_total[k] as f64 + v * self.cfg.eta)
    }

    /// Fills `topic_f` with f_k(w) and returns the probability of `w` at a
    /// fresh table.
    fn fill_topic_probs(&mut self, w: usize) -> f64 {
        let n_topics = self.topic_total.len();
        let mut f = std::mem::take(&mut self.topic_f);
        f.clear();
        let mut mass = 0.0;
        let mut m_total = 0.0;
        for k in 0..n_topics {
            let fk = self.word_prob(k, w);
            f.push(fk);
            let m = self.topic_tables[k] as f64;
            mass += m * fk;
            m_total += m;
        }
        self.topic_f = f;
        (mass + self.gamma / self.n_terms as f64) / (m_total + self.gamma)
    }

    /// Draw a table for a wordless token of `d`, opening a table (and
    /// possibly a topic) when needed. Returns the table index.
    fn draw_table(&mut self, d: usize, w: u32) -> usize {
        let w = w as usize;
        let fresh = self.fill_topic_probs(w);
        let mut weights = std::mem::take(&mut self.weights);
        weights.clear();
        for t in &self.tables[d] {
            weights.push(f64::from(t.count) * self.topic_f[t.topic]);
        }
        weights.push(self.alpha * fresh);
        let choice = sample_index(&weights, &mut self.rng);
        if choice < self.tables[d].len() {
            self.weights = weights;
            return choice;
        }

        weights.clear();
        for (k, &fk) in self.topic_f.iter().enumerate() {
            weights.push(self.topic_tables[k] as f64 * fk);
        }
        weights.push(self.gamma / self.n_terms as f64);
        let pick = sample_index(&weights, &mut self.rng);
        self.weights = weights;
        let k = if pick < self.topic_total.len() {
            pick
        } else {
            self.new_topic()
        };
        self.tables[d].push(Table { topic: k, count: 0 });
        self.topic_tables[k] += 1;
        self.tables[d].len() - 1
    }

    fn seat(&mut self, d: usize, i: usize, t: usize) {
        let w = self.words[d][i] as usize;
        let k = self.tables[d][t].topic;
        self.seating[d][i] = t;
        self.tables[d][t].count += 1;
        self.doc_topic[d][k] += 1;
        self.topic_word[k][w] += 1;
        self.topic_total[k] += 1;
    }

    fn unseat(&mut self, d: usize, i: usize) {
        let w = self.words[d][i] as usize;
        let t = self.seating[d][i];
        let k = self.tables[d][t].topic;
        self.tables[d][t].count -= 1;
        self.doc_topic[d][k] -= 1;
        self.topic_word[k][w] -= 1;
        self.topic_total[k] -= 1;
        if self.tables[d][t].count == 0 {
            self.topic_tables[k] -= 1;
            let last = self.tables[d].len() - 1;
            self.tables[d].swap_remove(t);
            if t != last {
                for s in self.seating[d].iter_mut() {
                    if *s == last {
                        *s = t;
                    }
                }
            }
        }
    }

    fn resample_tokens(&mut self) {
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                self.unseat(d, i);
                let t = self.draw_table(d, self.words[d][i]);
                self.seat(d, i, t);
            }
        }
    }

    /// Log probability of a table's words (as sorted (word, count) runs)
    /// joining topic `k`, or a fresh topic when `k` is None.
    fn table_log_lik(&self, k: Option<usize>, runs: &[(usize, u32)], n: u32) -> f64 {
        let eta = self.cfg.eta;
        let v_eta = self.n_terms as f64 * eta;
        let (total, counts): (f64, Option<&[u32]>) = match k {
            Some(k) => (self.topic_total[k] as f64, Some(&self.topic_word[k])),
            None => (0.0, None),
        };
        let mut ll = -log_rising(total + v_eta, n);
        for &(w, c) in runs {
            let base = counts.map_or(0.0, |cw| f64::from(cw[w]));
            ll += log_rising(base + eta, c);
        }
        ll
    }

    fn resample_tables(&mut self) {
        let mut runs: Vec<(usize, u32)> = Vec::new();
        let mut table_words: Vec<Vec<u32>> = Vec::new();
        let mut logw: Vec<f64> = Vec::new();
        for d in 0..self.words.len() {
            table_words.clear();
            table_words.resize(self.tables[d].len(), Vec::new());
            for (i, &t) in self.seating[d].iter().enumerate() {
                table_words[t].push(self.words[d][i]);
            }
            for (t, tw) in table_words.iter_mut().enumerate() {
                tw.sort_unstable();
                runs.clear();
                for &w in tw.iter() {
                    match runs.last_mut() {
                        Some((lw, c)) if *lw == w as usize => *c += 1,
                        _ => runs.push((w as usize, 1)),
                    }
                }
                let n = self.tables[d][t].count;
                let old = self.tables[d][t].topic;

                // detach the table from its topic
                for &(w, c) in &runs {
                    self.topic_word[old][w] -= c;
                }
                self.topic_total[old] -= u64::from(n);
                self.topic_tables[old] -= 1;
                self.doc_topic[d][old] -= n;

                logw.clear();
                for k in 0..self.topic_total.len() {
                    let m = self.topic_tables[k];
                    if m == 0 {
                        logw.push(f64::NEG_INFINITY);
                    } else {
                        logw.push((m as f64).ln() + self.table_log_lik(Some(k), &runs, n));
                    }
                }
                logw.push(self.gamma.ln() + self.table_log_lik(None, &runs, n));
                let pick = sample_log_index(&mut logw, &mut self.rng);
                let k = if pick < self.topic_total.len() {
                    pick
                } else {
                    self.new_topic()
                };

                for &(w, c) in &runs {
                    self.topic_word[k][w] += c;
                }
                self.topic_total[k] += u64::from(n);
                self.topic_tables[k] += 1;
                self.doc_topic[d][k] += n;
                self.tables[d][t].topic = k;
            }
        }
    }

    /// Drop topics without tokens and renumber the rest densely, keeping
    /// their relative order.
    fn compact(&mut self) {
        let live: Vec<usize> = (0..self.topic_total.len())
            .filter(|&k| self.topic_total[k] > 0)
            .collect();
        if live.len() == self.topic_total.len() {
            return;
        }
        let mut remap = vec![usize::MAX; self.topic_total.len()];
        for (new, &old) in live.iter().enumerate() {
            remap[old] = new;
        }
        let pick = |v: &Vec<u64>| live.iter().map(|&k| v[k]).collect::<Vec<_>>();
        self.topic_total = pick(&self.topic_total);
        self.topic_tables = pick(&self.topic_tables);
        self.topic_uid = pick(&self.topic_uid);
        self.topic_word = live
            .iter()
            .map(|&k| std::mem::take(&mut self.topic_word[k]))
            .collect();
        for row in &mut self.doc_topic {
            *row = live.iter().map(|&k| row[k]).collect();
        }
        for tables in &mut self.tables {
            for t in tables.iter_mut() {
                t.topic = remap[t.topic];
            }
        }
    }

    fn resample_concentrations(&mut self) {
        let n_topics = self.topic_total.len() as f64;
        let m_total: u64 = self.topic_tables.iter().sum();
        let m = m_total as f64;
        let gp = self.cfg.gamma_prior;
        let ap = self.cfg.alpha_prior;
        for _ in 0..CONCENTRATION_STEPS {
            // top level: Escobar & West with m tables and K topics
            let x: f64 = Beta::new(self.gamma + 1.0, m)
                .expect("beta params")
                .sample(&mut self.rng);
            let rate = 1.0 / gp.scale - x.ln();
            let odds = (gp.shape + n_topics - 1.0) / (m * rate);
            let shape = if self.rng.random::<f64>() < odds / (1.0 + odds) {
                gp.shape + n_topics
            } else {
                gp.shape + n_topics - 1.0
            };
            self.gamma = Gamma::new(shape, 1.0 / rate)
                .expect("gamma params")
                .sample(&mut self.rng)
                .max(1e-12);

            // document level: auxiliary w_j, s_j per restaurant
            let mut sum_log_w = 0.0;
            let mut sum_s = 0.0;
            for doc in &self.words {
                let nj = doc.len() as f64;
                let w: f64 = Beta::new(self.alpha + 1.0, nj)
                    .expect("beta params")
                    .sample(&mut self.rng);
                sum_log_w += w.ln();
                if self.rng.random::<f64>() < nj / (nj + self.alpha) {
                    sum_s += 1.0;
                }
            }
            let rate = 1.0 / ap.scale - sum_log_w;
            self.alpha = Gamma::new(ap.shape + m - sum_s, 1.0 / rate)
                .expect("gamma params")
                .sample(&mut self.rng)
                .max(1e-12);
        }
    }

    /// One full Gibbs sweep: every token, then every table, then topic
    /// compaction and (optionally) concentration updates.
    pub fn sweep(&mut self) {
        self.resample_tokens();
        self.resample_tables();
        self.compact();
        if self.cfg.resample_concentrations {
            self.resample_concentrations();
        }
        self.sweeps += 1;
        if self.sweeps.is_multiple_of(self.cfg.trace_interval) || self.sweeps == self.cfg.iterations {
            let ll = self.per_word_log_likelihood();
            self.trace.push((self.sweeps, ll));
        }
        let window = self.cfg.average_last;
        if window > 0 && self.sweeps + window > self.cfg.iterations {
            self.accumulate_average();
        }
    }

    fn accumulate_average(&mut self) {
        let n_docs = self.doc_topic.len();
        for (k, &uid) in self.topic_uid.iter().enumerate() {
            let acc = self.average.entry(uid).or_insert_with(|| vec![0.0; n_docs]);
            for (d, row) in self.doc_topic.iter().enumerate() {
                acc[d] += f64::from(row[k]);
            }
        }
        self.averaged_sweeps += 1;
    }

    /// Mean log predictive probability per token: each token's word is scored
    /// against its document's collapsed mixture over existing topics plus the
    /// mass reserved for an unseen topic.
    pub fn per_word_log_likelihood(&self) -> f64 {
        let v = self.n_terms as f64;
        let m_total: f64 = self.topic_tables.iter().sum::<u64>() as f64;
        let top_norm = m_total + self.gamma;
        let mut total = 0.0;
        let mut n_tokens = 0usize;
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for (d, doc) in self.words.iter().enumerate() {
            let nd = doc.len() as f64;
            let denom = nd + self.alpha;
            counts.clear();
            for &w in doc {
                *counts.entry(w).or_insert(0) += 1;
            }
            let mut entries: Vec<(u32, u32)> = counts.iter().map(|(&w, &c)| (w, c)).collect();
            entries.sort_unstable();
            for (w, c) in entries {
                let mut p = self.alpha * self.gamma / (denom * top_norm) / v;
                for k in 0..self.topic_total.len() {
                    let weight = (f64::from(self.doc_topic[d][k])
                        + self.alpha * self.topic_tables[k] as f64 / top_norm)
                        / denom;
                    p += weight * self.word_prob(k, w as usize);
                }
                total += f64::from(c) * p.min(1.0).ln();
                n_tokens += c as usize;
            }
        }
        total / n_tokens as f64
    }

    /// Recompute every count from the seating and compare it with the stored
    /// state.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let n_topics = self.topic_total.len();
        let mut doc_topic = vec![vec![0u32; n_topics]; self.words.len()];
        let mut topic_word = vec![vec![0u32; self.n_terms]; n_topics];
        let mut topic_total = vec![0u64; n_topics];
        let mut topic_tables = vec![0u64; n_topics];
        for (d, doc) in self.words.iter().enumerate() {
            let mut table_counts = vec![0u32; self.tables[d].len()];
            for (i, &w) in doc.iter().enumerate() {
                let t = self.seating[d][i];
                if t >= self.tables[d].len() {
                    return Err(format!("doc {d} token {i} seated at missing table {t}"));
                }
                table_counts[t] += 1;
                let k = self.tables[d][t].topic;
                if k >= n_topics {
                    return Err(format!("doc {d} table {t} serves missing topic {k}"));
                }
                doc_topic[d][k] += 1;
                topic_word[k][w as usize] += 1;
                topic_total[k] += 1;
            }
            for (t, table) in self.tables[d].iter().enumerate() {
                if table.count != table_counts[t] || table.count == 0 {
                    return Err(format!("doc {d} table {t} count mismatch"));
                }
                topic_tables[table.topic] += 1;
            }
            if doc_topic[d].iter().map(|&c| c as usize).sum::<usize>() != doc.len() {
                return Err(format!("doc {d} topic counts do not sum to its length"));
            }
        }
        if doc_topic != self.doc_topic {
            return Err("doc-topic counts differ from recomputation".into());
        }
        if topic_word != self.topic_word {
            return Err("topic-word counts differ from recomputation".into());
        }
        if topic_total != self.topic_total {
            return Err("topic totals differ from recomputation".into());
        }
        if topic_tables != self.topic_tables {
            return Err("table counts differ from recomputation".into());
        }
        if let Some(k) = topic_total.iter().position(|&c| c == 0) {
            return Err(format!("topic {k} is empty"));
        }
        Ok(())
    }

    pub fn posterior(&self) -> TopicPosterior {
        let n_docs = self.words.len();
        let n_topics = self.topic_total.len();
        let doc_topic_counts = Array2::from_shape_fn((n_docs, n_topics), |(d, k)| self.doc_topic[d][k]);
        let topic_word_counts =
            Array2::from_shape_fn((n_topics, self.n_terms), |(k, w)| self.topic_word[k][w]);
        let doc_topic_mean = (self.averaged_sweeps > 0).then(|| {
            let denom = self.averaged_sweeps as f64;
            Array2::from_shape_fn((n_docs, n_topics), |(d, k)| {
                self.average
                    .get(&self.topic_uid[k])
                    .map_or(0.0, |acc| acc[d] / denom)
            })
        });
        TopicPosterior {
            doc_ids: self.doc_ids.clone(),
            terms: self.terms.clone(),
            doc_topic_counts,
            topic_word_counts,
            per_word_ll: self.per_word_log_likelihood(),
            ll_trace: self.trace.clone(),
            doc_topic_mean,
            gamma: self.gamma,
            alpha: self.alpha,
        }
    }
}

/// Run `cfg.iterations` sweeps and return the final sample.
pub fn run_sampler(dtm: &DocTermMatrix, cfg: &HdpConfig) -> Result<TopicPosterior> {
    let mut sampler = HdpSampler::new(dtm, cfg.clone())?;
    for _ in 0..cfg.iterations {
        sampler.sweep();
    }
    Ok(sampler.posterior())
}

/// ln Γ(x + n) − ln Γ(x)
fn log_rising(x: f64, n: u32) -> f64 {
    if n <= 8 {
        (0..n).map(|i| (x + f64::from(i)).ln()).sum()
    } else {
        ln_gamma(x + f64::from(n)) - ln_gamma(x)
    }
}

fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding: fall back to the last positive weight
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(weights.len() - 1)
}

fn sample_log_index(logw: &mut [f64], rng: &mut Rng) -> usize {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for l in logw.iter_mut() {
        *l = (*l - max).exp();
    }
    sample_index(logw, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{vectorize, Document, ProblemSet};

    fn dtm(texts: &[&str]) -> DocTermMatrix {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), *t))
            .collect();
        vectorize(&ProblemSet::new("p", docs, None).unwrap()).unwrap()
    }

    fn cfg(seed: u64) -> HdpConfig {
        HdpConfig::sparse().with_seed(seed).with_iterations(50)
    }

    #[test]
    fn presets_match_reported_settings() {
        let s = HdpConfig::sparse();
        assert_eq!(s.eta, 0.3);
        assert_eq!(s.gamma_prior, GammaPrior::new(0.1, 1.0));
        assert_eq!(s.alpha_prior, GammaPrior::new(0.1, 1.0));
        let d = HdpConfig::dense();
        assert_eq!((d.eta, d.gamma_prior.shape), (0.8, 1.5));
        let st = HdpConfig::standard();
        assert_eq!((st.eta, st.alpha_prior.shape), (0.5, 1.0));
        assert_eq!(s.iterations, 10_000);
    }

    #[test]
    fn single_topic_init() {
        let m = dtm(&["a b a", "b a"]);
        let c = HdpConfig {
            init: InitMode::SingleTopic,
            ..cfg(1)
        };
        let s = HdpSampler::new(&m, c).unwrap();
        assert_eq!(s.n_topics(), 1);
        assert_eq!(s.total_tokens(), 5);
        s.check_consistency().unwrap();
    }

    #[test]
    fn same_seed_same_state() {
        let m = dtm(&["a b a c", "b a c c", "d d a b"]);
        let a = run_sampler(&m, &cfg(9)).unwrap();
        let b = run_sampler(&m, &cfg(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_config_rejected() {
        let m = dtm(&["a a", "a a"]);
        let mut c = cfg(0);
        c.iterations = 0;
        assert!(HdpSampler::new(&m, c).is_err());
        let mut c = cfg(0);
        c.eta = 0.0;
        assert!(HdpSampler::new(&m, c).is_err());
    }

    #[test]
    fn sweeps_conserve_tokens_and_stay_consistent() {
        let m = dtm(&["a b c a b . ,", "c c d , d e", "e e a . b b", "d a , c e e"]);
        let mut s = HdpSampler::new(&m, cfg(3)).unwrap();
        let tokens = s.total_tokens();
        for _ in 0..40 {
            s.sweep();
            assert_eq!(s.total_tokens(), tokens);
            s.check_consistency().unwrap();
            assert!(s.topic_totals().iter().all(|&c| c > 0));
        }
    }

    fn single_doc(text: &str) -> DocTermMatrix {
        let two = dtm(&[text, text]);
        DocTermMatrix {
            doc_ids: vec!["d0".into()],
            counts: two.counts.slice(ndarray::s![0..1, ..]).to_owned(),
            vocabulary: two.vocabulary,
        }
    }

    // With one term every topic predicts it with probability 1, so the
    // chain samples the CRF prior; small concentrations keep almost all of
    // that mass on a single topic, but not all of it.
    #[test]
    fn one_term_document_mostly_has_one_topic() {
        let m = single_doc("a a a a a");
        let (mut single, mut total) = (0, 0);
        let mut finals = Vec::new();
        for seed in 0..10 {
            let mut s = HdpSampler::new(&m, cfg(seed)).unwrap();
            for _ in 0..100 {
                s.sweep();
                single += usize::from(s.n_topics() == 1);
                total += 1;
            }
            finals.push(s.n_topics());
        }
        assert!(finals.iter().filter(|&&t| t == 1).count() >= 8, "{finals:?}");
        assert!(single as f64 / total as f64 > 0.9, "{single}/{total}");
    }

    #[test]
    fn per_word_ll_single_term_is_zero() {
        let m = dtm(&["a a a", "a a"]);
        let s = HdpSampler::new(&m, cfg(0)).unwrap();
        assert!(s.per_word_log_likelihood().abs() < 1e-12);
    }

    #[test]
    fn per_word_ll_large_eta_tends_to_uniform() {
        let m = dtm(&["a b a b", "b a b a"]);
        let c = HdpConfig {
            eta: 1e12,
            init: InitMode::SingleTopic,
            ..cfg(0)
        };
        let s = HdpSampler::new(&m, c).unwrap();
        assert!((s.per_word_log_likelihood() - 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn trace_is_finite_and_non_positive() {
        let m = dtm(&["a b c a b", "c c d d e", "e e a b b", "d a c e e"]);
        let post = run_sampler(&m, &cfg(5)).unwrap();
        assert!(!post.ll_trace.is_empty());
        for &(_, ll) in &post.ll_trace {
            assert!(ll.is_finite() && ll <= 0.0);
        }
        let sums: Vec<u32> = post
            .doc_topic_counts
            .rows()
            .into_iter()
            .map(|r| r.sum())
            .collect();
        assert_eq!(sums, vec![5, 5, 5, 5]);
    }

    #[test]
    fn averaging_window_produces_mean_counts() {
        let m = dtm(&["a b c a b", "c c d d e", "e e a b b", "d a c e e"]);
        let c = HdpConfig {
            average_last: 10,
            ..cfg(2)
        };
        let post = run_sampler(&m, &c).unwrap();
        let mean = post.doc_topic_mean.expect("averaged counts");
        assert_eq!(mean.dim(), post.doc_topic_counts.dim());
        for row in mean.rows() {
            let s: f64 = row.sum();
            assert!(s > 0.0 && s <= 5.0 + 1e-9);
        }
    }

    #[test]
    fn log_rising_matches_direct_sum() {
        for &(x, n) in &[(0.3, 12u32), (5.5, 20), (1.0, 9)] {
            let direct: f64 = (0..n).map(|i| (x + f64::from(i)).ln()).sum();
            assert!((log_rising(x, n) - direct).abs() < 1e-9);
        }
    }
}
