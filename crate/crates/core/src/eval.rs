//! Extrinsic evaluation: B-cubed, adjusted Rand index, RMSE of k and mean
//! ranks across groups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn same_len(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::SizeMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidParameter("empty partition".into()));
    }
    Ok(())
}

type Margin = BTreeMap<usize, u64>;

fn contingency(pred: &[usize], truth: &[usize]) -> (BTreeMap<(usize, usize), u64>, Margin, Margin) {
    let mut cells = BTreeMap::new();
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *cells.entry((p, t)).or_insert(0) += 1;
        *rows.entry(p).or_insert(0) += 1;
        *cols.entry(t).or_insert(0) += 1;
    }
    (cells, rows, cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BCubed {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Item-averaged B-cubed precision and recall; F is their harmonic mean.
pub fn bcubed(pred: &[usize], truth: &[usize]) -> Result<BCubed> {
    same_len(pred, truth)?;
    let (cells, rows, cols) = contingency(pred, truth);
    let n = pred.len() as f64;
    // every item in cell (p, t) has |p ∩ t| / |p| precision
    let mut precision = 0.0;
    let mut recall = 0.0;
    for (&(p, t), &c) in &cells {
        let c = c as f64;
        precision += c * c / rows[&p] as f64;
        recall += c * c / cols[&t] as f64;
    }
    precision /= n;
    recall /= n;
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BCubed { precision, recall, f })
}

fn comb2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table. Identical trivial
/// partitions (all-in-one or all singletons on both sides) score 1.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    same_len(pred, truth)?;
    let (cells, rows, cols) = contingency(pred, truth);
    let total = comb2(pred.len() as u64);
    let index: f64 = cells.values().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| comb2(c)).sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Root mean squared error between estimated and true cluster counts.
pub fn rmse_k(estimates: &[usize], truths: &[usize]) -> Result<f64> {
    same_len(estimates, truths)?;
    let mse = estimates
        .iter()
        .zip(truths)
        .map(|(&e, &t)| (e as f64 - t as f64).powi(2))
        .sum::<f64>()
        / estimates.len() as f64;
    Ok(mse.sqrt())
}

/// Ranks methods within each group by descending score (1 = best, ties share
/// the mean rank) and averages over groups.
pub fn mean_rank(scores: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<BTreeMap<String, f64>> {
    let mut groups: Vec<&String> = scores.values().flat_map(|g| g.keys()).collect();
    groups.sort();
    groups.dedup();
    if groups.is_empty() {
        return Err(Error::InvalidParameter("no groups to rank".into()));
    }
    for (method, per_group) in scores {
        if let Some(g) = groups.iter().find(|g| !per_group.contains_key(**g)) {
            return Err(Error::Malformed {
                what: "rank table",
                detail: format!("method {method} has no score for group {g}"),
            });
        }
    }
    let mut totals: BTreeMap<String, f64> = scores.keys().map(|m| (m.clone(), 0.0)).collect();
    for g in &groups {
        let mut entries: Vec<(&String, f64)> = scores.iter().map(|(m, s)| (m, s[*g])).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut i = 0;
        while i < entries.len() {
            let mut j = i;
            while j + 1 < entries.len() && entries[j + 1].1 == entries[i].1 {
                j += 1;
            }
            // positions i..=j tie; ranks are 1-based
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for e in &entries[i..=j] {
                *totals.get_mut(e.0).expect("method") += rank;
            }
            i = j + 1;
        }
    }
    let n_groups = groups.len() as f64;
    Ok(totals.into_iter().map(|(m, t)| (m, t / n_groups)).collect())
}

/// One method's scores on one problem. Metric fields are `None` when the
/// method produced no clustering (COP-KMeans found no feasible k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub problem_id: String,
    pub group: String,
    pub method: String,
    pub b3_p: Option<f64>,
    pub b3_r: Option<f64>,
    pub b3_f: Option<f64>,
    pub ari: Option<f64>,
    pub k_est: Option<usize>,
    pub k_true: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ProblemRecord {
    pub fn scored(
        problem_id: &str,
        group: &str,
        method: &str,
        b3: BCubed,
        ari: f64,
        k_est: usize,
        k_true: Option<usize>,
    ) -> Self {
        ProblemRecord {
            problem_id: problem_id.to_string(),
            group: group.to_string(),
            method: method.to_string(),
            b3_p: Some(b3.precision),
            b3_r: Some(b3.recall),
            b3_f: Some(b3.f),
            ari: Some(ari),
            k_est: Some(k_est),
            k_true,
            error: None,
        }
    }

    pub fn failed(problem_id: &str, group: &str, method: &str, k_true: Option<usize>, error: String) -> Self {
        ProblemRecord {
            problem_id: problem_id.to_string(),
            group: group.to_string(),
            method: method.to_string(),
            b3_p: None,
            b3_r: None,
            b3_f: None,
            ari: None,
            k_est: None,
            k_true,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problems: usize,
    pub b3_p: f64,
    pub b3_r: f64,
    pub b3_f: f64,
    pub ari: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanRanks {
    pub b3_f: BTreeMap<String, f64>,
    pub ari: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    /// method -> summary over all problems
    pub overall: BTreeMap<String, Summary>,
    /// group -> method -> summary
    pub per_group: BTreeMap<String, BTreeMap<String, Summary>>,
    /// present when more than one method was scored
    pub mean_ranks: Option<MeanRanks>,
    /// method -> RMSE of k over problems with a known truth
    pub rmse_k: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<ProblemRecord>,
    pub aggregate: Aggregate,
}

fn summarize<'a>(records: impl Iterator<Item = &'a ProblemRecord>) -> Option<Summary> {
    let mut s = Summary {
        problems: 0,
        b3_p: 0.0,
        b3_r: 0.0,
        b3_f: 0.0,
        ari: 0.0,
    };
    for r in records {
        if let (Some(p), Some(rc), Some(f), Some(a)) = (r.b3_p, r.b3_r, r.b3_f, r.ari) {
            s.problems += 1;
            s.b3_p += p;
            s.b3_r += rc;
            s.b3_f += f;
            s.ari += a;
        }
    }
    if s.problems == 0 {
        return None;
    }
    let n = s.problems as f64;
    s.b3_p /= n;
    s.b3_r /= n;
    s.b3_f /= n;
    s.ari /= n;
    Some(s)
}

/// Unweighted means per method, overall and per group, plus mean ranks and
/// RMSE of k.
pub fn aggregate_report(records: Vec<ProblemRecord>) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("nothing to aggregate".into()));
    }
    let mut methods: Vec<&str> = records.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    let mut groups: Vec<&str> = records.iter().map(|r| r.group.as_str()).collect();
    groups.sort_unstable();
    groups.dedup();

    let mut agg = Aggregate::default();
    for &m in &methods {
        if let Some(s) = summarize(records.iter().filter(|r| r.method == m)) {
            agg.overall.insert(m.to_string(), s);
        }
        let (est, tru): (Vec<usize>, Vec<usize>) = records
            .iter()
            .filter(|r| r.method == m)
            .filter_map(|r| Some((r.k_est?, r.k_true?)))
            .unzip();
        if !est.is_empty() {
            agg.rmse_k.insert(m.to_string(), rmse_k(&est, &tru)?);
        }
    }
    for &g in &groups {
        let mut per = BTreeMap::new();
        for &m in &methods {
            if let Some(s) = summarize(records.iter().filter(|r| r.method == m && r.group == g)) {
                per.insert(m.to_string(), s);
            }
        }
        agg.per_group.insert(g.to_string(), per);
    }

    if methods.len() > 1 {
        let table = |pick: fn(&Summary) -> f64| -> BTreeMap<String, BTreeMap<String, f64>> {
            let mut t: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
            for (g, per) in &agg.per_group {
                for (m, s) in per {
                    t.entry(m.clone()).or_default().insert(g.clone(), pick(s));
                }
            }
            // only methods scored in every group can be ranked
            let n_groups = agg.per_group.len();
            t.retain(|_, v| v.len() == n_groups);
            t
        };
        let b3 = table(|s| s.b3_f);
        let ari = table(|s| s.ari);
        if b3.len() > 1 {
            agg.mean_ranks = Some(MeanRanks {
                b3_f: mean_rank(&b3)?,
                ari: mean_rank(&ari)?,
            });
        }
    }
    Ok(EvalReport {
        records,
        aggregate: agg,
    })
}
