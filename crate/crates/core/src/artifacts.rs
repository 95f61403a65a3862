//! On-disk formats for intermediates and results.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cluster::Clustering;
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::kestimate::GapCurve;
use crate::lssr::Lssr;
use crate::topics::TopicPosterior;

pub const LSSR_RAW: &str = "lssr_raw.tsv";
pub const LSSR_L2: &str = "lssr_l2.tsv";
pub const TOPICS: &str = "topics.tsv";
pub const LL_TRACE: &str = "ll_trace.csv";
pub const K_REPORT: &str = "k_report.json";
pub const CONSTRAINTS: &str = "constraints.json";
pub const REPORT: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const ERRORS: &str = "errors.json";

pub fn clusters_file_name(method: &str) -> String {
    format!("clusters_{method}.json")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// `%.12g`-style rendering.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').expect("scientific");
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{e}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn lssr_tsv(lssr: &Lssr, cell: impl Fn(f64) -> String) -> String {
    let mut out = String::from("doc_id");
    for j in 0..lssr.dims() {
        out.push_str(&format!("\tt{j}"));
    }
    out.push('\n');
    for (id, row) in lssr.doc_ids.iter().zip(lssr.matrix.rows()) {
        out.push_str(id);
        for &x in row {
            out.push('\t');
            out.push_str(&cell(x));
        }
        out.push('\n');
    }
    out
}

/// Integer counts.
pub fn write_lssr_raw(path: &Path, lssr: &Lssr) -> Result<()> {
    write(path, &lssr_tsv(lssr, |x| format!("{}", x.round() as i64)))
}

/// Reals at 12 significant digits.
pub fn write_lssr_l2(path: &Path, lssr: &Lssr) -> Result<()> {
    write(path, &lssr_tsv(lssr, |x| format_significant(x, 12)))
}

pub fn read_lssr(path: &Path, normalized: bool) -> Result<Lssr> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |detail: String| Error::Malformed {
        what: "LSSR table",
        detail: format!("{}: {detail}", path.display()),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| malformed("empty file".into()))?;
    let dims = header.split('\t').count().saturating_sub(1);
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        ids.push(cells.next().unwrap_or_default().to_string());
        let row: Vec<f64> = cells
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|e| malformed(format!("line {}: {e}", ln + 2)))
            })
            .collect::<Result<_>>()?;
        if row.len() != dims {
            return Err(malformed(format!(
                "line {} has {} values, expected {dims}",
                ln + 2,
                row.len()
            )));
        }
        values.extend(row);
    }
    let matrix = Array2::from_shape_vec((ids.len(), dims), values).map_err(|e| malformed(e.to_string()))?;
    Lssr::new(ids, matrix, normalized)
}

pub fn write_topics(path: &Path, posterior: &TopicPosterior) -> Result<()> {
    let mut out = String::from("topic");
    for t in &posterior.terms {
        out.push('\t');
        out.push_str(t);
    }
    out.push('\n');
    for (k, row) in posterior.topic_word_counts.rows().into_iter().enumerate() {
        out.push_str(&format!("t{k}"));
        for &c in row {
            out.push_str(&format!("\t{c}"));
        }
        out.push('\n');
    }
    write(path, &out)
}

pub fn write_ll_trace(path: &Path, trace: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("sweep,per_word_ll\n");
    for &(s, ll) in trace {
        out.push_str(&format!("{s},{}\n", format_significant(ll, 12)));
    }
    write(path, &out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRunEstimate {
    pub gmeans: usize,
    pub gap: usize,
    pub averaged: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KReport {
    pub gmeans: Option<usize>,
    pub gap: Option<usize>,
    pub averaged: Option<usize>,
    pub constrained: Option<usize>,
    pub true_k: Option<usize>,
    pub gap_curve: Option<GapCurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<KRunEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub method: String,
    pub k: usize,
    pub clusters: Vec<Vec<String>>,
    pub seed: u64,
}

impl ClustersFile {
    pub fn new(method: &str, clustering: &Clustering, doc_ids: &[String], seed: u64) -> Self {
        let clusters = clustering
            .members()
            .into_iter()
            .map(|m| m.into_iter().map(|i| doc_ids[i].clone()).collect())
            .collect();
        ClustersFile {
            method: method.to_string(),
            k: clustering.k(),
            clusters,
            seed,
        }
    }

    /// Labels in the order of `doc_ids`.
    pub fn labels(&self, doc_ids: &[String]) -> Result<Vec<usize>> {
        let truth = crate::corpus::Truth::from_clusters(doc_ids, &self.clusters)?;
        Ok(truth.labels().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintsFile {
    pub ratio: f64,
    pub ml: Vec<[String; 2]>,
    pub cl: Vec<[String; 2]>,
}

impl ConstraintsFile {
    pub fn new(constraints: &ConstraintSet, doc_ids: &[String]) -> Self {
        let named = |pairs: &std::collections::BTreeSet<(usize, usize)>| {
            pairs
                .iter()
                .map(|&(a, b)| [doc_ids[a].clone(), doc_ids[b].clone()])
                .collect()
        };
        ConstraintsFile {
            ratio: constraints.ratio,
            ml: named(&constraints.ml),
            cl: named(&constraints.cl),
        }
    }

    pub fn to_constraints(&self, doc_ids: &[String]) -> Result<ConstraintSet> {
        let index: BTreeMap<&str, usize> = doc_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
        let resolve = |pairs: &[[String; 2]]| -> Result<Vec<(usize, usize)>> {
            pairs
                .iter()
                .map(|[a, b]| {
                    let ia = *index
                        .get(a.as_str())
                        .ok_or_else(|| Error::UnknownDocument(a.clone()))?;
                    let ib = *index
                        .get(b.as_str())
                        .ok_or_else(|| Error::UnknownDocument(b.clone()))?;
                    if ia == ib {
                        return Err(Error::Malformed {
                            what: "constraints",
                            detail: format!("self pair on {a}"),
                        });
                    }
                    Ok((ia, ib))
                })
                .collect()
        };
        let mut set = ConstraintSet::from_pairs(doc_ids.len(), &resolve(&self.ml)?, &resolve(&self.cl)?);
        if !set.ml.is_disjoint(&set.cl) {
            return Err(Error::Malformed {
                what: "constraints",
                detail: "a pair is both must-link and cannot-link".into(),
            });
        }
        set.ratio = self.ratio;
        Ok(set)
    }
}

pub fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    write_json(&dir.join(REPORT), report)?;
    write(&dir.join(REPORT_CSV), &report_csv(report))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format_significant(x, 12)).unwrap_or_default()
}

/// Per-problem records, one CSV row each.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from("problem_id,group,method,b3_p,b3_r,b3_f,ari,k_est,k_true\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.problem_id,
            r.group,
            r.method,
            opt_f(r.b3_p),
            opt_f(r.b3_r),
            opt_f(r.b3_f),
            opt_f(r.ari),
            opt(r.k_est),
            opt(r.k_true)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.6, 12), "0.6");
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(-2.5e-9, 12), "-2.5e-9");
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(123.456, 4), "123.5");
    }

    #[test]
    fn lssr_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lssr = Lssr::new(
            vec!["a.txt".into(), "b.txt".into()],
            ndarray::array![[0.6, 0.8], [1.0, 0.0]],
            true,
        )
        .unwrap();
        let path = dir.path().join(LSSR_L2);
        write_lssr_l2(&path, &lssr).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "doc_id\tt0\tt1\na.txt\t0.6\t0.8\nb.txt\t1\t0\n");
        assert_eq!(read_lssr(&path, true).unwrap(), lssr);
    }

    #[test]
    fn constraints_file_round_trip() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let set = ConstraintSet::from_pairs(3, &[(0, 1)], &[(1, 2)]);
        let file = ConstraintsFile::new(&set, &ids);
        assert_eq!(file.ml, vec![["a".to_string(), "b".to_string()]]);
        assert_eq!(file.to_constraints(&ids).unwrap(), set);
    }
}
