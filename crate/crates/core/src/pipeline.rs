//! End-to-end orchestration: corpus -> LSSR -> k estimation -> clustering ->
//! evaluation, with every artifact persisted under the output directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, ClustersFile, ConstraintsFile, KReport, KRunEstimate};
use crate::cluster::{
    baseline_random, baseline_singleton, Clustering, CopKMeans, CopOutcome, SphericalKMeans,
};
use crate::constraints::{derive_constraints, DEFAULT_RATIO};
use crate::corpus::{load_problem_set, vectorize, ProblemSet, Truth, TruthFormat};
use crate::error::{Error, Result};
use crate::eval::{adjusted_rand_index, aggregate_report, bcubed, EvalReport, ProblemRecord};
use crate::kestimate::{self, Diagnostics, KEstimate};
use crate::lssr::{build_lssr, build_lssr_averaged, l2_normalize, Lssr};
use crate::seed;
use crate::topics::{run_sampler, HdpConfig, TopicPosterior};

pub const GROUPS_FILE: &str = "groups.json";
pub const PAN_INFO_FILE: &str = "info.json";
pub const DEFAULT_GROUP: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Spkmeans,
    CopKmeans,
    BlR,
    BlS,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::Spkmeans,
        MethodKind::CopKmeans,
        MethodKind::BlR,
        MethodKind::BlS,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Spkmeans => "spkmeans",
            MethodKind::CopKmeans => "cop_kmeans",
            MethodKind::BlR => "bl_r",
            MethodKind::BlS => "bl_s",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KMode {
    #[default]
    Estimated,
    /// Hand every method the ground-truth number of authors.
    True,
}

impl FromStr for KMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(KMode::Estimated),
            "true" => Ok(KMode::True),
            _ => Err(Error::InvalidParameter(format!("unknown k mode {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LssrSource {
    #[default]
    FinalSample,
    Averaged,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub master_seed: u64,
    /// The seed field is replaced by a per-problem derived seed.
    pub hdp: HdpConfig,
    pub constraint_ratio: f64,
    pub sp_runs: usize,
    pub k_mode: KMode,
    pub methods: Vec<MethodKind>,
    pub truth_format: TruthFormat,
    pub lssr_source: LssrSource,
    /// Restarts of every spherical k-means clustering.
    pub sp_n_init: usize,
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            hdp: HdpConfig::sparse().with_iterations(HdpConfig::DESK_ITERATIONS),
            constraint_ratio: DEFAULT_RATIO,
            sp_runs: 5,
            k_mode: KMode::Estimated,
            methods: MethodKind::ALL.to_vec(),
            truth_format: TruthFormat::Native,
            lssr_source: LssrSource::FinalSample,
            sp_n_init: kestimate::ESTIMATOR_N_INIT,
            workers: 1,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sp_runs < 1 {
            return Err(Error::InvalidParameter("sp_runs must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.constraint_ratio) {
            return Err(Error::InvalidParameter(
                "constraint ratio must be in [0, 1]".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        self.hdp.validate()
    }

    fn stage_seed(&self, problem: &str, stage: &str) -> u64 {
        seed::derive(self.master_seed, &[problem, stage])
    }

    fn run_seed(&self, problem: &str, stage: &str, run: usize) -> u64 {
        seed::derive(self.master_seed, &[problem, stage, &run.to_string()])
    }
}

/// LSSR stage of one problem.
#[derive(Debug, Clone)]
pub struct Representation {
    pub posterior: TopicPosterior,
    pub raw: Lssr,
    pub normalized: Lssr,
}

pub fn represent(problem: &ProblemSet, hdp: &HdpConfig, source: LssrSource) -> Result<Representation> {
    let dtm = vectorize(problem)?;
    let posterior = run_sampler(&dtm, hdp)?;
    let raw = match source {
        LssrSource::FinalSample => build_lssr(&posterior)?,
        LssrSource::Averaged => build_lssr_averaged(&posterior)?,
    };
    let normalized = l2_normalize(&raw)?;
    Ok(Representation {
        posterior,
        raw,
        normalized,
    })
}

pub fn write_representation(dir: &Path, rep: &Representation) -> Result<()> {
    artifacts::write_lssr_raw(&dir.join(artifacts::LSSR_RAW), &rep.raw)?;
    artifacts::write_lssr_l2(&dir.join(artifacts::LSSR_L2), &rep.normalized)?;
    artifacts::write_topics(&dir.join(artifacts::TOPICS), &rep.posterior)?;
    artifacts::write_ll_trace(&dir.join(artifacts::LL_TRACE), &rep.posterior.ll_trace)
}

/// Everything produced for one problem.
#[derive(Debug, Clone)]
pub struct ProblemOutcome {
    pub problem_id: String,
    pub n_topics: usize,
    pub records: Vec<ProblemRecord>,
    pub clusterings: BTreeMap<MethodKind, ClustersFile>,
    pub k_report: KReport,
}

fn score(truth: &Truth, labels: &[usize]) -> Result<(crate::eval::BCubed, f64)> {
    Ok((
        bcubed(labels, truth.labels())?,
        adjusted_rand_index(labels, truth.labels())?,
    ))
}

fn mean_rounded(values: &[usize]) -> usize {
    let sum: usize = values.iter().sum();
    (2 * sum + values.len()) / (2 * values.len())
}

pub fn run_problem(problem: &ProblemSet, group: &str, cfg: &RunConfig) -> Result<ProblemOutcome> {
    run_problem_inner(problem, group, cfg).map_err(|e| e.in_problem(&problem.problem_id))
}

fn run_problem_inner(problem: &ProblemSet, group: &str, cfg: &RunConfig) -> Result<ProblemOutcome> {
    cfg.validate()?;
    let pid = problem.problem_id.as_str();
    let truth = problem
        .truth
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("problem has no ground truth".into()))?;
    let true_k = truth.k();
    let doc_ids = problem.doc_ids();
    let n = problem.len();

    let started = std::time::Instant::now();
    let hdp = cfg.hdp.clone().with_seed(cfg.stage_seed(pid, "hdp"));
    let rep = represent(problem, &hdp, cfg.lssr_source)?;
    log::info!(
        "{pid}: LSSR with {} topics in {:.2?}",
        rep.raw.dims(),
        started.elapsed()
    );
    let out_dir = cfg.out_dir.as_ref().map(|d| d.join(pid));
    if let Some(dir) = &out_dir {
        write_representation(dir, &rep)?;
    }
    let data = rep.normalized.view();

    let mut records = Vec::new();
    let mut clusterings = BTreeMap::new();
    let mut k_report = KReport {
        true_k: Some(true_k),
        ..Default::default()
    };

    for &method in &cfg.methods {
        let name = method.as_str();
        match method {
            MethodKind::Spkmeans => {
                let mut ks = Vec::with_capacity(cfg.sp_runs);
                let (mut p, mut r, mut f, mut ari) = (0.0, 0.0, 0.0, 0.0);
                for run in 0..cfg.sp_runs {
                    let run_seed = cfg.run_seed(pid, name, run);
                    let k = match cfg.k_mode {
                        KMode::True => true_k.min(n),
                        KMode::Estimated => {
                            let est =
                                kestimate::estimate_k_unsupervised(data, seed::derive(run_seed, &["k"]))?;
                            if let Diagnostics::Averaged {
                                gmeans,
                                gap,
                                gap_curve,
                            } = est.diagnostics
                            {
                                k_report.runs.push(KRunEstimate {
                                    gmeans,
                                    gap,
                                    averaged: est.k,
                                });
                                if run == 0 {
                                    k_report.gap_curve = Some(gap_curve);
                                }
                            }
                            est.k
                        }
                    };
                    let (clustering, _) = SphericalKMeans::new(k)
                        .with_n_init(cfg.sp_n_init)
                        .fit(data, seed::derive(run_seed, &["fit"]))?;
                    let (b3, a) = score(truth, clustering.labels())?;
                    p += b3.precision;
                    r += b3.recall;
                    f += b3.f;
                    ari += a;
                    ks.push(k);
                    if run == 0 {
                        clusterings.insert(method, ClustersFile::new(name, &clustering, &doc_ids, run_seed));
                    }
                }
                let runs = cfg.sp_runs as f64;
                let b3 = crate::eval::BCubed {
                    precision: p / runs,
                    recall: r / runs,
                    f: f / runs,
                };
                if !k_report.runs.is_empty() {
                    let col = |pick: fn(&KRunEstimate) -> usize| -> usize {
                        mean_rounded(&k_report.runs.iter().map(pick).collect::<Vec<_>>())
                    };
                    k_report.gmeans = Some(col(|r| r.gmeans));
                    k_report.gap = Some(col(|r| r.gap));
                    k_report.averaged = Some(col(|r| r.averaged));
                }
                records.push(ProblemRecord::scored(
                    pid,
                    group,
                    name,
                    b3,
                    ari / runs,
                    mean_rounded(&ks),
                    Some(true_k),
                ));
            }
            MethodKind::CopKmeans => {
                let constraints =
                    derive_constraints(truth, cfg.constraint_ratio, cfg.stage_seed(pid, "constraints"))?;
                if let Some(dir) = &out_dir {
                    artifacts::write_json(
                        &dir.join(artifacts::CONSTRAINTS),
                        &ConstraintsFile::new(&constraints, &doc_ids),
                    )?;
                }
                let cop_seed = cfg.stage_seed(pid, name);
                let outcome = match cfg.k_mode {
                    KMode::True => {
                        let k = true_k.min(n);
                        match CopKMeans::new(k).fit(data, &constraints, cop_seed)? {
                            CopOutcome::Success(c, _) => Ok(c),
                            CopOutcome::Failure(f) => Err(format!(
                                "COP-KMeans failed at k = {k}: document {} has no legal cluster after {} attempts",
                                doc_ids[f.point], f.attempts
                            )),
                        }
                    }
                    KMode::Estimated => match kestimate::estimate_k_constrained(data, &constraints, cop_seed)
                    {
                        Ok(KEstimate {
                            k,
                            diagnostics: Diagnostics::ConstrainedGrid { clustering, .. },
                            ..
                        }) => {
                            k_report.constrained = Some(k);
                            Ok(clustering)
                        }
                        Ok(_) => unreachable!("constrained grid reports its clustering"),
                        Err(e @ Error::NoFeasibleK { .. }) => Err(e.to_string()),
                        Err(e) => return Err(e),
                    },
                };
                match outcome {
                    Ok(clustering) => {
                        let (b3, a) = score(truth, clustering.labels())?;
                        records.push(ProblemRecord::scored(
                            pid,
                            group,
                            name,
                            b3,
                            a,
                            clustering.k(),
                            Some(true_k),
                        ));
                        clusterings.insert(method, ClustersFile::new(name, &clustering, &doc_ids, cop_seed));
                    }
                    Err(msg) => {
                        log::warn!("{pid}: {msg}");
                        records.push(ProblemRecord::failed(pid, group, name, Some(true_k), msg));
                    }
                }
            }
            MethodKind::BlR | MethodKind::BlS => {
                let bl_seed = cfg.stage_seed(pid, name);
                let clustering: Clustering = if method == MethodKind::BlR {
                    baseline_random(n, bl_seed)?
                } else {
                    baseline_singleton(n)?
                };
                let (b3, a) = score(truth, clustering.labels())?;
                records.push(ProblemRecord::scored(
                    pid,
                    group,
                    name,
                    b3,
                    a,
                    clustering.k(),
                    Some(true_k),
                ));
                clusterings.insert(method, ClustersFile::new(name, &clustering, &doc_ids, bl_seed));
            }
        }
    }

    if let Some(dir) = &out_dir {
        artifacts::write_json(&dir.join(artifacts::K_REPORT), &k_report)?;
        for (method, file) in &clusterings {
            artifacts::write_json(&dir.join(artifacts::clusters_file_name(method.as_str())), file)?;
        }
    }
    Ok(ProblemOutcome {
        problem_id: pid.to_string(),
        n_topics: rep.raw.dims(),
        records,
        clusterings,
        k_report,
    })
}

#[derive(Deserialize)]
struct PanInfo {
    folder: String,
    language: String,
    genre: String,
}

/// problem id -> group tag, from `groups.json`, else a PAN `info.json`.
pub fn read_groups(root: &Path) -> Result<BTreeMap<String, String>> {
    let manifest = root.join(GROUPS_FILE);
    if manifest.is_file() {
        return artifacts::read_json(&manifest);
    }
    let info = root.join(PAN_INFO_FILE);
    if info.is_file() {
        let entries: Vec<PanInfo> = artifacts::read_json(&info)?;
        return Ok(entries
            .into_iter()
            .map(|e| {
                let genre: String = e.genre.chars().take(2).collect();
                (e.folder, format!("{}-{}", e.language, genre))
            })
            .collect());
    }
    Ok(BTreeMap::new())
}

pub fn problem_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::MissingDirectory(root.to_path_buf()));
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if dirs.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no problem directories under {}",
            root.display()
        )));
    }
    Ok(dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemError {
    pub problem: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct CollectionOutcome {
    pub report: EvalReport,
    pub errors: Vec<ProblemError>,
}

/// Runs every problem directory under `root`; failures are collected and
/// the run continues.
pub fn run_collection(root: &Path, cfg: &RunConfig) -> Result<CollectionOutcome> {
    cfg.validate()?;
    let dirs = problem_dirs(root)?;
    let groups = read_groups(root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let results: Vec<(String, Result<ProblemOutcome>)> = pool.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let id = dir
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let group = groups.get(&id).map_or(DEFAULT_GROUP, String::as_str);
                let outcome = load_problem_set(dir, cfg.truth_format)
                    .map_err(|e| e.in_problem(&id))
                    .and_then(|p| run_problem(&p, group, cfg));
                (id, outcome)
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (id, r) in results {
        match r {
            Ok(o) => records.extend(o.records),
            Err(e) => errors.push(ProblemError {
                problem: id,
                error: e.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "every problem failed: {}",
            errors
                .iter()
                .map(|e| e.error.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    let report = aggregate_report(records)?;
    if let Some(out) = &cfg.out_dir {
        artifacts::write_report(out, &report)?;
        if !errors.is_empty() {
            artifacts::write_json(&out.join(artifacts::ERRORS), &errors)?;
        }
    }
    Ok(CollectionOutcome { report, errors })
}
