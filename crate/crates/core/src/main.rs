use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use authorial::artifacts::{self, ClustersFile, ConstraintsFile, KReport};
use authorial::cluster::{baseline_random, baseline_singleton, CopKMeans, CopOutcome, SphericalKMeans};
use authorial::constraints::derive_constraints;
use authorial::corpus::{load_problem_set, TruthFormat};
use authorial::eval::{adjusted_rand_index, aggregate_report, bcubed, ProblemRecord};
use authorial::kestimate::{self, Diagnostics};
use authorial::pipeline::{self, KMode, LssrSource, MethodKind, RunConfig};
use authorial::topics::{GammaPrior, HdpConfig};
use authorial::{seed, Error};

#[derive(Parser)]
#[command(name = "cluster-authors", version, about = "Cluster short texts by author")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline over a directory of problems.
    Run(RunArgs),
    /// Fit the topic model on one problem and write its LSSR.
    Topics(TopicsArgs),
    /// Sample must-link / cannot-link constraints from a problem's truth.
    Constraints(ConstraintsArgs),
    /// Estimate k from a persisted normalized LSSR.
    EstimateK(EstimateArgs),
    /// Cluster a persisted normalized LSSR.
    Cluster(ClusterArgs),
    /// Score persisted cluster files against truth.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Sparse,
    Dense,
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthArg {
    Native,
    Pan,
}

impl From<TruthArg> for TruthFormat {
    fn from(t: TruthArg) -> Self {
        match t {
            TruthArg::Native => TruthFormat::Native,
            TruthArg::Pan => TruthFormat::Pan,
        }
    }
}

#[derive(Args)]
struct HdpArgs {
    #[arg(long, value_enum, default_value = "sparse")]
    preset: Preset,
    #[arg(long, default_value_t = HdpConfig::DESK_ITERATIONS)]
    iterations: usize,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma_shape: Option<f64>,
    #[arg(long)]
    gamma_scale: Option<f64>,
    #[arg(long)]
    alpha_shape: Option<f64>,
    #[arg(long)]
    alpha_scale: Option<f64>,
    /// Build the LSSR from counts averaged over this many final sweeps.
    #[arg(long, default_value_t = 0)]
    average_last: usize,
}

impl HdpArgs {
    fn config(&self) -> HdpConfig {
        let mut cfg = match self.preset {
            Preset::Sparse => HdpConfig::sparse(),
            Preset::Dense => HdpConfig::dense(),
            Preset::Standard => HdpConfig::standard(),
        }
        .with_iterations(self.iterations);
        if let Some(eta) = self.eta {
            cfg.eta = eta;
        }
        let merge = |p: GammaPrior, shape: Option<f64>, scale: Option<f64>| {
            GammaPrior::new(shape.unwrap_or(p.shape), scale.unwrap_or(p.scale))
        };
        cfg.gamma_prior = merge(cfg.gamma_prior, self.gamma_shape, self.gamma_scale);
        cfg.alpha_prior = merge(cfg.alpha_prior, self.alpha_shape, self.alpha_scale);
        cfg.average_last = self.average_last;
        cfg
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    root: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    hdp: HdpArgs,
    #[arg(long, default_value_t = 0.12)]
    ratio: f64,
    #[arg(long, default_value_t = 5)]
    sp_runs: usize,
    #[arg(long, default_value = "estimated")]
    k_mode: String,
    #[arg(long, value_delimiter = ',', default_value = "spkmeans,cop_kmeans,bl_r,bl_s")]
    methods: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value = "native")]
    truth_format: TruthArg,
}

#[derive(Args)]
struct TopicsArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    hdp: HdpArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    truth_format: TruthArg,
}

#[derive(Args)]
struct ConstraintsArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.12)]
    ratio: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    truth_format: TruthArg,
}

#[derive(Args)]
struct EstimateArgs {
    /// A normalized LSSR table (lssr_l2.tsv).
    #[arg(long)]
    lssr: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Use the constrained grid search with this constraints file.
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    lssr: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    method: String,
    /// Required by every method except the baselines.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of problems holding the truth files.
    #[arg(long)]
    root: PathBuf,
    /// Directory with one subdirectory of clusters_<method>.json per problem.
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    truth_format: TruthArg,
}

#[derive(Serialize)]
struct ErrorList {
    errors: Vec<ErrorEntry>,
}

#[derive(Serialize)]
struct ErrorEntry {
    problem: Option<String>,
    error: String,
}

fn parse_methods(names: &[String]) -> Result<Vec<MethodKind>, Error> {
    let mut methods: Vec<MethodKind> = names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?;
    methods.dedup();
    Ok(methods)
}

fn run(args: RunArgs) -> Result<Vec<ErrorEntry>, Error> {
    let cfg = RunConfig {
        master_seed: args.seed,
        hdp: args.hdp.config(),
        constraint_ratio: args.ratio,
        sp_runs: args.sp_runs,
        k_mode: args.k_mode.parse::<KMode>()?,
        methods: parse_methods(&args.methods)?,
        truth_format: args.truth_format.into(),
        lssr_source: if args.hdp.average_last > 0 {
            LssrSource::Averaged
        } else {
            LssrSource::FinalSample
        },
        out_dir: args.out,
        workers: args.workers,
        ..RunConfig::default()
    };
    let outcome = pipeline::run_collection(&args.root, &cfg)?;
    let overall = &outcome.report.aggregate.overall;
    for (method, s) in overall {
        println!("{method:<12} B3F {:.3}  ARI {:.3}", s.b3_f, s.ari);
    }
    Ok(outcome
        .errors
        .into_iter()
        .map(|e| ErrorEntry {
            problem: Some(e.problem),
            error: e.error,
        })
        .collect())
}

fn topics(args: TopicsArgs) -> Result<(), Error> {
    let problem = load_problem_set(&args.problem, args.truth_format.into())?;
    let source = if args.hdp.average_last > 0 {
        LssrSource::Averaged
    } else {
        LssrSource::FinalSample
    };
    let hdp = args
        .hdp
        .config()
        .with_seed(seed::derive(args.seed, &[&problem.problem_id, "hdp"]));
    let rep = pipeline::represent(&problem, &hdp, source)?;
    pipeline::write_representation(&args.out, &rep)?;
    println!("{} topics", rep.raw.dims());
    Ok(())
}

fn constraints(args: ConstraintsArgs) -> Result<(), Error> {
    let problem = load_problem_set(&args.problem, args.truth_format.into())?;
    let truth = problem
        .truth
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("problem has no ground truth".into()))?;
    let set = derive_constraints(
        truth,
        args.ratio,
        seed::derive(args.seed, &[&problem.problem_id, "constraints"]),
    )?;
    artifacts::write_json(
        &args.out.join(artifacts::CONSTRAINTS),
        &ConstraintsFile::new(&set, &problem.doc_ids()),
    )?;
    println!("{} must-link, {} cannot-link", set.ml.len(), set.cl.len());
    Ok(())
}

fn estimate_k(args: EstimateArgs) -> Result<(), Error> {
    let lssr = artifacts::read_lssr(&args.lssr, true)?;
    let mut report = KReport::default();
    match &args.constraints {
        Some(path) => {
            let file: ConstraintsFile = artifacts::read_json(path)?;
            let set = file.to_constraints(&lssr.doc_ids)?;
            report.constrained = Some(kestimate::estimate_k_constrained(lssr.view(), &set, args.seed)?.k);
        }
        None => {
            let est = kestimate::estimate_k_unsupervised(lssr.view(), args.seed)?;
            if let Diagnostics::Averaged {
                gmeans,
                gap,
                gap_curve,
            } = est.diagnostics
            {
                report.gmeans = Some(gmeans);
                report.gap = Some(gap);
                report.gap_curve = Some(gap_curve);
            }
            report.averaged = Some(est.k);
        }
    }
    artifacts::write_json(&args.out.join(artifacts::K_REPORT), &report)?;
    println!(
        "k = {}",
        report.constrained.or(report.averaged).unwrap_or_default()
    );
    Ok(())
}

fn cluster(args: ClusterArgs) -> Result<(), Error> {
    let lssr = artifacts::read_lssr(&args.lssr, true)?;
    let method: MethodKind = args.method.parse()?;
    let n = lssr.n_docs();
    let need_k = || {
        args.k
            .ok_or_else(|| Error::InvalidParameter(format!("--k is required for {method}")))
    };
    let clustering = match method {
        MethodKind::Spkmeans => SphericalKMeans::new(need_k()?).fit(lssr.view(), args.seed)?.0,
        MethodKind::CopKmeans => {
            let path = args
                .constraints
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("--constraints is required for cop_kmeans".into()))?;
            let file: ConstraintsFile = artifacts::read_json(path)?;
            let set = file.to_constraints(&lssr.doc_ids)?;
            match CopKMeans::new(need_k()?).fit(lssr.view(), &set, args.seed)? {
                CopOutcome::Success(c, _) => c,
                CopOutcome::Failure(f) => {
                    return Err(Error::InvalidParameter(format!(
                        "COP-KMeans failed: document {} has no legal cluster",
                        lssr.doc_ids[f.point]
                    )))
                }
            }
        }
        MethodKind::BlR => baseline_random(n, args.seed)?,
        MethodKind::BlS => baseline_singleton(n)?,
    };
    let file = ClustersFile::new(method.as_str(), &clustering, &lssr.doc_ids, args.seed);
    artifacts::write_json(
        &args.out.join(artifacts::clusters_file_name(method.as_str())),
        &file,
    )?;
    println!("{} clusters", clustering.k());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<Vec<ErrorEntry>, Error> {
    let groups = pipeline::read_groups(&args.root)?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for dir in pipeline::problem_dirs(&args.root)? {
        let problem = match load_problem_set(&dir, args.truth_format.into()) {
            Ok(p) => p,
            Err(e) => {
                errors.push(ErrorEntry {
                    problem: dir.file_name().map(|s| s.to_string_lossy().into_owned()),
                    error: e.to_string(),
                });
                continue;
            }
        };
        let pid = problem.problem_id.clone();
        let group = groups.get(&pid).map_or(pipeline::DEFAULT_GROUP, String::as_str);
        let Some(truth) = problem.truth.as_ref() else {
            continue;
        };
        let doc_ids = problem.doc_ids();
        for method in MethodKind::ALL {
            let path = args
                .clusters
                .join(&pid)
                .join(artifacts::clusters_file_name(method.as_str()));
            if !path.is_file() {
                continue;
            }
            let scored = read_and_score(&path, &doc_ids, truth.labels());
            match scored {
                Ok((b3, ari, k)) => records.push(ProblemRecord::scored(
                    &pid,
                    group,
                    method.as_str(),
                    b3,
                    ari,
                    k,
                    Some(truth.k()),
                )),
                Err(e) => errors.push(ErrorEntry {
                    problem: Some(pid.clone()),
                    error: e.to_string(),
                }),
            }
        }
    }
    let report = aggregate_report(records)?;
    artifacts::write_report(&args.out, &report)?;
    println!("{} records", report.records.len());
    Ok(errors)
}

fn read_and_score(
    path: &Path,
    doc_ids: &[String],
    truth: &[usize],
) -> Result<(authorial::eval::BCubed, f64, usize), Error> {
    let file: ClustersFile = artifacts::read_json(path)?;
    let labels = file.labels(doc_ids)?;
    Ok((
        bcubed(&labels, truth)?,
        adjusted_rand_index(&labels, truth)?,
        file.k,
    ))
}

fn print_errors(errors: Vec<ErrorEntry>) {
    let list = ErrorList { errors };
    eprintln!("{}", serde_json::to_string_pretty(&list).unwrap_or_default());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Topics(a) => topics(a).map(|_| Vec::new()),
        Command::Constraints(a) => constraints(a).map(|_| Vec::new()),
        Command::EstimateK(a) => estimate_k(a).map(|_| Vec::new()),
        Command::Cluster(a) => cluster(a).map(|_| Vec::new()),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(errors) if errors.is_empty() => ExitCode::SUCCESS,
        Ok(errors) => {
            print_errors(errors);
            ExitCode::FAILURE
        }
        Err(e) => {
            let problem = match &e {
                Error::Problem { problem, .. } => Some(problem.clone()),
                _ => None,
            };
            print_errors(vec![ErrorEntry {
                problem,
                error: e.to_string(),
            }]);
            ExitCode::FAILURE
        }
    }
}
