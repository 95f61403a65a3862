//! Acceptance checks, one line per criterion. Runs with its own harness so
//! the verdicts show up in plain `cargo test` output.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::{s, Array2};
use rand::Rng;

use authorial::cluster::{baseline_random, baseline_singleton, CopKMeans, CopOutcome, SphericalKMeans};
use authorial::constraints::derive_constraints;
use authorial::corpus::{vectorize, Document, ProblemSet, Truth, TruthFormat};
use authorial::eval::{adjusted_rand_index, bcubed, rmse_k};
use authorial::kestimate::{
    default_gap_k_max, estimate_k_constrained, estimate_k_gap, estimate_k_gmeans, estimate_k_unsupervised,
    Diagnostics, ESTIMATOR_N_INIT, GAP_REFERENCES, GMEANS_SIGNIFICANCE,
};
use authorial::lssr::{build_lssr, l2_normalize, Lssr};
use authorial::pipeline::{run_collection, MethodKind, RunConfig};
use authorial::seed;
use authorial::synth::{duplicated_groups, unit_mixture, write_suite};
use authorial::topics::{HdpConfig, HdpSampler, TopicPosterior};

type Verdict = Result<String, String>;
type Check = Box<dyn Fn() -> Option<Verdict>>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Brute-force oracles

/// All set partitions of `n` items as restricted growth strings.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = if prefix.is_empty() { 0 } else { max + 1 };
        for label in 0..=next {
            prefix.push(label);
            grow(prefix, n, max.max(label), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, 0, &mut out);
    out
}

/// Per-item B-cubed straight from the definition.
fn oracle_bcubed(pred: &[usize], truth: &[usize]) -> (f64, f64, f64) {
    let n = pred.len();
    let (mut p, mut r) = (0.0, 0.0);
    for i in 0..n {
        let same_pred = (0..n).filter(|&j| pred[j] == pred[i]).count() as f64;
        let same_truth = (0..n).filter(|&j| truth[j] == truth[i]).count() as f64;
        let both = (0..n)
            .filter(|&j| pred[j] == pred[i] && truth[j] == truth[i])
            .count() as f64;
        p += both / same_pred;
        r += both / same_truth;
    }
    p /= n as f64;
    r /= n as f64;
    (p, r, 2.0 * p * r / (p + r))
}

/// Hubert-Arabie ARI from explicit pair counts. A zero denominator only
/// arises when both partitions are the same trivial partition.
fn oracle_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (pred[i] == pred[j], truth[i] == truth[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let denom = (a + b) * (b + d) + (a + c) * (c + d);
    if denom == 0.0 {
        assert!(b == 0.0 && c == 0.0, "zero denominator on different partitions");
        return 1.0;
    }
    2.0 * (a * d - b * c) / denom
}

// ---------------------------------------------------------------------------

fn metric_oracles() -> Verdict {
    let mut pairs = 0usize;
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let parts = partitions(n);
        for pred in &parts {
            for truth in &parts {
                let got = bcubed(pred, truth).map_err(|e| e.to_string())?;
                let (p, r, f) = oracle_bcubed(pred, truth);
                let ari = adjusted_rand_index(pred, truth).map_err(|e| e.to_string())?;
                let want_ari = oracle_ari(pred, truth);
                let err = [
                    (got.precision - p).abs(),
                    (got.recall - r).abs(),
                    (got.f - f).abs(),
                    (ari - want_ari).abs(),
                ]
                .into_iter()
                .fold(0.0, f64::max);
                ensure(err <= 1e-12, || {
                    format!("pred {pred:?} truth {truth:?} differs by {err:e}")
                })?;
                worst = worst.max(err);
                pairs += 1;
            }
        }
    }
    let bell: Vec<usize> = (1..=6).map(|n| partitions(n).len()).collect();
    ensure(bell == [1, 2, 5, 15, 52, 203], || {
        format!("partition counts {bell:?}")
    })?;
    Ok(format!(
        "{pairs} partition pairs up to n = 6, max deviation {worst:e}"
    ))
}

fn worked_metric_values() -> Verdict {
    let singletons = [0, 1, 2];
    let ab_c = [0, 0, 1];
    let abc = [0, 0, 0];
    let f1 = bcubed(&singletons, &ab_c).unwrap().f;
    let f2 = bcubed(&abc, &ab_c).unwrap().f;
    let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
    let want1 = oracle_bcubed(&singletons, &ab_c).2;
    let want2 = oracle_bcubed(&abc, &ab_c).2;
    let want3 = oracle_ari(&[0, 0, 1, 1], &[0, 1, 0, 1]);
    ensure(
        (want1 - 0.8).abs() < 1e-12 && (want2 - 5.0 / 7.0).abs() < 1e-12 && (want3 + 0.5).abs() < 1e-12,
        || format!("oracles give {want1}, {want2}, {want3}"),
    )?;
    ensure((f1 - want1).abs() < 1e-12, || format!("B3F singletons {f1}"))?;
    ensure((f2 - want2).abs() < 1e-12, || format!("B3F one cluster {f2}"))?;
    ensure((ari - want3).abs() < 1e-12, || format!("ARI {ari}"))?;
    Ok(format!("B3F {f1:.4} and {f2:.4}, ARI {ari:.4}"))
}

fn constant_baselines() -> Verdict {
    let sizes = [5, 4, 3, 3, 3, 2];
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    let mut sum = 0.0;
    for seed in 0..1000u64 {
        let c = baseline_random(truth.len(), seed).map_err(|e| e.to_string())?;
        sum += adjusted_rand_index(c.labels(), &truth).unwrap();
    }
    let mean = sum / 1000.0;
    ensure(mean.abs() <= 0.02, || format!("BL_r mean ARI {mean}"))?;

    let mut rng = seed::rng(99);
    let mut checked = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..30);
        let k = rng.random_range(1..n);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let truth = Truth::from_labels(&labels);
        if truth.k() == n {
            continue;
        }
        let ari = adjusted_rand_index(baseline_singleton(n).unwrap().labels(), truth.labels()).unwrap();
        ensure(ari == 0.0, || format!("BL_s ARI {ari} on {labels:?}"))?;
        checked += 1;
    }
    Ok(format!(
        "BL_r mean ARI {mean:+.4} over 1000 seeds; BL_s exactly 0 on {checked} truths"
    ))
}

fn random_unit_rows(n: usize, dim: usize, rng: &mut seed::Rng) -> Array2<f64> {
    let mut data = Array2::from_shape_fn((n, dim), |_| rng.random::<f64>() - 0.3);
    for mut row in data.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row /= norm;
    }
    data
}

fn spherical_kmeans_properties() -> Verdict {
    let mut rng = seed::rng(4);
    let mut steps = 0;
    for run in 0..100u64 {
        let data = random_unit_rows(200, 8, &mut rng);
        let k = rng.random_range(2..=12);
        let (_, model) = SphericalKMeans::new(k)
            .fit(data.view(), run)
            .map_err(|e| e.to_string())?;
        for w in model.objective_trace.windows(2) {
            ensure(w[1] >= w[0] - 1e-12 * w[0].abs(), || {
                format!("run {run}: objective {} -> {}", w[0], w[1])
            })?;
            steps += 1;
        }
        for c in model.centroids.rows() {
            let norm = c.dot(&c).sqrt();
            ensure((norm - 1.0).abs() <= 1e-9, || {
                format!("run {run}: centroid norm {norm}")
            })?;
        }
    }
    let (data, truth) = duplicated_groups(&[7, 5, 9], 4);
    for s in 0..10 {
        let (c, _) = SphericalKMeans::new(3).fit(data.view(), s).unwrap();
        let ari = adjusted_rand_index(c.labels(), &truth).unwrap();
        ensure(ari == 1.0, || format!("duplicated groups, seed {s}: ARI {ari}"))?;
    }
    Ok(format!(
        "100 runs, {steps} iteration steps monotone, centroids unit, duplicated groups recovered"
    ))
}

fn cop_kmeans_properties() -> Verdict {
    let mut rng = seed::rng(5);
    let mut successes = 0;
    let mut failures = 0;
    for p in 0..100u64 {
        let n = rng.random_range(8..40);
        let k_true = rng.random_range(2..=6.min(n));
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k_true)).collect();
        let truth = Truth::from_labels(&labels);
        let data = random_unit_rows(n, 6, &mut rng);
        let ratio = rng.random_range(0.02..0.4);
        let cs = derive_constraints(&truth, ratio, p).map_err(|e| e.to_string())?;
        let k = rng.random_range(1..=n / 2);
        match CopKMeans::new(k)
            .fit(data.view(), &cs, p)
            .map_err(|e| e.to_string())?
        {
            CopOutcome::Success(c, _) => {
                let v = cs.violations(c.labels());
                ensure(v == 0, || format!("problem {p}: {v} violations"))?;
                successes += 1;
            }
            CopOutcome::Failure(_) => failures += 1,
        }
    }
    ensure(successes >= 50, || format!("only {successes} successful runs"))?;

    let two = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
    let cl = authorial::constraints::ConstraintSet::from_pairs(2, &[], &[(0, 1)]);
    ensure(
        CopKMeans::new(1).fit(two.view(), &cl, 0).unwrap().is_failure(),
        || "two CL-linked points at k = 1 did not fail".into(),
    )?;

    let mut wins = 0;
    let mut detail = Vec::new();
    for p in 0..20u64 {
        let (data, labels) = unit_mixture(4, 5, 8, 0.35, seed::derive(7, &["mixture", &p.to_string()]));
        let truth = Truth::from_labels(&labels);
        let cs = derive_constraints(&truth, 0.12, seed::derive(7, &["constraints", &p.to_string()])).unwrap();
        let sp_k = estimate_k_unsupervised(data.view(), p).unwrap().k;
        let (sp, _) = SphericalKMeans::new(sp_k)
            .with_n_init(ESTIMATOR_N_INIT)
            .fit(data.view(), p)
            .unwrap();
        let sp_f = bcubed(sp.labels(), truth.labels()).unwrap().f;
        let cop_f = match estimate_k_constrained(data.view(), &cs, p).map(|e| e.diagnostics) {
            Ok(Diagnostics::ConstrainedGrid { clustering, .. }) => {
                bcubed(clustering.labels(), truth.labels()).unwrap().f
            }
            Ok(_) => return Err("constrained grid returned no clustering".into()),
            Err(_) => 0.0,
        };
        if cop_f >= sp_f {
            wins += 1;
        }
        detail.push(format!("{cop_f:.2}/{sp_f:.2}"));
    }
    ensure(wins >= 16, || {
        format!("COP >= SP on {wins}/20 (cop/sp B3F: {})", detail.join(" "))
    })?;
    Ok(format!(
        "{successes} successful runs without violations ({failures} failures), CL pair fails at k = 1, COP >= SP on {wins}/20"
    ))
}

fn mixture_of_200(k: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let per = 200_usize.div_ceil(k);
    let (data, labels) = unit_mixture(k, per, 8, 0.05, seed);
    (data.slice(s![0..200, ..]).to_owned(), labels[..200].to_vec())
}

fn k_estimation() -> Verdict {
    let mut lines = Vec::new();
    for k in [2, 3, 5] {
        let (mut g_hits, mut gap_hits) = (0, 0);
        let mut seen = Vec::new();
        for trial in 0..10u64 {
            let (data, _) = mixture_of_200(k, seed::derive(11, &["k", &k.to_string(), &trial.to_string()]));
            let g = estimate_k_gmeans(data.view(), GMEANS_SIGNIFICANCE, trial)
                .map_err(|e| e.to_string())?
                .k;
            let gap = estimate_k_gap(data.view(), default_gap_k_max(200), GAP_REFERENCES, trial)
                .map_err(|e| e.to_string())?
                .k;
            g_hits += usize::from(g == k);
            gap_hits += usize::from(gap == k);
            seen.push((g, gap));
        }
        ensure(g_hits >= 8 && gap_hits >= 8, || {
            format!("k = {k}: G-means {g_hits}/10, Gap {gap_hits}/10, (gmeans, gap) = {seen:?}")
        })?;
        lines.push(format!("k={k}: G-means {g_hits}/10, Gap {gap_hits}/10"));
    }
    let rmse = rmse_k(&[4, 8], &[6, 6]).unwrap();
    ensure(rmse == 2.0, || format!("rmse_k = {rmse}"))?;

    let (data, labels) = duplicated_groups(&[3, 3], 2);
    let truth = Truth::from_labels(&labels);
    for s in 0..5u64 {
        let cs = derive_constraints(&truth, 0.3, s).unwrap();
        let k = estimate_k_constrained(data.view(), &cs, s)
            .map_err(|e| e.to_string())?
            .k;
        ensure(k == 2, || format!("constrained fixture seed {s}: k = {k}"))?;
    }
    Ok(format!(
        "{}; rmse_k = 2; constrained fixture k = 2",
        lines.join(", ")
    ))
}

fn disjoint_topic_corpus(seed_value: u64) -> (ProblemSet, Vec<usize>) {
    let mut rng = seed::rng(seed_value);
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for d in 0..50 {
        let topic = d % 3;
        let words: Vec<String> = (0..100)
            .map(|_| format!("{}{}", ["alpha", "beta", "gamma"][topic], rng.random_range(0..15)))
            .collect();
        docs.push(Document::new(format!("d{d:02}"), words.join(" ")));
        labels.push(topic);
    }
    (ProblemSet::new("synthetic", docs, None).unwrap(), labels)
}

fn purity(assigned: &[usize], truth: &[usize]) -> f64 {
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&a, &t) in assigned.iter().zip(truth) {
        *table.entry(a).or_default().entry(t).or_default() += 1;
    }
    let hits: usize = table
        .values()
        .map(|row| row.values().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / truth.len() as f64
}

fn hdp_sampler() -> Verdict {
    let (problem, truth) = disjoint_topic_corpus(2024);
    let dtm = vectorize(&problem).map_err(|e| e.to_string())?;
    let cfg = HdpConfig::sparse().with_seed(17).with_iterations(2000);
    let mut sampler = HdpSampler::new(&dtm, cfg).map_err(|e| e.to_string())?;
    for sweep in 1..=2000 {
        sampler.sweep();
        if sweep % 100 == 0 {
            sampler
                .check_consistency()
                .map_err(|e| format!("after sweep {sweep}: {e}"))?;
        }
    }
    let post = sampler.posterior();
    let dominant: Vec<usize> = post
        .doc_topic_counts
        .rows()
        .into_iter()
        .map(|r| {
            (0..r.len())
                .max_by_key(|&j| (r[j], std::cmp::Reverse(j)))
                .unwrap()
        })
        .collect();
    let p = purity(&dominant, &truth);
    ensure(p >= 0.9, || format!("purity {p} with {} topics", post.n_topics()))?;
    let trace: Vec<f64> = post.ll_trace.iter().map(|&(_, ll)| ll).collect();
    let tenth = (trace.len() / 10).max(1);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (first, last) = (mean(&trace[..tenth]), mean(&trace[trace.len() - tenth..]));
    ensure(last >= first, || {
        format!("per-word LL fell from {first} to {last}")
    })?;
    Ok(format!(
        "{} topics, purity {p:.3}, per-word LL {first:.3} -> {last:.3}, counts consistent at every 100th sweep",
        post.n_topics()
    ))
}

fn worked_example_posterior() -> TopicPosterior {
    let rows: [[u32; 5]; 4] = [
        [7, 14, 19, 11, 23],
        [8, 11, 9, 12, 10],
        [4, 6, 7, 1, 26],
        [11, 15, 7, 15, 12],
    ];
    // Token-level state: every token carries a topic and a word id; counts
    // are tallied from it rather than copied from the table.
    let mut assignments: Vec<(usize, usize, usize)> = Vec::new();
    for (d, row) in rows.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            for i in 0..c as usize {
                assignments.push((d, t, (t * 7 + i) % 30));
            }
        }
    }
    let mut doc_topic = Array2::<u32>::zeros((4, 5));
    let mut topic_word = Array2::<u32>::zeros((5, 30));
    for &(d, t, w) in &assignments {
        doc_topic[[d, t]] += 1;
        topic_word[[t, w]] += 1;
    }
    TopicPosterior {
        doc_ids: (1..=4).map(|i| format!("d{i}")).collect(),
        terms: (0..30).map(|w| format!("w{w}")).collect(),
        doc_topic_counts: doc_topic,
        topic_word_counts: topic_word,
        per_word_ll: 0.0,
        ll_trace: Vec::new(),
        doc_topic_mean: None,
        gamma: 1.0,
        alpha: 1.0,
    }
}

fn lssr_table() -> Verdict {
    let lssr = build_lssr(&worked_example_posterior()).map_err(|e| e.to_string())?;
    let want = [
        [7.0, 14.0, 19.0, 11.0, 23.0],
        [8.0, 11.0, 9.0, 12.0, 10.0],
        [4.0, 6.0, 7.0, 1.0, 26.0],
        [11.0, 15.0, 7.0, 15.0, 12.0],
    ];
    for (i, row) in want.iter().enumerate() {
        let got: Vec<f64> = lssr.matrix.row(i).to_vec();
        ensure(got == row.to_vec(), || format!("row {i}: {got:?}"))?;
    }
    let lengths: Vec<f64> = lssr.matrix.rows().into_iter().map(|r| r.sum()).collect();
    ensure(lengths == [74.0, 50.0, 44.0, 60.0], || {
        format!("document lengths {lengths:?}")
    })?;
    let unit = l2_normalize(&lssr).map_err(|e| e.to_string())?;
    for r in unit.matrix.rows() {
        let norm = r.dot(&r).sqrt();
        ensure((norm - 1.0).abs() <= 1e-9, || format!("norm {norm}"))?;
    }
    let d1 = unit.matrix[[0, 0]];
    ensure((d1 - 7.0 / 1256f64.sqrt()).abs() < 1e-15, || {
        format!("d1 t1 weight {d1}")
    })?;
    let twice: Lssr = l2_normalize(&unit).map_err(|e| e.to_string())?;
    let drift = (&twice.matrix - &unit.matrix)
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    ensure(drift <= 1e-12, || {
        format!("second normalization moved entries by {drift:e}")
    })?;
    Ok(format!(
        "four worked-example rows exact, unit norms, idempotent (drift {drift:e})"
    ))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("suite");
    write_suite(&root, 5, &["en-ar", "nl-re"], 31).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for (i, workers) in [1, 1, 4, 4].into_iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let cfg = RunConfig {
            master_seed: 8,
            workers,
            out_dir: Some(out.clone()),
            ..RunConfig::default()
        };
        let outcome = run_collection(&root, &cfg).map_err(|e| e.to_string())?;
        ensure(outcome.errors.is_empty(), || {
            format!("problem errors: {:?}", outcome.errors)
        })?;
        let bytes = std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?;
        reports.push((workers, bytes));
    }
    let (_, first) = &reports[0];
    for (i, (workers, bytes)) in reports.iter().enumerate().skip(1) {
        ensure(bytes == first, || {
            format!("run {i} with {workers} workers differs")
        })?;
    }
    Ok(format!(
        "4 runs (1, 1, 4, 4 workers) gave identical {}-byte report.json",
        first.len()
    ))
}

fn pan_scale(root: &Path) -> Verdict {
    let started = Instant::now();
    let cfg = RunConfig {
        master_seed: 2017,
        truth_format: TruthFormat::Pan,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..RunConfig::default()
    };
    let outcome = run_collection(root, &cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let problems = outcome
        .report
        .records
        .iter()
        .map(|r| &r.problem_id)
        .collect::<std::collections::BTreeSet<_>>();
    let overall = &outcome.report.aggregate.overall;
    let f = |m: MethodKind| overall.get(m.as_str()).map(|s| s.b3_f).unwrap_or(f64::NAN);
    let (sp, cop) = (f(MethodKind::Spkmeans), f(MethodKind::CopKmeans));
    ensure(problems.len() == 120 && outcome.errors.is_empty(), || {
        format!(
            "{} problems scored, {} errors",
            problems.len(),
            outcome.errors.len()
        )
    })?;
    ensure(elapsed.as_secs() < 7200, || format!("took {elapsed:.0?}"))?;
    ensure((0.45..=0.62).contains(&sp), || format!("SPKMeans B3F {sp:.3}"))?;
    ensure(cop > sp, || {
        format!("COP-KMeans B3F {cop:.3} <= SPKMeans {sp:.3}")
    })?;
    Ok(format!(
        "120 problems in {elapsed:.0?}; B3F SPKMeans {sp:.3}, COP-KMeans {cop:.3}"
    ))
}

fn main() -> ExitCode {
    let pan_root = std::env::var_os("AUTHORIAL_PAN_ROOT");
    let criteria: Vec<(&str, Check)> = vec![
        ("metric oracle equivalence", Box::new(|| Some(metric_oracles()))),
        ("worked metric values", Box::new(|| Some(worked_metric_values()))),
        ("constant baselines", Box::new(|| Some(constant_baselines()))),
        (
            "spherical k-means",
            Box::new(|| Some(spherical_kmeans_properties())),
        ),
        ("COP-KMeans", Box::new(|| Some(cop_kmeans_properties()))),
        ("k estimation", Box::new(|| Some(k_estimation()))),
        ("HDP sampler", Box::new(|| Some(hdp_sampler()))),
        ("LSSR construction", Box::new(|| Some(lssr_table()))),
        ("determinism", Box::new(|| Some(determinism()))),
        (
            "PAN-scale run",
            Box::new(move || pan_root.as_ref().map(|root| pan_scale(Path::new(root)))),
        ),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| f == &id.to_string() || name.contains(f.as_str()))
        {
            continue;
        }
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Some(Err(format!("panicked: {msg}")))
        });
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Some(Ok(detail)) => println!("criterion {id:>2} {name}: PASS ({secs:.1}s) {detail}"),
            Some(Err(why)) => {
                failed += 1;
                println!("criterion {id:>2} {name}: FAIL ({secs:.1}s) {why}");
            }
            None => {
                println!("criterion {id:>2} {name}: SKIP (set AUTHORIAL_PAN_ROOT to a PAN17 test collection)")
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
