// End to end: write a small synthetic collection to disk, run every method
// on it and print the aggregate report. Artifacts land in a temp directory.

use std::error::Error;

use authorial::pipeline::{run_collection, RunConfig};
use authorial::synth::write_suite;
use authorial::topics::HdpConfig;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path().join("problems");
    write_suite(&root, 4, &["en-ar", "nl-re"], 11)?;

    let cfg = RunConfig {
        master_seed: 1,
        hdp: HdpConfig::sparse().with_iterations(500),
        sp_runs: 2,
        workers: 2,
        out_dir: Some(dir.path().join("out")),
        ..RunConfig::default()
    };
    let outcome = run_collection(&root, &cfg)?;
    for r in &outcome.report.records {
        println!(
            "{} {:<10} B3F {} k {:?}/{:?}",
            r.problem_id,
            r.method,
            r.b3_f.map_or("-".into(), |f| format!("{f:.3}")),
            r.k_est,
            r.k_true
        );
    }
    for (method, s) in &outcome.report.aggregate.overall {
        println!("{method:<10} mean B3F {:.3}", s.b3_f);
    }
    let mut files: Vec<String> = std::fs::read_dir(dir.path().join("out").join("problem001"))?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("artifacts per problem: {}", files.join(", "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
