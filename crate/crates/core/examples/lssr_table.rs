// Turn a topic model run into the latent semantic space representation:
// per-document topic counts, then unit rows.

use std::error::Error;

use authorial::corpus::{vectorize, Document, ProblemSet};
use authorial::lssr::{build_lssr, l2_normalize};
use authorial::synth::author_texts;
use authorial::topics::{run_sampler, HdpConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (texts, labels) = author_texts(&[3, 3], 50..70, 21);
    let docs = texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("doc{i}.txt"), t))
        .collect();
    let dtm = vectorize(&ProblemSet::new("toy", docs, None)?)?;
    let posterior = run_sampler(&dtm, &HdpConfig::sparse().with_seed(1).with_iterations(400))?;

    let raw = build_lssr(&posterior)?;
    let unit = l2_normalize(&raw)?;
    println!("{} topics", raw.dims());
    for (i, id) in raw.doc_ids.iter().enumerate() {
        let counts: Vec<String> = raw.matrix.row(i).iter().map(|c| format!("{c:>3}")).collect();
        let weights: Vec<String> = unit.matrix.row(i).iter().map(|w| format!("{w:.2}")).collect();
        println!(
            "{id} (author {}) | {} | {}",
            labels[i],
            counts.join(" "),
            weights.join(" ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
