// Fit the HDP topic model to a toy problem written by three synthetic
// authors and watch the number of topics and the per-word log likelihood.

use std::error::Error;

use authorial::corpus::{vectorize, Document, ProblemSet};
use authorial::synth::author_texts;
use authorial::topics::{HdpConfig, HdpSampler};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (texts, _) = author_texts(&[4, 4, 4], 60..90, 3);
    let docs = texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("doc{i:02}.txt"), t))
        .collect();
    let dtm = vectorize(&ProblemSet::new("toy", docs, None)?)?;

    let cfg = HdpConfig::sparse().with_seed(7).with_iterations(300);
    let mut sampler = HdpSampler::new(&dtm, cfg)?;
    for sweep in 1..=300 {
        sampler.sweep();
        if sweep % 50 == 0 {
            println!(
                "sweep {sweep:>3}: {:>2} topics, per-word LL {:.4}, gamma {:.3}, alpha {:.3}",
                sampler.n_topics(),
                sampler.per_word_log_likelihood(),
                sampler.gamma(),
                sampler.alpha()
            );
        }
    }
    sampler.check_consistency()?;
    let posterior = sampler.posterior();
    println!("topic sizes: {:?}", sampler.topic_totals());
    println!(
        "final state has {} topics over {} terms",
        posterior.n_topics(),
        posterior.terms.len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
