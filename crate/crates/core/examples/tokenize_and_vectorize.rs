// Tokenize a few short texts and build the document-term matrix the topic
// model consumes. Punctuation survives as its own token; words seen only once
// in the whole problem are dropped.

use std::error::Error;

use authorial::corpus::{tokenize, vectorize, Document, ProblemSet};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let texts = [
        "The sea was calm; the night, calmer still.",
        "Still the sea rose, and the night grew loud!",
        "Calm? The night was anything but calm.",
    ];
    println!("tokens: {:?}", tokenize(texts[0]));

    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("doc{i}.txt"), *t))
        .collect();
    let problem = ProblemSet::new("demo", docs, None)?;
    let dtm = vectorize(&problem)?;
    println!("{} documents x {} terms", dtm.n_docs(), dtm.n_terms());
    for (d, id) in dtm.doc_ids.iter().enumerate() {
        let row: Vec<String> = dtm
            .vocabulary
            .terms
            .iter()
            .zip(dtm.counts.row(d))
            .filter(|(_, &c)| c > 0)
            .map(|(t, c)| format!("{t}:{c}"))
            .collect();
        println!("{id:<10} {}", row.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
