use std::fs;
use std::path::Path;

use authorial::corpus::{load_problem_set, vectorize, TruthFormat};
use authorial::Error;

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn loads_documents_in_name_order_with_truth() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "b.txt", "the cat sat. the end");
    write(dir.path(), "a.txt", "The dog sat, the end. Oddity");
    write(dir.path(), "c.txt", "a cat, a dog.");
    write(dir.path(), "notes.md", "ignored");
    write(
        dir.path(),
        "truth.json",
        r#"{"clusters": [["a.txt", "c.txt"], ["b.txt"]]}"#,
    );

    let p = load_problem_set(dir.path(), TruthFormat::Native).unwrap();
    assert_eq!(p.doc_ids(), ["a.txt", "b.txt", "c.txt"]);
    assert_eq!(
        p.documents[0].tokens,
        ["the", "dog", "sat", ",", "the", "end", ".", "oddity"]
    );
    let truth = p.truth.as_ref().unwrap();
    assert_eq!(truth.labels(), [0, 1, 0]);
    assert_eq!(truth.k(), 2);

    let dtm = vectorize(&p).unwrap();
    assert!(dtm.vocabulary.index.contains_key("."));
    // "a" occurs twice, both times in c.txt: corpus frequency decides.
    assert!(dtm.vocabulary.index.contains_key("a"));
    assert!(!dtm.vocabulary.index.contains_key("oddity"), "hapax dropped");
}

#[test]
fn reads_pan_truth() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.txt", "one two");
    write(dir.path(), "y.txt", "two one");
    write(
        dir.path(),
        "clustering.json",
        r#"[[{"document": "y.txt"}], [{"document": "x.txt"}]]"#,
    );
    let p = load_problem_set(dir.path(), TruthFormat::Pan).unwrap();
    assert_eq!(p.truth.unwrap().labels(), [0, 1]);
}

#[test]
fn problem_without_truth_loads() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.txt", "one two");
    write(dir.path(), "y.txt", "two one");
    assert!(load_problem_set(dir.path(), TruthFormat::Native)
        .unwrap()
        .truth
        .is_none());
}

#[test]
fn rejects_bad_layouts() {
    let missing = Path::new("/definitely/not/here");
    assert!(matches!(
        load_problem_set(missing, TruthFormat::Native),
        Err(Error::MissingDirectory(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "only.txt", "lonely words");
    assert!(matches!(
        load_problem_set(dir.path(), TruthFormat::Native),
        Err(Error::TooFewDocuments(_))
    ));

    write(dir.path(), "second.txt", "more words");
    write(
        dir.path(),
        "truth.json",
        r#"{"clusters": [["only.txt"], ["ghost.txt"]]}"#,
    );
    assert!(matches!(
        load_problem_set(dir.path(), TruthFormat::Native),
        Err(Error::UnknownDocument(_))
    ));

    write(dir.path(), "truth.json", r#"{"clusters": [["only.txt"]]}"#);
    assert!(matches!(
        load_problem_set(dir.path(), TruthFormat::Native),
        Err(Error::TruthOmitsDocument(_))
    ));

    write(
        dir.path(),
        "truth.json",
        r#"{"clusters": [["only.txt", "second.txt"], ["only.txt"]]}"#,
    );
    assert!(matches!(
        load_problem_set(dir.path(), TruthFormat::Native),
        Err(Error::DuplicateTruthEntry(_))
    ));

    write(dir.path(), "truth.json", "{not json");
    assert!(matches!(
        load_problem_set(dir.path(), TruthFormat::Native),
        Err(Error::Json { .. })
    ));
}

#[test]
fn document_with_only_hapax_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", "shared shared words");
    write(dir.path(), "b.txt", "words unique");
    write(dir.path(), "c.txt", "singular");
    let p = load_problem_set(dir.path(), TruthFormat::Native).unwrap();
    assert!(matches!(vectorize(&p), Err(Error::EmptyDocument(id)) if id == "c.txt"));
}
