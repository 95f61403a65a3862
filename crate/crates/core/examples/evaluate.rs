// Extrinsic scores: B-cubed, ARI, RMSE of k and mean ranks across groups.

use std::collections::BTreeMap;
use std::error::Error;

use authorial::eval::{adjusted_rand_index, aggregate_report, bcubed, mean_rank, rmse_k, ProblemRecord};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let truth = [0, 0, 1, 1, 2];
    let guess = [0, 0, 1, 2, 2];
    let b3 = bcubed(&guess, &truth)?;
    println!("B3 P {:.3} R {:.3} F {:.3}", b3.precision, b3.recall, b3.f);
    println!("ARI {:.3}", adjusted_rand_index(&guess, &truth)?);
    println!("RMSE of k {:.3}", rmse_k(&[4, 8, 3], &[6, 6, 3])?);

    let mut scores: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (group, a, b) in [
        ("en-ar", 0.61, 0.55),
        ("nl-re", 0.58, 0.60),
        ("gr-ar", 0.66, 0.52),
    ] {
        let row = scores.entry(group.to_string()).or_default();
        row.insert("cop_kmeans".into(), a);
        row.insert("spkmeans".into(), b);
    }
    println!("mean ranks {:?}", mean_rank(&scores)?);

    let records = vec![
        ProblemRecord::scored("p1", "en-ar", "spkmeans", b3, 0.4, 3, Some(3)),
        ProblemRecord::scored(
            "p2",
            "en-ar",
            "spkmeans",
            bcubed(&truth, &truth)?,
            1.0,
            3,
            Some(3),
        ),
        ProblemRecord::failed("p2", "en-ar", "cop_kmeans", Some(3), "no feasible k".into()),
    ];
    let report = aggregate_report(records)?;
    println!("{}", serde_json::to_string_pretty(&report.aggregate)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
