// COP-KMeans with must-link and cannot-link pairs sampled from ground truth,
// next to plain spherical k-means on the same vectors.

use std::error::Error;

use authorial::cluster::{CopKMeans, CopOutcome, SphericalKMeans};
use authorial::constraints::{check_feasible, derive_constraints, ConstraintSet};
use authorial::corpus::Truth;
use authorial::eval::bcubed;
use authorial::synth::unit_mixture;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (data, labels) = unit_mixture(4, 5, 8, 0.35, 12);
    let truth = Truth::from_labels(&labels);
    let constraints = derive_constraints(&truth, 0.12, 3)?;
    println!(
        "{} of {} pairs labelled: {} must-link, {} cannot-link",
        constraints.len(),
        constraints.total_links,
        constraints.ml.len(),
        constraints.cl.len()
    );

    let (plain, _) = SphericalKMeans::new(4).with_n_init(10).fit(data.view(), 3)?;
    println!(
        "spherical k-means B3F {:.3}",
        bcubed(plain.labels(), truth.labels())?.f
    );

    match CopKMeans::new(4).fit(data.view(), &constraints, 3)? {
        CopOutcome::Success(c, _) => {
            println!("COP-KMeans B3F {:.3}", bcubed(c.labels(), truth.labels())?.f);
            println!("violations: {}", constraints.violations(c.labels()));
        }
        CopOutcome::Failure(f) => println!("COP-KMeans failed on document {}", f.point),
    }

    // Three mutually cannot-linked points can never share two clusters.
    let clique = ConstraintSet::from_pairs(3, &[], &[(0, 1), (0, 2), (1, 2)]);
    println!("clique feasible at k = 2: {}", check_feasible(&clique, 2, 3));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
