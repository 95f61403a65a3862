// Estimate the number of clusters in a unit-vector mixture with G-means, the
// Gap statistic and their average, then with the constrained DBI * k grid.

use std::error::Error;

use authorial::constraints::derive_constraints;
use authorial::corpus::Truth;
use authorial::kestimate::{
    default_gap_k_max, estimate_k_constrained, estimate_k_gap, estimate_k_gmeans, estimate_k_unsupervised,
    Diagnostics, GAP_REFERENCES, GMEANS_SIGNIFICANCE,
};
use authorial::synth::unit_mixture;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (data, labels) = unit_mixture(4, 25, 8, 0.08, 5);
    let n = data.nrows();

    let g = estimate_k_gmeans(data.view(), GMEANS_SIGNIFICANCE, 1)?;
    println!("G-means: k = {}", g.k);

    let gap = estimate_k_gap(data.view(), default_gap_k_max(n), GAP_REFERENCES, 1)?;
    if let Diagnostics::Gap(curve) = &gap.diagnostics {
        for i in 0..curve.ks.len() {
            println!(
                "  k = {:>2}  gap {:+.3}  s {:.3}",
                curve.ks[i], curve.gap[i], curve.s[i]
            );
        }
    }
    println!("Gap: k = {}", gap.k);
    println!("averaged: k = {}", estimate_k_unsupervised(data.view(), 1)?.k);

    let truth = Truth::from_labels(&labels);
    let constraints = derive_constraints(&truth, 0.12, 2)?;
    let est = estimate_k_constrained(data.view(), &constraints, 2)?;
    if let Diagnostics::ConstrainedGrid { report, .. } = &est.diagnostics {
        println!(
            "constrained grid: {} ks scored, {} infeasible",
            report.dbi_k.len(),
            report.failed.len()
        );
    }
    println!("constrained: k = {}", est.k);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
