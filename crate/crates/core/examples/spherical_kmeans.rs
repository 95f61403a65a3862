// Spherical k-means with k-means++ seeding on three noisy direction clusters.

use std::error::Error;

use authorial::cluster::SphericalKMeans;
use authorial::eval::adjusted_rand_index;
use authorial::synth::unit_mixture;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (data, truth) = unit_mixture(3, 30, 6, 0.2, 9);
    let (clustering, model) = SphericalKMeans::new(3).with_n_init(5).fit(data.view(), 42)?;
    println!("sizes {:?}", clustering.sizes());
    println!("converged after {} iterations", model.iterations_run);
    let trace: Vec<String> = model.objective_trace.iter().map(|o| format!("{o:.3}")).collect();
    println!("objective trace: {}", trace.join(" -> "));
    println!(
        "ARI against generating clusters: {:.3}",
        adjusted_rand_index(clustering.labels(), &truth)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
