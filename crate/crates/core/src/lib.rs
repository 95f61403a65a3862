//! Authorial clustering of paragraph-length texts.
//!
//! Documents are vectorized on word unigrams (punctuation kept, corpus hapax
//! dropped), reduced to a handful of latent topics with a hierarchical
//! Dirichlet process, l2-normalized, and clustered by author either without
//! supervision (spherical k-means with k from G-means and the Gap statistic)
//! or with sampled must-link / cannot-link constraints (COP-KMeans with a
//! DBI * k grid search). B-cubed, ARI, RMSE of k and mean ranks score the
//! result against ground truth.

pub mod artifacts;
pub mod cluster;
pub mod constraints;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod kestimate;
pub mod lssr;
pub mod pipeline;
pub mod seed;
pub mod synth;
pub mod topics;

pub use error::{Error, Result};
