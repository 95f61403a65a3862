//! Latent semantic space representation: one topic-count vector per
//! document, l2-normalized before clustering.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::topics::TopicPosterior;

/// Largest dimensionality seen on paragraph-length corpora. Exceeding it is
/// worth a warning but is not an error.
pub const TYPICAL_MAX_DIMENSIONS: usize = 13;

pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Lssr {
    pub doc_ids: Vec<String>,
    /// n x t, non-negative.
    pub matrix: Array2<f64>,
    pub normalized: bool,
}

impl Lssr {
    pub fn new(doc_ids: Vec<String>, matrix: Array2<f64>, normalized: bool) -> Result<Self> {
        if doc_ids.len() != matrix.nrows() {
            return Err(Error::SizeMismatch {
                expected: matrix.nrows(),
                actual: doc_ids.len(),
            });
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidParameter("LSSR needs at least one topic".into()));
        }
        Ok(Lssr {
            doc_ids,
            matrix,
            normalized,
        })
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn n_docs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Document-topic counts of the final sample, as reals.
pub fn build_lssr(posterior: &TopicPosterior) -> Result<Lssr> {
    let lssr = Lssr::new(
        posterior.doc_ids.clone(),
        posterior.doc_topic_counts.mapv(f64::from),
        false,
    )?;
    warn_if_wide(&lssr);
    Ok(lssr)
}

/// Same as [`build_lssr`] but from counts averaged over the final sweeps.
pub fn build_lssr_averaged(posterior: &TopicPosterior) -> Result<Lssr> {
    let mean = posterior
        .doc_topic_mean
        .clone()
        .ok_or_else(|| Error::InvalidParameter("posterior carries no averaged counts".into()))?;
    let lssr = Lssr::new(posterior.doc_ids.clone(), mean, false)?;
    warn_if_wide(&lssr);
    Ok(lssr)
}

fn warn_if_wide(lssr: &Lssr) {
    if lssr.dims() > TYPICAL_MAX_DIMENSIONS {
        log::warn!(
            "LSSR has {} dimensions, more than the usual {}",
            lssr.dims(),
            TYPICAL_MAX_DIMENSIONS
        );
    }
}

pub fn l2_normalize(lssr: &Lssr) -> Result<Lssr> {
    let mut matrix = lssr.matrix.clone();
    for (i, mut row) in matrix.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroRow(lssr.doc_ids[i].clone()));
        }
        row.mapv_inplace(|x| x / norm);
    }
    Ok(Lssr {
        doc_ids: lssr.doc_ids.clone(),
        matrix,
        normalized: true,
    })
}

/// Checks that every row is a unit vector.
pub fn ensure_unit_rows(data: ArrayView2<'_, f64>, tolerance: f64) -> Result<()> {
    for (i, row) in data.rows().into_iter().enumerate() {
        if (row.dot(&row).sqrt() - 1.0).abs() > tolerance {
            return Err(Error::Unnormalized(i));
        }
    }
    Ok(())
}
