//! Explicit feature-interaction operators.
//!
//! Every operator accumulates over strictly upper-triangular feature pairs
//! `i < j`, so a feature never interacts with itself. Vector forms return
//! the element-wise accumulated interaction (`K` values); scalar forms are
//! the sum of the vector coordinates.
//!
//! Part-aware embeddings (FFM field copies, GwPFM part copies) are passed
//! as one flat slice per feature holding the copies back to back, each of
//! width `K`.

mod candidates;
mod fm;
mod gwpfm;
pub mod ops;
mod projected;
mod weights;

pub use candidates::{
    gwpfm_score_candidates, naive_candidate_score, CandidateFeatures, CandidateScorer,
    PartPooledRequest, PooledGroup,
};
pub use fm::{
    ffm_backward, ffm_score, ffm_vector, fm_backward, fm_score, fm_vector, fwfm_backward,
    fwfm_score, fwfm_vector,
};
pub use gwpfm::{gwpfm_backward, gwpfm_interaction, GwpfmLayout, Interaction, Reduce};
pub use projected::{
    projected_backward, projected_pair, projected_pair_backward, projected_vector, Projections,
};
pub use weights::PairWeights;

use crate::{Error, Result};

pub(crate) fn check_features(x: &[f64], emb: &[&[f64]], width: usize) -> Result<()> {
    if x.len() != emb.len() {
        return Err(Error::Input(format!(
            "{} feature values for {} embeddings",
            x.len(),
            emb.len()
        )));
    }
    if let Some(e) = emb.iter().find(|e| e.len() != width) {
        return Err(Error::Input(format!(
            "embedding of width {} where {width} expected",
            e.len()
        )));
    }
    Ok(())
}

/// `acc += s · (a ⊙ b)`
#[inline]
pub(crate) fn add_hadamard(acc: &mut [f64], s: f64, a: &[f64], b: &[f64]) {
    for ((o, x), y) in acc.iter_mut().zip(a).zip(b) {
        *o += s * x * y;
    }
}
