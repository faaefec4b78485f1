//! Prior-preserving encoders: multiple-numeral-system codes for ordinal
//! values, random-hyperplane semantic ids, similarity encoding of
//! pre-trained embeddings, and temporal bucketing.

mod lsh;
mod mns;
mod similarity;
mod temporal;

pub use lsh::{lsh_semantic_id, LshConfig};
pub use mns::{
    mns_codes, mns_encode, MnsCodes, MnsConfig, MnsLookupOp, MnsTables, NumeralSystem, SystemCode,
};
pub use similarity::{cosine_similarity, quantize_similarity, similarity_encode, SimilarityConfig};
pub use temporal::{temporal_bucket, TemporalMode, MAX_INTERVAL_BUCKET};
