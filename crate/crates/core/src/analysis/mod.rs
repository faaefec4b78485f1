//! Feature-correlation, collapse and entanglement analysis.

mod entangle;
mod mi;
mod pairs;
mod report;
mod spectrum;

pub use entangle::{entanglement_report, pair_distances, PairEmbeddings, Panel, PANELS};
pub use mi::{
    mutual_information, semantic_temporal_correlation, Constraint, CorrelationGrid, MIN_SUPPORT,
};
pub use pairs::{
    contradictory_pairs, distance_distribution, DistanceDistribution, DistanceSummary, Histogram,
    HISTOGRAM_BINS,
};
pub use report::{AnalysisReport, Provenance, ReportKind};
pub use spectrum::{information_abundance, singular_spectrum, spectrum_abundance};
