//! Per-bus feature vectors: electrical state plus four centrality measures
//! over the impedance-weighted post-contingency graph.

mod assemble;
mod centrality;

pub use assemble::{assemble_features, FeatureMatrix, FEATURE_COUNT, FEATURE_NAMES};
pub use centrality::{
    betweenness_centrality, betweenness_centrality_with, closeness_centrality, clustering_coefficient,
    compute_centralities, degree_centrality, electrical_distance, shortest_distances, CentralityVector, Reduction,
    WeightedGraph,
};
