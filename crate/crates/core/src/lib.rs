//! Spectral graph clustering with model selection under the stochastic block model.
//!
//! The crate builds graphs from edge lists, samples block-model graphs with
//! planted communities, clusters them on the smallest eigenvectors of the
//! normalized Laplacian, picks the number of communities, and scores the
//! result with standard clustering metrics.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod format;
pub mod graph;
pub mod kmeans;
pub mod labels;
pub mod metrics;
pub mod sbm;
pub mod selection;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{parse_edge_list, Graph, IdMapping, ParseOptions, ParsedGraph};
pub use metrics::{accuracy, average_rank, MetricVector, RankTable};
pub use sbm::{generate_sbm, mle_block_probabilities, Partition, SbmParams};
pub use selection::{select, Method, Mismatch, SelectionConfig, SelectionReport};
pub use spectral::{sgc_detect, LaplacianMode, SgcConfig, SgcOutcome, SpectralBasis};
