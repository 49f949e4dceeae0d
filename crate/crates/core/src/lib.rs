//! Voting-record affinity analysis.
//!
//! Starting from roll-call ballots with nominal group labels, the crate
//! encodes votes as a ternary matrix, standardizes it, reduces it with PCA
//! or sparse PCA, fits a per-group Gaussian model, and computes each
//! voter's posterior affinity to every group. It also lays the groups out
//! on a regular polygon and places voters at the affinity-weighted convex
//! combination of the vertices, and it detects voters whose ballots
//! contradict their nominal label.

pub mod error;
pub mod gmm;
pub mod ingest;
pub mod map;
pub mod outliers;
pub mod pca;
pub mod pipeline;
pub mod preprocess;
pub mod spca;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use gmm::{dna_all, dna_posterior, gmm_fit, DnaVector, GmmModel, LambdaPolicy};
pub use ingest::{
    clean_dataset, load_csv, load_json, Bill, CleaningReport, GroupAssignment, VoteDataset,
    VoteValue, Voter,
};
pub use map::{
    layout_groups, map_point, render_map_csv, render_map_svg, PoliticalMapPoint, PolytopeLayout,
};
pub use outliers::{outlier_pipeline, outlier_report, ComponentProfile, OutlierAnalysis};
pub use pca::{expressed_variance, pca_fit, project, BasisKind, ComponentBasis, ProjectedData};
pub use pipeline::{
    run_pipeline, run_stages, InputSource, PipelineConfig, ReductionMethod, RunManifest,
};
pub use preprocess::{encode, standardize, EncodedMatrix, StandardizedMatrix};
pub use spca::{spca_fit, spca_oracle, spca_rank1, SparseComponent};
pub use synth::{gen_blocs, gen_gmm, BlocConfig, SynthDataset};
