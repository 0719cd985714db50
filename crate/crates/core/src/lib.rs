//! Selective sampling for nearest-neighbor classification.
//!
//! A sample set grows one point at a time: each step draws κ(n) candidates
//! from the domain measure and keeps the one scoring highest under a
//! selection heuristic Φ. Predictions use the nearest-neighbor or m-NN rule.

mod delaunay;
pub mod domain;
pub mod error;
pub mod evaluation;
pub mod heuristics;
pub mod pnm;
pub mod predictor;
pub mod rng;
pub mod sampler;
pub mod truth_spec;
pub mod voronoi;

pub use domain::{
    build_adversarial_1d, distance, Adversarial1d, DomainSpace, EpsilonRule, Label, LabelImage,
    Point, TrueFunction,
};
pub use error::{Error, Result};
pub use evaluation::{
    error_curve, estimate_error, estimate_q_measure, failure_demo, raster_predict, CurveRow,
    ErrorCurve, FailureDemo, PredictionRaster, ProbeSet,
};
pub use heuristics::{default_k, HeuristicSpec};
pub use predictor::{
    k_nearest_tie_family, nearest_indices, predict_mnn, predict_nn, select_ambiguous_set,
    LabeledSample, Rule, SampleSet, TieFamily,
};
pub use rng::RngState;
pub use sampler::{kappa_value, run_process, KappaSchedule, ProcessConfig, RunTrace, SeedCount};
pub use truth_spec::TruthSpec;
pub use voronoi::{certify_voronoi_neighbor, voronoi_neighbors, Certificate, VoronoiIndex};
