//! Static voltage security assessment on power-grid graphs.
//!
//! The pipeline: parse a case ([`grid`]), generate post-contingency operating
//! points with Newton–Raphson power flow and transfer sweeps ([`powerflow`],
//! [`scenario`]), describe every bus by electrical and centrality features
//! ([`features`]), and classify each graph as secure or insecure with a graph
//! convolutional network or an MLP baseline ([`gcn`], [`nn`], [`metrics`]).
//!
//! The numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the data pipeline
//! produces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod features;
pub mod gcn;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod powerflow;
pub mod runtime;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type WeightedGraph = features::WeightedGraph<f64>;
pub type NormalizedAdjacency = gcn::NormalizedAdjacency<f64>;
pub type PreparedGraph = gcn::PreparedGraph<f64>;
pub type GraphBatch = gcn::GraphBatch<f64>;
pub type GcnModel = gcn::GcnModel<f64>;
pub type MlpModel = gcn::MlpModel<f64>;
pub type Dense = nn::Dense<f64>;
pub type Parameter = nn::Parameter<f64>;
