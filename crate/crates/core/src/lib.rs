//! Simulation and maximum-likelihood inference of endogenous (peer) and
//! exogenous (external) influence in activation cascades on social networks.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.
//!
//! ```
//! use diffusion_core::{graph, infer, simulate, EndogenousModel, ExogenousProfile, ModelKind};
//!
//! let g = graph::powerlaw_cluster_graph(200, 3, 0.1, 1).unwrap();
//! let cfg = simulate::SimConfig {
//!     model: EndogenousModel::Si { p0: 0.02 },
//!     profile: ExogenousProfile::Constant { value: 0.005 },
//!     n_seeds: 5,
//!     horizon: 30,
//!     rng_seed: 1,
//!     window_width: 30.0,
//! };
//! let out = simulate::simulate(&g, &cfg).unwrap();
//! let problem = infer::Problem::new(&g, &out.cascade, diffusion_core::CorrectionConfig::none(200)).unwrap();
//! let result = problem
//!     .alternate::<f64>(ModelKind::Si, &infer::OptimizerSpec::default(), 1e-5, 50)
//!     .unwrap();
//! assert_eq!(result.series.len(), 30);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attribution;
pub mod cascade;
pub mod error;
pub mod graph;
pub mod infer;
pub mod likelihood;
pub mod models;
pub mod optimize;
pub mod scalar;
pub mod simulate;

pub use attribution::{InfluenceWeighting, ResponsibilityScore, ResponsibilityVariant, RocCurve};
pub use cascade::{Cascade, ReferralClass, SessionRecord, SessionTable};
pub use error::{Error, Result};
pub use graph::{DegreeSequence, SocialGraph};
pub use infer::{OptimizerSpec, ParamBounds, Problem, TwoParamStrategy};
pub use likelihood::{CascadeStats, CorrectionConfig};
pub use models::ModelKind;
pub use scalar::Scalar;
pub use simulate::TruthLabel;

pub type EndogenousModel = models::EndogenousModel<f64>;
pub type ExogenousProfile = models::ExogenousProfile<f64>;
pub type ExogenousSeries = models::ExogenousSeries<f64>;
pub type InferenceResult = infer::InferenceResult<f64>;
pub type InitEstimates = infer::InitEstimates<f64>;
pub type SimConfig = simulate::SimConfig<f64>;
pub type SimOutcome = simulate::SimOutcome<f64>;
pub type SpikeEvent = models::SpikeEvent<f64>;
