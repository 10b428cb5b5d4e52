//! Relative depth classification between object pairs in single images.
//!
//! Given bounding boxes and semantic annotations for the objects of an image,
//! this crate predicts for an ordered object pair whether the first object is
//! in front of, behind, or at roughly the same depth as the second. It also
//! evaluates those predictions against relative depths derived from dense
//! per-pixel depth maps produced by an external monocular predictor.
//!
//! The crate is organized along the pipeline:
//!
//! - [`dataset`]: annotation ingestion, ordered pair generation, 3-way class
//!   derivation under a tolerance threshold
//! - [`geometry`]: bounding-box primitives and the geometric feature family
//! - [`encoding`]: one-hot / embedding encoders, standardization, assembly of
//!   model-ready feature matrices
//! - [`matrix`]: the feature matrix type, feature groups, CSV interchange
//! - [`models`]: decision tree, random forest, multinomial logistic
//!   regression and a small feed-forward network, all seed-deterministic
//! - [`evaluation`]: stratified k-fold cross-validation, accuracy/confusion
//!   reporting and the experiment grid runner
//! - [`depthmap`]: per-object depth aggregation over dense depth maps and
//!   agreement scoring
//! - [`pipeline`]: end-to-end fit/predict bundles for persistence
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait; `f64` is the default used by the concrete aliases at the crate
//! root.

pub mod dataset;
pub mod depthmap;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod matrix;
pub mod models;
pub mod pipeline;
pub mod util;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Scalar type the numeric pipeline is generic over.
///
/// Implemented for `f32` and `f64`. Conversions go through `f64`, which is
/// lossless for both.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used when ingesting external values.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Widening conversion to `f64`, used when emitting external values.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Default-precision aliases for the generic pipeline types.
pub type GeometricFeatures64 = geometry::GeometricFeatures<f64>;
pub type FeatureMatrix64 = matrix::FeatureMatrix<f64>;
pub type Standardizer64 = encoding::Standardizer<f64>;
pub type TrainedModel64 = models::TrainedModel<f64>;
pub type DepthMap64 = depthmap::DepthMap<f64>;
pub type PipelineModel64 = pipeline::PipelineModel<f64>;
pub type PairFeatures64 = encoding::PairFeatures<f64>;

/// Single-precision aliases.
pub type GeometricFeatures32 = geometry::GeometricFeatures<f32>;
pub type FeatureMatrix32 = matrix::FeatureMatrix<f32>;
pub type Standardizer32 = encoding::Standardizer<f32>;
pub type TrainedModel32 = models::TrainedModel<f32>;
pub type DepthMap32 = depthmap::DepthMap<f32>;
