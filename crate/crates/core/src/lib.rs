//! Cascade-tree modelling toolkit.
//!
//! Two generative models live here: random recursive trees grown by
//! degree-powered preferential attachment ([`rrt`]) and the
//! susceptible/view/forward/removed diffusion process on configuration-model
//! scale-free networks ([`svfr`], [`netgen`]). Around them sit the structural
//! metrics ([`metrics`]), tail and parameter fitting ([`fit`]), an ingest path
//! for external cascade logs ([`ingest`]) and seeded sweep orchestration
//! ([`experiment`]).
//!
//! The numeric core is generic over the scalar type through [`Scalar`]; the
//! aliases at the bottom of this file fix it to `f64` for everyday use.

pub mod error;
pub mod experiment;
pub mod fit;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod netgen;
pub mod rrt;
pub mod seed;
pub mod svfr;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};
pub use graph::{DegreeSequence, Network, Tree};

/// Floating point scalar used by the numeric routines: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Default working precision.
pub type Real = f64;

pub type TreeMetrics = metrics::TreeMetrics<Real>;
pub type SizeBinnedStats = metrics::SizeBinnedStats<Real>;
pub type WeightIndex = rrt::WeightIndex<Real>;
pub type ViewProbabilities = svfr::ViewProbabilities<Real>;
pub type PowerLawFit = fit::PowerLawFit<Real>;
pub type GammaEstimate = fit::GammaEstimate<Real>;
pub type LogHistogram = fit::LogHistogram<Real>;

/// Version string stamped into every emitted metadata record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
