//! Discrete metric-measure geometry at explicit finite scale.
//!
//! Finite metric spaces with exact rational distances (explicit matrices,
//! graph metrics, closed-form ultrametric trees), generators for grids,
//! Cantor trees, Cayley graphs and Sierpinski graphs, separated nets and
//! δ-graphs, ball-growth fits, atomic measures and their quantization,
//! Hausdorff surrogates, Ahlfors regularity checks, spiked-graph degree
//! regularization, and a pipeline tying these together.

pub mod ahlfors;
pub mod error;
pub mod exact;
pub mod graph;
pub mod growth;
pub mod hausdorff;
pub mod length;
pub mod measure;
pub mod metric;
pub mod nets;
pub mod pipeline;
pub mod record;
pub mod regularize;
pub mod space_file;
pub mod spaces;

pub use error::{Error, Result};
pub use exact::Rational;
pub use graph::Graph;
pub use metric::{BallKind, BallSpec, FiniteMetricSpace, PointId};
pub use record::Record;
