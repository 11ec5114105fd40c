//! Missing-data profiling: amount missing (AM), joint missingness (JM) and
//! conditional missingness (CM) over tabular data, glyph scenes built from
//! those statistics, and deterministic SVG output.

pub mod data;
pub mod error;
pub mod ingest;
pub mod render;
pub mod rng;
pub mod scene;
pub mod schema;
pub mod stats;
pub mod synth;

pub use data::{Cell, Dataset, DatasetView, MissingMask, Variable, VariableKind};
pub use error::{Error, Result};
pub use ingest::{parse_table, write_table, IngestConfig};
pub use render::{render, RenderStyle};
pub use scene::{build_scene, ArcMode, GlyphScene, Layout, SceneOptions};
pub use stats::{MissingnessSummary, RandomnessReport};
pub use synth::{apply_plan, GroundTruthManifest, InjectionPlan, InjectionStep};
