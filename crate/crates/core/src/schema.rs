//! Published JSON schemas for the report and scene payloads.

pub const STATS_SCHEMA: &str = include_str!("../schemas/stats.schema.json");
pub const SCENE_SCHEMA: &str = include_str!("../schemas/scene.schema.json");
