//! Layered generator for comic-style panel sequences.
//!
//! A run starts from a sequence of default panels and passes it through
//! refinement layers: narrative grammar, tension arc, action network walks,
//! compositions and gutter transitions, balloons and display flags, and an
//! optional story constraint pass. The result renders to SVG pages and a JSON
//! manifest. Every random choice comes from a seeded [`rng::RandomSource`].

pub mod action;
pub mod arc;
pub mod error;
pub mod grammar;
pub mod layout;
pub mod pack;
pub mod pipeline;
pub mod registry;
pub mod render;
pub mod rng;
pub mod sequence;
pub mod story;

pub use error::{Error, Result};
pub use pack::ContentPack;
pub use pipeline::{apply_layers, generate, parse_layers, Layer, LayerContext, LayerParams};
pub use rng::RandomSource;
pub use sequence::{Panel, PanelSequence};
