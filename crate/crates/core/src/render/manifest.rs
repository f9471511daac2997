//! Machine-readable record of a finished sequence, complete enough to
//! re-render it bit-identically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BalloonInstance;
use crate::error::{Error, Result};
use crate::grammar::{GrammarTree, PhaseCategory};
use crate::layout::TransitionKind;
use crate::sequence::{CharacterInstance, MaskSlot, Panel, PanelSequence, SymbolInstance};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub mask_slot: MaskSlot,
    pub height_level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterRecord {
    pub character_id: String,
    pub action: String,
    pub position: Position,
    pub display: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub index: usize,
    pub phase: Option<PhaseCategory>,
    pub tension: Option<f64>,
    pub scene: Option<String>,
    pub transition: Option<TransitionKind>,
    pub composition: Option<String>,
    pub characters: Vec<CharacterRecord>,
    pub symbols: Vec<SymbolInstance>,
    pub balloons: Vec<BalloonInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub layers: Vec<String>,
    pub notes: Vec<String>,
    /// Policies the output depends on that are not visible in the panels.
    pub conventions: BTreeMap<String, String>,
    pub grammar: Option<GrammarTree>,
    pub panels: Vec<PanelRecord>,
}

fn conventions() -> BTreeMap<String, String> {
    [
        ("balloon_tail", "top centre of the owner's mask; overlaps allowed"),
        ("scene_to_scene", "actions re-sampled from the previous panel's reactions"),
        ("coordinates", "panel-normalised, y down; pages in pixels"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl From<&PanelSequence> for Manifest {
    fn from(seq: &PanelSequence) -> Self {
        Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            seed: seq.seed,
            layers: seq.layer_log.clone(),
            notes: seq.notes.clone(),
            conventions: conventions(),
            grammar: seq.grammar.clone(),
            panels: seq
                .panels
                .iter()
                .map(|p| PanelRecord {
                    index: p.index,
                    phase: p.phase,
                    tension: p.tension,
                    scene: p.scene.clone(),
                    transition: p.transition_to_next,
                    composition: p.composition.clone(),
                    characters: p
                        .characters
                        .iter()
                        .map(|c| CharacterRecord {
                            character_id: c.character_id.clone(),
                            action: c.action.clone(),
                            position: Position {
                                mask_slot: c.mask_slot,
                                height_level: c.height_level,
                            },
                            display: c.display,
                        })
                        .collect(),
                    symbols: p.symbols.clone(),
                    balloons: p.balloons.clone(),
                })
                .collect(),
        }
    }
}

impl Manifest {
    pub fn into_sequence(self) -> PanelSequence {
        PanelSequence {
            seed: self.seed,
            layer_log: self.layers,
            notes: self.notes,
            grammar: self.grammar,
            panels: self
                .panels
                .into_iter()
                .map(|r| Panel {
                    index: r.index,
                    phase: r.phase,
                    tension: r.tension,
                    scene: r.scene,
                    transition_to_next: r.transition,
                    composition: r.composition,
                    characters: r
                        .characters
                        .into_iter()
                        .map(|c| CharacterInstance {
                            character_id: c.character_id,
                            action: c.action,
                            mask_slot: c.position.mask_slot,
                            height_level: c.position.height_level,
                            display: c.display,
                        })
                        .collect(),
                    symbols: r.symbols,
                    balloons: r.balloons,
                })
                .collect(),
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_manifest(sequence: &PanelSequence) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Manifest::from(sequence))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_manifest(text: &str) -> Result<PanelSequence> {
    let m: Manifest = serde_json::from_str(text)?;
    if m.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::Json(format!("unsupported manifest schema {}", m.schema_version)));
    }
    Ok(m.into_sequence())
}
