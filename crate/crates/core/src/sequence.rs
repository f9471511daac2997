//! The panel sequence every refinement layer reads and rewrites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{GrammarTree, PhaseCategory};
use crate::layout::TransitionKind;
use crate::render::BalloonInstance;
use crate::rng::RandomSource;

/// Default panel-count range for a fresh sequence.
pub const DEFAULT_MIN_PANELS: usize = 3;
pub const DEFAULT_MAX_PANELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSlot {
    Left,
    Right,
}

impl MaskSlot {
    pub const ALL: [MaskSlot; 2] = [MaskSlot::Left, MaskSlot::Right];

    pub fn other(self) -> MaskSlot {
        match self {
            MaskSlot::Left => MaskSlot::Right,
            MaskSlot::Right => MaskSlot::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterInstance {
    pub character_id: String,
    pub action: String,
    pub mask_slot: MaskSlot,
    pub height_level: u8,
    pub display: bool,
}

/// An overlay symbol drawn next to the character that performs the action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolInstance {
    pub symbol: String,
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub index: usize,
    pub phase: Option<PhaseCategory>,
    pub tension: Option<f64>,
    pub scene: Option<String>,
    pub characters: Vec<CharacterInstance>,
    pub composition: Option<String>,
    pub transition_to_next: Option<TransitionKind>,
    pub symbols: Vec<SymbolInstance>,
    pub balloons: Vec<BalloonInstance>,
}

impl Panel {
    pub fn character(&self, id: &str) -> Option<&CharacterInstance> {
        self.characters.iter().find(|c| c.character_id == id)
    }

    pub fn in_slot(&self, slot: MaskSlot) -> Option<&CharacterInstance> {
        self.characters.iter().find(|c| c.mask_slot == slot)
    }

    pub fn in_slot_mut(&mut self, slot: MaskSlot) -> Option<&mut CharacterInstance> {
        self.characters.iter_mut().find(|c| c.mask_slot == slot)
    }
}

/// Baseline content of a panel before any layer touches it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDefaults {
    pub scene: String,
    pub composition: String,
    pub action: String,
    pub characters: Vec<String>,
}

impl Default for PanelDefaults {
    fn default() -> Self {
        Self {
            scene: "garden".into(),
            composition: "basic".into(),
            action: "stand".into(),
            characters: vec!["blue".into(), "pink".into()],
        }
    }
}

impl PanelDefaults {
    pub fn panel(&self, index: usize) -> Panel {
        let characters = self
            .characters
            .iter()
            .zip(MaskSlot::ALL)
            .map(|(id, slot)| CharacterInstance {
                character_id: id.clone(),
                action: self.action.clone(),
                mask_slot: slot,
                height_level: 0,
                display: true,
            })
            .collect();
        Panel {
            index,
            phase: None,
            tension: None,
            scene: Some(self.scene.clone()),
            characters,
            composition: Some(self.composition.clone()),
            transition_to_next: None,
            symbols: Vec::new(),
            balloons: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSequence {
    pub seed: u64,
    pub panels: Vec<Panel>,
    pub layer_log: Vec<String>,
    /// Warnings and decisions recorded by layers (fallbacks, restarts, skips).
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub grammar: Option<GrammarTree>,
}

impl PanelSequence {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// Character ids in slot order, taken from the first panel.
    pub fn cast(&self) -> Vec<String> {
        self.panels
            .first()
            .map(|p| p.characters.iter().map(|c| c.character_id.clone()).collect())
            .unwrap_or_default()
    }

    pub(crate) fn reindex(&mut self) {
        for (i, p) in self.panels.iter_mut().enumerate() {
            p.index = i;
        }
        if let Some(last) = self.panels.last_mut() {
            last.transition_to_next = None;
        }
    }

    /// Checks the structural invariants of the data model.
    pub fn validate(&self) -> Result<()> {
        if self.panels.is_empty() {
            return Err(Error::Invalid("sequence has no panels".into()));
        }
        let last = self.panels.len() - 1;
        for (i, p) in self.panels.iter().enumerate() {
            if p.index != i {
                return Err(Error::Invalid(format!("panel {i} carries index {}", p.index)));
            }
            if let Some(t) = p.tension {
                if !(0.0..=10.0).contains(&t) || t.is_nan() {
                    return Err(Error::Invalid(format!("panel {i} tension {t} outside [0, 10]")));
                }
            }
            if i == last && p.transition_to_next.is_some() {
                return Err(Error::Invalid("final panel carries a transition".into()));
            }
            for slot in MaskSlot::ALL {
                if p.characters.iter().filter(|c| c.mask_slot == slot).count() > 1 {
                    return Err(Error::Invalid(format!("panel {i} has two characters in {slot:?}")));
                }
            }
            if let Some(c) = p.characters.iter().find(|c| c.height_level > 2) {
                return Err(Error::Invalid(format!(
                    "panel {i}: {} has height level {}",
                    c.character_id, c.height_level
                )));
            }
        }
        Ok(())
    }
}

/// A fresh sequence with a uniformly drawn panel count in `min_len..=max_len`.
pub fn new_sequence(
    rng: &mut RandomSource,
    min_len: usize,
    max_len: usize,
    defaults: &PanelDefaults,
) -> Result<PanelSequence> {
    if min_len < 1 || min_len > max_len {
        return Err(Error::InvalidRange { min: min_len, max: max_len });
    }
    let n = rng.between(min_len, max_len);
    Ok(PanelSequence {
        seed: rng.seed(),
        panels: (0..n).map(|i| defaults.panel(i)).collect(),
        layer_log: Vec::new(),
        notes: Vec::new(),
        grammar: None,
    })
}

/// Truncates from the tail or appends default panels until the length is `n`.
pub fn resize_sequence(
    mut sequence: PanelSequence,
    n: usize,
    defaults: &PanelDefaults,
) -> Result<PanelSequence> {
    if n < 1 {
        return Err(Error::InvalidLength(n));
    }
    if n < sequence.panels.len() {
        sequence.panels.truncate(n);
    } else {
        let cast = sequence.cast();
        while sequence.panels.len() < n {
            let mut panel = defaults.panel(sequence.panels.len());
            // keep the sequence's current cast rather than the pack defaults
            for (c, id) in panel.characters.iter_mut().zip(&cast) {
                c.character_id = id.clone();
            }
            sequence.panels.push(panel);
        }
    }
    sequence.reindex();
    Ok(sequence)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(seed: u64, min: usize, max: usize) -> PanelSequence {
        let mut rng = RandomSource::new(seed);
        new_sequence(&mut rng, min, max, &PanelDefaults::default()).unwrap()
    }

    #[test]
    fn degenerate_range_forces_length() {
        assert_eq!(seq(1, 4, 4).len(), 4);
    }

    #[test]
    fn default_panels_have_two_characters_scene_and_composition() {
        let s = seq(7, 3, 8);
        assert!((3..=8).contains(&s.len()));
        for p in &s.panels {
            assert_eq!(p.characters.len(), 2);
            assert_eq!(p.scene.as_deref(), Some("garden"));
            assert_eq!(p.composition.as_deref(), Some("basic"));
        }
        s.validate().unwrap();
    }

    #[test]
    fn same_seed_same_sequence() {
        assert_eq!(seq(7, 3, 8), seq(7, 3, 8));
    }

    #[test]
    fn invalid_ranges() {
        let mut rng = RandomSource::new(0);
        let d = PanelDefaults::default();
        assert_eq!(
            new_sequence(&mut rng, 0, 3, &d),
            Err(Error::InvalidRange { min: 0, max: 3 })
        );
        assert!(new_sequence(&mut rng, 5, 4, &d).is_err());
    }

    #[test]
    fn resize_noop_extend_truncate() {
        let d = PanelDefaults::default();
        let five = seq(1, 5, 5);
        assert_eq!(resize_sequence(five.clone(), 5, &d).unwrap(), five);

        let mut three = seq(1, 3, 3);
        three.panels[2].tension = Some(4.0);
        let grown = resize_sequence(three.clone(), 5, &d).unwrap();
        assert_eq!(grown.len(), 5);
        assert_eq!(&grown.panels[..3], &three.panels[..]);
        assert_eq!(grown.panels[3], d.panel(3));
        assert_eq!(grown.panels[4], d.panel(4));

        let mut marked = five.clone();
        marked.layer_log.push("grammar".into());
        marked.panels[1].transition_to_next = Some(TransitionKind::ActionToAction);
        let cut = resize_sequence(marked.clone(), 2, &d).unwrap();
        assert_eq!(cut.len(), 2);
        assert_eq!(cut.panels[0], marked.panels[0]);
        assert_eq!(cut.panels[1].transition_to_next, None);
        assert_eq!(cut.layer_log, vec!["grammar".to_string()]);
        assert_eq!(cut.panels.iter().map(|p| p.index).collect::<Vec<_>>(), vec![0, 1]);
        cut.validate().unwrap();

        assert_eq!(resize_sequence(five, 0, &d), Err(Error::InvalidLength(0)));
    }

    #[test]
    fn validate_catches_slot_collision() {
        let mut s = seq(2, 3, 3);
        s.panels[1].characters[1].mask_slot = MaskSlot::Left;
        assert!(s.validate().is_err());
    }
}
