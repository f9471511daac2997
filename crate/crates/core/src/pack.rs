//! The content pack: every curated value (actions, scenes, symbols,
//! compositions, transition rules, balloon styles, thresholds) as one JSON file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::{ActionDef, ActionNetwork};
use crate::error::{Error, Result};
use crate::layout::{CompositionTemplate, TransitionKind, TransitionRule};
use crate::registry::{ObjectDef, ObjectKind, Registry};
use crate::render::{BalloonKind, BalloonStyle, CharacterStyle, SceneDef, Shape, SymbolDef};
use crate::sequence::{MaskSlot, Panel, PanelDefaults, SymbolInstance};

const SAMPLE_PACK: &str = include_str!("../data/sample_pack.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Actions at or above this activation get sharp balloons.
    pub sharp_balloon_activation: f64,
    /// Largest activation change a moment-to-moment transition allows.
    pub moment_activation: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sharp_balloon_activation: 2.0,
            moment_activation: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentPack {
    pub version: u32,
    pub name: String,
    pub defaults: PanelDefaults,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub characters: Vec<CharacterStyle>,
    pub actions: Vec<ActionDef>,
    pub scenes: Vec<SceneDef>,
    pub symbols: Vec<SymbolDef>,
    pub compositions: Vec<CompositionTemplate>,
    pub transition_rules: Vec<TransitionRule>,
    pub balloons: Vec<BalloonStyle>,
}

fn unique<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<BTreeSet<&'a str>> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Pack(format!("duplicate {what} `{id}`")));
        }
    }
    Ok(seen)
}

fn check_colors(owner: &str, glyphs: &[Shape], palette: &BTreeMap<String, String>) -> Result<()> {
    for g in glyphs {
        for paint in [g.fill.as_deref(), g.stroke.as_deref()].into_iter().flatten() {
            if let Some(key) = paint.strip_prefix('@') {
                if !palette.contains_key(key) {
                    return Err(Error::Pack(format!("{owner}: palette has no `{key}`")));
                }
            }
        }
    }
    Ok(())
}

impl ContentPack {
    /// The pack shipped with the library.
    pub fn sample() -> Self {
        Self::from_json(SAMPLE_PACK).expect("bundled sample pack is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pack: ContentPack = serde_json::from_str(text)?;
        pack.validate()?;
        Ok(pack)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Pack(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let actions = unique("action", self.actions.iter().map(|a| a.name.as_str()))?;
        let scenes = unique("scene", self.scenes.iter().map(|s| s.id.as_str()))?;
        let symbols = unique("symbol", self.symbols.iter().map(|s| s.id.as_str()))?;
        let comps = unique("composition", self.compositions.iter().map(|c| c.id.as_str()))?;
        unique("character", self.characters.iter().map(|c| c.id.as_str()))?;
        if actions.is_empty() || scenes.is_empty() || comps.is_empty() || self.characters.is_empty() {
            return Err(Error::Pack("actions, scenes, compositions and characters must be non-empty".into()));
        }
        for a in &self.actions {
            if !(-1.0..=1.0).contains(&a.valence) || !(-5.0..=5.0).contains(&a.activation) {
                return Err(Error::Pack(format!("action `{}` lies outside the circumplex range", a.name)));
            }
            if a.height_level > 2 {
                return Err(Error::Pack(format!("action `{}` has height level {}", a.name, a.height_level)));
            }
            if let Some(r) = a.reactions.iter().find(|r| !actions.contains(r.as_str())) {
                return Err(Error::Pack(format!("action `{}` reacts with unknown `{r}`", a.name)));
            }
            if let Some(s) = a.symbols.iter().find(|s| !symbols.contains(s.as_str())) {
                return Err(Error::Pack(format!("action `{}` links unknown symbol `{s}`", a.name)));
            }
        }
        for s in &self.scenes {
            check_colors(&s.id, &s.glyphs, &s.palette)?;
        }
        for s in &self.symbols {
            check_colors(&s.id, &s.glyphs, &BTreeMap::new())?;
        }
        let d = &self.defaults;
        if !scenes.contains(d.scene.as_str()) {
            return Err(Error::UnknownScene(d.scene.clone()));
        }
        if !comps.contains(d.composition.as_str()) {
            return Err(Error::UnknownComposition(d.composition.clone()));
        }
        if !actions.contains(d.action.as_str()) {
            return Err(Error::UnknownAction(d.action.clone()));
        }
        if d.characters.is_empty() || d.characters.len() > MaskSlot::ALL.len() {
            return Err(Error::Pack("defaults need one or two characters".into()));
        }
        for kind in TransitionKind::ALL {
            let n = self.transition_rules.iter().filter(|r| r.kind == kind).count();
            if n != 1 {
                return Err(Error::Pack(format!("{n} rules for transition `{kind}`, expected 1")));
            }
        }
        for rule in &self.transition_rules {
            rule.validate()?;
            if let Some(c) = rule.compositions.iter().find(|c| !comps.contains(c.as_str())) {
                return Err(Error::UnknownComposition(c.clone()));
            }
        }
        for kind in BalloonKind::ALL {
            if !self.balloons.iter().any(|b| b.kind == kind) {
                return Err(Error::Pack(format!("no style for `{kind:?}` balloons")));
            }
        }
        Ok(())
    }

    /// Actions, scenes, symbols and compositions as registry objects, with
    /// `reaction` and `symbol` relations. Actions keep their bare names; the
    /// other kinds are prefixed (`symbol:shock`) since ids may repeat across kinds.
    pub fn registry(&self) -> Result<Registry> {
        let mut reg = Registry::new();
        for a in &self.actions {
            reg.register_object(
                &a.name,
                ObjectDef::new(ObjectKind::Action)
                    .with("valence", a.valence)
                    .with("activation", a.activation),
            );
        }
        for s in &self.symbols {
            reg.register_object(&format!("symbol:{}", s.id), ObjectDef::new(ObjectKind::Symbol));
        }
        for s in &self.scenes {
            reg.register_object(&format!("scene:{}", s.id), ObjectDef::new(ObjectKind::Scene));
        }
        for c in &self.compositions {
            reg.register_object(&format!("composition:{}", c.id), ObjectDef::new(ObjectKind::Composition));
        }
        for a in &self.actions {
            for r in &a.reactions {
                reg.register_relation(&a.name, "reaction", r)?;
            }
            for s in &a.symbols {
                reg.register_relation(&a.name, "symbol", &format!("symbol:{s}"))?;
            }
        }
        for (k, v) in &self.parameters {
            reg.set_param(k, *v);
        }
        Ok(reg)
    }

    pub fn network(&self) -> Result<ActionNetwork> {
        ActionNetwork::from_registry(&self.registry()?)
    }

    pub fn action(&self, name: &str) -> Result<&ActionDef> {
        self.actions
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    pub fn scene(&self, id: &str) -> Result<&SceneDef> {
        self.scenes
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::UnknownScene(id.to_string()))
    }

    /// Scene whose id or location aliases match `location`, ignoring case.
    pub fn scene_for_location(&self, location: &str) -> Result<&SceneDef> {
        let loc = location.trim().to_lowercase();
        self.scenes
            .iter()
            .find(|s| s.id == loc || s.locations.iter().any(|l| l.to_lowercase() == loc))
            .ok_or_else(|| Error::UnmappedLocation(location.to_string()))
    }

    pub fn symbol(&self, id: &str) -> Result<&SymbolDef> {
        self.symbols
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::UnknownSymbol(id.to_string()))
    }

    pub fn composition(&self, id: &str) -> Result<&CompositionTemplate> {
        self.compositions
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownComposition(id.to_string()))
    }

    pub fn rule(&self, kind: TransitionKind) -> &TransitionRule {
        self.transition_rules
            .iter()
            .find(|r| r.kind == kind)
            .expect("validated pack has a rule per kind")
    }

    pub fn balloon_style(&self, kind: BalloonKind) -> &BalloonStyle {
        self.balloons
            .iter()
            .find(|b| b.kind == kind)
            .expect("validated pack has every balloon style")
    }

    /// Style by character id, else the pack character at the slot position.
    pub fn character_style(&self, id: &str, slot: MaskSlot) -> &CharacterStyle {
        self.characters.iter().find(|c| c.id == id).unwrap_or_else(|| {
            let i = MaskSlot::ALL.iter().position(|s| *s == slot).unwrap_or(0);
            &self.characters[i % self.characters.len()]
        })
    }

    /// Actions carrying `label`, in name order.
    pub fn pool(&self, label: &str) -> BTreeSet<String> {
        self.actions
            .iter()
            .filter(|a| a.labels.iter().any(|l| l == label))
            .map(|a| a.name.clone())
            .collect()
    }

    /// Recomputes fields that follow from the actions: height levels and
    /// overlay symbols.
    pub fn refresh_panel(&self, panel: &mut Panel) -> Result<()> {
        let mut symbols = Vec::new();
        for c in panel.characters.iter_mut() {
            let def = self.action(&c.action)?;
            c.height_level = def.height_level;
            for s in &def.symbols {
                symbols.push(SymbolInstance {
                    symbol: s.clone(),
                    owner: c.character_id.clone(),
                });
            }
        }
        panel.symbols = symbols;
        Ok(())
    }
}
