//! Panel geometry on a rule-of-thirds grid, composition templates, and the
//! four gutter transitions with the constraints each places on the next panel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{weights_for_delta, ActionNetwork};
use crate::arc::target_delta;
use crate::error::{Error, Result};
use crate::pack::ContentPack;
use crate::rng::RandomSource;
use crate::sequence::{MaskSlot, Panel, PanelSequence};

pub const THIRD: f64 = 1.0 / 3.0;
/// Character rectangle at scale 1, as a fraction of the panel.
pub const BASE_WIDTH: f64 = 0.16;
pub const BASE_HEIGHT: f64 = 0.22;
/// Upward shift per height level.
pub const LEVEL_STEP: f64 = 0.08;

/// Axis-aligned rectangle in panel-normalised coordinates, y pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x: 0.0, y: 0.0, w: 1.0, h: 1.0 };

    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn contains(&self, other: &Rect, tol: f64) -> bool {
        other.x >= self.x - tol
            && other.y >= self.y - tol
            && other.right() <= self.right() + tol
            && other.bottom() <= self.bottom() + tol
    }

    /// Shifts (and if needed shrinks) `self` to lie within `bounds`.
    pub fn clamped(&self, bounds: &Rect) -> Rect {
        let w = self.w.min(bounds.w);
        let h = self.h.min(bounds.h);
        Rect {
            x: self.x.clamp(bounds.x, bounds.right() - w),
            y: self.y.clamp(bounds.y, bounds.bottom() - h),
            w,
            h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intersection {
    UpperLeft,
    UpperRight,
    LowerLeft,
    LowerRight,
}

impl Intersection {
    pub const ALL: [Intersection; 4] = [
        Intersection::UpperLeft,
        Intersection::UpperRight,
        Intersection::LowerLeft,
        Intersection::LowerRight,
    ];

    pub fn point(self) -> (f64, f64) {
        match self {
            Intersection::UpperLeft => (THIRD, THIRD),
            Intersection::UpperRight => (2.0 * THIRD, THIRD),
            Intersection::LowerLeft => (THIRD, 2.0 * THIRD),
            Intersection::LowerRight => (2.0 * THIRD, 2.0 * THIRD),
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Intersection::UpperLeft => Intersection::UpperRight,
            Intersection::UpperRight => Intersection::UpperLeft,
            Intersection::LowerLeft => Intersection::LowerRight,
            Intersection::LowerRight => Intersection::LowerLeft,
        }
    }
}

/// The unit panel cut by two vertical and two horizontal lines.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThirdsGrid;

impl ThirdsGrid {
    pub fn cells(&self) -> Vec<Rect> {
        let mut out = Vec::with_capacity(9);
        for row in 0..3 {
            for col in 0..3 {
                out.push(Rect::new(col as f64 * THIRD, row as f64 * THIRD, THIRD, THIRD));
            }
        }
        out
    }

    pub fn intersections(&self) -> [(f64, f64); 4] {
        Intersection::ALL.map(Intersection::point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotPlacement {
    pub anchor: Intersection,
    /// Shot distance; larger is closer.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionTemplate {
    pub id: String,
    pub left: SlotPlacement,
    pub right: SlotPlacement,
}

impl CompositionTemplate {
    pub fn slot(&self, slot: MaskSlot) -> &SlotPlacement {
        match slot {
            MaskSlot::Left => &self.left,
            MaskSlot::Right => &self.right,
        }
    }

    /// Horizontal flip: the two masks trade anchors.
    pub fn mirrored(&self) -> Self {
        Self {
            id: format!("{}_mirrored", self.id),
            left: SlotPlacement { anchor: self.right.anchor, ..self.left },
            right: SlotPlacement { anchor: self.left.anchor, ..self.right },
        }
    }
}

/// Mask rectangle: centred on the anchor's x, feet on the anchor's y, raised by
/// the height level, then kept inside the panel.
pub fn mask_rect(placement: &SlotPlacement, height_level: u8) -> Rect {
    let (ax, ay) = placement.anchor.point();
    let w = BASE_WIDTH * placement.scale;
    let h = BASE_HEIGHT * placement.scale;
    let y = ay - h - f64::from(height_level) * LEVEL_STEP;
    Rect::new(ax - w / 2.0, y, w, h).clamped(&Rect::UNIT)
}

/// Rectangles for each occupied `(slot, height_level)`.
pub fn place_masks(
    template: &CompositionTemplate,
    occupants: impl IntoIterator<Item = (MaskSlot, u8)>,
) -> Vec<(MaskSlot, Rect)> {
    occupants
        .into_iter()
        .map(|(slot, level)| (slot, mask_rect(template.slot(slot), level)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    ActionToAction,
    MomentToMoment,
    AspectToAspect,
    SceneToScene,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 4] = [
        TransitionKind::ActionToAction,
        TransitionKind::MomentToMoment,
        TransitionKind::AspectToAspect,
        TransitionKind::SceneToScene,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::ActionToAction => "action_to_action",
            TransitionKind::MomentToMoment => "moment_to_moment",
            TransitionKind::AspectToAspect => "aspect_to_aspect",
            TransitionKind::SceneToScene => "scene_to_scene",
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransitionKind {
    type Err = Error;

    /// Accepts the full name or its first word (`aspect`, `scene`, ...).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_lowercase().replace('-', "_");
        TransitionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().split('_').next() == Some(s.as_str()))
            .ok_or_else(|| Error::Invalid(format!("unknown transition kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionPolicy {
    /// Copy the previous panel's composition.
    Keep,
    /// Pick an allowed composition other than the previous one.
    Change,
    /// Pick any allowed composition.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionPolicy {
    /// Move along the network to a different reaction where possible.
    Advance,
    /// Stay within the moment threshold.
    SmallChange,
    /// Keep the next panel's actions when they still follow on.
    Preserve,
    /// Draw fresh reactions.
    Resample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRule {
    pub kind: TransitionKind,
    pub composition: CompositionPolicy,
    #[serde(default)]
    pub compositions: Vec<String>,
    pub action: ActionPolicy,
    pub scene_change: bool,
}

impl TransitionRule {
    pub fn validate(&self) -> Result<()> {
        if self.scene_change != (self.kind == TransitionKind::SceneToScene) {
            return Err(Error::Pack(format!(
                "only scene_to_scene may change the scene (rule `{}`)",
                self.kind
            )));
        }
        if self.composition != CompositionPolicy::Keep && self.compositions.is_empty() {
            return Err(Error::Pack(format!("rule `{}` lists no compositions", self.kind)));
        }
        Ok(())
    }
}

/// Draws a kind for every gutter. `weights` follow [`TransitionKind::ALL`];
/// `None` is uniform. A single panel is left alone with a note.
pub fn sample_transitions(
    mut sequence: PanelSequence,
    weights: Option<&[f64; 4]>,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    if sequence.len() < 2 {
        sequence.note("transition: single panel, no gutters to fill");
        return Ok(sequence);
    }
    if let Some(w) = weights {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Invalid(format!("transition weights {w:?}")));
        }
    }
    let last = sequence.len() - 1;
    for panel in &mut sequence.panels[..last] {
        let i = match weights {
            Some(w) => rng.pick_weighted(w).expect("weights checked"),
            None => rng.below(TransitionKind::ALL.len()),
        };
        panel.transition_to_next = Some(TransitionKind::ALL[i]);
    }
    sequence.panels[last].transition_to_next = None;
    Ok(sequence)
}

/// Overwrites the leading gutters with `preset`, in order.
pub fn assign_transitions(mut sequence: PanelSequence, preset: &[TransitionKind]) -> PanelSequence {
    let gutters = sequence.len().saturating_sub(1);
    if preset.len() > gutters {
        sequence.note(format!(
            "transition: preset has {} kinds for {gutters} gutters; extra kinds ignored",
            preset.len()
        ));
    }
    for (panel, kind) in sequence.panels.iter_mut().zip(preset).take(gutters) {
        panel.transition_to_next = Some(*kind);
    }
    sequence
}

/// What [`apply_transition`] needs besides the two panels.
#[derive(Debug, Clone, Copy)]
pub struct TransitionContext<'a> {
    pub pack: &'a ContentPack,
    pub network: &'a ActionNetwork,
    pub moment_threshold: f64,
    pub epsilon: f64,
}

impl<'a> TransitionContext<'a> {
    pub fn new(pack: &'a ContentPack, network: &'a ActionNetwork) -> Self {
        Self {
            pack,
            network,
            moment_threshold: pack.thresholds.moment_activation,
            epsilon: crate::action::DEFAULT_EPSILON,
        }
    }
}

fn constraint(kind: TransitionKind, reason: impl Into<String>) -> Error {
    Error::Constraint {
        kind: kind.to_string(),
        reason: reason.into(),
    }
}

/// Chooses among `cands` by the arc weight law when both tensions are known,
/// uniformly otherwise.
fn choose_action(
    cands: &[usize],
    prev: &Panel,
    next: &Panel,
    ctx: &TransitionContext<'_>,
    rng: &mut RandomSource,
) -> usize {
    match (prev.tension, next.tension) {
        (Some(a), Some(b)) => {
            let acts: Vec<f64> = cands.iter().map(|c| ctx.network.activation(*c)).collect();
            let w = weights_for_delta(&acts, target_delta(a, b), ctx.epsilon);
            cands[rng.pick_weighted(&w).unwrap_or(0)]
        }
        _ => cands[rng.below(cands.len())],
    }
}

/// Revises `next` so the gutter from `prev` honours `kind`.
pub fn apply_transition(
    prev: &Panel,
    next: &Panel,
    kind: TransitionKind,
    ctx: &TransitionContext<'_>,
    rng: &mut RandomSource,
) -> Result<Panel> {
    let rule = ctx.pack.rule(kind);
    let mut out = next.clone();
    let prev_comp = prev.composition.clone().ok_or_else(|| Error::Dependency {
        layer: "transition".into(),
        missing: "composition".into(),
    })?;
    let prev_scene = prev.scene.clone().ok_or_else(|| Error::Dependency {
        layer: "transition".into(),
        missing: "scene".into(),
    })?;

    out.scene = Some(if rule.scene_change {
        let others: Vec<&str> = ctx
            .pack
            .scenes
            .iter()
            .map(|s| s.id.as_str())
            .filter(|s| *s != prev_scene)
            .collect();
        if others.is_empty() {
            return Err(constraint(kind, format!("no scene other than `{prev_scene}`")));
        }
        others[rng.below(others.len())].to_string()
    } else {
        prev_scene
    });

    out.composition = Some(match rule.composition {
        CompositionPolicy::Keep => prev_comp,
        CompositionPolicy::Any => rule.compositions[rng.below(rule.compositions.len())].clone(),
        CompositionPolicy::Change => {
            let others: Vec<&String> = rule.compositions.iter().filter(|c| **c != prev_comp).collect();
            if others.is_empty() {
                return Err(constraint(kind, format!("no composition other than `{prev_comp}`")));
            }
            others[rng.below(others.len())].clone()
        }
    });

    let net = ctx.network;
    for slot in MaskSlot::ALL {
        let (Some(p), Some(c)) = (prev.in_slot(slot), out.in_slot(slot)) else {
            continue;
        };
        let from = net.id(&p.action)?;
        let current = net.id(&c.action)?;
        let succ = net.successors(from);
        if succ.is_empty() {
            return Err(constraint(kind, format!("`{}` has no reactions", p.action)));
        }
        let chosen = match rule.action {
            ActionPolicy::Advance => {
                let moving: Vec<usize> = succ.iter().copied().filter(|s| *s != from).collect();
                let cands = if moving.is_empty() { succ.to_vec() } else { moving };
                choose_action(&cands, prev, next, ctx, rng)
            }
            ActionPolicy::SmallChange => {
                let a0 = net.activation(from);
                let near: Vec<usize> = succ
                    .iter()
                    .copied()
                    .filter(|s| (net.activation(*s) - a0).abs() <= ctx.moment_threshold)
                    .collect();
                if near.contains(&current) {
                    current
                } else if near.is_empty() {
                    return Err(constraint(
                        kind,
                        format!("no reaction of `{}` within {}", p.action, ctx.moment_threshold),
                    ));
                } else {
                    choose_action(&near, prev, next, ctx, rng)
                }
            }
            ActionPolicy::Preserve => {
                if net.has_edge(from, current) {
                    current
                } else {
                    choose_action(succ, prev, next, ctx, rng)
                }
            }
            ActionPolicy::Resample => choose_action(succ, prev, next, ctx, rng),
        };
        let c = out.in_slot_mut(slot).expect("slot checked above");
        c.action = net.name(chosen).to_string();
    }
    Ok(out)
}

/// Checks the post-conditions of `kind` between two finished panels.
pub fn transition_holds(
    prev: &Panel,
    next: &Panel,
    kind: TransitionKind,
    ctx: &TransitionContext<'_>,
) -> Result<bool> {
    let net = ctx.network;
    let mut adjacent = true;
    let mut small = true;
    for c in &next.characters {
        if let Some(p) = prev.in_slot(c.mask_slot) {
            let (a, b) = (net.id(&p.action)?, net.id(&c.action)?);
            adjacent &= net.has_edge(a, b);
            small &= (net.activation(a) - net.activation(b)).abs() <= ctx.moment_threshold;
        }
    }
    let same_scene = prev.scene == next.scene;
    Ok(adjacent
        && match kind {
            TransitionKind::ActionToAction => same_scene,
            TransitionKind::MomentToMoment => same_scene && prev.composition == next.composition && small,
            TransitionKind::AspectToAspect => same_scene && prev.composition != next.composition,
            TransitionKind::SceneToScene => !same_scene,
        })
}

/// Applies every gutter's kind in reading order.
pub fn apply_transitions(
    mut sequence: PanelSequence,
    ctx: &TransitionContext<'_>,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    for i in 1..sequence.len() {
        if let Some(kind) = sequence.panels[i - 1].transition_to_next {
            let revised = apply_transition(&sequence.panels[i - 1], &sequence.panels[i], kind, ctx, rng)?;
            sequence.panels[i] = revised;
        }
    }
    Ok(sequence)
}
