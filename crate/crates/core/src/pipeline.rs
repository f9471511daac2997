//! Named refinement layers applied in order to a panel sequence.

use std::fmt;
use std::str::FromStr;

use crate::action::{arc_guided_walk, random_walk, ActionNetwork, DEFAULT_EPSILON};
use crate::arc::{arc_curve, assign_tension, ArcMode, ArcProfile};
use crate::error::{Error, Result};
use crate::grammar::{assign_phases, expand_tree, leaf_sequence, sample_phase, PhaseInclusion};
use crate::layout::{apply_transitions, assign_transitions, sample_transitions, TransitionContext, TransitionKind};
use crate::pack::ContentPack;
use crate::render::{attach_balloons, hide_in_final, refresh_balloon_kinds, set_display_flags};
use crate::rng::RandomSource;
use crate::sequence::{new_sequence, MaskSlot, PanelSequence, DEFAULT_MAX_PANELS, DEFAULT_MIN_PANELS};
use crate::story::{constrain_sequence, LinkTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Grammar,
    Arc,
    /// Arc-guided when every panel has a tension, a plain walk when none do.
    Action,
    /// Plain walk regardless of tensions.
    FreeAction,
    Composition,
    Transition,
    Balloon,
    Display,
    Story,
}

impl Layer {
    pub const ALL: [Layer; 9] = [
        Layer::Grammar,
        Layer::Arc,
        Layer::Action,
        Layer::FreeAction,
        Layer::Composition,
        Layer::Transition,
        Layer::Balloon,
        Layer::Display,
        Layer::Story,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Grammar => "grammar",
            Layer::Arc => "arc",
            Layer::Action => "action",
            Layer::FreeAction => "free_action",
            Layer::Composition => "composition",
            Layer::Transition => "transition",
            Layer::Balloon => "balloon",
            Layer::Display => "display",
            Layer::Story => "story",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_lowercase().replace('-', "_");
        Layer::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or(Error::UnknownLayer(s))
    }
}

/// Comma-separated layer names; blanks are skipped.
pub fn parse_layers(csv: &str) -> Result<Vec<Layer>> {
    csv.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Every tunable knob of the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub min_panels: usize,
    pub max_panels: usize,
    pub expand_prob: f64,
    pub max_depth: usize,
    pub inclusion: PhaseInclusion,
    pub arc: ArcProfile,
    pub epsilon: f64,
    /// `None` samples the four kinds uniformly.
    pub transition_weights: Option<[f64; 4]>,
    /// Kinds forced onto the leading gutters.
    pub transition_preset: Vec<TransitionKind>,
    pub moment_threshold: Option<f64>,
    pub display_prob: f64,
    pub hide_prob: f64,
    /// Hide the left character over this many final panels.
    pub hide_final: usize,
}

impl Default for LayerParams {
    fn default() -> Self {
        Self {
            min_panels: DEFAULT_MIN_PANELS,
            max_panels: DEFAULT_MAX_PANELS,
            expand_prob: 0.3,
            max_depth: 2,
            inclusion: PhaseInclusion::default(),
            arc: ArcProfile::default(),
            epsilon: DEFAULT_EPSILON,
            transition_weights: None,
            transition_preset: Vec::new(),
            moment_threshold: None,
            display_prob: 0.5,
            hide_prob: 0.0,
            hide_final: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("bad value `{value}` for `{key}`")))
}

impl LayerParams {
    /// Defaults overlaid with the pack's `parameters` section.
    pub fn from_pack(pack: &ContentPack) -> Result<Self> {
        let mut p = Self::default();
        for (k, v) in &pack.parameters {
            p.set(k, &v.to_string())?;
        }
        Ok(p)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "min_panels" => self.min_panels = parse_num(key, value)?,
            "max_panels" => self.max_panels = parse_num(key, value)?,
            "panels" => {
                self.min_panels = parse_num(key, value)?;
                self.max_panels = self.min_panels;
            }
            "expand_prob" => self.expand_prob = parse_num(key, value)?,
            "max_depth" => self.max_depth = parse_num(key, value)?,
            "inclusion_prob" => self.inclusion = PhaseInclusion::uniform(parse_num(key, value)?),
            "establisher_prob" => self.inclusion.establisher = parse_num(key, value)?,
            "initial_prob" => self.inclusion.initial = parse_num(key, value)?,
            "prolongation_prob" => self.inclusion.prolongation = parse_num(key, value)?,
            "release_prob" => self.inclusion.release = parse_num(key, value)?,
            "arc_mode" => {
                let mode: ArcMode = value.parse()?;
                self.arc = ArcProfile::for_mode(mode, self.arc.oscillation);
            }
            "oscillation" => self.arc.oscillation = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "transition_weights" => {
                let w: Vec<f64> = value.split(',').map(|x| parse_num(key, x)).collect::<Result<_>>()?;
                let w: [f64; 4] = w
                    .try_into()
                    .map_err(|_| Error::Invalid("transition_weights needs four numbers".into()))?;
                self.transition_weights = Some(w);
            }
            "transitions" => {
                self.transition_preset = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "moment_threshold" => self.moment_threshold = Some(parse_num(key, value)?),
            "display_prob" => self.display_prob = parse_num(key, value)?,
            "hide_prob" => self.hide_prob = parse_num(key, value)?,
            "hide_final" => self.hide_final = parse_num::<f64>(key, value)? as usize,
            _ => return Err(Error::Invalid(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_panels < 1 || self.min_panels > self.max_panels {
            return Err(Error::InvalidRange {
                min: self.min_panels,
                max: self.max_panels,
            });
        }
        for (name, p) in [
            ("expand_prob", self.expand_prob),
            ("display_prob", self.display_prob),
            ("hide_prob", self.hide_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability {
                    name: name.into(),
                    value: p,
                });
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Invalid("epsilon must be positive".into()));
        }
        self.inclusion.validate()?;
        self.arc.validate()
    }
}

/// Everything layers read besides the sequence.
#[derive(Debug, Clone)]
pub struct LayerContext<'a> {
    pub pack: &'a ContentPack,
    pub network: ActionNetwork,
    pub params: LayerParams,
    pub links: Option<LinkTable>,
}

impl<'a> LayerContext<'a> {
    pub fn new(pack: &'a ContentPack) -> Result<Self> {
        Ok(Self {
            pack,
            network: pack.network()?,
            params: LayerParams::from_pack(pack)?,
            links: None,
        })
    }

    pub fn with_links(mut self, links: LinkTable) -> Self {
        self.links = Some(links);
        self
    }

    fn transition_context(&self) -> TransitionContext<'_> {
        let mut t = TransitionContext::new(self.pack, &self.network);
        if let Some(m) = self.params.moment_threshold {
            t.moment_threshold = m;
        }
        t.epsilon = self.params.epsilon;
        t
    }
}

fn ran_any(sequence: &PanelSequence, layers: &[Layer]) -> bool {
    sequence
        .layer_log
        .iter()
        .any(|l| layers.iter().any(|x| x.as_str() == l))
}

fn apply_layer(
    sequence: PanelSequence,
    layer: Layer,
    ctx: &LayerContext<'_>,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    let p = &ctx.params;
    let pack = ctx.pack;
    match layer {
        Layer::Grammar => {
            let phase = sample_phase(rng, &p.inclusion);
            let tree = expand_tree(&phase, p.expand_prob, p.max_depth, &p.inclusion, rng)?;
            let mut seq = assign_phases(sequence, &leaf_sequence(&tree), &pack.defaults)?;
            seq.grammar = Some(tree);
            Ok(seq)
        }
        Layer::Arc => assign_tension(sequence, &p.arc, rng),
        Layer::Action => {
            let with = sequence.panels.iter().filter(|x| x.tension.is_some()).count();
            if with == sequence.len() {
                let arc = arc_curve(&sequence)?;
                arc_guided_walk(sequence, &ctx.network, &arc, p.epsilon, rng)
            } else if with == 0 {
                random_walk(sequence, &ctx.network, rng)
            } else {
                Err(Error::Dependency {
                    layer: "action".into(),
                    missing: "arc (tension on every panel)".into(),
                })
            }
        }
        Layer::FreeAction => random_walk(sequence, &ctx.network, rng),
        Layer::Composition => {
            let mut seq = sequence;
            for panel in seq.panels.iter_mut() {
                let c = &pack.compositions[rng.below(pack.compositions.len())];
                panel.composition = Some(c.id.clone());
            }
            Ok(seq)
        }
        Layer::Transition => {
            let seq = sample_transitions(sequence, p.transition_weights.as_ref(), rng)?;
            let seq = assign_transitions(seq, &p.transition_preset);
            apply_transitions(seq, &ctx.transition_context(), rng)
        }
        Layer::Balloon => {
            if !ran_any(&sequence, &[Layer::Action, Layer::FreeAction, Layer::Transition, Layer::Story]) {
                return Err(Error::Dependency {
                    layer: "balloon".into(),
                    missing: "action".into(),
                });
            }
            attach_balloons(sequence, pack, p.display_prob, rng)
        }
        Layer::Display => {
            let seq = set_display_flags(sequence, p.hide_prob, rng)?;
            Ok(hide_in_final(seq, MaskSlot::Left, p.hide_final))
        }
        Layer::Story => {
            let links = ctx.links.as_ref().ok_or_else(|| Error::Dependency {
                layer: "story".into(),
                missing: "assertions".into(),
            })?;
            constrain_sequence(sequence, links, pack, &ctx.network, rng)
        }
    }
}

/// Applies `layers` in order. Each layer draws from its own sub-stream of
/// `rng`, keyed by its name and repeat count, so adding or removing one layer
/// leaves the draws of the others untouched.
pub fn apply_layers(
    mut sequence: PanelSequence,
    layers: &[Layer],
    ctx: &LayerContext<'_>,
    rng: &RandomSource,
) -> Result<PanelSequence> {
    ctx.params.validate()?;
    for (i, layer) in layers.iter().enumerate() {
        let repeat = layers[..i].iter().filter(|l| *l == layer).count();
        let key = if repeat == 0 {
            layer.as_str().to_string()
        } else {
            format!("{layer}#{repeat}")
        };
        let mut sub = rng.substream(&key);
        sequence = apply_layer(sequence, *layer, ctx, &mut sub)?;
        for panel in sequence.panels.iter_mut() {
            ctx.pack.refresh_panel(panel)?;
            refresh_balloon_kinds(panel, ctx.pack)?;
        }
        sequence.layer_log.push(layer.as_str().to_string());
    }
    Ok(sequence)
}

/// Fresh sequence for `seed` run through `layers`.
pub fn generate(seed: u64, layers: &[Layer], ctx: &LayerContext<'_>) -> Result<PanelSequence> {
    ctx.params.validate()?;
    let rng = RandomSource::new(seed);
    let mut sub = rng.substream("sequence");
    let sequence = new_sequence(&mut sub, ctx.params.min_panels, ctx.params.max_panels, &ctx.pack.defaults)?;
    apply_layers(sequence, layers, ctx, &rng)
}
