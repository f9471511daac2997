//! Vector pages from a finished sequence: scene backdrop, shape characters,
//! overlay symbols and text balloons, plus the display-flag and balloon layers.

pub mod manifest;
pub mod shape;
pub mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::action::ActionDef;
use crate::error::{Error, Result};
use crate::layout::{mask_rect, Rect};
use crate::pack::ContentPack;
use crate::rng::RandomSource;
use crate::sequence::{CharacterInstance, MaskSlot, Panel, PanelSequence};

pub use manifest::{emit_manifest, parse_manifest, MANIFEST_SCHEMA_VERSION};
pub use shape::{Primitive, Shape};
use svg::SvgWriter;

pub const DEFAULT_PANEL_PX: f64 = 512.0;
pub const DEFAULT_GUTTER_PX: f64 = 16.0;
/// Drawing layers in paint order; also the middle part of every element id.
pub const LAYERS: [&str; 6] = ["frame", "scene", "character", "symbol", "balloon", "border"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalloonKind {
    Talk,
    Thought,
    Sharp,
}

impl BalloonKind {
    pub const ALL: [BalloonKind; 3] = [BalloonKind::Talk, BalloonKind::Thought, BalloonKind::Sharp];

    pub fn as_str(self) -> &'static str {
        match self {
            BalloonKind::Talk => "talk",
            BalloonKind::Thought => "thought",
            BalloonKind::Sharp => "sharp",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalloonAnchor {
    /// Tail points at the top centre of the owner's mask.
    #[default]
    OwnerTop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalloonInstance {
    pub kind: BalloonKind,
    pub owner: String,
    pub visible: bool,
    #[serde(default)]
    pub anchor: BalloonAnchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDef {
    pub id: String,
    /// Story locations that map onto this scene.
    #[serde(default)]
    pub locations: Vec<String>,
    #[serde(default)]
    pub palette: BTreeMap<String, String>,
    pub glyphs: Vec<Shape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolAnchor {
    Above,
    TopLeft,
    TopRight,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolDef {
    pub id: String,
    pub anchor: SymbolAnchor,
    /// Drawn in a unit box placed by `anchor` next to the owner.
    pub glyphs: Vec<Shape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalloonStyle {
    pub kind: BalloonKind,
    pub fill: String,
    pub stroke: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterShape {
    Round,
    Pointed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterStyle {
    pub id: String,
    pub shape: CharacterShape,
    pub fill: String,
}

/// Symbol ids linked to `action` in the pack.
pub fn symbol_for(pack: &ContentPack, action: &str) -> Result<Vec<String>> {
    Ok(pack.action(action)?.symbols.clone())
}

pub fn balloon_kind(action: &ActionDef, sharp_threshold: f64) -> BalloonKind {
    if action.activation >= sharp_threshold {
        BalloonKind::Sharp
    } else if action.labels.iter().any(|l| l == "cognitive") {
        BalloonKind::Thought
    } else {
        BalloonKind::Talk
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            name: name.into(),
            value: p,
        })
    }
}

/// Gives every character one balloon, visible with probability `display_prob`.
pub fn attach_balloons(
    mut sequence: PanelSequence,
    pack: &ContentPack,
    display_prob: f64,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    check_probability("display_prob", display_prob)?;
    let threshold = pack.thresholds.sharp_balloon_activation;
    for panel in sequence.panels.iter_mut() {
        let mut balloons = Vec::with_capacity(panel.characters.len());
        for c in &panel.characters {
            balloons.push(BalloonInstance {
                kind: balloon_kind(pack.action(&c.action)?, threshold),
                owner: c.character_id.clone(),
                visible: rng.chance(display_prob),
                anchor: BalloonAnchor::OwnerTop,
            });
        }
        panel.balloons = balloons;
    }
    Ok(sequence)
}

/// Recomputes balloon kinds after actions change.
pub fn refresh_balloon_kinds(panel: &mut Panel, pack: &ContentPack) -> Result<()> {
    let threshold = pack.thresholds.sharp_balloon_activation;
    for b in panel.balloons.iter_mut() {
        if let Some(c) = panel.characters.iter().find(|c| c.character_id == b.owner) {
            b.kind = balloon_kind(pack.action(&c.action)?, threshold);
        }
    }
    Ok(())
}

/// Hides each character in each panel with probability `hide_prob`.
pub fn set_display_flags(
    mut sequence: PanelSequence,
    hide_prob: f64,
    rng: &mut RandomSource,
) -> Result<PanelSequence> {
    check_probability("hide_prob", hide_prob)?;
    for panel in sequence.panels.iter_mut() {
        for c in panel.characters.iter_mut() {
            c.display = !rng.chance(hide_prob);
        }
    }
    Ok(sequence)
}

/// Hides the character in `slot` over the last `k` panels.
pub fn hide_in_final(mut sequence: PanelSequence, slot: MaskSlot, k: usize) -> PanelSequence {
    let n = sequence.len();
    for panel in sequence.panels.iter_mut().skip(n.saturating_sub(k)) {
        if let Some(c) = panel.in_slot_mut(slot) {
            c.display = false;
        }
    }
    sequence
}

/// Page tiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageSpec {
    pub columns: usize,
    /// `None` puts every panel on one page.
    pub rows_per_page: Option<usize>,
    pub panel_px: f64,
    pub gutter_px: f64,
}

impl Default for PageSpec {
    fn default() -> Self {
        Self {
            columns: 3,
            rows_per_page: None,
            panel_px: DEFAULT_PANEL_PX,
            gutter_px: DEFAULT_GUTTER_PX,
        }
    }
}

impl PageSpec {
    pub fn validate(&self) -> Result<()> {
        if self.columns == 0 || self.rows_per_page == Some(0) {
            return Err(Error::Invalid("columns and rows per page must be positive".into()));
        }
        if !(self.panel_px > 0.0 && self.gutter_px >= 0.0) {
            return Err(Error::Invalid("panel size must be positive".into()));
        }
        Ok(())
    }

    pub fn rows(&self, panels: usize) -> usize {
        panels.div_ceil(self.columns)
    }

    pub fn panels_per_page(&self, panels: usize) -> usize {
        match self.rows_per_page {
            Some(r) => r * self.columns,
            None => panels.max(1),
        }
    }

    pub fn page_count(&self, panels: usize) -> usize {
        panels.div_ceil(self.panels_per_page(panels)).max(1)
    }

    /// Panel rectangle, in page pixels, for the `slot`-th panel on a page.
    pub fn panel_rect(&self, slot: usize) -> Rect {
        let (row, col) = (slot / self.columns, slot % self.columns);
        let step = self.panel_px + self.gutter_px;
        Rect::new(
            self.gutter_px + col as f64 * step,
            self.gutter_px + row as f64 * step,
            self.panel_px,
            self.panel_px,
        )
    }

    pub fn page_size(&self, panels_on_page: usize) -> (f64, f64) {
        let cols = self.columns.min(panels_on_page.max(1));
        let rows = panels_on_page.max(1).div_ceil(self.columns);
        let step = self.panel_px + self.gutter_px;
        (
            self.gutter_px + cols as f64 * step,
            self.gutter_px + rows as f64 * step,
        )
    }
}

/// One painted element of a panel, in page pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Drawn {
    pub layer: &'static str,
    pub primitive: Primitive,
    pub fill: Option<String>,
    pub stroke: Option<String>,
    pub data: Vec<(&'static str, String)>,
}

fn resolve(paint: &Option<String>, palette: &BTreeMap<String, String>) -> Option<String> {
    paint.as_ref().map(|p| match p.strip_prefix('@') {
        Some(key) => palette.get(key).cloned().unwrap_or_else(|| "#000000".into()),
        None => p.clone(),
    })
}

fn character_glyphs(style: &CharacterStyle, r: &Rect) -> Vec<Shape> {
    let (cx, _) = r.center();
    let head_r = 0.2 * r.h;
    let head_y = r.y + 0.02 * r.h + head_r;
    let body = match style.shape {
        CharacterShape::Round => Primitive::Ellipse {
            cx,
            cy: r.y + 0.68 * r.h,
            rx: 0.42 * r.w,
            ry: 0.3 * r.h,
        },
        CharacterShape::Pointed => Primitive::Polygon {
            points: vec![
                [r.x + 0.08 * r.w, r.bottom()],
                [r.x + 0.92 * r.w, r.bottom()],
                [cx, r.y + 0.38 * r.h],
            ],
        },
    };
    let eye = |dx: f64| Primitive::Circle {
        cx: cx + dx * r.w,
        cy: head_y,
        r: 0.03 * r.h,
    };
    vec![
        Shape::outlined(body, Some(&style.fill), "#1f2937"),
        Shape::outlined(Primitive::Circle { cx, cy: head_y, r: head_r }, Some(&style.fill), "#1f2937"),
        Shape::filled(eye(-0.1), "#111827"),
        Shape::filled(eye(0.1), "#111827"),
    ]
}

fn symbol_box(anchor: SymbolAnchor, r: &Rect) -> Rect {
    let s = (0.5 * r.w).max(0.06);
    let (cx, cy) = r.center();
    let (x, y) = match anchor {
        SymbolAnchor::Above => (cx - s / 2.0, r.y - s - 0.01),
        SymbolAnchor::TopRight => (r.right() - s / 2.0, r.y - s / 2.0),
        SymbolAnchor::TopLeft => (r.x - s / 2.0, r.y - s / 2.0),
        SymbolAnchor::Left => (r.x - s - 0.005, cy - s / 2.0),
        SymbolAnchor::Right => (r.right() + 0.005, cy - s / 2.0),
    };
    Rect::new(x, y, s, s).clamped(&Rect::UNIT)
}

const BALLOON_W: f64 = 0.24;
const BALLOON_H: f64 = 0.13;

fn balloon_glyphs(kind: BalloonKind, style: &BalloonStyle, owner: &Rect) -> Vec<Shape> {
    let (ox, _) = owner.center();
    let top = (ox, owner.y);
    let b = Rect::new(ox - BALLOON_W / 2.0, owner.y - BALLOON_H - 0.05, BALLOON_W, BALLOON_H).clamped(&Rect::UNIT);
    let (bx, by) = b.center();
    let (rx, ry) = (b.w / 2.0, b.h / 2.0);
    let paint = |p| Shape::outlined(p, Some(&style.fill), &style.stroke);
    let tail = Primitive::Polygon {
        points: vec![[bx - 0.02, by + 0.6 * ry], [bx + 0.02, by + 0.6 * ry], [top.0, top.1]],
    };
    match kind {
        BalloonKind::Talk => vec![paint(tail), paint(Primitive::Ellipse { cx: bx, cy: by, rx, ry })],
        BalloonKind::Thought => {
            let lerp = |t: f64| (bx + (top.0 - bx) * t, by + ry + (top.1 - by - ry) * t);
            let (p1, p2) = (lerp(0.35), lerp(0.75));
            vec![
                paint(Primitive::Ellipse { cx: bx, cy: by, rx, ry }),
                paint(Primitive::Circle { cx: p1.0, cy: p1.1, r: 0.012 }),
                paint(Primitive::Circle { cx: p2.0, cy: p2.1, r: 0.007 }),
            ]
        }
        BalloonKind::Sharp => {
            let points = (0..16)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::PI / 8.0;
                    let f = if k % 2 == 0 { 1.0 } else { 0.72 };
                    [bx + f * rx * a.cos(), by + f * ry * a.sin()]
                })
                .collect();
            vec![paint(tail), paint(Primitive::Polygon { points })]
        }
    }
}

fn require<'a>(value: &'a Option<String>, what: &str) -> Result<&'a str> {
    value.as_deref().ok_or_else(|| Error::Dependency {
        layer: "render".into(),
        missing: what.into(),
    })
}

/// Every element of `panel` in paint order, mapped into `frame` (page pixels).
pub fn draw_panel(panel: &Panel, pack: &ContentPack, frame: &Rect) -> Result<Vec<Drawn>> {
    let scene = pack.scene(require(&panel.scene, "scene")?)?;
    let template = pack.composition(require(&panel.composition, "composition")?)?;
    let mut out = Vec::new();
    let mut push = |layer, shape: &Shape, palette: &BTreeMap<String, String>, data: Vec<(&'static str, String)>| {
        out.push(Drawn {
            layer,
            primitive: shape.primitive.map(frame),
            fill: resolve(&shape.fill, palette),
            stroke: resolve(&shape.stroke, palette),
            data,
        });
    };
    let none = BTreeMap::new();
    push("frame", &Shape::filled(Primitive::Rect { x: 0.0, y: 0.0, w: 1.0, h: 1.0 }, "#ffffff"), &none, vec![]);
    for g in &scene.glyphs {
        push("scene", g, &scene.palette, vec![("data-scene", scene.id.clone())]);
    }
    let shown: Vec<(&CharacterInstance, Rect)> = panel
        .characters
        .iter()
        .filter(|c| c.display)
        .map(|c| (c, mask_rect(template.slot(c.mask_slot), c.height_level)))
        .collect();
    for (c, r) in &shown {
        let style = pack.character_style(&c.character_id, c.mask_slot);
        for g in character_glyphs(style, r) {
            push(
                "character",
                &g,
                &none,
                vec![("data-owner", c.character_id.clone()), ("data-action", c.action.clone())],
            );
        }
    }
    for s in &panel.symbols {
        let Some((_, r)) = shown.iter().find(|(c, _)| c.character_id == s.owner) else {
            continue;
        };
        let def = pack.symbol(&s.symbol)?;
        let bx = symbol_box(def.anchor, r);
        for g in &def.glyphs {
            let placed = Shape {
                primitive: g.primitive.map(&bx),
                ..g.clone()
            };
            push(
                "symbol",
                &placed,
                &none,
                vec![("data-owner", s.owner.clone()), ("data-symbol", s.symbol.clone())],
            );
        }
    }
    for b in panel.balloons.iter().filter(|b| b.visible) {
        let Some((_, r)) = shown.iter().find(|(c, _)| c.character_id == b.owner) else {
            continue;
        };
        for g in balloon_glyphs(b.kind, pack.balloon_style(b.kind), r) {
            push(
                "balloon",
                &g,
                &none,
                vec![("data-owner", b.owner.clone()), ("data-kind", b.kind.as_str().into())],
            );
        }
    }
    push(
        "border",
        &Shape::outlined(Primitive::Rect { x: 0.0, y: 0.0, w: 1.0, h: 1.0 }, Some("none"), "#111111"),
        &none,
        vec![],
    );
    Ok(out)
}

fn write_panel(w: &mut SvgWriter, panel: &Panel, pack: &ContentPack, frame: &Rect) -> Result<()> {
    let drawn = draw_panel(panel, pack, frame)?;
    let i = panel.index;
    w.open(
        "g",
        &[
            ("id", format!("panel-{i}")),
            ("class", "panel".into()),
            ("data-x", svg::num(frame.x)),
            ("data-y", svg::num(frame.y)),
            ("data-size", svg::num(frame.w)),
        ],
    );
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    for d in drawn {
        let n = counters.entry(d.layer).or_insert(0);
        let mut attrs = vec![("id", format!("panel-{i}-{}-{n}", d.layer)), ("class", d.layer.to_string())];
        *n += 1;
        attrs.extend(d.data);
        if let Some(f) = d.fill {
            attrs.push(("fill", f));
        }
        if let Some(s) = d.stroke {
            attrs.push(("stroke", s));
            attrs.push(("stroke-width", "2".into()));
        }
        w.primitive(&d.primitive, &attrs);
    }
    w.close("g");
    Ok(())
}

/// A single panel as a standalone document of `px` by `px`.
pub fn render_panel(panel: &Panel, pack: &ContentPack, px: f64) -> Result<String> {
    let mut w = SvgWriter::new(px, px);
    write_panel(&mut w, panel, pack, &Rect::new(0.0, 0.0, px, px))?;
    Ok(w.finish())
}

/// Tiles panels left to right, top to bottom; one document per page.
pub fn render_pages(sequence: &PanelSequence, pack: &ContentPack, spec: &PageSpec) -> Result<Vec<String>> {
    spec.validate()?;
    let per_page = spec.panels_per_page(sequence.len());
    let mut pages = Vec::new();
    for chunk in sequence.panels.chunks(per_page) {
        let (pw, ph) = spec.page_size(chunk.len());
        let mut w = SvgWriter::new(pw, ph);
        w.empty(
            "rect",
            &[
                ("id", "page-background".into()),
                ("x", "0.00".into()),
                ("y", "0.00".into()),
                ("width", svg::num(pw)),
                ("height", svg::num(ph)),
                ("fill", "#f3f4f6".into()),
            ],
        );
        for (slot, panel) in chunk.iter().enumerate() {
            write_panel(&mut w, panel, pack, &spec.panel_rect(slot))?;
        }
        pages.push(w.finish());
    }
    Ok(pages)
}
