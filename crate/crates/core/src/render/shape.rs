use serde::{Deserialize, Serialize};

use crate::layout::Rect;

/// Vector primitive in whatever frame its owner defines (unit box for pack
/// glyphs, panel-normalised or page pixels once placed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Primitive {
    Rect { x: f64, y: f64, w: f64, h: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Polygon { points: Vec<[f64; 2]> },
    Line { x1: f64, y1: f64, x2: f64, y2: f64 },
}

impl Primitive {
    pub fn bbox(&self) -> Rect {
        match self {
            Primitive::Rect { x, y, w, h } => Rect::new(*x, *y, *w, *h),
            Primitive::Circle { cx, cy, r } => Rect::new(cx - r, cy - r, 2.0 * r, 2.0 * r),
            Primitive::Ellipse { cx, cy, rx, ry } => Rect::new(cx - rx, cy - ry, 2.0 * rx, 2.0 * ry),
            Primitive::Polygon { points } => {
                let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
                let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for [x, y] in points {
                    x0 = x0.min(*x);
                    y0 = y0.min(*y);
                    x1 = x1.max(*x);
                    y1 = y1.max(*y);
                }
                Rect::new(x0, y0, x1 - x0, y1 - y0)
            }
            Primitive::Line { x1, y1, x2, y2 } => {
                Rect::new(x1.min(*x2), y1.min(*y2), (x2 - x1).abs(), (y2 - y1).abs())
            }
        }
    }

    /// Maps unit-box coordinates into `frame`. Radii scale by the shorter side.
    pub fn map(&self, frame: &Rect) -> Primitive {
        let px = |x: f64| frame.x + x * frame.w;
        let py = |y: f64| frame.y + y * frame.h;
        let s = frame.w.min(frame.h);
        match self {
            Primitive::Rect { x, y, w, h } => Primitive::Rect {
                x: px(*x),
                y: py(*y),
                w: w * frame.w,
                h: h * frame.h,
            },
            Primitive::Circle { cx, cy, r } => Primitive::Circle {
                cx: px(*cx),
                cy: py(*cy),
                r: r * s,
            },
            Primitive::Ellipse { cx, cy, rx, ry } => Primitive::Ellipse {
                cx: px(*cx),
                cy: py(*cy),
                rx: rx * frame.w,
                ry: ry * frame.h,
            },
            Primitive::Polygon { points } => Primitive::Polygon {
                points: points.iter().map(|[x, y]| [px(*x), py(*y)]).collect(),
            },
            Primitive::Line { x1, y1, x2, y2 } => Primitive::Line {
                x1: px(*x1),
                y1: py(*y1),
                x2: px(*x2),
                y2: py(*y2),
            },
        }
    }
}

/// A primitive with paint. Paint is `#rrggbb` or `@key` into a scene palette.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    #[serde(flatten)]
    pub primitive: Primitive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke: Option<String>,
}

impl Shape {
    pub fn filled(primitive: Primitive, fill: &str) -> Self {
        Self {
            primitive,
            fill: Some(fill.to_string()),
            stroke: None,
        }
    }

    pub fn outlined(primitive: Primitive, fill: Option<&str>, stroke: &str) -> Self {
        Self {
            primitive,
            fill: fill.map(str::to_string),
            stroke: Some(stroke.to_string()),
        }
    }
}
