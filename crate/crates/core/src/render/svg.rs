use std::fmt::Write;

use super::shape::Primitive;

/// Fixed two-decimal number with no negative zero.
pub fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0.00".into()
    } else {
        format!("{r:.2}")
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Line-oriented SVG builder.
#[derive(Debug, Default)]
pub struct SvgWriter {
    buf: String,
    depth: usize,
}

impl SvgWriter {
    pub fn new(width: f64, height: f64) -> Self {
        let mut w = Self::default();
        w.buf.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let (wd, ht) = (num(width), num(height));
        w.open(
            "svg",
            &[
                ("xmlns", "http://www.w3.org/2000/svg".into()),
                ("width", wd.clone()),
                ("height", ht.clone()),
                ("viewBox", format!("0 0 {wd} {ht}")),
            ],
        );
        w
    }

    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
    }

    fn tag(&mut self, name: &str, attrs: &[(&str, String)], close: bool) {
        self.indent();
        self.buf.push('<');
        self.buf.push_str(name);
        for (k, v) in attrs {
            let _ = write!(self.buf, " {k}=\"{}\"", escape(v));
        }
        self.buf.push_str(if close { "/>\n" } else { ">\n" });
    }

    pub fn open(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.tag(name, attrs, false);
        self.depth += 1;
    }

    pub fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.buf, "</{name}>");
    }

    pub fn empty(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.tag(name, attrs, true);
    }

    /// Writes `prim` with its geometry attributes followed by `extra`.
    pub fn primitive(&mut self, prim: &Primitive, extra: &[(&str, String)]) {
        let (name, mut attrs): (&str, Vec<(&str, String)>) = match prim {
            Primitive::Rect { x, y, w, h } => (
                "rect",
                vec![("x", num(*x)), ("y", num(*y)), ("width", num(*w)), ("height", num(*h))],
            ),
            Primitive::Circle { cx, cy, r } => ("circle", vec![("cx", num(*cx)), ("cy", num(*cy)), ("r", num(*r))]),
            Primitive::Ellipse { cx, cy, rx, ry } => (
                "ellipse",
                vec![("cx", num(*cx)), ("cy", num(*cy)), ("rx", num(*rx)), ("ry", num(*ry))],
            ),
            Primitive::Polygon { points } => {
                let pts: Vec<String> = points.iter().map(|[x, y]| format!("{},{}", num(*x), num(*y))).collect();
                ("polygon", vec![("points", pts.join(" "))])
            }
            Primitive::Line { x1, y1, x2, y2 } => (
                "line",
                vec![("x1", num(*x1)), ("y1", num(*y1)), ("x2", num(*x2)), ("y2", num(*y2))],
            ),
        };
        attrs.extend(extra.iter().cloned());
        self.empty(name, &attrs);
    }

    pub fn finish(mut self) -> String {
        self.close("svg");
        self.buf
    }
}
