//! Deterministic SVG 1.1 serialization of a [`GlyphScene`].
//!
//! Elements are emitted in a fixed order: background, heatmap cells, axes
//! and polylines, arcs/bands, glyph frames, AM/JM blocks, grey bars, red
//! bars, labels. Every drawn element carries a `class` naming its role, and
//! zero-size marks are skipped. Numbers are printed with three decimals.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{GlyphScene, Layout, LinkKind, PolylineRole, Viewport};

/// Link stroke width, in scene units, at weight 1.
pub const MAX_LINK_WIDTH: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub background: String,
    pub frame: String,
    pub selected_frame: String,
    pub am: String,
    pub jm: String,
    pub grey_bar: String,
    pub red_bar: String,
    pub link: String,
    pub missing_cell: String,
    /// Heatmap colour of the lowest value.
    pub grey_low: String,
    /// Heatmap colour of the highest value.
    pub grey_high: String,
    pub polyline: String,
    pub polyline_highlight: String,
    pub axis: String,
    pub label: String,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: "#ffffff".into(),
            frame: "#595959".into(),
            selected_frame: "#d62728".into(),
            am: "#9ecae9".into(),
            jm: "#d62728".into(),
            grey_bar: "#bdbdbd".into(),
            red_bar: "#e34a33".into(),
            link: "#d62728".into(),
            missing_cell: "#d62728".into(),
            grey_low: "#404040".into(),
            grey_high: "#e6e6e6".into(),
            polyline: "#9e9e9e".into(),
            polyline_highlight: "#d62728".into(),
            axis: "#303030".into(),
            label: "#202020".into(),
        }
    }
}

impl Palette {
    /// A less salient variant for contexts where missing data is not the focus.
    pub fn muted() -> Self {
        Palette {
            selected_frame: "#8c6d62".into(),
            jm: "#c49c94".into(),
            red_bar: "#c49c94".into(),
            link: "#c49c94".into(),
            missing_cell: "#c49c94".into(),
            polyline_highlight: "#c49c94".into(),
            ..Palette::default()
        }
    }

    fn roles(&self) -> [(&'static str, &str); 15] {
        [
            ("background", &self.background),
            ("frame", &self.frame),
            ("selected_frame", &self.selected_frame),
            ("am", &self.am),
            ("jm", &self.jm),
            ("grey_bar", &self.grey_bar),
            ("red_bar", &self.red_bar),
            ("link", &self.link),
            ("missing_cell", &self.missing_cell),
            ("grey_low", &self.grey_low),
            ("grey_high", &self.grey_high),
            ("polyline", &self.polyline),
            ("polyline_highlight", &self.polyline_highlight),
            ("axis", &self.axis),
            ("label", &self.label),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    /// Output size; `None` keeps the scene's own extent.
    pub viewport: Option<Viewport>,
    pub palette: Palette,
    pub font_size: f64,
    pub show_labels: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            viewport: None,
            palette: Palette::default(),
            font_size: 12.0,
            show_labels: true,
        }
    }
}

impl RenderStyle {
    pub fn from_json(text: &str) -> Result<Self> {
        let style: RenderStyle = serde_json::from_str(text)?;
        style.validate()?;
        Ok(style)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(vp) = self.viewport {
            if !(vp.width > 0.0 && vp.height > 0.0) || !vp.width.is_finite() || !vp.height.is_finite() {
                return Err(Error::Style(format!(
                    "viewport must be positive, got {}x{}",
                    vp.width, vp.height
                )));
            }
        }
        if !(self.font_size > 0.0 && self.font_size.is_finite()) {
            return Err(Error::Style("font_size must be positive".into()));
        }
        for (role, color) in self.palette.roles() {
            if color.is_empty() || color.contains(['"', '<', '>', '&']) {
                return Err(Error::Style(format!("invalid colour `{color}` for role `{role}`")));
            }
        }
        for (role, color) in [("grey_low", &self.palette.grey_low), ("grey_high", &self.palette.grey_high)] {
            parse_hex(color).ok_or_else(|| Error::Style(format!("`{role}` must be a #rrggbb colour")))?;
        }
        Ok(())
    }
}

fn parse_hex(color: &str) -> Option<[u8; 3]> {
    let hex = color.strip_prefix('#')?;
    if hex.len() != 6 {
        return None;
    }
    let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
    Some([byte(0)?, byte(2)?, byte(4)?])
}

fn grey_ramp(low: [u8; 3], high: [u8; 3], level: f64) -> String {
    let t = level.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(low[0], high[0]),
        mix(low[1], high[1]),
        mix(low[2], high[2])
    )
}

/// Fixed three-decimal formatting without negative zero.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
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

/// Shortens `text` with an ellipsis to fit `width` at roughly 0.6 em per character.
fn truncate_label(text: &str, width: f64, font_size: f64) -> String {
    let max_chars = (width / (0.6 * font_size)).floor().max(1.0) as usize;
    let count = text.chars().count();
    if count <= max_chars {
        text.to_owned()
    } else {
        let mut out: String = text.chars().take(max_chars.saturating_sub(1)).collect();
        out.push('…');
        out
    }
}

struct Transform {
    scale: f64,
    dx: f64,
    dy: f64,
}

impl Transform {
    fn x(&self, x: f64) -> String {
        fmt3(self.dx + x * self.scale)
    }
    fn y(&self, y: f64) -> String {
        fmt3(self.dy + y * self.scale)
    }
    fn len(&self, d: f64) -> String {
        fmt3(d * self.scale)
    }
}

pub fn render(scene: &GlyphScene, style: &RenderStyle) -> Result<String> {
    style.validate()?;
    let source = scene.viewport;
    if !(source.width > 0.0 && source.height > 0.0) {
        return Err(Error::Style("scene viewport must be positive".into()));
    }
    let target = style.viewport.unwrap_or(source);
    let scale = f64::min(target.width / source.width, target.height / source.height);
    let t = Transform {
        scale,
        dx: (target.width - source.width * scale) / 2.0,
        dy: (target.height - source.height * scale) / 2.0,
    };
    let p = &style.palette;
    let mut out = String::new();
    let w = &mut out;

    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        fmt3(target.width),
        fmt3(target.height)
    );
    let _ = writeln!(
        w,
        r#"<rect class="background" x="0.000" y="0.000" width="{}" height="{}" fill="{}"/>"#,
        fmt3(target.width),
        fmt3(target.height),
        p.background
    );

    if let Some(grid) = &scene.cells {
        let (low, high) = (parse_hex(&p.grey_low).expect("validated"), parse_hex(&p.grey_high).expect("validated"));
        for (r, row) in grid.rows.iter().enumerate() {
            let y = grid.y + r as f64 * grid.cell_h;
            for (c, level) in row.levels.iter().enumerate() {
                let (class, fill) = match level {
                    Some(level) => ("cell", grey_ramp(low, high, *level)),
                    None => ("cell missing", p.missing_cell.clone()),
                };
                let _ = writeln!(
                    w,
                    r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                    t.x(grid.column_x[c]),
                    t.y(y),
                    t.len(grid.cell_w),
                    t.len(grid.cell_h),
                );
            }
        }
    }

    if scene.layout == Layout::ParallelCoordinates {
        for axis in &scene.axes {
            let _ = writeln!(
                w,
                r#"<line class="axis" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{3}" stroke-width="1"/>"#,
                t.x(axis.x),
                t.y(axis.y_top),
                t.y(axis.y_bottom),
                p.axis
            );
        }
        // highlighted lines on top
        for role in [PolylineRole::Normal, PolylineRole::HighlightRed] {
            for line in scene.polylines.iter().filter(|l| l.role == role) {
                let points: Vec<String> = line
                    .points
                    .iter()
                    .map(|[x, y]| format!("{},{}", t.x(*x), t.y(*y)))
                    .collect();
                let (class, stroke, opacity) = match role {
                    PolylineRole::Normal => ("polyline", &p.polyline, "0.5"),
                    PolylineRole::HighlightRed => ("polyline highlight", &p.polyline_highlight, "0.8"),
                };
                let _ = writeln!(
                    w,
                    r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-opacity="{opacity}" stroke-width="1"/>"#,
                    points.join(" ")
                );
            }
        }
    }

    for link in &scene.links {
        let class = match link.kind {
            LinkKind::Arc => "arc",
            LinkKind::Band => "band",
        };
        let lp = &link.path;
        let _ = writeln!(
            w,
            r#"<path class="{class}" d="M {} {} Q {} {} {} {}" fill="none" stroke="{}" stroke-opacity="0.6" stroke-width="{}"/>"#,
            t.x(lp.x1),
            t.y(lp.y1),
            t.x(lp.cx),
            t.y(lp.cy),
            t.x(lp.x2),
            t.y(lp.y2),
            p.link,
            t.len(link.weight * MAX_LINK_WIDTH),
        );
    }

    for g in &scene.glyphs {
        let (class, stroke, width) = if g.selected {
            ("frame selected", &p.selected_frame, "3")
        } else {
            ("frame", &p.frame, "1")
        };
        let _ = writeln!(
            w,
            r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="{stroke}" stroke-width="{width}"/>"#,
            t.x(g.x),
            t.y(g.y),
            t.len(g.w),
            t.len(g.h),
            p.background,
        );
    }

    for g in &scene.glyphs {
        let blocks = [("am", Some(g.am), &p.am), ("jm", g.jm, &p.jm)];
        for (class, value, fill) in blocks {
            let Some(value) = value.filter(|&v| v > 0.0) else {
                continue;
            };
            let _ = writeln!(
                w,
                r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                t.x(g.x),
                t.y(g.y),
                t.len(g.w),
                t.len(value * g.h),
            );
        }
    }

    for (class, red) in [("grey-bar", false), ("red-bar", true)] {
        for g in &scene.glyphs {
            let bars = if red {
                match &g.red {
                    Some(bars) => bars,
                    None => continue,
                }
            } else {
                &g.grey
            };
            let k = bars.len();
            let half = g.w / 2.0;
            let bin_h = g.h / k.max(1) as f64;
            let (fill, opacity) = if red { (&p.red_bar, "0.85") } else { (&p.grey_bar, "0.85") };
            for (b, &frac) in bars.iter().enumerate() {
                if frac <= 0.0 {
                    continue;
                }
                let width = frac * half;
                let x = if red { g.x + g.w - width } else { g.x };
                let y = g.y + g.h - (b + 1) as f64 * bin_h;
                let _ = writeln!(
                    w,
                    r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{fill}" fill-opacity="{opacity}" stroke="{}" stroke-width="0.5"/>"#,
                    t.x(x),
                    t.y(y),
                    t.len(width),
                    t.len(bin_h),
                    p.frame,
                );
            }
        }
    }

    if style.show_labels {
        let fs = style.font_size;
        let labels: Vec<(&str, f64, f64, f64)> = if scene.axes.is_empty() {
            scene
                .glyphs
                .iter()
                .map(|g| (g.name.as_str(), g.x + g.w / 2.0, g.y + g.h, g.w))
                .collect()
        } else {
            let below = match scene.layout {
                Layout::ParallelCoordinates => |a: &crate::scene::Axis| a.y_bottom + 0.1 * (a.y_bottom - a.y_top),
                _ => |a: &crate::scene::Axis| a.y_bottom,
            };
            scene
                .axes
                .iter()
                .map(|a| (a.name.as_str(), a.x, below(a), crate::scene::GLYPH_WIDTH))
                .collect()
        };
        for (name, x, y, width) in labels {
            let label = truncate_label(name, width * t.scale, fs);
            let _ = writeln!(
                w,
                r#"<text class="label" x="{}" y="{}" font-size="{}" text-anchor="middle" fill="{}">{}</text>"#,
                t.x(x),
                fmt3(t.dy + y * t.scale + 1.5 * fs),
                fmt3(fs),
                p.label,
                escape(&label)
            );
        }
    }

    let _ = writeln!(w, "</svg>");
    Ok(out)
}
