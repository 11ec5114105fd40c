//! Resolution-independent scene geometry for the glyph layouts.
//!
//! A glyph is a rectangle per variable. The amount missing is a block
//! anchored at the top whose height is AM times the glyph height; joint
//! missingness with the selection is a second block on top of it. The grey
//! histogram grows from the left edge over the left half, the red histogram
//! from the right edge over the right half, both with bin 0 at the bottom.
//!
//! Scenes use abstract units; `viewport` gives their extent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset, VariableKind};
use crate::error::{Error, Result};
use crate::stats::{self, MissingnessSummary};

pub const GLYPH_WIDTH: f64 = 60.0;
pub const GLYPH_HEIGHT: f64 = 200.0;
pub const GLYPH_GAP: f64 = 30.0;
pub const MARGIN: f64 = 20.0;
pub const LABEL_SPACE: f64 = 30.0;
pub const HEATMAP_HEIGHT: f64 = 400.0;
pub const PC_AXIS_LENGTH: f64 = 300.0;
/// Normalized position of missing values on a parallel-coordinates axis.
pub const PC_MISSING_POSITION: f64 = -0.1;
/// Smallest link weight drawn for a pair with non-zero JM.
pub const MIN_LINK_WEIGHT: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Linear,
    Radial,
    Heatmap,
    #[serde(rename = "pc")]
    ParallelCoordinates,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Layout::Linear),
            "radial" => Ok(Layout::Radial),
            "heatmap" => Ok(Layout::Heatmap),
            "pc" => Ok(Layout::ParallelCoordinates),
            other => Err(Error::Config(format!("unknown layout `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcMode {
    #[default]
    Selected,
    All,
}

impl std::str::FromStr for ArcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selected" => Ok(ArcMode::Selected),
            "all" => Ok(ArcMode::All),
            other => Err(Error::Config(format!("unknown arc mode `{other}`"))),
        }
    }
}

/// How histogram bar widths are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarScale {
    /// Grey and red each scaled to their own peak bin.
    #[default]
    Peak,
    /// Both scaled to the grey peak, so red bars show absolute counts.
    SharedCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub am: f64,
    pub jm: Option<f64>,
    pub grey: Vec<f64>,
    pub red: Option<Vec<f64>>,
    pub selected: bool,
}

impl Glyph {
    fn place(&mut self, x: f64, y: f64) {
        self.x = x;
        self.y = y;
        self.w = GLYPH_WIDTH;
        self.h = GLYPH_HEIGHT;
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Arc,
    Band,
}

/// Quadratic curve from `(x1, y1)` to `(x2, y2)` through control `(cx, cy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPath {
    pub x1: f64,
    pub y1: f64,
    pub cx: f64,
    pub cy: f64,
    pub x2: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub kind: LinkKind,
    pub a: String,
    pub b: String,
    pub jm: f64,
    /// Thickness (arcs) or width (bands) as a fraction of the maximum.
    pub weight: f64,
    pub path: LinkPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub x: f64,
    pub y_top: f64,
    pub y_bottom: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub item: usize,
    /// Grey level per column in [0, 1] (0 = lowest value); `None` is a missing cell.
    pub levels: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub y: f64,
    pub cell_w: f64,
    pub cell_h: f64,
    /// Left edge of each column.
    pub column_x: Vec<f64>,
    pub rows: Vec<HeatmapRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolylineRole {
    Normal,
    HighlightRed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub item: usize,
    pub role: PolylineRole,
    /// Normalized position per axis; missing values sit at [`PC_MISSING_POSITION`].
    pub values: Vec<f64>,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphScene {
    pub layout: Layout,
    pub selection: Option<String>,
    pub viewport: Viewport,
    pub glyphs: Vec<Glyph>,
    pub links: Vec<Link>,
    pub axes: Vec<Axis>,
    pub cells: Option<HeatmapGrid>,
    pub polylines: Vec<Polyline>,
}

impl GlyphScene {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn glyph(&self, name: &str) -> Option<&Glyph> {
        self.glyphs.iter().find(|g| g.name == name)
    }
}

/// Raw histogram counts behind one glyph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GlyphHistograms {
    pub grey: Vec<usize>,
    pub red: Option<Vec<usize>>,
}

/// Grey counts for every variable and, with a selection, red counts for
/// every other variable. Variables without recorded data get empty bins.
pub fn glyph_histograms(ds: &Dataset, bins: usize, selection: Option<usize>) -> Result<Vec<GlyphHistograms>> {
    if let Some(s) = selection {
        ds.variable(s)?;
    }
    (0..ds.n_variables())
        .map(|v| {
            let spec = match stats::histogram_spec(ds, v, bins) {
                Ok(spec) => spec,
                Err(Error::NoRecordedData(_)) => {
                    let red = selection.filter(|&s| s != v).map(|_| Vec::new());
                    return Ok(GlyphHistograms { grey: Vec::new(), red });
                }
                Err(e) => return Err(e),
            };
            match selection {
                Some(s) if s != v => {
                    let pair = stats::histogram_pair(ds, v, s, &spec)?;
                    Ok(GlyphHistograms {
                        grey: pair.grey,
                        red: Some(pair.red),
                    })
                }
                _ => Ok(GlyphHistograms {
                    grey: stats::grey_histogram(ds, v, &spec)?,
                    red: None,
                }),
            }
        })
        .collect()
}

fn scale_bars(counts: &[usize], reference: usize) -> Vec<f64> {
    if reference == 0 {
        return vec![0.0; counts.len()];
    }
    counts
        .iter()
        .map(|&c| (c as f64 / reference as f64).min(1.0))
        .collect()
}

/// Builds unplaced glyphs (unit frame at the origin) in variable order.
pub fn build_glyphs(
    summary: &MissingnessSummary,
    histograms: &[GlyphHistograms],
    selection: Option<&str>,
    bar_scale: BarScale,
) -> Result<Vec<Glyph>> {
    let m = summary.n_variables();
    if histograms.len() != m {
        return Err(Error::Scene(format!(
            "expected histograms for {m} variables, got {}",
            histograms.len()
        )));
    }
    let selected = selection.map(|name| summary.index_of(name)).transpose()?;
    (0..m)
        .map(|v| {
            let hist = &histograms[v];
            let grey_peak = hist.grey.iter().copied().max().unwrap_or(0);
            let partner = selected.filter(|&s| s != v);
            let red = match partner {
                Some(_) => {
                    let counts = hist.red.as_ref().ok_or_else(|| {
                        Error::Scene(format!("missing red histogram for `{}`", summary.names[v]))
                    })?;
                    let reference = match bar_scale {
                        BarScale::Peak => counts.iter().copied().max().unwrap_or(0),
                        BarScale::SharedCount => grey_peak,
                    };
                    Some(scale_bars(counts, reference))
                }
                None => None,
            };
            Ok(Glyph {
                name: summary.names[v].clone(),
                x: 0.0,
                y: 0.0,
                w: 1.0,
                h: 1.0,
                am: summary.am[v],
                jm: partner.map(|s| summary.jm[v][s]),
                grey: scale_bars(&hist.grey, grey_peak),
                red,
                selected: selected == Some(v),
            })
        })
        .collect()
}

fn link_weight(jm: f64, max_jm: f64) -> f64 {
    if max_jm <= 0.0 {
        0.0
    } else {
        (jm / max_jm).clamp(MIN_LINK_WEIGHT, 1.0)
    }
}

fn selected_index(glyphs: &[Glyph]) -> Option<usize> {
    glyphs.iter().position(|g| g.selected)
}

fn row_x(i: usize) -> f64 {
    MARGIN + i as f64 * (GLYPH_WIDTH + GLYPH_GAP)
}

fn row_width(m: usize) -> f64 {
    2.0 * MARGIN + m as f64 * GLYPH_WIDTH + m.saturating_sub(1) as f64 * GLYPH_GAP
}

fn check_names(glyphs: &[Glyph], summary: &MissingnessSummary) -> Result<()> {
    if glyphs.len() != summary.n_variables() || glyphs.iter().zip(&summary.names).any(|(g, n)| &g.name != n) {
        return Err(Error::Scene("glyphs do not match the summary's variables".into()));
    }
    Ok(())
}

/// Glyphs in a row; JM arcs above them from the selection (or between all pairs).
pub fn layout_linear(mut glyphs: Vec<Glyph>, summary: &MissingnessSummary, arc_mode: ArcMode) -> Result<GlyphScene> {
    if glyphs.is_empty() {
        return Err(Error::Scene("linear layout needs at least one variable".into()));
    }
    check_names(&glyphs, summary)?;
    let m = glyphs.len();
    let span = (m - 1) as f64 * (GLYPH_WIDTH + GLYPH_GAP);
    let top = MARGIN + 0.25 * span + MARGIN;
    for (i, g) in glyphs.iter_mut().enumerate() {
        g.place(row_x(i), top);
    }

    let selected = selected_index(&glyphs);
    let pairs: Vec<(usize, usize)> = match (arc_mode, selected) {
        (ArcMode::All, _) => (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect(),
        (ArcMode::Selected, Some(s)) => (0..m).filter(|&v| v != s).map(|v| (s, v)).collect(),
        (ArcMode::Selected, None) => Vec::new(),
    };
    let pairs: Vec<(usize, usize)> = pairs.into_iter().filter(|&(a, b)| summary.jm[a][b] > 0.0).collect();
    let max_jm = pairs.iter().map(|&(a, b)| summary.jm[a][b]).fold(0.0, f64::max);
    let links = pairs
        .into_iter()
        .map(|(a, b)| {
            let (xa, xb) = (glyphs[a].center().0, glyphs[b].center().0);
            Link {
                kind: LinkKind::Arc,
                a: glyphs[a].name.clone(),
                b: glyphs[b].name.clone(),
                jm: summary.jm[a][b],
                weight: link_weight(summary.jm[a][b], max_jm),
                path: LinkPath {
                    x1: xa,
                    y1: top,
                    cx: (xa + xb) / 2.0,
                    cy: top - 0.5 * (xb - xa).abs(),
                    x2: xb,
                    y2: top,
                },
            }
        })
        .collect();

    Ok(GlyphScene {
        layout: Layout::Linear,
        selection: selected.map(|s| glyphs[s].name.clone()),
        viewport: Viewport {
            width: row_width(m),
            height: top + GLYPH_HEIGHT + LABEL_SPACE + MARGIN,
        },
        glyphs,
        links,
        axes: Vec::new(),
        cells: None,
        polylines: Vec::new(),
    })
}

/// Radius of the circle of partner glyphs.
pub fn radial_radius(m: usize) -> f64 {
    let partners = m.saturating_sub(1);
    let base = 1.5 * GLYPH_HEIGHT;
    if partners < 2 {
        return base;
    }
    let chord = GLYPH_WIDTH + GLYPH_GAP;
    base.max(chord / (2.0 * (PI / partners as f64).sin()))
}

/// The selected glyph at the centre, the others on a circle starting at 12
/// o'clock and running clockwise in variable order, joined by JM bands.
pub fn layout_radial(mut glyphs: Vec<Glyph>, summary: &MissingnessSummary, selected: &str) -> Result<GlyphScene> {
    check_names(&glyphs, summary)?;
    let s = summary.index_of(selected)?;
    let m = glyphs.len();
    if m < 2 {
        return Err(Error::Scene("radial layout needs at least two variables".into()));
    }
    for (v, g) in glyphs.iter_mut().enumerate() {
        g.selected = v == s;
    }
    let radius = radial_radius(m);
    let centre = MARGIN + radius + GLYPH_HEIGHT / 2.0;
    glyphs[s].place(centre - GLYPH_WIDTH / 2.0, centre - GLYPH_HEIGHT / 2.0);
    let partners: Vec<usize> = (0..m).filter(|&v| v != s).collect();
    for (k, &v) in partners.iter().enumerate() {
        let angle = 2.0 * PI * k as f64 / partners.len() as f64;
        let (cx, cy) = (centre + radius * angle.sin(), centre - radius * angle.cos());
        glyphs[v].place(cx - GLYPH_WIDTH / 2.0, cy - GLYPH_HEIGHT / 2.0);
    }

    let max_jm = partners.iter().map(|&v| summary.jm[s][v]).fold(0.0, f64::max);
    let links = partners
        .iter()
        .filter(|&&v| summary.jm[s][v] > 0.0)
        .map(|&v| {
            let (x2, y2) = glyphs[v].center();
            Link {
                kind: LinkKind::Band,
                a: glyphs[s].name.clone(),
                b: glyphs[v].name.clone(),
                jm: summary.jm[s][v],
                weight: link_weight(summary.jm[s][v], max_jm),
                path: LinkPath {
                    x1: centre,
                    y1: centre,
                    cx: (centre + x2) / 2.0,
                    cy: (centre + y2) / 2.0,
                    x2,
                    y2,
                },
            }
        })
        .collect();

    let size = 2.0 * centre;
    Ok(GlyphScene {
        layout: Layout::Radial,
        selection: Some(glyphs[s].name.clone()),
        viewport: Viewport {
            width: size,
            height: size + LABEL_SPACE,
        },
        glyphs,
        links,
        axes: Vec::new(),
        cells: None,
        polylines: Vec::new(),
    })
}

/// Normalized positions of every item on variable `v`: min-max for numeric
/// data, category order for categorical data, 0.5 for a degenerate range.
fn normalized_column(ds: &Dataset, v: usize) -> Vec<Option<f64>> {
    let var = &ds.variables()[v];
    match var.kind() {
        VariableKind::Numeric => {
            let range = var.numeric_range();
            var.cells()
                .map(|c| match (c, range) {
                    (Cell::Number(x), Some((lo, hi))) if hi > lo => Some(((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
                    (Cell::Number(_), _) => Some(0.5),
                    _ => None,
                })
                .collect()
        }
        VariableKind::Categorical => {
            let k = var.categories().len();
            var.category_codes()
                .expect("categorical")
                .map(|code| code.map(|c| if k > 1 { c as f64 / (k - 1) as f64 } else { 0.5 }))
                .collect()
        }
    }
}

/// Item order for the heatmap: ascending by the selected variable, missing
/// items last, ties kept in original order.
pub fn heatmap_row_order(ds: &Dataset, selected: Option<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.n_items()).collect();
    if let Some(s) = selected {
        let keys = normalized_sort_keys(ds, s);
        order.sort_by(|&i, &j| match (keys[i], keys[j]) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
    }
    order
}

fn normalized_sort_keys(ds: &Dataset, v: usize) -> Vec<Option<f64>> {
    let var = &ds.variables()[v];
    match var.numeric_values() {
        Some(values) => values.iter().map(|&x| (!x.is_nan()).then_some(x)).collect(),
        None => var
            .category_codes()
            .expect("categorical")
            .map(|c| c.map(|c| c as f64))
            .collect(),
    }
}

fn resolve_selection(ds: &Dataset, selected: Option<&str>) -> Result<Option<usize>> {
    selected.map(|name| ds.index_of(name)).transpose()
}

fn attach_strip(glyphs: &mut Option<Vec<Glyph>>, ds: &Dataset, selected: Option<usize>) -> Result<f64> {
    let Some(glyphs) = glyphs else {
        return Ok(MARGIN);
    };
    if glyphs.len() != ds.n_variables() {
        return Err(Error::Scene("glyph strip does not match the dataset's variables".into()));
    }
    for (v, g) in glyphs.iter_mut().enumerate() {
        g.place(row_x(v), MARGIN);
        g.selected = selected == Some(v);
    }
    Ok(MARGIN + GLYPH_HEIGHT + MARGIN)
}

/// One row per item, one column per variable. Missing cells are marked;
/// recorded cells carry a grey level.
pub fn layout_heatmap(ds: &Dataset, mut glyphs: Option<Vec<Glyph>>, selected: Option<&str>) -> Result<GlyphScene> {
    let s = resolve_selection(ds, selected)?;
    let m = ds.n_variables();
    let top = attach_strip(&mut glyphs, ds, s)?;
    let columns: Vec<Vec<Option<f64>>> = (0..m).map(|v| normalized_column(ds, v)).collect();
    let n = ds.n_items();
    let cell_h = if n == 0 { 0.0 } else { HEATMAP_HEIGHT / n as f64 };
    let rows = heatmap_row_order(ds, s)
        .into_iter()
        .map(|item| HeatmapRow {
            item,
            levels: columns.iter().map(|col| col[item]).collect(),
        })
        .collect();
    let axes = (0..m)
        .map(|v| Axis {
            name: ds.variables()[v].name().to_owned(),
            x: row_x(v) + GLYPH_WIDTH / 2.0,
            y_top: top,
            y_bottom: top + HEATMAP_HEIGHT,
        })
        .collect();
    Ok(GlyphScene {
        layout: Layout::Heatmap,
        selection: s.map(|s| ds.variables()[s].name().to_owned()),
        viewport: Viewport {
            width: row_width(m),
            height: top + HEATMAP_HEIGHT + LABEL_SPACE + MARGIN,
        },
        glyphs: glyphs.unwrap_or_default(),
        links: Vec::new(),
        axes,
        cells: Some(HeatmapGrid {
            y: top,
            cell_w: GLYPH_WIDTH,
            cell_h,
            column_x: (0..m).map(row_x).collect(),
            rows,
        }),
        polylines: Vec::new(),
    })
}

/// Parallel coordinates with missing values below each axis; items missing
/// in the selected variable are highlighted.
pub fn layout_pc(ds: &Dataset, mut glyphs: Option<Vec<Glyph>>, selected: Option<&str>) -> Result<GlyphScene> {
    if let Some(var) = ds.variables().iter().find(|v| v.kind() == VariableKind::Categorical) {
        return Err(Error::Scene(format!(
            "parallel coordinates need numeric variables; `{}` is categorical",
            var.name()
        )));
    }
    let s = resolve_selection(ds, selected)?;
    let m = ds.n_variables();
    let top = attach_strip(&mut glyphs, ds, s)?;
    let bottom = top + PC_AXIS_LENGTH;
    let axes: Vec<Axis> = (0..m)
        .map(|v| Axis {
            name: ds.variables()[v].name().to_owned(),
            x: row_x(v) + GLYPH_WIDTH / 2.0,
            y_top: top,
            y_bottom: bottom,
        })
        .collect();
    let columns: Vec<Vec<Option<f64>>> = (0..m).map(|v| normalized_column(ds, v)).collect();
    let selected_var = s.map(|s| &ds.variables()[s]);
    let polylines = (0..ds.n_items())
        .map(|item| {
            let values: Vec<f64> = columns
                .iter()
                .map(|col| col[item].unwrap_or(PC_MISSING_POSITION))
                .collect();
            let points = values
                .iter()
                .zip(&axes)
                .map(|(&v, axis)| [axis.x, bottom - v * PC_AXIS_LENGTH])
                .collect();
            let highlighted = selected_var.is_some_and(|var| var.is_missing(item));
            Polyline {
                item,
                role: if highlighted {
                    PolylineRole::HighlightRed
                } else {
                    PolylineRole::Normal
                },
                values,
                points,
            }
        })
        .collect();
    Ok(GlyphScene {
        layout: Layout::ParallelCoordinates,
        selection: s.map(|s| ds.variables()[s].name().to_owned()),
        viewport: Viewport {
            width: row_width(m),
            height: bottom + -PC_MISSING_POSITION * PC_AXIS_LENGTH + LABEL_SPACE + MARGIN,
        },
        glyphs: glyphs.unwrap_or_default(),
        links: Vec::new(),
        axes,
        cells: None,
        polylines,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneOptions {
    pub bins: usize,
    pub arc_mode: ArcMode,
    pub attach_glyphs: bool,
    pub bar_scale: BarScale,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions {
            bins: stats::DEFAULT_BINS,
            arc_mode: ArcMode::Selected,
            attach_glyphs: false,
            bar_scale: BarScale::Peak,
        }
    }
}

/// Computes histograms and glyphs as needed and lays them out.
pub fn build_scene(
    ds: &Dataset,
    summary: &MissingnessSummary,
    layout: Layout,
    selection: Option<&str>,
    options: &SceneOptions,
) -> Result<GlyphScene> {
    let s = resolve_selection(ds, selection)?;
    if layout == Layout::Radial && s.is_none() {
        return Err(Error::Scene("radial layout requires a selected variable".into()));
    }
    if layout == Layout::ParallelCoordinates {
        // fail before computing histograms
        if let Some(var) = ds.variables().iter().find(|v| v.kind() == VariableKind::Categorical) {
            return Err(Error::Scene(format!(
                "parallel coordinates need numeric variables; `{}` is categorical",
                var.name()
            )));
        }
    }
    let needs_glyphs = matches!(layout, Layout::Linear | Layout::Radial) || options.attach_glyphs;
    let glyphs = if needs_glyphs {
        let hists = glyph_histograms(ds, options.bins, s)?;
        Some(build_glyphs(summary, &hists, selection, options.bar_scale)?)
    } else {
        None
    };
    match layout {
        Layout::Linear => layout_linear(glyphs.expect("glyphs"), summary, options.arc_mode),
        Layout::Radial => layout_radial(glyphs.expect("glyphs"), summary, selection.expect("checked")),
        Layout::Heatmap => layout_heatmap(ds, glyphs, selection),
        Layout::ParallelCoordinates => layout_pc(ds, glyphs, selection),
    }
}
