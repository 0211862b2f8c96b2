//! Deterministic SVG rendering of tabular data.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

const MARGIN: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const OTHER_COLOR: &str = "#c7c7c7";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Curve,
    Stackplot,
    Pie,
    Heatmap,
    Scatter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    pub kind: PlotKind,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
    /// Named bands in a stackplot; the rest are merged into "other".
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub title: Option<String>,
}

fn default_width() -> u32 {
    640
}

fn default_height() -> u32 {
    400
}

fn default_top_k() -> usize {
    5
}

impl PlotSpec {
    pub fn new(kind: PlotKind) -> Self {
        Self {
            kind,
            width: default_width(),
            height: default_height(),
            top_k: default_top_k(),
            title: None,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.top_k == 0 {
            return Err(CliError::Plot("top_k must be at least 1".into()));
        }
        if f64::from(self.width) <= 2.0 * MARGIN || f64::from(self.height) <= 2.0 * MARGIN {
            return Err(CliError::Plot(format!(
                "width and height must exceed {} px",
                2.0 * MARGIN
            )));
        }
        Ok(())
    }
}

/// A CSV file: one header row, then string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| CliError::Plot(format!("data: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        let rows = reader
            .records()
            .map(|r| {
                r.map(|rec| rec.iter().map(str::to_owned).collect())
                    .map_err(|e| CliError::Plot(format!("data: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn numeric(&self, from_col: usize) -> Result<Vec<Vec<f64>>, CliError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[from_col..]
                    .iter()
                    .map(|cell| {
                        cell.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| CliError::Plot(format!("data row {}: `{cell}` is not a finite number", i + 1)))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Fixed two-decimal formatting without negative zero.
fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Plot area in pixels.
#[derive(Debug, Clone, Copy)]
struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(spec: &PlotSpec) -> Self {
        Self {
            left: MARGIN,
            right: f64::from(spec.width) - MARGIN,
            top: MARGIN,
            bottom: f64::from(spec.height) - MARGIN,
        }
    }

    fn x(&self, t: f64) -> f64 {
        self.left + t * (self.right - self.left)
    }

    fn y(&self, t: f64) -> f64 {
        self.bottom - t * (self.bottom - self.top)
    }
}

fn unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn open(out: &mut String, spec: &PlotSpec) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = spec.width,
        h = spec.height
    );
    let _ = writeln!(out, r#"<rect width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);
    if let Some(title) = &spec.title {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            num(f64::from(spec.width) / 2.0),
            num(MARGIN / 2.0),
            escape(title)
        );
    }
}

fn axes(out: &mut String, f: &Frame, x: (f64, f64), y: (f64, f64)) {
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{b}" x2="{l}" y2="{t}"/></g>"#,
        l = num(f.left),
        r = num(f.right),
        t = num(f.top),
        b = num(f.bottom)
    );
    let _ = writeln!(
        out,
        r#"<g class="ticks"><text x="{l}" y="{bl}" text-anchor="middle">{x0}</text><text x="{r}" y="{bl}" text-anchor="middle">{x1}</text><text x="{ll}" y="{b}" text-anchor="end">{y0}</text><text x="{ll}" y="{t}" text-anchor="end">{y1}</text></g>"#,
        l = num(f.left),
        r = num(f.right),
        t = num(f.top),
        b = num(f.bottom),
        bl = num(f.bottom + 14.0),
        ll = num(f.left - 4.0),
        x0 = num(x.0),
        x1 = num(x.1),
        y0 = num(y.0),
        y1 = num(y.1)
    );
}

fn legend(out: &mut String, f: &Frame, entries: &[(String, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = f.top + 4.0 + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend"><rect x="{x}" y="{y}" width="10" height="10" fill="{color}"/><text x="{tx}" y="{ty}">{name}</text></g>"#,
            x = num(f.right + 4.0),
            y = num(y),
            tx = num(f.right + 16.0),
            ty = num(y + 9.0),
            name = escape(name)
        );
    }
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Renders `data` as the chart described by `spec`.
pub fn emit_svg(spec: &PlotSpec, data: &Table) -> Result<String, CliError> {
    spec.validate()?;
    if data.rows.iter().any(|r| r.len() != data.header.len()) {
        return Err(CliError::Plot("data rows differ in length from the header".into()));
    }
    let mut out = String::new();
    open(&mut out, spec);
    match spec.kind {
        PlotKind::Curve => curve(&mut out, spec, data)?,
        PlotKind::Stackplot => stackplot(&mut out, spec, data)?,
        PlotKind::Pie => pie(&mut out, spec, data)?,
        PlotKind::Heatmap => heatmap(&mut out, spec, data)?,
        PlotKind::Scatter => scatter(&mut out, spec, data)?,
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn need_rows(data: &Table, kind: &str) -> Result<(), CliError> {
    if data.rows.is_empty() {
        return Err(CliError::Plot(format!("{kind} needs at least one data row")));
    }
    Ok(())
}

/// First column is x; every further column is one polyline.
fn curve(out: &mut String, spec: &PlotSpec, data: &Table) -> Result<(), CliError> {
    need_rows(data, "curve")?;
    if data.header.len() < 2 {
        return Err(CliError::Plot("curve needs an x column and at least one series".into()));
    }
    let values = data.numeric(0)?;
    let f = Frame::new(spec);
    let xr = range(values.iter().map(|r| r[0]));
    let (lo, hi) = range(values.iter().flat_map(|r| r[1..].iter().copied()));
    let yr = (lo.min(0.0), hi.max(1.0));
    axes(out, &f, xr, yr);
    let mut entries = Vec::new();
    for s in 1..data.header.len() {
        let points: Vec<String> = values
            .iter()
            .map(|r| format!("{},{}", num(f.x(unit(r[0], xr.0, xr.1))), num(f.y(unit(r[s], yr.0, yr.1)))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            color(s - 1),
            points.join(" ")
        );
        entries.push((data.header[s].clone(), color(s - 1)));
    }
    legend(out, &f, &entries);
    Ok(())
}

/// Classes ranked by mean probability, ties to the earlier column.
fn ranked_channels(rows: &[Vec<f64>]) -> Vec<usize> {
    let c = rows[0].len();
    let mean: Vec<f64> = (0..c).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]));
    order
}

/// First column is x; the rest are class probabilities.
fn stackplot(out: &mut String, spec: &PlotSpec, data: &Table) -> Result<(), CliError> {
    need_rows(data, "stackplot")?;
    if data.header.len() < 2 {
        return Err(CliError::Plot("stackplot needs an x column and at least one class column".into()));
    }
    let values = data.numeric(0)?;
    let xs: Vec<f64> = values.iter().map(|r| r[0]).collect();
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    for (i, r) in values.iter().enumerate() {
        let row: Vec<f64> = r[1..].iter().map(|v| v.max(0.0)).collect();
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(CliError::Plot(format!("stackplot row {} has no probability mass", i + 1)));
        }
        probs.push(row.into_iter().map(|v| v / total).collect());
    }
    let order = ranked_channels(&probs);
    let named = spec.top_k.min(order.len());
    let mut bands: Vec<(String, &str, Vec<f64>)> = order[..named]
        .iter()
        .enumerate()
        .map(|(i, &k)| (data.header[k + 1].clone(), color(i), probs.iter().map(|r| r[k]).collect()))
        .collect();
    if order.len() > named {
        let rest = &order[named..];
        bands.push((
            "other".into(),
            OTHER_COLOR,
            probs.iter().map(|r| rest.iter().map(|&k| r[k]).sum()).collect(),
        ));
    }

    let f = Frame::new(spec);
    let xr = range(xs.iter().copied());
    axes(out, &f, xr, (0.0, 1.0));
    let mut lower = vec![0.0; xs.len()];
    let last = bands.len() - 1;
    let mut entries = Vec::new();
    for (b, (name, fill, band)) in bands.iter().enumerate() {
        let upper: Vec<f64> = if b == last {
            vec![1.0; xs.len()]
        } else {
            lower.iter().zip(band).map(|(l, v)| l + v).collect()
        };
        if band.iter().any(|&v| v > 0.0) {
            let mut pts: Vec<String> = xs
                .iter()
                .zip(&upper)
                .map(|(&x, &u)| format!("{},{}", num(f.x(unit(x, xr.0, xr.1))), num(f.y(u))))
                .collect();
            pts.extend(
                xs.iter()
                    .zip(&lower)
                    .rev()
                    .map(|(&x, &l)| format!("{},{}", num(f.x(unit(x, xr.0, xr.1))), num(f.y(l)))),
            );
            let _ = writeln!(
                out,
                r#"<polygon class="band" data-name="{}" fill="{fill}" stroke="none" points="{}"/>"#,
                escape(name),
                pts.join(" ")
            );
            entries.push((name.clone(), *fill));
        }
        lower = upper;
    }
    legend(out, &f, &entries);
    Ok(())
}

/// Either `label,count` rows or any table with a `label` column, whose
/// occurrences are counted.
fn pie_counts(data: &Table) -> Result<Vec<(String, f64)>, CliError> {
    let col = |name: &str| data.header.iter().position(|h| h == name);
    let label = col("label").unwrap_or(0);
    let mut counts: Vec<(String, f64)> = Vec::new();
    if let Some(count) = col("count") {
        for (i, row) in data.rows.iter().enumerate() {
            let v: f64 = row[count]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| CliError::Plot(format!("pie row {}: count must be a non-negative number", i + 1)))?;
            counts.push((row[label].clone(), v));
        }
    } else if col("label").is_some() {
        for row in &data.rows {
            match counts.iter_mut().find(|(l, _)| *l == row[label]) {
                Some(entry) => entry.1 += 1.0,
                None => counts.push((row[label].clone(), 1.0)),
            }
        }
    } else {
        return Err(CliError::Plot("pie needs `label,count` columns or a `label` column".into()));
    }
    Ok(counts)
}

fn pie(out: &mut String, spec: &PlotSpec, data: &Table) -> Result<(), CliError> {
    let counts = pie_counts(data)?;
    let total: f64 = counts.iter().map(|c| c.1).sum();
    if !(total > 0.0) {
        return Err(CliError::Plot("pie counts sum to zero".into()));
    }
    let f = Frame::new(spec);
    let (cx, cy) = ((f.left + f.right) / 2.0, (f.top + f.bottom) / 2.0);
    let r = (f.right - f.left).min(f.bottom - f.top) / 2.0;
    let nonzero: Vec<(usize, &(String, f64))> = counts.iter().enumerate().filter(|(_, c)| c.1 > 0.0).collect();
    let mut entries = Vec::new();
    if let [(i, (name, _))] = nonzero[..] {
        let _ = writeln!(
            out,
            r#"<circle class="wedge" data-name="{}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            escape(name),
            num(cx),
            num(cy),
            num(r),
            color(i)
        );
        entries.push((format!("{name} (100.0%)"), color(i)));
    } else {
        let mut start = 0.0;
        for &(i, (name, v)) in &nonzero {
            let frac = v / total;
            let end = start + frac;
            let point = |t: f64| {
                let a = t * std::f64::consts::TAU - std::f64::consts::FRAC_PI_2;
                (cx + r * a.cos(), cy + r * a.sin())
            };
            let (x0, y0) = point(start);
            let (x1, y1) = point(end);
            let large = u8::from(frac > 0.5);
            let _ = writeln!(
                out,
                r#"<path class="wedge" data-name="{}" d="M {} {} L {} {} A {r} {r} 0 {large} 1 {} {} Z" fill="{}" stroke="white"/>"#,
                escape(name),
                num(cx),
                num(cy),
                num(x0),
                num(y0),
                num(x1),
                num(y1),
                color(i),
                r = num(r)
            );
            entries.push((format!("{name} ({:.1}%)", 100.0 * frac), color(i)));
            start = end;
        }
    }
    legend(out, &f, &entries);
    Ok(())
}

/// Header `name,<column names>`; each row a name then numbers.
fn heatmap(out: &mut String, spec: &PlotSpec, data: &Table) -> Result<(), CliError> {
    need_rows(data, "heatmap")?;
    if data.header.len() < 2 {
        return Err(CliError::Plot("heatmap needs a name column and at least one value column".into()));
    }
    let values = data.numeric(1)?;
    let (lo, hi) = range(values.iter().flatten().copied());
    let f = Frame::new(spec);
    let (rows, cols) = (values.len(), data.header.len() - 1);
    let cw = (f.right - f.left) / cols as f64;
    let ch = (f.bottom - f.top) / rows as f64;
    for (i, row) in values.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text class="row-label" x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(f.left - 4.0),
            num(f.top + ch * (i as f64 + 0.5)),
            escape(&data.rows[i][0])
        );
        for (j, &v) in row.iter().enumerate() {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
            let mix = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
            let fill = format!("#{:02x}{:02x}{:02x}", mix(247.0, 8.0), mix(251.0, 48.0), mix(255.0, 107.0));
            let ink = if t > 0.5 { "white" } else { "black" };
            let (x, y) = (f.left + cw * j as f64, f.top + ch * i as f64);
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/><text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.3}</text>"#,
                num(x),
                num(y),
                num(cw),
                num(ch),
                num(x + cw / 2.0),
                num(y + ch / 2.0 + 4.0)
            );
        }
    }
    for (j, name) in data.header[1..].iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text class="col-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(f.left + cw * (j as f64 + 0.5)),
            num(f.bottom + 14.0),
            escape(name)
        );
    }
    Ok(())
}

/// First two columns are x and y.
fn scatter(out: &mut String, spec: &PlotSpec, data: &Table) -> Result<(), CliError> {
    need_rows(data, "scatter")?;
    if data.header.len() != 2 {
        return Err(CliError::Plot("scatter needs exactly two columns".into()));
    }
    let values = data.numeric(0)?;
    let f = Frame::new(spec);
    let xr = range(values.iter().map(|r| r[0]));
    let yr = range(values.iter().map(|r| r[1]));
    axes(out, &f, xr, yr);
    for r in &values {
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{}" cy="{}" r="3" fill="{}"/>"#,
            num(f.x(unit(r[0], xr.0, xr.1))),
            num(f.y(unit(r[1], yr.0, yr.1))),
            color(0)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text><text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
        num((f.left + f.right) / 2.0),
        num(f.bottom + 28.0),
        escape(&data.header[0]),
        num(f.left - 28.0),
        num((f.top + f.bottom) / 2.0),
        num(f.left - 28.0),
        num((f.top + f.bottom) / 2.0),
        escape(&data.header[1])
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        Table::parse(text).unwrap()
    }

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    /// Vertical extents of each band polygon at the first x position.
    fn band_heights(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains("class=\"band\""))
            .map(|l| {
                let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
                let pts: Vec<(f64, f64)> = pts
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect();
                let first = pts[0];
                let last = pts[pts.len() - 1];
                assert_eq!(first.0, last.0);
                last.1 - first.1
            })
            .collect()
    }

    #[test]
    fn identity_curve_is_the_diagonal() {
        let data = table("p,value\n0,0\n0.5,0.5\n1,1\n");
        let svg = emit_svg(&PlotSpec::new(PlotKind::Curve), &data).unwrap();
        // 640x400 with 40 px margins: (0,0) -> (40,360), (1,1) -> (600,40)
        assert!(svg.contains(r#"points="40.00,360.00 320.00,200.00 600.00,40.00""#), "{svg}");
    }

    #[test]
    fn one_hot_stackplot_is_one_full_band() {
        let data = table("p,class_0,class_1,class_2\n0.2,0,1,0\n0.6,0,1,0\n0.9,0,1,0\n");
        let svg = emit_svg(&PlotSpec::new(PlotKind::Stackplot), &data).unwrap();
        assert_eq!(count(&svg, "class=\"band\""), 1);
        assert_eq!(band_heights(&svg), vec![320.0]);
        assert!(svg.contains("data-name=\"class_1\""));
    }

    #[test]
    fn stackplot_bands_fill_the_height() {
        let mut text = String::from("p");
        for k in 0..8 {
            text.push_str(&format!(",class_{k}"));
        }
        text.push('\n');
        for i in 0..5 {
            let raw: Vec<f64> = (0..8).map(|k| 1.0 + ((i * 7 + k * 3) % 5) as f64).collect();
            let total: f64 = raw.iter().sum();
            text.push_str(&format!("{}", i as f64 / 4.0));
            for v in raw {
                text.push_str(&format!(",{}", v / total));
            }
            text.push('\n');
        }
        let svg = emit_svg(&PlotSpec::new(PlotKind::Stackplot), &table(&text)).unwrap();
        assert_eq!(count(&svg, "class=\"band\""), 6);
        assert!(svg.contains("data-name=\"other\""));
        let total: f64 = band_heights(&svg).iter().sum();
        assert!((total - 320.0).abs() <= 0.5);
    }

    #[test]
    fn single_category_pie_is_one_wedge() {
        let svg = emit_svg(&PlotSpec::new(PlotKind::Pie), &table("label,count\neasy,10\nhard,0\n")).unwrap();
        assert_eq!(count(&svg, "class=\"wedge\""), 1);
        assert!(svg.contains("<circle class=\"wedge\" data-name=\"easy\""));
        let counted = emit_svg(
            &PlotSpec::new(PlotKind::Pie),
            &table("point_id,label\n0,easy\n1,hard\n2,easy\n"),
        )
        .unwrap();
        assert_eq!(count(&counted, "<path class=\"wedge\""), 2);
        assert!(counted.contains("easy (66.7%)"));
    }

    #[test]
    fn heatmap_annotates_values() {
        let data = table("name,a,b\na,0,0.25\nb,0.25,0\n");
        let svg = emit_svg(&PlotSpec::new(PlotKind::Heatmap), &data).unwrap();
        assert_eq!(count(&svg, "class=\"cell\""), 4);
        assert_eq!(count(&svg, ">0.250<"), 2);
        assert!(svg.contains("fill=\"#f7fbff\"") && svg.contains("fill=\"#08306b\""));
    }

    #[test]
    fn scatter_draws_every_pair() {
        let data = table("p,subset_accuracy\n0.1,0.9\n0.5,0.5\n0.9,0.1\n");
        let svg = emit_svg(&PlotSpec::new(PlotKind::Scatter), &data).unwrap();
        assert_eq!(count(&svg, "class=\"point\""), 3);
    }

    #[test]
    fn output_is_byte_identical() {
        let data = table("p,class_0,class_1\n0,0.3,0.7\n1,0.6,0.4\n");
        for kind in [PlotKind::Curve, PlotKind::Stackplot, PlotKind::Heatmap] {
            let spec = PlotSpec::new(kind);
            assert_eq!(emit_svg(&spec, &data).unwrap(), emit_svg(&spec, &data).unwrap());
        }
    }

    #[test]
    fn mismatched_data_is_rejected() {
        let names = table("name,a\nx,0.1\n");
        assert!(emit_svg(&PlotSpec::new(PlotKind::Curve), &names).is_err());
        assert!(emit_svg(&PlotSpec::new(PlotKind::Scatter), &table("a,b,c\n1,2,3\n")).is_err());
        assert!(emit_svg(&PlotSpec::new(PlotKind::Pie), &table("a,b\n1,2\n")).is_err());
        let mut spec = PlotSpec::new(PlotKind::Stackplot);
        spec.top_k = 0;
        assert!(emit_svg(&spec, &table("p,c\n0,1\n")).is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let spec: PlotSpec = serde_json::from_str(r#"{"kind": "stackplot"}"#).unwrap();
        assert_eq!(spec, PlotSpec::new(PlotKind::Stackplot));
        assert!(serde_json::from_str::<PlotSpec>(r#"{"kind": "bars"}"#).is_err());
    }
}
