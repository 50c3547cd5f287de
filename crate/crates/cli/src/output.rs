//! File writers: versioned CSV, pretty JSON and standalone SVG.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use obskit_core::wing::{Planform, Point, Vein};
use serde::Serialize;

/// Schema version stamped into every CSV header comment.
pub const SCHEMA_VERSION: u32 = 1;

/// Output directory plus a record of files written, in order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        let path = self.root.join(name);
        self.written.push(path.clone());
        path
    }

    /// CSV whose first line is `# obskit <command> v<N>`.
    pub fn csv(&mut self, name: &str, command: &str, header: &[String], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let path = self.claim(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# obskit {command} v{SCHEMA_VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let path = self.claim(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e7)`;
/// non-finite values as `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v == 0.0 || (v.is_finite() && (1e-4..1e7).contains(&v.abs())) {
        format!("{v}")
    } else if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Viridis-like ramp sampled at `t ∈ [0, 1]`.
pub fn color(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] =
        [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Plate coordinates to a canvas with span horizontal and chord downward.
#[derive(Debug, Clone, Copy)]
pub struct Canvas {
    min: Point,
    scale: f64,
    margin: f64,
    pub width: f64,
    pub height: f64,
}

impl Canvas {
    pub fn fit(planform: &Planform, pixels_along_span: f64) -> Self {
        let (min, max) = planform.bounding_box();
        let span = (max[1] - min[1]).max(f64::MIN_POSITIVE);
        let scale = pixels_along_span / span;
        let margin = 20.0;
        Self {
            min,
            scale,
            margin,
            width: pixels_along_span + 2.0 * margin,
            height: (max[0] - min[0]) * scale + 2.0 * margin + 30.0,
        }
    }

    pub fn map(&self, p: Point) -> (f64, f64) {
        (self.margin + (p[1] - self.min[1]) * self.scale, self.margin + (p[0] - self.min[0]) * self.scale)
    }

    pub fn length(&self, d: f64) -> f64 {
        d * self.scale
    }
}

fn px(v: f64) -> String {
    format!("{:.2}", v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Incrementally built SVG document.
pub struct Svg {
    canvas: Canvas,
    body: String,
}

impl Svg {
    pub fn new(canvas: Canvas) -> Self {
        Self { canvas, body: String::new() }
    }

    pub fn canvas(&self) -> &Canvas {
        &self.canvas
    }

    fn points_attr(&self, pts: &[Point]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.canvas.map(p);
                format!("{},{}", px(x), px(y))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Clip path named `id` from the planform outline.
    pub fn clip(&mut self, id: &str, planform: &Planform) {
        let pts = self.points_attr(planform.vertices());
        let _ = writeln!(self.body, r#"<defs><clipPath id="{id}"><polygon points="{pts}"/></clipPath></defs>"#);
    }

    pub fn outline(&mut self, planform: &Planform, fill: &str) {
        let pts = self.points_attr(planform.vertices());
        let _ = writeln!(self.body, r##"<polygon points="{pts}" fill="{fill}" stroke="#222222" stroke-width="1"/>"##);
    }

    /// Axis-aligned cell centred at `p` with plate-frame extents `dx` (chord) and `dy` (span).
    pub fn cell(&mut self, p: Point, dx: f64, dy: f64, fill: &str, clip: Option<&str>) {
        let (cx, cy) = self.canvas.map(p);
        let (w, h) = (self.canvas.length(dy), self.canvas.length(dx));
        let clip = clip.map(|c| format!(r#" clip-path="url(#{c})""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"{clip}/>"#,
            px(cx - w / 2.0),
            px(cy - h / 2.0),
            px(w),
            px(h)
        );
    }

    pub fn polyline(&mut self, vein: &Vein, stroke: &str) {
        let mut pts = vein.points.clone();
        if vein.closed {
            if let Some(&first) = pts.first() {
                pts.push(first);
            }
        }
        let pts = self.points_attr(&pts);
        let _ = writeln!(self.body, r#"<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#);
    }

    pub fn dot(&mut self, p: Point, radius: f64, fill: &str, stroke: &str) {
        let (cx, cy) = self.canvas.map(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" stroke="{stroke}" stroke-width="1"/>"#,
            px(cx),
            px(cy),
            px(radius)
        );
    }

    pub fn label(&mut self, text: &str) {
        let y = self.canvas.height - 10.0;
        let _ = writeln!(
            self.body,
            r##"<text x="20" y="{}" font-family="sans-serif" font-size="12" fill="#222222">{}</text>"##,
            px(y),
            escape(text)
        );
    }

    /// Horizontal colour bar along the bottom edge.
    pub fn colorbar(&mut self) {
        let (x0, y0, w, h) = (self.canvas.width - 170.0, self.canvas.height - 22.0, 150.0, 10.0);
        for i in 0..30 {
            let t = (i as f64 + 0.5) / 30.0;
            let _ = writeln!(
                self.body,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                px(x0 + w * i as f64 / 30.0),
                px(y0),
                px(w / 30.0 + 0.1),
                px(h),
                color(t)
            );
        }
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body,
            w = px(self.canvas.width),
            h = px(self.canvas.height),
        )
    }
}
