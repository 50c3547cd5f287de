//! Wing outline and vein geometry in plate coordinates (metres): `x`
//! chordwise toward the trailing edge, `y` spanwise from the root.

use serde::{Deserialize, Serialize};

use crate::error::{ObsError, Result};

const PLANFORM_JSON: &str = include_str!("../../data/planform.json");
const VEINS_JSON: &str = include_str!("../../data/veins.json");

pub type Point = [f64; 2];

/// Simple polygon; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Planform {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Planform {
    type Error = ObsError;

    fn try_from(vertices: Vec<Point>) -> Result<Self> {
        Planform::new(vertices)
    }
}

impl From<Planform> for Vec<Point> {
    fn from(p: Planform) -> Self {
        p.vertices
    }
}

impl Planform {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(ObsError::Geometry(format!("planform needs at least 3 vertices, got {}", vertices.len())));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ObsError::Geometry("planform has non-finite vertices".into()));
        }
        let p = Self { vertices };
        if p.area() <= 0.0 {
            return Err(ObsError::Geometry("planform has zero area".into()));
        }
        Ok(p)
    }

    /// The built-in 50 mm-span forewing outline.
    pub fn hawkmoth() -> Self {
        let vertices: Vec<Point> = serde_json::from_str(PLANFORM_JSON).expect("bundled planform parses");
        Self::new(vertices).expect("bundled planform is valid")
    }

    pub fn unit_square() -> Self {
        Self::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("square is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// `(min, max)` corners.
    pub fn bounding_box(&self) -> (Point, Point) {
        self.vertices.iter().fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), v| {
            ([lo[0].min(v[0]), lo[1].min(v[1])], [hi[0].max(v[0]), hi[1].max(v[1])])
        })
    }

    pub fn area(&self) -> f64 {
        (self.edges().map(|(a, b)| a[0] * b[1] - b[0] * a[1]).sum::<f64>() / 2.0).abs()
    }

    pub fn span(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        hi[1] - lo[1]
    }

    /// Even-odd rule; points on an edge count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lo, hi) = self.bounding_box();
        let tol = 1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment([x, y], a, b, tol) {
                return true;
            }
            if (a[1] > y) != (b[1] > y) {
                let cross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x < cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn check_inside(&self, x: f64, y: f64) -> Result<()> {
        if self.contains(x, y) {
            Ok(())
        } else {
            Err(ObsError::Geometry(format!("point ({x}, {y}) lies outside the planform")))
        }
    }
}

fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    let (cx, cy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (cx * cx + cy * cy).sqrt() <= tol
}

/// Open or closed polyline along a vein.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vein {
    pub points: Vec<Point>,
    #[serde(default)]
    pub closed: bool,
}

/// Vein file: a JSON list whose entries are either a bare point list or
/// `{"points": […], "closed": bool}`.
pub fn parse_veins(text: &str) -> Result<Vec<Vein>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Bare(Vec<Point>),
        Full(Vein),
    }
    let entries: Vec<Entry> =
        serde_json::from_str(text).map_err(|e| ObsError::Geometry(format!("bad vein file: {e}")))?;
    Ok(entries
        .into_iter()
        .map(|e| match e {
            Entry::Bare(points) => Vein { points, closed: false },
            Entry::Full(v) => v,
        })
        .collect())
}

/// The built-in vein polylines matching [`Planform::hawkmoth`].
pub fn hawkmoth_veins() -> Vec<Vein> {
    parse_veins(VEINS_JSON).expect("bundled veins parse")
}
