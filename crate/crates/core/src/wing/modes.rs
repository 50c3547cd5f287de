//! Out-of-plane mode shapes `φ_i(x, y)` with first and second derivatives.
//!
//! The built-in set is an assumed-modes Rayleigh–Ritz solution of a
//! Kirchhoff plate clamped along the root, using cantilever beam functions
//! along the span (and a chordwise-linear twist shape) as the trial basis.
//! Mode grids sampled elsewhere (e.g. from a finite-element run) can be
//! loaded from a JSON file instead.

use std::fmt;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::planform::Planform;
use crate::error::{ObsError, Result};
use crate::numerics::{symmetric_eig, Matrix};

/// `β_r L` for the first clamped-free beam modes.
const BEAM_ROOTS: [f64; 3] = [1.875_104_068_711_961, 4.694_091_132_974_175, 7.854_757_438_237_613];

/// Value and derivatives of one mode at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModeSample {
    pub w: f64,
    pub wx: f64,
    pub wy: f64,
    pub wxx: f64,
    pub wyy: f64,
    pub wxy: f64,
}

impl ModeSample {
    fn scaled_add(&mut self, a: f64, s: &ModeSample) {
        self.w += a * s.w;
        self.wx += a * s.wx;
        self.wy += a * s.wy;
        self.wxx += a * s.wxx;
        self.wyy += a * s.wyy;
        self.wxy += a * s.wxy;
    }
}

pub trait ModeSet: Send + Sync + fmt::Debug {
    fn count(&self) -> usize;
    fn sample(&self, mode: usize, x: f64, y: f64) -> ModeSample;
}

/// Clamped-free beam function `Y_r` on `[0, L]`, scaled so `Y_r(L) = ±2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamFunction {
    beta: f64,
    sigma: f64,
}

impl BeamFunction {
    /// `r` counts from zero.
    pub fn new(r: usize, span: f64) -> Result<Self> {
        let &bl = BEAM_ROOTS.get(r).ok_or_else(|| ObsError::Model(format!("beam function {r} is not tabulated")))?;
        let sigma = (bl.cosh() + bl.cos()) / (bl.sinh() + bl.sin());
        Ok(Self { beta: bl / span, sigma })
    }

    /// `(Y, Y', Y'')`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        let b = self.beta;
        let z = b * y;
        let (ch, sh, c, s) = (z.cosh(), z.sinh(), z.cos(), z.sin());
        let v = ch - c - self.sigma * (sh - s);
        let d1 = b * (sh + s - self.sigma * (ch - c));
        let d2 = b * b * (ch + c - self.sigma * (sh + s));
        (v, d1, d2)
    }
}

/// Trial shape for the Ritz basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialShape {
    /// `Y_r(y)`.
    Bending(usize),
    /// `(x − x_ref)/c · Y_r(y)`.
    Twist(usize),
}

/// Chordwise reference for twist shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ChordFrame {
    x_ref: f64,
    chord: f64,
    y_root: f64,
}

fn trial_sample(shape: TrialShape, beams: &[BeamFunction], frame: &ChordFrame, x: f64, y: f64) -> ModeSample {
    let yy = y - frame.y_root;
    match shape {
        TrialShape::Bending(r) => {
            let (v, d1, d2) = beams[r].eval(yy);
            ModeSample { w: v, wy: d1, wyy: d2, ..Default::default() }
        }
        TrialShape::Twist(r) => {
            let (v, d1, d2) = beams[r].eval(yy);
            let xi = (x - frame.x_ref) / frame.chord;
            ModeSample { w: xi * v, wx: v / frame.chord, wy: xi * d1, wxx: 0.0, wyy: xi * d2, wxy: d1 / frame.chord }
        }
    }
}

/// Uniform isotropic plate properties used for the built-in modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateProps {
    /// kg/m².
    pub areal_density: f64,
    /// N·m.
    pub flexural_rigidity: f64,
    pub poisson: f64,
}

impl Default for PlateProps {
    fn default() -> Self {
        Self { areal_density: 0.06, flexural_rigidity: 5.0e-3, poisson: 0.3 }
    }
}

impl PlateProps {
    pub fn validate(&self) -> Result<()> {
        if !(self.areal_density > 0.0) || !(self.flexural_rigidity > 0.0) {
            return Err(ObsError::Model("density and flexural rigidity must be positive".into()));
        }
        if !(-1.0..0.5).contains(&self.poisson) {
            return Err(ObsError::Model(format!("Poisson ratio {} out of range", self.poisson)));
        }
        Ok(())
    }
}

/// Midpoint-rule cells covering the planform.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanformQuadrature {
    pub points: Vec<[f64; 2]>,
    pub cell_area: f64,
}

impl PlanformQuadrature {
    pub fn new(planform: &Planform, nx: usize, ny: usize) -> Result<Self> {
        let (lo, hi) = planform.bounding_box();
        let dx = (hi[0] - lo[0]) / nx as f64;
        let dy = (hi[1] - lo[1]) / ny as f64;
        let points: Vec<[f64; 2]> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| [lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy]))
            .filter(|p| planform.contains(p[0], p[1]))
            .collect();
        if points.is_empty() {
            return Err(ObsError::Geometry("quadrature grid misses the planform".into()));
        }
        Ok(Self { points, cell_area: dx * dy })
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points.iter().map(|p| f(p[0], p[1])).sum::<f64>() * self.cell_area
    }
}

/// Ritz modes: `φ_i = Σ_j coeffs[(i, j)] · trial_j`, mass-orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumedModes {
    shapes: Vec<TrialShape>,
    beams: Vec<BeamFunction>,
    frame: ChordFrame,
    coeffs: Matrix,
}

impl ModeSet for AssumedModes {
    fn count(&self) -> usize {
        self.coeffs.nrows()
    }

    fn sample(&self, mode: usize, x: f64, y: f64) -> ModeSample {
        let mut out = ModeSample::default();
        for (j, &shape) in self.shapes.iter().enumerate() {
            out.scaled_add(self.coeffs[(mode, j)], &trial_sample(shape, &self.beams, &self.frame, x, y));
        }
        out
    }
}

/// Trial basis for `n_m` built-in modes: bending, twist, second bending.
pub fn default_trial_shapes(n_m: usize) -> Result<Vec<TrialShape>> {
    let all = [TrialShape::Bending(0), TrialShape::Twist(0), TrialShape::Bending(1)];
    if n_m == 0 || n_m > all.len() {
        return Err(ObsError::Model(format!("built-in modes support 1 to 3 modes, got {n_m}")));
    }
    Ok(all[..n_m].to_vec())
}

/// Solves the Ritz eigenproblem `K c = ω² M c` on the planform.
///
/// Returns the modes (ascending frequency) and their `ω²` values.
pub fn assumed_modes(
    planform: &Planform,
    shapes: &[TrialShape],
    plate: &PlateProps,
    quad: &PlanformQuadrature,
) -> Result<(AssumedModes, Vec<f64>)> {
    plate.validate()?;
    let (lo, hi) = planform.bounding_box();
    let span = hi[1] - lo[1];
    let area = planform.area();
    let frame =
        ChordFrame { x_ref: quad.integrate(|x, _| x) / quad.integrate(|_, _| 1.0), chord: area / span, y_root: lo[1] };
    let beams = (0..BEAM_ROOTS.len()).map(|r| BeamFunction::new(r, span)).collect::<Result<Vec<_>>>()?;

    let m = shapes.len();
    let mut mass = Matrix::zeros(m, m);
    let mut stiff = Matrix::zeros(m, m);
    let (d, nu, rho) = (plate.flexural_rigidity, plate.poisson, plate.areal_density);
    for p in &quad.points {
        let s: Vec<ModeSample> = shapes.iter().map(|&sh| trial_sample(sh, &beams, &frame, p[0], p[1])).collect();
        for i in 0..m {
            for j in 0..m {
                let (a, b) = (&s[i], &s[j]);
                mass[(i, j)] += rho * a.w * b.w;
                let lap = (a.wxx + a.wyy) * (b.wxx + b.wyy);
                let twist = a.wxx * b.wyy + a.wyy * b.wxx - 2.0 * a.wxy * b.wxy;
                stiff[(i, j)] += d * (lap - (1.0 - nu) * twist);
            }
        }
    }
    mass *= quad.cell_area;
    stiff *= quad.cell_area;

    let chol = Cholesky::new(mass.clone())
        .ok_or_else(|| ObsError::Model("trial shapes are linearly dependent on this planform".into()))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or_else(|| ObsError::Model("mass matrix factor is singular".into()))?;
    let reduced = &l_inv * &stiff * l_inv.transpose();
    let eig = symmetric_eig(&reduced)?;
    let mut coeffs = (l_inv.transpose() * &eig.vectors).transpose();
    for mut row in coeffs.row_iter_mut() {
        let (imax, _) = row.iter().enumerate().fold(
            (0, 0.0),
            |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            },
        );
        if row[imax] < 0.0 {
            row.neg_mut();
        }
    }
    let omega_sq = eig.values.iter().map(|&v| v.max(0.0)).collect();
    Ok((AssumedModes { shapes: shapes.to_vec(), beams, frame, coeffs }, omega_sq))
}

/// `M_a` columns `(−∫ρφ, ∫ρφy, −∫ρφx)` for uniform areal density.
pub fn applied_mass_matrix(modes: &dyn ModeSet, quad: &PlanformQuadrature, areal_density: f64) -> Matrix {
    let n = modes.count();
    let mut ma = Matrix::zeros(n, 3);
    for i in 0..n {
        ma[(i, 0)] = -areal_density * quad.integrate(|x, y| modes.sample(i, x, y).w);
        ma[(i, 1)] = areal_density * quad.integrate(|x, y| modes.sample(i, x, y).w * y);
        ma[(i, 2)] = -areal_density * quad.integrate(|x, y| modes.sample(i, x, y).w * x);
    }
    ma
}

/// Mode shapes sampled on a rectangular grid, interpolated bilinearly.
///
/// Derivative grids are formed once by central differences (one-sided at
/// the border).
#[derive(Debug, Clone, PartialEq)]
pub struct GridModes {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Per mode: `[w, wx, wy, wxx, wyy, wxy]`, each `ys.len() × xs.len()`.
    fields: Vec<[Matrix; 6]>,
}

/// Mode grid file: `{"x": […], "y": […], "modes": [[[φ(x_i, y_j) for i] for j] …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeGridDoc {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub modes: Vec<Vec<Vec<f64>>>,
}

impl GridModes {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModeGridDoc =
            serde_json::from_str(text).map_err(|e| ObsError::Model(format!("bad mode grid file: {e}")))?;
        Self::new(doc)
    }

    pub fn new(doc: ModeGridDoc) -> Result<Self> {
        let (nx, ny) = (doc.x.len(), doc.y.len());
        if nx < 3 || ny < 3 {
            return Err(ObsError::Model("mode grid needs at least 3 samples per axis".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&doc.x) || !increasing(&doc.y) {
            return Err(ObsError::Model("mode grid axes must be strictly increasing".into()));
        }
        if doc.modes.is_empty() {
            return Err(ObsError::Model("mode grid has no modes".into()));
        }
        let mut fields = Vec::with_capacity(doc.modes.len());
        for (k, mode) in doc.modes.iter().enumerate() {
            if mode.len() != ny || mode.iter().any(|r| r.len() != nx) {
                return Err(ObsError::Model(format!("mode {k} is not {ny}x{nx}")));
            }
            let w = Matrix::from_fn(ny, nx, |j, i| mode[j][i]);
            if w.iter().any(|v| !v.is_finite()) {
                return Err(ObsError::Model(format!("mode {k} has non-finite samples")));
            }
            let wx = diff_x(&w, &doc.x);
            let wy = diff_y(&w, &doc.y);
            let wxx = diff_x(&wx, &doc.x);
            let wyy = diff_y(&wy, &doc.y);
            let wxy = diff_y(&wx, &doc.y);
            fields.push([w, wx, wy, wxx, wyy, wxy]);
        }
        Ok(Self { xs: doc.x, ys: doc.y, fields })
    }
}

fn diff_along(values: impl Fn(usize) -> f64, coords: &[f64], i: usize) -> f64 {
    let n = coords.len();
    let (a, b) = if i == 0 {
        (0, 1)
    } else if i == n - 1 {
        (n - 2, n - 1)
    } else {
        (i - 1, i + 1)
    };
    (values(b) - values(a)) / (coords[b] - coords[a])
}

fn diff_x(m: &Matrix, xs: &[f64]) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |j, i| diff_along(|k| m[(j, k)], xs, i))
}

fn diff_y(m: &Matrix, ys: &[f64]) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |j, i| diff_along(|k| m[(k, i)], ys, j))
}

/// Cell index and fractional offset, clamped to the grid.
fn locate(coords: &[f64], v: f64) -> (usize, f64) {
    let n = coords.len();
    let i = coords.partition_point(|&c| c <= v).clamp(1, n - 1) - 1;
    let t = ((v - coords[i]) / (coords[i + 1] - coords[i])).clamp(0.0, 1.0);
    (i, t)
}

impl ModeSet for GridModes {
    fn count(&self) -> usize {
        self.fields.len()
    }

    fn sample(&self, mode: usize, x: f64, y: f64) -> ModeSample {
        let (i, tx) = locate(&self.xs, x);
        let (j, ty) = locate(&self.ys, y);
        let f = &self.fields[mode];
        let interp = |m: &Matrix| {
            (1.0 - ty) * ((1.0 - tx) * m[(j, i)] + tx * m[(j, i + 1)])
                + ty * ((1.0 - tx) * m[(j + 1, i)] + tx * m[(j + 1, i + 1)])
        };
        ModeSample {
            w: interp(&f[0]),
            wx: interp(&f[1]),
            wy: interp(&f[2]),
            wxx: interp(&f[3]),
            wyy: interp(&f[4]),
            wxy: interp(&f[5]),
        }
    }
}
