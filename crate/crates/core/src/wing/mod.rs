//! Flexible flapping-wing model: modal plate dynamics in the rotating
//! plate frame, the nominal stroke, and surface strain at planform points.
//!
//! State `x = [η, η̇, P, Q, R]` (length `2 n_m + 3`), input
//! `u = [Ṗ, Q̇, Ṙ]`:
//!
//! ```text
//! η̈ = −(Ω − (P² + Q²) I) η + (2 M₁ x_r + M₃) P R − M₂ Q R − M₂ Ṗ − (M₁ x_r + M₃) Q̇
//! ```

pub mod kinematics;
pub mod modes;
pub mod planform;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ObsError, Result};
use crate::lie_composite::VectorField;
use crate::linear_delay::rows_to_matrix;
use crate::numerics::{integrate_rk4, Matrix, Trajectory, Vector};

pub use kinematics::{
    body_rates_from_euler, nominal_body_rates, plate_orientation, stroke_kinematics, BodyRates, EulerAngles,
    StrokeParams,
};
pub use modes::{
    applied_mass_matrix, assumed_modes, default_trial_shapes, GridModes, ModeSample, ModeSet, PlanformQuadrature,
    PlateProps,
};
pub use planform::{hawkmoth_veins, parse_veins, Planform, Point, Vein};

/// Which surface strain component a sensor reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrainKind {
    /// `ε_yy`, spanwise bending.
    Bending,
    /// `ε_xy`.
    Shear,
}

impl StrainKind {
    pub const ALL: [StrainKind; 2] = [StrainKind::Bending, StrainKind::Shear];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bending => "bending",
            Self::Shear => "shear",
        }
    }
}

impl fmt::Display for StrainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrainKind {
    type Err = ObsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bending" => Ok(Self::Bending),
            "shear" => Ok(Self::Shear),
            other => Err(ObsError::Argument(format!("unknown strain kind {other:?}"))),
        }
    }
}

/// Model description as stored on disk. Missing `Omega_diag` / `Ma` are
/// computed from the mode shapes by quadrature over the planform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WingModelDoc {
    #[serde(default = "default_n_m")]
    pub n_m: usize,
    /// `ω_i²` in rad²/s².
    #[serde(rename = "Omega_diag", default, skip_serializing_if = "Option::is_none")]
    pub omega_diag: Option<Vec<f64>>,
    #[serde(rename = "Ma", default, skip_serializing_if = "Option::is_none")]
    pub ma: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_x_r")]
    pub x_r: f64,
    #[serde(default = "default_thickness")]
    pub thickness: f64,
    /// Outline in metres; the built-in forewing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planform: Option<Vec<Point>>,
    /// `"builtin:n1"`, `"builtin:n2"`, `"builtin:n3"` or `"file:<path>"`.
    #[serde(default = "default_modes")]
    pub modes: String,
    #[serde(default)]
    pub plate: PlateProps,
    /// Quadrature cells across the bounding box `(chordwise, spanwise)`.
    #[serde(default = "default_quadrature")]
    pub quadrature: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn default_n_m() -> usize {
    3
}

fn default_x_r() -> f64 {
    0.003
}

fn default_thickness() -> f64 {
    50e-6
}

fn default_modes() -> String {
    "builtin:n3".into()
}

fn default_quadrature() -> [usize; 2] {
    [48, 160]
}

impl Default for WingModelDoc {
    fn default() -> Self {
        Self {
            n_m: default_n_m(),
            omega_diag: None,
            ma: None,
            x_r: default_x_r(),
            thickness: default_thickness(),
            planform: None,
            modes: default_modes(),
            plate: PlateProps::default(),
            quadrature: default_quadrature(),
            note: None,
        }
    }
}

/// Assembled wing model. Immutable once built.
#[derive(Clone)]
pub struct WingModel {
    n_m: usize,
    omega_sq: Vec<f64>,
    ma: Matrix,
    x_r: f64,
    thickness: f64,
    planform: Planform,
    modes: Arc<dyn ModeSet>,
}

impl fmt::Debug for WingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WingModel")
            .field("n_m", &self.n_m)
            .field("omega_sq", &self.omega_sq)
            .field("ma", &self.ma)
            .field("x_r", &self.x_r)
            .field("thickness", &self.thickness)
            .finish_non_exhaustive()
    }
}

impl WingModel {
    pub fn new(
        omega_sq: Vec<f64>,
        ma: Matrix,
        x_r: f64,
        thickness: f64,
        planform: Planform,
        modes: Arc<dyn ModeSet>,
    ) -> Result<Self> {
        let n_m = modes.count();
        if omega_sq.len() != n_m {
            return Err(ObsError::Model(format!("{} modal frequencies for {n_m} modes", omega_sq.len())));
        }
        if omega_sq.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(ObsError::Model("modal frequencies must be finite and nonnegative".into()));
        }
        if ma.nrows() != n_m || ma.ncols() != 3 {
            return Err(ObsError::Model(format!("Ma is {}x{}, expected {n_m}x3", ma.nrows(), ma.ncols())));
        }
        if ma.iter().any(|v| !v.is_finite()) || !x_r.is_finite() {
            return Err(ObsError::Model("Ma and x_r must be finite".into()));
        }
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(ObsError::Model(format!("thickness must be positive, got {thickness}")));
        }
        Ok(Self { n_m, omega_sq, ma, x_r, thickness, planform, modes })
    }

    /// The built-in forewing with three assumed modes.
    pub fn hawkmoth() -> Self {
        Self::from_doc(&WingModelDoc::default(), Path::new(".")).expect("built-in model is valid")
    }

    /// `base_dir` resolves relative `file:` mode paths.
    pub fn from_doc(doc: &WingModelDoc, base_dir: &Path) -> Result<Self> {
        let planform = match &doc.planform {
            Some(v) => Planform::new(v.clone())?,
            None => Planform::hawkmoth(),
        };
        let [qx, qy] = doc.quadrature;
        if qx < 2 || qy < 2 {
            return Err(ObsError::Model("quadrature needs at least 2 cells per axis".into()));
        }
        let quad = PlanformQuadrature::new(&planform, qx, qy)?;

        let (modes, computed_omega): (Arc<dyn ModeSet>, Option<Vec<f64>>) =
            if let Some(n) = doc.modes.strip_prefix("builtin:n") {
                let n: usize = n.parse().map_err(|_| ObsError::Model(format!("bad mode list {:?}", doc.modes)))?;
                let (m, w) = assumed_modes(&planform, &default_trial_shapes(n)?, &doc.plate, &quad)?;
                (Arc::new(m), Some(w))
            } else if let Some(path) = doc.modes.strip_prefix("file:") {
                let path = base_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ObsError::Model(format!("cannot read mode grid {}: {e}", path.display())))?;
                (Arc::new(GridModes::from_json(&text)?), None)
            } else {
                return Err(ObsError::Model(format!("bad mode list {:?}", doc.modes)));
            };
        if modes.count() != doc.n_m {
            return Err(ObsError::Model(format!("n_m = {} but the mode set provides {}", doc.n_m, modes.count())));
        }
        let omega_sq = match (&doc.omega_diag, computed_omega) {
            (Some(w), _) => w.clone(),
            (None, Some(w)) => w,
            (None, None) => return Err(ObsError::Model("Omega_diag is required for file modes".into())),
        };
        let ma = match &doc.ma {
            Some(rows) => rows_to_matrix(rows, "Ma")?,
            None => applied_mass_matrix(modes.as_ref(), &quad, doc.plate.areal_density),
        };
        Self::new(omega_sq, ma, doc.x_r, doc.thickness, planform, modes)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let doc: WingModelDoc =
            serde_json::from_str(text).map_err(|e| ObsError::Model(format!("bad model JSON: {e}")))?;
        Self::from_doc(&doc, base_dir)
    }

    pub fn mode_count(&self) -> usize {
        self.n_m
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n_m + 3
    }

    /// Index of `P` in the state; `Q` and `R` follow.
    pub fn rate_offset(&self) -> usize {
        2 * self.n_m
    }

    pub fn omega_sq(&self) -> &[f64] {
        &self.omega_sq
    }

    pub fn ma(&self) -> &Matrix {
        &self.ma
    }

    pub fn x_r(&self) -> f64 {
        self.x_r
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn planform(&self) -> &Planform {
        &self.planform
    }

    pub fn modes(&self) -> &dyn ModeSet {
        self.modes.as_ref()
    }

    /// Copy with replaced `Ω` and `M_a`.
    pub fn with_modal_data(&self, omega_sq: Vec<f64>, ma: Matrix) -> Result<Self> {
        Self::new(omega_sq, ma, self.x_r, self.thickness, self.planform.clone(), Arc::clone(&self.modes))
    }

    /// `ẋ` for state `x` and input `u = [Ṗ, Q̇, Ṙ]`.
    pub fn rhs(&self, x: &Vector, u: &[f64; 3]) -> Vector {
        let n = self.n_m;
        let o = self.rate_offset();
        let (p, q, r) = (x[o], x[o + 1], x[o + 2]);
        let soft = p * p + q * q;
        let mut dx = Vector::zeros(self.state_dim());
        for i in 0..n {
            let (m1, m2, m3) = (self.ma[(i, 0)], self.ma[(i, 1)], self.ma[(i, 2)]);
            dx[i] = x[n + i];
            dx[n + i] = -(self.omega_sq[i] - soft) * x[i] + (2.0 * m1 * self.x_r + m3) * p * r
                - m2 * q * r
                - m2 * u[0]
                - (m1 * self.x_r + m3) * u[1];
        }
        dx[o] = u[0];
        dx[o + 1] = u[1];
        dx[o + 2] = u[2];
        dx
    }

    /// Control-free drift scaled by `1/time_scale`.
    pub fn autonomous_field(&self, time_scale: f64) -> VectorField {
        let model = self.clone();
        Arc::new(move |x: &Vector| model.rhs(x, &[0.0; 3]) * time_scale)
    }

    /// `w = Σ φ_i η_i`.
    pub fn deformation(&self, x: f64, y: f64, eta: &[f64]) -> Result<f64> {
        self.planform.check_inside(x, y)?;
        self.check_eta(eta)?;
        Ok((0..self.n_m).map(|i| self.modes.sample(i, x, y).w * eta[i]).sum())
    }

    /// Coefficients `k_i` with `ε = Σ k_i η_i` at the top fibre.
    pub fn strain_coefficients(&self, x: f64, y: f64, kind: StrainKind) -> Result<Vec<f64>> {
        self.planform.check_inside(x, y)?;
        let half = -self.thickness / 2.0;
        Ok((0..self.n_m)
            .map(|i| {
                let s = self.modes.sample(i, x, y);
                half * match kind {
                    StrainKind::Bending => s.wyy,
                    StrainKind::Shear => s.wxy,
                }
            })
            .collect())
    }

    pub fn surface_strain(&self, x: f64, y: f64, eta: &[f64], kind: StrainKind) -> Result<f64> {
        self.check_eta(eta)?;
        let k = self.strain_coefficients(x, y, kind)?;
        Ok(k.iter().zip(eta).map(|(a, b)| a * b).sum())
    }

    fn check_eta(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.n_m {
            return Err(ObsError::Dimension(format!("{} modal coordinates for {} modes", eta.len(), self.n_m)));
        }
        Ok(())
    }
}

/// Simulated states with the stroke angles at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WingTrajectory {
    pub trajectory: Trajectory,
    pub kinematics: Vec<EulerAngles>,
}

/// RK4 integration of the wing dynamics driven by the nominal stroke.
pub fn simulate_wing(
    model: &WingModel,
    params: &StrokeParams,
    x0: &Vector,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<WingTrajectory> {
    params.validate()?;
    if x0.len() != model.state_dim() {
        return Err(ObsError::Dimension(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            model.state_dim()
        )));
    }
    let rhs = |t: f64, x: &Vector| model.rhs(x, &nominal_body_rates(t, params).accels);
    let trajectory = integrate_rk4(rhs, x0, t0, t1, step)?;
    let kinematics = trajectory.times.iter().map(|&t| stroke_kinematics(t, params)).collect();
    Ok(WingTrajectory { trajectory, kinematics })
}

/// State at `t0` on the periodic orbit of the nominal stroke.
///
/// The body rates are set to their kinematic values; `(η, η̇)` solves
/// `(I − Φ) z = z_f` with `Φ` the one-beat monodromy of the modal
/// equations and `z_f` the forced response from rest.
pub fn periodic_initial_state(model: &WingModel, params: &StrokeParams, t0: f64, step: f64) -> Result<Vector> {
    params.validate()?;
    let n = model.mode_count();
    let o = model.rate_offset();
    let mut base = Vector::zeros(model.state_dim());
    base.rows_mut(o, 3).copy_from_slice(&nominal_body_rates(t0, params).rates);
    let t1 = t0 + params.t_beat;

    // The modal equations are affine in (η, η̇); the rates evolve on their own.
    let end_state = |z0: &Vector, forced: bool| -> Result<Vector> {
        let mut x = base.clone();
        x.rows_mut(0, 2 * n).copy_from(z0);
        let rhs = |t: f64, x: &Vector| {
            let b = nominal_body_rates(t, params);
            let mut dx = model.rhs(x, &b.accels);
            if !forced {
                let zero_eta = {
                    let mut y = x.clone();
                    y.rows_mut(0, 2 * n).fill(0.0);
                    model.rhs(&y, &b.accels)
                };
                dx -= zero_eta;
                dx.rows_mut(o, 3).copy_from_slice(&b.accels);
            }
            dx
        };
        Ok(integrate_rk4(rhs, &x, t0, t1, step)?.last().rows(0, 2 * n).into_owned())
    };

    let forced = end_state(&Vector::zeros(2 * n), true)?;
    let mut phi = Matrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let mut e = Vector::zeros(2 * n);
        e[j] = 1.0;
        phi.set_column(j, &end_state(&e, false)?);
    }
    let lhs = Matrix::identity(2 * n, 2 * n) - phi;
    let z0 = lhs
        .lu()
        .solve(&forced)
        .ok_or_else(|| ObsError::Model("stroke resonates with a structural mode; no periodic orbit".into()))?;
    base.rows_mut(0, 2 * n).copy_from(&z0);
    Ok(base)
}
