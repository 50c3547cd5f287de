//! Stroke kinematics and the map from Euler-angle rates to plate-frame
//! body rates.
//!
//! The plate orientation is `R = R_z(ψ) R_x(θ) R_y(α)`: stroke position
//! about the stroke-plane normal, then elevation, then feathering about the
//! span axis.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ObsError, Result};

/// Nominal flapping cycle parameters (angles in radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeParams {
    pub a_psi: f64,
    pub a_alpha: f64,
    pub t_beat: f64,
}

impl Default for StrokeParams {
    fn default() -> Self {
        Self { a_psi: 45f64.to_radians(), a_alpha: 60f64.to_radians(), t_beat: 0.040 }
    }
}

impl StrokeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_beat > 0.0 && self.t_beat.is_finite()) {
            return Err(ObsError::Argument(format!("beat period must be positive, got {}", self.t_beat)));
        }
        if !self.a_psi.is_finite() || !self.a_alpha.is_finite() {
            return Err(ObsError::Argument("stroke amplitudes must be finite".into()));
        }
        Ok(())
    }

    /// Same period, both amplitudes zero.
    pub fn motionless(t_beat: f64) -> Self {
        Self { a_psi: 0.0, a_alpha: 0.0, t_beat }
    }
}

/// `(ψ, θ, α)` with first and second time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub angles: [f64; 3],
    pub rates: [f64; 3],
    pub accels: [f64; 3],
}

/// Plate-frame angular velocity `(P, Q, R)` and its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyRates {
    pub rates: [f64; 3],
    pub accels: [f64; 3],
}

/// `θ = 0`, `ψ = −A_ψ cos(2πt/T)`, `α = π/2 − A_α tanh((π/2) sin(2πt/T))`.
pub fn stroke_kinematics(t: f64, params: &StrokeParams) -> EulerAngles {
    let w = 2.0 * PI / params.t_beat;
    let (sin, cos) = (w * t).sin_cos();

    let psi = -params.a_psi * cos;
    let psi_d = params.a_psi * w * sin;
    let psi_dd = params.a_psi * w * w * cos;

    let s = FRAC_PI_2 * sin;
    let s_d = FRAC_PI_2 * w * cos;
    let s_dd = -FRAC_PI_2 * w * w * sin;
    let th = s.tanh();
    let sech2 = 1.0 - th * th;
    let alpha = FRAC_PI_2 - params.a_alpha * th;
    let alpha_d = -params.a_alpha * sech2 * s_d;
    let alpha_dd = -params.a_alpha * (sech2 * s_dd - 2.0 * th * sech2 * s_d * s_d);

    EulerAngles { angles: [psi, 0.0, alpha], rates: [psi_d, 0.0, alpha_d], accels: [psi_dd, 0.0, alpha_dd] }
}

/// Angular velocity of `R_z(ψ) R_x(θ) R_y(α)` in the rotated (plate) frame.
pub fn body_rates_from_euler(e: &EulerAngles) -> BodyRates {
    let [_, theta, alpha] = e.angles;
    let [psi_d, theta_d, alpha_d] = e.rates;
    let [psi_dd, theta_dd, alpha_dd] = e.accels;
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = alpha.sin_cos();

    let p = theta_d * ca - psi_d * ct * sa;
    let q = psi_d * st + alpha_d;
    let r = theta_d * sa + psi_d * ct * ca;

    let p_d = theta_dd * ca - theta_d * sa * alpha_d - psi_dd * ct * sa + psi_d * st * theta_d * sa
        - psi_d * ct * ca * alpha_d;
    let q_d = psi_dd * st + psi_d * ct * theta_d + alpha_dd;
    let r_d = theta_dd * sa + theta_d * ca * alpha_d + psi_dd * ct * ca
        - psi_d * st * theta_d * ca
        - psi_d * ct * sa * alpha_d;

    BodyRates { rates: [p, q, r], accels: [p_d, q_d, r_d] }
}

/// Plate-to-stroke-frame rotation `R_z(ψ) R_x(θ) R_y(α)`.
pub fn plate_orientation(angles: [f64; 3]) -> Matrix3<f64> {
    let [psi, theta, alpha] = angles;
    *(Rotation3::from_axis_angle(&Vector3::z_axis(), psi)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), theta)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), alpha))
    .matrix()
}

/// Body rates along the nominal stroke at time `t`.
pub fn nominal_body_rates(t: f64, params: &StrokeParams) -> BodyRates {
    body_rates_from_euler(&stroke_kinematics(t, params))
}
