//! Linear–nonlinear encoding of a strain history into a firing probability:
//! a decaying-cosine STA filter over a finite window, followed by a
//! logistic activation.

use serde::{Deserialize, Serialize};

use crate::error::{ObsError, Result};
use crate::numerics::trapezoid_weights;

/// STA and NLA parameters (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderParams {
    /// STA delay, s.
    pub a: f64,
    /// STA width, s.
    pub b: f64,
    /// STA angular frequency, rad/s.
    pub omega_sta: f64,
    /// Filter window, s.
    #[serde(rename = "N")]
    pub window: f64,
    #[serde(rename = "C_xi")]
    pub c_xi: f64,
    /// NLA slope.
    pub c: f64,
    /// NLA half-max.
    pub d: f64,
}

impl Default for EncoderParams {
    fn default() -> Self {
        Self { a: 0.005, b: 0.004, omega_sta: 1000.0, window: 0.040, c_xi: 0.1174, c: 10.0, d: 0.5 }
    }
}

impl EncoderParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.omega_sta, self.window, self.c_xi, self.c, self.d];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ObsError::Argument("encoder parameters must be finite".into()));
        }
        if self.b <= 0.0 || self.window <= 0.0 || self.c_xi <= 0.0 {
            return Err(ObsError::Argument("b, N and C_xi must be positive".into()));
        }
        Ok(())
    }

    pub fn with_nla(&self, c: f64, d: f64) -> Self {
        Self { c, d, ..*self }
    }
}

/// `STA(τ) = cos(ω(a − τ)) exp(−(a − τ)²/b²)`.
pub fn sta_kernel(tau: f64, p: &EncoderParams) -> f64 {
    let s = p.a - tau;
    (p.omega_sta * s).cos() * (-(s * s) / (p.b * p.b)).exp()
}

/// `1 / (1 + exp(−c(ξ − d)))`.
pub fn nla(xi: f64, p: &EncoderParams) -> f64 {
    let u = p.c * (xi - p.d);
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `c · e^{−c(ξ−d)} / (1 + e^{−c(ξ−d)})²`, evaluated as `c s (1 − s)`.
pub fn nla_derivative(xi: f64, p: &EncoderParams) -> f64 {
    let s = nla(xi, p);
    p.c * s * (1.0 - s)
}

/// `NLA(ξ_a) − NLA(ξ_b)` without cancellation when `ξ_a ≈ ξ_b`.
pub fn nla_difference(xi_a: f64, xi_b: f64, p: &EncoderParams) -> f64 {
    if xi_a < xi_b {
        return -nla_difference(xi_b, xi_a, p);
    }
    let (ua, ub) = (p.c * (xi_a - p.d), p.c * (xi_b - p.d));
    let delta = p.c * (xi_a - xi_b);
    if ub >= 0.0 {
        // s_a s_b (e^{−u_b} − e^{−u_a})
        nla(xi_a, p) * nla(xi_b, p) * (-ub).exp() * (-(-delta).exp_m1())
    } else if ua <= 0.0 || delta <= 1.0 {
        // (1 − s_a)(1 − s_b)(e^{u_a} − e^{u_b})
        let (qa, qb) = (1.0 / (1.0 + ua.exp()), 1.0 / (1.0 + ub.exp()));
        qa * qb * ua.exp() * (-(-delta).exp_m1())
    } else {
        // Far apart on opposite sides of the half-max point.
        nla(xi_a, p) - nla(xi_b, p)
    }
}

/// Samples in one window, `N / step`, when the step divides the window.
pub fn window_samples(step: f64, p: &EncoderParams) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(ObsError::Window(format!("sample step must be positive, got {step}")));
    }
    let ratio = p.window / step;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-12 * ratio.max(1.0) {
        return Err(ObsError::Window(format!("step {step} does not divide the window {} s", p.window)));
    }
    Ok(m as usize)
}

/// Quadrature weights `w_j` with `ξ(t) = Σ_j w_j ε(t − j·step)`.
pub fn projection_weights(step: f64, p: &EncoderParams) -> Result<Vec<f64>> {
    p.validate()?;
    let m = window_samples(step, p)?;
    Ok(trapezoid_weights(m + 1, step)
        .into_iter()
        .enumerate()
        .map(|(j, w)| w * sta_kernel(j as f64 * step, p) / p.c_xi)
        .collect())
}

/// `ξ = (1/C_ξ) ∫₀ᴺ ε(t − τ) STA(τ) dτ` at the last sample of `history`.
pub fn project_stimulus(history: &[f64], step: f64, p: &EncoderParams) -> Result<f64> {
    let w = projection_weights(step, p)?;
    if history.len() < w.len() {
        return Err(ObsError::Window(format!("history has {} samples, the window needs {}", history.len(), w.len())));
    }
    let last = history.len() - 1;
    Ok(w.iter().enumerate().map(|(j, wj)| wj * history[last - j]).sum())
}

/// `ξ` for every sample that has a full window behind it; the first
/// `N/step` samples are dropped.
pub fn project_series(strain: &[f64], step: f64, p: &EncoderParams) -> Result<Vec<f64>> {
    let w = projection_weights(step, p)?;
    project_with_weights(strain, &w)
}

/// As [`project_series`] with precomputed weights.
pub fn project_with_weights(strain: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let m = w.len() - 1;
    if strain.len() <= m {
        return Err(ObsError::Window(format!("series has {} samples, the window needs {}", strain.len(), m + 1)));
    }
    Ok((m..strain.len()).map(|i| w.iter().enumerate().map(|(j, wj)| wj * strain[i - j]).sum()).collect())
}

/// `P_fire = NLA(ξ)` for every sample with a full window of history.
pub fn encode(strain: &[f64], step: f64, p: &EncoderParams) -> Result<Vec<f64>> {
    Ok(project_series(strain, step, p)?.into_iter().map(|xi| nla(xi, p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sta_examples() {
        let p = EncoderParams::default();
        assert_eq!(sta_kernel(p.a, &p), 1.0);
        for tau in [p.a + 3.0 * p.b, p.a - 3.0 * p.b] {
            assert!(sta_kernel(tau, &p).abs() <= (-9f64).exp());
        }
        let shift = std::f64::consts::PI / 1000.0;
        let expect = -(-(shift * shift) / (p.b * p.b)).exp();
        assert!((sta_kernel(p.a + shift, &p) - expect).abs() < 1e-15);
        assert!(sta_kernel(p.a + 6.0 * p.b, &p).abs() < 1e-15);
    }

    #[test]
    fn nla_examples() {
        let p = EncoderParams::default();
        assert_eq!(nla(p.d, &p), 0.5);
        let flat = p.with_nla(0.0, 0.5);
        assert_eq!(nla(-3.0, &flat), 0.5);
        assert_eq!(nla_derivative(1.7, &flat), 0.0);
        assert!(1.0 - nla(p.d + 2.2, &p) < 1e-9);
        assert!((nla_derivative(p.d, &p) - p.c / 4.0).abs() < 1e-12);
        for delta in [0.05, 0.3, 1.1] {
            assert!((nla_derivative(p.d + delta, &p) - nla_derivative(p.d - delta, &p)).abs() < 1e-14 * p.c);
        }
    }

    #[test]
    fn nla_derivative_matches_difference() {
        let p = EncoderParams::default();
        let h = 1e-5;
        for i in -20..=20 {
            let xi = 0.05 * f64::from(i);
            let fd = (nla(xi + h, &p) - nla(xi - h, &p)) / (2.0 * h);
            assert!((fd - nla_derivative(xi, &p)).abs() < 1e-8);
        }
    }

    #[test]
    fn stable_difference() {
        let p = EncoderParams::default();
        for (a, b) in [(0.3, -0.2), (0.51, 0.49), (-4.0, 2.0), (3.0, 2.5), (-80.0, -79.0)] {
            let direct = nla(a, &p) - nla(b, &p);
            assert!((nla_difference(a, b, &p) - direct).abs() <= 1e-15 + 1e-12 * direct.abs());
        }
        for xi in [-1.0, 0.0, 0.5, 0.8] {
            let h = 1e-12;
            let (a, b) = (xi + h, xi - h);
            let d = nla_difference(a, b, &p);
            let lin = (a - b) * nla_derivative(xi, &p);
            assert!((d - lin).abs() <= 1e-9 * lin.abs(), "{xi}: {d} vs {lin}");
        }
        assert_eq!(nla_difference(0.2, 0.2, &p), 0.0);
    }

    #[test]
    fn projection_examples() {
        let p = EncoderParams::default();
        let step = 1e-4;
        let zero = vec![0.0; 401];
        assert_eq!(project_stimulus(&zero, step, &p).unwrap(), 0.0);

        let eps0 = 2e-4;
        let constant = vec![eps0; 401];
        let kernel: Vec<f64> = (0..=400).map(|j| sta_kernel(f64::from(j) * step, &p)).collect();
        let integral = crate::numerics::trapezoid(&kernel, step);
        let xi = project_stimulus(&constant, step, &p).unwrap();
        assert!((xi - eps0 / p.c_xi * integral).abs() < 1e-18);

        assert!(matches!(project_stimulus(&zero[..100], step, &p), Err(ObsError::Window(_))));
        assert!(matches!(project_stimulus(&zero, 3e-4, &p), Err(ObsError::Window(_))));
    }

    #[test]
    fn projection_is_linear() {
        let p = EncoderParams::default();
        let step = 2e-4;
        let e1: Vec<f64> = (0..300).map(|i| (f64::from(i) * 0.05).sin() * 1e-4).collect();
        let e2: Vec<f64> = (0..300).map(|i| (f64::from(i) * 0.011).cos() * 3e-4).collect();
        let mix: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| 2.5 * a + b).collect();
        let (x1, x2, xm) = (
            project_series(&e1, step, &p).unwrap(),
            project_series(&e2, step, &p).unwrap(),
            project_series(&mix, step, &p).unwrap(),
        );
        assert_eq!(xm.len(), 100);
        for i in 0..xm.len() {
            assert!((xm[i] - (2.5 * x1[i] + x2[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn encode_examples() {
        let p = EncoderParams::default();
        let step = 1e-4;
        let out = encode(&vec![0.0; 500], step, &p).unwrap();
        assert_eq!(out.len(), 100);
        let rest = 1.0 / (1.0 + (p.c * p.d).exp());
        assert!(out.iter().all(|&v| (v - rest).abs() < 1e-15));

        // Unit impulse seen at lag a.
        let mut impulse = vec![0.0; 401];
        impulse[400 - 50] = 1.0;
        let xi = project_stimulus(&impulse, step, &p).unwrap();
        assert!((xi - step / p.c_xi).abs() < 1e-15);
        assert!(nla(xi, &p) > nla(0.0, &p));
    }

    #[test]
    fn encode_is_shift_equivariant() {
        let p = EncoderParams::default();
        let step = 1e-4;
        let s: Vec<f64> = (0..700).map(|i| (f64::from(i) * 0.02).sin() * 0.05).collect();
        let mut shifted = vec![0.0; 30];
        shifted.extend_from_slice(&s);
        let a = encode(&s, step, &p).unwrap();
        let b = encode(&shifted, step, &p).unwrap();
        for i in 0..a.len() {
            assert_eq!(a[i], b[i + 30]);
        }
    }

    #[test]
    fn params_json_names() {
        let p: EncoderParams =
            serde_json::from_str(r#"{"a":0.005,"b":0.004,"omega_sta":1000,"N":0.04,"C_xi":0.1174,"c":10,"d":0.5}"#)
                .unwrap();
        assert_eq!(p, EncoderParams::default());
        assert!(EncoderParams { b: 0.0, ..p }.validate().is_err());
        let partial: EncoderParams = serde_json::from_str(r#"{"c": 4}"#).unwrap();
        assert_eq!(partial, EncoderParams::default().with_nla(4.0, 0.5));
        assert!(serde_json::from_str::<EncoderParams>(r#"{"slope": 4}"#).is_err());
    }
}
