//! `lie-check`: determinants and ranks of `dG_h` and `dG_{g∘h}`.
//!
//! Each state is checked twice. The direct route differentiates `g∘h`
//! along the flow; the expansion route assembles `dG_{g∘h}` from the Lie
//! values and gradients of `h` through the multiset chain rule.
//!
//! The wing system is the control-free modal drift with `y = tanh(ε̂)`,
//! `ε̂` the strain at the probe divided by its largest value over the
//! nominal beat. It is checked in scaled coordinates `z = x / s` with `s`
//! the per-state maximum over that beat and time in units of the inverse
//! highest modal frequency; states are given and reported unscaled.

use std::sync::Arc;

use obskit_core::lie_composite::{
    observability_matrices, observability_matrices_expanded, LieDifferentiator, ObservabilityMatrices, OuterFunction,
    ScalarMap, SmoothSystem, VectorField,
};
use obskit_core::numerics::Vector;
use obskit_core::wing::{periodic_initial_state, simulate_wing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LieSystem, RunConfig};
use crate::output::OutputDir;
use crate::ConfigError;

#[derive(Debug, Serialize)]
struct Check {
    det_h: f64,
    det_goh: f64,
    rank_h: usize,
    rank_goh: usize,
    /// `g'^n det dG_h`.
    predicted_det_goh: f64,
    residual: f64,
    relative_residual: f64,
    ratio_check: bool,
}

impl Check {
    fn new(m: &ObservabilityMatrices, n: usize) -> Self {
        let predicted = m.g_prime.powi(n as i32) * m.det_h;
        Self {
            det_h: m.det_h,
            det_goh: m.det_goh,
            rank_h: m.rank_h,
            rank_goh: m.rank_goh,
            predicted_det_goh: predicted,
            residual: m.residual,
            relative_residual: m.residual / predicted.abs().max(f64::MIN_POSITIVE),
            ratio_check: m.ratio_check,
        }
    }
}

#[derive(Debug, Serialize)]
struct StateReport {
    state: Vec<f64>,
    h: f64,
    g_prime: f64,
    direct: Check,
    expansion: Check,
}

#[derive(Debug, Serialize)]
struct Scaling {
    state_scale: Vec<f64>,
    time_scale: f64,
    output_scale: f64,
}

#[derive(Debug, Serialize)]
struct LieReport {
    system: LieSystem,
    outer: &'static str,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<Scaling>,
    states: Vec<StateReport>,
    direct_passed: usize,
    expansion_passed: usize,
}

/// A system in the coordinates used for differentiation, with the map from
/// physical states into them.
struct Prepared {
    sys: SmoothSystem,
    scale: Vec<f64>,
    scaling: Option<Scaling>,
    random: Vec<Vec<f64>>,
}

pub fn run(
    cfg: &RunConfig,
    system: Option<LieSystem>,
    state: Option<&[f64]>,
    out: &mut OutputDir,
) -> anyhow::Result<()> {
    let lc = &cfg.lie_check;
    let system = system.unwrap_or(lc.system);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prepared = match system {
        LieSystem::DoubleIntegratorTanh => {
            let random =
                (0..lc.random_states).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
            Prepared { sys: SmoothSystem::saturated_double_integrator(), scale: vec![1.0; 2], scaling: None, random }
        }
        LieSystem::WingAutonomous => wing_system(cfg, &mut rng)?,
    };
    let n = prepared.sys.dim;
    let states: Vec<Vec<f64>> = match state {
        Some(s) => vec![s.to_vec()],
        None if !lc.states.is_empty() => lc.states.clone(),
        None => prepared.random.clone(),
    };
    for s in &states {
        if s.len() != n {
            anyhow::bail!(ConfigError(format!("state has length {}, expected {n}", s.len())));
        }
        if s.iter().any(|v| !v.is_finite()) {
            anyhow::bail!(ConfigError("state entries must be finite".into()));
        }
    }
    let engine = LieDifferentiator { fd_step: lc.fd_step, ..LieDifferentiator::default() };
    let reports = states
        .par_iter()
        .map(|s| {
            let z = Vector::from_iterator(n, s.iter().zip(&prepared.scale).map(|(v, k)| v / k));
            let direct = observability_matrices(&prepared.sys, &z, &engine, lc.rank_rtol)?;
            let expanded = observability_matrices_expanded(&prepared.sys, &z, &engine, lc.rank_rtol)?;
            Ok(StateReport {
                state: s.clone(),
                h: (prepared.sys.h)(&z),
                g_prime: direct.g_prime,
                direct: Check::new(&direct, n),
                expansion: Check::new(&expanded, n),
            })
        })
        .collect::<obskit_core::Result<Vec<_>>>()?;
    let report = LieReport {
        system,
        outer: "tanh",
        dim: n,
        scaling: prepared.scaling,
        direct_passed: reports.iter().filter(|r| r.direct.ratio_check).count(),
        expansion_passed: reports.iter().filter(|r| r.expansion.ratio_check).count(),
        states: reports,
    };
    out.json("lie_check.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn wing_system(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> anyhow::Result<Prepared> {
    let lc = &cfg.lie_check;
    let model = cfg.wing_model()?;
    let stroke = cfg.kinematics.stroke();
    let k = model.strain_coefficients(lc.probe[0], lc.probe[1], lc.kind)?;
    let steps = cfg.steps_per_beat;
    let step = stroke.t_beat / steps as f64;
    let x0 = periodic_initial_state(&model, &stroke, 0.0, step)?;
    let states = simulate_wing(&model, &stroke, &x0, 0.0, stroke.t_beat, step)?.trajectory.states;

    let n = model.state_dim();
    let nm = model.mode_count();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let m = states.iter().map(|x| x[i].abs()).fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    let strain = |x: &Vector| (0..nm).map(|i| k[i] * x[i]).sum::<f64>();
    let output_scale = states.iter().map(|x| strain(x).abs()).fold(0.0, f64::max);
    if !(output_scale > 0.0) {
        anyhow::bail!(ConfigError("strain at the probe vanishes over the nominal beat".into()));
    }
    let omega_max = model.omega_sq().iter().copied().fold(0.0, f64::max).sqrt();
    let time_scale = 1.0 / omega_max;

    let s = Vector::from_vec(scale.clone());
    let drift = model.autonomous_field(time_scale);
    let s_f = s.clone();
    let f: VectorField = Arc::new(move |z: &Vector| drift(&z.component_mul(&s_f)).component_div(&s_f));
    let weights: Vec<f64> = (0..nm).map(|i| k[i] * scale[i] / output_scale).collect();
    let h: ScalarMap = Arc::new(move |z: &Vector| weights.iter().zip(z.iter()).map(|(w, v)| w * v).sum());

    // Stroke reversals (samples 0 and steps/2) have P = R = 0, where the
    // modal coupling drops out; draw states strictly between them.
    let half = steps / 2;
    let random = (0..lc.random_states)
        .map(|_| {
            let mut i = rng.gen_range(1..steps);
            if i == half {
                i += 1;
            }
            states[i].iter().copied().collect()
        })
        .collect();
    Ok(Prepared {
        sys: SmoothSystem::new(f, h, OuterFunction::Tanh, n),
        scale,
        scaling: Some(Scaling { state_scale: s.iter().copied().collect(), time_scale, output_scale }),
        random,
    })
}
