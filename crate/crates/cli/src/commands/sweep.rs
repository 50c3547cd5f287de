//! `nla-sweep`: spatial-mean `det_root` across NLA slopes and half-max points.
//!
//! The wing runs and each station's `ξ` series do not depend on `(c, d)`,
//! so they are computed once and only the encoding is repeated.

use obskit_core::empirical_gramian::{gramian_metrics, StationStimulus, WingStudy};
use obskit_core::neural_encoding::nla_derivative;
use obskit_core::numerics::pearson;
use obskit_core::placement::grid_sites;
use obskit_core::wing::StrainKind;
use rayon::prelude::*;
use serde::Serialize;

use super::{kinds_or_all, mean};
use crate::config::RunConfig;
use crate::output::{num, OutputDir};

#[derive(Debug, Serialize)]
struct PeakD {
    c: f64,
    d: f64,
}

#[derive(Debug, Serialize)]
struct KindReport {
    kind: StrainKind,
    stations: usize,
    combinations: usize,
    /// Spatiotemporal mean of the nominal `ξ`.
    mean_xi: f64,
    /// Pearson correlation of spatial-mean det_root with `NLA'(mean ξ)²`.
    correlation: Option<f64>,
    /// `d` with the largest det_root for each `c`.
    peak_d: Vec<PeakD>,
    best: PeakD,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    grid: [usize; 2],
    c_values: Vec<f64>,
    d_values: Vec<f64>,
    kinds: Vec<KindReport>,
}

pub fn run(cfg: &RunConfig, full: bool, out: &mut OutputDir) -> anyhow::Result<()> {
    let sw = &cfg.nla_sweep;
    for &c in &sw.c_values {
        if !(c > 0.0 && c.is_finite()) {
            anyhow::bail!(crate::ConfigError(format!("nla_sweep.c_values must be positive, got {c}")));
        }
    }
    if sw.d_values.iter().any(|d| !d.is_finite()) {
        anyhow::bail!(crate::ConfigError("nla_sweep.d_values must be finite".into()));
    }
    let model = cfg.wing_model()?;
    let grid = cfg.grid(full);
    let sites = grid_sites(model.planform(), grid.nx, grid.ny)?;
    let study = WingStudy::new(&model, &cfg.study_settings()?)?;
    let pairs: Vec<(f64, f64)> = sw.c_values.iter().flat_map(|&c| sw.d_values.iter().map(move |&d| (c, d))).collect();

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for kind in kinds_or_all(&sw.kinds) {
        let stimuli: Vec<StationStimulus> = sites
            .par_iter()
            .map(|p| study.xi_runs(p[0], p[1], kind, &cfg.encoder))
            .collect::<obskit_core::Result<_>>()?;
        let mean_xi = mean(&stimuli.iter().map(StationStimulus::mean_nominal).collect::<Vec<_>>());
        let det_roots: Vec<f64> = pairs
            .par_iter()
            .map(|&(c, d)| {
                let enc = cfg.encoder.with_nla(c, d);
                let roots = stimuli
                    .iter()
                    .map(|s| Ok(gramian_metrics(&s.gramian_matrix(&enc)?, cfg.gramian.rank_rtol)?.det_root))
                    .collect::<obskit_core::Result<Vec<f64>>>()?;
                Ok(mean(&roots))
            })
            .collect::<obskit_core::Result<_>>()?;
        let slopes: Vec<f64> =
            pairs.iter().map(|&(c, d)| nla_derivative(mean_xi, &cfg.encoder.with_nla(c, d)).powi(2)).collect();

        for (((c, d), r), s) in pairs.iter().zip(&det_roots).zip(&slopes) {
            rows.push(vec![kind.to_string(), num(*c), num(*d), num(*r), num(*s)]);
        }
        let nd = sw.d_values.len();
        let peak_d = sw
            .c_values
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let block = &det_roots[i * nd..(i + 1) * nd];
                PeakD { c, d: sw.d_values[super::grid::argmax(block)] }
            })
            .collect();
        let b = super::grid::argmax(&det_roots);
        reports.push(KindReport {
            kind,
            stations: sites.len(),
            combinations: pairs.len(),
            mean_xi,
            correlation: pearson(&det_roots, &slopes),
            peak_d,
            best: PeakD { c: pairs[b].0, d: pairs[b].1 },
        });
    }
    let header: Vec<String> = ["kind", "c", "d", "mean_det_root", "nla_deriv_sq"].map(String::from).to_vec();
    out.csv("nla_sweep.csv", "nla-sweep", &header, &rows)?;
    out.json(
        "nla_sweep.json",
        &SweepReport {
            grid: [grid.nx, grid.ny],
            c_values: sw.c_values.clone(),
            d_values: sw.d_values.clone(),
            kinds: reports,
        },
    )
}
