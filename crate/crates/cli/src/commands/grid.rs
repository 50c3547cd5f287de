//! `gramian-grid`: per-station Gramian metrics and `λ_min` heatmaps.

use obskit_core::empirical_gramian::{GramianResult, PerturbBasis, WingStudy};
use obskit_core::placement::grid_sites;
use obskit_core::wing::{Planform, Point, StrainKind};
use rayon::prelude::*;
use serde::Serialize;

use super::{kinds_or_all, mean};
use crate::config::RunConfig;
use crate::output::{color, num, Canvas, OutputDir, Svg};

#[derive(Debug, Serialize)]
struct KindSummary {
    kind: StrainKind,
    stations: usize,
    /// Spatial mean of the ascending eigenvalues.
    mean_eigenvalues: Vec<f64>,
    /// Spatial mean of the Gramian diagonal, one entry per perturbation direction.
    mean_diagonal: Vec<f64>,
    /// Direction labels ordered by decreasing mean diagonal.
    diagonal_order: Vec<String>,
    mean_kappa: f64,
    mean_nu: f64,
    mean_det_root: f64,
    lambda_min_argmax: Point,
    /// `(y − y_root) / span` at the argmax.
    lambda_min_argmax_span_fraction: f64,
}

#[derive(Debug, Serialize)]
struct GridSummary {
    grid: [usize; 2],
    basis: PerturbBasis,
    epsilon: f64,
    directions: Vec<String>,
    kinds: Vec<KindSummary>,
}

pub fn direction_labels(basis: &PerturbBasis) -> Vec<String> {
    match basis {
        PerturbBasis::PlateRates => ["P", "Q", "R"].map(String::from).to_vec(),
        PerturbBasis::StrokeAxes => ["x", "y", "z"].map(String::from).to_vec(),
        PerturbBasis::Indices(idx) => idx.iter().map(|i| format!("s{i}")).collect(),
    }
}

/// Gramians at every site, in site order.
pub fn station_gramians(
    study: &WingStudy,
    sites: &[Point],
    kind: StrainKind,
    cfg: &RunConfig,
) -> obskit_core::Result<Vec<GramianResult>> {
    sites.par_iter().map(|p| study.station_gramian(p[0], p[1], kind, &cfg.encoder, cfg.gramian.rank_rtol)).collect()
}

pub fn run(cfg: &RunConfig, full: bool, kind: Option<StrainKind>, out: &mut OutputDir) -> anyhow::Result<()> {
    let model = cfg.wing_model()?;
    let grid = cfg.grid(full);
    let sites = grid_sites(model.planform(), grid.nx, grid.ny)?;
    let settings = cfg.study_settings()?;
    let study = WingStudy::new(&model, &settings)?;
    let labels = direction_labels(&settings.basis);
    let kinds = match kind {
        Some(k) => vec![k],
        None => kinds_or_all(&StrainKind::ALL),
    };
    let (lo, hi) = model.planform().bounding_box();
    let cell = [(hi[0] - lo[0]) / grid.nx as f64, (hi[1] - lo[1]) / grid.ny as f64];

    let mut summaries = Vec::new();
    for kind in kinds {
        let results = station_gramians(&study, &sites, kind, cfg)?;
        let lmin: Vec<f64> = results.iter().map(GramianResult::lambda_min).collect();
        let normalized = min_max(&lmin);
        let dim = study.directions().len();

        let mut header: Vec<String> = vec!["x".into(), "y".into()];
        header.extend((1..=dim).map(|i| format!("lambda{i}")));
        header.extend(labels.iter().map(|l| format!("w_{l}")));
        header.extend(["nu", "kappa", "det_root", "trace", "rank", "lambda_min_normalized"].map(String::from));
        let rows: Vec<Vec<String>> = sites
            .iter()
            .zip(&results)
            .zip(&normalized)
            .map(|((p, g), t)| {
                let mut row = vec![num(p[0]), num(p[1])];
                row.extend(g.eigenvalues.iter().map(|&v| num(v)));
                row.extend((0..dim).map(|i| num(g.w[(i, i)])));
                row.extend([num(g.nu), num(g.kappa), num(g.det_root), num(g.trace), g.rank.to_string(), num(*t)]);
                row
            })
            .collect();
        out.csv(&format!("grid_{kind}.csv"), "gramian-grid", &header, &rows)?;
        out.text(
            &format!("grid_{kind}.svg"),
            &heatmap(model.planform(), &sites, cell, &normalized, &format!("{kind}: normalized lambda_min")),
        )?;

        let per_axis = |f: &dyn Fn(&GramianResult, usize) -> f64| -> Vec<f64> {
            (0..dim).map(|i| mean(&results.iter().map(|g| f(g, i)).collect::<Vec<_>>())).collect()
        };
        let mean_diagonal = per_axis(&|g, i| g.w[(i, i)]);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| mean_diagonal[b].total_cmp(&mean_diagonal[a]).then(a.cmp(&b)));
        let best = argmax(&lmin);
        let span = hi[1] - lo[1];
        summaries.push(KindSummary {
            kind,
            stations: sites.len(),
            mean_eigenvalues: per_axis(&|g, i| g.eigenvalues[i]),
            mean_diagonal,
            diagonal_order: order.iter().map(|&i| labels[i].clone()).collect(),
            mean_kappa: mean(&results.iter().map(|g| g.kappa).collect::<Vec<_>>()),
            mean_nu: mean(&results.iter().map(|g| g.nu).collect::<Vec<_>>()),
            mean_det_root: mean(&results.iter().map(|g| g.det_root).collect::<Vec<_>>()),
            lambda_min_argmax: sites[best],
            lambda_min_argmax_span_fraction: (sites[best][1] - lo[1]) / span,
        });
    }
    out.json(
        "grid_summary.json",
        &GridSummary {
            grid: [grid.nx, grid.ny],
            basis: settings.basis.clone(),
            epsilon: settings.epsilon,
            directions: labels,
            kinds: summaries,
        },
    )
}

/// Index of the largest value, first on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.total_cmp(&v[best]).is_gt() {
            best = i;
        }
    }
    best
}

/// Min-max scaling to `[0, 1]`; constant input maps to 0.5.
pub fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        v.iter().map(|x| (x - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; v.len()]
    }
}

fn heatmap(planform: &Planform, sites: &[Point], cell: [f64; 2], values: &[f64], title: &str) -> String {
    let mut svg = Svg::new(Canvas::fit(planform, 600.0));
    svg.clip("wing", planform);
    svg.outline(planform, "#f2f2f2");
    for (p, t) in sites.iter().zip(values) {
        svg.cell(*p, cell[0], cell[1], &color(*t), Some("wing"));
    }
    svg.outline(planform, "none");
    svg.colorbar();
    svg.label(title);
    svg.finish()
}
