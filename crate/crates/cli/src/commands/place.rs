//! `place`: vein sites, per-site Gramians and the optimized sensor set.

use obskit_core::empirical_gramian::{GramianResult, WingStudy};
use obskit_core::placement::{cluster_count, vein_sites, OptimizerOptions, PlacementProblem};
use obskit_core::wing::{Point, StrainKind};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::station_gramians;
use super::kinds_or_all;
use crate::config::RunConfig;
use crate::output::{num, Canvas, OutputDir, Svg};

/// Random subsets drawn for the reference objective.
const BASELINE_SUBSETS: usize = 50;

#[derive(Debug, Serialize)]
struct Selected {
    index: usize,
    x: f64,
    y: f64,
    kind: StrainKind,
}

#[derive(Debug, Serialize)]
struct Baseline {
    subsets: usize,
    median_objective: f64,
}

#[derive(Debug, Serialize)]
struct PlacementReport {
    r: usize,
    w_nu: f64,
    site_count: usize,
    /// Factor that normalizes the mean site trace to one.
    gramian_scale: f64,
    beta: Vec<f64>,
    selected: Vec<Selected>,
    objective: f64,
    discrete_objective: f64,
    iterations: usize,
    clusters: usize,
    cluster_distance: f64,
    random_baseline: Baseline,
    seed: u64,
}

pub fn run(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let pc = &cfg.placement;
    let model = cfg.wing_model()?;
    let veins = cfg.veins()?;
    let points = vein_sites(&veins, pc.spacing)?;
    for p in &points {
        model.planform().check_inside(p[0], p[1])?;
    }
    let study = WingStudy::new(&model, &cfg.study_settings()?)?;

    let mut sites: Vec<(Point, StrainKind, GramianResult)> = Vec::new();
    for kind in kinds_or_all(&pc.kinds) {
        let gramians = station_gramians(&study, &points, kind, cfg)?;
        sites.extend(points.iter().zip(gramians).map(|(p, g)| (*p, kind, g)));
    }
    let problem = PlacementProblem::new(sites.iter().map(|s| s.2.w.clone()).collect(), pc.r, pc.w_nu)?;
    let options = OptimizerOptions { restarts: pc.restarts, iterations: pc.iterations, step: pc.step, seed: cfg.seed };
    let result = problem.optimize(&options)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut baseline = (0..BASELINE_SUBSETS)
        .map(|_| {
            let mut idx = sample(&mut rng, problem.site_count(), problem.r()).into_vec();
            idx.sort_unstable();
            problem.subset_objective(&idx)
        })
        .collect::<obskit_core::Result<Vec<f64>>>()?;
    baseline.sort_by(f64::total_cmp);

    let chosen: Vec<Point> = result.selected.iter().map(|&i| sites[i].0).collect();
    let report = PlacementReport {
        r: pc.r,
        w_nu: pc.w_nu,
        site_count: sites.len(),
        gramian_scale: problem.scale(),
        beta: result.beta.clone(),
        selected: result
            .selected
            .iter()
            .map(|&i| Selected { index: i, x: sites[i].0[0], y: sites[i].0[1], kind: sites[i].1 })
            .collect(),
        objective: result.objective,
        discrete_objective: result.discrete_objective,
        iterations: result.iterations,
        clusters: cluster_count(&chosen, pc.cluster_distance),
        cluster_distance: pc.cluster_distance,
        random_baseline: Baseline { subsets: BASELINE_SUBSETS, median_objective: median(&baseline) },
        seed: cfg.seed,
    };
    out.json("placement.json", &report)?;

    let header: Vec<String> =
        ["index", "x", "y", "kind", "lambda_min", "kappa", "beta", "selected"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = sites
        .iter()
        .enumerate()
        .map(|(i, (p, kind, g))| {
            vec![
                i.to_string(),
                num(p[0]),
                num(p[1]),
                kind.to_string(),
                num(g.lambda_min()),
                num(g.kappa),
                num(result.beta[i]),
                u8::from(result.selected.binary_search(&i).is_ok()).to_string(),
            ]
        })
        .collect();
    out.csv("placement_sites.csv", "place", &header, &rows)?;

    let mut svg = Svg::new(Canvas::fit(model.planform(), 600.0));
    svg.outline(model.planform(), "#f5f0e6");
    for v in &veins {
        svg.polyline(v, "#8c6d46");
    }
    for p in &points {
        svg.dot(*p, 1.5, "#bbbbbb", "none");
    }
    for s in &report.selected {
        let fill = match s.kind {
            StrainKind::Bending => "#d62728",
            StrainKind::Shear => "#1f77b4",
        };
        svg.dot([s.x, s.y], 4.0, fill, "#000000");
    }
    svg.label(&format!(
        "r = {}, w_nu = {}: objective {:.4} (red bending, blue shear)",
        pc.r, pc.w_nu, result.discrete_objective
    ));
    out.text("placement.svg", &svg.finish())
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}
