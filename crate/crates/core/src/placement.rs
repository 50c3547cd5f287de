//! Sensor placement: candidate sites on a grid or along veins, combined
//! Gramians of weighted site sets, and a relaxed `κ + w_ν·ν` minimization
//! over weights `0 ≤ β ≤ 1, Σβ = r` followed by rounding to `r` sites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::empirical_gramian::GramianResult;
use crate::error::{ObsError, Result};
use crate::numerics::{symmetric_eig, Matrix};
use crate::wing::{Planform, Point, StrainKind, Vein};

/// Cell-centred `nx × ny` stations over the planform bounding box
/// (`nx` chordwise, `ny` spanwise), keeping those inside the outline.
pub fn grid_sites(planform: &Planform, nx: usize, ny: usize) -> Result<Vec<Point>> {
    if nx < 2 || ny < 2 {
        return Err(ObsError::Argument(format!("grid needs at least 2 x 2 stations, got {nx} x {ny}")));
    }
    let (lo, hi) = planform.bounding_box();
    let mut out = Vec::new();
    for j in 0..ny {
        let y = lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / ny as f64;
        for i in 0..nx {
            let x = lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / nx as f64;
            if planform.contains(x, y) {
                out.push([x, y]);
            }
        }
    }
    if out.is_empty() {
        return Err(ObsError::Geometry("no grid station falls inside the planform".into()));
    }
    Ok(out)
}

/// Points at equal arc-length intervals along each vein, the interval being
/// the largest that fits a whole number of times and does not exceed
/// `spacing` by more than half.
///
/// Open veins include both endpoints; closed loops carry no duplicate at the
/// closure.
pub fn vein_sites(veins: &[Vein], spacing: f64) -> Result<Vec<Point>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(ObsError::Argument(format!("vein spacing must be positive, got {spacing}")));
    }
    let mut out = Vec::new();
    for (k, vein) in veins.iter().enumerate() {
        if vein.points.len() < 2 {
            return Err(ObsError::Geometry(format!("vein {k} has fewer than two points")));
        }
        let mut path = vein.points.clone();
        if vein.closed && path.first() != path.last() {
            path.push(path[0]);
        }
        let seg: Vec<f64> = path.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).collect();
        let total: f64 = seg.iter().sum();
        if !(total > 0.0) {
            return Err(ObsError::Geometry(format!("vein {k} has zero length")));
        }
        let intervals = ((total / spacing).round() as usize).max(1);
        let count = if vein.closed { intervals } else { intervals + 1 };
        let mut seg_idx = 0;
        let mut seg_start = 0.0;
        for i in 0..count {
            let s = total * i as f64 / intervals as f64;
            while seg_idx + 1 < seg.len() && s > seg_start + seg[seg_idx] {
                seg_start += seg[seg_idx];
                seg_idx += 1;
            }
            let t = if seg[seg_idx] > 0.0 { ((s - seg_start) / seg[seg_idx]).clamp(0.0, 1.0) } else { 0.0 };
            let (a, b) = (path[seg_idx], path[seg_idx + 1]);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    if out.is_empty() {
        return Err(ObsError::Geometry("no vein supplied".into()));
    }
    Ok(out)
}

/// A candidate sensor with its Gramian.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSite {
    pub position: Point,
    pub kind: StrainKind,
    pub gramian: GramianResult,
}

/// `Σ β_i W_i`.
pub fn combined_gramian(beta: &[f64], gramians: &[Matrix]) -> Result<Matrix> {
    if beta.len() != gramians.len() {
        return Err(ObsError::Dimension(format!("{} weights for {} sites", beta.len(), gramians.len())));
    }
    let dim = gramians.first().map_or(0, Matrix::nrows);
    if gramians.iter().any(|g| g.nrows() != dim || g.ncols() != dim) {
        return Err(ObsError::Dimension("site Gramians differ in shape".into()));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(ObsError::Argument("weights must be finite".into()));
    }
    let mut w = Matrix::zeros(dim, dim);
    for (b, g) in beta.iter().zip(gramians) {
        if *b != 0.0 {
            w += g * *b;
        }
    }
    Ok(w)
}

/// Euclidean projection onto `{0 ≤ β ≤ 1, Σβ = r}`: `β_i = clamp(v_i − τ)`
/// with `τ` found by bisection.
pub fn project_capped_simplex(v: &[f64], r: f64) -> Result<Vec<f64>> {
    let p = v.len();
    if !(r >= 0.0 && r <= p as f64) {
        return Err(ObsError::Argument(format!("sum {r} is outside [0, {p}]")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ObsError::Argument("cannot project non-finite weights".into()));
    }
    // The two corners of the feasible set are single points.
    if r == 0.0 || r == p as f64 {
        return Ok(vec![r / p.max(1) as f64; p]);
    }
    let sum_at = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum::<f64>();
    let mut lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut beta: Vec<f64> = v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).collect();
    // Spread the bisection residual over the free coordinates.
    let free: Vec<usize> = (0..p).filter(|&i| beta[i] > 0.0 && beta[i] < 1.0).collect();
    if !free.is_empty() {
        let shift = (r - beta.iter().sum::<f64>()) / free.len() as f64;
        for i in free {
            beta[i] = (beta[i] + shift).clamp(0.0, 1.0);
        }
    }
    Ok(beta)
}

/// Indices of the `r` largest weights; ties go to the larger site
/// `λ_min`, then to the lower index. Weights equal to within 1e-9 tie.
pub fn round_to_discrete(beta: &[f64], r: usize, site_lambda_min: &[f64]) -> Vec<usize> {
    let key = |i: usize| (beta[i] * 1e9).round();
    let lam = |i: usize| site_lambda_min.get(i).copied().unwrap_or(0.0);
    let mut order: Vec<usize> = (0..beta.len()).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(lam(b).total_cmp(&lam(a))).then(a.cmp(&b)));
    order.truncate(r.min(beta.len()));
    order.sort_unstable();
    order
}

/// `κ(W) + w_ν·ν(W)`; infinite when `W` is singular.
pub fn placement_objective(w: &Matrix, w_nu: f64) -> Result<f64> {
    let eig = symmetric_eig(w)?;
    Ok(objective_from_extremes(eig.min(), eig.max(), w_nu))
}

fn objective_from_extremes(lmin: f64, lmax: f64, w_nu: f64) -> f64 {
    if lmin <= SINGULAR_RTOL * lmax.max(0.0) || lmin <= 0.0 {
        f64::INFINITY
    } else {
        lmax / lmin + w_nu / lmin
    }
}

const SINGULAR_RTOL: f64 = 1e-12;
/// Relative eigenvalue gap below which the extremal eigenspace is treated
/// as degenerate.
const DEGENERATE_GAP: f64 = 1e-9;

/// Sites, target count and `ν` weight.
///
/// Site Gramians are rescaled so the mean site trace is one; `κ` does not
/// change and `ν` is measured against a typical site.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem {
    gramians: Vec<Matrix>,
    site_lambda_min: Vec<f64>,
    scale: f64,
    r: usize,
    w_nu: f64,
}

impl PlacementProblem {
    pub fn new(gramians: Vec<Matrix>, r: usize, w_nu: f64) -> Result<Self> {
        if gramians.is_empty() {
            return Err(ObsError::Argument("no candidate sites".into()));
        }
        if r < 1 || r > gramians.len() {
            return Err(ObsError::Argument(format!("sensor count {r} must lie in [1, {}]", gramians.len())));
        }
        if !(w_nu >= 0.0 && w_nu.is_finite()) {
            return Err(ObsError::Argument(format!("w_nu must be non-negative, got {w_nu}")));
        }
        let dim = gramians[0].nrows();
        if gramians.iter().any(|g| g.nrows() != dim || g.ncols() != dim) {
            return Err(ObsError::Dimension("site Gramians differ in shape".into()));
        }
        let mean_trace = gramians.iter().map(Matrix::trace).sum::<f64>() / gramians.len() as f64;
        if !(mean_trace > 0.0 && mean_trace.is_finite()) {
            return Err(ObsError::Argument("site Gramians carry no information".into()));
        }
        let scale = 1.0 / mean_trace;
        let gramians: Vec<Matrix> = gramians.into_iter().map(|g| g * scale).collect();
        let site_lambda_min = gramians.iter().map(|g| symmetric_eig(g).map(|e| e.min())).collect::<Result<Vec<_>>>()?;
        Ok(Self { gramians, site_lambda_min, scale, r, w_nu })
    }

    pub fn from_sites(sites: &[SensorSite], r: usize, w_nu: f64) -> Result<Self> {
        Self::new(sites.iter().map(|s| s.gramian.w.clone()).collect(), r, w_nu)
    }

    pub fn site_count(&self) -> usize {
        self.gramians.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn w_nu(&self) -> f64 {
        self.w_nu
    }

    /// Factor applied to the raw Gramians.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn normalized_gramians(&self) -> &[Matrix] {
        &self.gramians
    }

    pub fn objective(&self, beta: &[f64]) -> Result<f64> {
        placement_objective(&combined_gramian(beta, &self.gramians)?, self.w_nu)
    }

    /// Objective of a discrete site set.
    pub fn subset_objective(&self, indices: &[usize]) -> Result<f64> {
        let mut beta = vec![0.0; self.site_count()];
        for &i in indices {
            *beta.get_mut(i).ok_or_else(|| ObsError::Argument(format!("site {i} does not exist")))? = 1.0;
        }
        self.objective(&beta)
    }

    pub fn uniform_weights(&self) -> Vec<f64> {
        vec![self.r as f64 / self.site_count() as f64; self.site_count()]
    }

    /// Objective and a subgradient at `beta`.
    fn evaluate(&self, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let w = combined_gramian(beta, &self.gramians)?;
        let eig = symmetric_eig(&w)?;
        let n = eig.values.len();
        let (lmin, lmax) = (eig.min(), eig.max());
        let f = objective_from_extremes(lmin, lmax, self.w_nu);
        if !f.is_finite() {
            return Ok((f, vec![0.0; beta.len()]));
        }
        let gap = DEGENERATE_GAP * lmax;
        let low: Vec<usize> = (0..n).filter(|&k| eig.values[k] - lmin <= gap).collect();
        let high: Vec<usize> = (0..n).filter(|&k| lmax - eig.values[k] <= gap).collect();
        // Derivative of an extremal eigenvalue along W_i, averaged over a
        // degenerate eigenspace.
        let directional = |g: &Matrix, ks: &[usize]| {
            ks.iter()
                .map(|&k| {
                    let u = eig.vectors.column(k);
                    (u.transpose() * g * u)[(0, 0)]
                })
                .sum::<f64>()
                / ks.len() as f64
        };
        let grad = self
            .gramians
            .iter()
            .map(|g| {
                let dmin = directional(g, &low);
                let dmax = directional(g, &high);
                (dmax * lmin - lmax * dmin) / (lmin * lmin) - self.w_nu * dmin / (lmin * lmin)
            })
            .collect();
        Ok((f, grad))
    }

    /// Projected subgradient descent from the uniform weights and
    /// `options.restarts − 1` seeded random starts.
    pub fn optimize(&self, options: &OptimizerOptions) -> Result<PlacementResult> {
        let uniform = self.uniform_weights();
        let start_eig = symmetric_eig(&combined_gramian(&uniform, &self.gramians)?)?;
        if objective_from_extremes(start_eig.min(), start_eig.max(), self.w_nu).is_infinite() {
            return Err(ObsError::InfeasibleStart { lambda_min: start_eig.min() / self.scale });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let r = self.r as f64;
        let mut best_beta = uniform.clone();
        let mut best_f = self.objective(&uniform)?;
        let mut trace = vec![best_f];
        let mut iterations = 0;
        for restart in 0..options.restarts.max(1) {
            let mut beta = if restart == 0 {
                uniform.clone()
            } else {
                // Midpoint with the uniform start stays nonsingular.
                let raw: Vec<f64> = (0..self.site_count()).map(|_| rng.gen::<f64>()).collect();
                let random = project_capped_simplex(&raw, r)?;
                uniform.iter().zip(&random).map(|(u, v)| 0.5 * (u + v)).collect()
            };
            for k in 0..options.iterations {
                let (f, grad) = self.evaluate(&beta)?;
                iterations += 1;
                if f < best_f {
                    best_f = f;
                    best_beta.clone_from(&beta);
                }
                trace.push(best_f);
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    break;
                }
                let step = options.step / ((k + 1) as f64).sqrt();
                let moved: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - step * g / norm).collect();
                beta = project_capped_simplex(&moved, r)?;
            }
            let f = self.objective(&beta)?;
            if f < best_f {
                best_f = f;
                best_beta.clone_from(&beta);
            }
            trace.push(best_f);
        }
        let selected = round_to_discrete(&best_beta, self.r, &self.site_lambda_min);
        let discrete_objective = self.subset_objective(&selected)?;
        Ok(PlacementResult { beta: best_beta, selected, objective: best_f, discrete_objective, iterations, trace })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Initial step length in weight space; decays as `1/√k`.
    pub step: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { restarts: 5, iterations: 400, step: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementResult {
    /// Best relaxed weights found.
    pub beta: Vec<f64>,
    /// Rounded site indices, ascending.
    pub selected: Vec<usize>,
    /// Relaxed objective at `beta`.
    pub objective: f64,
    pub discrete_objective: f64,
    pub iterations: usize,
    /// Best objective after each iteration.
    pub trace: Vec<f64>,
}

/// Single-linkage cluster label per point at the given linkage distance;
/// labels are numbered in order of first appearance.
pub fn single_linkage_clusters(points: &[Point], distance: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
            if d <= distance {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut root_label = std::collections::BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let next = root_label.len();
        labels[i] = *root_label.entry(root).or_insert(next);
    }
    labels
}

pub fn cluster_count(points: &[Point], distance: f64) -> usize {
    single_linkage_clusters(points, distance).into_iter().max().map_or(0, |m| m + 1)
}
