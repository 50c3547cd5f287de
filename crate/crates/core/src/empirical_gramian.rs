//! Empirical observability Gramians from paired `±ε` initial-condition
//! perturbations, the analytic LTI Gramian, and scalar metrics.
//!
//! `W_ij = (1/4ε²) ∫ (y⁺ⁱ − y⁻ⁱ)ᵀ (y⁺ʲ − y⁻ʲ) dt`, with the integral taken
//! by the trapezoid rule on the simulator's own sample grid.

use serde::Serialize;

use crate::error::{ObsError, Result};
use crate::neural_encoding::{nla_difference, project_with_weights, projection_weights, EncoderParams};
use crate::numerics::{expm, symmetric_eig, trapezoid_weights, Matrix, Vector};
use crate::wing::{
    nominal_body_rates, periodic_initial_state, plate_orientation, simulate_wing, stroke_kinematics, StrainKind,
    StrokeParams, WingModel,
};

/// Multi-channel output samples on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSeries {
    pub step: f64,
    /// `values[k]` holds every channel at sample `k`.
    pub values: Vec<Vector>,
}

impl OutputSeries {
    pub fn channels(&self) -> usize {
        self.values.first().map_or(0, Vector::len)
    }
}

/// Deterministic map from an initial state to an output record.
pub trait OutputSimulator: Sync {
    fn state_dim(&self) -> usize;
    fn simulate(&self, x0: &Vector) -> Result<OutputSeries>;
}

/// Nominal state, perturbed coordinates and perturbation size.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianJob {
    pub x0: Vector,
    pub perturb: Vec<usize>,
    pub epsilon: f64,
}

impl GramianJob {
    pub fn new(x0: Vector, perturb: Vec<usize>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ObsError::Argument(format!("epsilon must be positive, got {epsilon}")));
        }
        if perturb.is_empty() {
            return Err(ObsError::Argument("at least one coordinate must be perturbed".into()));
        }
        let mut seen = perturb.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != perturb.len() {
            return Err(ObsError::Argument("perturbed coordinates must be distinct".into()));
        }
        if let Some(&i) = perturb.iter().find(|&&i| i >= x0.len()) {
            return Err(ObsError::Argument(format!("coordinate {i} is out of range for a {}-state system", x0.len())));
        }
        Ok(Self { x0, perturb, epsilon })
    }

    /// Every coordinate perturbed.
    pub fn full(x0: Vector, epsilon: f64) -> Result<Self> {
        let n = x0.len();
        Self::new(x0, (0..n).collect(), epsilon)
    }
}

/// Gramian with its spectrum and metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramianResult {
    #[serde(skip)]
    pub w: Matrix,
    #[serde(skip)]
    pub eigenvectors: Matrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub nu: f64,
    pub kappa: f64,
    pub det_root: f64,
    pub log_det: Option<f64>,
    pub trace: f64,
    pub rank: usize,
}

impl GramianResult {
    pub fn from_matrix(w: Matrix, rank_rtol: f64) -> Result<Self> {
        if !w.is_square() {
            return Err(ObsError::Dimension("Gramian must be square".into()));
        }
        let eig = symmetric_eig(&w)?;
        let m = gramian_metrics_from_eigenvalues(eig.values.as_slice(), rank_rtol);
        Ok(Self {
            w,
            eigenvectors: eig.vectors,
            eigenvalues: eig.values.iter().copied().collect(),
            nu: m.nu,
            kappa: m.kappa,
            det_root: m.det_root,
            log_det: m.log_det,
            trace: m.trace,
            rank: m.rank,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Eigenvalues matched to coordinate axes: axis `i` takes the
    /// eigenvalue whose eigenvector has the largest `i`-th component, each
    /// eigenvalue used once (greedy on alignment).
    pub fn axis_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mut pairs: Vec<(f64, usize, usize)> = (0..n)
            .flat_map(|axis| (0..n).map(move |k| (axis, k)))
            .map(|(axis, k)| (self.eigenvectors[(axis, k)].abs(), axis, k))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut out = vec![f64::NAN; n];
        let mut used = vec![false; n];
        for (_, axis, k) in pairs {
            if out[axis].is_nan() && !used[k] {
                out[axis] = self.eigenvalues[k];
                used[k] = true;
            }
        }
        out
    }
}

/// Scalar summary of a symmetric PSD matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramianMetrics {
    /// `1/λ_min`; infinite when `λ_min` is at or below the rank tolerance.
    pub nu: f64,
    /// `λ_max/λ_min`; infinite under the same condition.
    pub kappa: f64,
    /// `(Π λ_i)^{1/n}`; zero when singular.
    pub det_root: f64,
    pub log_det: Option<f64>,
    pub trace: f64,
    pub rank: usize,
}

pub fn gramian_metrics(w: &Matrix, rank_rtol: f64) -> Result<GramianMetrics> {
    Ok(gramian_metrics_from_eigenvalues(symmetric_eig(w)?.values.as_slice(), rank_rtol))
}

fn gramian_metrics_from_eigenvalues(values: &[f64], rank_rtol: f64) -> GramianMetrics {
    let n = values.len();
    let lmax = values.iter().copied().fold(0.0, f64::max);
    let lmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = rank_rtol * lmax;
    let rank = values.iter().filter(|&&v| v > tol).count();
    let trace = values.iter().sum();
    if n == 0 || lmin <= tol || lmax <= 0.0 {
        return GramianMetrics { nu: f64::INFINITY, kappa: f64::INFINITY, det_root: 0.0, log_det: None, trace, rank };
    }
    let log_det: f64 = values.iter().map(|v| v.ln()).sum();
    GramianMetrics {
        nu: 1.0 / lmin,
        kappa: lmax / lmin,
        det_root: (log_det / n as f64).exp(),
        log_det: Some(log_det),
        trace,
        rank,
    }
}

/// `(1/4ε²) Σ_k w_k d_i[k]ᵀ d_j[k]` for difference series `d_i`.
pub fn gramian_from_differences(diffs: &[Vec<Vector>], step: f64, epsilon: f64) -> Result<Matrix> {
    let m = diffs.len();
    let len = diffs.first().map_or(0, Vec::len);
    if diffs.iter().any(|d| d.len() != len) {
        return Err(ObsError::Dimension("difference series have unequal lengths".into()));
    }
    if len == 0 {
        return Err(ObsError::Dimension("empty output series".into()));
    }
    let weights = trapezoid_weights(len, step);
    let scale = 1.0 / (4.0 * epsilon * epsilon);
    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v: f64 = (0..len).map(|k| weights[k] * diffs[i][k].dot(&diffs[j][k])).sum::<f64>() * scale;
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Scalar-channel variant of [`gramian_from_differences`].
pub fn gramian_from_scalar_differences(diffs: &[Vec<f64>], step: f64, epsilon: f64) -> Result<Matrix> {
    let m = diffs.len();
    let len = diffs.first().map_or(0, Vec::len);
    if diffs.iter().any(|d| d.len() != len) || len == 0 {
        return Err(ObsError::Dimension("difference series are empty or of unequal length".into()));
    }
    let weights = trapezoid_weights(len, step);
    let scale = 1.0 / (4.0 * epsilon * epsilon);
    let mut w = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v: f64 = (0..len).map(|k| weights[k] * diffs[i][k] * diffs[j][k]).sum::<f64>() * scale;
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Perturbed output records, ordered `+e_i, −e_i` per perturbed index.
fn perturbed_runs<S: OutputSimulator + ?Sized>(sim: &S, job: &GramianJob) -> Result<Vec<(OutputSeries, OutputSeries)>> {
    if job.x0.len() != sim.state_dim() {
        return Err(ObsError::Dimension(format!(
            "nominal state has length {}, simulator expects {}",
            job.x0.len(),
            sim.state_dim()
        )));
    }
    job.perturb
        .iter()
        .map(|&i| {
            let run = |sign: f64| {
                let mut x = job.x0.clone();
                x[i] += sign * job.epsilon;
                sim.simulate(&x).map_err(|e| ObsError::Perturbation { index: i, source: Box::new(e) })
            };
            let (plus, minus) = (run(1.0)?, run(-1.0)?);
            if plus.values.len() != minus.values.len() || plus.step != minus.step {
                return Err(ObsError::Dimension("perturbed runs returned different grids".into()));
            }
            Ok((plus, minus))
        })
        .collect()
}

/// Empirical Gramian over all output channels together.
pub fn empirical_gramian<S: OutputSimulator + ?Sized>(
    sim: &S,
    job: &GramianJob,
    rank_rtol: f64,
) -> Result<GramianResult> {
    let runs = perturbed_runs(sim, job)?;
    let step = runs[0].0.step;
    let diffs: Vec<Vec<Vector>> =
        runs.iter().map(|(p, m)| p.values.iter().zip(&m.values).map(|(a, b)| a - b).collect()).collect();
    GramianResult::from_matrix(gramian_from_differences(&diffs, step, job.epsilon)?, rank_rtol)
}

/// One Gramian per output channel; their sum is the all-channel Gramian.
pub fn channel_gramians<S: OutputSimulator + ?Sized>(sim: &S, job: &GramianJob) -> Result<Vec<Matrix>> {
    let runs = perturbed_runs(sim, job)?;
    let step = runs[0].0.step;
    let channels = runs[0].0.channels();
    (0..channels)
        .map(|c| {
            let diffs: Vec<Vec<f64>> =
                runs.iter().map(|(p, m)| p.values.iter().zip(&m.values).map(|(a, b)| a[c] - b[c]).collect()).collect();
            gramian_from_scalar_differences(&diffs, step, job.epsilon)
        })
        .collect()
}

/// `∫_{t0}^{T} e^{Aᵀt} Cᵀ C e^{At} dt` by composite 4-point Gauss–Legendre.
pub fn analytic_lti_gramian(a: &Matrix, c: &Matrix, t0: f64, t1: f64) -> Result<Matrix> {
    if !a.is_square() || c.ncols() != a.nrows() {
        return Err(ObsError::Dimension("A must be square with as many columns as C".into()));
    }
    if !(t1 > t0) {
        return Err(ObsError::Argument(format!("horizon must satisfy T > t0, got [{t0}, {t1}]")));
    }
    const NODES: [(f64, f64); 4] = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    let n = a.nrows();
    let q = c.transpose() * c;
    let span = t1 - t0;
    let panels = ((span * a.norm()).ceil() as usize * 16).max(64);
    let h = span / panels as f64;
    let mut w = Matrix::zeros(n, n);
    for k in 0..panels {
        let mid = t0 + (k as f64 + 0.5) * h;
        for (x, wt) in NODES {
            let e = expm(&(a * (mid + x * h / 2.0)));
            w += (e.transpose() * &q * e) * (wt * h / 2.0);
        }
    }
    Ok((&w + w.transpose()) / 2.0)
}

/// `ẋ = A x`, `y = C x`, sampled exactly at a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSimulator {
    c: Matrix,
    transition: Matrix,
    step: f64,
    samples: usize,
}

impl LtiSimulator {
    pub fn new(a: &Matrix, c: Matrix, horizon: f64, step: f64) -> Result<Self> {
        if !a.is_square() || c.ncols() != a.nrows() {
            return Err(ObsError::Dimension("A must be square with as many columns as C".into()));
        }
        let samples = crate::numerics::step_count(horizon, step);
        if samples == 0 {
            return Err(ObsError::Argument("horizon must hold at least one step".into()));
        }
        let step = horizon / samples as f64;
        Ok(Self { c, transition: expm(&(a * step)), step, samples })
    }
}

impl OutputSimulator for LtiSimulator {
    fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    fn simulate(&self, x0: &Vector) -> Result<OutputSeries> {
        let mut x = x0.clone();
        let mut values = Vec::with_capacity(self.samples + 1);
        for _ in 0..=self.samples {
            values.push(&self.c * &x);
            x = &self.transition * x;
        }
        Ok(OutputSeries { step: self.step, values })
    }
}

/// Local weak-observability verdict from a Gramian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakObservability {
    pub observable: bool,
    pub rank: usize,
    pub dim: usize,
    pub lambda_min: f64,
    pub rank_gap: usize,
}

pub fn weak_observability(result: &GramianResult, rank_rtol: f64) -> WeakObservability {
    let metrics = gramian_metrics_from_eigenvalues(&result.eigenvalues, rank_rtol);
    let dim = result.dim();
    WeakObservability {
        observable: metrics.rank == dim,
        rank: metrics.rank,
        dim,
        lambda_min: result.lambda_min(),
        rank_gap: dim - metrics.rank,
    }
}

/// Directions in which the body rates are perturbed.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbBasis {
    /// Plate-frame rates `P, Q, R`.
    #[default]
    PlateRates,
    /// Rotations about the stroke-plane (body-fixed) axes at the
    /// perturbation instant, mapped into plate-frame rates.
    StrokeAxes,
    /// Arbitrary state coordinates.
    Indices(Vec<usize>),
}

/// Wing protocol: one nominal beat of history, then `±ε` perturbations at
/// the start of the second beat.
#[derive(Debug, Clone, PartialEq)]
pub struct WingStudySettings {
    pub stroke: StrokeParams,
    pub epsilon: f64,
    /// RK4 steps per beat; also the output sample grid.
    pub steps_per_beat: usize,
    pub basis: PerturbBasis,
}

impl Default for WingStudySettings {
    fn default() -> Self {
        Self { stroke: StrokeParams::default(), epsilon: 1e-3, steps_per_beat: 400, basis: PerturbBasis::PlateRates }
    }
}

/// Modal trajectories of the nominal and perturbed wing runs.
///
/// Strain is linear in `η`, so any station's output follows from these
/// runs without further integration.
#[derive(Debug, Clone)]
pub struct WingStudy {
    model: WingModel,
    settings: WingStudySettings,
    /// Unit perturbation directions in state space.
    directions: Vec<Vector>,
    step: f64,
    /// Samples over `[0, 2T]`.
    samples: usize,
    /// `η` per sample: nominal run first, then `+e_i, −e_i` pairs.
    eta: Vec<Vec<Vec<f64>>>,
}

impl WingStudy {
    pub fn new(model: &WingModel, settings: &WingStudySettings) -> Result<Self> {
        settings.stroke.validate()?;
        if settings.steps_per_beat < 2 {
            return Err(ObsError::Argument("need at least 2 steps per beat".into()));
        }
        let t_beat = settings.stroke.t_beat;
        let step = t_beat / settings.steps_per_beat as f64;
        let n = model.state_dim();
        let unit = |i: usize| {
            let mut d = Vector::zeros(n);
            d[i] = 1.0;
            d
        };
        let rate0 = model.rate_offset();
        let directions: Vec<Vector> = match &settings.basis {
            PerturbBasis::PlateRates => (0..3).map(|k| unit(rate0 + k)).collect(),
            PerturbBasis::StrokeAxes => {
                let r = plate_orientation(stroke_kinematics(t_beat, &settings.stroke).angles);
                (0..3)
                    .map(|k| {
                        let mut d = Vector::zeros(n);
                        for i in 0..3 {
                            d[rate0 + i] = r[(k, i)];
                        }
                        d
                    })
                    .collect()
            }
            PerturbBasis::Indices(idx) => {
                GramianJob::new(Vector::zeros(n), idx.clone(), settings.epsilon)?;
                idx.iter().map(|&i| unit(i)).collect()
            }
        };
        if !(settings.epsilon > 0.0 && settings.epsilon.is_finite()) {
            return Err(ObsError::Argument(format!("epsilon must be positive, got {}", settings.epsilon)));
        }
        let x_start = periodic_initial_state(model, &settings.stroke, 0.0, step)?;
        let first = simulate_wing(model, &settings.stroke, &x_start, 0.0, t_beat, step)?;
        let x_mid = first.trajectory.last().clone();

        let eta_of = |states: &[Vector]| -> Vec<Vec<f64>> {
            states.iter().map(|x| x.rows(0, model.mode_count()).iter().copied().collect()).collect()
        };
        let history = eta_of(&first.trajectory.states);
        let second_beat = |x0: &Vector| -> Result<Vec<Vec<f64>>> {
            let tr = simulate_wing(model, &settings.stroke, x0, t_beat, 2.0 * t_beat, step)?;
            let mut all = history.clone();
            all.extend(eta_of(&tr.trajectory.states[1..]));
            Ok(all)
        };
        let mut eta = vec![second_beat(&x_mid)?];
        for (i, d) in directions.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let x = &x_mid + d * (sign * settings.epsilon);
                eta.push(second_beat(&x).map_err(|e| ObsError::Perturbation { index: i, source: Box::new(e) })?);
            }
        }
        let samples = eta[0].len();
        Ok(Self { model: model.clone(), settings: settings.clone(), directions, step, samples, eta })
    }

    pub fn model(&self) -> &WingModel {
        &self.model
    }

    pub fn settings(&self) -> &WingStudySettings {
        &self.settings
    }

    /// Perturbation directions in state space, one per Gramian row.
    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|k| k as f64 * self.step).collect()
    }

    /// Nominal modal coordinates at every sample.
    pub fn nominal_eta(&self) -> &[Vec<f64>] {
        &self.eta[0]
    }

    /// Body rates along the nominal stroke at every sample.
    pub fn nominal_rates(&self) -> Vec<[f64; 3]> {
        self.times().iter().map(|&t| nominal_body_rates(t, &self.settings.stroke).rates).collect()
    }

    /// Strain series of every run at one station.
    pub fn strain_runs(&self, x: f64, y: f64, kind: StrainKind) -> Result<Vec<Vec<f64>>> {
        let k = self.model.strain_coefficients(x, y, kind)?;
        Ok(self
            .eta
            .iter()
            .map(|run| run.iter().map(|e| e.iter().zip(&k).map(|(a, b)| a * b).sum()).collect())
            .collect())
    }

    /// Projected stimulus of every run over the second beat.
    pub fn xi_runs(&self, x: f64, y: f64, kind: StrainKind, encoder: &EncoderParams) -> Result<StationStimulus> {
        let weights = projection_weights(self.step, encoder)?;
        let window = weights.len() - 1;
        let needed = self.settings.steps_per_beat;
        if window > needed {
            return Err(ObsError::Window(format!(
                "filter window of {window} samples exceeds the one-beat history of {needed}"
            )));
        }
        let runs = self
            .strain_runs(x, y, kind)?
            .iter()
            .map(|s| {
                let xi = project_with_weights(s, &weights)?;
                // Keep samples from the start of the second beat.
                Ok(xi[needed - window..].to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StationStimulus { runs, step: self.step, epsilon: self.settings.epsilon })
    }

    pub fn station_gramian(
        &self,
        x: f64,
        y: f64,
        kind: StrainKind,
        encoder: &EncoderParams,
        rank_rtol: f64,
    ) -> Result<GramianResult> {
        self.xi_runs(x, y, kind, encoder)?.gramian(encoder, rank_rtol)
    }
}

/// `ξ` over the second beat for the nominal run and each perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct StationStimulus {
    /// Nominal first, then `+e_i, −e_i` pairs.
    pub runs: Vec<Vec<f64>>,
    pub step: f64,
    pub epsilon: f64,
}

impl StationStimulus {
    pub fn nominal(&self) -> &[f64] {
        &self.runs[0]
    }

    pub fn mean_nominal(&self) -> f64 {
        let r = self.nominal();
        r.iter().sum::<f64>() / r.len() as f64
    }

    /// Gramian matrix of the encoded output `NLA(ξ)` for the given NLA.
    pub fn gramian_matrix(&self, encoder: &EncoderParams) -> Result<Matrix> {
        let diffs: Vec<Vec<f64>> = self.runs[1..]
            .chunks(2)
            .map(|pair| pair[0].iter().zip(&pair[1]).map(|(a, b)| nla_difference(*a, *b, encoder)).collect())
            .collect();
        gramian_from_scalar_differences(&diffs, self.step, self.epsilon)
    }

    pub fn gramian(&self, encoder: &EncoderParams, rank_rtol: f64) -> Result<GramianResult> {
        GramianResult::from_matrix(self.gramian_matrix(encoder)?, rank_rtol)
    }
}
