//! Lie derivatives of composite outputs `g ∘ h` along autonomous fields.
//!
//! All differentiation is numeric: time derivatives along the flow are
//! taken from RK4 flow samples with Richardson-extrapolated central
//! stencils, and state gradients by central differences on top of that.
//! The higher-order chain rule is evaluated from a table of integer
//! partitions built by a two-branch recursion.

use std::fmt;
use std::sync::Arc;

use crate::error::{ObsError, Result};
use crate::numerics::{
    central_stencil, chebyshev_center_derivatives, equilibrated_rank, flow, lobatto_nodes, richardson, Matrix,
    ToleranceConfig, Vector,
};

pub type VectorField = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
/// `(x, τ) ↦ value`, a scalar map with a lag argument.
pub type LaggedMap = Arc<dyn Fn(&Vector, f64) -> f64 + Send + Sync>;

/// `M_{k,j}` for `j = 1..=k`: the partitions of `k` into `j` positive parts,
/// each listed as often as the recursion produces it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultisetTable {
    k: usize,
    entries: Vec<Vec<Vec<u32>>>,
}

impl MultisetTable {
    pub fn order(&self) -> usize {
        self.k
    }

    /// `M_{k,j}`; empty outside `1..=k`.
    pub fn get(&self, j: usize) -> &[Vec<u32>] {
        if j == 0 || j > self.k {
            return &[];
        }
        &self.entries[j - 1]
    }

    /// Total number of inner multisets across all `j`.
    pub fn total(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }
}

/// Builds `M_{k,·}` from the base `M_{1,1} = {{1}}`.
///
/// `M_{k,j}` collects, for every `s ∈ M_{k-1,j}` and every position `i`,
/// the multiset with `s_i` replaced by `s_i + 1`, together with `s ∪ {1}`
/// for every `s ∈ M_{k-1,j-1}`. Inner multisets are stored sorted.
pub fn multiset_table(k: usize) -> Result<MultisetTable> {
    if k < 1 {
        return Err(ObsError::Argument("multiset table order must be at least 1".into()));
    }
    let mut levels: Vec<Vec<Vec<u32>>> = vec![vec![vec![1]]];
    for order in 2..=k {
        let mut next = vec![Vec::new(); order];
        for j in 1..=order {
            let bucket = &mut next[j - 1];
            if let Some(prev) = levels.get(j - 1) {
                for s in prev {
                    for i in 0..s.len() {
                        let mut t = s.clone();
                        t[i] += 1;
                        t.sort_unstable();
                        bucket.push(t);
                    }
                }
            }
            if j >= 2 {
                for s in &levels[j - 2] {
                    let mut t = s.clone();
                    t.push(1);
                    t.sort_unstable();
                    bucket.push(t);
                }
            }
        }
        debug_assert!(next
            .iter()
            .enumerate()
            .all(|(j, b)| b.iter().all(|s| s.len() == j + 1 && s.iter().sum::<u32>() as usize == order)));
        levels = next;
    }
    Ok(MultisetTable { k, entries: levels })
}

/// Scalar outer map `g` with derivatives of any order.
#[derive(Clone)]
pub enum OuterFunction {
    Identity,
    Tanh,
    /// `1 / (1 + exp(-c (z - d)))`.
    Logistic {
        c: f64,
        d: f64,
    },
    Exp,
    Constant(f64),
    /// Derivatives by finite differences.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for OuterFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::Tanh => write!(f, "Tanh"),
            Self::Logistic { c, d } => write!(f, "Logistic {{ c: {c}, d: {d} }}"),
            Self::Exp => write!(f, "Exp"),
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl OuterFunction {
    pub fn value(&self, z: f64) -> f64 {
        match self {
            Self::Identity => z,
            Self::Tanh => z.tanh(),
            Self::Logistic { c, d } => logistic(c * (z - d)),
            Self::Exp => z.exp(),
            Self::Constant(v) => *v,
            Self::Custom(g) => g(z),
        }
    }

    /// `g^(m)(z)`; `m = 0` is the value.
    pub fn derivative(&self, z: f64, m: usize) -> f64 {
        if m == 0 {
            return self.value(z);
        }
        match self {
            Self::Identity => {
                if m == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh => {
                // d/dz P(t) = P'(t) (1 - t²) with t = tanh z.
                let p = poly_chain(m, &[0.0, 1.0], &[1.0, 0.0, -1.0]);
                poly_eval(&p, z.tanh())
            }
            Self::Logistic { c, d } => {
                // d/du Q(s) = Q'(s) (s - s²) with s = logistic(u), u = c (z - d).
                let q = poly_chain(m, &[0.0, 1.0], &[0.0, 1.0, -1.0]);
                c.powi(m as i32) * poly_eval(&q, logistic(c * (z - d)))
            }
            Self::Exp => z.exp(),
            Self::Constant(_) => 0.0,
            Self::Custom(g) => {
                let h0 = 4.0 * f64::EPSILON.powf(1.0 / (m as f64 + 6.0)) * z.abs().max(1.0);
                let estimates: Vec<f64> = (0..3)
                    .map(|level| {
                        let h = h0 / f64::from(1u32 << level);
                        let sum: f64 = central_stencil(m).into_iter().map(|(o, w)| w * g(z + o * h)).sum();
                        sum / h.powi(m as i32)
                    })
                    .collect();
                richardson(&estimates)
            }
        }
    }
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Applies `P ↦ P' · q` to `start` `m` times (coefficients in ascending powers).
fn poly_chain(m: usize, start: &[f64], q: &[f64]) -> Vec<f64> {
    let mut p = start.to_vec();
    for _ in 0..m {
        let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let mut next = vec![0.0; dp.len() + q.len()];
        for (i, a) in dp.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        p = next;
    }
    p
}

fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Control-free single-output system `ẋ = f0(x)`, `y = g(h(x))`.
#[derive(Clone)]
pub struct SmoothSystem {
    pub f0: VectorField,
    pub h: ScalarMap,
    pub g: OuterFunction,
    pub dim: usize,
}

impl fmt::Debug for SmoothSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothSystem").field("g", &self.g).field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl SmoothSystem {
    pub fn new(f0: VectorField, h: ScalarMap, g: OuterFunction, dim: usize) -> Self {
        Self { f0, h, g, dim }
    }

    /// `ẋ₁ = x₂, ẋ₂ = 0`, `y = tanh(x₁)`.
    pub fn saturated_double_integrator() -> Self {
        Self::new(
            Arc::new(|x: &Vector| Vector::from_vec(vec![x[1], 0.0])),
            Arc::new(|x: &Vector| x[0]),
            OuterFunction::Tanh,
            2,
        )
    }

    /// `g ∘ h` as a plain scalar map.
    pub fn composite(&self) -> ScalarMap {
        let h = Arc::clone(&self.h);
        let g = self.g.clone();
        Arc::new(move |x: &Vector| g.value(h(x)))
    }
}

/// Numeric Lie differentiation settings.
///
/// `t ↦ h(φ_t(x))` is sampled at Chebyshev–Lobatto nodes over
/// `|t| ≤ half_width / ρ`, with `ρ = max(1, ‖∂f/∂x‖)`, and the interpolant
/// is differentiated at `t = 0`. Spatial gradients are central differences
/// with one Richardson step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieDifferentiator {
    /// Relative state step for gradients.
    pub fd_step: f64,
    /// RK4 substeps per flow evaluation.
    pub substeps: usize,
    /// Interpolation degree in time.
    pub nodes: usize,
    /// Sampling half-width in units of `1/ρ`.
    pub half_width: f64,
}

impl Default for LieDifferentiator {
    fn default() -> Self {
        Self { fd_step: 1e-4, substeps: 16, nodes: 20, half_width: 0.5 }
    }
}

impl LieDifferentiator {
    pub fn new(tol: &ToleranceConfig) -> Self {
        Self { fd_step: tol.fd_step, ..Self::default() }
    }

    /// `L_f^k h (x)`.
    pub fn derivative<F, H>(&self, f: &F, h: &H, x: &Vector, k: usize) -> Result<f64>
    where
        F: Fn(&Vector) -> Vector + ?Sized,
        H: Fn(&Vector) -> f64 + ?Sized,
    {
        Ok(self.derivatives(f, h, x, k)?[k])
    }

    /// `L_f^k h (x)` for `k = 0..=max_order`.
    pub fn derivatives<F, H>(&self, f: &F, h: &H, x: &Vector, max_order: usize) -> Result<Vec<f64>>
    where
        F: Fn(&Vector) -> Vector + ?Sized,
        H: Fn(&Vector) -> f64 + ?Sized,
    {
        let rho = field_scale(f, x)?;
        self.derivatives_scaled(f, h, x, max_order, rho)
    }

    /// `∇_x L_f^k h (x)`.
    pub fn gradient<F, H>(&self, f: &F, h: &H, x: &Vector, k: usize) -> Result<Vector>
    where
        F: Fn(&Vector) -> Vector + ?Sized,
        H: Fn(&Vector) -> f64 + ?Sized,
    {
        Ok(self.jacobian(f, h, x, k + 1)?.row(k).transpose())
    }

    /// Rows `∇ L_f^k h` for `k = 0..rows`.
    pub fn jacobian<F, H>(&self, f: &F, h: &H, x: &Vector, rows: usize) -> Result<Matrix>
    where
        F: Fn(&Vector) -> Vector + ?Sized,
        H: Fn(&Vector) -> f64 + ?Sized,
    {
        let mut m = Matrix::zeros(rows, x.len());
        if rows == 0 {
            return Ok(m);
        }
        // One time scale for every perturbed point keeps the difference
        // quotient free of step-switching jumps.
        let rho = field_scale(f, x)?;
        let top = rows - 1;
        for i in 0..x.len() {
            let step = self.fd_step * x[i].abs().max(1.0);
            let quotient = |s: f64| -> Result<Vec<f64>> {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += s;
                xm[i] -= s;
                let fp = self.derivatives_scaled(f, h, &xp, top, rho)?;
                let fm = self.derivatives_scaled(f, h, &xm, top, rho)?;
                Ok(fp.iter().zip(&fm).map(|(p, q)| (p - q) / (2.0 * s)).collect())
            };
            let coarse = quotient(step)?;
            let fine = quotient(step / 2.0)?;
            for k in 0..rows {
                m[(k, i)] = richardson(&[coarse[k], fine[k]]);
            }
        }
        Ok(m)
    }

    fn derivatives_scaled<F, H>(&self, f: &F, h: &H, x: &Vector, max_order: usize, rho: f64) -> Result<Vec<f64>>
    where
        F: Fn(&Vector) -> Vector + ?Sized,
        H: Fn(&Vector) -> f64 + ?Sized,
    {
        let h0 = finite(h(x), "output map")?;
        if max_order == 0 {
            return Ok(vec![h0]);
        }
        let half = self.half_width / rho;
        let samples = lobatto_nodes(self.nodes)
            .into_iter()
            .map(|s| finite(h(&flow(f, x, s * half, self.substeps)), "output along flow"))
            .collect::<Result<Vec<_>>>()?;
        let mut out = chebyshev_center_derivatives(&samples, half, max_order);
        out[0] = h0;
        for v in &out {
            finite(*v, "Lie derivative")?;
        }
        Ok(out)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ObsError::Evaluation(format!("{what} is not finite")))
    }
}

/// `max(1, ‖∂f/∂x‖_F)` by central differences.
fn field_scale<F>(f: &F, x: &Vector) -> Result<f64>
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    let f0 = f(x);
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(ObsError::Evaluation("vector field is not finite".into()));
    }
    let mut sq = 0.0;
    for i in 0..x.len() {
        let s = 1e-6 * x[i].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += s;
        xm[i] -= s;
        sq += ((f(&xp) - f(&xm)) / (2.0 * s)).norm_squared();
    }
    if !sq.is_finite() {
        return Err(ObsError::Evaluation("vector field Jacobian is not finite".into()));
    }
    Ok(sq.sqrt().max(1.0))
}

/// `L_f^k h (x)` with default settings.
pub fn lie_derivative<F, H>(f: &F, h: &H, x: &Vector, k: usize) -> Result<f64>
where
    F: Fn(&Vector) -> Vector + ?Sized,
    H: Fn(&Vector) -> f64 + ?Sized,
{
    LieDifferentiator::default().derivative(f, h, x, k)
}

/// `∇ L_f^k h (x)` with default settings.
pub fn lie_gradient<F, H>(f: &F, h: &H, x: &Vector, k: usize) -> Result<Vector>
where
    F: Fn(&Vector) -> Vector + ?Sized,
    H: Fn(&Vector) -> f64 + ?Sized,
{
    LieDifferentiator::default().gradient(f, h, x, k)
}

/// `L_f^k (g∘h) = Σ_j g^(j)(h) Σ_{s ∈ M_{k,j}} Π_i L_f^{s_i} h`.
///
/// `g_derivs[j-1] = g^(j)(h(x))` and `lie_values[i-1] = L_f^i h (x)`; both
/// need at least `k` entries.
pub fn composite_expansion(g_derivs: &[f64], lie_values: &[f64], k: usize) -> Result<f64> {
    if g_derivs.len() < k || lie_values.len() < k {
        return Err(ObsError::Argument(format!("order {k} needs {k} outer derivatives and {k} Lie derivatives")));
    }
    let table = multiset_table(k)?;
    Ok((1..=k)
        .map(|j| {
            let inner: f64 =
                table.get(j).iter().map(|s| s.iter().map(|&i| lie_values[i as usize - 1]).product::<f64>()).sum();
            g_derivs[j - 1] * inner
        })
        .sum())
}

/// Gradient of `L_f^k (g∘h)` assembled from gradients of `L_f^i h`.
///
/// `∇ L^k(g∘h) = Σ_j [ g^(j+1) ∇h Σ_s Π L^{s_i} h + g^(j) Σ_s Σ_i ∇L^{s_i} h Π_{l≠i} L^{s_l} h ]`.
/// `lie_values[i]` and `lie_grads[i]` hold order `i` for `i = 0..=k`;
/// `g_derivs[j]` is `g^(j)` for `j = 0..=k+1`.
pub fn composite_gradient(g_derivs: &[f64], lie_values: &[f64], lie_grads: &[Vector], k: usize) -> Result<Vector> {
    if k == 0 {
        if g_derivs.len() < 2 || lie_grads.is_empty() {
            return Err(ObsError::Argument("order 0 needs g' and ∇h".into()));
        }
        return Ok(&lie_grads[0] * g_derivs[1]);
    }
    if g_derivs.len() < k + 2 || lie_values.len() < k + 1 || lie_grads.len() < k + 1 {
        return Err(ObsError::Argument(format!("order {k} needs derivatives through order {}", k + 1)));
    }
    let table = multiset_table(k)?;
    let n = lie_grads[0].len();
    let mut grad = Vector::zeros(n);
    for j in 1..=k {
        for s in table.get(j) {
            let product: f64 = s.iter().map(|&i| lie_values[i as usize]).product();
            grad += &lie_grads[0] * (g_derivs[j + 1] * product);
            for (pos, &si) in s.iter().enumerate() {
                let others: f64 =
                    s.iter().enumerate().filter(|&(l, _)| l != pos).map(|(_, &sl)| lie_values[sl as usize]).product();
                grad += &lie_grads[si as usize] * (g_derivs[j] * others);
            }
        }
    }
    Ok(grad)
}

/// Jacobians of the observation spaces of `h` and `g ∘ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityMatrices {
    pub dg_h: Matrix,
    pub dg_goh: Matrix,
    pub det_h: f64,
    pub det_goh: f64,
    pub rank_h: usize,
    pub rank_goh: usize,
    pub g_prime: f64,
    /// `|det dG_{g∘h} − g'^n det dG_h|`.
    pub residual: f64,
    pub ratio_check: bool,
}

/// Both Jacobians from gradient rows `k = 0..n-1` at `x`.
pub fn observability_matrices(
    sys: &SmoothSystem,
    x: &Vector,
    engine: &LieDifferentiator,
    rank_rtol: f64,
) -> Result<ObservabilityMatrices> {
    let n = sys.dim;
    if x.len() != n {
        return Err(ObsError::Dimension(format!("state has length {}, expected {n}", x.len())));
    }
    let f = sys.f0.as_ref();
    let dg_h = engine.jacobian(f, sys.h.as_ref(), x, n)?;
    let composite = sys.composite();
    let dg_goh = engine.jacobian(f, composite.as_ref(), x, n)?;
    let det_h = dg_h.determinant();
    let det_goh = dg_goh.determinant();
    let g_prime = sys.g.derivative((sys.h)(x), 1);
    let residual = (det_goh - g_prime.powi(n as i32) * det_h).abs();
    Ok(ObservabilityMatrices {
        rank_h: equilibrated_rank(&dg_h, rank_rtol),
        rank_goh: equilibrated_rank(&dg_goh, rank_rtol),
        ratio_check: residual <= 1e-4 * det_h.abs().max(1.0),
        dg_h,
        dg_goh,
        det_h,
        det_goh,
        g_prime,
        residual,
    })
}

/// Same quantities with `dG_{g∘h}` assembled by [`composite_gradient`] from
/// the Lie values and gradients of `h`, so no high-order difference of the
/// composite is taken.
pub fn observability_matrices_expanded(
    sys: &SmoothSystem,
    x: &Vector,
    engine: &LieDifferentiator,
    rank_rtol: f64,
) -> Result<ObservabilityMatrices> {
    let n = sys.dim;
    if x.len() != n {
        return Err(ObsError::Dimension(format!("state has length {}, expected {n}", x.len())));
    }
    let f = sys.f0.as_ref();
    let h = sys.h.as_ref();
    let dg_h = engine.jacobian(f, h, x, n)?;
    let values = engine.derivatives(f, h, x, n - 1)?;
    let grads: Vec<Vector> = (0..n).map(|k| dg_h.row(k).transpose()).collect();
    let h0 = values[0];
    let g_derivs: Vec<f64> = (0..=n).map(|j| sys.g.derivative(h0, j)).collect();
    let mut dg_goh = Matrix::zeros(n, n);
    for k in 0..n {
        let row = composite_gradient(&g_derivs, &values[..=k], &grads[..=k], k)?;
        dg_goh.set_row(k, &row.transpose());
    }
    let det_h = dg_h.determinant();
    let det_goh = dg_goh.determinant();
    let g_prime = g_derivs[1];
    let residual = (det_goh - g_prime.powi(n as i32) * det_h).abs();
    Ok(ObservabilityMatrices {
        rank_h: equilibrated_rank(&dg_h, rank_rtol),
        rank_goh: equilibrated_rank(&dg_goh, rank_rtol),
        ratio_check: residual <= 1e-4 * det_h.abs().max(1.0),
        dg_h,
        dg_goh,
        det_h,
        det_goh,
        g_prime,
        residual,
    })
}

/// Output `ȳ(t) = ∫_0^N C(τ) h(x(t-τ)) dτ` with lagged states expressed
/// through the state at `t − N`.
#[derive(Clone)]
pub struct DelayedOutputSpec {
    /// `(x(t-N), τ) ↦ h(x(t-τ))`.
    pub h_aux: LaggedMap,
    pub kernel: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub window: f64,
    pub lag_grid: usize,
}

impl fmt::Debug for DelayedOutputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayedOutputSpec")
            .field("window", &self.window)
            .field("lag_grid", &self.lag_grid)
            .finish_non_exhaustive()
    }
}

impl DelayedOutputSpec {
    pub fn new(
        h_aux: LaggedMap,
        kernel: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        window: f64,
        lag_grid: usize,
    ) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(ObsError::Window(format!("window must be positive, got {window}")));
        }
        if lag_grid < 2 {
            return Err(ObsError::Window(format!("lag grid needs at least 2 points, got {lag_grid}")));
        }
        Ok(Self { h_aux, kernel, window, lag_grid })
    }

    /// `h_aux(x, τ) = h(φ_{N-τ}(x))` from the flow of `f0`.
    pub fn from_flow(
        f0: VectorField,
        h: ScalarMap,
        kernel: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        window: f64,
        lag_grid: usize,
        substeps: usize,
    ) -> Result<Self> {
        let h_aux = Arc::new(move |x: &Vector, tau: f64| h(&flow(f0.as_ref(), x, window - tau, substeps)));
        Self::new(h_aux, kernel, window, lag_grid)
    }

    pub fn lags(&self) -> Vec<f64> {
        let m = self.lag_grid - 1;
        (0..=m).map(|i| self.window * i as f64 / m as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayedRank {
    /// `dḠ = ∫ C(τ) dḠ_aux(τ) dτ`.
    pub jacobian: Matrix,
    pub rank: usize,
    /// Rank of all `dḠ_aux(τ)` stacked over the lag grid.
    pub rank_aux: usize,
    /// `rank_aux < n ⇒ rank < n`.
    pub rank_bound_holds: bool,
}

/// Rank of the windowed-output observation Jacobian at `x(t-N)`.
pub fn delayed_jacobian_rank<F>(
    output: &DelayedOutputSpec,
    f0: &F,
    x: &Vector,
    engine: &LieDifferentiator,
    rank_rtol: f64,
) -> Result<DelayedRank>
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    let n = x.len();
    let lags = output.lags();
    let step = output.window / (lags.len() - 1) as f64;
    let mut jacobian = Matrix::zeros(n, n);
    let mut stacked = Matrix::zeros(n * lags.len(), n);
    for (i, &tau) in lags.iter().enumerate() {
        let weight = (output.kernel)(tau) * if i == 0 || i + 1 == lags.len() { step / 2.0 } else { step };
        if !weight.is_finite() {
            return Err(ObsError::Evaluation(format!("kernel is not finite at lag {tau}")));
        }
        let h = |y: &Vector| (output.h_aux)(y, tau);
        let rows = engine.jacobian(f0, &h, x, n)?;
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(ObsError::Evaluation(format!("auxiliary Jacobian is not finite at lag {tau}")));
        }
        jacobian += &rows * weight;
        stacked.rows_mut(i * n, n).copy_from(&rows);
    }
    let rank = equilibrated_rank(&jacobian, rank_rtol);
    let rank_aux = equilibrated_rank(&stacked, rank_rtol);
    Ok(DelayedRank { rank_bound_holds: rank_aux == n || rank < n, jacobian, rank, rank_aux })
}
