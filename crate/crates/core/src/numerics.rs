//! Shared numerical kernels.
//!
//! Everything here is a pure function of its inputs. Dense linear algebra is
//! delegated to `nalgebra`; integration, quadrature and difference stencils
//! are written out because their exact sample placement matters to callers
//! (Gramian column differences must be reproducible run to run).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ObsError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Tolerances shared across the analysis modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Singular values below `rank_rtol * sigma_max` count as zero.
    pub rank_rtol: f64,
    /// Fixed RK4 step in seconds.
    pub integ_step: f64,
    /// Relative state perturbation for spatial central differences.
    pub fd_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { rank_rtol: 1e-10, integ_step: 1e-4, fd_step: 1e-4 }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rank_rtol", self.rank_rtol), ("integ_step", self.integ_step), ("fd_step", self.fd_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ObsError::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Time-indexed samples of an ODE solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Samples of one state component.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[index]).collect()
    }
}

/// Number of fixed steps covering `span`; a span within 1e-9 steps of an
/// integer multiple is treated as exact so no sliver step is produced.
pub fn step_count(span: f64, step: f64) -> usize {
    let q = span / step;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        (r as usize).max(1)
    } else {
        (q.ceil() as usize).max(1)
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(rhs: &mut F, t: f64, x: &Vector, h: f64) -> Vector
where
    F: FnMut(f64, &Vector) -> Vector,
{
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = rhs(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = rhs(t + h, &(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step RK4 from `t0` to `t1`.
///
/// Sample times are `t0 + i * step`; the final sample lands exactly on `t1`
/// (the last step is shortened when the span is not a multiple of `step`).
pub fn integrate_rk4<F>(mut rhs: F, x0: &Vector, t0: f64, t1: f64, step: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &Vector) -> Vector,
{
    if !(t1 > t0) {
        return Err(ObsError::Argument(format!("t1 ({t1}) must exceed t0 ({t0})")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(ObsError::Argument(format!("step must be positive, got {step}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(ObsError::Diverged { time: t0 });
    }
    let n = step_count(t1 - t0, step);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(t0);
    states.push(x0.clone());
    let mut x = x0.clone();
    for i in 0..n {
        let t = t0 + i as f64 * step;
        let t_next = if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * step };
        x = rk4_step(&mut rhs, t, &x, t_next - t);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ObsError::Diverged { time: t_next });
        }
        times.push(t_next);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

/// Flow map `x ↦ φ_t(x)` of an autonomous field using `substeps` equal RK4
/// steps; `t` may be negative.
pub fn flow<F>(field: &F, x: &Vector, t: f64, substeps: usize) -> Vector
where
    F: Fn(&Vector) -> Vector + ?Sized,
{
    if t == 0.0 {
        return x.clone();
    }
    let h = t / substeps as f64;
    let mut rhs = |_: f64, y: &Vector| field(y);
    let mut y = x.clone();
    for i in 0..substeps {
        y = rk4_step(&mut rhs, i as f64 * h, &y, h);
    }
    y
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    /// Ascending.
    pub values: Vector,
    /// Orthonormal eigenvectors, column `i` pairs with `values[i]`.
    pub vectors: Matrix,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Symmetric eigen-decomposition of `(W + Wᵀ)/2`, eigenvalues ascending.
pub fn symmetric_eig(w: &Matrix) -> Result<SymEig> {
    if !w.is_square() {
        return Err(ObsError::Dimension(format!(
            "symmetric_eig needs a square matrix, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let n = w.nrows();
    if n == 0 {
        return Err(ObsError::Dimension("symmetric_eig of an empty matrix".into()));
    }
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymEig { values, vectors })
}

/// Singular values, descending. Empty for a matrix with a zero dimension.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rtol * sigma_max`.
pub fn numeric_rank(m: &Matrix, rtol: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 || !smax.is_finite() {
        return 0;
    }
    s.iter().filter(|&&v| v > rtol * smax).count()
}

/// Rank after scaling every nonzero row to unit norm. Useful for stacked
/// derivative rows whose magnitudes grow with order.
pub fn equilibrated_rank(m: &Matrix, rtol: f64) -> usize {
    let mut scaled = m.clone();
    for mut row in scaled.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    numeric_rank(&scaled, rtol)
}

/// 2-norm condition number; infinite when the smallest singular value is 0.
pub fn condition_number(m: &Matrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Composite trapezoid rule on a uniform grid. Fewer than two samples span
/// no interval and integrate to zero.
pub fn trapezoid(samples: &[f64], step: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = samples[1..n - 1].iter().sum();
            step * (0.5 * (samples[0] + samples[n - 1]) + inner)
        }
    }
}

/// Trapezoid weights for `n` uniform samples.
pub fn trapezoid_weights(n: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; n];
    if n >= 2 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    } else if n == 1 {
        w[0] = 0.0;
    }
    w
}

/// `A^k` by repeated multiplication.
pub fn matrix_power(a: &Matrix, k: usize) -> Matrix {
    let mut out = Matrix::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.abs().max() <= f64::EPSILON * sum.abs().max() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Offsets (in units of the step) and weights of the central stencil for
/// the `order`-th derivative: `f^(k)(0) ≈ Σ w_i f(o_i h) / h^k`.
///
/// Odd orders use half-integer offsets, so the stencil has `order + 1`
/// points and an error expansion in even powers of `h`.
pub fn central_stencil(order: usize) -> Vec<(f64, f64)> {
    let k = order as f64;
    let mut binom = 1.0;
    (0..=order)
        .map(|i| {
            if i > 0 {
                binom = binom * (order + 1 - i) as f64 / i as f64;
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            (k / 2.0 - i as f64, sign * binom)
        })
        .collect()
}

/// `order`-th derivative of a scalar function at `t` by the central stencil
/// with step `h`.
pub fn central_difference<F>(f: F, t: f64, h: f64, order: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let sum: f64 = central_stencil(order).into_iter().map(|(o, w)| w * f(t + o * h)).sum();
    sum / h.powi(order as i32)
}

/// Richardson extrapolation of estimates taken at steps `h, h/2, h/4, …`
/// whose error expands in even powers of `h`. Returns the top of the tableau.
pub fn richardson(estimates: &[f64]) -> f64 {
    let mut table = estimates.to_vec();
    let mut factor = 4.0;
    for level in 1..table.len() {
        for i in (level..table.len()).rev() {
            table[i] = (factor * table[i] - table[i - 1]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    *table.last().expect("at least one estimate")
}

/// Chebyshev–Lobatto nodes `cos(πj/n)`, `j = 0..=n`, on `[-1, 1]`.
pub fn lobatto_nodes(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos()).collect()
}

/// Derivatives of orders `0..=max_order` at the centre of
/// `[-half_width, half_width]` of the polynomial interpolating `samples`
/// taken at the scaled [`lobatto_nodes`].
///
/// Converges geometrically for functions analytic on a neighbourhood of the
/// interval, so high orders need no step tuning.
pub fn chebyshev_center_derivatives(samples: &[f64], half_width: f64, max_order: usize) -> Vec<f64> {
    let n = samples.len().saturating_sub(1).max(1);
    let pi = std::f64::consts::PI;
    let mut coeffs: Vec<f64> = (0..samples.len())
        .map(|m| {
            let sum: f64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                    w * v * (pi * ((m * j) % (2 * n)) as f64 / n as f64).cos()
                })
                .sum();
            let scale = if m == 0 || m == n { 1.0 } else { 2.0 };
            scale * sum / n as f64
        })
        .collect();
    // Σ c_m T_m(0) with T_m(0) = 1, 0, −1, 0, …
    let at_centre = |c: &[f64]| -> f64 {
        c.iter()
            .enumerate()
            .map(|(m, v)| match m % 4 {
                0 => *v,
                2 => -*v,
                _ => 0.0,
            })
            .sum()
    };
    let mut out = Vec::with_capacity(max_order + 1);
    out.push(at_centre(&coeffs));
    for order in 1..=max_order {
        // c'_{m-1} = c'_{m+1} + 2m c_m, with the constant term halved.
        let mut d = vec![0.0; coeffs.len()];
        for m in (1..coeffs.len()).rev() {
            let above = d.get(m + 1).copied().unwrap_or(0.0);
            d[m - 1] = above + 2.0 * m as f64 * coeffs[m];
        }
        if let Some(first) = d.first_mut() {
            *first *= 0.5;
        }
        coeffs = d;
        out.push(at_centre(&coeffs) / half_width.powi(order as i32));
    }
    out
}

/// Pearson correlation coefficient; `None` when either column is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}
