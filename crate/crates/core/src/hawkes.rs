//! Discrete-time multivariate Hawkes process with exponential delay kernel.
//!
//! Counts y(n) are Poisson with conditional intensity
//! λ(n) = μ + Σ_{t<n} A y(t) φ(n−t), φ(t) = βe^{−βt}. The excitation sum is
//! carried by the recursion S(n+1) = e^{−β}(S(n) + β y(n)) with S(1) = 0, so
//! intensities cost O(N·M²). Fitting maximizes the Poisson log-likelihood by
//! projected gradient ascent with a halving line search; the log-likelihood
//! is concave in (μ, A), so accepted steps increase it monotonically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HawkesError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("series list is empty")]
    EmptySeries,
    #[error("series must cover at least {required} days, found {found}")]
    ShortSeries { required: usize, found: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("intensity is not positive at type {m}, day {n}")]
    NonPositiveIntensity { m: usize, n: usize },
    #[error("unstable parameters: spectral radius of cA is {rho:.6} >= 1")]
    Unstable { rho: f64 },
    #[error(
        "line search failed at iteration {iteration}: ll={ll}, grad_norm={grad_norm}, step={step}"
    )]
    LineSearchFailed {
        iteration: usize,
        ll: f64,
        grad_norm: f64,
        step: f64,
    },
    #[error("singular system: (I - cA) is not invertible")]
    SingularSystem,
    #[error("parameter csv: {0}")]
    ParamsFormat(String),
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
}

/// Baseline vector μ and infectivity matrix A, all entries ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesParams {
    pub mu: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

impl HawkesParams {
    pub fn new(mu: Vec<f64>, a: Vec<Vec<f64>>) -> Result<HawkesParams, HawkesError> {
        let m = mu.len();
        if m == 0 {
            return Err(HawkesError::InvalidParams("mu is empty".to_string()));
        }
        if a.len() != m || a.iter().any(|row| row.len() != m) {
            return Err(HawkesError::Dimension(format!(
                "A must be {m}x{m} to match mu"
            )));
        }
        let all = mu.iter().chain(a.iter().flatten());
        for v in all {
            if !v.is_finite() || *v < 0.0 {
                return Err(HawkesError::InvalidParams(format!(
                    "entries must be finite and nonnegative, found {v}"
                )));
            }
        }
        Ok(HawkesParams { mu, a })
    }

    /// μ with a scalar-diagonal infectivity matrix.
    pub fn diagonal(mu: Vec<f64>, diag: f64) -> Result<HawkesParams, HawkesError> {
        let m = mu.len();
        let mut a = vec![vec![0.0; m]; m];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = diag;
        }
        HawkesParams::new(mu, a)
    }

    /// Number of event types M.
    pub fn m(&self) -> usize {
        self.mu.len()
    }
}

/// Exponential delay φ(t) = βe^{−βt}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayKernel {
    beta: f64,
}

impl DelayKernel {
    pub fn new(beta: f64) -> Result<DelayKernel, HawkesError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(HawkesError::InvalidParams(format!(
                "beta must be positive and finite, found {beta}"
            )));
        }
        Ok(DelayKernel { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// One-day decay factor e^{−β}.
    pub fn decay(&self) -> f64 {
        (-self.beta).exp()
    }

    /// Total kernel mass over t ≥ 1: c = Σ_{t≥1} βe^{−βt} = β/(e^β − 1).
    /// cA governs stationarity (spectral radius < 1) and the long-run mean
    /// (I − cA)⁻¹μ.
    pub fn branching_factor(&self) -> f64 {
        self.beta / (self.beta.exp() - 1.0)
    }
}

/// Conditional intensity trajectories, M×N.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeries {
    pub lambda: Vec<Vec<f64>>,
}

impl IntensitySeries {
    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    pub fn n(&self) -> usize {
        self.lambda.first().map_or(0, Vec::len)
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.lambda[m]
    }
}

fn check_series(y: &[Vec<f64>], m: usize) -> Result<usize, HawkesError> {
    if y.len() != m {
        return Err(HawkesError::Dimension(format!(
            "series has {} event-type rows, parameters have {m}",
            y.len()
        )));
    }
    let n = y[0].len();
    if n == 0 {
        return Err(HawkesError::ShortSeries { required: 1, found: 0 });
    }
    for row in y {
        if row.len() != n {
            return Err(HawkesError::Dimension(
                "event-type rows have unequal lengths".to_string(),
            ));
        }
        for v in row {
            if !v.is_finite() || *v < 0.0 {
                return Err(HawkesError::InvalidCounts(format!(
                    "counts must be finite and nonnegative, found {v}"
                )));
            }
        }
    }
    Ok(n)
}

/// λ(1) = μ; λ(n) = μ + A·S(n) with the excitation state recursion.
pub fn intensity(
    params: &HawkesParams,
    kernel: &DelayKernel,
    y: &[Vec<f64>],
) -> Result<IntensitySeries, HawkesError> {
    let m = params.m();
    let n = check_series(y, m)?;
    let decay = kernel.decay();
    let beta = kernel.beta();

    let mut lambda = vec![vec![0.0; n]; m];
    let mut s = vec![0.0; m];
    for t in 0..n {
        for (i, row) in lambda.iter_mut().enumerate() {
            let mut l = params.mu[i];
            for (j, sj) in s.iter().enumerate() {
                l += params.a[i][j] * sj;
            }
            row[t] = l;
        }
        for (sj, yj) in s.iter_mut().zip(y) {
            *sj = decay * (*sj + beta * yj[t]);
        }
    }
    Ok(IntensitySeries { lambda })
}

/// Per-series pieces of the pooled objective: log-likelihood without the
/// logΓ(y+1) constant, plus the gradient in μ and A.
struct Eval {
    ll: f64,
    gmu: Vec<f64>,
    ga: Vec<Vec<f64>>,
}

fn eval_one(params: &HawkesParams, kernel: &DelayKernel, y: &[Vec<f64>]) -> Result<Eval, HawkesError> {
    let m = params.m();
    let n = check_series(y, m)?;
    let decay = kernel.decay();
    let beta = kernel.beta();

    let mut ll = 0.0;
    let mut gmu = vec![0.0; m];
    let mut ga = vec![vec![0.0; m]; m];
    let mut s = vec![0.0; m];
    for t in 0..n {
        for (i, yi) in y.iter().enumerate() {
            let mut l = params.mu[i];
            for (j, sj) in s.iter().enumerate() {
                l += params.a[i][j] * sj;
            }
            if l <= 0.0 {
                return Err(HawkesError::NonPositiveIntensity { m: i, n: t + 1 });
            }
            let yit = yi[t];
            ll += if yit > 0.0 { yit * l.ln() - l } else { -l };
            let r = yit / l - 1.0;
            gmu[i] += r;
            for (j, sj) in s.iter().enumerate() {
                ga[i][j] += r * sj;
            }
        }
        for (sj, yj) in s.iter_mut().zip(y) {
            *sj = decay * (*sj + beta * yj[t]);
        }
    }
    Ok(Eval { ll, gmu, ga })
}

/// Pooled evaluation over independent series; per-series terms are computed
/// in parallel and reduced in list order so results are reproducible.
fn eval_pooled(
    params: &HawkesParams,
    kernel: &DelayKernel,
    series_list: &[Vec<Vec<f64>>],
) -> Result<Eval, HawkesError> {
    let m = params.m();
    let parts: Vec<Eval> = series_list
        .par_iter()
        .map(|y| eval_one(params, kernel, y))
        .collect::<Result<_, _>>()?;
    let mut total = Eval {
        ll: 0.0,
        gmu: vec![0.0; m],
        ga: vec![vec![0.0; m]; m],
    };
    for p in parts {
        total.ll += p.ll;
        for i in 0..m {
            total.gmu[i] += p.gmu[i];
            for j in 0..m {
                total.ga[i][j] += p.ga[i][j];
            }
        }
    }
    Ok(total)
}

/// Σ over series, types, and days of the logΓ(y+1) term, constant in Θ.
fn lgamma_constant(series_list: &[Vec<Vec<f64>>]) -> f64 {
    series_list
        .iter()
        .flat_map(|y| y.iter().flatten())
        .map(|&v| ln_gamma(v + 1.0))
        .sum()
}

/// Poisson log-likelihood L(Θ) = Σ y logλ − λ − logΓ(y+1), summed over the
/// independent series. logΓ extends the factorial to normalized counts.
pub fn log_likelihood(
    params: &HawkesParams,
    kernel: &DelayKernel,
    series_list: &[Vec<Vec<f64>>],
) -> Result<f64, HawkesError> {
    if series_list.is_empty() {
        return Err(HawkesError::EmptySeries);
    }
    let eval = eval_pooled(params, kernel, series_list)?;
    Ok(eval.ll - lgamma_constant(series_list))
}

/// Log-likelihood value along with its gradient blocks: (L, ∂L/∂μ, ∂L/∂A).
pub type LogLikelihoodGrad = (f64, Vec<f64>, Vec<Vec<f64>>);

/// Log-likelihood together with its gradient, pooled over the independent
/// series. ∂L/∂μ_m = Σ_n (y_m/λ_m − 1) and ∂L/∂A_mj = Σ_n (y_m/λ_m − 1)·S_j(n),
/// with S the excitation state.
pub fn log_likelihood_grad(
    params: &HawkesParams,
    kernel: &DelayKernel,
    series_list: &[Vec<Vec<f64>>],
) -> Result<LogLikelihoodGrad, HawkesError> {
    if series_list.is_empty() {
        return Err(HawkesError::EmptySeries);
    }
    let eval = eval_pooled(params, kernel, series_list)?;
    Ok((
        eval.ll - lgamma_constant(series_list),
        eval.gmu,
        eval.ga,
    ))
}

/// Optimizer settings for [`fit_mle`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop when an accepted step improves L by less than this.
    pub tol: f64,
    /// Lower clamp for μ, keeping log λ finite.
    pub mu_floor: f64,
    /// Starting point; defaults to μ = per-type sample means, A = 0.1.
    pub init: Option<HawkesParams>,
    /// Hold A at zero, reducing the fit to independent Poisson baselines.
    pub disable_excitation: bool,
}

impl Default for FitOptions {
    fn default() -> FitOptions {
        FitOptions {
            max_iters: 5000,
            tol: 1e-8,
            mu_floor: 1e-8,
            init: None,
            disable_excitation: false,
        }
    }
}

/// Optimizer outcome. `grad_norm` is the projected gradient norm at the
/// returned parameters (components pushing against an active bound count 0).
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub iterations: usize,
    pub final_ll: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

impl FitReport {
    /// Plain-text `key=value` rendering.
    pub fn render(&self) -> String {
        format!(
            "iterations={}\nfinal_ll={}\ngrad_norm={}\nconverged={}\n",
            self.iterations, self.final_ll, self.grad_norm, self.converged
        )
    }
}

fn project(
    params: &HawkesParams,
    gmu: &[f64],
    ga: &[Vec<f64>],
    step: f64,
    opts: &FitOptions,
) -> HawkesParams {
    let m = params.m();
    let mu = (0..m)
        .map(|i| (params.mu[i] + step * gmu[i]).max(opts.mu_floor))
        .collect();
    let a = if opts.disable_excitation {
        params.a.clone()
    } else {
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| (params.a[i][j] + step * ga[i][j]).max(0.0))
                    .collect()
            })
            .collect()
    };
    HawkesParams { mu, a }
}

/// Gradient with components that push against an active bound zeroed out.
fn projected_grad_norm(params: &HawkesParams, eval: &Eval, opts: &FitOptions) -> f64 {
    let m = params.m();
    let mut sq = 0.0;
    for i in 0..m {
        let g = eval.gmu[i];
        if !(params.mu[i] <= opts.mu_floor && g < 0.0) {
            sq += g * g;
        }
        if !opts.disable_excitation {
            for j in 0..m {
                let g = eval.ga[i][j];
                if !(params.a[i][j] <= 0.0 && g < 0.0) {
                    sq += g * g;
                }
            }
        }
    }
    sq.sqrt()
}

/// Maximum-likelihood fit by projected gradient ascent with a backtracking
/// (halving) line search that accepts only log-likelihood increases.
pub fn fit_mle(
    series_list: &[Vec<Vec<f64>>],
    kernel: &DelayKernel,
    opts: &FitOptions,
) -> Result<(HawkesParams, FitReport), HawkesError> {
    if series_list.is_empty() {
        return Err(HawkesError::EmptySeries);
    }
    let m = series_list[0].len();
    for y in series_list {
        let n = check_series(y, m)?;
        if n < 2 {
            return Err(HawkesError::ShortSeries { required: 2, found: n });
        }
    }

    let mut params = match &opts.init {
        Some(p) => {
            if p.m() != m {
                return Err(HawkesError::Dimension(format!(
                    "initial parameters have M={}, series have M={m}",
                    p.m()
                )));
            }
            let mut p = p.clone();
            for v in &mut p.mu {
                *v = v.max(opts.mu_floor);
            }
            p
        }
        None => {
            let total_days: usize = series_list.iter().map(|y| y[0].len()).sum();
            let mu = (0..m)
                .map(|i| {
                    let sum: f64 = series_list.iter().map(|y| y[i].iter().sum::<f64>()).sum();
                    (sum / total_days as f64).max(opts.mu_floor)
                })
                .collect();
            let a0 = if opts.disable_excitation { 0.0 } else { 0.1 };
            HawkesParams {
                mu,
                a: vec![vec![a0; m]; m],
            }
        }
    };

    let lgamma_const = lgamma_constant(series_list);
    let mut eval = eval_pooled(&params, kernel, series_list)?;
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    'outer: for iter in 1..=opts.max_iters {
        let gnorm = projected_grad_norm(&params, &eval, opts);
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let mut s = step;
        let accepted = loop {
            let cand = project(&params, &eval.gmu, &eval.ga, s, opts);
            if cand == params {
                // The step rounds to no movement: flat to machine precision.
                converged = true;
                break 'outer;
            }
            match eval_pooled(&cand, kernel, series_list) {
                Ok(e) if e.ll.is_finite() && e.ll > eval.ll => break (cand, e),
                _ => {
                    s /= 2.0;
                    if s < f64::MIN_POSITIVE {
                        return Err(HawkesError::LineSearchFailed {
                            iteration: iter,
                            ll: eval.ll - lgamma_const,
                            grad_norm: gnorm,
                            step: s,
                        });
                    }
                }
            }
        };
        let (cand, e) = accepted;
        let delta = e.ll - eval.ll;
        params = cand;
        eval = e;
        iterations = iter;
        step = (s * 2.0).min(1e6);
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    let report = FitReport {
        iterations,
        final_ll: eval.ll - lgamma_const,
        grad_norm: projected_grad_norm(&params, &eval, opts),
        converged,
    };
    Ok((params, report))
}

/// Spectral radius estimate by power iteration with geometric averaging of
/// the growth factors (handles the oscillation of non-symmetric matrices).
pub fn spectral_radius(b: &[Vec<f64>]) -> f64 {
    let m = b.len();
    if m == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let burn_in = 50;
    let samples = 150;
    let mut log_sum = 0.0;
    for k in 0..(burn_in + samples) {
        let mut w = vec![0.0; m];
        for (i, row) in b.iter().enumerate() {
            w[i] = row.iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0; // B^k annihilates a positive vector: nilpotent
        }
        for x in &mut w {
            *x /= norm;
        }
        if k >= burn_in {
            log_sum += norm.ln();
        }
        v = w;
    }
    (log_sum / samples as f64).exp()
}

/// Long-run mean (I − cA)⁻¹μ with c the kernel branching factor, solved by
/// Gaussian elimination with partial pivoting.
pub fn stationary_mean(params: &HawkesParams, kernel: &DelayKernel) -> Result<Vec<f64>, HawkesError> {
    let m = params.m();
    let c = kernel.branching_factor();
    let mut aug: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m)
                .map(|j| (if i == j { 1.0 } else { 0.0 }) - c * params.a[i][j])
                .collect();
            row.push(params.mu[i]);
            row
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap();
        if aug[pivot][col].abs() < 1e-12 {
            return Err(HawkesError::SingularSystem);
        }
        aug.swap(col, pivot);
        let (pivot_rows, below) = aug.split_at_mut(col + 1);
        let pivot_row = &pivot_rows[col];
        for row in below.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * pv;
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut v = aug[i][m];
        for j in i + 1..m {
            v -= aug[i][j] * x[j];
        }
        x[i] = v / aug[i][i];
    }
    Ok(x)
}

/// Draw y(n) ~ Poisson(λ(n)) sequentially from the already-generated prefix.
/// Deterministic given the seed; types are drawn in index order within a day.
pub fn simulate(
    params: &HawkesParams,
    kernel: &DelayKernel,
    n: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<f64>>, HawkesError> {
    if n == 0 {
        return Err(HawkesError::ShortSeries { required: 1, found: 0 });
    }
    let m = params.m();
    let scaled: Vec<Vec<f64>> = params
        .a
        .iter()
        .map(|row| row.iter().map(|v| v * kernel.branching_factor()).collect())
        .collect();
    let rho = spectral_radius(&scaled);
    if rho >= 1.0 {
        return Err(HawkesError::Unstable { rho });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let decay = kernel.decay();
    let beta = kernel.beta();
    let mut y = vec![vec![0.0; n]; m];
    let mut s = vec![0.0; m];
    for t in 0..n {
        for (i, row) in y.iter_mut().enumerate() {
            let mut l = params.mu[i];
            for (j, sj) in s.iter().enumerate() {
                l += params.a[i][j] * sj;
            }
            row[t] = if l > 0.0 {
                Poisson::new(l)
                    .expect("positive finite rate")
                    .sample(&mut rng)
            } else {
                0.0
            };
        }
        for (sj, yj) in s.iter_mut().zip(&y) {
            *sj = decay * (*sj + beta * yj[t]);
        }
    }
    Ok(y)
}

/// Write the three-event-type parameter layout: a `mu_append,mu_extend,
/// mu_mutate` header, the μ row, then the three rows of A.
pub fn write_params<W: Write>(params: &HawkesParams, mut w: W) -> Result<(), HawkesError> {
    if params.m() != 3 {
        return Err(HawkesError::Dimension(format!(
            "parameter csv layout covers M=3 event types, found M={}",
            params.m()
        )));
    }
    writeln!(w, "mu_append,mu_extend,mu_mutate")?;
    writeln!(w, "{},{},{}", params.mu[0], params.mu[1], params.mu[2])?;
    for row in &params.a {
        writeln!(w, "{},{},{}", row[0], row[1], row[2])?;
    }
    Ok(())
}

/// Read parameters written by [`write_params`].
pub fn read_params<R: Read>(r: R) -> Result<HawkesParams, HawkesError> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != 5 {
        return Err(HawkesError::ParamsFormat(format!(
            "expected header + mu row + 3 A rows, found {} lines",
            lines.len()
        )));
    }
    if lines[0] != "mu_append,mu_extend,mu_mutate" {
        return Err(HawkesError::ParamsFormat(format!(
            "unexpected header {:?}",
            lines[0]
        )));
    }
    let parse_row = |line: &str, idx: usize| -> Result<Vec<f64>, HawkesError> {
        let vals: Result<Vec<f64>, _> = line.split(',').map(str::trim).map(str::parse).collect();
        let vals = vals.map_err(|_| {
            HawkesError::ParamsFormat(format!("line {}: non-numeric field", idx + 1))
        })?;
        if vals.len() != 3 {
            return Err(HawkesError::ParamsFormat(format!(
                "line {}: expected 3 fields, found {}",
                idx + 1,
                vals.len()
            )));
        }
        Ok(vals)
    };
    let mu = parse_row(lines[1], 1)?;
    let a = (2..5).map(|i| parse_row(lines[i], i)).collect::<Result<_, _>>()?;
    HawkesParams::new(mu, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use std::io::Cursor;

    fn kernel(beta: f64) -> DelayKernel {
        DelayKernel::new(beta).unwrap()
    }

    /// Direct definition-level evaluation: λ(n) = μ + Σ_{t<n} A y(t) βe^{−β(n−t)}.
    fn double_sum_intensity(params: &HawkesParams, k: &DelayKernel, y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = params.m();
        let n = y[0].len();
        let mut lambda = vec![vec![0.0; n]; m];
        for t in 1..=n {
            for (i, row) in lambda.iter_mut().enumerate() {
                let mut l = params.mu[i];
                for u in 1..t {
                    let phi = k.beta() * (-k.beta() * (t - u) as f64).exp();
                    for (j, yj) in y.iter().enumerate() {
                        l += params.a[i][j] * yj[u - 1] * phi;
                    }
                }
                row[t - 1] = l;
            }
        }
        lambda
    }

    #[test]
    fn zero_infectivity_gives_flat_intensity() {
        let p = HawkesParams::new(vec![1.5, 0.2], vec![vec![0.0; 2]; 2]).unwrap();
        let y = vec![vec![3.0, 0.0, 1.0], vec![0.0, 2.0, 2.0]];
        let lam = intensity(&p, &kernel(0.5), &y).unwrap();
        assert_eq!(lam.row(0), &[1.5, 1.5, 1.5]);
        assert_eq!(lam.row(1), &[0.2, 0.2, 0.2]);
    }

    #[test]
    fn scalar_worked_example() {
        let p = HawkesParams::new(vec![1.0], vec![vec![0.5]]).unwrap();
        let y = vec![vec![2.0, 0.0, 0.0]];
        let lam = intensity(&p, &kernel(0.5), &y).unwrap();
        assert_relative_eq!(lam.row(0)[0], 1.0);
        assert_relative_eq!(lam.row(0)[1], 1.0 + 0.5 * 2.0 * 0.5 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(lam.row(0)[1], 1.30327, epsilon = 1e-5);
    }

    #[test]
    fn recursion_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let m = 2;
            let mu: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..2.0)).collect();
            let a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..m).map(|_| rng.gen_range(0.0..0.4)).collect())
                .collect();
            let p = HawkesParams::new(mu, a).unwrap();
            let k = kernel(rng.gen_range(0.2..1.5));
            let y: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..10).map(|_| rng.gen_range(0..5) as f64).collect())
                .collect();
            let fast = intensity(&p, &k, &y).unwrap();
            let slow = double_sum_intensity(&p, &k, &y);
            for (i, slow_row) in slow.iter().enumerate() {
                for (fast_v, slow_v) in fast.row(i).iter().zip(slow_row) {
                    assert_relative_eq!(fast_v, slow_v, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn intensity_never_below_baseline() {
        let p = HawkesParams::new(vec![0.3, 0.7], vec![vec![0.2, 0.1], vec![0.0, 0.3]]).unwrap();
        let y = vec![vec![5.0, 1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0, 1.0]];
        let lam = intensity(&p, &kernel(0.5), &y).unwrap();
        for i in 0..2 {
            assert!(lam.row(i).iter().all(|&l| l >= p.mu[i]));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = HawkesParams::new(vec![1.0, 1.0], vec![vec![0.0; 2]; 2]).unwrap();
        let y = vec![vec![1.0, 2.0]];
        assert!(matches!(
            intensity(&p, &kernel(0.5), &y),
            Err(HawkesError::Dimension(_))
        ));
    }

    #[test]
    fn log_likelihood_all_zero_counts() {
        let p = HawkesParams::new(vec![1.0; 3], vec![vec![0.0; 3]; 3]).unwrap();
        let y = vec![vec![0.0; 2]; 3];
        let ll = log_likelihood(&p, &kernel(0.5), &[y]).unwrap();
        assert_relative_eq!(ll, -6.0, epsilon = 1e-14);
    }

    #[test]
    fn log_likelihood_scalar_poisson_pmf() {
        let p = HawkesParams::new(vec![2.0], vec![vec![0.0]]).unwrap();
        let y = vec![vec![3.0]];
        let ll = log_likelihood(&p, &kernel(0.5), &[y]).unwrap();
        // 3 log 2 − 2 − log 6
        assert_relative_eq!(ll, 3.0 * 2.0f64.ln() - 2.0 - 6.0f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(ll, -1.7123179275482194, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_adds_over_series() {
        let p = HawkesParams::new(vec![0.8, 0.5], vec![vec![0.1, 0.0], vec![0.2, 0.1]]).unwrap();
        let k = kernel(0.5);
        let y = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0]];
        let single = log_likelihood(&p, &k, std::slice::from_ref(&y)).unwrap();
        let double = log_likelihood(&p, &k, &[y.clone(), y]).unwrap();
        assert_relative_eq!(double, 2.0 * single, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_order_invariant() {
        let p = HawkesParams::new(vec![0.8, 0.5], vec![vec![0.1, 0.0], vec![0.2, 0.1]]).unwrap();
        let k = kernel(0.5);
        let y1 = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0]];
        let y2 = vec![vec![0.0, 3.0, 1.0], vec![2.0, 0.0, 0.0]];
        let fwd = log_likelihood(&p, &k, &[y1.clone(), y2.clone()]).unwrap();
        let rev = log_likelihood(&p, &k, &[y2, y1]).unwrap();
        assert_relative_eq!(fwd, rev, epsilon = 1e-12);
    }

    #[test]
    fn zero_intensity_with_events_is_hard_error() {
        let p = HawkesParams::new(vec![0.0], vec![vec![0.0]]).unwrap();
        let y = vec![vec![1.0]];
        assert!(matches!(
            log_likelihood(&p, &kernel(0.5), &[y]),
            Err(HawkesError::NonPositiveIntensity { .. })
        ));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let p = HawkesParams::new(vec![0.6, 0.9], vec![vec![0.2, 0.1], vec![0.05, 0.3]]).unwrap();
        let k = kernel(0.7);
        let sim =
            HawkesParams::new(vec![0.5, 0.4], vec![vec![0.2, 0.0], vec![0.1, 0.2]]).unwrap();
        let y = simulate(&sim, &k, 200, 3).unwrap();
        let series = vec![y];

        let eval = eval_pooled(&p, &k, &series).unwrap();
        let h = 1e-6;
        let m = p.m();
        for i in 0..m {
            let mut lo = p.clone();
            let mut hi = p.clone();
            lo.mu[i] -= h;
            hi.mu[i] += h;
            let fd = (log_likelihood(&hi, &k, &series).unwrap()
                - log_likelihood(&lo, &k, &series).unwrap())
                / (2.0 * h);
            assert_relative_eq!(eval.gmu[i], fd, max_relative = 1e-6);
            for j in 0..m {
                let mut lo = p.clone();
                let mut hi = p.clone();
                lo.a[i][j] -= h;
                hi.a[i][j] += h;
                let fd = (log_likelihood(&hi, &k, &series).unwrap()
                    - log_likelihood(&lo, &k, &series).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(eval.ga[i][j], fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn public_gradient_agrees_with_likelihood_and_hand_formula() {
        // M=1, N=2: λ(1)=μ, S(2)=e^{−β}βy(1), λ(2)=μ+a·S(2);
        // ∂L/∂μ = Σ(y/λ−1), ∂L/∂a = (y(2)/λ(2)−1)·S(2).
        let (mu, a, beta) = (0.8, 0.4, 0.5);
        let p = HawkesParams::new(vec![mu], vec![vec![a]]).unwrap();
        let k = kernel(beta);
        let y = vec![vec![3.0, 1.0]];
        let (ll, gmu, ga) = log_likelihood_grad(&p, &k, std::slice::from_ref(&y)).unwrap();
        assert_relative_eq!(ll, log_likelihood(&p, &k, &[y]).unwrap(), epsilon = 1e-15);

        let s2 = (-beta).exp() * beta * 3.0;
        let l2 = mu + a * s2;
        assert_relative_eq!(gmu[0], (3.0 / mu - 1.0) + (1.0 / l2 - 1.0), epsilon = 1e-12);
        assert_relative_eq!(ga[0][0], (1.0 / l2 - 1.0) * s2, epsilon = 1e-12);
    }

    #[test]
    fn disabled_excitation_recovers_sample_means() {
        let series = vec![
            vec![vec![2.0, 4.0, 0.0, 2.0], vec![1.0, 1.0, 1.0, 1.0]],
            vec![vec![3.0, 1.0, 2.0, 2.0], vec![0.0, 0.0, 2.0, 2.0]],
        ];
        let opts = FitOptions {
            disable_excitation: true,
            ..FitOptions::default()
        };
        let (p, report) = fit_mle(&series, &kernel(0.5), &opts).unwrap();
        assert!(report.converged);
        assert_relative_eq!(p.mu[0], 2.0, epsilon = 1e-6);
        assert_relative_eq!(p.mu[1], 1.0, epsilon = 1e-6);
        assert!(p.a.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn fit_improves_on_initial_point() {
        let truth = HawkesParams::diagonal(vec![0.5, 0.3], 0.2).unwrap();
        let k = kernel(0.5);
        let series: Vec<_> = (0..5).map(|s| simulate(&truth, &k, 300, s).unwrap()).collect();
        let init = HawkesParams::new(vec![1.0, 1.0], vec![vec![0.05; 2]; 2]).unwrap();
        let ll0 = log_likelihood(&init, &k, &series).unwrap();
        let opts = FitOptions {
            init: Some(init),
            ..FitOptions::default()
        };
        let (fitted, report) = fit_mle(&series, &k, &opts).unwrap();
        assert!(report.final_ll >= ll0);
        assert!(report.iterations >= 1);
        assert!(fitted.mu.iter().all(|&v| v >= 1e-8));
        assert!(fitted.a.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn simulate_is_deterministic() {
        let p = HawkesParams::diagonal(vec![0.5, 0.3, 0.4], 0.2).unwrap();
        let k = kernel(0.5);
        assert_eq!(
            simulate(&p, &k, 500, 7).unwrap(),
            simulate(&p, &k, 500, 7).unwrap()
        );
        assert_ne!(
            simulate(&p, &k, 500, 7).unwrap(),
            simulate(&p, &k, 500, 8).unwrap()
        );
    }

    #[test]
    fn simulate_degenerate_poisson_mean() {
        let p = HawkesParams::new(vec![2.0], vec![vec![0.0]]).unwrap();
        let n = 100_000;
        let y = simulate(&p, &kernel(0.5), n, 42).unwrap();
        let mean = y[0].iter().sum::<f64>() / n as f64;
        let sigma = (2.0 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sigma, "mean {mean} too far from 2");
    }

    #[test]
    fn simulate_rejects_unstable_parameters() {
        let k = kernel(0.5);
        // c = 0.5/(e^0.5 − 1) ≈ 0.7707, so A = 1.4·I gives ρ(cA) > 1
        let p = HawkesParams::diagonal(vec![0.5], 1.4).unwrap();
        assert!(matches!(
            simulate(&p, &k, 10, 0),
            Err(HawkesError::Unstable { .. })
        ));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_relative_eq!(
            spectral_radius(&[vec![0.3, 0.0], vec![0.0, 0.2]]),
            0.3,
            epsilon = 1e-9
        );
        // nilpotent
        assert_eq!(spectral_radius(&[vec![0.0, 1.0], vec![0.0, 0.0]]), 0.0);
        // periodic-like: eigenvalues ±1
        assert_relative_eq!(
            spectral_radius(&[vec![0.0, 2.0], vec![0.5, 0.0]]),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn stationary_mean_solves_the_system() {
        let p = HawkesParams::new(
            vec![0.5, 0.3, 0.4],
            vec![
                vec![0.2, 0.05, 0.0],
                vec![0.0, 0.2, 0.1],
                vec![0.1, 0.0, 0.2],
            ],
        )
        .unwrap();
        let k = kernel(0.5);
        let x = stationary_mean(&p, &k).unwrap();
        let c = k.branching_factor();
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| p.a[i][j] * x[j]).sum();
            assert_relative_eq!(x[i] - c * ax, p.mu[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn branching_factor_equals_kernel_mass() {
        let k = kernel(0.5);
        let mass: f64 = (1..200).map(|t| 0.5 * (-0.5 * t as f64).exp()).sum();
        assert_relative_eq!(k.branching_factor(), mass, epsilon = 1e-12);
    }

    #[test]
    fn params_csv_round_trip() {
        let p = HawkesParams::new(
            vec![0.5, 0.3, 0.4],
            vec![
                vec![0.2, 0.0, 0.01],
                vec![0.0, 0.2, 0.0],
                vec![0.07, 0.0, 0.2],
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_params(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("mu_append,mu_extend,mu_mutate\n0.5,0.3,0.4\n"));
        let back = read_params(Cursor::new(buf)).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn fit_report_renders_key_values() {
        let r = FitReport {
            iterations: 12,
            final_ll: -34.5,
            grad_norm: 1e-9,
            converged: true,
        };
        let text = r.render();
        assert!(text.contains("iterations=12"));
        assert!(text.contains("converged=true"));
    }
}
