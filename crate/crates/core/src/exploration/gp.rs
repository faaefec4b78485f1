use serde::{Deserialize, Serialize};

use crate::numerics::{
    cholesky, normal, sigmoid, solve_lower, solve_upper_transposed, Matrix, SeededRng,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub lengthscale: f64,
    pub variance: f64,
    /// Added to the Gram diagonal.
    pub jitter: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: KernelKind::Rbf,
            lengthscale: 1.0,
            variance: 1.0,
            jitter: 1e-8,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0 && self.variance > 0.0 && self.jitter >= 0.0)
            || !(self.lengthscale.is_finite() && self.variance.is_finite())
        {
            return Err(Error::Config(
                "kernel lengthscale and variance must be positive".into(),
            ));
        }
        Ok(())
    }

    fn gram(&self, x: &[Vec<f64>]) -> Matrix {
        let n = x.len();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rbf_kernel(&x[i], &x[j], self);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += self.jitter;
        }
        k
    }
}

/// `s² exp(−‖x − x′‖² / 2ℓ²)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], cfg: &KernelConfig) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    cfg.variance * (-d2 / (2.0 * cfg.lengthscale * cfg.lengthscale)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Likelihood {
    /// Clicks out of trials per distinct input.
    Bernoulli,
    /// Real targets with observation noise variance.
    Gaussian { noise: f64 },
}

/// Laplace-approximated posterior over latent logits at the distinct
/// training inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GpState {
    pub kernel: KernelConfig,
    pub likelihood: Likelihood,
    pub x: Vec<Vec<f64>>,
    /// Bernoulli: trials and successes per input. Gaussian: 1 and target.
    pub trials: Vec<f64>,
    pub targets: Vec<f64>,
    pub f_hat: Vec<f64>,
    /// `∇ log p(y | f)` at the mode.
    grad: Vec<f64>,
    w_sqrt: Vec<f64>,
    /// Cholesky factor of `I + W^½ K W^½`.
    l: Matrix,
    pub iterations: usize,
}

fn lik_terms(lik: Likelihood, n: f64, y: f64, f: f64) -> (f64, f64, f64) {
    match lik {
        Likelihood::Bernoulli => {
            let p = sigmoid(f);
            let ll = y * f - n * crate::numerics::softplus(f);
            (ll, y - n * p, n * p * (1.0 - p))
        }
        Likelihood::Gaussian { noise } => {
            let r = y - f;
            (-0.5 * r * r / noise, r / noise, 1.0 / noise)
        }
    }
}

fn fit(
    kernel: &KernelConfig,
    lik: Likelihood,
    x: Vec<Vec<f64>>,
    trials: Vec<f64>,
    targets: Vec<f64>,
) -> Result<GpState> {
    kernel.validate()?;
    let n = x.len();
    if let Some(d) = x.first().map(|v| v.len()) {
        if x.iter().any(|v| v.len() != d) {
            return Err(Error::Input("GP inputs of unequal dimension".into()));
        }
    }
    let k = kernel.gram(&x);
    let mut f = vec![0.0; n];
    let mut iterations = 0;
    let factor = |f: &[f64]| -> Result<(Vec<f64>, Vec<f64>, Matrix)> {
        let mut grad = vec![0.0; n];
        let mut ws = vec![0.0; n];
        for i in 0..n {
            let (_, g, w) = lik_terms(lik, trials[i], targets[i], f[i]);
            grad[i] = g;
            ws[i] = w.max(0.0).sqrt();
        }
        let mut b = Matrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] += ws[i] * k[(i, j)] * ws[j];
            }
        }
        Ok((grad, ws, cholesky(&b)?))
    };
    let (mut grad, mut ws, mut l) = factor(&f)?;
    for it in 1..=100 {
        iterations = it;
        // b = W f + ∇;  a = b − W^½ L⁻ᵀ L⁻¹ W^½ K b;  f ← K a
        let b: Vec<f64> = (0..n).map(|i| ws[i] * ws[i] * f[i] + grad[i]).collect();
        let kb = k.matvec(&b);
        let c: Vec<f64> = (0..n).map(|i| ws[i] * kb[i]).collect();
        let s = solve_upper_transposed(&l, &solve_lower(&l, &c));
        let a: Vec<f64> = (0..n).map(|i| b[i] - ws[i] * s[i]).collect();
        let f_new = k.matvec(&a);
        let step = f_new
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = f_new;
        (grad, ws, l) = factor(&f)?;
        if !step.is_finite() {
            return Err(Error::Numeric("Laplace iterations diverged".into()));
        }
        if step < 1e-8 {
            break;
        }
    }
    Ok(GpState {
        kernel: kernel.clone(),
        likelihood: lik,
        x,
        trials,
        targets,
        f_hat: f,
        grad,
        w_sqrt: ws,
        l,
        iterations,
    })
}

/// Bernoulli-likelihood GP on click labels. Identical inputs are pooled
/// into one binomial observation, which keeps the posterior independent
/// of data order. No data gives the prior.
pub fn gp_fit(x: &[Vec<f64>], y: &[u8], kernel: &KernelConfig) -> Result<GpState> {
    if x.len() != y.len() {
        return Err(Error::Input("inputs and labels differ in length".into()));
    }
    let mut keys: Vec<(Vec<u64>, usize)> = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v.iter().map(|c| c.to_bits()).collect(), i))
        .collect();
    keys.sort();
    let (mut xs, mut trials, mut succ) = (Vec::new(), Vec::new(), Vec::new());
    let mut last: Option<&Vec<u64>> = None;
    for (key, i) in &keys {
        if last != Some(key) {
            xs.push(x[*i].clone());
            trials.push(0.0);
            succ.push(0.0);
            last = Some(key);
        }
        *trials.last_mut().unwrap() += 1.0;
        *succ.last_mut().unwrap() += y[*i] as f64;
    }
    fit(kernel, Likelihood::Bernoulli, xs, trials, succ)
}

/// Pre-aggregated binomial counts per distinct input.
pub(crate) fn gp_fit_counts(
    x: Vec<Vec<f64>>,
    trials: Vec<f64>,
    successes: Vec<f64>,
    kernel: &KernelConfig,
) -> Result<GpState> {
    fit(kernel, Likelihood::Bernoulli, x, trials, successes)
}

/// Gaussian-likelihood regression through the same Newton machinery; the
/// mode is the closed-form posterior mean.
pub fn gp_fit_gaussian(
    x: &[Vec<f64>],
    y: &[f64],
    noise: f64,
    kernel: &KernelConfig,
) -> Result<GpState> {
    if x.len() != y.len() {
        return Err(Error::Input("inputs and targets differ in length".into()));
    }
    if !(noise > 0.0) {
        return Err(Error::Config("noise variance must be positive".into()));
    }
    fit(
        kernel,
        Likelihood::Gaussian { noise },
        x.to_vec(),
        vec![1.0; y.len()],
        y.to_vec(),
    )
}

impl GpState {
    /// Predictive mean and variance of the latent logit at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let prior = rbf_kernel(x, x, &self.kernel);
        if self.x.is_empty() {
            return (0.0, prior);
        }
        let ks: Vec<f64> = self
            .x
            .iter()
            .map(|xi| rbf_kernel(xi, x, &self.kernel))
            .collect();
        let mean: f64 = ks.iter().zip(&self.grad).map(|(a, b)| a * b).sum();
        let wk: Vec<f64> = ks.iter().zip(&self.w_sqrt).map(|(a, b)| a * b).collect();
        let v = solve_lower(&self.l, &wk);
        let var = prior - v.iter().map(|a| a * a).sum::<f64>();
        (mean, var.clamp(f64::MIN_POSITIVE, prior))
    }

    /// Euclidean norm of `∇ log p(f | y)` at the mode.
    pub fn mode_gradient_norm(&self) -> Result<f64> {
        let k = self.kernel.gram(&self.x);
        let l = cholesky(&k)?;
        let kinv_f = solve_upper_transposed(&l, &solve_lower(&l, &self.f_hat));
        Ok(self
            .grad
            .iter()
            .zip(&kinv_f)
            .map(|(g, a)| (g - a).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    pub fn log_likelihood(&self) -> f64 {
        (0..self.x.len())
            .map(|i| {
                lik_terms(
                    self.likelihood,
                    self.trials[i],
                    self.targets[i],
                    self.f_hat[i],
                )
                .0
            })
            .sum()
    }
}

pub fn gp_predict(state: &GpState, x: &[f64]) -> (f64, f64) {
    state.predict(x)
}

/// `σ(f̂)` with `f̂ ~ N(μ(x), Σ(x))`.
pub fn thompson_pctr(state: &GpState, x: &[f64], rng: &mut SeededRng) -> f64 {
    let (mu, var) = state.predict(x);
    sigmoid(mu + var.sqrt() * normal(rng))
}
