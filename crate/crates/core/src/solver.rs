//! ADMM solver for low-rank sparse self-expressive representations.
//!
//! Minimizes `1/2 ||X - XC||_F^2 + lambda f(C) + (1 - lambda) g(C)` subject to
//! `diag(C) = 0`, where `f` acts on the singular values of `C` and `g` acts
//! entrywise. Each iteration:
//!
//! ```text
//! J      = (X^T X + mu I)^{-1} (X^T X + mu C - Lambda)
//! C_f    = U prox_f(Sigma, lambda / mu) V^T,  U Sigma V^T = J + Lambda / mu
//! C_g    = prox_g(J + Lambda / mu, (1 - lambda) / mu)
//! C      = lambda C_f + (1 - lambda) C_g          (both with zeroed diagonal)
//! Lambda = Lambda + mu (J - C)
//! mu     = min(rho mu, mu_max)
//! ```
//!
//! and stops once `max |J - C| <= eps` or after `k_max` iterations.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, EigPairs};
use crate::penalty::{eval_matrix, eval_singular, PenaltySpec};
use crate::prox::{NumericProxSettings, ProxRequest, ScalarProx};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the low-rank term; the sparse term gets `1 - lambda`.
    pub lambda: f64,
    pub penalty_f: PenaltySpec,
    pub penalty_g: PenaltySpec,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub eps: f64,
    pub k_max: usize,
    pub prox_settings: NumericProxSettings,
    /// Evaluate the augmented Lagrangian every iteration (one extra SVD).
    pub record_lagrangian: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64, penalty_f: PenaltySpec, penalty_g: PenaltySpec) -> Self {
        Self {
            lambda,
            penalty_f,
            penalty_g,
            mu0: 3.0,
            rho: 3.0,
            mu_max: 1e6,
            eps: 1e-4,
            k_max: 100,
            prox_settings: NumericProxSettings::default(),
            record_lagrangian: true,
        }
    }

    /// Same penalty for the low-rank and sparse terms.
    pub fn with_penalty(lambda: f64, penalty: PenaltySpec) -> Self {
        Self::new(lambda, penalty, penalty)
    }

    pub fn mu0(mut self, mu0: f64) -> Self {
        self.mu0 = mu0;
        self
    }

    pub fn rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn tau(&self) -> f64 {
        1.0 - self.lambda
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return invalid(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        self.penalty_f.validate()?;
        self.penalty_g.validate()?;
        self.prox_settings.validate()?;
        if !(self.mu0.is_finite() && self.mu0 > 0.0) {
            return invalid(format!("mu0 must be positive, got {}", self.mu0));
        }
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return invalid(format!("rho must exceed 1, got {}", self.rho));
        }
        if !(self.mu_max.is_finite() && self.mu_max >= self.mu0) {
            return invalid(format!(
                "mu_max ({}) must be finite and >= mu0 ({})",
                self.mu_max, self.mu0
            ));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return invalid(format!("eps must be positive, got {}", self.eps));
        }
        if self.k_max == 0 {
            return invalid("k_max must be at least 1");
        }
        Ok(())
    }
}

/// Output of [`lrssc_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub c: DMatrix<f64>,
    pub iterations: usize,
    /// `max |J - C|` after each iteration.
    pub residual_history: Vec<f64>,
    /// Augmented Lagrangian after each iteration; empty when not recorded.
    pub lagrangian_history: Vec<f64>,
    pub converged: bool,
}

/// Iterates of the ADMM scheme.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub j: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub mu: f64,
    pub k: usize,
}

impl SolverState {
    /// `J = C = Lambda = 0`, `mu = mu0`.
    pub fn zeros(n: usize, mu0: f64) -> Self {
        Self {
            j: DMatrix::zeros(n, n),
            c: DMatrix::zeros(n, n),
            lambda: DMatrix::zeros(n, n),
            mu: mu0,
            k: 0,
        }
    }
}

/// Which proximal branches an iteration evaluates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Branches {
    pub lowrank: bool,
    pub sparse: bool,
}

pub fn lrssc_solve(x: &DMatrix<f64>, config: &SolverConfig) -> Result<SolverResult> {
    let branches = Branches {
        lowrank: config.lambda > 0.0,
        sparse: config.lambda < 1.0,
    };
    solve_with(x, config, branches)
}

pub(crate) fn solve_with(
    x: &DMatrix<f64>,
    config: &SolverConfig,
    branches: Branches,
) -> Result<SolverResult> {
    config.validate()?;
    let n = x.ncols();
    if n < 2 {
        return invalid(format!("need at least 2 samples, got {n}"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("data matrix has non-finite entries");
    }

    let gram = x.transpose() * x;
    let gram_eig = linalg::sym_eig(&gram)?;
    let mut state = SolverState::zeros(n, config.mu0);
    let mut residual_history = Vec::new();
    let mut lagrangian_history = Vec::new();
    let mut converged = false;

    while state.k < config.k_max {
        let mu = state.mu;
        let j = update_j(&gram, &gram_eig, &state.c, &state.lambda, mu)?;
        let c_f = branches
            .lowrank
            .then(|| {
                update_c_lowrank(
                    &j,
                    &state.lambda,
                    mu,
                    &config.penalty_f,
                    config.lambda,
                    &config.prox_settings,
                )
            })
            .transpose()?;
        let c_g = branches
            .sparse
            .then(|| {
                update_c_sparse(
                    &j,
                    &state.lambda,
                    mu,
                    &config.penalty_g,
                    config.tau(),
                    &config.prox_settings,
                )
            })
            .transpose()?;
        let c = match (c_f, c_g) {
            (Some(f), Some(g)) => combine_proximal_average(&f, &g, config.lambda)?,
            (Some(f), None) => f,
            (None, Some(g)) => g,
            (None, None) => unreachable!("at least one branch is active"),
        };
        let dual = update_dual(&state.lambda, mu, &j, &c);

        state.k += 1;
        for (what, m) in [("J", &j), ("C", &c), ("Lambda", &dual)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: state.k,
                    what: format!("{what} has non-finite entries (mu = {mu})"),
                });
            }
        }

        let residual = (&j - &c).amax();
        residual_history.push(residual);
        if config.record_lagrangian {
            lagrangian_history.push(augmented_lagrangian(
                x,
                &j,
                &c,
                &dual,
                mu,
                &config.penalty_f,
                &config.penalty_g,
                config.lambda,
            )?);
        }

        state.j = j;
        state.c = c;
        state.lambda = dual;
        state.mu = update_mu(mu, config.rho, config.mu_max);

        if residual <= config.eps {
            converged = true;
            break;
        }
    }

    Ok(SolverResult {
        c: state.c,
        iterations: state.k,
        residual_history,
        lagrangian_history,
        converged,
    })
}

/// `J = (X^T X + mu I)^{-1} (X^T X + mu C - Lambda)`.
pub fn update_j(
    gram: &DMatrix<f64>,
    gram_eig: &EigPairs,
    c: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    mu: f64,
) -> Result<DMatrix<f64>> {
    if gram.shape() != c.shape() || c.shape() != lambda.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", gram.shape()),
            found: format!("C {:?}, Lambda {:?}", c.shape(), lambda.shape()),
        });
    }
    let rhs = gram + c * mu - lambda;
    linalg::solve_shifted_gram(gram_eig, mu, &rhs)
}

fn zero_diagonal(m: &mut DMatrix<f64>) {
    m.fill_diagonal(0.0);
}

/// Singular value prox of `m` with the given weight, diagonal untouched.
pub fn lowrank_prox(
    m: &DMatrix<f64>,
    penalty: &PenaltySpec,
    weight: f64,
    settings: &NumericProxSettings,
) -> Result<DMatrix<f64>> {
    ProxRequest::new(*penalty, 0.0, weight).validate()?;
    let f = linalg::svd(m)?;
    let prox = ScalarProx::new(penalty, weight, settings)?;
    let shrunk: Vec<f64> = f
        .sigma
        .iter()
        .map(|&s| prox.apply(s))
        .collect::<Result<_>>()?;
    let rank = shrunk.iter().take_while(|&&s| s > 0.0).count();
    if rank == 0 {
        return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    // sigma is sorted and the prox is monotone, so the support is a prefix
    let mut u = f.u.columns(0, rank).into_owned();
    for (j, mut col) in u.column_iter_mut().enumerate() {
        col *= shrunk[j];
    }
    Ok(u * f.vt.rows(0, rank))
}

/// Low-rank step: prox of the singular values of `J + Lambda / mu` with
/// weight `lambda_w / mu`, then the diagonal is zeroed.
pub fn update_c_lowrank(
    j: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    mu: f64,
    penalty_f: &PenaltySpec,
    lambda_w: f64,
    settings: &NumericProxSettings,
) -> Result<DMatrix<f64>> {
    let m = j + lambda / mu;
    let mut c = lowrank_prox(&m, penalty_f, lambda_w / mu, settings)?;
    zero_diagonal(&mut c);
    Ok(c)
}

/// Sparse step: entrywise prox of `J + Lambda / mu` with weight
/// `tau_w / mu`, then the diagonal is zeroed.
pub fn update_c_sparse(
    j: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    mu: f64,
    penalty_g: &PenaltySpec,
    tau_w: f64,
    settings: &NumericProxSettings,
) -> Result<DMatrix<f64>> {
    let m = j + lambda / mu;
    let mut c = crate::prox::prox_elementwise(penalty_g, &m, tau_w / mu, settings)?;
    zero_diagonal(&mut c);
    Ok(c)
}

/// `lambda C_f + (1 - lambda) C_g`; the endpoints return the matching input unchanged.
pub fn combine_proximal_average(
    c_f: &DMatrix<f64>,
    c_g: &DMatrix<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if c_f.shape() != c_g.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", c_f.shape()),
            found: format!("{:?}", c_g.shape()),
        });
    }
    if lambda == 1.0 {
        return Ok(c_f.clone());
    }
    if lambda == 0.0 {
        return Ok(c_g.clone());
    }
    Ok(c_f * lambda + c_g * (1.0 - lambda))
}

/// `Lambda + mu (J - C)`.
pub fn update_dual(
    lambda: &DMatrix<f64>,
    mu: f64,
    j: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> DMatrix<f64> {
    lambda + (j - c) * mu
}

/// `min(rho mu, mu_max)`.
pub fn update_mu(mu: f64, rho: f64, mu_max: f64) -> f64 {
    (rho * mu).min(mu_max)
}

/// Augmented Lagrangian
/// `1/2 ||X - XJ||^2 + lambda f(C) + tau g(C) + mu/2 ||J - C||^2 + <Lambda, J - C>`
/// with `diag(C)` zeroed first.
#[allow(clippy::too_many_arguments)]
pub fn augmented_lagrangian(
    x: &DMatrix<f64>,
    j: &DMatrix<f64>,
    c: &DMatrix<f64>,
    lambda_dual: &DMatrix<f64>,
    mu: f64,
    penalty_f: &PenaltySpec,
    penalty_g: &PenaltySpec,
    lambda: f64,
) -> Result<f64> {
    let mut c = c.clone();
    zero_diagonal(&mut c);
    let fit = 0.5 * (x - x * j).norm_squared();
    let tau = 1.0 - lambda;
    let low = if lambda > 0.0 {
        let sigma: DVector<f64> = linalg::svd(&c)?.sigma;
        lambda * eval_singular(penalty_f, sigma.as_slice())?
    } else {
        0.0
    };
    let sparse = if tau > 0.0 {
        tau * eval_matrix(penalty_g, &c)?
    } else {
        0.0
    };
    let diff = j - &c;
    Ok(fit + low + sparse + 0.5 * mu * diff.norm_squared() + lambda_dual.dot(&diff))
}
