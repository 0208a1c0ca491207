use super::{Curvature, GradientOracle, Potential};
use crate::error::{Error, Result};

/// Stochastic volatility posterior over `(μ, φ, log σ, η₁..ηₙ)`, `d = n + 3`.
///
/// Latent log-volatilities follow
/// `h₁ = μ + σ/(1 − tanh(φ)²)·η₁` and `h_t = tanh(φ)(h_{t−1} − μ) + σ η_t`,
/// observations are `yᵢ ~ N(0, exp(hᵢ))`. Priors: `μ ~ N(0, 10)`,
/// `φ ~ N(0, 1)`, `log σ ~ N(0, 1)`, `ηᵢ ~ N(0, 1)`. Parameters are sampled
/// in these unconstrained coordinates.
#[derive(Debug, Clone)]
pub struct StochasticVolatilityTarget {
    y: Vec<f64>,
}

pub(crate) const MU_PRIOR_VARIANCE: f64 = 10.0;

/// Log-volatility path for the given parameters.
pub(crate) fn volatility_path(mu: f64, phi_raw: f64, log_sigma: f64, eta: &[f64], h: &mut Vec<f64>) {
    let rho = phi_raw.tanh();
    let sigma = log_sigma.exp();
    h.clear();
    let mut prev = mu + sigma / (1.0 - rho * rho) * eta[0];
    h.push(prev);
    for &e in &eta[1..] {
        prev = rho * (prev - mu) + sigma * e;
        h.push(prev);
    }
}

impl StochasticVolatilityTarget {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::InvalidConfig("need at least two observations".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("observations must be finite".into()));
        }
        Ok(Self { y })
    }

    pub fn observations(&self) -> &[f64] {
        &self.y
    }
}

impl Potential for StochasticVolatilityTarget {
    fn dim(&self) -> usize {
        self.y.len() + 3
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (mu, phi_raw, log_sigma) = (x[0], x[1], x[2]);
        let eta = &x[3..];
        let rho = phi_raw.tanh();
        let sigma = log_sigma.exp();

        let mut u = mu * mu / (2.0 * MU_PRIOR_VARIANCE)
            + 0.5 * phi_raw * phi_raw
            + 0.5 * log_sigma * log_sigma;
        let mut h = mu + sigma / (1.0 - rho * rho) * eta[0];
        for (t, (&yt, &et)) in self.y.iter().zip(eta).enumerate() {
            if t > 0 {
                h = rho * (h - mu) + sigma * et;
            }
            u += 0.5 * et * et + 0.5 * h + 0.5 * yt * yt * (-h).exp();
        }
        u
    }

    fn curvature(&self) -> Option<Curvature> {
        None
    }
}

impl GradientOracle for StochasticVolatilityTarget {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.y.len();
        let (mu, phi_raw, log_sigma) = (x[0], x[1], x[2]);
        let eta = &x[3..];
        let rho = phi_raw.tanh();
        let sigma = log_sigma.exp();
        let one_minus = 1.0 - rho * rho;

        let mut h = Vec::with_capacity(n);
        volatility_path(mu, phi_raw, log_sigma, eta, &mut h);

        // adjoint of U with respect to h_t, accumulated backwards through the recursion
        let mut adj = vec![0.0; n];
        let mut carry = 0.0;
        for t in (0..n).rev() {
            let local = 0.5 - 0.5 * self.y[t] * self.y[t] * (-h[t]).exp();
            carry = local + rho * carry;
            adj[t] = carry;
        }

        let mut g = vec![0.0; n + 3];
        // μ
        g[0] = mu / MU_PRIOR_VARIANCE + adj[0] - rho * adj[1..].iter().sum::<f64>();
        // φ through ρ = tanh(φ), dρ/dφ = 1 − ρ²
        let mut d_rho = adj[0] * sigma * eta[0] * 2.0 * rho / (one_minus * one_minus);
        for t in 1..n {
            d_rho += adj[t] * (h[t - 1] - mu);
        }
        g[1] = phi_raw + d_rho * one_minus;
        // log σ
        let mut d_ls = adj[0] * sigma / one_minus * eta[0];
        for t in 1..n {
            d_ls += adj[t] * sigma * eta[t];
        }
        g[2] = log_sigma + d_ls;
        // η
        g[3] = eta[0] + adj[0] * sigma / one_minus;
        for t in 1..n {
            g[3 + t] = eta[t] + adj[t] * sigma;
        }
        Ok(g)
    }
}
