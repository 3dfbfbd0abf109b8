//! Random traffic models: beta-distributed link occupations and scaled-beta
//! instantaneous hop delays.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::graph::{Link, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("beta parameters must be positive and finite (alpha={alpha}, beta={beta})")]
    InvalidParams { alpha: f64, beta: f64 },
    #[error("x = {0} lies outside [0, 1]")]
    Domain(f64),
}

/// Shape parameters of a Beta(α, β) law on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub const UNIFORM: BetaParams = BetaParams {
        alpha: 1.0,
        beta: 1.0,
    };
    pub const LOW_LOAD: BetaParams = BetaParams {
        alpha: 1.0,
        beta: 3.0,
    };
    pub const HEAVY_LOAD: BetaParams = BetaParams {
        alpha: 3.0,
        beta: 1.0,
    };
    /// Bell-shaped, centred at 0.5.
    pub const BELL: BetaParams = BetaParams {
        alpha: 5.0,
        beta: 5.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Result<Self, StochasticError> {
        let p = BetaParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), StochasticError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.alpha) && ok(self.beta) {
            Ok(())
        } else {
            Err(StochasticError::InvalidParams {
                alpha: self.alpha,
                beta: self.beta,
            })
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }
}

/// Density `Γ(α+β)/(Γ(α)Γ(β)) · x^(α−1) · (1−x)^(β−1)`.
///
/// At the endpoints the power terms follow `0^0 = 1`, so the density is 0
/// at `x = 0` when α > 1, finite when α = 1 and infinite when α < 1
/// (likewise at `x = 1` with β).
pub fn beta_pdf(x: f64, params: BetaParams) -> Result<f64, StochasticError> {
    params.validate()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(StochasticError::Domain(x));
    }
    let BetaParams { alpha, beta } = params;
    let log_norm = ln_gamma(alpha + beta) - ln_gamma(alpha) - ln_gamma(beta);
    if x > 0.0 && x < 1.0 {
        let log_kernel = (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln();
        return Ok((log_norm + log_kernel).exp());
    }
    Ok(log_norm.exp() * x.powf(alpha - 1.0) * (1.0 - x).powf(beta - 1.0))
}

/// Draws from Beta(α, β) as `G1 / (G1 + G2)` with independent gamma
/// variates of shapes α and β.
pub fn sample_beta<R: Rng + ?Sized>(params: BetaParams, rng: &mut R) -> f64 {
    let g1 = Gamma::new(params.alpha, 1.0).expect("validated shape");
    let g2 = Gamma::new(params.beta, 1.0).expect("validated shape");
    loop {
        let a = g1.sample(rng);
        let b = g2.sample(rng);
        let total = a + b;
        // Both variates can underflow to 0 for tiny shapes.
        if total > 0.0 {
            return (a / total).clamp(0.0, 1.0);
        }
    }
}

/// Assigns every up link an independent Beta(α, β) occupation. Links in
/// fault keep their current occupation.
pub fn sample_occupations<R: Rng + ?Sized>(
    topology: &mut Topology,
    params: BetaParams,
    rng: &mut R,
) -> Result<(), StochasticError> {
    params.validate()?;
    for link in topology.links_mut().filter(|l| l.up) {
        link.occupation = sample_beta(params, rng);
    }
    Ok(())
}

/// Instantaneous hop delay `2·d̄·X`, `X ~ Beta(α, β)`.
///
/// For symmetric parameters the mean equals the link's mean delay and the
/// support is `[0, 2·d̄]`.
pub fn sample_instantaneous_delay<R: Rng + ?Sized>(
    link: &Link,
    params: BetaParams,
    rng: &mut R,
) -> f64 {
    2.0 * link.mean_delay_ms * sample_beta(params, rng)
}

/// Generator for one Monte Carlo trial. Each trial gets its own ChaCha
/// stream keyed by the trial index, so results do not depend on the order
/// in which trials run.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
