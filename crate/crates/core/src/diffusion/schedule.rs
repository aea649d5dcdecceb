use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::motion::MotionSequence;

/// Variance of the reverse step `x_{t-1} ~ N(mu_t, var_t I)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorVariance {
    /// `1 - alpha_t`.
    #[default]
    Beta,
    /// `beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)`.
    Tilde,
}

/// Discrete noise schedule indexed by `t = 0..T`; step `t` has
/// `alpha_bar_t = prod_{s <= t} alpha_s` and `alpha_bar_{-1} = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    #[serde(default)]
    variance: PosteriorVariance,
}

pub const DEFAULT_STEPS: usize = 1000;
const COSINE_OFFSET: f64 = 0.008;
const MAX_BETA: f64 = 0.999;

impl NoiseSchedule {
    /// Cosine schedule: `alpha_bar(t) = f(t) / f(0)` with
    /// `f(t) = cos^2(((t / T) + s) / (1 + s) * pi / 2)`, betas clipped at 0.999.
    pub fn cosine(steps: usize) -> Self {
        assert!(steps >= 1, "schedule needs at least one step");
        let f = |t: f64| {
            ((t / steps as f64 + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * std::f64::consts::FRAC_PI_2)
                .cos()
                .powi(2)
        };
        let alpha = (0..steps)
            .map(|t| {
                let beta = (1.0 - f(t as f64 + 1.0) / f(t as f64)).clamp(1e-12, MAX_BETA);
                1.0 - beta
            })
            .collect();
        Self::from_alphas(alpha).expect("cosine schedule is valid")
    }

    pub fn from_alphas(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("schedule needs at least one step".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidArgument(format!("alpha {a} outside (0, 1)")));
        }
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        Ok(Self {
            alpha,
            alpha_bar,
            variance: PosteriorVariance::Beta,
        })
    }

    pub fn with_variance(mut self, variance: PosteriorVariance) -> Self {
        self.variance = variance;
        self
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn variance_kind(&self) -> PosteriorVariance {
        self.variance
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn beta(&self, t: usize) -> f64 {
        1.0 - self.alpha[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn alpha_bar_prev(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t >= self.steps() {
            Err(Error::TimestepOutOfRange { t, steps: self.steps() })
        } else {
            Ok(())
        }
    }

    /// Coefficients `(on x0, on x_t)` of the posterior mean at step `t`.
    pub fn posterior_coefficients(&self, t: usize) -> (f64, f64) {
        posterior_coefficients(self.alpha(t), self.alpha_bar_prev(t))
    }

    pub fn posterior_variance(&self, t: usize) -> f64 {
        match self.variance {
            PosteriorVariance::Beta => self.beta(t),
            PosteriorVariance::Tilde => {
                self.beta(t) * (1.0 - self.alpha_bar_prev(t)) / (1.0 - self.alpha_bar(t))
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            alpha: Vec<f64>,
            #[serde(default)]
            variance: PosteriorVariance,
        }
        let raw: Raw = serde_json::from_str(text)?;
        Ok(Self::from_alphas(raw.alpha)?.with_variance(raw.variance))
    }

    /// Hex SHA-256 of the alphas and variance kind.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for a in &self.alpha {
            h.update(a.to_le_bytes());
        }
        h.update([self.variance as u8]);
        hex::encode(h.finalize())
    }
}

/// Posterior-mean coefficients from `alpha_t` and `alpha_bar_{t-1}`:
/// `sqrt(alpha_bar_{t-1}) beta_t / (1 - alpha_bar_t)` on x0 and
/// `sqrt(alpha_t) (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)` on x_t.
/// With `alpha_t = 1` the step is the identity on x_t.
pub fn posterior_coefficients(alpha_t: f64, alpha_bar_prev: f64) -> (f64, f64) {
    let beta = 1.0 - alpha_t;
    let alpha_bar = alpha_bar_prev * alpha_t;
    let denom = 1.0 - alpha_bar;
    if beta == 0.0 {
        return (0.0, 1.0);
    }
    (
        alpha_bar_prev.sqrt() * beta / denom,
        alpha_t.sqrt() * (1.0 - alpha_bar_prev) / denom,
    )
}

/// `sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) noise`.
pub fn q_sample_with(x0: &MotionSequence, noise: &MotionSequence, alpha_bar: f64) -> Result<MotionSequence> {
    check_shapes(x0, noise)?;
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    let data = x0
        .as_slice()
        .iter()
        .zip(noise.as_slice())
        .map(|(x, e)| a * x + b * e)
        .collect();
    MotionSequence::new(x0.frames(), x0.dim(), data)
}

pub fn q_sample(
    x0: &MotionSequence,
    t: usize,
    noise: &MotionSequence,
    sched: &NoiseSchedule,
) -> Result<MotionSequence> {
    sched.check_step(t)?;
    q_sample_with(x0, noise, sched.alpha_bar(t))
}

pub fn posterior_mean(
    x0_hat: &MotionSequence,
    x_t: &MotionSequence,
    t: usize,
    sched: &NoiseSchedule,
) -> Result<MotionSequence> {
    sched.check_step(t)?;
    if t == 0 {
        return Err(Error::InvalidArgument("no posterior step at t = 0".into()));
    }
    check_shapes(x0_hat, x_t)?;
    let (c0, ct) = sched.posterior_coefficients(t);
    let data = x0_hat
        .as_slice()
        .iter()
        .zip(x_t.as_slice())
        .map(|(a, b)| c0 * a + ct * b)
        .collect();
    MotionSequence::new(x_t.frames(), x_t.dim(), data)
}

fn check_shapes(a: &MotionSequence, b: &MotionSequence) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch {
            what: "motion element count",
            expected: a.frames() * a.dim(),
            got: b.frames() * b.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_invariants() {
        for steps in [1, 10, 100, 1000] {
            let s = NoiseSchedule::cosine(steps);
            assert_eq!(s.steps(), steps);
            for t in 0..steps {
                assert!(s.alpha(t) > 0.0 && s.alpha(t) < 1.0);
                if t > 0 {
                    assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
                }
            }
            if steps >= 10 {
                assert!(s.alpha_bar(steps - 1) < 1e-4);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let s = NoiseSchedule::cosine(50).with_variance(PosteriorVariance::Tilde);
        let back = NoiseSchedule::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        assert_ne!(NoiseSchedule::cosine(50).hash(), s.hash());
    }

    #[test]
    fn identity_step() {
        assert_eq!(posterior_coefficients(1.0, 0.3), (0.0, 1.0));
    }

    #[test]
    fn t_zero_has_no_posterior() {
        let s = NoiseSchedule::cosine(10);
        let x = MotionSequence::zeros(2, 3);
        assert!(posterior_mean(&x, &x, 0, &s).is_err());
        assert!(matches!(
            q_sample(&x, 10, &x, &s),
            Err(Error::TimestepOutOfRange { t: 10, steps: 10 })
        ));
    }
}
