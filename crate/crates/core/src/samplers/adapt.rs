use serde::{Deserialize, Serialize};

/// Robbins–Monro update on the log scale:
/// `log σ ← log σ + t^{−decay}·(1[accepted] − target)`.
pub fn adapt_scale(accepted: bool, scale: f64, target_acceptance: f64, t: usize, decay: f64) -> f64 {
    let t = t.max(1) as f64;
    let a = if accepted { 1.0 } else { 0.0 };
    (scale.ln() + t.powf(-decay) * (a - target_acceptance)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationConfig {
    pub enabled: bool,
    /// Overrides the kernel's default target acceptance rate.
    pub target_acceptance: Option<f64>,
    /// Fraction of iterations during which the scale adapts; it is frozen
    /// afterwards and diagnostics only use the remaining states.
    pub burn_in_fraction: f64,
    pub decay: f64,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            target_acceptance: None,
            burn_in_fraction: 0.5,
            decay: 0.6,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_updates() {
        let mut up = 1.0;
        let mut down = 1.0;
        for t in 1..50 {
            let nu = adapt_scale(true, up, 0.234, t, 0.6);
            assert!(nu > up);
            up = nu;
            let nd = adapt_scale(false, down, 0.234, t, 0.6);
            assert!(nd < down);
            down = nd;
        }
    }

    #[test]
    fn first_step_size() {
        let s = adapt_scale(true, 1.0, 0.5, 1, 0.6);
        assert!((s - 0.5f64.exp()).abs() < 1e-15);
    }
}
