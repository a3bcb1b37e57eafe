use super::FactorizeError;

/// Hyperparameters shared by both decompositions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Embedding dimension d.
    pub dim: usize,
    /// ALS sweeps, or weighted-decomposition epochs.
    pub iterations: usize,
    /// Leading ALS sweeps that orthogonalize the fixed factors.
    pub ortho_iterations: usize,
    pub x_max: f64,
    pub alpha: f64,
    /// Initial per-coordinate step size of the weighted decomposition.
    pub learning_rate: f64,
    pub seed: u64,
    /// ALS stops once the fit improves by less than this between sweeps.
    pub fit_tolerance: f64,
    /// Added to the diagonal of every ALS normal-equation matrix.
    pub ridge: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            dim: 200,
            iterations: 20,
            ortho_iterations: 5,
            x_max: 10.0,
            alpha: 0.75,
            learning_rate: 0.05,
            seed: 7,
            fit_tolerance: 1e-5,
            ridge: 1e-8,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), FactorizeError> {
        let bad = |m: &str| Err(FactorizeError::InvalidConfig(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if self.ortho_iterations > self.iterations {
            return bad("ortho_iterations must not exceed iterations");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return bad("x_max must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.ridge >= 0.0 && self.fit_tolerance >= 0.0) {
            return bad("ridge and fit_tolerance must be nonnegative");
        }
        Ok(())
    }
}
