//! Dual-averaging step-size adaptation (Nesterov primal-dual averaging as
//! used for MCMC warmup).

/// Tracks a running step size that is pushed toward a target acceptance
/// statistic, plus the averaged iterate used once adaptation ends.
#[derive(Debug, Clone)]
pub struct DualAverage {
    log_step: f64,
    log_step_averaged: f64,
    hbar: f64,
    mu: f64,
    count: u64,
    target: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
}

impl DualAverage {
    pub fn new(initial_step: f64, target: f64) -> Self {
        DualAverage {
            log_step: initial_step.ln(),
            log_step_averaged: initial_step.ln(),
            hbar: 0.0,
            // shrink toward a step size ten times the initial guess
            mu: (10.0 * initial_step).ln(),
            count: 1,
            target,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
        }
    }

    /// Feeds one transition's acceptance statistic.
    pub fn advance(&mut self, accept_stat: f64) {
        let t = self.count as f64;
        let w = 1.0 / (t + self.t0);
        self.hbar = (1.0 - w) * self.hbar + w * (self.target - accept_stat);
        self.log_step = self.mu - self.hbar * t.sqrt() / self.gamma;
        let eta = t.powf(-self.kappa);
        self.log_step_averaged = eta * self.log_step + (1.0 - eta) * self.log_step_averaged;
        self.count += 1;
    }

    /// Step size to use for the next adaptation transition.
    pub fn current(&self) -> f64 {
        self.log_step.exp()
    }

    /// Averaged step size to freeze when adaptation ends.
    pub fn adapted(&self) -> f64 {
        self.log_step_averaged.exp()
    }
}
