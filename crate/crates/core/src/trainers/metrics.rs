use serde::{Deserialize, Serialize};

/// One logged row of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub iteration: u64,
    pub episodic_return: f64,
    pub safety_rate: f64,
    pub violations: u64,
    pub safe_set_empty_events: u64,
    pub wall_ms: u64,
    pub seed: u64,
    /// Environment steps behind `safety_rate`.
    pub steps: u64,
}

/// Counts of visited states and how many of them were unsafe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SafetyTally {
    pub steps: u64,
    pub violations: u64,
    pub empty_events: u64,
}

impl SafetyTally {
    pub fn record(&mut self, safe: bool) {
        self.steps += 1;
        if !safe {
            self.violations += 1;
        }
    }

    /// `1 − violations / steps`, or 1 when nothing was recorded.
    pub fn safety_rate(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            1.0 - self.violations as f64 / self.steps as f64
        }
    }

    pub fn take(&mut self) -> SafetyTally {
        std::mem::take(self)
    }
}
