use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the driving-term coefficient `gamma(t)` evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScheduleMode {
    /// `gamma = 1` throughout.
    Vanilla,
    /// Linear ramps over periods `T_0, floor(tau T_0), ...`; once a period
    /// would be shorter than `t_min` the ramp stops and `gamma = 1`.
    Annealed { t0: usize, tau: f64, t_min: usize },
    /// Fixed-period ramp repeated forever.
    Cyclical { period: usize },
    /// Constant `gamma`, e.g. `0` for pure repulsion.
    Frozen { gamma: f64 },
}

impl ScheduleMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScheduleMode::Vanilla => Ok(()),
            ScheduleMode::Annealed { t0, tau, t_min } => {
                if t0 < 1 || t_min < 1 {
                    return Err(Error::Config(format!(
                        "annealing needs t0 >= 1 and t_min >= 1 (got {t0}, {t_min})"
                    )));
                }
                if !(tau > 0.0 && tau < 1.0) {
                    return Err(Error::Config(format!("annealing tau must lie in (0, 1), got {tau}")));
                }
                Ok(())
            }
            ScheduleMode::Cyclical { period } => {
                if period < 1 {
                    return Err(Error::Config("cyclical period must be >= 1".into()));
                }
                Ok(())
            }
            ScheduleMode::Frozen { gamma } => {
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::Config(format!("frozen gamma must lie in [0, 1], got {gamma}")));
                }
                Ok(())
            }
        }
    }
}

/// Driving-term coefficient at iteration `t`.
pub fn gamma(t: usize, mode: &ScheduleMode) -> f64 {
    match *mode {
        ScheduleMode::Vanilla => 1.0,
        ScheduleMode::Frozen { gamma } => gamma,
        ScheduleMode::Cyclical { period } => (t % period) as f64 / period as f64,
        ScheduleMode::Annealed { t0, tau, t_min } => {
            let mut start = 0usize;
            let mut len = t0;
            loop {
                if len < t_min {
                    return 1.0;
                }
                if len == 1 {
                    // Unit periods repeat forever and always sit at the ramp start.
                    return 0.0;
                }
                if t - start < len {
                    return (t - start) as f64 / len as f64;
                }
                start += len;
                len = ((tau * len as f64).floor() as usize).max(1);
            }
        }
    }
}

/// Period lengths visited by an annealed schedule before it settles.
pub fn annealing_periods(t0: usize, tau: f64, t_min: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut len = t0;
    while len >= t_min && len > 1 {
        out.push(len);
        len = ((tau * len as f64).floor() as usize).max(1);
    }
    out
}
