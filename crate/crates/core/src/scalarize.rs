//! Scalarisation functions that collapse an objective vector and a preference
//! ray into a single value: linear (LS), Tchebyshev (TCH) and smooth
//! Tchebyshev (STCH), together with ideal-point tracking.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnet::PreferenceRay;

/// Default STCH smoothness.
pub const DEFAULT_MU: f64 = 100.0;
/// Default running-min slack.
pub const DEFAULT_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarizationKind {
    Ls,
    Tch,
    Stch,
}

impl ScalarizationKind {
    pub const ALL: [ScalarizationKind; 3] = [
        ScalarizationKind::Ls,
        ScalarizationKind::Tch,
        ScalarizationKind::Stch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalarizationKind::Ls => "ls",
            ScalarizationKind::Tch => "tch",
            ScalarizationKind::Stch => "stch",
        }
    }
}

impl fmt::Display for ScalarizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalarizationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(ScalarizationKind::Ls),
            "tch" => Ok(ScalarizationKind::Tch),
            "stch" => Ok(ScalarizationKind::Stch),
            other => Err(Error::Config(format!(
                "unknown scalarization '{other}' (expected ls, tch or stch)"
            ))),
        }
    }
}

/// How the ideal point `z*` is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdealPolicy {
    Fixed(Vec<f64>),
    /// `z_j <- min(z_j, min_batch f_j - slack)`.
    RunningMin { slack: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarizationSpec {
    pub kind: ScalarizationKind,
    pub mu: f64,
    pub ideal: IdealPolicy,
}

impl ScalarizationSpec {
    pub fn new(kind: ScalarizationKind, mu: f64, ideal: IdealPolicy) -> Result<Self> {
        if kind == ScalarizationKind::Stch && !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("STCH needs mu > 0, got {mu}")));
        }
        if let IdealPolicy::RunningMin { slack } = ideal {
            if !(slack >= 0.0) {
                return Err(Error::Config(format!("ideal slack must be >= 0, got {slack}")));
            }
        }
        Ok(ScalarizationSpec { kind, mu, ideal })
    }

    pub fn ls() -> Self {
        Self::new(ScalarizationKind::Ls, DEFAULT_MU, IdealPolicy::RunningMin { slack: DEFAULT_SLACK }).unwrap()
    }

    pub fn tch(ideal: IdealPolicy) -> Self {
        Self::new(ScalarizationKind::Tch, DEFAULT_MU, ideal).unwrap()
    }

    pub fn stch(mu: f64, ideal: IdealPolicy) -> Result<Self> {
        Self::new(ScalarizationKind::Stch, mu, ideal)
    }

    pub fn initial_ideal(&self, m: usize) -> Result<IdealPoint> {
        match &self.ideal {
            IdealPolicy::Fixed(z) => {
                if z.len() != m {
                    return Err(Error::shape("fixed ideal point", m, z.len()));
                }
                Ok(IdealPoint {
                    z: z.clone(),
                    slack: 0.0,
                    running: false,
                })
            }
            IdealPolicy::RunningMin { slack } => Ok(IdealPoint {
                z: vec![f64::INFINITY; m],
                slack: *slack,
                running: true,
            }),
        }
    }

    fn check(&self, ray: &PreferenceRay, f: &[f64], z: &IdealPoint) -> Result<()> {
        if f.len() != ray.dim() {
            return Err(Error::shape("objective vector", ray.dim(), f.len()));
        }
        if self.kind != ScalarizationKind::Ls && z.z.len() != f.len() {
            return Err(Error::shape("ideal point", f.len(), z.z.len()));
        }
        Ok(())
    }

    /// Weighted deviations `r_j |f_j - z_j|`.
    fn deviations(ray: &PreferenceRay, f: &[f64], z: &[f64]) -> Vec<f64> {
        ray.weights()
            .iter()
            .zip(f.iter().zip(z))
            .map(|(r, (fj, zj))| r * (fj - zj).abs())
            .collect()
    }

    pub fn value(&self, ray: &PreferenceRay, f: &[f64], z: &IdealPoint) -> Result<f64> {
        self.check(ray, f, z)?;
        let v = match self.kind {
            ScalarizationKind::Ls => ray.weights().iter().zip(f).map(|(r, fj)| r * fj).sum(),
            ScalarizationKind::Tch => Self::deviations(ray, f, &z.z)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max),
            ScalarizationKind::Stch => {
                let a: Vec<f64> = Self::deviations(ray, f, &z.z)
                    .into_iter()
                    .map(|d| self.mu * d)
                    .collect();
                let top = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = top + a.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
                lse / self.mu
            }
        };
        Ok(v)
    }

    /// `d g / d f`. TCH returns the subgradient of the first maximal term.
    pub fn grad_f(&self, ray: &PreferenceRay, f: &[f64], z: &IdealPoint) -> Result<Vec<f64>> {
        self.check(ray, f, z)?;
        let r = ray.weights();
        let g = match self.kind {
            ScalarizationKind::Ls => r.to_vec(),
            ScalarizationKind::Tch => {
                let dev = Self::deviations(ray, f, &z.z);
                let mut best = 0;
                for (j, d) in dev.iter().enumerate() {
                    if *d > dev[best] {
                        best = j;
                    }
                }
                let mut g = vec![0.0; f.len()];
                g[best] = r[best] * sign(f[best] - z.z[best]);
                g
            }
            ScalarizationKind::Stch => {
                let a: Vec<f64> = Self::deviations(ray, f, &z.z)
                    .into_iter()
                    .map(|d| self.mu * d)
                    .collect();
                let top = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = a.iter().map(|v| (v - top).exp()).collect();
                let total: f64 = e.iter().sum();
                (0..f.len())
                    .map(|j| e[j] / total * r[j] * sign(f[j] - z.z[j]))
                    .collect()
            }
        };
        Ok(g)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The ideal point `z*` used by the Tchebyshev variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint {
    pub z: Vec<f64>,
    pub slack: f64,
    running: bool,
}

impl IdealPoint {
    pub fn fixed(z: Vec<f64>) -> Self {
        IdealPoint {
            z,
            slack: 0.0,
            running: false,
        }
    }

    pub fn running(m: usize, slack: f64) -> Self {
        IdealPoint {
            z: vec![f64::INFINITY; m],
            slack,
            running: true,
        }
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    /// Folds a batch of objective vectors into a running-min ideal point.
    /// Fixed ideal points are left untouched.
    pub fn update<'a, I>(&mut self, batch: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut seen = false;
        for f in batch {
            seen = true;
            if f.len() != self.z.len() {
                return Err(Error::shape("objective vector", self.z.len(), f.len()));
            }
            if self.running {
                for (zj, fj) in self.z.iter_mut().zip(f) {
                    *zj = zj.min(fj - self.slack);
                }
            }
        }
        if !seen {
            return Err(Error::Contract("ideal point update needs a nonempty batch".into()));
        }
        Ok(())
    }
}
