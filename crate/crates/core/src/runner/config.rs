use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{KernelSpec, NetworkSpec, ScheduleMode, ScheduleSpec};
use crate::error::{Error, Result};
use crate::nnet::{Activation, Optimizer, OutputSquash};
use crate::problems::{ProblemKind, ProblemSpec};
use crate::scalarize::{IdealPolicy, ScalarizationKind, ScalarizationSpec, DEFAULT_MU, DEFAULT_SLACK};

/// Training method. `phn` is the plain preference-conditioned baseline:
/// no repulsion, identity kernel, `gamma = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Svh,
    ASvh,
    CSvh,
    Phn,
}

impl Method {
    pub fn prefix(self) -> &'static str {
        match self {
            Method::Svh => "SVH",
            Method::ASvh => "A-SVH",
            Method::CSvh => "C-SVH",
            Method::Phn => "PHN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdealMode {
    Fixed,
    Running,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub repulsion_weight: f64,
    pub n_particles: usize,
    pub dirichlet_concentration: f64,
    pub normalize: bool,
    pub full_kernel_gradient: bool,
    pub snapshot_every: usize,
    pub snapshot_rays: usize,
    /// Annealed schedule (`a_svh`).
    pub t0: usize,
    pub tau: f64,
    pub t_min: usize,
    /// Cyclical schedule (`c_svh`).
    pub period: usize,
    /// Holds `gamma` constant for the whole run (`svh` only).
    pub gamma: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let s = ScheduleSpec::default();
        ScheduleConfig {
            iterations: s.iterations,
            step_size: s.step_size,
            repulsion_weight: s.repulsion_weight,
            n_particles: s.n_particles,
            dirichlet_concentration: s.dirichlet_concentration,
            normalize: s.normalize,
            full_kernel_gradient: s.full_kernel_gradient,
            snapshot_every: 1000,
            snapshot_rays: s.snapshot_rays,
            t0: 2000,
            tau: 0.5,
            t_min: 100,
            period: 1000,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Median,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub bandwidth: Bandwidth,
    pub h: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            bandwidth: Bandwidth::Median,
            h: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_squash: OutputSquash,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            hidden: vec![128, 128],
            activation: Activation::Relu,
            output_squash: OutputSquash::SigmoidBox,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

fn default_mu() -> f64 {
    DEFAULT_MU
}
fn default_slack() -> f64 {
    DEFAULT_SLACK
}
fn default_ideal() -> IdealMode {
    IdealMode::Running
}
fn default_eval() -> Vec<usize> {
    vec![30, 50, 100, 300, 600]
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}
fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// One experiment: a problem, a method and a scalarisation, run for each seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Decision dimension override (ZDT only).
    #[serde(default)]
    pub n_variables: Option<usize>,
    pub method: Method,
    pub scalarization: ScalarizationKind,
    /// Column name in result tables; derived from method and scalarisation
    /// when absent.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_ideal")]
    pub ideal: IdealMode,
    /// Fixed ideal point; defaults to the problem's known ideal.
    #[serde(default)]
    pub ideal_point: Option<Vec<f64>>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_eval")]
    pub eval_ray_counts: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub network: NetworkConfig,
}

/// Everything the engine needs for one seed.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub problem: ProblemSpec,
    pub network: NetworkSpec,
    pub scalarization: ScalarizationSpec,
    pub kernel: KernelSpec,
    pub schedule: ScheduleSpec,
}

impl ExperimentConfig {
    /// Parses and validates TOML config text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()).with_span(text, e.span()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            format!(
                "{}-{}",
                self.method.prefix(),
                self.scalarization.name().to_ascii_uppercase()
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("{name}: {msg}")));
        let problem = self.problem_spec()?;
        if self.eval_ray_counts.is_empty() || self.eval_ray_counts.contains(&0) {
            return field("eval_ray_counts", "must be a nonempty list of positive integers".into());
        }
        if self.seeds.is_empty() {
            return field("seeds", "must not be empty".into());
        }
        if self.scalarization == ScalarizationKind::Stch && !(self.mu > 0.0) {
            return field("mu", format!("must be > 0, got {}", self.mu));
        }
        if !(self.slack >= 0.0) {
            return field("slack", format!("must be >= 0, got {}", self.slack));
        }
        if let Some(z) = &self.ideal_point {
            if z.len() != problem.m {
                return field("ideal_point", format!("needs {} entries, got {}", problem.m, z.len()));
            }
        }
        if self.schedule.gamma.is_some() && self.method != Method::Svh {
            return field("schedule.gamma", "a constant gamma only applies to method = \"svh\"".into());
        }
        match (self.kernel.bandwidth, self.kernel.h) {
            (Bandwidth::Fixed, None) => return field("kernel.h", "required when bandwidth = \"fixed\"".into()),
            (Bandwidth::Fixed, Some(h)) if !(h > 0.0 && h.is_finite()) => {
                return field("kernel.h", format!("must be > 0, got {h}"))
            }
            (Bandwidth::Median, Some(_)) => {
                return field("kernel.h", "only allowed when bandwidth = \"fixed\"".into())
            }
            _ => {}
        }
        if self.network.hidden.contains(&0) {
            return field("network.hidden", "layer widths must be positive".into());
        }
        self.schedule_spec(0)?.validate()
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let kind: ProblemKind = self
            .problem
            .parse()
            .map_err(|e: Error| Error::Config(format!("problem: {}", strip_prefix(&e))))?;
        match self.n_variables {
            Some(n) => ProblemSpec::zdt(kind, n)
                .map_err(|e| Error::Config(format!("n_variables: {}", strip_prefix(&e)))),
            None => Ok(ProblemSpec::new(kind)),
        }
    }

    pub fn scalarization_spec(&self, problem: &ProblemSpec) -> Result<ScalarizationSpec> {
        let ideal = match self.ideal {
            IdealMode::Fixed => IdealPolicy::Fixed(
                self.ideal_point
                    .clone()
                    .or_else(|| problem.ideal_hint.clone())
                    .unwrap_or_else(|| vec![0.0; problem.m]),
            ),
            IdealMode::Running => IdealPolicy::RunningMin { slack: self.slack },
        };
        ScalarizationSpec::new(self.scalarization, self.mu, ideal)
    }

    pub fn schedule_spec(&self, seed: u64) -> Result<ScheduleSpec> {
        let s = &self.schedule;
        let mode = match self.method {
            Method::Svh => match s.gamma {
                Some(gamma) => ScheduleMode::Frozen { gamma },
                None => ScheduleMode::Vanilla,
            },
            Method::Phn => ScheduleMode::Vanilla,
            Method::ASvh => ScheduleMode::Annealed {
                t0: s.t0,
                tau: s.tau,
                t_min: s.t_min,
            },
            Method::CSvh => ScheduleMode::Cyclical { period: s.period },
        };
        let spec = ScheduleSpec {
            iterations: s.iterations,
            step_size: s.step_size,
            repulsion_weight: if self.method == Method::Phn { 0.0 } else { s.repulsion_weight },
            n_particles: s.n_particles,
            mode,
            seed,
            dirichlet_concentration: s.dirichlet_concentration,
            normalize: s.normalize,
            full_kernel_gradient: s.full_kernel_gradient,
            snapshot_every: s.snapshot_every,
            snapshot_rays: s.snapshot_rays,
        };
        spec.validate()
            .map_err(|e| Error::Config(format!("schedule: {}", strip_prefix(&e))))?;
        Ok(spec)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        if self.method == Method::Phn {
            return Ok(KernelSpec::Identity);
        }
        match self.kernel.bandwidth {
            Bandwidth::Median => Ok(KernelSpec::MedianHeuristic),
            Bandwidth::Fixed => KernelSpec::fixed(self.kernel.h.unwrap_or(0.0)),
        }
    }

    pub fn network_spec(&self) -> NetworkSpec {
        let n = &self.network;
        NetworkSpec {
            hidden: n.hidden.clone(),
            activation: n.activation,
            output_squash: n.output_squash,
            optimizer: match n.optimizer {
                OptimizerKind::Plain => Optimizer::Plain,
                OptimizerKind::Adam => Optimizer::Adam {
                    beta1: n.beta1,
                    beta2: n.beta2,
                    eps: n.eps,
                },
            },
        }
    }

    pub fn resolve(&self, seed: u64) -> Result<ResolvedRun> {
        let problem = self.problem_spec()?;
        Ok(ResolvedRun {
            network: self.network_spec(),
            scalarization: self.scalarization_spec(&problem)?,
            kernel: self.kernel_spec()?,
            schedule: self.schedule_spec(seed)?,
            problem,
        })
    }

    /// Canonical text of everything that affects results: all fields except
    /// `seeds` and `output_dir`, with defaults filled in.
    pub fn canonical_text(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("seeds");
            obj.remove("output_dir");
        }
        // serde_json maps are ordered by key, so this is stable
        serde_json::to_string(&value).expect("config serialises")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

impl Error {
    fn with_span(self, text: &str, span: Option<std::ops::Range<usize>>) -> Self {
        match (self, span) {
            (Error::Config(msg), Some(span)) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                Error::Config(format!("line {line}: {msg}"))
            }
            (other, _) => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "zdt1"
method = "svh"
scalarization = "ls"
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.eval_ray_counts, vec![30, 50, 100, 300, 600]);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.label(), "SVH-LS");
        let run = cfg.resolve(7).unwrap();
        assert_eq!(run.schedule.iterations, 20_000);
        assert_eq!(run.schedule.repulsion_weight, 1e-5);
        assert_eq!(run.schedule.seed, 7);
        assert_eq!(run.kernel, KernelSpec::MedianHeuristic);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}iteratons = 5\n")).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("iteratons")), "{err}");
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}[schedule]\nstepsize = 1.0\n")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_problem_is_a_config_error() {
        let err = ExperimentConfig::from_toml("problem = \"zdt9\"\nmethod = \"svh\"\nscalarization = \"ls\"\n")
            .unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.starts_with("problem")));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn phn_disables_repulsion() {
        let cfg = ExperimentConfig::from_toml(
            "problem = \"zdt2\"\nmethod = \"phn\"\nscalarization = \"tch\"\n[schedule]\nrepulsion_weight = 0.5\n",
        )
        .unwrap();
        let run = cfg.resolve(1).unwrap();
        assert_eq!(run.schedule.repulsion_weight, 0.0);
        assert_eq!(run.kernel, KernelSpec::Identity);
        assert_eq!(run.schedule.mode, ScheduleMode::Vanilla);
        assert_eq!(cfg.label(), "PHN-TCH");
    }

    #[test]
    fn method_selects_schedule() {
        let a = ExperimentConfig::from_toml(
            "problem = \"re37\"\nmethod = \"a_svh\"\nscalarization = \"stch\"\n[schedule]\nt0 = 100\ntau = 0.5\nt_min = 10\n",
        )
        .unwrap();
        assert_eq!(
            a.resolve(0).unwrap().schedule.mode,
            ScheduleMode::Annealed { t0: 100, tau: 0.5, t_min: 10 }
        );
        let bad = "problem = \"re37\"\nmethod = \"a_svh\"\nscalarization = \"stch\"\n[schedule]\ntau = 1.5\n";
        assert_eq!(ExperimentConfig::from_toml(bad).unwrap_err().exit_code(), 2);
        let frozen = "problem = \"zdt1\"\nmethod = \"c_svh\"\nscalarization = \"ls\"\n[schedule]\ngamma = 0.0\n";
        assert!(ExperimentConfig::from_toml(frozen).is_err());
    }

    #[test]
    fn hash_ignores_seeds_and_output() {
        let a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let b = ExperimentConfig::from_toml(&format!("seeds = [9]\noutput_dir = \"elsewhere\"\n{MINIMAL}")).unwrap();
        let c = ExperimentConfig::from_toml(&format!("{MINIMAL}mu = 50.0\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
