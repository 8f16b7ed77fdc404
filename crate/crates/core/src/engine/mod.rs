//! The Stein variational hypernetwork trainer.
//!
//! Each step samples a batch of preference rays, maps them through the
//! hypernetwork and the problem to get one objective-space particle per ray,
//! and moves the hypernetwork parameters along
//!
//! ```text
//! G = sum_i J_i^T [ gamma * (sum_j k_ij) * dg/dF_i  +  alpha * sum_j dk(F_i, F_j)/dF_i ]
//! ```
//!
//! where `J_i` is the Jacobian of `F_i` with respect to the parameters. The
//! first term drives each particle down its scalarisation, weighted by the
//! kernel; the second pushes particles apart (descending on `k` spreads them).
//! By default `k_ij` is a frozen weight in the driving term and `F_j` is
//! detached in the repulsion term.

mod kernel;
mod schedule;

pub use kernel::{kernel_matrix, KernelMatrix, KernelSpec, MIN_BANDWIDTH_SQ};
pub use schedule::{annealing_periods, gamma, ScheduleMode};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, FrontSet, MetricsReport};
use crate::nnet::{
    sample_rays, simplex_grid, Activation, DecisionVector, Hypernet, Optimizer, OutputSquash,
    PreferenceRay, Workspace,
};
use crate::problems::{ObjectiveVector, ProblemSpec};
use crate::scalarize::{IdealPoint, IdealPolicy, ScalarizationSpec};

/// Hypernetwork architecture and optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_squash: OutputSquash,
    pub optimizer: Optimizer,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            hidden: vec![128, 128],
            activation: Activation::Relu,
            output_squash: OutputSquash::SigmoidBox,
            optimizer: Optimizer::default(),
        }
    }
}

impl NetworkSpec {
    pub fn layer_sizes(&self, problem: &ProblemSpec) -> Vec<usize> {
        let mut sizes = vec![problem.m];
        sizes.extend(&self.hidden);
        sizes.push(problem.n);
        sizes
    }

    pub fn build(&self, problem: &ProblemSpec, seed: u64) -> Result<Hypernet> {
        Hypernet::init(
            &self.layer_sizes(problem),
            self.activation,
            self.output_squash,
            self.optimizer,
            seed,
        )
    }
}

/// Everything that controls one training run besides the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub iterations: usize,
    pub step_size: f64,
    pub repulsion_weight: f64,
    pub n_particles: usize,
    pub mode: ScheduleMode,
    pub seed: u64,
    pub dirichlet_concentration: f64,
    /// Divide the update by the number of particles.
    pub normalize: bool,
    /// Differentiate through every kernel evaluation instead of freezing
    /// driving-term weights and detaching neighbours.
    pub full_kernel_gradient: bool,
    /// Metric snapshot period in iterations (`0` disables snapshots).
    pub snapshot_every: usize,
    pub snapshot_rays: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            iterations: 20_000,
            step_size: 1e-3,
            repulsion_weight: 1e-5,
            n_particles: 8,
            mode: ScheduleMode::Vanilla,
            seed: 0,
            dirichlet_concentration: 1.0,
            normalize: false,
            full_kernel_gradient: false,
            snapshot_every: 0,
            snapshot_rays: 50,
        }
    }
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 1 {
            return Err(Error::Config("n_particles must be >= 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!("step_size must be > 0, got {}", self.step_size)));
        }
        if !(self.repulsion_weight >= 0.0 && self.repulsion_weight.is_finite()) {
            return Err(Error::Config(format!(
                "repulsion_weight must be >= 0, got {}",
                self.repulsion_weight
            )));
        }
        if !(self.dirichlet_concentration > 0.0) {
            return Err(Error::Config("dirichlet_concentration must be > 0".into()));
        }
        self.mode.validate()
    }
}

/// One evaluated batch of particles. Parallel vectors indexed by particle.
#[derive(Debug, Clone)]
pub struct ParticleBatch {
    pub rays: Vec<PreferenceRay>,
    pub xs: Vec<DecisionVector>,
    pub fs: Vec<ObjectiveVector>,
    pub kernel: KernelMatrix,
    tapes: Vec<Workspace>,
}

impl ParticleBatch {
    /// Pushes `rays` through the network and the problem and builds the kernel.
    pub fn evaluate(
        net: &Hypernet,
        problem: &ProblemSpec,
        rays: Vec<PreferenceRay>,
        kernel: KernelSpec,
    ) -> Result<Self> {
        let mut xs = Vec::with_capacity(rays.len());
        let mut fs = Vec::with_capacity(rays.len());
        let mut tapes = Vec::with_capacity(rays.len());
        for ray in &rays {
            let mut ws = Workspace::new();
            let x = net.forward(ray, &problem.bounds, &mut ws)?;
            fs.push(problem.evaluate(&x.values)?);
            xs.push(x);
            tapes.push(ws);
        }
        let kernel = kernel_matrix(&fs, kernel)?;
        Ok(ParticleBatch {
            rays,
            xs,
            fs,
            kernel,
            tapes,
        })
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }
}

/// Knobs of a single gradient evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOptions {
    pub repulsion_weight: f64,
    pub gamma: f64,
    pub normalize: bool,
    pub full_kernel_gradient: bool,
    /// Reported in numeric errors.
    pub iteration: usize,
}

/// Objective-space cotangents `dS/dF_i` of the surrogate
/// `S = sum_ij [gamma * k_ij * g(F_i) + alpha * k(F_i, F_j)]`.
pub fn particle_cotangents(
    batch: &ParticleBatch,
    scal: &ScalarizationSpec,
    ideal: &IdealPoint,
    opts: &GradientOptions,
) -> Result<Vec<Vec<f64>>> {
    let n = batch.len();
    let m = batch.fs.first().map_or(0, |f| f.len());
    let km = &batch.kernel;
    let alpha = opts.repulsion_weight;
    let gamma = opts.gamma;
    let inv_h2 = if km.identity { 0.0 } else { 1.0 / (km.h * km.h) };

    let g_values: Vec<f64> = if opts.full_kernel_gradient {
        (0..n)
            .map(|i| scal.value(&batch.rays[i], &batch.fs[i], ideal))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let fi = &batch.fs[i];
        let dg = scal.grad_f(&batch.rays[i], fi, ideal)?;
        let row_sum: f64 = km.row(i).iter().sum();
        let mut c: Vec<f64> = dg.iter().map(|d| gamma * row_sum * d).collect();

        if !km.identity {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let k = km.get(i, j);
                // dk(F_i, F_j)/dF_i = -(F_i - F_j) k / h^2
                let weight = if opts.full_kernel_gradient {
                    gamma * (g_values[i] + g_values[j]) + 2.0 * alpha
                } else {
                    alpha
                };
                if weight == 0.0 {
                    continue;
                }
                let fj = &batch.fs[j];
                for d in 0..m {
                    c[d] -= weight * (fi[d] - fj[d]) * k * inv_h2;
                }
            }
        }
        if let Some(d) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: opts.iteration,
                particle: i,
                what: format!("objective-space cotangent component {d} is {}", c[d]),
            });
        }
        out.push(c);
    }
    Ok(out)
}

/// Parameter-space update direction for one batch; the step is `-xi * G`.
pub fn svh_gradient(
    batch: &ParticleBatch,
    net: &Hypernet,
    problem: &ProblemSpec,
    scal: &ScalarizationSpec,
    ideal: &IdealPoint,
    opts: &GradientOptions,
) -> Result<Vec<f64>> {
    let cots = particle_cotangents(batch, scal, ideal, opts)?;
    let mut grad = vec![0.0; net.num_params()];
    for (i, c) in cots.iter().enumerate() {
        let jac = problem.jacobian(&batch.xs[i].values)?;
        let dx = jac.transpose_mul(c);
        if let Some(d) = dx.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: opts.iteration,
                particle: i,
                what: format!("decision-space cotangent component {d} is {}", dx[d]),
            });
        }
        net.backward_accumulate(&batch.tapes[i], &dx, &mut grad)?;
    }
    if opts.normalize && !batch.is_empty() {
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    Ok(grad)
}

/// Per-step training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub mean_g: f64,
    pub gamma: f64,
    pub h: f64,
}

/// Periodic evaluation on an even ray grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub iteration: usize,
    pub mean_g: f64,
    pub gamma: f64,
    pub h: f64,
    pub hv: f64,
    pub med: Option<f64>,
    pub spacing: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<SnapshotRecord>,
    pub warnings: Vec<String>,
}

impl RunTrace {
    /// Snapshot records as line-delimited JSON.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.snapshots {
            out.push_str(&serde_json::to_string(s).expect("snapshot serialises"));
            out.push('\n');
        }
        out
    }
}

/// A failed run: the error plus everything recorded up to it.
#[derive(Debug, Clone)]
pub struct TrainFailure {
    pub error: Error,
    pub trace: RunTrace,
    pub state: Hypernet,
}

/// Ideal point against which ray-matched targets are computed. A running
/// minimum settles at the true ideal minus its slack.
pub fn target_ideal(problem: &ProblemSpec, scal: &ScalarizationSpec) -> Vec<f64> {
    match &scal.ideal {
        IdealPolicy::Fixed(z) => z.clone(),
        IdealPolicy::RunningMin { slack } => problem
            .ideal_hint
            .clone()
            .unwrap_or_else(|| vec![0.0; problem.m])
            .iter()
            .map(|z| z - slack)
            .collect(),
    }
}

/// The learned front on a set of rays.
pub fn evaluate_rays(
    net: &Hypernet,
    problem: &ProblemSpec,
    rays: &[PreferenceRay],
) -> Result<Vec<ObjectiveVector>> {
    let mut ws = Workspace::new();
    rays.iter()
        .map(|r| {
            let x = net.forward(r, &problem.bounds, &mut ws)?;
            problem.evaluate(&x.values)
        })
        .collect()
}

/// Metrics of the learned front on the even `count`-ray grid.
pub fn assess(
    net: &Hypernet,
    problem: &ProblemSpec,
    scal: &ScalarizationSpec,
    count: usize,
) -> Result<MetricsReport> {
    let rays = simplex_grid(problem.m, count)?;
    let front = FrontSet::with_dim(evaluate_rays(net, problem, &rays)?, problem.m)?;
    let truth = if problem.has_analytic_front() {
        let pts = problem.ray_matched_front(&rays, scal, &target_ideal(problem, scal))?;
        Some(FrontSet::with_dim(pts, problem.m)?)
    } else {
        None
    };
    metrics::report(&front, truth.as_ref(), &problem.reference_point)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: Hypernet,
    pub trace: RunTrace,
}

/// Runs the full training loop from a freshly initialised network.
pub fn train(
    problem: &ProblemSpec,
    network: &NetworkSpec,
    scal: &ScalarizationSpec,
    kernel: KernelSpec,
    sched: &ScheduleSpec,
) -> std::result::Result<TrainOutcome, Box<TrainFailure>> {
    let net = match network.build(problem, sched.seed) {
        Ok(n) => n,
        Err(error) => {
            // No state to hand back; build a trivial one so the failure type stays uniform.
            let state = Hypernet::from_parts(&[1, 1], Activation::Relu, OutputSquash::None, Optimizer::Plain, 0, vec![0.0; 2])
                .expect("trivial network");
            return Err(Box::new(TrainFailure {
                error,
                trace: RunTrace::default(),
                state,
            }));
        }
    };
    train_from(net, problem, scal, kernel, sched)
}

/// Runs the training loop starting from an existing network.
pub fn train_from(
    mut net: Hypernet,
    problem: &ProblemSpec,
    scal: &ScalarizationSpec,
    kernel: KernelSpec,
    sched: &ScheduleSpec,
) -> std::result::Result<TrainOutcome, Box<TrainFailure>> {
    let mut trace = RunTrace::default();
    macro_rules! bail {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    return Err(Box::new(TrainFailure {
                        error,
                        trace,
                        state: net,
                    }))
                }
            }
        };
    }
    bail!(sched.validate());
    if net.input_dim() != problem.m || net.output_dim() != problem.n {
        bail!(Err(Error::Config(format!(
            "network maps {} -> {} but {} needs {} -> {}",
            net.input_dim(),
            net.output_dim(),
            problem.name(),
            problem.m,
            problem.n
        ))));
    }
    let mut ideal = bail!(scal.initial_ideal(problem.m));
    let mut rng = ChaCha8Rng::seed_from_u64(sched.seed);
    rng.set_stream(1);

    for t in 0..sched.iterations {
        let rays = bail!(sample_rays(
            problem.m,
            sched.n_particles,
            sched.dirichlet_concentration,
            &mut rng
        ));
        let batch = bail!(ParticleBatch::evaluate(&net, problem, rays, kernel));
        debug_assert!(batch.kernel.satisfies_invariants());
        if batch.kernel.fell_back {
            trace
                .warnings
                .push(format!("iteration {t}: identical particles, kernel bandwidth fell back to 1"));
        }
        bail!(ideal.update(batch.fs.iter().map(|f| &f[..])));

        let gamma_t = gamma(t, &sched.mode);
        let opts = GradientOptions {
            repulsion_weight: sched.repulsion_weight,
            gamma: gamma_t,
            normalize: sched.normalize,
            full_kernel_gradient: sched.full_kernel_gradient,
            iteration: t,
        };
        let grad = bail!(svh_gradient(&batch, &net, problem, scal, &ideal, &opts));

        let mean_g = bail!(batch
            .rays
            .iter()
            .zip(&batch.fs)
            .map(|(r, f)| scal.value(r, f, &ideal))
            .collect::<Result<Vec<f64>>>())
        .iter()
        .sum::<f64>()
            / batch.len() as f64;
        let record = StepRecord {
            iteration: t,
            mean_g,
            gamma: gamma_t,
            h: batch.kernel.h,
        };

        bail!(net.apply_step(&grad, sched.step_size).map_err(|e| match e {
            Error::Numeric { what, index } => Error::Divergence {
                iteration: t,
                particle: 0,
                what: format!("{what} {index}"),
            },
            other => other,
        }));

        let snapshot_due = sched.snapshot_every > 0
            && ((t + 1) % sched.snapshot_every == 0 || t + 1 == sched.iterations);
        if snapshot_due {
            let report = bail!(assess(&net, problem, scal, sched.snapshot_rays));
            trace.snapshots.push(SnapshotRecord {
                iteration: t + 1,
                mean_g: record.mean_g,
                gamma: record.gamma,
                h: record.h,
                hv: report.hv,
                med: report.med,
                spacing: report.spacing,
            });
        }
        trace.steps.push(record);
    }
    Ok(TrainOutcome { state: net, trace })
}
