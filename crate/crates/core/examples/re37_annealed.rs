//! Three-objective RE37 with annealed repulsion: gamma ramps from 0 to 1 over
//! shrinking periods, so particles first spread out and then converge.
//!
//!     cargo run --release --example re37_annealed -- [iterations]

use stein_pareto::engine::{train, KernelSpec, NetworkSpec, ScheduleMode, ScheduleSpec};
use stein_pareto::problems::{ProblemKind, ProblemSpec};
use stein_pareto::scalarize::{IdealPolicy, ScalarizationSpec};

fn main() -> stein_pareto::Result<()> {
    let iterations = std::env::args().nth(1).map_or(20_000, |s| s.parse().expect("iterations"));
    let problem = ProblemSpec::new(ProblemKind::Re37);
    let scal = ScalarizationSpec::stch(100.0, IdealPolicy::RunningMin { slack: 0.1 })?;
    let sched = ScheduleSpec {
        iterations,
        mode: ScheduleMode::Annealed {
            t0: 2000,
            tau: 0.5,
            t_min: 100,
        },
        snapshot_every: (iterations / 10).max(1),
        snapshot_rays: 105,
        ..ScheduleSpec::default()
    };
    let out = train(&problem, &NetworkSpec::default(), &scal, KernelSpec::MedianHeuristic, &sched)
        .map_err(|f| f.error)?;
    println!("iteration  gamma  HV      spacing");
    for s in &out.trace.snapshots {
        println!("{:>9}  {:.2}   {:.4}  {:.3e}", s.iteration, s.gamma, s.hv, s.spacing);
    }
    for w in &out.trace.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
