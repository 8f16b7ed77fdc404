//! Train a Stein variational hypernetwork on ZDT1 with linear scalarization
//! and compare the learned front with the analytic one.
//!
//!     cargo run --release --example train_zdt1 -- [iterations] [seed]

use stein_pareto::engine::{assess, evaluate_rays, train, KernelSpec, NetworkSpec, ScheduleSpec};
use stein_pareto::nnet::simplex_grid;
use stein_pareto::problems::{ProblemKind, ProblemSpec};
use stein_pareto::scalarize::ScalarizationSpec;

fn main() -> stein_pareto::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().map_or(20_000, |s| s.parse().expect("iterations"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));

    let problem = ProblemSpec::new(ProblemKind::Zdt1);
    let scal = ScalarizationSpec::ls();
    let sched = ScheduleSpec {
        iterations,
        seed,
        snapshot_every: iterations / 5,
        ..ScheduleSpec::default()
    };
    let out = train(&problem, &NetworkSpec::default(), &scal, KernelSpec::MedianHeuristic, &sched)
        .map_err(|f| f.error)?;

    println!("iteration  mean g     gamma  h          MED");
    for s in &out.trace.snapshots {
        println!(
            "{:>9}  {:.3e}  {:.2}   {:.3e}  {:.3e}",
            s.iteration,
            s.mean_g,
            s.gamma,
            s.h,
            s.med.unwrap_or(f64::NAN)
        );
    }

    for rays in [30, 600] {
        let r = assess(&out.state, &problem, &scal, rays)?;
        println!("{rays:>3} rays: MED {:.3e}  HV {:.4}  spacing {:.3e}", r.med.unwrap(), r.hv, r.spacing);
    }

    let grid = simplex_grid(2, 6)?;
    let fs = evaluate_rays(&out.state, &problem, &grid)?;
    let truth = problem.ray_matched_front(&grid, &scal, &[0.0, 0.0])?;
    println!("\nray              learned f          target f");
    for ((r, f), t) in grid.iter().zip(&fs).zip(&truth) {
        println!(
            "({:.3}, {:.3})   ({:.4}, {:.4})   ({:.4}, {:.4})",
            r.weights()[0],
            r.weights()[1],
            f.0[0],
            f.0[1],
            t.0[0],
            t.0[1]
        );
    }
    Ok(())
}
