//! ZDT2 has a concave front. Linear scalarization pushes every ray to one of
//! the two ends, Tchebyshev-type scalarizations recover the whole curve.
//!
//!     cargo run --release --example zdt2_scalarizations -- [iterations]

use stein_pareto::engine::{assess, train, KernelSpec, NetworkSpec, ScheduleSpec};
use stein_pareto::problems::{ProblemKind, ProblemSpec};
use stein_pareto::scalarize::{IdealPolicy, ScalarizationSpec};

fn main() -> stein_pareto::Result<()> {
    let iterations = std::env::args().nth(1).map_or(20_000, |s| s.parse().expect("iterations"));
    let problem = ProblemSpec::new(ProblemKind::Zdt2);
    let z = IdealPolicy::Fixed(vec![0.0, 0.0]);
    let cases = [
        ("LS", ScalarizationSpec::ls()),
        ("TCH", ScalarizationSpec::tch(z.clone())),
        ("STCH", ScalarizationSpec::stch(100.0, z)?),
    ];
    let sched = ScheduleSpec {
        iterations,
        ..ScheduleSpec::default()
    };
    println!("scalarization  MED@600    HV       non-dominated");
    for (name, scal) in cases {
        let out = train(&problem, &NetworkSpec::default(), &scal, KernelSpec::MedianHeuristic, &sched)
            .map_err(|f| f.error)?;
        let r = assess(&out.state, &problem, &scal, 600)?;
        println!("{name:<13}  {:.3e}  {:.4}   {}", r.med.unwrap(), r.hv, r.n_nondominated);
    }
    Ok(())
}
