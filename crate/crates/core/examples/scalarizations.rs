//! Values and gradients of the three scalarizations at one objective vector,
//! and how the smooth variant approaches the Tchebyshev value as mu grows.

use stein_pareto::nnet::PreferenceRay;
use stein_pareto::scalarize::{IdealPoint, IdealPolicy, ScalarizationSpec};

fn main() -> stein_pareto::Result<()> {
    let ray = PreferenceRay::new(vec![0.3, 0.7])?;
    let f = [0.6, 0.4];
    let z = IdealPoint::fixed(vec![0.0, 0.0]);
    let fixed = IdealPolicy::Fixed(vec![0.0, 0.0]);

    for (name, spec) in [
        ("LS", ScalarizationSpec::ls()),
        ("TCH", ScalarizationSpec::tch(fixed.clone())),
        ("STCH", ScalarizationSpec::stch(100.0, fixed.clone())?),
    ] {
        let v = spec.value(&ray, &f, &z)?;
        let g = spec.grad_f(&ray, &f, &z)?;
        println!("{name:<5} g = {v:.6}  grad = [{:.4}, {:.4}]", g[0], g[1]);
    }

    let tch = ScalarizationSpec::tch(fixed.clone()).value(&ray, &f, &z)?;
    println!("\nmu       STCH - TCH");
    for mu in [1.0, 10.0, 100.0, 1000.0] {
        let v = ScalarizationSpec::stch(mu, fixed.clone())?.value(&ray, &f, &z)?;
        println!("{mu:<7}  {:.3e}", v - tch);
    }

    let mut running = IdealPoint::running(2, 0.1);
    running.update([&[1.0, 2.0][..], &[0.5, 3.0][..]])?;
    println!("\nrunning ideal after one batch: {:?}", running.z);
    Ok(())
}
