//! Quality indicators on hand-made and sampled fronts.

use stein_pareto::metrics::{dominance_filter, hypervolume, mc_hypervolume, med, spacing, FrontSet};
use stein_pareto::problems::{ProblemKind, ProblemSpec};

fn main() -> stein_pareto::Result<()> {
    let staircase = FrontSet::from_rows(vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0], vec![3.5, 3.5]])?;
    let kept = dominance_filter(&staircase);
    println!("{} points, {} non-dominated", staircase.len(), kept.len());
    println!("HV w.r.t. (4, 4): {}", hypervolume(&staircase, &[4.0, 4.0])?);
    println!("spacing: {:.4}", spacing(&kept)?);

    // the analytic ZDT1 front against a perturbed copy
    let zdt1 = ProblemSpec::new(ProblemKind::Zdt1);
    let truth = FrontSet::new(zdt1.front_samples(100)?)?;
    let noisy = FrontSet::from_rows(
        truth
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| vec![p.0[0], p.0[1] + 0.01 * (i % 3) as f64])
            .collect(),
    )?;
    println!("ZDT1 front HV: {:.5}", hypervolume(&truth, &zdt1.reference_point)?);
    println!("MED of perturbed copy: {:.5}", med(&truth, &noisy)?);

    // exact and Monte-Carlo volume agree in three dimensions
    let sphere = FrontSet::from_rows(
        (0..10)
            .map(|i| {
                let a = 0.15 * i as f64;
                let v = [a.cos() * 0.8, a.sin() * 0.8, 0.6];
                v.to_vec()
            })
            .collect(),
    )?;
    let reference = [1.1, 1.1, 1.1];
    let exact = hypervolume(&sphere, &reference)?;
    let mc = mc_hypervolume(&sphere, &reference, 200_000, 7)?;
    println!("3-D HV exact {exact:.5}, MC {:.5} +- {:.5}", mc.value, mc.std_err);
    Ok(())
}
