//! The driving-term weight gamma under each schedule mode.

use stein_pareto::engine::{annealing_periods, gamma, ScheduleMode};

fn main() {
    let modes = [
        ("vanilla", ScheduleMode::Vanilla),
        (
            "annealed",
            ScheduleMode::Annealed {
                t0: 2000,
                tau: 0.5,
                t_min: 100,
            },
        ),
        ("cyclical", ScheduleMode::Cyclical { period: 1000 }),
        ("frozen", ScheduleMode::Frozen { gamma: 0.0 }),
    ];
    println!("annealing periods: {:?}", annealing_periods(2000, 0.5, 100));
    print!("{:>6}", "t");
    for (name, _) in &modes {
        print!("  {name:>8}");
    }
    println!();
    for t in (0..=5000).step_by(250) {
        print!("{t:>6}");
        for (_, mode) in &modes {
            print!("  {:>8.3}", gamma(t, mode));
        }
        println!();
    }
}
