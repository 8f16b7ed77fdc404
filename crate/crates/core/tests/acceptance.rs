//! End-to-end acceptance run. Prints one PASS/FAIL line per check and exits
//! non-zero if any fails. The training checks run the full 20 000-iteration
//! configs through the experiment runner, so this target takes a few minutes.

mod common;

use std::path::Path;
use std::time::Instant;

use stein_pareto::metrics::{hypervolume, FrontSet};
use stein_pareto::runner::{emit_table, run_experiment, ExperimentConfig, RunRecord, RunStatus, TableShape};

struct Check {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn config(body: &str, out: &Path) -> ExperimentConfig {
    let text = format!("output_dir = \"{}\"\neval_ray_counts = [30, 50, 100, 300, 600]\n{body}", out.display());
    ExperimentConfig::from_toml(&text).expect("acceptance config parses")
}

fn train(body: &str, out: &Path) -> Vec<RunRecord> {
    let cfg = config(body, out);
    let started = Instant::now();
    let recs = run_experiment(&cfg).expect("experiment runs");
    eprintln!("  trained {} x{} in {:.0?}", cfg.label(), recs.len(), started.elapsed());
    recs
}

fn med_at(r: &RunRecord, rays: usize) -> f64 {
    if r.status != RunStatus::Ok {
        return f64::NAN;
    }
    r.metric(rays).and_then(|m| m.med).unwrap_or(f64::NAN)
}

fn hv_at(r: &RunRecord, rays: usize) -> f64 {
    r.metric(rays).map_or(f64::NAN, |m| m.hv)
}

fn fmt_all(vals: &[f64]) -> String {
    vals.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
}

const ZDT1_LS: &str = r#"
problem = "zdt1"
method = "svh"
scalarization = "ls"
"#;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let work = tempfile::tempdir().expect("temp dir");
    let root = work.path();
    let mut checks = Vec::new();
    let started = Instant::now();

    // 5: hypervolume oracles
    {
        let gap = common::hv_oracle_gap(2, 200, 5);
        let gap3 = common::hv_oracle_gap(3, 200, 5);
        let z = common::hv3_mc_zscore(20, 1_000_000, 5);
        let example = hypervolume(
            &FrontSet::from_rows(vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]]).unwrap(),
            &[4.0, 4.0],
        )
        .unwrap();
        checks.push(Check {
            id: "5",
            title: "HV oracle suite",
            pass: gap <= 1e-12 && gap3 <= 1e-12 && z <= 3.0 && example == 6.0,
            detail: format!(
                "2-D max |exact - incl/excl| = {gap:.1e} over 200 sets (<= 1e-12); 3-D incl/excl gap {gap3:.1e}; 3-D worst |exact - MC| = {z:.2} sigma over 20 fronts (<= 3); worked example = {example}"
            ),
        });
    }

    // 6: gradient suite
    {
        let net = common::hypernet_fd(100, 6);
        let jac = common::jacobian_fd(100, 66);
        let scal = common::scalarization_fd(100, 666);
        let sandwich = common::stch_sandwich_violations(1000, 6666);
        let worst_jac = jac.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        let worst_scal = scal.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        checks.push(Check {
            id: "6",
            title: "gradient suite",
            pass: net <= 1e-4 && worst_jac <= 1e-4 && worst_scal <= 1e-4 && sandwich == 0,
            detail: format!(
                "hypernet {net:.1e}, jacobians {}, scalarizations {} (rel <= 1e-4, 100 probes each); STCH sandwich violations {sandwich}/1000",
                jac.iter().map(|(k, e)| format!("{k:?} {e:.1e}")).collect::<Vec<_>>().join(" "),
                scal.iter().map(|(k, e)| format!("{k:?} {e:.1e}")).collect::<Vec<_>>().join(" "),
            ),
        });
    }

    // 7: schedule suite
    {
        let bad = common::schedule_mismatches();
        checks.push(Check {
            id: "7",
            title: "schedule suite",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                format!("annealed (100, 0.5, 10) exact at t in {:?}; cyclical periodic", common::ANNEALED_PROBES)
            } else {
                bad.join("; ")
            },
        });
    }
    print_pending(&checks);

    // 1: ZDT1 SVH-LS
    let svh_ls = train(ZDT1_LS, &root.join("c1"));
    let meds: Vec<f64> = svh_ls.iter().map(|r| med_at(r, 600)).collect();
    checks.push(Check {
        id: "1",
        title: "ZDT1 SVH-LS MED at 600 rays <= 5e-3",
        pass: meds.iter().all(|m| *m <= 5e-3),
        detail: format!("seeds 1-3: {}", fmt_all(&meds)),
    });

    // 8: determinism, rerunning the same config into a fresh directory
    {
        let again = train(ZDT1_LS, &root.join("c8"));
        let a = emit_table(&svh_ls, TableShape::Med).unwrap();
        let b = emit_table(&again, TableShape::Med).unwrap();
        let ha = config(ZDT1_LS, &root.join("c1")).hash();
        let hb = config(ZDT1_LS, &root.join("c8")).hash();
        checks.push(Check {
            id: "8",
            title: "determinism",
            pass: a.as_bytes() == b.as_bytes() && ha == hb,
            detail: format!("two runs of the ZDT1 SVH-LS config: MED CSVs byte-identical = {}, config hash {ha}", a == b),
        });
    }

    // 2: ZDT2 separation
    {
        let phn_ls = train("problem = \"zdt2\"\nmethod = \"phn\"\nscalarization = \"ls\"\n", &root.join("c2"));
        let svh_ls = train("problem = \"zdt2\"\nmethod = \"svh\"\nscalarization = \"ls\"\n", &root.join("c2"));
        let svh_stch = train("problem = \"zdt2\"\nmethod = \"svh\"\nscalarization = \"stch\"\nideal = \"fixed\"\n", &root.join("c2"));
        let a: Vec<f64> = phn_ls.iter().map(|r| med_at(r, 600)).collect();
        let b: Vec<f64> = svh_ls.iter().map(|r| med_at(r, 600)).collect();
        let c: Vec<f64> = svh_stch.iter().map(|r| med_at(r, 600)).collect();
        checks.push(Check {
            id: "2",
            title: "ZDT2 LS collapses (MED >= 0.5), SVH-STCH MED <= 5e-3, every seed",
            pass: a.iter().chain(&b).all(|m| *m >= 0.5) && c.iter().all(|m| *m <= 5e-3),
            detail: format!("PHN-LS [{}]; SVH-LS [{}]; SVH-STCH [{}]", fmt_all(&a), fmt_all(&b), fmt_all(&c)),
        });
    }

    // 3: TCH MED trend
    {
        let recs = train("problem = \"zdt1\"\nmethod = \"svh\"\nscalarization = \"tch\"\nideal = \"fixed\"\n", &root.join("c3"));
        let pairs: Vec<(f64, f64)> = recs.iter().map(|r| (med_at(r, 30), med_at(r, 600))).collect();
        checks.push(Check {
            id: "3",
            title: "ZDT1 SVH-TCH MED at 600 rays <= MED at 30 rays, every seed",
            pass: pairs.iter().all(|(m30, m600)| m600 <= m30),
            detail: pairs
                .iter()
                .map(|(a, b)| format!("30: {a:.4e} / 600: {b:.4e}"))
                .collect::<Vec<_>>()
                .join("; "),
        });
    }

    // 4: pure repulsion does not converge
    {
        let frozen = train(
            "problem = \"zdt1\"\nmethod = \"svh\"\nscalarization = \"ls\"\nlabel = \"SVH-LS-gamma0\"\n[schedule]\ngamma = 0.0\n",
            &root.join("c4"),
        );
        let ratios: Vec<f64> = frozen
            .iter()
            .zip(&svh_ls)
            .map(|(f, v)| med_at(f, 600) / med_at(v, 600))
            .collect();
        checks.push(Check {
            id: "4",
            title: "ZDT1 gamma = 0 throughout: MED >= 10x vanilla SVH-LS, every seed",
            pass: ratios.iter().all(|r| *r >= 10.0),
            detail: format!(
                "frozen MED [{}]; ratios [{}]",
                fmt_all(&frozen.iter().map(|r| med_at(r, 600)).collect::<Vec<_>>()),
                ratios.iter().map(|r| format!("{r:.0}")).collect::<Vec<_>>().join(", ")
            ),
        });
    }

    // RE37 ordering
    {
        let body = |m: &str, s: &str| format!("problem = \"re37\"\nmethod = \"{m}\"\nscalarization = \"{s}\"\n");
        let mut a_cfg = config(&body("a_svh", "stch"), &root.join("re37"));
        let mut p_cfg = config(&body("phn", "ls"), &root.join("re37"));
        a_cfg.eval_ray_counts = vec![105];
        p_cfg.eval_ray_counts = vec![105];
        let a: Vec<f64> = run_experiment(&a_cfg).unwrap().iter().map(|r| hv_at(r, 105)).collect();
        let p: Vec<f64> = run_experiment(&p_cfg).unwrap().iter().map(|r| hv_at(r, 105)).collect();
        checks.push(Check {
            id: "RE37",
            title: "A-SVH-STCH HV >= PHN-LS HV, every seed",
            pass: a.iter().zip(&p).all(|(x, y)| x >= y),
            detail: format!("A-SVH-STCH [{}]; PHN-LS [{}] (105 rays, reference 1.1)", fmt_all(&a), fmt_all(&p)),
        });
    }

    println!();
    println!("acceptance summary ({:.0?})", started.elapsed());
    let mut failed = 0;
    checks.sort_by_key(|c| order(c.id));
    for c in &checks {
        println!("{} [{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.title, c.detail);
        if !c.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} check(s) failed");
        std::process::exit(1);
    }
}

fn order(id: &str) -> usize {
    id.parse().unwrap_or(99)
}

fn print_pending(checks: &[Check]) {
    for c in checks {
        eprintln!("  {} [{}] {}", if c.pass { "pass" } else { "FAIL" }, c.id, c.title);
    }
}
