//! The file-based workflow: a TOML config drives a multi-seed run, records
//! land on disk, a table is built from them, and a checkpoint is reloaded to
//! export a dense front.
//!
//!     cargo run --release --example experiment_pipeline -- [output dir]

use stein_pareto::runner::{
    emit_front, emit_table, evaluate_checkpoint, load_records, run_experiment, Checkpoint, ExperimentConfig,
    TableShape,
};

fn main() -> stein_pareto::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/pipeline".into());
    let mut cfg = ExperimentConfig::from_toml(include_str!("configs/zdt2_svh_stch.toml"))?;
    cfg.output_dir = out.clone().into();
    // keep the demo short
    cfg.schedule.iterations = 3000;
    println!("config {} -> {}/{}", cfg.label(), out, cfg.hash());

    for r in run_experiment(&cfg)? {
        println!("seed {}: {:?} in {:.1}s", r.seed, r.status, r.wall_clock_seconds);
    }

    let records = load_records(&format!("{out}/*/*/record.json"))?;
    print!("\n{}", emit_table(&records, TableShape::Med)?);

    let ck = Checkpoint::load(records[0].checkpoint.as_ref().expect("checkpoint written"))?;
    let report = evaluate_checkpoint(&ck, 200)?;
    println!("\nreloaded checkpoint, 200 rays: HV {:.4}, MED {:.3e}", report.hv, report.med.unwrap());
    let (front, rays) = emit_front(&ck, 200, std::path::Path::new(&out))?;
    println!("front written to {} and {}", front.display(), rays.display());
    Ok(())
}
