//! Simulates the bundled models and checks the simulated hitting frequencies
//! against the analytic verdicts. Set `VOLTERRA_FELLER_THREADS` to cap the
//! worker threads.

use std::path::Path;

use volterra_feller::config::ExperimentConfig;
use volterra_feller::feller::family_test;
use volterra_feller::kernels::Kernel;
use volterra_feller::simulate::{compare_schemes, simulate, verdict_crosscheck, Scheme};

fn main() -> volterra_feller::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    for file in ["cir_feller.toml", "cir_hits_zero.toml", "power_blowup.toml"] {
        let mut cfg = ExperimentConfig::from_path(&dir.join(file))?;
        cfg.resolve()?;
        let model = cfg.model_spec()?;
        let sim = cfg.sim_config()?;
        let report = simulate(&sim)?;
        println!(
            "{file}: {} paths, left {:.3}, right {:.3}, surviving {}",
            report.n_paths, report.hit_fraction_left, report.hit_fraction_right, report.surviving
        );

        let verdicts = family_test(&model, cfg.kernel.scalars())?;
        let check = verdict_crosscheck(&model, &cfg.kernel, &sim, &verdicts, cfg.sim.tolerances())?;
        for row in &check.rows {
            println!(
                "  {:?} {:?}: fraction {:.3}, {} -> {}",
                row.boundary,
                row.verdict,
                row.hit_fraction,
                row.requirement,
                if row.consistent {
                    "consistent"
                } else {
                    "INCONSISTENT"
                }
            );
        }
    }

    // the two schemes agree up to O(dt) on a sum-of-exponentials kernel
    let cfg = ExperimentConfig::from_path(&dir.join("cir_two_factor.toml"))?;
    let mut sim = cfg.sim_config()?;
    sim.scheme = Scheme::MarkovianLift;
    sim.n_paths = 200;
    for row in compare_schemes(&sim, &[1e-2, 5e-3, 2.5e-3])? {
        println!(
            "dt = {:<7} max |X_conv - X_lift| = {:.3e}",
            row.dt, row.max_discrepancy
        );
    }
    Ok(())
}
