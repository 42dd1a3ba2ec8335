//! Runs every boundary test on the bundled CIR and Jacobi configurations.

use std::path::Path;

use volterra_feller::config::ExperimentConfig;
use volterra_feller::feller::{
    default_eps_shift, family_test, necessary_test, sufficient_test, sup_inf_test, BoundaryVerdict,
    Hypotheses,
};
use volterra_feller::kernels::Kernel;
use volterra_feller::scale::ScaleContext;

fn show(name: &str, v: &BoundaryVerdict) {
    println!(
        "  {name:<10} {:?} at {:?} ({})",
        v.verdict, v.boundary, v.rule
    );
    for e in &v.evidence {
        println!("    {} = {:e}", e.quantity, e.value);
    }
}

fn main() -> volterra_feller::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    for file in [
        "cir_feller.toml",
        "cir_two_factor.toml",
        "jacobi_fractional.toml",
    ] {
        let cfg = ExperimentConfig::from_path(&dir.join(file))?;
        let model = cfg.model_spec()?;
        println!("{file}: {model:?} with {}", cfg.kernel);

        for v in family_test(&model, cfg.kernel.scalars())? {
            show("family", &v);
        }
        let hyp = Hypotheses::establish(
            &cfg.kernel,
            &model,
            cfg.test.resolvent_dt,
            cfg.test.resolvent_horizon,
        );
        let ctx =
            ScaleContext::new(model.clone(), &cfg.kernel)?.with_settings(cfg.test.scale_settings());
        show(
            "necessary",
            &necessary_test(&ctx, &hyp, default_eps_shift(&model))?,
        );
        show("sufficient", &sufficient_test(&ctx, &hyp, cfg.test.stages)?);
        show("sup_inf", &sup_inf_test(&ctx, &hyp)?);
    }
    Ok(())
}
