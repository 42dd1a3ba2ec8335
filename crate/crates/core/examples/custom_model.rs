//! A user-supplied model and kernel. Coefficient regularity and the kernel
//! values at 0 are taken on trust; the kernel structure is checked through
//! its resolvent before the generic tests run.

use volterra_feller::feller::{bounded_interval_test, necessary_test, sufficient_test, Hypotheses};
use volterra_feller::kernels::CustomKernel;
use volterra_feller::scale::ModelSpec;
use volterra_feller::scale::ScaleContext;

fn main() -> volterra_feller::Result<()> {
    // mean-reverting drift on (0, 1); σ² ~ √x near 0, so σ⁻² stays integrable
    let model = ModelSpec::custom(
        |x| 0.8 * (0.5 - x) + 0.2 * x * (1.0 - x),
        |x| 0.6 * (x * (1.0 - x)).max(0.0).powf(0.25),
        0.0,
        1.0,
        0.4,
    )?;
    // K(t) = 1/(1+t)^2, completely monotone but not recognised as such
    let kernel = CustomKernel::new(
        |t| (1.0 + t).powi(-2),
        |t| -2.0 * (1.0 + t).powi(-3),
        1.0,
        -2.0,
    )?;

    let hyp = Hypotheses::establish(&kernel, &model, 1e-3, 2.0);
    println!("hypotheses: {:?}", hyp.flags);

    let ctx = ScaleContext::new(model, &kernel)?;
    for (name, v) in [
        ("necessary", necessary_test(&ctx, &hyp, 1e-6)?),
        ("sufficient", sufficient_test(&ctx, &hyp, 12)?),
        ("bounded", bounded_interval_test(&ctx, &hyp)?),
    ] {
        println!("{name:<10} {:?} at {:?}", v.verdict, v.boundary);
        for e in &v.evidence {
            println!("    {} = {:e}", e.quantity, e.value);
        }
    }
    Ok(())
}
