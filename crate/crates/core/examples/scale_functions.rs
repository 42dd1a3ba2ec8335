//! Scale function `p_c` and test function `v_c` of a CIR model driven by a
//! two-factor kernel, with and without shifts, plus the series `u_c`.

use volterra_feller::kernels::KernelSpec;
use volterra_feller::scale::{LimitTarget, ModelSpec, ScaleContext, Side};

fn main() -> volterra_feller::Result<()> {
    let model = ModelSpec::cir(1.0, 1.0, 0.5, 1.0)?;
    let kernel = KernelSpec::sum_of_exponentials(vec![1.0, 2.0], vec![0.5, 3.0])?;
    let ctx = ScaleContext::new(model, &kernel)?;
    let shifted = ctx.clone().with_shifts(-0.5, 0.5);

    println!(
        "{:>6} {:>14} {:>14} {:>14} {:>14}",
        "x", "p", "v", "v(-0.5,0.5)", "u (8 terms)"
    );
    for x in [0.1, 0.25, 0.5, 0.75, 1.5, 2.0, 3.0] {
        println!(
            "{x:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            ctx.scale(x)?,
            ctx.v(x)?,
            shifted.v(x)?,
            ctx.u_series(x, 8)?
        );
    }

    for side in [Side::Left, Side::Right] {
        println!(
            "{side:?}: p -> {:?}, v -> {:?}",
            ctx.boundary_limit(side, LimitTarget::ScaleP),
            ctx.boundary_limit(side, LimitTarget::TestV)
        );
    }
    Ok(())
}
