//! Kernel values near the origin and the resolvent of the first kind for
//! each built-in kernel family.

use volterra_feller::kernels::{Kernel, KernelSpec};
use volterra_feller::resolvent::{check_hypotheses, solve_resolvent};

fn main() -> volterra_feller::Result<()> {
    let kernels = [
        KernelSpec::constant(2.0)?,
        KernelSpec::sum_of_exponentials(vec![1.0, 2.0], vec![0.5, 3.0])?,
        KernelSpec::truncated_fractional(0.7, 100.0)?,
    ];
    for k in &kernels {
        let s = k.scalars();
        println!("{k}");
        println!(
            "  K(0) = {:.6}  K'(0) = {:.6}  K(1) = {:.6}",
            s.k0,
            s.kp0,
            k.eval(1.0)?
        );

        let grid = solve_resolvent(k, 1e-3, 2.0)?;
        let report = check_hypotheses(&grid);
        let last = grid.times.len() - 1;
        println!(
            "  atom = {:.6}  rho(t={}) = {:.6}  (K'*L)(t={}) = {:.6}",
            grid.atom,
            grid.times[last],
            grid.density[last],
            grid.times[last],
            grid.kprime_conv_l[last]
        );
        println!(
            "  residual = {:.2e}  checks passed: {}",
            grid.residual,
            report.passed()
        );
    }
    Ok(())
}
