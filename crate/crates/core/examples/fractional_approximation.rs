//! Nonsingular approximations of the fractional kernel `t^{α-1}/Γ(α)` and
//! the CIR thresholds they imply as the approximation is refined.

use volterra_feller::feller::{fractional_condition_study, CirParams, StudyScheme};
use volterra_feller::fracapprox::{
    approximation_error, build_kernel, ApproxScheme, QuadratureWeight,
};
use volterra_feller::kernels::{Kernel, KernelSpec};

fn main() -> volterra_feller::Result<()> {
    let alpha = 0.6;
    let scheme = ApproxScheme::geometric(alpha, 1.0, 6.4, 4, 2, QuadratureWeight::Fractional)?;
    let kernel = build_kernel(&scheme)?;
    if let KernelSpec::SumOfExponentials { m, x } = &kernel {
        println!("{} exponentials", m.len());
        for (w, r) in m.iter().zip(x) {
            println!("  m = {w:.6e}  x = {r:.6e}");
        }
    }
    let s = kernel.scalars();
    println!("K(0) = {:.6}  K'(0) = {:.6}", s.k0, s.kp0);
    for row in approximation_error(&kernel, alpha, &[0.01, 0.1, 1.0, 10.0])? {
        println!(
            "  t = {:<5} approx = {:.6} exact = {:.6} rel = {:.2e}",
            row.t, row.approx, row.exact, row.rel_error
        );
    }

    let cir = CirParams {
        kappa: 1.0,
        theta: 0.1,
        sigma: 1.0,
    };
    for a in [0.4, 0.6] {
        println!("alpha = {a}, truncation level T:");
        for row in
            fractional_condition_study(a, &StudyScheme::Truncation, cir, &[1e2, 1e3, 1e4, 1e5])?
        {
            println!(
                "  T = {:<8} x0 >= {:.4}  gap = {:.4}  ({:?})",
                row.sweep, row.necessary_threshold, row.sufficient_gap, row.regime
            );
        }
    }
    Ok(())
}
