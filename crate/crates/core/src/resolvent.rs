//! Resolvent of the first kind `L` with `K ∗ L = 1`, split as an atom
//! `1/K(0)` at the origin plus a density `ρ` on a uniform grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventGrid {
    pub dt: f64,
    pub horizon: f64,
    pub atom: f64,
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    pub kprime_conv_l: Vec<f64>,
    /// `max_i |(K∗L)(t_i) - 1|`, measured with the trapezoidal rule.
    pub residual: f64,
}

/// Solves `K ∗ L = 1` by forward substitution on the left-rectangle
/// discretisation of `K ∗ ρ = 1 - K/K(0)`.
///
/// Fails with [`Error::ResolventTolerance`] if the trapezoidal residual of the
/// computed measure exceeds `10·dt`.
pub fn solve_resolvent(kernel: &dyn Kernel, dt: f64, horizon: f64) -> Result<ResolventGrid> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(horizon.is_finite() && horizon >= dt) {
        return Err(Error::param("horizon", "must be at least dt"));
    }
    let k0 = kernel.scalars().k0;
    if !(k0 > 0.0) {
        return Err(Error::Precondition("resolvent needs K(0) > 0".into()));
    }
    let n = (horizon / dt).round() as usize;

    // K and K' at lags 0..=n+1; one extra lag so ρ is known at every grid time
    let mut kv = Vec::with_capacity(n + 2);
    let mut kd = Vec::with_capacity(n + 2);
    for i in 0..=n + 1 {
        let t = i as f64 * dt;
        kv.push(kernel.eval(t)?);
        kd.push(kernel.derivative(t)?);
    }
    let pivot = kv[1] * dt;
    if pivot.abs() < 1e-300 || pivot.abs() < 1e-14 * k0 * dt {
        return Err(Error::Numeric(format!(
            "triangular solve ill-conditioned: K(dt) = {:e}",
            kv[1]
        )));
    }

    let atom = 1.0 / k0;
    let mut rho = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let mut acc = 0.0;
        for (j, r) in rho.iter().enumerate() {
            acc += kv[i - j] * r;
        }
        let next = (1.0 - kv[i] * atom - dt * acc) / pivot;
        if !next.is_finite() {
            return Err(Error::Numeric(format!(
                "resolvent density non-finite at step {i}"
            )));
        }
        rho.push(next);
    }

    let mut times = Vec::with_capacity(n + 1);
    let mut kprime = Vec::with_capacity(n + 1);
    let mut residual: f64 = 0.0;
    for i in 0..=n {
        times.push(i as f64 * dt);
        let mut conv_d = 0.0;
        for j in 0..i {
            conv_d += kd[i - j] * rho[j];
        }
        let kl = kd[i] * atom + dt * conv_d;
        kprime.push(kl);

        let mut trap = 0.0;
        for j in 0..=i {
            let w = if j == 0 || j == i { 0.5 } else { 1.0 };
            trap += w * kv[i - j] * rho[j];
        }
        if i == 0 {
            trap = 0.0;
        }
        residual = residual.max((kv[i] * atom + dt * trap - 1.0).abs());
    }
    rho.truncate(n + 1);

    let tolerance = 10.0 * dt;
    if residual > tolerance {
        return Err(Error::ResolventTolerance {
            residual,
            tolerance,
        });
    }
    Ok(ResolventGrid {
        dt,
        horizon,
        atom,
        times,
        density: rho,
        kprime_conv_l: kprime,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    /// Index of the largest violation (or of the extreme value when passing).
    pub worst_index: usize,
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub tol: f64,
    pub density_nonnegative: CheckOutcome,
    pub kprime_conv_nonpositive: CheckOutcome,
    pub kprime_conv_nondecreasing: CheckOutcome,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.density_nonnegative.passed
            && self.kprime_conv_nonpositive.passed
            && self.kprime_conv_nondecreasing.passed
    }
}

pub fn check_hypotheses(grid: &ResolventGrid) -> HypothesisReport {
    check_hypotheses_with_tol(grid, 100.0 * grid.dt)
}

pub fn check_hypotheses_with_tol(grid: &ResolventGrid, tol: f64) -> HypothesisReport {
    let (i_min, rho_min) = extreme(&grid.density, |a, b| a < b);
    let (i_max, kl_max) = extreme(&grid.kprime_conv_l, |a, b| a > b);
    // largest drop between a value and the running maximum before it
    let mut running = f64::NEG_INFINITY;
    let mut drop = 0.0;
    let mut drop_at = 0;
    for (i, &v) in grid.kprime_conv_l.iter().enumerate() {
        running = running.max(v);
        if running - v > drop {
            drop = running - v;
            drop_at = i;
        }
    }
    HypothesisReport {
        tol,
        density_nonnegative: CheckOutcome {
            passed: rho_min >= -tol,
            worst_index: i_min,
            worst_value: rho_min,
        },
        kprime_conv_nonpositive: CheckOutcome {
            passed: kl_max <= tol,
            worst_index: i_max,
            worst_value: kl_max,
        },
        kprime_conv_nondecreasing: CheckOutcome {
            passed: drop <= tol,
            worst_index: drop_at,
            worst_value: drop,
        },
    }
}

fn extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values.first().copied().unwrap_or(0.0));
    for (i, &v) in values.iter().enumerate() {
        if better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CustomKernel, KernelSpec};

    #[test]
    fn exponential_kernel_has_unit_density() {
        let k = KernelSpec::sum_of_exponentials(vec![1.0], vec![1.0]).unwrap();
        let g = solve_resolvent(&k, 1e-3, 2.0).unwrap();
        assert_eq!(g.atom, 1.0);
        assert!(g.density.iter().all(|r| (r - 1.0).abs() < 1e-2));
        assert!(g.kprime_conv_l.iter().all(|v| (v + 1.0).abs() < 1e-2));
        assert!(check_hypotheses(&g).passed());
    }

    #[test]
    fn constant_kernel_is_a_pure_atom() {
        let k = KernelSpec::constant(4.0).unwrap();
        let g = solve_resolvent(&k, 1e-2, 1.0).unwrap();
        assert_eq!(g.atom, 0.25);
        assert!(g.density.iter().all(|&r| r == 0.0));
        assert!(g.kprime_conv_l.iter().all(|&v| v == 0.0));
        assert_eq!(g.residual, 0.0);
    }

    #[test]
    fn density_at_origin_matches_kernel_slope() {
        let k = KernelSpec::sum_of_exponentials(vec![1.0, 2.0], vec![0.5, 3.0]).unwrap();
        let g = solve_resolvent(&k, 1e-4, 0.01).unwrap();
        let extrapolated = 2.0 * g.density[1] - g.density[2];
        assert!((extrapolated - 6.5 / 9.0).abs() < 1e-3, "{extrapolated}");
        assert!(check_hypotheses(&g).passed());
    }

    #[test]
    fn bad_kernel_fails_the_check() {
        // K(t) = 1 + t has L = δ₀ - e^{-t}dt and K'∗L = e^{-t} > 0
        let k = CustomKernel::new(|t| 1.0 + t, |_| 1.0, 1.0, 1.0).unwrap();
        let g = solve_resolvent(&k, 1e-3, 1.0).unwrap();
        let report = check_hypotheses(&g);
        assert!(!report.density_nonnegative.passed);
        assert!(!report.kprime_conv_nonpositive.passed);
        assert!(!report.passed());
    }

    #[test]
    fn invalid_steps_rejected() {
        let k = KernelSpec::constant(1.0).unwrap();
        assert!(solve_resolvent(&k, 0.0, 1.0).is_err());
        assert!(solve_resolvent(&k, 1.0, 0.5).is_err());
    }
}
