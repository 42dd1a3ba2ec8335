//! Nonsingular approximations of the fractional kernel
//! `K_α(t) = t^{α-1}/Γ(α) = ∫_0^∞ e^{-xt} w(x) dx` with
//! `w(x) = x^{-α}/(Γ(α)Γ(1-α))`.
//!
//! Two constructions: truncating the integral at `T`, or replacing the
//! measure on each interval `[ξ_{n-1}, ξ_n]` by an order-`q` Gaussian rule.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelScalars, KernelSpec};
use crate::quad::{integrate, QuadSettings};
use crate::special::{fractional_norm, gamma};

/// Largest rule order accepted by [`gaussian_quadrature_kernel`].
pub const MAX_ORDER: usize = 12;

/// Default growth ratio of geometric node sequences.
pub const DEFAULT_RATIO: f64 = 6.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadratureWeight {
    /// `w(x)` on every interval.
    Fractional,
    /// `w(x)` on `[0, ξ_1]`, Lebesgue measure on the remaining intervals.
    FractionalThenUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SchemeKind {
    Truncation {
        t_max: f64,
    },
    Quadrature {
        nodes: Vec<f64>,
        q: usize,
        weight: QuadratureWeight,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxScheme {
    pub alpha: f64,
    pub kind: SchemeKind,
}

impl ApproxScheme {
    pub fn truncation(alpha: f64, t_max: f64) -> Result<Self> {
        let s = ApproxScheme {
            alpha,
            kind: SchemeKind::Truncation { t_max },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn quadrature(
        alpha: f64,
        nodes: Vec<f64>,
        q: usize,
        weight: QuadratureWeight,
    ) -> Result<Self> {
        let s = ApproxScheme {
            alpha,
            kind: SchemeKind::Quadrature { nodes, q, weight },
        };
        s.validate()?;
        Ok(s)
    }

    /// Nodes `0, ξ_1, ξ_1·a, …, ξ_1·a^{n-1}`, i.e. `n` intervals.
    pub fn geometric(
        alpha: f64,
        xi1: f64,
        ratio: f64,
        n: usize,
        q: usize,
        weight: QuadratureWeight,
    ) -> Result<Self> {
        if !(xi1.is_finite() && xi1 > 0.0) {
            return Err(Error::param("xi1", "must be positive"));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::param("ratio", "must exceed 1"));
        }
        if n == 0 {
            return Err(Error::param("n", "needs at least one interval"));
        }
        let mut nodes = vec![0.0];
        nodes.extend((0..n).map(|k| xi1 * ratio.powi(k as i32)));
        Self::quadrature(alpha, nodes, q, weight)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1)"));
        }
        match &self.kind {
            SchemeKind::Truncation { t_max } => {
                if !(t_max.is_finite() && *t_max > 0.0) {
                    return Err(Error::param("T", "must be positive and finite"));
                }
            }
            SchemeKind::Quadrature { nodes, q, weight } => {
                if nodes.len() < 2 {
                    return Err(Error::param("nodes", "need at least two nodes"));
                }
                if nodes[0] < 0.0 || nodes.iter().any(|x| !x.is_finite()) {
                    return Err(Error::param("nodes", "must be finite and nonnegative"));
                }
                if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::param("nodes", "must be strictly increasing"));
                }
                if *weight == QuadratureWeight::FractionalThenUnit && nodes[0] != 0.0 {
                    return Err(Error::param(
                        "nodes",
                        "first node must be 0 for this weight",
                    ));
                }
                if *q == 0 || *q > MAX_ORDER {
                    return Err(Error::param("q", format!("must lie in 1..={MAX_ORDER}")));
                }
            }
        }
        Ok(())
    }

    /// `(K(0), K'(0))` of the approximating kernel from the measure it
    /// integrates, without building the rule.
    pub fn analytic_scalars(&self) -> KernelScalars {
        let a = self.alpha;
        let norm = fractional_norm(a);
        // ∫_lo^hi x^k w(x) dx
        let frac = |k: f64, lo: f64, hi: f64| {
            (hi.powf(k + 1.0 - a) - lo.powf(k + 1.0 - a)) / ((k + 1.0 - a) * norm)
        };
        match &self.kind {
            SchemeKind::Truncation { t_max } => {
                let (k0, kp0) = KernelSpec::TruncatedFractional {
                    alpha: a,
                    t_max: *t_max,
                }
                .k0_kprime0();
                KernelScalars { k0, kp0 }
            }
            SchemeKind::Quadrature { nodes, weight, .. } => {
                let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
                match weight {
                    QuadratureWeight::Fractional => KernelScalars {
                        k0: frac(0.0, first, last),
                        kp0: -frac(1.0, first, last),
                    },
                    QuadratureWeight::FractionalThenUnit => {
                        let xi1 = nodes[1];
                        KernelScalars {
                            k0: frac(0.0, 0.0, xi1) + (last - xi1),
                            kp0: -(frac(1.0, 0.0, xi1) + 0.5 * (last * last - xi1 * xi1)),
                        }
                    }
                }
            }
        }
    }
}

/// The truncated kernel `∫_0^T e^{-xt} w(x) dx`.
pub fn truncation_kernel(alpha: f64, t_max: f64) -> Result<KernelSpec> {
    KernelSpec::truncated_fractional(alpha, t_max)
}

/// Kernel of either scheme.
pub fn build_kernel(scheme: &ApproxScheme) -> Result<KernelSpec> {
    match &scheme.kind {
        SchemeKind::Truncation { t_max } => truncation_kernel(scheme.alpha, *t_max),
        SchemeKind::Quadrature { .. } => gaussian_quadrature_kernel(scheme),
    }
}

/// One Gaussian rule per interval, concatenated into a sum of exponentials
/// `Σ m_n e^{-x_n t}`.
pub fn gaussian_quadrature_kernel(scheme: &ApproxScheme) -> Result<KernelSpec> {
    scheme.validate()?;
    let SchemeKind::Quadrature { nodes, q, weight } = &scheme.kind else {
        return Err(Error::Precondition(
            "scheme is not a quadrature scheme".into(),
        ));
    };
    let mut m = Vec::with_capacity(q * (nodes.len() - 1));
    let mut x = Vec::with_capacity(m.capacity());
    for (n, w) in nodes.windows(2).enumerate() {
        let interval = match weight {
            QuadratureWeight::FractionalThenUnit if n > 0 => IntervalWeight::Unit,
            _ => IntervalWeight::Fractional(scheme.alpha),
        };
        let (pts, wts) = gauss_rule(interval, w[0], w[1], *q)?;
        x.extend(pts);
        m.extend(wts);
    }
    KernelSpec::sum_of_exponentials(m, x)
}

#[derive(Debug, Clone, Copy)]
enum IntervalWeight {
    Fractional(f64),
    Unit,
}

/// Modified moments `∫ π_k(t(x)) w(x) dx`, `k < 2q`, against the monic
/// Legendre polynomials `π_k` on `[0, 1]` with `t(x) = (x-lo)/(hi-lo)`.
fn modified_moments(weight: IntervalWeight, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    let h = hi - lo;
    // leading coefficient of the shifted Legendre polynomial is C(2k, k)
    let lead = |k: usize| (1..=k).fold(1.0, |acc, j| acc * (k + j) as f64 / j as f64);
    match weight {
        IntervalWeight::Unit => {
            let mut out = vec![0.0; count];
            out[0] = h;
            Ok(out)
        }
        IntervalWeight::Fractional(a) if lo == 0.0 => {
            // ∫_0^1 t^s P̃_k(t) dt = Π_{j<k}(s-j) / Π_{j=1}^{k+1}(s+j)
            let s = -a;
            let scale = h.powf(1.0 - a) / fractional_norm(a);
            Ok((0..count)
                .map(|k| {
                    let num: f64 = (0..k).map(|j| s - j as f64).product();
                    let den: f64 = (1..=k + 1).map(|j| s + j as f64).product();
                    scale * num / den / lead(k)
                })
                .collect())
        }
        IntervalWeight::Fractional(a) => {
            let norm = fractional_norm(a);
            let mass = (hi.powf(1.0 - a) - lo.powf(1.0 - a)) / ((1.0 - a) * norm);
            let settings = QuadSettings {
                abs_tol: 1e-13 * mass,
                rel_tol: 1e-13,
                max_subdivisions: 2000,
            };
            (0..count)
                .map(|k| {
                    let f = |x: f64| monic_legendre(k, (x - lo) / h) * x.powf(-a) / norm;
                    integrate(f, lo, hi, &settings).map(|r| r.value)
                })
                .collect()
        }
    }
}

/// Recurrence coefficients of the monic Legendre polynomials on `[0, 1]`.
fn legendre_coeffs(k: usize) -> (f64, f64) {
    let b = if k == 0 {
        1.0
    } else {
        let k2 = (k * k) as f64;
        0.25 * k2 / (4.0 * k2 - 1.0)
    };
    (0.5, b)
}

fn monic_legendre(k: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let (a, b) = legendre_coeffs(j);
        let next = (t - a) * cur - if j == 0 { 0.0 } else { b * prev };
        prev = cur;
        cur = next;
    }
    cur
}

/// Order-`q` Gaussian rule for `weight` on `[lo, hi]`: recurrence
/// coefficients by the modified Chebyshev algorithm, then nodes and weights
/// from the eigen-decomposition of the Jacobi matrix.
fn gauss_rule(weight: IntervalWeight, lo: f64, hi: f64, q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mom = modified_moments(weight, lo, hi, 2 * q)?;
    let ill = |k: usize| {
        Error::Numeric(format!(
            "moment recursion lost positivity at order {k} on [{lo}, {hi}]; use a smaller q or refine the nodes"
        ))
    };
    if !(mom[0] > 0.0) {
        return Err(ill(0));
    }
    let mut alpha = vec![0.0; q];
    let mut beta = vec![0.0; q];
    let (a0, _) = legendre_coeffs(0);
    alpha[0] = a0 + mom[1] / mom[0];
    beta[0] = mom[0];
    let mut older = vec![0.0; 2 * q];
    let mut old = mom.clone();
    for k in 1..q {
        let mut cur = vec![0.0; 2 * q];
        for l in k..(2 * q - k) {
            let (al, bl) = legendre_coeffs(l);
            cur[l] = old[l + 1] - (alpha[k - 1] - al) * old[l] - beta[k - 1] * older[l]
                + bl * old[l - 1];
        }
        if !(cur[k] > 0.0) || !cur[k].is_finite() {
            return Err(ill(k));
        }
        let (ak, _) = legendre_coeffs(k);
        alpha[k] = ak + cur[k + 1] / cur[k] - old[k] / old[k - 1];
        beta[k] = cur[k] / old[k - 1];
        older = old;
        old = cur;
    }

    let jac = DMatrix::from_fn(q, q, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[j].sqrt()
        } else if j + 1 == i {
            beta[i].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (lo + (hi - lo) * eig.eigenvalues[i], beta[0] * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.iter().any(|&(x, w)| !(x > lo && x < hi && w > 0.0)) {
        return Err(ill(q));
    }
    Ok(pairs.into_iter().unzip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxErrorRow {
    pub t: f64,
    pub approx: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// Pointwise comparison of `kernel` with `t^{α-1}/Γ(α)`.
pub fn approximation_error(
    kernel: &dyn Kernel,
    alpha: f64,
    t_grid: &[f64],
) -> Result<Vec<ApproxErrorRow>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    t_grid
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!(
                    "t = {t}: the fractional kernel is only finite for t > 0"
                )));
            }
            let approx = kernel.eval(t)?;
            let exact = t.powf(alpha - 1.0) / gamma(alpha);
            let abs_error = (approx - exact).abs();
            Ok(ApproxErrorRow {
                t,
                approx,
                exact,
                abs_error,
                rel_error: abs_error / exact,
            })
        })
        .collect()
}
