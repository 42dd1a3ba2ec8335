//! Nonsingular convolution kernels.
//!
//! Every [`KernelSpec`] variant is completely monotone on `(0, ∞)` with a
//! finite value at the origin, so `K(0) > 0` and `K'(0) ≤ 0` hold by
//! construction. User-supplied kernels go through [`CustomKernel`] instead and
//! carry their `K(0)`, `K'(0)` as caller assertions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadSettings};
use crate::special::{fractional_norm, gamma};

/// Scalar kernel data consumed by the boundary tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelScalars {
    pub k0: f64,
    pub kp0: f64,
}

pub trait Kernel: Send + Sync {
    fn eval(&self, t: f64) -> Result<f64>;
    fn derivative(&self, t: f64) -> Result<f64>;
    fn scalars(&self) -> KernelScalars;
    /// Whether complete monotonicity is guaranteed by construction.
    fn completely_monotone(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum KernelSpec {
    #[serde(rename = "constant")]
    Constant { level: f64 },
    #[serde(rename = "sumexp")]
    SumOfExponentials { m: Vec<f64>, x: Vec<f64> },
    #[serde(rename = "truncated_fractional")]
    TruncatedFractional {
        alpha: f64,
        #[serde(rename = "T")]
        t_max: f64,
    },
}

impl KernelSpec {
    pub fn constant(level: f64) -> Result<Self> {
        let k = KernelSpec::Constant { level };
        k.validate()?;
        Ok(k)
    }

    pub fn sum_of_exponentials(m: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let k = KernelSpec::SumOfExponentials { m, x };
        k.validate()?;
        Ok(k)
    }

    pub fn truncated_fractional(alpha: f64, t_max: f64) -> Result<Self> {
        let k = KernelSpec::TruncatedFractional { alpha, t_max };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Constant { level } => {
                if !(level.is_finite() && *level > 0.0) {
                    return Err(Error::param("kernel.level", "must be positive and finite"));
                }
            }
            KernelSpec::SumOfExponentials { m, x } => {
                if m.is_empty() {
                    return Err(Error::param("kernel.m", "needs at least one weight"));
                }
                if m.len() != x.len() {
                    return Err(Error::param(
                        "kernel.x",
                        format!("has {} rates for {} weights", x.len(), m.len()),
                    ));
                }
                if let Some(bad) = m.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                    return Err(Error::param(
                        "kernel.m",
                        format!("weight {bad} is not positive"),
                    ));
                }
                if let Some(bad) = x.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
                    return Err(Error::param("kernel.x", format!("rate {bad} is negative")));
                }
            }
            KernelSpec::TruncatedFractional { alpha, t_max } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::param("kernel.alpha", "must lie in (0, 1)"));
                }
                if !(t_max.is_finite() && *t_max > 0.0) {
                    return Err(Error::param("kernel.T", "must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, KernelSpec::Constant { .. })
    }

    /// Closed-form `(K(0), K'(0))`.
    pub fn k0_kprime0(&self) -> (f64, f64) {
        match self {
            KernelSpec::Constant { level } => (*level, 0.0),
            KernelSpec::SumOfExponentials { m, x } => {
                let k0 = m.iter().sum();
                let kp0 = -m.iter().zip(x).map(|(w, r)| w * r).sum::<f64>();
                (k0, kp0)
            }
            KernelSpec::TruncatedFractional { alpha, t_max } => {
                let a = *alpha;
                let k0 = t_max.powf(1.0 - a) / (gamma(a) * gamma(2.0 - a));
                let kp0 = -t_max.powf(2.0 - a) / ((2.0 - a) * fractional_norm(a));
                (k0, kp0)
            }
        }
    }

    /// `K(t)`, with the truncated fractional integral evaluated to `settings`.
    pub fn eval_with(&self, t: f64, settings: &QuadSettings) -> Result<f64> {
        check_time(t)?;
        match self {
            KernelSpec::Constant { level } => Ok(*level),
            KernelSpec::SumOfExponentials { m, x } => {
                Ok(m.iter().zip(x).map(|(w, r)| w * (-r * t).exp()).sum())
            }
            KernelSpec::TruncatedFractional { alpha, t_max } => {
                fractional_moment(*alpha, *t_max, t, 0, settings)
            }
        }
    }

    pub fn derivative_with(&self, t: f64, settings: &QuadSettings) -> Result<f64> {
        check_time(t)?;
        match self {
            KernelSpec::Constant { .. } => Ok(0.0),
            KernelSpec::SumOfExponentials { m, x } => Ok(-m
                .iter()
                .zip(x)
                .map(|(w, r)| w * r * (-r * t).exp())
                .sum::<f64>()),
            KernelSpec::TruncatedFractional { alpha, t_max } => {
                Ok(-fractional_moment(*alpha, *t_max, t, 1, settings)?)
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::Domain(format!(
            "kernel evaluated at negative time t = {t}"
        )))
    } else {
        Ok(())
    }
}

/// `∫_0^T x^k e^{-xt} x^{-α} dx / (Γ(α)Γ(1-α))` after the substitution
/// `u = x^{1-α}`, which turns the weight into a constant.
fn fractional_moment(
    alpha: f64,
    t_max: f64,
    t: f64,
    k: i32,
    settings: &QuadSettings,
) -> Result<f64> {
    let p = 1.0 / (1.0 - alpha);
    let upper = t_max.powf(1.0 - alpha);
    let integrand = |u: f64| {
        let x = u.powf(p);
        x.powi(k) * (-t * x).exp()
    };
    let r = integrate(integrand, 0.0, upper, settings)?;
    Ok(r.value * p / fractional_norm(alpha))
}

impl Kernel for KernelSpec {
    fn eval(&self, t: f64) -> Result<f64> {
        self.eval_with(t, &kernel_quad())
    }
    fn derivative(&self, t: f64) -> Result<f64> {
        self.derivative_with(t, &kernel_quad())
    }
    fn scalars(&self) -> KernelScalars {
        let (k0, kp0) = self.k0_kprime0();
        KernelScalars { k0, kp0 }
    }
    fn completely_monotone(&self) -> bool {
        true
    }
}

fn kernel_quad() -> QuadSettings {
    QuadSettings {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_subdivisions: 4000,
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Constant { level } => write!(f, "Constant({level})"),
            KernelSpec::SumOfExponentials { m, x } => {
                write!(f, "SumOfExponentials(m={m:?}, x={x:?})")
            }
            KernelSpec::TruncatedFractional { alpha, t_max } => {
                write!(f, "TruncatedFractional(alpha={alpha}, T={t_max})")
            }
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user kernel whose hypotheses cannot be checked symbolically. `K(0)` and
/// `K'(0)` are taken on trust; run [`crate::resolvent::check_hypotheses`] to
/// establish the structural assumptions numerically.
#[derive(Clone)]
pub struct CustomKernel {
    value: ScalarFn,
    derivative: ScalarFn,
    scalars: KernelScalars,
}

impl CustomKernel {
    pub fn new<F, G>(value: F, derivative: G, k0: f64, kp0: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::param("K(0)", "must be positive and finite"));
        }
        if !kp0.is_finite() {
            return Err(Error::param("K'(0)", "must be finite"));
        }
        Ok(Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            scalars: KernelScalars { k0, kp0 },
        })
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("scalars", &self.scalars)
            .finish()
    }
}

impl Kernel for CustomKernel {
    fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((self.value)(t))
    }
    fn derivative(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((self.derivative)(t))
    }
    fn scalars(&self) -> KernelScalars {
        self.scalars
    }
    fn completely_monotone(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_kernel() {
        let k = KernelSpec::constant(2.0).unwrap();
        assert_eq!(k.eval(7.0).unwrap(), 2.0);
        assert_eq!(KernelSpec::constant(1.0).unwrap().k0_kprime0(), (1.0, 0.0));
    }

    #[test]
    fn sum_of_exponentials_scalars() {
        let k = KernelSpec::sum_of_exponentials(vec![1.0, 2.0], vec![0.5, 3.0]).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 3.0);
        assert_eq!(k.k0_kprime0(), (3.0, -6.5));
    }

    #[test]
    fn truncated_fractional_at_origin() {
        let k = KernelSpec::truncated_fractional(0.5, 1.0).unwrap();
        let (k0, kp0) = k.k0_kprime0();
        assert!((k0 - 2.0 / PI).abs() < 1e-14);
        assert!((kp0 + 1.0 / (1.5 * PI)).abs() < 1e-14);
        assert!((k.eval(0.0).unwrap() - k0).abs() < 1e-12);
        assert!((k.derivative(0.0).unwrap() - kp0).abs() < 1e-12);
    }

    #[test]
    fn negative_time_is_a_domain_error() {
        for k in [
            KernelSpec::constant(1.0).unwrap(),
            KernelSpec::truncated_fractional(0.3, 2.0).unwrap(),
        ] {
            assert!(matches!(k.eval(-1.0), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::constant(0.0).is_err());
        assert!(KernelSpec::sum_of_exponentials(vec![1.0], vec![]).is_err());
        assert!(KernelSpec::sum_of_exponentials(vec![-1.0], vec![1.0]).is_err());
        assert!(KernelSpec::sum_of_exponentials(vec![1.0], vec![-1.0]).is_err());
        assert!(KernelSpec::truncated_fractional(1.0, 1.0).is_err());
        assert!(KernelSpec::truncated_fractional(0.5, 0.0).is_err());
    }

    #[test]
    fn serialized_form_is_tagged() {
        let k = KernelSpec::sum_of_exponentials(vec![1.0], vec![2.0]).unwrap();
        let j = serde_json::to_value(&k).unwrap();
        assert_eq!(j["kind"], "sumexp");
        let back: KernelSpec =
            serde_json::from_str(r#"{"kind":"truncated_fractional","alpha":0.4,"T":10}"#).unwrap();
        assert_eq!(back, KernelSpec::truncated_fractional(0.4, 10.0).unwrap());
        assert!(
            serde_json::from_str::<KernelSpec>(r#"{"kind":"constant","level":1,"extra":2}"#)
                .is_err()
        );
    }

    #[test]
    fn custom_kernel_is_not_trusted_as_completely_monotone() {
        let k = CustomKernel::new(|t| (-t).exp(), |t| -(-t).exp(), 1.0, -1.0).unwrap();
        assert!(!k.completely_monotone());
        assert_eq!(k.scalars(), KernelScalars { k0: 1.0, kp0: -1.0 });
    }
}
