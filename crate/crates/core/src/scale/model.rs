//! Drift/diffusion families and their state intervals.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type CoefFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User coefficients `b(x)`, `σ(x)` on `(l, r)`.
///
/// Local integrability of `σ⁻²` and `|b|σ⁻²` on `(l, r)` is the caller's
/// responsibility and is not checked.
#[derive(Clone)]
pub struct CustomCoefficients {
    pub drift: CoefFn,
    pub diffusion: CoefFn,
    pub l: f64,
    pub r: f64,
}

#[derive(Clone)]
pub enum ModelFamily {
    Cir {
        kappa: f64,
        theta: f64,
        sigma: f64,
    },
    /// Diffusion `σ√((x-a)(b-x))`.
    Jacobi {
        a: f64,
        b: f64,
        kappa: f64,
        theta: f64,
        sigma: f64,
    },
    /// Drift `|x|^α`, diffusion `σ|x|^{δ/2}`.
    Power {
        alpha: f64,
        delta: f64,
        sigma: f64,
    },
    Custom(CustomCoefficients),
}

#[derive(Clone)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub x0: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

impl ModelSpec {
    pub fn cir(kappa: f64, theta: f64, sigma: f64, x0: f64) -> Result<Self> {
        Self::new(
            ModelFamily::Cir {
                kappa,
                theta,
                sigma,
            },
            x0,
        )
    }

    pub fn jacobi(a: f64, b: f64, kappa: f64, theta: f64, sigma: f64, x0: f64) -> Result<Self> {
        Self::new(
            ModelFamily::Jacobi {
                a,
                b,
                kappa,
                theta,
                sigma,
            },
            x0,
        )
    }

    pub fn power(alpha: f64, delta: f64, sigma: f64, x0: f64) -> Result<Self> {
        Self::new(
            ModelFamily::Power {
                alpha,
                delta,
                sigma,
            },
            x0,
        )
    }

    pub fn custom<B, S>(drift: B, diffusion: S, l: f64, r: f64, x0: f64) -> Result<Self>
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            ModelFamily::Custom(CustomCoefficients {
                drift: Arc::new(drift),
                diffusion: Arc::new(diffusion),
                l,
                r,
            }),
            x0,
        )
    }

    pub fn new(family: ModelFamily, x0: f64) -> Result<Self> {
        let m = ModelSpec { family, x0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            ModelFamily::Cir {
                kappa,
                theta,
                sigma,
            } => {
                positive("kappa", *kappa)?;
                positive("theta", *theta)?;
                positive("sigma", *sigma)?;
            }
            ModelFamily::Jacobi {
                a,
                b,
                kappa,
                theta,
                sigma,
            } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::param("b", "interval needs finite a < b"));
                }
                positive("kappa", *kappa)?;
                positive("sigma", *sigma)?;
                if !(*theta > *a && *theta < *b) {
                    return Err(Error::param("theta", "must lie strictly inside (a, b)"));
                }
            }
            ModelFamily::Power {
                alpha,
                delta,
                sigma,
            } => {
                if !(alpha.is_finite() && *alpha > 1.0) {
                    return Err(Error::param("alpha", "must exceed 1"));
                }
                if !(*delta >= 0.0 && *delta < 1.0) {
                    return Err(Error::param("delta", "must lie in [0, 1)"));
                }
                positive("sigma", *sigma)?;
            }
            ModelFamily::Custom(cc) => {
                if cc.l.is_nan() || cc.r.is_nan() || cc.l >= cc.r {
                    return Err(Error::param("interval", "needs l < r"));
                }
            }
        }
        let (l, r) = self.interval();
        if !(self.x0 > l && self.x0 < r) {
            return Err(Error::param(
                "x0",
                format!("must lie strictly inside ({l}, {r}), got {}", self.x0),
            ));
        }
        Ok(())
    }

    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        Self::new(self.family.clone(), x0)
    }

    pub fn interval(&self) -> (f64, f64) {
        match &self.family {
            ModelFamily::Cir { .. } => (0.0, f64::INFINITY),
            ModelFamily::Jacobi { a, b, .. } => (*a, *b),
            ModelFamily::Power { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModelFamily::Custom(cc) => (cc.l, cc.r),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (l, r) = self.interval();
        x > l && x < r
    }

    pub fn drift(&self, x: f64) -> f64 {
        match &self.family {
            ModelFamily::Cir { kappa, theta, .. } | ModelFamily::Jacobi { kappa, theta, .. } => {
                kappa * (theta - x)
            }
            ModelFamily::Power { alpha, .. } => x.abs().powf(*alpha),
            ModelFamily::Custom(cc) => (cc.drift)(x),
        }
    }

    /// `σ(x)`, with the square-root arguments clamped at zero so the
    /// simulator can call it on states that overshoot the interval.
    pub fn diffusion(&self, x: f64) -> f64 {
        match &self.family {
            ModelFamily::Cir { sigma, .. } => sigma * x.max(0.0).sqrt(),
            ModelFamily::Jacobi { a, b, sigma, .. } => {
                let y = x.clamp(*a, *b);
                sigma * ((y - a) * (b - y)).sqrt()
            }
            ModelFamily::Power { delta, sigma, .. } => sigma * x.abs().powf(0.5 * delta),
            ModelFamily::Custom(cc) => (cc.diffusion)(x),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            ModelFamily::Cir { .. } => "cir",
            ModelFamily::Jacobi { .. } => "jacobi",
            ModelFamily::Power { .. } => "power",
            ModelFamily::Custom(_) => "custom",
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.family, ModelFamily::Custom(_))
    }

    /// Same family with the same parameters. Custom models compare by
    /// coefficient identity.
    pub fn same_model(&self, other: &ModelSpec) -> bool {
        if self.x0 != other.x0 {
            return false;
        }
        match (&self.family, &other.family) {
            (ModelFamily::Custom(a), ModelFamily::Custom(b)) => {
                Arc::ptr_eq(&a.drift, &b.drift)
                    && Arc::ptr_eq(&a.diffusion, &b.diffusion)
                    && a.l == b.l
                    && a.r == b.r
            }
            (ModelFamily::Custom(_), _) | (_, ModelFamily::Custom(_)) => false,
            _ => format!("{self:?}") == format!("{other:?}"),
        }
    }

    /// Antiderivatives `(Φ, Ψ)` of `2b̃/σ̃²` and `2/σ̃²` at `z` for the built-in
    /// families, where `b̃ = k0·b + ratio·x` and `σ̃ = k0·σ`.
    pub(crate) fn antiderivatives(&self, k0: f64, ratio: f64, z: f64) -> Option<(f64, f64)> {
        match &self.family {
            ModelFamily::Cir {
                kappa,
                theta,
                sigma,
            } => {
                let cc = 2.0 / (k0 * sigma).powi(2);
                let ln = z.ln();
                let phi = cc * (k0 * kappa * theta * ln + (ratio - k0 * kappa) * z);
                Some((phi, cc * ln))
            }
            ModelFamily::Jacobi {
                a,
                b,
                kappa,
                theta,
                sigma,
            } => {
                let cc = 2.0 / (k0 * sigma).powi(2);
                let w = b - a;
                let bt = |x: f64| k0 * kappa * (theta - x) + ratio * x;
                let (la, lb) = ((z - a).ln(), (b - z).ln());
                let phi = cc * (bt(*a) / w * la - bt(*b) / w * lb);
                Some((phi, cc * (la - lb) / w))
            }
            ModelFamily::Power {
                alpha,
                delta,
                sigma,
            } => {
                let cc = 2.0 / (k0 * sigma).powi(2);
                let p = alpha - delta + 1.0;
                let az = z.abs();
                let s = z.signum();
                let phi =
                    cc * (k0 * s * az.powf(p) / p + ratio * az.powf(2.0 - delta) / (2.0 - delta));
                let psi = cc * s * az.powf(1.0 - delta) / (1.0 - delta);
                Some((phi, psi))
            }
            ModelFamily::Custom(_) => None,
        }
    }
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            ModelFamily::Cir { kappa, theta, sigma } => write!(
                f,
                "Cir {{ kappa: {kappa:?}, theta: {theta:?}, sigma: {sigma:?}, x0: {:?} }}",
                self.x0
            ),
            ModelFamily::Jacobi {
                a,
                b,
                kappa,
                theta,
                sigma,
            } => write!(
                f,
                "Jacobi {{ a: {a:?}, b: {b:?}, kappa: {kappa:?}, theta: {theta:?}, sigma: {sigma:?}, x0: {:?} }}",
                self.x0
            ),
            ModelFamily::Power { alpha, delta, sigma } => write!(
                f,
                "Power {{ alpha: {alpha:?}, delta: {delta:?}, sigma: {sigma:?}, x0: {:?} }}",
                self.x0
            ),
            ModelFamily::Custom(cc) => {
                write!(f, "Custom {{ l: {:?}, r: {:?}, x0: {:?} }}", cc.l, cc.r, self.x0)
            }
        }
    }
}
