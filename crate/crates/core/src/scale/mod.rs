//! Scale function `p_c`, its derivative, the test function `v_c` and the
//! `u_c` series for the shifted modified coefficients
//!
//! ```text
//! b̃(x)   = K(0)·b(x) + K'(0)/K(0)·x
//! σ̃(x)   = K(0)·σ(x)
//! b̃_c(x) = b̃(x) + K'(0)/K(0)·(β·1{x<c} + γ·1{x≥c})
//! ```
//!
//! Everything is computed from `log p'_c`, so exponents of order `x^α` do not
//! overflow until a value genuinely exceeds the `f64` range.

mod limits;
mod model;

use std::cell::RefCell;

pub use limits::{LimitClassification, LimitSettings, LimitTarget, Side};
pub use model::{CustomCoefficients, ModelFamily, ModelSpec};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelScalars};
use crate::ode::{self, OdeSettings};
use crate::quad::{integrate, integrate_best_effort, QuadSettings};

/// Subdivision budget for one log-domain panel integral.
const PANEL_SUBDIVISIONS: usize = 200;
/// Relative error accepted for a panel once its budget is spent. The
/// exponents entering `p'_c·I` can be of order 1e7 and cancel, which caps the
/// attainable relative accuracy well above machine precision.
const ACCEPTED_PANEL_ERROR: f64 = 1e-7;
/// Relative rounding of an exponent as assembled from closed forms and
/// running sums.
const EXPONENT_ROUNDING: f64 = 1e-12;
/// Absolute error allowed in the interpolated `log |I|`, on top of a relative
/// allowance for the rounding of large exponents.
const HERMITE_TOL: f64 = 1e-9;
const HERMITE_MAX_DEPTH: usize = 10;
/// Relative rounding at which an interpolation slope is discarded.
const SLOPE_NOISE: f64 = 1e-3;
/// Absolute accuracy of a quadrature for `log p'_c`.
const EXPONENT_ABS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSettings {
    pub quad: QuadSettings,
    pub ode: OdeSettings,
    pub limits: LimitSettings,
    /// Uniform splits of every geometric panel between `c` and a target.
    pub panels_per_knot: usize,
}

impl Default for ScaleSettings {
    fn default() -> Self {
        Self {
            quad: QuadSettings {
                abs_tol: 1e-200,
                rel_tol: 1e-11,
                max_subdivisions: 4000,
            },
            ode: OdeSettings::default(),
            limits: LimitSettings::default(),
            panels_per_knot: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaleContext {
    model: ModelSpec,
    scalars: KernelScalars,
    c: f64,
    beta: f64,
    gamma: f64,
    settings: ScaleSettings,
}

/// Values of `p_c` and `v_c` along a list of points on one side of `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub points: Vec<f64>,
    pub scale: Vec<f64>,
    pub v: Vec<f64>,
    /// `I(x) = ∫_c^x (p'_c σ̃²)⁻¹`.
    pub inner: Vec<f64>,
}

impl ScaleContext {
    /// Context with base point `c = x0` and zero shifts.
    pub fn new(model: ModelSpec, kernel: &dyn Kernel) -> Result<Self> {
        Self::from_scalars(model, kernel.scalars())
    }

    pub fn from_scalars(model: ModelSpec, scalars: KernelScalars) -> Result<Self> {
        model.validate()?;
        if !(scalars.k0.is_finite() && scalars.k0 > 0.0) {
            return Err(Error::param("K(0)", "must be positive and finite"));
        }
        if !(scalars.kp0.is_finite() && scalars.kp0 <= 0.0) {
            return Err(Error::param("K'(0)", "must be nonpositive and finite"));
        }
        let c = model.x0;
        Ok(Self {
            model,
            scalars,
            c,
            beta: 0.0,
            gamma: 0.0,
            settings: ScaleSettings::default(),
        })
    }

    pub fn with_base_point(mut self, c: f64) -> Result<Self> {
        if !self.model.contains(c) {
            return Err(Error::Domain(format!(
                "base point {c} outside the state interval"
            )));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_shifts(mut self, beta: f64, gamma: f64) -> Self {
        self.beta = beta;
        self.gamma = gamma;
        self
    }

    pub fn with_settings(mut self, settings: ScaleSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }
    pub fn scalars(&self) -> KernelScalars {
        self.scalars
    }
    pub fn base_point(&self) -> f64 {
        self.c
    }
    pub fn shifts(&self) -> (f64, f64) {
        (self.beta, self.gamma)
    }
    pub fn settings(&self) -> &ScaleSettings {
        &self.settings
    }

    fn ratio(&self) -> f64 {
        self.scalars.kp0 / self.scalars.k0
    }

    fn shift_at(&self, x: f64) -> f64 {
        if x < self.c {
            self.beta
        } else {
            self.gamma
        }
    }

    pub fn modified_drift(&self, x: f64) -> f64 {
        self.scalars.k0 * self.model.drift(x) + self.ratio() * x
    }

    pub fn modified_diffusion(&self, x: f64) -> f64 {
        self.scalars.k0 * self.model.diffusion(x)
    }

    pub fn shifted_drift(&self, x: f64) -> f64 {
        self.modified_drift(x) + self.ratio() * self.shift_at(x)
    }

    fn check_interior(&self, x: f64) -> Result<()> {
        if self.model.contains(x) {
            Ok(())
        } else {
            let (l, r) = self.model.interval();
            Err(Error::Domain(format!("x = {x} is not inside ({l}, {r})")))
        }
    }

    /// `2·b̃_c/σ̃²` for a fixed shift.
    fn exponent_density(&self, z: f64, shift: f64) -> f64 {
        let s2 = self.modified_diffusion(z).powi(2);
        2.0 * (self.modified_drift(z) + self.ratio() * shift) / s2
    }

    /// Settings for exponents of `p'_c`, where an absolute error is a
    /// relative error of `p'_c` and a relative one is lost to cancellation
    /// wherever the shifted drift changes sign.
    fn exponent_quad(&self) -> QuadSettings {
        let mut q = self.settings.quad;
        q.abs_tol = q.abs_tol.max(EXPONENT_ABS_TOL);
        q
    }

    /// `log p'_c(x)`.
    pub fn log_scale_derivative(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        self.log_pd_from(x, None)
    }

    /// `log p'_c(x)` by quadrature of the exponent, ignoring closed forms.
    pub fn log_scale_derivative_quadrature(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        let shift = self.shift_at(x);
        let r = integrate(
            |z| self.exponent_density(z, shift),
            self.c,
            x,
            &self.exponent_quad(),
        )?;
        Ok(-r.value)
    }

    /// `log p'_c(y)`; for custom models `hint = (a, log p'_c(a))` with `a`
    /// on the same side of `c` shortens the exponent quadrature.
    fn log_pd_from(&self, y: f64, hint: Option<(f64, f64)>) -> Result<f64> {
        let shift = self.shift_at(y);
        let (k0, ratio) = (self.scalars.k0, self.ratio());
        if let Some((phi_y, psi_y)) = self.model.antiderivatives(k0, ratio, y) {
            let (phi_c, psi_c) = self
                .model
                .antiderivatives(k0, ratio, self.c)
                .expect("built-in");
            let out = -(phi_y - phi_c) - ratio * shift * (psi_y - psi_c);
            return if out.is_nan() {
                Err(Error::Numeric(format!("log p' undefined at {y}")))
            } else {
                Ok(out)
            };
        }
        let (start, base) = hint.unwrap_or((self.c, 0.0));
        let r = integrate(
            |z| self.exponent_density(z, shift),
            start,
            y,
            &self.exponent_quad(),
        )?;
        Ok(base - r.value)
    }

    pub fn scale_derivative(&self, x: f64) -> Result<f64> {
        Ok(self.log_scale_derivative(x)?.exp())
    }

    /// `p_c(x) = ∫_c^x p'_c`. Overflow of `p'_c` surfaces as
    /// [`Error::NonFinite`].
    pub fn scale(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self.profile(&[x])?.scale[0])
    }

    /// `v_c(x) = 2∫_c^x p'_c(y) ∫_c^y (p'_c σ̃²)⁻¹ dz dy`; `+∞` once the value
    /// leaves the `f64` range.
    pub fn v(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self.profile(&[x])?.v[0])
    }

    /// `I(x) = ∫_c^x (p'_c σ̃²)⁻¹`.
    pub fn inner(&self, x: f64) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self.profile(&[x])?.inner[0])
    }

    /// `v_c'(x) = 2 p'_c(x) I(x)`.
    pub fn v_derivative(&self, x: f64) -> Result<f64> {
        Ok(2.0 * self.scale_derivative(x)? * self.inner(x)?)
    }

    fn log_inner_density(&self, z: f64, hint: Option<(f64, f64)>) -> Result<f64> {
        let s = self.modified_diffusion(z);
        Ok(-self.log_pd_from(z, hint)? - 2.0 * s.abs().ln())
    }

    /// `log ∫_a^b exp(f)` over `|dz|`, scaled by the largest sampled value.
    ///
    /// When the largest sample sits at an end of the panel the panel is cut
    /// geometrically towards that end, so a steep exponential concentrated
    /// there is not missed by the quadrature nodes.
    fn log_integral<F>(&self, a: f64, b: f64, f: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        self.log_integral_scaled(a, b, f, 0.0)
    }

    /// [`Self::log_integral`] for an integrand assembled from terms of
    /// magnitude up to `magnitude`, whose rounding limits the accuracy.
    fn log_integral_scaled<F>(&self, a: f64, b: f64, f: F, magnitude: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if a == b {
            return Ok(f64::NEG_INFINITY);
        }
        let mut attempt = 0;
        loop {
            let samples = if attempt == 0 { 8 } else { 256 };
            let mut reference = f64::NEG_INFINITY;
            let mut magnitude = magnitude;
            let mut at = 0;
            for i in 0..=samples {
                let z = if i == samples {
                    b
                } else {
                    a + (b - a) * (i as f64 / samples as f64)
                };
                let v = f(z)?;
                if v == f64::INFINITY && (i == 0 || i == samples) {
                    // integrable singularity at the panel end
                    at = i;
                    continue;
                }
                if v.is_finite() {
                    magnitude = magnitude.max(v.abs());
                }
                if v > reference {
                    reference = v;
                    at = i;
                }
            }
            if reference == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            if !reference.is_finite() {
                return Err(Error::NonFinite { at: b });
            }

            // pieces ordered from the peak outwards
            let mut pieces = Vec::new();
            if at == 0 || at == samples {
                let (peak, mut far) = if at == 0 { (a, b) } else { (b, a) };
                let mut h = far - peak;
                for _ in 0..200 {
                    h *= 0.5;
                    let near = peak + h;
                    if near == peak {
                        break;
                    }
                    pieces.push((near, far));
                    far = near;
                    if reference - f(near)? < 20.0 {
                        break;
                    }
                }
                pieces.push((peak, far));
                pieces.reverse();
            } else {
                pieces.push((a, b));
            }

            let failure = RefCell::new(None);
            let integrand = |z: f64| match f(z) {
                Ok(v) => (v - reference).exp(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            };
            let mut total = 0.0;
            let mut error = 0.0;
            let mut outcome = Ok(());
            for &(lo, hi) in &pieces {
                let mut settings = self.settings.quad;
                settings.abs_tol = settings.abs_tol.max(0.1 * settings.rel_tol * total);
                settings.max_subdivisions = settings.max_subdivisions.min(PANEL_SUBDIVISIONS);
                match integrate_best_effort(&integrand, lo, hi, &settings) {
                    Ok(r) => {
                        total += r.value.abs();
                        error += r.abs_error;
                    }
                    Err(e) => {
                        outcome = Err(e);
                        break;
                    }
                }
            }
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let accepted = ACCEPTED_PANEL_ERROR.max(EXPONENT_ROUNDING * magnitude) * total;
            if outcome.is_ok() && error > accepted {
                outcome = Err(Error::QuadratureNonConvergence {
                    a,
                    b,
                    achieved: error,
                    requested: accepted,
                });
            }
            match outcome {
                Ok(()) => return Ok(reference + total.ln()),
                Err(Error::NonFinite { .. }) if attempt == 0 => attempt += 1,
                Err(e) => return Err(e),
            }
        }
    }

    /// Knots between `c` and `target`: geometric towards a finite boundary,
    /// doubling towards an infinite one, each panel split uniformly.
    fn knots_towards(&self, target: f64) -> Vec<f64> {
        let c = self.c;
        let dir = (target - c).signum();
        let (l, r) = self.model.interval();
        let boundary = if dir < 0.0 { l } else { r };
        let mut structural = vec![c];
        if boundary.is_finite() {
            let mut k = 1;
            loop {
                let y = boundary + (c - boundary) * 0.5f64.powi(k);
                if (y - target) * dir >= 0.0 || k > 1000 {
                    break;
                }
                structural.push(y);
                k += 1;
            }
        } else {
            let mut step = 0.25 * c.abs().max(1.0);
            loop {
                let y = c + dir * step;
                if (y - target) * dir >= 0.0 {
                    break;
                }
                structural.push(y);
                step *= 2.0;
            }
        }
        structural.push(target);
        let split = self.settings.panels_per_knot.max(1);
        let mut knots = vec![c];
        for w in structural.windows(2) {
            for j in 1..=split {
                knots.push(w[0] + (w[1] - w[0]) * j as f64 / split as f64);
            }
        }
        *knots.last_mut().expect("non-empty") = target;
        knots
    }

    /// `p_c` and `v_c` at `points`, which must lie on one side of `c` and move
    /// away from it monotonically. The running integrals are shared, so a
    /// whole sequence approaching a boundary costs one sweep.
    pub fn profile(&self, points: &[f64]) -> Result<Profile> {
        let c = self.c;
        let mut out = Profile {
            points: points.to_vec(),
            scale: Vec::with_capacity(points.len()),
            v: Vec::with_capacity(points.len()),
            inner: Vec::with_capacity(points.len()),
        };
        if points.is_empty() {
            return Ok(out);
        }
        let dir = points
            .iter()
            .map(|x| (x - c).signum())
            .find(|s| *s != 0.0)
            .unwrap_or(1.0);
        for (i, &x) in points.iter().enumerate() {
            self.check_interior(x)?;
            if (x - c) * dir < 0.0 {
                return Err(Error::Domain(
                    "profile points must lie on one side of c".into(),
                ));
            }
            if i > 0 && (x - points[i - 1]) * dir < 0.0 {
                return Err(Error::Domain("profile points must move away from c".into()));
            }
        }

        let far = points[points.len() - 1];
        let mut knots = self.knots_towards(far);
        knots.extend_from_slice(points);
        knots.sort_by(|a, b| ((a - c) * dir).total_cmp(&((b - c) * dir)));
        knots.dedup();

        let (l, r) = self.model.interval();
        let travel = Travel {
            c,
            boundary: if dir < 0.0 { l } else { r },
        };

        let mut log_inner = f64::NEG_INFINITY;
        let mut log_v = f64::NEG_INFINITY;
        let mut log_p = f64::NEG_INFINITY;
        let mut log_pd_prev = 0.0;
        let mut next_point = 0;
        let record = |out: &mut Profile, next: &mut usize, at: f64, lp: f64, lv: f64, li: f64| {
            while *next < points.len() && points[*next] == at {
                out.scale.push(dir * lp.exp());
                out.v.push(2.0 * lv.exp());
                out.inner.push(dir * li.exp());
                *next += 1;
            }
        };
        record(&mut out, &mut next_point, c, log_p, log_v, log_inner);

        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let hint = Some((a, log_pd_prev));
            let log_pd = |y: f64| self.log_pd_from(y, hint);
            let log_inner_density = |z: f64| self.log_inner_density(z, hint);

            let di = self.log_integral(a, b, log_inner_density)?;
            let inner_b = log_add(log_inner, di);
            let segments = self.segments(
                &travel,
                (a, log_inner),
                (b, inner_b),
                &log_inner_density,
                &log_pd,
            )?;
            for seg in &segments {
                let dv = match seg.hermite {
                    Some(h) => self.log_integral(seg.a, seg.b, |y| Ok(h.eval(travel.u(y))))?,
                    None => {
                        let outer = |y: f64| -> Result<f64> {
                            let local = self.log_integral(seg.a, y, log_inner_density)?;
                            Ok(log_pd(y)? + log_add(seg.log_inner_a, local))
                        };
                        self.log_integral(seg.a, seg.b, outer)?
                    }
                };
                log_v = log_add(log_v, dv);
            }
            log_p = log_add(log_p, self.log_integral(a, b, log_pd)?);
            log_inner = inner_b;
            log_pd_prev = self.log_pd_from(b, hint)?;
            record(&mut out, &mut next_point, b, log_p, log_v, log_inner);
        }
        Ok(out)
    }

    /// Splits `[a, b]` into pieces on which `log(p'_c·|I|)` is reproduced by
    /// a cubic Hermite interpolant in the travel coordinate, bisecting until
    /// the interpolant agrees with direct quadrature at the midpoint or the
    /// depth budget runs out. Pieces touching a zero or singular `I` keep
    /// `hermite = None` and are integrated with a nested quadrature instead.
    fn segments<G, L>(
        &self,
        travel: &Travel,
        (a, li_a): (f64, f64),
        (b, li_b): (f64, f64),
        g: &G,
        log_pd: &L,
    ) -> Result<Vec<Segment>>
    where
        G: Fn(f64) -> Result<f64>,
        L: Fn(f64) -> Result<f64>,
    {
        let dir = travel.dir();
        // (log q, d log q/du, rounding of the slope) with q = p'_c·|I|; the
        // slope is a difference of two terms that grow with the exponents
        let node = |y: f64, li: f64| -> Result<(f64, f64, f64)> {
            let lp = log_pd(y)?;
            let dlp = -dir * self.exponent_density(y, self.shift_at(y));
            let dli = (g(y)? - li).exp();
            let scale = travel.du_scale(y);
            let noise = dli * EXPONENT_ROUNDING * li.abs().max(lp.abs()) * scale;
            Ok((lp + li, (dlp + dli) * scale, noise))
        };
        let mut out = Vec::new();
        let mut stack = vec![(a, li_a, b, li_b, 0usize)];
        while let Some((a, li_a, b, li_b, depth)) = stack.pop() {
            let nested = Segment {
                a,
                b,
                log_inner_a: li_a,
                hermite: None,
            };
            if !(li_a.is_finite() && li_b.is_finite()) {
                out.push(nested);
                continue;
            }
            let ((f0, mut d0, n0), (f1, mut d1, n1)) = (node(a, li_a)?, node(b, li_b)?);
            if !(f0.is_finite() && f1.is_finite() && d0.is_finite() && d1.is_finite()) {
                out.push(nested);
                continue;
            }
            let (u0, u1) = (travel.u(a), travel.u(b));
            let secant = (f1 - f0) / (u1 - u0);
            // slopes lost to rounding fall back to the secant
            if n0 > SLOPE_NOISE * d0.abs().max(secant.abs()).max(1.0) {
                d0 = secant;
            }
            if n1 > SLOPE_NOISE * d1.abs().max(secant.abs()).max(1.0) {
                d1 = secant;
            }
            let h = Hermite {
                u0,
                u1,
                f0,
                f1,
                d0,
                d1,
            };
            let um = 0.5 * (h.u0 + h.u1);
            let m = travel.y(um);
            if m == a || m == b {
                out.push(nested);
                continue;
            }
            let li_m = log_add(li_a, self.log_integral(a, m, g)?);
            let lp_m = log_pd(m)?;
            let tol = HERMITE_TOL + EXPONENT_ROUNDING * li_m.abs().max(lp_m.abs());
            if (h.eval(um) - (lp_m + li_m)).abs() <= tol || depth >= HERMITE_MAX_DEPTH {
                out.push(Segment {
                    hermite: Some(h),
                    ..nested
                });
            } else {
                stack.push((m, li_m, b, li_b, depth + 1));
                stack.push((a, li_a, m, li_m, depth + 1));
            }
        }
        Ok(out)
    }

    /// Terms `u_{c,1..=n}(x)` from the linear system
    /// `u_k' = 2q_k`, `q_k' = -(2b̃_c/σ̃²) q_k + u_{k-1}/σ̃²`, started at `c`.
    pub fn u_terms_ode(&self, x: f64, n: usize) -> Result<Vec<f64>> {
        self.check_interior(x)?;
        let shift = self.shift_at(x);
        let rhs = |z: f64, y: &[f64], dy: &mut [f64]| {
            let s2 = self.modified_diffusion(z).powi(2);
            let a = 2.0 * (self.modified_drift(z) + self.ratio() * shift) / s2;
            for k in 0..n {
                let prev = if k == 0 { 1.0 } else { y[k - 1] };
                dy[k] = 2.0 * y[n + k];
                dy[n + k] = -a * y[n + k] + prev / s2;
            }
        };
        let y = ode::integrate(rhs, self.c, x, &vec![0.0; 2 * n], &self.settings.ode)?;
        if y.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric(format!(
                "series terms undefined between {} and {x}; σ̃ vanishes on the way",
                self.c
            )));
        }
        Ok(y[..n].to_vec())
    }

    /// Partial sum `Σ_{k=0}^{n} u_{c,k}(x)` with `u_{c,0} = 1`. The first
    /// term is the quadrature value of `v_c`; later terms come from
    /// [`Self::u_terms_ode`].
    pub fn u_series(&self, x: f64, n_terms: usize) -> Result<f64> {
        if n_terms == 0 {
            return Err(Error::param("n_terms", "must be at least 1"));
        }
        let v = self.v(x)?;
        if n_terms == 1 {
            return Ok(1.0 + v);
        }
        let terms = self.u_terms_ode(x, n_terms)?;
        Ok(1.0 + v + terms[1..].iter().sum::<f64>())
    }

    /// Classifies `lim p_c` or `lim v_c` at one end of the interval.
    pub fn boundary_limit(&self, side: Side, target: LimitTarget) -> LimitClassification {
        limits::classify(self, side, target)
    }

    /// Exact divergence of `p_c` and `v_c` at a boundary for the built-in
    /// families, from the exponent of `p'_c` there. The two limits diverge
    /// together for these families. `None` for custom models.
    pub fn closed_form_divergence(&self, side: Side) -> Option<bool> {
        let (k0, ratio) = (self.scalars.k0, self.ratio());
        let shift = match side {
            Side::Left => self.beta,
            Side::Right => self.gamma,
        };
        match &self.model.family {
            ModelFamily::Cir {
                kappa,
                theta,
                sigma,
            } => match side {
                Side::Left => {
                    let e = 2.0 / (k0 * sigma).powi(2) * (k0 * kappa * theta + shift * ratio);
                    Some(e >= 1.0)
                }
                // p' grows exponentially towards +∞
                Side::Right => Some(true),
            },
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
                match side {
                    Side::Left => Some(cc * (bt(*a) + ratio * shift) / w >= 1.0),
                    Side::Right => Some(-cc * (bt(*b) + ratio * shift) / w >= 1.0),
                }
            }
            ModelFamily::Power { .. } => match side {
                Side::Left => Some(true),
                // p' decays like exp(-C·K(0)·x^{α-δ+1}) and p'·I like x^{-α}
                Side::Right => Some(false),
            },
            ModelFamily::Custom(_) => None,
        }
    }

    /// `∫ σ̃⁻²` over the whole interval, or `None` if it diverges at either end.
    pub fn inverse_variance_mass(&self) -> Option<f64> {
        let (l, r) = self.model.interval();
        if !(l.is_finite() && r.is_finite()) {
            return None;
        }
        let lim = &self.settings.limits;
        let f = |z: f64| self.modified_diffusion(z).powi(-2);
        let mut total = 0.0;
        for boundary in [l, r] {
            let mut acc = 0.0;
            let mut prev = self.c;
            let mut values = Vec::new();
            for x in limits::approach(self.c, boundary, lim.max_steps) {
                // pieces next to a boundary see rounding in the coefficients,
                // and contribute too little for that to matter
                acc += integrate_best_effort(f, prev, x, &self.settings.quad)
                    .ok()?
                    .value
                    .abs();
                values.push(acc);
                prev = x;
            }
            match limits::decide(&values, lim) {
                Some(LimitClassification::Finite { value }) => total += value,
                _ => return None,
            }
        }
        Some(total)
    }
}

/// Coordinate increasing away from `c`: `-ln(|y-B|/|c-B|)` towards a finite
/// boundary `B`, `|y-c|` towards an infinite one. Power-law behaviour at a
/// finite boundary becomes linear in it.
struct Travel {
    c: f64,
    boundary: f64,
}

impl Travel {
    fn u(&self, y: f64) -> f64 {
        if self.boundary.is_finite() {
            -((y - self.boundary) / (self.c - self.boundary)).ln()
        } else {
            (y - self.c).abs()
        }
    }

    fn y(&self, u: f64) -> f64 {
        if self.boundary.is_finite() {
            self.boundary + (self.c - self.boundary) * (-u).exp()
        } else {
            self.c + self.boundary.signum() * u
        }
    }

    /// Sign of the direction of travel.
    fn dir(&self) -> f64 {
        (self.boundary - self.c).signum()
    }

    /// `d|y-c|/du`.
    fn du_scale(&self, y: f64) -> f64 {
        if self.boundary.is_finite() {
            (y - self.boundary).abs()
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Hermite {
    u0: f64,
    u1: f64,
    f0: f64,
    f1: f64,
    d0: f64,
    d1: f64,
}

impl Hermite {
    fn eval(&self, u: f64) -> f64 {
        let w = self.u1 - self.u0;
        let s = (u - self.u0) / w;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.f0
            + (s3 - 2.0 * s2 + s) * w * self.d0
            + (3.0 * s2 - 2.0 * s3) * self.f1
            + (s3 - s2) * w * self.d1
    }
}

struct Segment {
    a: f64,
    b: f64,
    log_inner_a: f64,
    hermite: Option<Hermite>,
}

/// Classification of a sequence of values approaching a limit, by the same
/// rules as [`ScaleContext::boundary_limit`]; `None` while undecided.
pub fn decide_sequence(values: &[f64], settings: &LimitSettings) -> Option<LimitClassification> {
    limits::decide(values, settings)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
