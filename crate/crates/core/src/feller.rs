//! Boundary-attainment verdicts: generic tests built on `v_c` and `p_c`,
//! and closed-form rules for the CIR, Jacobi and power families.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracapprox::{build_kernel, ApproxScheme, QuadratureWeight, SchemeKind};
use crate::kernels::{Kernel, KernelScalars};
use crate::resolvent::{check_hypotheses, solve_resolvent};
use crate::scale::{LimitClassification, LimitTarget, ModelFamily, ModelSpec, ScaleContext, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Left,
    Right,
    Both,
}

impl Boundary {
    pub fn covers(self, side: Side) -> bool {
        matches!(
            (self, side),
            (Boundary::Both, _) | (Boundary::Left, Side::Left) | (Boundary::Right, Side::Right)
        )
    }

    fn from_sides(left: bool, right: bool) -> Option<Self> {
        match (left, right) {
            (true, true) => Some(Boundary::Both),
            (true, false) => Some(Boundary::Left),
            (false, true) => Some(Boundary::Right),
            (false, false) => None,
        }
    }
}

impl From<Side> for Boundary {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => Boundary::Left,
            Side::Right => Boundary::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// The boundary is a.s. not reached before the other one (or ever).
    NoExitAS,
    ExitsWithPositiveProb,
    /// A necessary condition for non-attainment holds; says nothing more.
    NecessaryHolds,
    SupBoundedAS,
    InfBoundedAS,
    Inconclusive,
}

impl Verdict {
    pub fn is_decisive(self) -> bool {
        self != Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub quantity: String,
    pub value: f64,
    pub threshold: f64,
}

impl Evidence {
    fn new(quantity: impl Into<String>, value: f64, threshold: f64) -> Self {
        Evidence {
            quantity: quantity.into(),
            value,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    CompletelyMonotoneKernel,
    ResolventCheckPassed,
    /// Regularity of user coefficients taken on trust.
    CoefficientsAsserted,
}

/// What is known about the kernel and coefficients before a generic test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypotheses {
    pub flags: Vec<Hypothesis>,
}

impl Hypotheses {
    /// Flags for `kernel` and `model`. A kernel not completely monotone by
    /// construction gets a resolvent check on `[0, horizon]` with step `dt`.
    pub fn establish(kernel: &dyn Kernel, model: &ModelSpec, dt: f64, horizon: f64) -> Self {
        let mut flags = Vec::new();
        if kernel.completely_monotone() {
            flags.push(Hypothesis::CompletelyMonotoneKernel);
        } else if let Ok(grid) = solve_resolvent(kernel, dt, horizon) {
            if check_hypotheses(&grid).passed() {
                flags.push(Hypothesis::ResolventCheckPassed);
            }
        }
        if !model.is_builtin() {
            flags.push(Hypothesis::CoefficientsAsserted);
        }
        Hypotheses { flags }
    }

    pub fn kernel_ok(&self) -> bool {
        self.flags.iter().any(|f| {
            matches!(
                f,
                Hypothesis::CompletelyMonotoneKernel | Hypothesis::ResolventCheckPassed
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryVerdict {
    pub boundary: Boundary,
    pub verdict: Verdict,
    /// Name of the rule that produced the verdict.
    pub rule: String,
    pub evidence: Vec<Evidence>,
    pub assumptions_checked: Vec<Hypothesis>,
}

impl BoundaryVerdict {
    fn new(boundary: Boundary, verdict: Verdict, rule: &str, evidence: Vec<Evidence>) -> Self {
        BoundaryVerdict {
            boundary,
            verdict,
            rule: rule.to_string(),
            evidence,
            assumptions_checked: Vec::new(),
        }
    }
}

fn limit_value(c: &LimitClassification) -> f64 {
    match c {
        LimitClassification::Finite { value } => *value,
        LimitClassification::Divergent => f64::INFINITY,
        LimitClassification::Inconclusive { values, .. } => {
            values.last().copied().unwrap_or(f64::NAN)
        }
    }
}

/// Like [`limit_value`], with `p_c(l+) = -∞` when divergent.
fn scale_limit_value(c: &LimitClassification, side: Side) -> f64 {
    match (c, side) {
        (LimitClassification::Divergent, Side::Left) => f64::NEG_INFINITY,
        _ => limit_value(c),
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "l+",
        Side::Right => "r-",
    }
}

/// Default shift offset: `1e-6` times the interval width, or times
/// `max(|x0|, 1)` on unbounded intervals.
pub fn default_eps_shift(model: &ModelSpec) -> f64 {
    let (l, r) = model.interval();
    let width = if l.is_finite() && r.is_finite() {
        r - l
    } else {
        model.x0.abs().max(1.0)
    };
    1e-6 * width
}

/// Finiteness of `v_c(l+; -β)` for `β = x0 + eps` and of `v_c(r-; -γ)` for
/// `γ = x0 - eps`. A finite limit at a boundary means it is reached with
/// positive probability.
pub fn necessary_test(
    ctx: &ScaleContext,
    hyp: &Hypotheses,
    eps_shift: f64,
) -> Result<BoundaryVerdict> {
    if !(eps_shift.is_finite() && eps_shift > 0.0) {
        return Err(Error::param("eps_shift", "must be positive"));
    }
    let x0 = ctx.model().x0;
    let (beta, gamma) = (x0 + eps_shift, x0 - eps_shift);
    let shifted = ctx.clone().with_shifts(-beta, -gamma);
    let left = shifted.boundary_limit(Side::Left, LimitTarget::TestV);
    let right = shifted.boundary_limit(Side::Right, LimitTarget::TestV);
    let evidence = vec![
        Evidence::new(
            format!("v_c(l+; -{beta})"),
            limit_value(&left),
            ctx.settings().limits.cap,
        ),
        Evidence::new(
            format!("v_c(r-; -{gamma})"),
            limit_value(&right),
            ctx.settings().limits.cap,
        ),
    ];
    let exits = Boundary::from_sides(left.is_finite(), right.is_finite());
    let (boundary, verdict) = if let Some(b) = exits {
        (b, Verdict::ExitsWithPositiveProb)
    } else if left.is_divergent() && right.is_divergent() {
        (Boundary::Both, Verdict::NecessaryHolds)
    } else {
        (Boundary::Both, Verdict::Inconclusive)
    };
    Ok(gate(
        BoundaryVerdict::new(boundary, verdict, "generic-necessary", evidence),
        hyp,
    ))
}

/// Approach points `l_n` or `r_n`, `n = 1..=n`.
fn stages(ctx: &ScaleContext, side: Side, n: usize) -> Vec<f64> {
    let (l, r) = ctx.model().interval();
    let c = ctx.base_point();
    let boundary = if side == Side::Left { l } else { r };
    let pts: Vec<f64> = if boundary.is_finite() {
        (1..=n)
            .map(|k| boundary + (c - boundary) * 0.5f64.powi(k as i32))
            .collect()
    } else {
        (1..=n)
            .map(|k| boundary.signum() * 2f64.powi(k as i32))
            .collect()
    };
    pts.into_iter()
        .filter(|&x| ctx.model().contains(x) && (x - c) * (boundary - c) > 0.0)
        .collect()
}

/// One side of the sufficient test: `v_c(l_n; -l_n) → ∞`, or directly
/// `v_c(l+; -l) = ∞` at a finite boundary.
fn sufficient_side(
    ctx: &ScaleContext,
    side: Side,
    n_stages: usize,
) -> Result<(bool, Vec<Evidence>)> {
    let (l, r) = ctx.model().interval();
    let boundary = if side == Side::Left { l } else { r };
    let cap = ctx.settings().limits.cap;
    let mut evidence = Vec::new();
    if boundary.is_finite() {
        let shifted = ctx.clone().with_shifts(-l, -r);
        let lim = shifted.boundary_limit(side, LimitTarget::TestV);
        evidence.push(Evidence::new(
            format!("v_c({}; -{boundary})", side_name(side)),
            limit_value(&lim),
            cap,
        ));
        if lim.is_divergent() {
            return Ok((true, evidence));
        }
    }
    let mut values = Vec::new();
    for x in stages(ctx, side, n_stages) {
        let v = ctx.clone().with_shifts(-x, -x).v(x)?;
        evidence.push(Evidence::new(format!("v_c({x}; -{x})"), v, cap));
        values.push(v);
        if !v.is_finite() || v > cap {
            break;
        }
    }
    let divergent = matches!(
        crate::scale::decide_sequence(&values, &ctx.settings().limits),
        Some(LimitClassification::Divergent)
    );
    Ok((divergent, evidence))
}

/// `v_c(l_n; -l_n) → ∞` and `v_c(r_n; -r_n) → ∞` along `n_stages` points
/// per side. A side that passes can only be left through the other one.
pub fn sufficient_test(
    ctx: &ScaleContext,
    hyp: &Hypotheses,
    n_stages: usize,
) -> Result<BoundaryVerdict> {
    if n_stages == 0 {
        return Err(Error::param("n_stages", "must be positive"));
    }
    let (left, mut evidence) = sufficient_side(ctx, Side::Left, n_stages)?;
    let (right, ev_r) = sufficient_side(ctx, Side::Right, n_stages)?;
    evidence.extend(ev_r);
    let v = match Boundary::from_sides(left, right) {
        Some(b) => BoundaryVerdict::new(b, Verdict::NoExitAS, "generic-sufficient", evidence),
        None => BoundaryVerdict::new(
            Boundary::Both,
            Verdict::Inconclusive,
            "generic-sufficient",
            evidence,
        ),
    };
    Ok(gate(v, hyp))
}

/// On a bounded interval with `∫ σ̃⁻² < ∞`, `v_c(l+; 0) = v_c(r-; 0) = ∞`
/// is equivalent to non-attainment; a finite side is reached with positive
/// probability.
pub fn bounded_interval_test(ctx: &ScaleContext, hyp: &Hypotheses) -> Result<BoundaryVerdict> {
    let (l, r) = ctx.model().interval();
    if !(l.is_finite() && r.is_finite()) {
        return Err(Error::Precondition(
            "the state interval is unbounded".into(),
        ));
    }
    let mass = ctx
        .inverse_variance_mass()
        .ok_or_else(|| Error::Precondition("σ̃⁻² is not integrable over the interval".into()))?;
    let unshifted = ctx.clone().with_shifts(0.0, 0.0);
    let left = unshifted.boundary_limit(Side::Left, LimitTarget::TestV);
    let right = unshifted.boundary_limit(Side::Right, LimitTarget::TestV);
    let cap = ctx.settings().limits.cap;
    let evidence = vec![
        Evidence::new("integral of inverse variance", mass, f64::INFINITY),
        Evidence::new("v_c(l+; 0)", limit_value(&left), cap),
        Evidence::new("v_c(r-; 0)", limit_value(&right), cap),
    ];
    let v = if let Some(b) = Boundary::from_sides(left.is_finite(), right.is_finite()) {
        BoundaryVerdict::new(
            b,
            Verdict::ExitsWithPositiveProb,
            "bounded-interval",
            evidence,
        )
    } else if left.is_divergent() && right.is_divergent() {
        BoundaryVerdict::new(
            Boundary::Both,
            Verdict::NoExitAS,
            "bounded-interval",
            evidence,
        )
    } else {
        BoundaryVerdict::new(
            Boundary::Both,
            Verdict::Inconclusive,
            "bounded-interval",
            evidence,
        )
    };
    Ok(gate(v, hyp))
}

/// `sup X < r` a.s. when `p_c(l+; -r) > -∞` and `p_c(r-; -r) = ∞`.
pub fn sup_test(ctx: &ScaleContext, hyp: &Hypotheses) -> Result<BoundaryVerdict> {
    let (_, r) = ctx.model().interval();
    if !r.is_finite() {
        return Err(Error::Precondition(
            "the sup test needs a finite right end".into(),
        ));
    }
    let shifted = ctx.clone().with_shifts(-r, -r);
    let left = shifted.boundary_limit(Side::Left, LimitTarget::ScaleP);
    let right = shifted.boundary_limit(Side::Right, LimitTarget::ScaleP);
    let evidence = vec![
        Evidence::new(
            format!("p_c(l+; -{r})"),
            scale_limit_value(&left, Side::Left),
            f64::NEG_INFINITY,
        ),
        Evidence::new(format!("p_c(r-; -{r})"), limit_value(&right), f64::INFINITY),
    ];
    let verdict = if left.is_finite() && right.is_divergent() {
        Verdict::SupBoundedAS
    } else {
        Verdict::Inconclusive
    };
    Ok(gate(
        BoundaryVerdict::new(Boundary::Right, verdict, "sup-bound", evidence),
        hyp,
    ))
}

/// `inf X > l` a.s. when `p_c(l+; -l) = -∞` and `p_c(r-; -l) < ∞`.
pub fn inf_test(ctx: &ScaleContext, hyp: &Hypotheses) -> Result<BoundaryVerdict> {
    let (l, _) = ctx.model().interval();
    if !l.is_finite() {
        return Err(Error::Precondition(
            "the inf test needs a finite left end".into(),
        ));
    }
    let shifted = ctx.clone().with_shifts(-l, -l);
    let left = shifted.boundary_limit(Side::Left, LimitTarget::ScaleP);
    let right = shifted.boundary_limit(Side::Right, LimitTarget::ScaleP);
    let evidence = vec![
        Evidence::new(
            format!("p_c(l+; -{l})"),
            scale_limit_value(&left, Side::Left),
            f64::NEG_INFINITY,
        ),
        Evidence::new(format!("p_c(r-; -{l})"), limit_value(&right), f64::INFINITY),
    ];
    let verdict = if left.is_divergent() && right.is_finite() {
        Verdict::InfBoundedAS
    } else {
        Verdict::Inconclusive
    };
    Ok(gate(
        BoundaryVerdict::new(Boundary::Left, verdict, "inf-bound", evidence),
        hyp,
    ))
}

/// Runs whichever of [`sup_test`] and [`inf_test`] apply and returns the
/// first decisive outcome, or the last inconclusive one.
pub fn sup_inf_test(ctx: &ScaleContext, hyp: &Hypotheses) -> Result<BoundaryVerdict> {
    let (l, r) = ctx.model().interval();
    if !l.is_finite() && !r.is_finite() {
        return Err(Error::Precondition(
            "sup/inf tests need a finite end".into(),
        ));
    }
    let mut last = None;
    if r.is_finite() {
        let v = sup_test(ctx, hyp)?;
        if v.verdict.is_decisive() {
            return Ok(v);
        }
        last = Some(v);
    }
    if l.is_finite() {
        let v = inf_test(ctx, hyp)?;
        if v.verdict.is_decisive() {
            return Ok(v);
        }
        last = Some(v);
    }
    Ok(last.expect("one side is finite"))
}

/// Records the hypothesis flags and withholds generic conclusions when the
/// kernel hypotheses are not established.
fn gate(mut v: BoundaryVerdict, hyp: &Hypotheses) -> BoundaryVerdict {
    v.assumptions_checked = hyp.flags.clone();
    if !hyp.kernel_ok() && v.verdict.is_decisive() {
        v.evidence
            .push(Evidence::new("kernel hypotheses established", 0.0, 1.0));
        v.verdict = Verdict::Inconclusive;
    }
    v
}

/// Closed-form verdicts for the built-in families from `(K(0), K'(0))`,
/// the parameters and `x0`. Inequalities are inclusive as stated. A
/// boundary addressed by the family's rules but left undecided gets an
/// `Inconclusive` entry.
pub fn family_test(model: &ModelSpec, scalars: KernelScalars) -> Result<Vec<BoundaryVerdict>> {
    model.validate()?;
    let KernelScalars { k0, kp0 } = scalars;
    if !(k0.is_finite() && k0 > 0.0 && kp0.is_finite() && kp0 <= 0.0) {
        return Err(Error::param("kernel", "needs K(0) > 0 and K'(0) <= 0"));
    }
    // K'(0) = 0 only for constant kernels among admissible ones
    let constant = kp0 == 0.0;
    let x0 = model.x0;
    let mut out = Vec::new();
    let addressed: &[Side] = match &model.family {
        ModelFamily::Cir {
            kappa,
            theta,
            sigma,
        } => {
            let lhs = 2.0 * kappa * theta;
            let rhs = k0 * sigma * sigma;
            let feller = Evidence::new("2*kappa*theta", lhs, rhs);
            if constant {
                if lhs >= rhs {
                    out.push(BoundaryVerdict::new(
                        Boundary::Left,
                        Verdict::NoExitAS,
                        "cir-constant-kernel",
                        vec![feller],
                    ));
                } else {
                    out.push(BoundaryVerdict::new(
                        Boundary::Left,
                        Verdict::ExitsWithPositiveProb,
                        "cir-constant-kernel",
                        vec![feller.clone()],
                    ));
                    out.push(BoundaryVerdict::new(
                        Boundary::Right,
                        Verdict::SupBoundedAS,
                        "cir-bounded-paths",
                        vec![feller],
                    ));
                }
            } else {
                if lhs >= rhs {
                    out.push(BoundaryVerdict::new(
                        Boundary::Left,
                        Verdict::NoExitAS,
                        "cir-sufficient",
                        vec![feller],
                    ));
                }
                let threshold = k0 * k0 / (2.0 * kp0.abs()) * (rhs - lhs);
                let verdict = if x0 >= threshold {
                    Verdict::NecessaryHolds
                } else {
                    Verdict::ExitsWithPositiveProb
                };
                out.push(BoundaryVerdict::new(
                    Boundary::Left,
                    verdict,
                    "cir-necessary",
                    vec![Evidence::new("x0", x0, threshold)],
                ));
            }
            &[Side::Left]
        }
        ModelFamily::Jacobi {
            a,
            b,
            kappa,
            theta,
            sigma,
        } => {
            let (a, b) = (*a, *b);
            let rhs = k0 * sigma * sigma * (b - a);
            let lo = 2.0 * kappa * (theta - a);
            let hi = 2.0 * kappa * (b - theta);
            let ev_lo = Evidence::new("2*kappa*(theta-a)", lo, rhs);
            let ev_hi = Evidence::new("2*kappa*(b-theta)", hi, rhs);
            let (left_ok, right_ok) = (lo >= rhs, hi >= rhs);
            let rule = if constant {
                "jacobi-constant-kernel"
            } else {
                "jacobi-sufficient"
            };
            if let Some(bd) = Boundary::from_sides(left_ok, right_ok) {
                out.push(BoundaryVerdict::new(
                    bd,
                    Verdict::NoExitAS,
                    rule,
                    vec![ev_lo.clone(), ev_hi.clone()],
                ));
            }
            if constant {
                if let Some(bd) = Boundary::from_sides(!left_ok, !right_ok) {
                    out.push(BoundaryVerdict::new(
                        bd,
                        Verdict::ExitsWithPositiveProb,
                        rule,
                        vec![ev_lo.clone(), ev_hi.clone()],
                    ));
                }
            } else {
                let f = k0 * k0 / (2.0 * kp0.abs());
                let th_l = a + f * (rhs - lo);
                let th_r = b - f * (rhs - hi);
                let pick = |ok: bool| {
                    if ok {
                        Verdict::NecessaryHolds
                    } else {
                        Verdict::ExitsWithPositiveProb
                    }
                };
                out.push(BoundaryVerdict::new(
                    Boundary::Left,
                    pick(x0 >= th_l),
                    "jacobi-necessary",
                    vec![Evidence::new("x0", x0, th_l)],
                ));
                out.push(BoundaryVerdict::new(
                    Boundary::Right,
                    pick(x0 <= th_r),
                    "jacobi-necessary",
                    vec![Evidence::new("x0", x0, th_r)],
                ));
            }
            // one side sufficient, the other far enough below it
            let reduced = (k0 * sigma * sigma - 2.0 * kp0.abs() / (k0 * k0)) * (b - a);
            if right_ok && lo < reduced {
                out.push(BoundaryVerdict::new(
                    Boundary::Right,
                    Verdict::SupBoundedAS,
                    "jacobi-sup-bound",
                    vec![
                        ev_hi.clone(),
                        Evidence::new("2*kappa*(theta-a)", lo, reduced),
                    ],
                ));
            }
            if left_ok && hi < reduced {
                out.push(BoundaryVerdict::new(
                    Boundary::Left,
                    Verdict::InfBoundedAS,
                    "jacobi-inf-bound",
                    vec![
                        ev_lo.clone(),
                        Evidence::new("2*kappa*(b-theta)", hi, reduced),
                    ],
                ));
            }
            &[Side::Left, Side::Right]
        }
        ModelFamily::Power { alpha, delta, .. } => {
            out.push(BoundaryVerdict::new(
                Boundary::Left,
                Verdict::NoExitAS,
                "power-no-blowup-below",
                vec![Evidence::new("alpha", *alpha, 1.0)],
            ));
            if *alpha > 1.0 + delta {
                out.push(BoundaryVerdict::new(
                    Boundary::Right,
                    Verdict::ExitsWithPositiveProb,
                    "power-blowup-above",
                    vec![Evidence::new("alpha", *alpha, 1.0 + delta)],
                ));
            }
            &[Side::Left, Side::Right]
        }
        ModelFamily::Custom(_) => {
            return Err(Error::Precondition(
                "closed-form rules exist only for the CIR, Jacobi and power families".into(),
            ))
        }
    };
    for &side in addressed {
        if !out.iter().any(|v| v.boundary.covers(side)) {
            out.push(BoundaryVerdict::new(
                side.into(),
                Verdict::Inconclusive,
                "none",
                Vec::new(),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// The necessary threshold on `x0` grows without bound along the sweep.
    Diverging,
    /// The threshold tends to zero.
    Vanishing,
    /// The threshold tends to a positive constant.
    Bounded,
}

/// Sweep parameter of [`fractional_condition_study`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StudyScheme {
    /// Sweep over `T`.
    Truncation,
    /// Sweep over the number of intervals `N` of geometric nodes
    /// `0, ξ_1, ξ_1·a, …`.
    Geometric {
        xi1: f64,
        ratio: f64,
        q: usize,
        weight: QuadratureWeight,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub sweep: f64,
    pub k0: f64,
    pub kp0: f64,
    /// `K(0)²/(2|K'(0)|)·(K(0)σ² - 2κθ)`, the smallest admissible `x0`.
    pub necessary_threshold: f64,
    /// `2κθ - K(0)σ²`; nonnegative when the sufficient condition holds.
    pub sufficient_gap: f64,
    pub regime: Regime,
}

/// Necessary and sufficient CIR conditions along a family of fractional
/// kernel approximations.
pub fn fractional_condition_study(
    alpha: f64,
    scheme: &StudyScheme,
    cir: CirParams,
    sweep: &[f64],
) -> Result<Vec<StudyRow>> {
    let regime = match scheme {
        StudyScheme::Geometric {
            weight: QuadratureWeight::FractionalThenUnit,
            ..
        } => Regime::Diverging,
        _ if alpha < 0.5 => Regime::Diverging,
        _ if alpha > 0.5 => Regime::Vanishing,
        _ => Regime::Bounded,
    };
    sweep
        .iter()
        .map(|&s| {
            let approx = match scheme {
                StudyScheme::Truncation => ApproxScheme::truncation(alpha, s)?,
                StudyScheme::Geometric {
                    xi1,
                    ratio,
                    q,
                    weight,
                } => {
                    if !(s >= 1.0 && s.fract() == 0.0) {
                        return Err(Error::param(
                            "sweep",
                            "interval counts must be positive integers",
                        ));
                    }
                    ApproxScheme::geometric(alpha, *xi1, *ratio, s as usize, *q, *weight)?
                }
            };
            let KernelScalars { k0, kp0 } = match approx.kind {
                SchemeKind::Truncation { .. } => approx.analytic_scalars(),
                SchemeKind::Quadrature { .. } => build_kernel(&approx)?.scalars(),
            };
            let CirParams {
                kappa,
                theta,
                sigma,
            } = cir;
            Ok(StudyRow {
                sweep: s,
                k0,
                kp0,
                necessary_threshold: sigma * sigma * k0.powi(3) / (2.0 * kp0.abs())
                    - kappa * theta * k0 * k0 / kp0.abs(),
                sufficient_gap: 2.0 * kappa * theta - k0 * sigma * sigma,
                regime,
            })
        })
        .collect()
}
