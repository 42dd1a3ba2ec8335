use proptest::prelude::*;

use volterra_feller::feller::{
    family_test, necessary_test, Boundary, BoundaryVerdict, Hypotheses, Verdict,
};
use volterra_feller::fracapprox::{build_kernel, ApproxScheme, QuadratureWeight, SchemeKind};
use volterra_feller::kernels::{Kernel, KernelScalars, KernelSpec};
use volterra_feller::resolvent::{check_hypotheses, solve_resolvent};
use volterra_feller::scale::{
    LimitSettings, LimitTarget, ModelSpec, ScaleContext, ScaleSettings, Side,
};
use volterra_feller::simulate::{simulate, SimConfig};

fn sumexp() -> impl Strategy<Value = KernelSpec> {
    prop::collection::vec((0.1f64..2.0, 0.0f64..5.0), 1..4).prop_map(|terms| {
        let (m, x) = terms.into_iter().unzip();
        KernelSpec::sum_of_exponentials(m, x).unwrap()
    })
}

fn scheme_nodes_max(s: &ApproxScheme) -> f64 {
    match &s.kind {
        SchemeKind::Quadrature { nodes, .. } => nodes[nodes.len() - 1],
        SchemeKind::Truncation { t_max } => *t_max,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sumexp_value_and_slope_at_origin(k in sumexp()) {
        let (k0, kp0) = k.k0_kprime0();
        prop_assert!(rel(k.eval(0.0).unwrap(), k0) <= 1e-10);
        let h = 1e-6;
        let fd = (k.eval(h).unwrap() - k.eval(0.0).unwrap()) / h;
        prop_assert!((fd - kp0).abs() <= 1e-4 * kp0.abs().max(1.0));
    }

    #[test]
    fn sumexp_is_nonincreasing(k in sumexp(), t in 0.0f64..10.0, dt in 0.0f64..5.0) {
        prop_assert!(k.eval(t).unwrap() >= k.eval(t + dt).unwrap());
    }

    #[test]
    fn truncated_fractional_grows_with_level(alpha in 0.1f64..0.9, t in 0.05f64..5.0, level in 1.0f64..100.0) {
        let lo = KernelSpec::truncated_fractional(alpha, level).unwrap();
        let hi = KernelSpec::truncated_fractional(alpha, 4.0 * level).unwrap();
        let (v_lo, v_hi) = (lo.eval(t).unwrap(), hi.eval(t).unwrap());
        let limit = t.powf(alpha - 1.0) / volterra_feller::special::gamma(alpha);
        prop_assert!(v_lo <= v_hi * (1.0 + 1e-12) && v_hi <= limit * (1.0 + 1e-10), "{} {} {}", v_lo, v_hi, limit);
        prop_assert!(rel(lo.eval(0.0).unwrap(), lo.k0_kprime0().0) <= 1e-10);
    }

    #[test]
    fn completely_monotone_kernels_pass_the_resolvent_check(k in sumexp()) {
        let g = solve_resolvent(&k, 1e-3, 2.0).unwrap();
        prop_assert!(check_hypotheses(&g).passed());
        let (k0, kp0) = k.k0_kprime0();
        prop_assert!((g.kprime_conv_l[0] - kp0 / k0).abs() <= 10.0 * g.dt);
    }

    #[test]
    fn quadrature_kernels_match_their_measures(
        alpha in 0.1f64..0.9,
        xi1 in 0.1f64..1.0,
        n in 1usize..4,
        q in 1usize..5,
        unit in any::<bool>(),
    ) {
        let weight = if unit { QuadratureWeight::FractionalThenUnit } else { QuadratureWeight::Fractional };
        let scheme = ApproxScheme::geometric(alpha, xi1, 6.4, n, q, weight).unwrap();
        let k = build_kernel(&scheme).unwrap();
        let KernelScalars { k0, kp0 } = k.scalars();
        let want = scheme.analytic_scalars();
        prop_assert!(rel(k0, want.k0) <= 1e-10);
        prop_assert!(rel(kp0, want.kp0) <= 1e-10);
        // the grid must resolve the fastest exponential
        let fastest = scheme_nodes_max(&scheme);
        let g = solve_resolvent(&k, (0.02 / fastest).min(1e-3), 0.5).unwrap();
        prop_assert!(check_hypotheses(&g).passed());
    }
}

fn cir() -> impl Strategy<Value = ModelSpec> {
    (0.2f64..3.0, 0.1f64..2.0, 0.2f64..2.0, 0.1f64..3.0)
        .prop_map(|(k, t, s, x0)| ModelSpec::cir(k, t, s, x0).unwrap())
}

fn jacobi() -> impl Strategy<Value = ModelSpec> {
    (0.2f64..3.0, 0.1f64..0.9, 0.2f64..2.0, 0.1f64..0.9)
        .prop_map(|(k, t, s, x0)| ModelSpec::jacobi(0.0, 1.0, k, t, s, x0).unwrap())
}

fn power() -> impl Strategy<Value = ModelSpec> {
    (1.1f64..3.0, 0.0f64..0.9, 0.2f64..2.0, 0.3f64..2.0)
        .prop_map(|(a, d, s, x0)| ModelSpec::power(a, d, s, x0).unwrap())
}

fn builtin() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![cir(), jacobi(), power()]
}

/// A point strictly inside the interval at relative position `u ∈ (0, 1)`,
/// staying on the same side of 0 as `x0` on unbounded left sides.
fn interior(m: &ModelSpec, u: f64) -> f64 {
    let (l, r) = m.interval();
    let lo = if l.is_finite() {
        l + 0.02 * (m.x0 - l)
    } else {
        0.3 * m.x0
    };
    let hi = if r.is_finite() {
        r - 0.02 * (r - m.x0)
    } else {
        m.x0 + 3.0
    };
    lo + u * (hi - lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_and_test_function_shape(m in builtin(), k in sumexp(), us in prop::collection::vec(0.0f64..1.0, 4)) {
        let ctx = ScaleContext::new(m.clone(), &k).unwrap();
        prop_assert_eq!(ctx.scale(m.x0).unwrap(), 0.0);
        prop_assert_eq!(ctx.v(m.x0).unwrap(), 0.0);
        let mut xs: Vec<f64> = us.iter().map(|u| interior(&m, *u)).collect();
        xs.sort_by(f64::total_cmp);
        let p: Vec<f64> = xs.iter().map(|x| ctx.scale(*x).unwrap()).collect();
        for (w, x) in p.windows(2).zip(xs.windows(2)) {
            if x[0] < x[1] {
                // far from c the increments of p can drop below the
                // quadrature error of separate evaluations
                prop_assert!(w[0] <= w[1] + 1e-9 * w[0].abs().max(w[1].abs()), "{:?} {:?}", x, w);
            }
        }
        for &x in &xs {
            prop_assert!(ctx.log_scale_derivative(x).unwrap().is_finite());
        }
        // v decreases towards c from the left and increases away from it on the right
        let v: Vec<f64> = xs.iter().map(|x| ctx.v(*x).unwrap()).collect();
        for i in 1..xs.len() {
            let tol = 1e-9 * v[i].abs().max(v[i - 1].abs()).max(1.0);
            if xs[i] <= m.x0 {
                prop_assert!(v[i] <= v[i - 1] + tol);
            } else if xs[i - 1] >= m.x0 {
                prop_assert!(v[i] + tol >= v[i - 1]);
            }
        }
    }

    #[test]
    fn closed_form_exponent_matches_quadrature(m in builtin(), k in sumexp(), u in 0.0f64..1.0, shifts in (-1.0f64..1.0, -1.0f64..1.0)) {
        let ctx = ScaleContext::new(m.clone(), &k).unwrap().with_shifts(shifts.0, shifts.1);
        let x = interior(&m, u);
        let closed = ctx.log_scale_derivative(x).unwrap();
        let quad = ctx.log_scale_derivative_quadrature(x).unwrap();
        // relative error of p' is the absolute error of its logarithm
        prop_assert!((closed - quad).abs() <= 1e-8, "{} vs {}", closed, quad);
    }

    #[test]
    fn larger_shifts_shrink_v(
        m in prop_oneof![cir(), jacobi()],
        k in sumexp(),
        u in 0.0f64..1.0,
        b in (-2.0f64..2.0, -2.0f64..2.0),
        g in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let ctx = ScaleContext::new(m.clone(), &k).unwrap();
        let x = interior(&m, u);
        let small = ctx
            .clone().with_shifts(b.0.max(b.1), g.0.min(g.1)).v(x).unwrap();
        let large = ctx.with_shifts(b.0.min(b.1), g.0.max(g.1)).v(x).unwrap();
        prop_assert!(small <= large + 1e-9 * large.abs().max(1.0), "{} > {}", small, large);
    }

    #[test]
    fn constant_kernel_ignores_shifts(m in builtin(), u in 0.0f64..1.0, b in -2.0f64..2.0, g in -2.0f64..2.0) {
        let k = KernelSpec::constant(1.5).unwrap();
        let ctx = ScaleContext::new(m.clone(), &k).unwrap();
        let x = interior(&m, u);
        let shifted = ctx.clone().with_shifts(b, g);
        prop_assert_eq!(ctx.scale(x).unwrap(), shifted.scale(x).unwrap());
        prop_assert_eq!(ctx.v(x).unwrap(), shifted.v(x).unwrap());
    }

    #[test]
    fn series_sandwich(m in prop_oneof![cir(), jacobi()], k in sumexp(), u in 0.0f64..1.0) {
        let ctx = ScaleContext::new(m.clone(), &k).unwrap();
        let x = interior(&m, u);
        prop_assume!(x != m.x0);
        let v = ctx.v(x).unwrap();
        prop_assume!(v < 30.0);
        let s = ctx.u_series(x, 8).unwrap();
        let tol = 1e-8 * s.max(1.0);
        prop_assert!(1.0 + v <= s + tol && s <= v.exp() + tol, "1+v={} u={} e^v={}", 1.0 + v, s, v.exp());
    }
}

fn exits_at(verdicts: &[BoundaryVerdict], side: Side) -> bool {
    verdicts
        .iter()
        .any(|v| v.verdict == Verdict::ExitsWithPositiveProb && v.boundary.covers(side))
}

fn no_exit_at(verdicts: &[BoundaryVerdict], side: Side) -> bool {
    verdicts
        .iter()
        .any(|v| v.verdict == Verdict::NoExitAS && v.boundary.covers(side))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sufficient_verdicts_never_contradict_necessary_ones(m in builtin(), k in sumexp()) {
        let family = family_test(&m, k.scalars()).unwrap();
        let hyp = Hypotheses::establish(&k, &m, 1e-2, 1.0);
        let ctx = ScaleContext::new(m.clone(), &k).unwrap();
        let nec = necessary_test(&ctx, &hyp, 1e-6).unwrap();
        for side in [Side::Left, Side::Right] {
            prop_assert!(!(no_exit_at(&family, side) && exits_at(std::slice::from_ref(&nec), side)), "{:?} {:?}", family, nec);
        }
    }

    #[test]
    fn necessary_condition_is_monotone_in_x0(
        (kappa, theta, sigma) in (0.2f64..3.0, 0.1f64..2.0, 0.2f64..2.0),
        x0 in 0.05f64..3.0,
        dx in 0.0f64..2.0,
        k in sumexp(),
    ) {
        prop_assume!(k.k0_kprime0().1 < 0.0);
        let hyp_for = |m: &ModelSpec| Hypotheses::establish(&k, m, 1e-2, 1.0);
        let passes = |x: f64| {
            let m = ModelSpec::cir(kappa, theta, sigma, x).unwrap();
            let v = necessary_test(&ScaleContext::new(m.clone(), &k).unwrap(), &hyp_for(&m), 1e-6).unwrap();
            !exits_at(&[v], Side::Left)
        };
        if passes(x0) {
            prop_assert!(passes(x0 + dx));
        }
    }

    #[test]
    fn jacobi_verdicts_are_affine_invariant(
        m in jacobi(),
        k in sumexp(),
        shift in -5.0f64..5.0,
        stretch in 0.1f64..10.0,
    ) {
        let volterra_feller::scale::ModelFamily::Jacobi { kappa, theta, sigma, .. } = m.family else { unreachable!() };
        let map = |x: f64| shift + stretch * x;
        let moved = ModelSpec::jacobi(map(0.0), map(1.0), kappa, map(theta), sigma, map(m.x0)).unwrap();
        let strip = |v: Vec<BoundaryVerdict>| -> Vec<(Boundary, Verdict, String)> {
            v.into_iter().map(|b| (b.boundary, b.verdict, b.rule)).collect()
        };
        prop_assert_eq!(
            strip(family_test(&m, k.scalars()).unwrap()),
            strip(family_test(&moved, k.scalars()).unwrap())
        );
    }

    #[test]
    fn constant_kernel_cir_rule_matches_limit(
        kappa in 0.2f64..3.0,
        sigma in 0.3f64..2.0,
        ratio in prop_oneof![0.1f64..0.35, 0.65f64..2.0],
        x0 in 0.1f64..3.0,
    ) {
        // 2κθ/σ² = 2·ratio, kept away from 1
        let theta = ratio * sigma * sigma / kappa;
        let m = ModelSpec::cir(kappa, theta, sigma, x0).unwrap();
        let family = family_test(&m, KernelScalars { k0: 1.0, kp0: 0.0 }).unwrap();
        let settings = ScaleSettings {
            limits: LimitSettings { closed_form: false, ..LimitSettings::default() },
            ..ScaleSettings::default()
        };
        let ctx = ScaleContext::new(m, &KernelSpec::constant(1.0).unwrap()).unwrap().with_settings(settings);
        let lim = ctx.boundary_limit(Side::Left, LimitTarget::TestV);
        prop_assert_eq!(no_exit_at(&family, Side::Left), lim.is_divergent(), "{:?}", lim);
        prop_assert_eq!(exits_at(&family, Side::Left), lim.is_finite(), "{:?}", lim);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn truncation_keeps_states_finite(
        m in prop_oneof![cir(), jacobi()],
        k in sumexp(),
        dt in 0.05f64..0.5,
        seed in any::<u64>(),
    ) {
        let mut cfg = SimConfig::new(m, k);
        cfg.horizon = 2.0;
        cfg.dt = dt;
        cfg.n_paths = 20;
        cfg.seed = seed;
        prop_assert!(simulate(&cfg).is_ok());
    }
}
