use proptest::prelude::*;

use opburgers::field::{Field, Interval, TimeField};
use opburgers::frac::{caputo_f, Clock, FracParams};
use opburgers::invariant::{
    assemble_solution, build_coeff_system, check_invariant_space, coeff_closed_form, integrate_coeff_system, ClosedForm,
};
use opburgers::operators::{apply_spatial, check_leibniz, inverse_spatial, partial, Probe, Sample, SpatialOp, Stencil};
use opburgers::report::g12;
use opburgers::residual::{evaluate, evaluate_detailed, GridSpec};
use opburgers::sampling::interior_samples;
use opburgers::scenarios::{catalog, find, metric_mismatch, Form, GenTag, Scenario};
use opburgers::specialfn::{gamma, hermite_gen, HermiteArgs, MittagLeffler};
use opburgers::transform::{forward, TransformContext};

/// c0 + c1 Σx + c2 Σx² + c3 sin(k Σx + t)
fn smooth_field(c: [f64; 4], k: f64) -> Field {
    Field::new(move |x, t| {
        let s: f64 = x.iter().sum();
        let q: f64 = x.iter().map(|v| v * v).sum();
        c[0] + c[1] * s + c[2] * q + c[3] * (k * s + t).sin()
    })
}

fn coeffs() -> impl Strategy<Value = ([f64; 4], f64)> {
    ([-1.0..1.0f64, -1.0..1.0f64, -0.5..0.5f64, -0.5..0.5f64], 0.2..1.5f64)
}

fn hermite(n: u32, f: f64, h: f64) -> f64 {
    hermite_gen(HermiteArgs { n, fval: f, hval: h }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_polynomial_recurrence(n in 1u32..19, f in -2.0..2.0f64, h in 0.0..2.0f64) {
        let lhs = hermite(n + 1, f, h);
        let rhs = f * hermite(n, f, h) + 2.0 * n as f64 * h * hermite(n - 1, f, h);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn heat_polynomials_solve_the_heat_equation(n in 2u32..=10, f in -2.0..2.0f64, h in 0.1..2.0f64) {
        let d = 1e-3;
        let fff = (hermite(n, f + d, h) - 2.0 * hermite(n, f, h) + hermite(n, f - d, h)) / (d * d);
        let fh = (hermite(n, f, h + d) - hermite(n, f, h - d)) / (2.0 * d);
        let exact = n as f64 * (n as f64 - 1.0) * hermite(n - 2, f, h);
        let scale = exact.abs().max(1.0);
        prop_assert!((fh - exact).abs() < 1e-4 * scale);
        prop_assert!((fff - exact).abs() < 1e-4 * scale);
    }

    #[test]
    fn gamma_recurrence(x in 0.1..15.0f64) {
        let (a, b) = (gamma(x + 1.0).unwrap(), x * gamma(x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn mittag_leffler_at_beta_one_is_exp(z in -2.0..5.0f64) {
        let v = MittagLeffler::new(1.0).unwrap().eval(z).unwrap();
        prop_assert!((v - z.exp()).abs() / z.exp() < 1e-12);
    }

    #[test]
    fn caputo_is_linear(beta in 0.2..0.9f64, a in -2.0..2.0f64, b in -2.0..2.0f64, k in 0.2..2.0f64, t in 0.3..2.0f64) {
        let p = FracParams::new(beta, Clock::Log1p).unwrap();
        let b1 = |s: f64| (k * s).sin();
        let b2 = |s: f64| s * s + 1.0;
        let lhs = caputo_f(&p, |s| a * b1(s) + b * b2(s), t, 256).unwrap();
        let rhs = a * caputo_f(&p, b1, t, 256).unwrap() + b * caputo_f(&p, b2, t, 256).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn richardson_is_exact_on_cubics(c in [-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64], x in -1.0..1.0f64) {
        let u = |y: &[f64], _: f64| c[0] + c[1] * y[0] + c[2] * y[0] * y[0] + c[3] * y[0].powi(3);
        let d = partial(&u, &[x], 0.0, 0, 1e-2, Stencil::Richardson);
        let exact = c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        prop_assert!((d - exact).abs() < 1e-9);
        // through a variable coefficient as well
        let op = SpatialOp::new(0, "cosh d", Field::of_axis(0, f64::cosh));
        let bounds = [Interval::new(-2.0, 2.0)];
        let v = apply_spatial(&op, &u, &[x], 0.0, 1e-2, &bounds).unwrap();
        prop_assert!((v - x.cosh() * exact).abs() < 1e-9);
    }

    #[test]
    fn scaling_a_coefficient_scales_the_operator(k in 0.1..10.0f64, x in 0.3..2.5f64, (c, w) in coeffs()) {
        let u = smooth_field(c, w);
        let uf = |y: &[f64], t: f64| u.eval(y, t);
        let a = SpatialOp::new(0, "sinh d", Field::of_axis(0, f64::sinh));
        let ka = SpatialOp::new(0, "k sinh d", Field::of_axis(0, move |y| k * y.sinh()));
        let (p, q) = (a.apply_raw(&uf, &[x], 0.5, 1e-3, Stencil::Richardson), ka.apply_raw(&uf, &[x], 0.5, 1e-3, Stencil::Richardson));
        prop_assert!((q - k * p).abs() <= 1e-12 * q.abs().max(1.0));
    }

    #[test]
    fn forward_ignores_constant_rescaling(k in 0.01..100.0f64, x in -0.8..0.8f64, t in 0.3..1.8f64) {
        let sc = find("euclid-classic").unwrap();
        let ctx = TransformContext::for_scenario(&sc).unwrap();
        let psi = Field::new(|y, s| (y[0] * y[0] + 2.0 * s) * (0.4 * y[0]).exp());
        let a = forward(&ctx, &psi, &[x], t).unwrap();
        let b = forward(&ctx, &psi.scale(k), &[x], t).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn g12_keeps_twelve_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = g12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn catalog_operators_obey_leibniz((c, w) in coeffs(), (d, z) in coeffs()) {
        let u = smooth_field(c, w);
        let v = smooth_field(d, z);
        for sc in catalog() {
            let samples = interior_samples(&sc.bounds(), sc.time.interval, 100, 0.05, 11);
            let probe = Probe::new(sc.bounds(), sc.time.interval);
            for dim in &sc.dims {
                for op in [&dim.n, &dim.m] {
                    let dev = check_leibniz(op, &u, &v, &samples, &probe).unwrap();
                    prop_assert!(dev < 1e-5, "{} {}: {}", sc.id, op.label, dev);
                }
            }
        }
    }

    #[test]
    fn inverse_then_apply_is_the_identity((c, w) in coeffs(), frac in 0.05..0.95f64, t in 0.2..1.9f64) {
        let u = smooth_field(c, w);
        let uf = |y: &[f64], s: f64| u.eval(y, s);
        for id in ["hyp-sinh", "hyp-csch", "euclid-classic"] {
            let sc = find(id).unwrap();
            let op = &sc.dims[0].n;
            let iv = sc.bounds()[0];
            let x0 = iv.lo;
            let x = iv.lo + frac * iv.extent();
            let inv = |y: &[f64], s: f64| inverse_spatial(op, &uf, x0, y, s, 512).unwrap();
            let back = op.apply_raw(&inv, &[x], t, 1e-3 * iv.extent(), Stencil::Richardson);
            prop_assert!((back - u.eval(&[x], t)).abs() < 1e-6, "{id}: {back} vs {}", u.eval(&[x], t));
        }
    }

    #[test]
    fn assembly_is_linear(a in prop::collection::vec(-2.0..2.0f64, 4), b in prop::collection::vec(-2.0..2.0f64, 4), s in 0.2..1.0f64) {
        let sc = find("hyp-2d").unwrap();
        let tf = |v: f64, k: f64| TimeField::new(move |t| v * (k * t).cos());
        let ca: Vec<TimeField> = a.iter().map(|&v| tf(v, 1.0)).collect();
        let cb: Vec<TimeField> = b.iter().map(|&v| tf(v, 2.0)).collect();
        let sum: Vec<TimeField> = a.iter().zip(&b).map(|(&p, &q)| TimeField::new(move |t| p * t.cos() + q * (2.0 * t).cos())).collect();
        let (ua, ub, us) = (assemble_solution(&sc, &ca).unwrap(), assemble_solution(&sc, &cb).unwrap(), assemble_solution(&sc, &sum).unwrap());
        for x in [[0.5, 0.2], [1.9, -0.7], [2.4, 1.1]] {
            let lhs = us.eval(&x, s);
            prop_assert!((lhs - ua.eval(&x, s) - ub.eval(&x, s)).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn forms_agree_when_n_equals_m((c, w) in coeffs()) {
        let u = smooth_field(c, w);
        for sc in catalog() {
            let same = sc.dims.iter().all(|d| d.l.identity && d.n.label == d.m.label && d.n.axis == d.m.axis);
            if !same || sc.ndim() > 2 {
                continue;
            }
            let mut other: Scenario = sc.clone();
            other.form = if sc.form == Form::A { Form::B } else { Form::A };
            let g = GridSpec::for_scenario(&sc, 5, 4);
            let (ra, rb) = (evaluate(&sc, &u, &g).unwrap(), evaluate(&other, &u, &g).unwrap());
            prop_assert!((ra.max_abs - rb.max_abs).abs() <= 1e-12 * ra.max_abs.max(1.0), "{}", sc.id);
            prop_assert!((ra.l2 - rb.l2).abs() <= 1e-12 * ra.l2.max(1.0));
        }
    }

    #[test]
    fn residual_terms_add_up((c, w) in coeffs()) {
        let u = smooth_field(c, w);
        for id in ["euclid-classic", "hyp-csch", "hyp-2d"] {
            let sc = find(id).unwrap();
            let (_, recs) = evaluate_detailed(&sc, &u, &GridSpec::for_scenario(&sc, 5, 4)).unwrap();
            for r in &recs {
                let sum = r.time - r.nonlinear.iter().sum::<f64>() - r.diffusion - r.source;
                prop_assert!((sum - r.residual).abs() <= 1e-14 * r.time.abs().max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn metric_laplacian_matches_the_composed_operators((c, w) in coeffs()) {
        let u = smooth_field(c, w);
        for sc in catalog() {
            if sc.metric.is_none() {
                continue;
            }
            let m = sc.metric.as_ref().unwrap();
            // the test field may only depend on mapped coordinates
            let mapped: Vec<usize> = m.coords.iter().flatten().copied().collect();
            let v = {
                let u = u.clone();
                Field::new(move |x, t| {
                    let y: Vec<f64> = mapped.iter().map(|&i| x[i]).collect();
                    u.eval(&y, t)
                })
            };
            let samples = interior_samples(&sc.bounds(), sc.time.interval, 8, 0.05, 5);
            let dev = metric_mismatch(&sc, &v, &samples, 1e-3).unwrap();
            let scale = samples.iter().map(|s| v.eval(&s.x, s.t).abs()).fold(1.0, f64::max);
            prop_assert!(dev < 1e-4 * scale, "{}: {}", sc.id, dev);
        }
    }
}

#[test]
fn unit_generators_are_mapped_to_one() {
    for sc in catalog() {
        let samples = interior_samples(&sc.bounds(), sc.time.interval, 100, 0.05, 21);
        let probe = Probe::new(sc.bounds(), sc.time.interval);
        let rep = check_invariant_space(&sc, &samples, &probe).unwrap();
        assert!(rep.unit < 1e-6, "{}: {:?}", sc.id, rep);
        assert!(rep.kernel < 1e-6, "{}: {:?}", sc.id, rep);
        for d in sc.dims.iter().filter(|d| !d.generators.is_empty()) {
            assert!(d.generators.iter().any(|g| g.tag == GenTag::Unit), "{}", sc.id);
        }
    }
}

#[test]
fn closed_form_coefficients_match_rk4_on_classical_scenarios() {
    for sc in catalog().into_iter().filter(Scenario::is_classical) {
        let Ok(sys) = build_coeff_system(&sc) else {
            continue;
        };
        let iv = sc.time.interval;
        let b = coeff_closed_form(&ClosedForm::Riccati {
            c: sc.params.c,
            t0: sc.params.t0,
            interval: iv,
        })
        .unwrap();
        let init = vec![b.eval(iv.lo); sys.len()];
        let traj = integrate_coeff_system(&sys, &init, iv.lo, iv.hi, 2000).unwrap();
        for (t, v) in traj.times.iter().zip(&traj.values) {
            for x in v {
                assert!((x - b.eval(*t)).abs() < 1e-7, "{} at {t}", sc.id);
            }
        }
    }
}

#[test]
fn classical_limit_of_the_caputo_derivative() {
    let p = FracParams::new(0.99, Clock::Identity).unwrap();
    let b = |s: f64| (0.8 * s).sin() + s * s;
    for t in [0.5, 1.0, 1.5, 2.0] {
        let d = caputo_f(&p, b, t, 4096).unwrap();
        let exact = 0.8 * (0.8 * t).cos() + 2.0 * t;
        assert!((d - exact).abs() < 0.1 * exact.abs(), "t = {t}: {d} vs {exact}");
    }
}

#[test]
fn sample_points_stay_inside_the_scenarios() {
    for sc in catalog() {
        for s in interior_samples(&sc.bounds(), sc.time.interval, 64, 0.05, 3) {
            let Sample { x, t } = s;
            assert!(sc.time.interval.contains(t));
            for (v, b) in x.iter().zip(sc.bounds()) {
                assert!(b.contains(*v));
            }
        }
    }
}
