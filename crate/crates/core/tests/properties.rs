use fraclab::constants::{gamma_series, CriticalParams};
use fraclab::funcspace::{
    dilate, gagliardo_1d, gagliardo_1d_estimate, gagliardo_profile, lq_norm, lq_norm_1d, rearrange, translate_dilate, PiecewiseFunction1D,
    QuadratureSpec, RadialProfile,
};
use fraclab::poincare::{
    analytic_lower_bound_1d, rayleigh_estimate_with, DomainSpec, IntervalUnionDomain, RayleighConfig,
};
use proptest::prelude::*;

fn tents() -> impl Strategy<Value = PiecewiseFunction1D> {
    prop::collection::vec((-2.0..2.0f64, 0.1..1.0f64, -1.0..2.0f64), 1..5)
        .prop_filter_map("degenerate tent sum", |t| PiecewiseFunction1D::tent_sum(&t).ok())
}

fn loose() -> QuadratureSpec {
    QuadratureSpec { target_rel_err: 1e-2, ..QuadratureSpec::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seminorm_is_p_homogeneous(u in tents(), c in -3.0..3.0f64, s in 0.2..0.8f64, p in 1.5..4.0f64) {
        prop_assume!(c.abs() > 0.05);
        let q = loose();
        let a = gagliardo_1d(&u.scaled(c), s, p, &q).unwrap();
        let b = gagliardo_1d(&u, s, p, &q).unwrap();
        prop_assume!(b > 1e-8);
        prop_assert!(rel(a, c.abs().powf(p) * b) < 1e-9);
    }

    #[test]
    fn seminorm_scales_with_dilation(u in tents(), l in 0.3..6.0f64, x0 in -3.0..3.0f64, s in 0.2..0.8f64, p in 1.5..4.0f64) {
        let q = loose();
        let base = gagliardo_1d_estimate(&u, s, p, &q).unwrap();
        prop_assume!(base.value > 1e-8);
        let moved = gagliardo_1d_estimate(&translate_dilate(&u, x0, l).unwrap(), s, p, &q).unwrap();
        // [u((x - x0)/l)]^p = l^{1 - sp} [u]^p
        let f = l.powf(1.0 - s * p);
        let slack = f * base.error_estimate + moved.error_estimate + 1e-10 * moved.value;
        prop_assert!((moved.value - f * base.value).abs() <= slack);
        // [u(l x)]^p = l^{sp - 1} [u]^p
        let g = 1.0 / f;
        let pure = gagliardo_1d_estimate(&dilate(&u, l).unwrap(), s, p, &q).unwrap();
        let slack = g * base.error_estimate + pure.error_estimate + 1e-10 * pure.value;
        prop_assert!((pure.value - g * base.value).abs() <= slack);
    }

    #[test]
    fn rearrangement_is_equimeasurable(u in tents(), q in 1.0..6.0f64) {
        let star = rearrange(&u, 1).unwrap();
        let a = lq_norm_1d(&u, q).unwrap();
        let b = lq_norm(&star, q, 1).unwrap();
        prop_assert!(rel(b, a) < 1e-9);
    }

    #[test]
    fn rearrangement_does_not_raise_seminorm(u in tents(), s in 0.2..0.8f64, p in 1.5..3.0f64) {
        let q = loose();
        let star = rearrange(&u, 1).unwrap();
        let a = gagliardo_1d_estimate(&u, s, p, &q).unwrap();
        let b = gagliardo_1d_estimate(&star.to_line(), s, p, &q).unwrap();
        prop_assert!(b.value <= a.value * (1.0 + 1e-9) + a.error_estimate + b.error_estimate);
    }

    #[test]
    fn rearrangement_is_idempotent(u in tents()) {
        let once = rearrange(&u, 1).unwrap();
        let twice = rearrange(&once, 1).unwrap();
        for q in [1.0, 2.0, 5.0] {
            prop_assert!(rel(lq_norm(&twice, q, 1).unwrap(), lq_norm(&once, q, 1).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn critical_dilation_keeps_radial_seminorm(l in 0.2..8.0f64, a in 0.1..0.9f64, b in 0.05..0.95f64) {
        let params = CriticalParams::critical(2, 0.5).unwrap();
        let u = RadialProfile::new(vec![0.0, a, 1.0], vec![1.0, b, 0.0]).unwrap();
        let q = loose();
        let base = gagliardo_profile(&u, &params, &q).unwrap();
        let v = gagliardo_profile(&dilate(&u, l).unwrap(), &params, &q).unwrap();
        prop_assert!(rel(v, base) < 1e-9);
    }

    #[test]
    fn tail_bound_dominates_remainder(n in 1i64..4, extra in 0.2..3.0f64) {
        let p = n as f64 + extra;
        let coarse = gamma_series(n, p, 1e-4).unwrap();
        let fine = gamma_series(n, p, 1e-11).unwrap();
        prop_assert!(coarse.tail_bound >= 0.0);
        prop_assert!((fine.value - coarse.value).abs() <= coarse.tail_bound + fine.tail_bound);
        prop_assert!(fine.terms_used >= coarse.terms_used);
    }

    #[test]
    fn interval_domain_json_round_trips(gaps in prop::collection::vec((0.1..2.0f64, 0.1..2.0f64), 1..5)) {
        let mut x = 0.0;
        let mut iv = Vec::new();
        for (len, gap) in gaps {
            iv.push((x, x + len));
            x += len + gap;
        }
        let spec = DomainSpec::Intervals { intervals: IntervalUnionDomain::new(iv).unwrap() };
        let text = serde_json::to_string(&spec).unwrap();
        let back = DomainSpec::from_json(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn analytic_bound_sits_below_rayleigh(
        lens in prop::collection::vec(0.3..1.5f64, 2..4),
        gaps in prop::collection::vec(0.2..2.0f64, 3),
    ) {
        let mut x = 0.0;
        let mut iv = Vec::new();
        for (i, len) in lens.iter().enumerate() {
            iv.push((x, x + len));
            x += len + gaps[i];
        }
        let domain = IntervalUnionDomain::new(iv).unwrap();
        let bound = analytic_lower_bound_1d(&domain, 0.5, 2.0).unwrap();
        let cfg = RayleighConfig { restarts: 0, ..RayleighConfig::with_grid(64) };
        let est = rayleigh_estimate_with(&domain, 0.5, 2.0, 2.0, &cfg).unwrap();
        prop_assert!(bound > 0.0);
        prop_assert!(bound <= est.value);
    }
}

#[test]
fn poincare_constant_decreases_under_inclusion() {
    let cfg = RayleighConfig { restarts: 0, ..RayleighConfig::with_grid(64) };
    let small = IntervalUnionDomain::new(vec![(0.0, 1.0), (2.0, 2.5)]).unwrap();
    let large = IntervalUnionDomain::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
    let larger = IntervalUnionDomain::new(vec![(-0.5, 1.0), (1.5, 3.0)]).unwrap();
    let a = rayleigh_estimate_with(&small, 0.5, 2.0, 2.0, &cfg).unwrap().value;
    let b = rayleigh_estimate_with(&large, 0.5, 2.0, 2.0, &cfg).unwrap().value;
    let c = rayleigh_estimate_with(&larger, 0.5, 2.0, 2.0, &cfg).unwrap().value;
    assert!(a > b && b > c, "{a} {b} {c}");
}
