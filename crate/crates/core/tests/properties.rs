use proptest::prelude::*;

use fuzzy_resum::fourier::{abel_poisson, FuzzyPeriodicFunction};
use fuzzy_resum::methods::{
    phi_limit, phi_transform, Extrapolate, LambdaSeq, LimitOptions, PhiMethod, TransformOptions,
};
use fuzzy_resum::series::FuzzySeries;
use fuzzy_resum::{AlphaGrid, FuzzyNumber, SummationResult};

fn grid() -> AlphaGrid {
    AlphaGrid::uniform(11).unwrap()
}

prop_compose! {
    fn fuzzy()(l in -10.0..10.0f64, steps in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 10), w in 0.0..5.0f64)
        -> FuzzyNumber {
        let mut lo = vec![l];
        let mut hi = vec![l + w];
        for (a, b) in steps {
            let (pl, ph) = (*lo.last().unwrap(), *hi.last().unwrap());
            let room = (ph - pl) / 10.0;
            lo.push(pl + a * room);
            hi.push(ph - b * room);
        }
        FuzzyNumber::on_grid(grid(), lo, hi).unwrap()
    }
}

fn method(i: usize) -> PhiMethod {
    match i {
        0 => PhiMethod::abel(),
        1 => PhiMethod::dirichlet(LambdaSeq::parse("ln(n+1)").unwrap()).unwrap(),
        _ => PhiMethod::factorial(LambdaSeq::parse("n+1").unwrap()).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(u in fuzzy(), v in fuzzy(), w in fuzzy()) {
        prop_assert_eq!(u.distance(&v), v.distance(&u));
        prop_assert_eq!(u.distance(&u), 0.0);
        prop_assert!(u.distance(&w) <= u.distance(&v) + v.distance(&w) + 1e-12);
    }

    #[test]
    fn scaling_is_homogeneous(u in fuzzy(), v in fuzzy(), k in -5.0..5.0f64) {
        let lhs = u.scale(k).distance(&v.scale(k));
        prop_assert!((lhs - k.abs() * u.distance(&v)).abs() <= 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn addition_is_nonexpansive(u in fuzzy(), v in fuzzy(), w in fuzzy(), z in fuzzy()) {
        prop_assert!(u.add(&v).distance(&w.add(&z)) <= u.distance(&w) + v.distance(&z) + 1e-12);
        prop_assert_eq!(u.add(&v), v.add(&u));
    }

    #[test]
    fn finite_series_is_regular(terms in prop::collection::vec(fuzzy(), 1..6), m in 0usize..3) {
        let series = FuzzySeries::explicit("finite", terms).unwrap();
        let total = series.partial_sum(10).unwrap();
        let opts = LimitOptions { extrapolate: Extrapolate::Linear, ..LimitOptions::default() };
        let r = phi_limit(&series, &method(m), &opts).unwrap();
        let limit = r.limit.unwrap();
        prop_assert!(limit.distance(&total) < 1e-3, "D = {}", limit.distance(&total));
    }

    /// The transform is bounded by the kernel-weighted norms of the terms.
    #[test]
    fn transform_norm_bound(u0 in fuzzy(), q in -0.9..0.9f64, s in 0.05..2.0f64, m in 0usize..3) {
        let series = fuzzy_resum::series::geometric("geo", u0.clone(), q);
        let meth = method(m);
        let t = phi_transform(&series, &meth, s, &TransformOptions::default()).unwrap();
        let bound: f64 = meth.kernel(s).take(2000).enumerate()
            .map(|(n, p)| u0.norm() * q.abs().powi(n as i32) * p)
            .sum();
        prop_assert!(t.value.norm() <= bound + 1e-7);
    }

    /// Abel's kernel turns the transform into the power series at x = e^{-s}.
    #[test]
    fn abel_is_power_series(u0 in fuzzy(), q in -0.95..0.95f64, s in 0.01..3.0f64) {
        let series = fuzzy_resum::series::geometric("geo", u0.clone(), q);
        let t = phi_transform(&series, &PhiMethod::abel(), s, &TransformOptions::default()).unwrap();
        let x = (-s).exp();
        // Mixed signs do not distribute: even and odd powers sum separately.
        let y = q * x;
        let want = u0.scale(1.0 / (1.0 - y * y)).add(&u0.scale(y / (1.0 - y * y)));
        prop_assert!(t.value.distance(&want) < 1e-6, "D = {}", t.value.distance(&want));
    }

    #[test]
    fn abel_poisson_preserves_sign(c in 0.0..3.0f64, r in 0.0..0.95f64, x in -3.0..3.0f64) {
        let g = grid();
        let f = FuzzyPeriodicFunction::new("bump", g.clone(), move |t: f64| {
            let base = c * (1.0 + t.cos());
            FuzzyNumber::triangular_on(&g, base, base + 1.0, base + 2.0).unwrap()
        }).with_sample_count(256).unwrap();
        let p = abel_poisson(&f, r, x).unwrap();
        prop_assert!(p.lower().iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn summation_result_json_round_trip(terms in prop::collection::vec(fuzzy(), 1..4)) {
        let series = FuzzySeries::explicit("rt", terms).unwrap();
        let r = phi_limit(&series, &PhiMethod::abel(), &LimitOptions::default()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: SummationResult = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
