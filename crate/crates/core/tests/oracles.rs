//! Frozen reference values, computed independently at high precision.

#![allow(clippy::excessive_precision)]

use fuzzy_resum::methods::{phi_transform, LambdaSeq, PhiMethod, TransformOptions};
use fuzzy_resum::series::{preset, FuzzySeries, PresetParams};
use fuzzy_resum::{AlphaGrid, FuzzyNumber};

const ZETA_3: f64 = 1.20205690315959428539973816151;
const ZETA_2_5: f64 = 1.34148725725091717975676969335;
const ZETA_2_01: f64 = 1.63565705819409140878157897112;
const ETA_0_5: f64 = 0.604898643421630370247265914236;
const ETA_0_01: f64 = 0.502254858177629048896577682937;
const PI2_6: f64 = 1.64493406684822643647241516665;
const PI4_90: f64 = 1.08232323371113819151600369654;

// (s, Σ (-1)^n (n+1) φ_n(s), Σ (n+1)^-4 φ_n(s)) for φ_n(s) = Π_{j≤n} (j+1)/(s+j+1).
const FACTORIAL_CASES: [(f64, f64, f64); 4] = [
    (1.0, 0.193147180559945309417232121458, 0.525200397399770342588680701676),
    (0.5, 0.217418930105172885045515060188, 0.708426483161774952802379044098),
    (0.1, 0.242595160999813722577983623073, 0.979540845848653345012639648102),
    (0.01, 0.249235629410028460015349846791, 1.0711036604206919800407056276),
];

fn ln_dirichlet() -> PhiMethod {
    PhiMethod::dirichlet(LambdaSeq::parse("ln(n+1)").unwrap()).unwrap()
}

fn crisp_series(name: &str, f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> FuzzySeries {
    let grid = AlphaGrid::uniform(3).unwrap();
    let g = grid.clone();
    FuzzySeries::new(name, grid, move |n| Ok(FuzzyNumber::crisp_on(&g, f(n))))
}

fn crisp_value(u: &FuzzyNumber) -> f64 {
    assert!(u
        .lower()
        .iter()
        .chain(u.upper())
        .all(|v| (v - u.lower()[0]).abs() < 1e-15));
    u.lower()[0]
}

fn opts(tol: f64) -> TransformOptions {
    TransformOptions {
        inner_tol: tol,
        ..TransformOptions::default()
    }
}

#[test]
fn zeta_through_alternating_transform() {
    // η(s) = (1 - 2^(1-s)) ζ(s); the alternating series is accelerated.
    let alt = crisp_series("alternating", |n| if n % 2 == 0 { 1.0 } else { -1.0 });
    for (s, zeta) in [(3.0, ZETA_3), (2.5, ZETA_2_5), (2.01, ZETA_2_01)] {
        let got = crisp_value(&phi_transform(&alt, &ln_dirichlet(), s, &opts(1e-13)).unwrap().value);
        let want = (1.0 - 2f64.powf(1.0 - s)) * zeta;
        assert!((got - want).abs() < 1e-11, "eta({s}) = {got}, want {want}");
    }
}

#[test]
fn zeta_3_direct() {
    let ones = crisp_series("ones", |_| 1.0);
    let t = phi_transform(&ones, &ln_dirichlet(), 3.0, &opts(1e-10)).unwrap();
    let got = crisp_value(&t.value);
    assert!((got - ZETA_3).abs() < 1e-8, "zeta(3) = {got}");
}

#[test]
fn eta_through_dirichlet_transform() {
    let alt = preset(
        "crisp-alternating",
        &PresetParams {
            grid: AlphaGrid::uniform(3).unwrap(),
            ..Default::default()
        },
    )
    .unwrap();
    for (s, want) in [(0.5, ETA_0_5), (0.01, ETA_0_01)] {
        let t = phi_transform(&alt, &ln_dirichlet(), s, &opts(1e-12)).unwrap();
        let got = crisp_value(&t.value);
        assert!((got - want).abs() < 1e-9, "eta({s}) = {got}, want {want}");
        assert!(t.accelerated);
    }
}

#[test]
fn factorial_example_transform() {
    let series = preset("paper-factorial", &PresetParams::default()).unwrap();
    let method = PhiMethod::factorial(LambdaSeq::parse("n+1").unwrap()).unwrap();
    for (s, alt, spread) in FACTORIAL_CASES {
        let t = phi_transform(&series, &method, s, &opts(1e-10)).unwrap();
        let v = &t.value;
        for ((&a, &lo), &hi) in v.alphas().iter().zip(v.lower()).zip(v.upper()) {
            let want_lo = alt + a * spread;
            let want_hi = alt + (2.0 - a) * spread;
            assert!((lo - want_lo).abs() < 1e-7, "s={s} a={a}: lo {lo} want {want_lo}");
            assert!((hi - want_hi).abs() < 1e-7, "s={s} a={a}: hi {hi} want {want_hi}");
        }
    }
}

#[test]
fn example_limits_in_closed_form() {
    assert!((std::f64::consts::PI.powi(2) / 6.0 - PI2_6).abs() < 1e-15);
    assert!((std::f64::consts::PI.powi(4) / 90.0 - PI4_90).abs() < 1e-15);
    // Spread of the Dirichlet example at s → 0 is Σ (n+1)^-2.
    let spread = crisp_series("inverse-squares", |n| ((n + 1) as f64).powi(-2));
    let s = phi_transform(&spread, &ln_dirichlet(), 1e-9, &opts(1e-10)).unwrap();
    assert!((crisp_value(&s.value) - PI2_6).abs() < 1e-6);
}
