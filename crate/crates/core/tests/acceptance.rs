//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fuzzy_resum::fourier::{convergence_sweep, trig_moment_check, uniform_x_grid, FuzzyPeriodicFunction};
use fuzzy_resum::methods::{
    phi_limit, phi_transform, Accel, Extrapolate, LambdaSeq, LimitOptions, PhiMethod, TransformOptions,
};
use fuzzy_resum::series::{geometric, preset, FuzzySeries, PresetParams};
use fuzzy_resum::tauberian::{classify, TauberianClass};
use fuzzy_resum::{AlphaGrid, FuzzyNumber};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Fuzzy number with α-cut `[c + α w, c + (2 − α) w]`.
fn shifted_tent(grid: &AlphaGrid, c: f64, w: f64) -> FuzzyNumber {
    let lo = grid.as_slice().iter().map(|a| c + a * w).collect();
    let hi = grid.as_slice().iter().map(|a| c + (2.0 - a) * w).collect();
    FuzzyNumber::on_grid(grid.clone(), lo, hi).expect("valid tent")
}

fn ln_dirichlet() -> PhiMethod {
    PhiMethod::dirichlet(LambdaSeq::parse("ln(n+1)").unwrap()).unwrap()
}

fn n1_factorial() -> PhiMethod {
    PhiMethod::factorial(LambdaSeq::parse("n+1").unwrap()).unwrap()
}

fn linear_opts() -> LimitOptions {
    LimitOptions {
        extrapolate: Extrapolate::Linear,
        ..LimitOptions::default()
    }
}

fn random_triangle(rng: &mut ChaCha8Rng, grid: &AlphaGrid) -> FuzzyNumber {
    let b = rng.random_range(-3.0..3.0);
    let a = b - rng.random_range(0.0..2.0);
    let c = b + rng.random_range(0.0..2.0);
    FuzzyNumber::triangular_on(grid, a, b, c).unwrap()
}

fn criterion_1() -> Check {
    let grid = AlphaGrid::uniform(101).unwrap();
    let series = preset(
        "paper-dirichlet",
        &PresetParams {
            grid: grid.clone(),
            ..Default::default()
        },
    )
    .unwrap();
    let want = shifted_tent(&grid, 0.5, PI * PI / 6.0);
    let start = Instant::now();
    let opts = LimitOptions {
        inner: TransformOptions {
            accel: Accel::Euler,
            ..TransformOptions::default()
        },
        ..linear_opts()
    };
    let r = phi_limit(&series, &ln_dirichlet(), &opts).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let lim = r.limit.ok_or("no limit")?;
    let d = lim.distance(&want);
    ensure(d < 1e-3, format!("D = {d:.3e} >= 1e-3"))?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("D = {d:.3e}, status {:?}, {:.2?}", r.status, elapsed))
}

fn criterion_2() -> Check {
    let grid = AlphaGrid::default();
    let series = preset("paper-factorial", &PresetParams::default()).unwrap();
    let want = shifted_tent(&grid, 0.25, PI.powi(4) / 90.0);
    let r = phi_limit(&series, &n1_factorial(), &LimitOptions::default()).map_err(|e| e.to_string())?;
    let lim = r.limit.as_ref().ok_or("no limit")?;
    let d = lim.distance(&want);
    ensure(d < 5e-2, format!("D = {d:.3e} >= 5e-2"))?;
    let dists: Vec<f64> = r
        .trace
        .iter()
        .filter_map(|e| e.value.as_ref().map(|v| v.distance(&want)))
        .collect();
    ensure(dists.len() >= 4, "fewer than four successful steps")?;
    // Eventually decreasing: strictly decreasing over the second half of the trace.
    let tail = &dists[dists.len() / 2..];
    ensure(
        tail.windows(2).all(|w| w[1] < w[0]),
        format!("trace distances not decreasing: {tail:?}"),
    )?;
    let floor = r.trace.last().map(|e| e.s).unwrap_or(f64::NAN);
    Ok(format!("D = {d:.3e}, status {:?}, s floor {floor:e}", r.status))
}

fn criterion_3() -> Check {
    let grid = AlphaGrid::default();
    let methods = [
        ("abel", PhiMethod::abel()),
        ("dirichlet ln(n+1)", ln_dirichlet()),
        ("factorial n+1", n1_factorial()),
    ];
    let opts = LimitOptions {
        outer_tol: 1e-6,
        ..linear_opts()
    };
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let u0 = random_triangle(&mut rng, &grid);
        let mut q = rng.random_range(0.2..0.8);
        if seed % 2 == 1 {
            q = -q;
        }
        let series = geometric(format!("geo-{seed}"), u0, q);
        let direct = series
            .detect_limit(1e-12, 10, 100_000)
            .map_err(|e| e.to_string())?
            .ok_or(format!("seed {seed}: no direct limit"))?;
        for (name, m) in &methods {
            let r = phi_limit(&series, m, &opts).map_err(|e| e.to_string())?;
            let d = r
                .limit
                .ok_or(format!("seed {seed} {name}: no limit"))?
                .distance(&direct);
            worst = worst.max(d);
            ensure(d < 1e-4, format!("seed {seed} {name}: D = {d:.3e}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!("150 runs, worst D = {worst:.3e}, {elapsed:.2?}"))
}

fn criterion_4() -> Check {
    let grid = AlphaGrid::default();
    let mut worst: f64 = 0.0;
    for k in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + k);
        let v = random_triangle(&mut rng, &grid);
        let p: f64 = rng.random_range(1.8..3.0);
        let series = FuzzySeries::new(format!("alt-{k}"), grid.clone(), move |n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            Ok(v.scale(sign * ((n + 1) as f64).powf(-p)))
        });
        let method = if k % 2 == 0 { PhiMethod::abel() } else { ln_dirichlet() };
        let report = classify(&series, &method, 10_000).map_err(|e| e.to_string())?;
        ensure(
            report.class == TauberianClass::Vanishing,
            format!("series {k}: tau class {:?}", report.class),
        )?;
        let opts = LimitOptions {
            outer_tol: 1e-6,
            ..linear_opts()
        };
        let summed = phi_limit(&series, &method, &opts)
            .map_err(|e| e.to_string())?
            .limit
            .ok_or(format!("series {k}: no limit"))?;
        let partial = series.partial_sum(100_000).map_err(|e| e.to_string())?;
        let d = summed.distance(&partial);
        worst = worst.max(d);
        ensure(d < 1e-3, format!("series {k}: D(phi_limit, s_N) = {d:.3e}"))?;
    }

    // O(1) case: τ_n = n D(u_n, 0̄) stays bounded but does not vanish.
    let mut rng = ChaCha8Rng::seed_from_u64(4100);
    let v = random_triangle(&mut rng, &grid);
    let g = grid.clone();
    let bounded = FuzzySeries::new("bounded-tau", grid.clone(), move |n| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        Ok(FuzzyNumber::crisp_on(&g, sign / (n + 1) as f64).add(&v.scale(0.5f64.powi(n as i32))))
    });
    let report = classify(&bounded, &PhiMethod::abel(), 10_000).map_err(|e| e.to_string())?;
    ensure(
        report.class == TauberianClass::Bounded,
        format!("O(1) series: tau class {:?}", report.class),
    )?;
    let scan = bounded.boundedness_scan(100_000).map_err(|e| e.to_string())?;
    ensure(
        !scan.monotone_growth,
        format!("O(1) series grows: slope {}", scan.slope),
    )?;
    Ok(format!(
        "10 series, worst D = {worst:.3e}; O(1) series bound {:.4} slope {:.2e}",
        scan.bounded_estimate, scan.slope
    ))
}

fn criterion_5() -> Check {
    let mut checked = 0usize;
    for case in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + case);
        let l0: f64 = rng.random_range(0.5..5.0);
        let b: f64 = rng.random_range(1.0..5.0);
        let c: f64 = rng.random_range(0.5..1.0);
        let s = l0 * (1.0 - rng.random_range(0.0..1.0)); // (0, λ_0]
        let lam = move |n: usize| l0 + b * (n as f64).powf(c);
        let method =
            PhiMethod::factorial(LambdaSeq::from_fn(format!("{l0}+{b}n^{c}"), lam)).map_err(|e| e.to_string())?;
        let mut gamma = 0.0;
        for (n, phi) in method.kernel(s).take(1001).enumerate() {
            gamma += 1.0 / lam(n);
            ensure(phi > 0.0, format!("case {case}: phi_{n} = {phi} not positive"))?;
            ensure(
                phi < (-(s / 2.0) * gamma).exp(),
                format!("case {case}: phi_{n}({s}) = {phi:e} >= exp(-s gamma/2)"),
            )?;
            ensure(
                1.0 - phi < s * gamma,
                format!("case {case}: 1 - phi_{n}({s}) >= s gamma_{n}"),
            )?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (lambda, s, n) triples, 0 violations"))
}

/// Random fuzzy number with general monotone endpoints on `grid`.
fn random_fuzzy(rng: &mut ChaCha8Rng, grid: &AlphaGrid) -> FuzzyNumber {
    let m = grid.len();
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    let mut l: f64 = rng.random_range(-5.0..5.0);
    let mut h = l + rng.random_range(0.0..6.0);
    for _ in 0..m {
        lo.push(l);
        hi.push(h);
        let room = (h - l).max(0.0);
        let dl = rng.random_range(0.0..=1.0) * room / m as f64;
        let dh = rng.random_range(0.0..=1.0) * room / m as f64;
        l += dl;
        h -= dh;
    }
    FuzzyNumber::on_grid(grid.clone(), lo, hi).expect("monotone construction")
}

fn is_valid(u: &FuzzyNumber) -> bool {
    FuzzyNumber::from_levels(u.alphas().to_vec(), u.lower().to_vec(), u.upper().to_vec()).is_ok()
}

fn criterion_6() -> Check {
    let grid = AlphaGrid::default();
    let start = Instant::now();
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + case);
        let (u, v, w) = (
            random_fuzzy(&mut rng, &grid),
            random_fuzzy(&mut rng, &grid),
            random_fuzzy(&mut rng, &grid),
        );
        let z = random_fuzzy(&mut rng, &grid);
        let k: f64 = rng.random_range(-4.0..4.0);
        let fail = |what: &str| format!("case {case}: {what}");
        let eps = 1e-12;

        ensure(u.distance(&v) == v.distance(&u), fail("symmetry"))?;
        ensure(u.distance(&u) == 0.0, fail("D(u,u) = 0"))?;
        ensure(u.distance(&v) > 0.0 || u == v, fail("D = 0 only for equal numbers"))?;
        ensure(
            u.distance(&w) <= u.distance(&v) + v.distance(&w) + eps,
            fail("triangle inequality"),
        )?;
        let hom = u.scale(k).distance(&v.scale(k));
        ensure(
            (hom - k.abs() * u.distance(&v)).abs() <= eps * (1.0 + hom),
            fail("homogeneity"),
        )?;
        ensure(
            u.add(&v).distance(&w.add(&z)) <= u.distance(&w) + v.distance(&z) + eps,
            fail("translation bound"),
        )?;
        ensure(
            is_valid(&u.add(&v)) && is_valid(&u.scale(k)),
            fail("closure under add/scale"),
        )?;

        let k1: f64 = rng.random_range(0.0..3.0);
        let k2: f64 = rng.random_range(0.0..3.0);
        for (a, b) in [(k1, k2), (-k1, -k2)] {
            let lhs = u.scale(a + b);
            let rhs = u.scale(a).add(&u.scale(b));
            ensure(
                lhs.approx_eq(&rhs, eps * (1.0 + lhs.norm())),
                fail("distribution for k1 k2 >= 0"),
            )?;
        }
        // (1 + (−1))u = 0̄ but u + (−u) has the width of u on every cut.
        let lhs = u.scale(0.0);
        let rhs = u.add(&u.scale(-1.0));
        let width = u.upper()[0] - u.lower()[0];
        if width > 0.0 {
            ensure(lhs.distance(&rhs) > 0.0, fail("negative distribution must fail"))?;
        }

        // Partial order on constructed chains u ⪯ u + p ⪯ u + p + q.
        let p = random_fuzzy(&mut rng, &grid).add(&FuzzyNumber::crisp_on(&grid, 10.0));
        let q = random_fuzzy(&mut rng, &grid).add(&FuzzyNumber::crisp_on(&grid, 10.0));
        let (a, b) = (u.add(&p), u.add(&p).add(&q));
        ensure(u.leq(&u), fail("reflexive"))?;
        ensure(u.leq(&a) && a.leq(&b) && u.leq(&b), fail("transitive"))?;
        let same = u.add(&FuzzyNumber::zero_on(&grid));
        ensure(
            u.leq(&same) && same.leq(&u) && u.approx_eq(&same, 0.0),
            fail("antisymmetric"),
        )?;
        ensure(
            !(u.leq(&v) && v.leq(&u)) || u.approx_eq(&v, 0.0),
            fail("antisymmetric (random pair)"),
        )?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("1000 cases, {elapsed:.2?}"))
}

fn criterion_7() -> Check {
    let xs = uniform_x_grid(256);
    let mut worst: f64 = 0.0;
    for r in [0.5, 0.9, 0.99] {
        let m = trig_moment_check(r, &xs, 1024).map_err(|e| e.to_string())?;
        ensure(m.max_deviation() < 1e-10, format!("r = {r}: {m:?}"))?;
        worst = worst.max(m.max_deviation());
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn criterion_8() -> Check {
    let grid = AlphaGrid::default();
    let xs = uniform_x_grid(256);
    let radii = [0.9, 0.99, 0.999];
    let smooth = FuzzyPeriodicFunction::preset("smooth", &grid)
        .and_then(|f| f.with_sample_count(16_384))
        .map_err(|e| e.to_string())?;
    let sweep = convergence_sweep(&smooth, &radii, &xs).map_err(|e| e.to_string())?;
    let d: Vec<f64> = sweep.iter().map(|p| p.sup_distance).collect();
    ensure(
        d.windows(2).all(|w| w[1] < w[0]),
        format!("not strictly decreasing: {d:?}"),
    )?;
    ensure(d[2] < 0.05, format!("D* at r = 0.999 is {}", d[2]))?;

    let cos = FuzzyPeriodicFunction::preset("cos", &grid)
        .and_then(|f| f.with_sample_count(16_384))
        .map_err(|e| e.to_string())?;
    let sweep = convergence_sweep(&cos, &radii, &xs).map_err(|e| e.to_string())?;
    for p in &sweep {
        ensure(
            (p.sup_distance - (1.0 - p.r)).abs() < 1e-10,
            format!("cos: r = {} D* = {}", p.r, p.sup_distance),
        )?;
    }
    Ok(format!("smooth D* = {:.3e} {:.3e} {:.3e}", d[0], d[1], d[2]))
}

/// Scalar reference: sums `c_n φ_n(s)` from the smallest term upward, with
/// the kernel evaluated from its closed form.
fn scalar_reference(c: &dyn Fn(usize) -> f64, phi: &dyn Fn(usize) -> f64) -> f64 {
    let mut terms = Vec::new();
    let mut n = 0;
    loop {
        let t = c(n) * phi(n);
        terms.push(t);
        if n > 50 && t.abs() < 1e-22 && c(n).abs() * phi(n) < 1e-22 {
            break;
        }
        n += 1;
    }
    terms.iter().rev().sum()
}

fn criterion_9() -> Check {
    let grid = AlphaGrid::uniform(11).unwrap();
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + case);
        let a: f64 = rng.random_range(-2.0..2.0);
        let q: f64 = rng.random_range(-0.7..0.7);
        let k = rng.random_range(0..3);
        let s: f64 = rng.random_range(0.1..2.0);
        let coeff = move |n: usize| a * q.powi(n as i32) * ((n + 1) as f64).powi(k);
        let g = grid.clone();
        let series = FuzzySeries::new(format!("crisp-{case}"), grid.clone(), move |n| {
            Ok(FuzzyNumber::crisp_on(&g, coeff(n)))
        });
        let (method, phi): (PhiMethod, Box<dyn Fn(usize) -> f64>) = match case % 4 {
            0 => (PhiMethod::abel(), Box::new(move |n| (-(n as f64) * s).exp())),
            1 => (ln_dirichlet(), Box::new(move |n| ((n + 1) as f64).powf(-s))),
            2 => (
                n1_factorial(),
                Box::new(move |n| (0..=n).map(|j| (j + 1) as f64 / (s + (j + 1) as f64)).product()),
            ),
            _ => (
                PhiMethod::dirichlet(LambdaSeq::parse("lindelof").unwrap()).unwrap(),
                Box::new(move |n| {
                    let m = (n + 1) as f64;
                    (-s * m * m.ln()).exp()
                }),
            ),
        };
        let opts = TransformOptions {
            inner_tol: 1e-15,
            ..TransformOptions::default()
        };
        let t = phi_transform(&series, &method, s, &opts).map_err(|e| e.to_string())?;
        let want = scalar_reference(&coeff, phi.as_ref());
        let d = t.value.distance(&FuzzyNumber::crisp_on(&grid, want));
        worst = worst.max(d);
        ensure(d < 1e-12, format!("case {case} ({}): |diff| = {d:e}", method.label()))?;
    }
    Ok(format!("20 cases, worst {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 paper-dirichlet preset under ln(n+1)", criterion_1),
        ("2 paper-factorial preset under n+1", criterion_2),
        ("3 regularity on random geometric series", criterion_3),
        ("4 Tauberian round trip", criterion_4),
        ("5 factorial kernel inequalities", criterion_5),
        ("6 metric and arithmetic suite", criterion_6),
        ("7 Abel-Poisson trigonometric moments", criterion_7),
        ("8 Abel-Poisson boundary limit", criterion_8),
        ("9 crisp series against scalar reference", criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
