//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.
//!
//! Run alone with `cargo test -p onebit-mean --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use onebit_mean::adversary::{corrupt_post, CorruptionSpec, Pattern, Stage};
use onebit_mean::estimators::{bits_used_full, bits_used_partial, full_1d, quantize_full_sample, quantize_partial_first};
use onebit_mean::harness::{loglog_slope, run, run_with_threads, write_csv, ExperimentConfig, ResultRow, Scenario};
use onebit_mean::quantiles::{population_quantile, quantile_split, Marginal};
use onebit_mean::quantizer::quantize_full_1d;
use onebit_mean::robust_agg::{aggregate, AggregatorId};
use onebit_mean::samplers::{haar_orthogonal, low_trace_cov, GaussianSampler};
use onebit_mean::truncation::expected_dither_output;
use onebit_mean::{BitMatrix, EstimatorConfig, Levels, Samples, SeededRng};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn preset(scenario: Scenario) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(scenario).expect("preset");
    cfg.seed = SEED;
    cfg
}

fn series(rows: &[ResultRow], estimator: &str) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.estimator == estimator)
        .map(|r| (r.sweep, r.mean_error))
        .collect()
}

fn worst_ratio(num: &[(f64, f64)], den: &[(f64, f64)]) -> (f64, f64) {
    num.iter()
        .zip(den)
        .map(|(a, b)| {
            assert_eq!(a.0, b.0);
            (a.0, a.1 / b.1)
        })
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
}

fn a1_dithering_identity() -> Verdict {
    let big_n = 1_000_000usize;
    let mut worst = 0.0f64;
    for (k, &lambda) in [0.5, 1.0, 2.0].iter().enumerate() {
        for (m, &x) in [-3.0 * lambda, -lambda / 2.0, 0.0, lambda / 2.0, 3.0 * lambda].iter().enumerate() {
            let mut rng = SeededRng::new(SEED, (10 * k + m) as u64);
            let sum: i64 = (0..big_n).map(|_| quantize_full_1d(x, lambda, &mut rng) as i64).sum();
            let mc = lambda * sum as f64 / big_n as f64;
            let tol = 4.0 * lambda / (big_n as f64).sqrt();
            let phi = expected_dither_output(x, lambda).unwrap();
            worst = worst.max((mc - phi).abs() / tol);
        }
    }
    verdict(worst <= 1.0, format!("max |mc - phi| / (4 lambda / sqrt N) = {worst:.3} over 15 cells"))
}

fn a2_exact_flip_shift() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &n in &[10usize, 100, 1000] {
        for &eta in &[0.1, 0.2] {
            for &lambda in &[0.5, 1.0, 2.0, 3.7] {
                let bits = BitMatrix::filled(n, 1, 1).unwrap();
                let spec = CorruptionSpec::new(Stage::Post, eta, Pattern::FlipDirectional).unwrap();
                let out = corrupt_post(&bits, &spec, &mut SeededRng::new(SEED, n as u64)).unwrap();
                let k = (eta * n as f64 + 1e-9).floor();
                let shift = full_1d(&bits, lambda).unwrap() - full_1d(&out.data, lambda).unwrap();
                let expected = 2.0 * lambda * k / n as f64;
                let ulps = (shift - expected).abs() / (f64::EPSILON * lambda);
                worst = worst.max(ulps);
                cases += 1;
                if out.mask.len() != k as usize {
                    return verdict(false, format!("n={n} eta={eta}: flipped {} rows, want {k}", out.mask.len()));
                }
            }
        }
    }
    verdict(worst <= 4.0, format!("{cases} cases, max deviation {worst:.1} ulp(lambda)"))
}

fn a3_fig1() -> Verdict {
    let rows = run(&preset(Scenario::Fig1)).unwrap();
    let ours = series(&rows, "partial-1d");
    let (at, ratio) = worst_ratio(&ours, &series(&rows, "sample-mean"));
    let xs: Vec<f64> = ours.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = ours.iter().map(|p| p.1).collect();
    let slope = loglog_slope(&xs, &ys).unwrap();
    verdict(
        ratio <= 2.5 && (-0.7..=-0.3).contains(&slope),
        format!("max error ratio {ratio:.3} (n={at}) <= 2.5, log-log slope {slope:.3} in [-0.7, -0.3]"),
    )
}

fn a4_fig2_fig3() -> Verdict {
    let toe = run(&preset(Scenario::Fig2)).unwrap();
    let (at, ratio) = worst_ratio(&series(&toe, "partial-multi"), &series(&toe, "sample-mean"));
    let low = run(&preset(Scenario::Fig3)).unwrap();
    let ours = series(&low, "partial-multi");
    let (first, last) = (ours[0], ours[ours.len() - 1]);
    verdict(
        ratio <= 2.5 && first.0 == 200.0 && last.0 == 1000.0 && last.1 < first.1,
        format!(
            "Toeplitz max ratio {ratio:.3} (n={at}) <= 2.5; low-trace error {:.4} at n=1000 < {:.4} at n=200",
            last.1, first.1
        ),
    )
}

fn a5_fig4() -> Verdict {
    let rows = run(&preset(Scenario::Fig4)).unwrap();
    let ours = series(&rows, "partial-1d-robust");
    let (at, ratio) = worst_ratio(&ours, &series(&rows, "trimmed-mean"));
    let (lo, hi) = (ours[0], ours[ours.len() - 1]);
    verdict(
        ratio <= 3.0 && hi.1 > lo.1,
        format!(
            "max ratio to best-xi trimmed mean {ratio:.3} (eta={at}) <= 3; error {:.4} at eta={} > {:.4} at eta={}",
            hi.1, hi.0, lo.1, lo.0
        ),
    )
}

fn a6_fig5() -> Verdict {
    let rows = run(&preset(Scenario::Fig5)).unwrap();
    let s = series(&rows, "full-multi@eta=0.1");
    let (d10, d100) = (s[0], s[s.len() - 1]);
    assert_eq!((d10.0, d100.0), (10.0, 100.0));
    verdict(
        d100.1 >= 2.0 * d10.1,
        format!("eta=0.1: error {:.4} at d=100 vs {:.4} at d=10, ratio {:.3} >= 2", d100.1, d10.1, d100.1 / d10.1),
    )
}

fn a7_quantile_brackets() -> Verdict {
    let (n0, eps, trials) = (200usize, 0.1, 1000usize);
    let law = Marginal::Gaussian { mean: 0.0, sd: 1.0 };
    let q = |p: f64| population_quantile(&law, p).unwrap();
    let sampler = GaussianSampler::standard(1);
    let (mut bad_alpha, mut bad_beta) = (0usize, 0usize);
    for t in 0..trials {
        let y = sampler.sample(n0, &mut SeededRng::new(SEED, t as u64)).unwrap();
        let split = quantile_split(&y, eps).unwrap();
        let (a, b) = (split.alpha()[0], split.beta()[0]);
        if !(q(eps / 2.0) <= a && a <= q(1.5 * eps)) {
            bad_alpha += 1;
        }
        if !(q(1.0 - 1.5 * eps) <= b && b <= q(1.0 - eps / 2.0)) {
            bad_beta += 1;
        }
    }
    let (fa, fb) = (bad_alpha as f64 / trials as f64, bad_beta as f64 / trials as f64);
    verdict(
        fa <= 0.05 && fb <= 0.05,
        format!("violation frequency alpha {fa:.3}, beta {fb:.3} (<= 0.05 each)"),
    )
}

fn a8_haar_coordinates() -> Verdict {
    let (d, draws) = (100usize, 1000usize);
    let mut mu = vec![0.0; d];
    for (j, m) in mu.iter_mut().enumerate() {
        *m = ((j * 7919) % 101) as f64 - 50.0;
    }
    let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    mu.iter_mut().for_each(|v| *v /= norm);
    let mut rng = SeededRng::new(SEED, 8);
    let (mut within, mut ortho) = (0usize, 0.0f64);
    for _ in 0..draws {
        let o = haar_orthogonal(d, &mut rng);
        let err = (o.transpose() * &o - nalgebra::DMatrix::<f64>::identity(d, d)).amax();
        ortho = ortho.max(err);
        let max_coord = (0..d)
            .map(|i| (0..d).map(|j| o[(i, j)] * mu[j]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        if max_coord <= 0.3724 {
            within += 1;
        }
    }
    let frac = within as f64 / draws as f64;
    verdict(
        frac >= 0.95 && ortho <= 1e-10,
        format!("{frac:.3} of draws within 0.3724 (>= 0.95), max |O^T O - I| = {ortho:.2e} (<= 1e-10)"),
    )
}

fn a9_trace_values() -> Verdict {
    let mut rng = SeededRng::new(SEED, 9);
    let mut detail = Vec::new();
    let mut pass = true;
    for (d, want) in [(20usize, 1.5962), (100, 1.6350)] {
        let spec = low_trace_cov(d).unwrap();
        let realized = spec.matrix(&mut rng).trace();
        pass &= (spec.trace() - want).abs() <= 1e-4 && (realized - want).abs() <= 1e-4;
        detail.push(format!("d={d}: {:.6} (realized {:.6}) vs {want}", spec.trace(), realized));
    }
    verdict(pass, detail.join("; "))
}

fn dyadic_column(values: &[i32]) -> Samples {
    Samples::from_column(&values.iter().map(|&v| v as f64 / 8.0).collect::<Vec<_>>()).unwrap()
}

fn a10_properties() -> Verdict {
    let config = Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let mut failures = Vec::new();

    // partial estimators under a shift with matched streams: same bits, shifted estimate
    let shift = runner.run(
        &(prop::collection::vec(-400i32..400, 40..120), -1000i32..1000, any::<u64>()),
        |(v, c, seed)| {
            let x = dyadic_column(&v);
            let c = c as f64;
            let y = x.translated(&[c]).unwrap();
            let cfg = EstimatorConfig::partial(v.len() / 5, 0.2);
            let rng = SeededRng::new(seed, 0);
            let qx = quantize_partial_first(&x, &cfg, &rng).unwrap();
            let qy = quantize_partial_first(&y, &cfg, &rng).unwrap();
            prop_assert_eq!(&qx.bits, &qy.bits);
            prop_assert_eq!(qy.split.delta()[0], qx.split.delta()[0]);
            prop_assert_eq!(qy.split.mu1()[0], qx.split.mu1()[0] + c);
            let gap = qy.estimate()[0] - (qx.estimate()[0] + c);
            prop_assert!(gap.abs() <= 4.0 * f64::EPSILON * (1.0 + c.abs() + qx.estimate()[0].abs()));
            Ok(())
        },
    );
    if let Err(e) = shift {
        failures.push(format!("shift equivariance: {e}"));
    }

    // every aggregator commutes with translation
    let translate = runner.run(
        &(prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 8..40), prop::collection::vec(-50.0f64..50.0, 3)),
        |(rows, c)| {
            let x = Samples::from_rows(&rows).unwrap();
            let y = x.translated(&c).unwrap();
            for id in AggregatorId::ALL {
                let ax = aggregate(id, &x, 0.1).unwrap();
                let ay = aggregate(id, &y, 0.1).unwrap();
                let tol = if id == AggregatorId::GeometricMedian { 1e-6 } else { 1e-9 };
                for j in 0..3 {
                    prop_assert!((ay[j] - ax[j] - c[j]).abs() <= tol, "{id} coordinate {j}: {} vs {}", ay[j], ax[j] + c[j]);
                }
            }
            Ok(())
        },
    );
    if let Err(e) = translate {
        failures.push(format!("aggregator translation: {e}"));
    }

    // bits on the wire match the accounting formulas
    let budget = runner.run(&(20usize..200, 1usize..6, any::<u64>()), |(n, d, seed)| {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..d).map(|j| ((i * 31 + j * 7) % 17) as f64).collect()).collect();
        let x = Samples::from_rows(&rows).unwrap();
        let rng = SeededRng::new(seed, 1);
        let n0 = 2 + n / 10;
        let q = quantize_partial_first(&x, &EstimatorConfig::partial(n0, 0.1), &rng).unwrap();
        prop_assert_eq!(q.bits_used(), bits_used_partial(n, n0, d));
        prop_assert_eq!(32 * n0 * d + q.bits.as_slice().len(), bits_used_partial(n, n0, d));
        let bits = quantize_full_sample(&x, &Levels::uniform(1.0, d).unwrap(), &rng).unwrap();
        prop_assert_eq!(bits.as_slice().len(), bits_used_full(n, d));
        Ok(())
    });
    if let Err(e) = budget {
        failures.push(format!("bit budget: {e}"));
    }

    // fixed seed gives identical CSV bytes, also across thread counts
    let mut cfg = preset(Scenario::Fig1);
    cfg.trials = 1;
    let csv_of = |rows: &[ResultRow]| {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf).unwrap();
        buf
    };
    let first = csv_of(&run(&cfg).unwrap());
    let second = csv_of(&run(&cfg).unwrap());
    let threaded = csv_of(&run_with_threads(&cfg, Some(3)).unwrap());
    if first != second || first != threaded {
        failures.push("CSV bytes differ between identical runs".into());
    }

    if failures.is_empty() {
        verdict(true, "shift equivariance, aggregator translation, bit budget (64 cases each), CSV determinism".into())
    } else {
        verdict(false, failures.join("; "))
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, f64, fn() -> Verdict);
    let criteria: [Criterion; 10] = [
        ("A1", "dithering identity", 5.0, a1_dithering_identity),
        ("A2", "exact post-corruption shift", f64::INFINITY, a2_exact_flip_shift),
        ("A3", "univariate partial vs sample mean", 30.0, a3_fig1),
        ("A4", "multivariate partial, Toeplitz and low trace", 180.0, a4_fig2_fig3),
        ("A5", "robust univariate vs trimmed mean", 120.0, a5_fig4),
        ("A6", "full-setting error grows with d", 180.0, a6_fig5),
        ("A7", "held-out quantile brackets", f64::INFINITY, a7_quantile_brackets),
        ("A8", "Haar coordinate bound", f64::INFINITY, a8_haar_coordinates),
        ("A9", "low-trace covariance traces", f64::INFINITY, a9_trace_values),
        ("A10", "property suites", f64::INFINITY, a10_properties),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let clock = Instant::now();
        let v = check();
        let secs = clock.elapsed().as_secs_f64();
        let in_time = secs < budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if budget.is_finite() {
            format!("{secs:.1}s of {budget:.0}s")
        } else {
            format!("{secs:.1}s")
        };
        println!(
            "{id:<4} {} {name}: {} [{timing}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
