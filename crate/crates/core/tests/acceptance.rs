//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with its
//! measured runtime, then asserts. Tests hold a shared lock so timings are
//! not distorted by each other.

use std::io::Write;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use brisk::asymptotics::{
    asymptotic_psi_with_ia, estimate_ia, estimate_ia_horizons, exact_ruin_1d, tail_term,
    uniform_tail_expansion, AsymptoticConfig, IaConfig,
};
use brisk::gaussian::{univariate_phibar, CovarianceModel};
use brisk::qp::{solve_equicorrelated, solve_qp, solve_qp_bruteforce, EquicorrSpec};
use brisk::simulator::{simulate_ruin, simulate_ruin_tilted, simulate_split, RuinScenario};
use brisk::trend::TrendDistribution;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line (outside the test harness capture) and asserts.
fn report(id: &str, name: &str, ok: bool, detail: String, elapsed: Duration, limit: Duration) {
    let in_time = elapsed <= limit;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    let line = format!(
        "[{id}] {verdict} {name}: {detail} ({:.3} s, limit {:.3} s)\n",
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "{id} {name}: {detail}");
    assert!(in_time, "{id} {name}: runtime {elapsed:?} over {limit:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn corr2(rho: f64) -> CovarianceModel {
    CovarianceModel::from_covariance(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap()
}

#[test]
fn c01_qp_closed_forms() {
    let _g = serial();
    let start = Instant::now();
    let m = corr2(0.5);
    let full = solve_qp(&m, &[1.0, 0.8]).unwrap();
    let partial = solve_qp(&m, &[1.0, 0.3]).unwrap();
    let eq = solve_equicorrelated(&EquicorrSpec::new(2, 0.5, vec![1.0, 0.8]).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-10);
    let ok = full.active_set == vec![0, 1]
        && close(&full.lambda, &[0.8, 0.4])
        && close(&full.a_tilde, &[1.0, 0.8])
        && partial.active_set == vec![0]
        && close(&partial.a_tilde, &[1.0, 0.5])
        && close(&partial.lambda, &[1.0, 0.0])
        && eq.active_set == full.active_set
        && close(&eq.lambda, &full.lambda);
    let detail = format!(
        "lambda(1,0.8)={:?}, a_tilde(1,0.3)={:?}, lambda(1,0.3)={:?}",
        full.lambda, partial.a_tilde, partial.lambda
    );
    report("C1", "QP closed forms", ok, detail, elapsed, Duration::from_millis(1));
}

#[test]
fn c02_qp_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut worst_gap = 0.0f64;
    let mut kkt_ok = true;
    for _ in 0..200 {
        let d = rng.random_range(1..=3usize);
        let raw: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a_mix = DMatrix::from_row_slice(d, d, &raw);
        let sigma = &a_mix * a_mix.transpose() + DMatrix::identity(d, d) * 0.1;
        let model = CovarianceModel::from_covariance(sigma).unwrap();
        let a: Vec<f64> = loop {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.5)).collect();
            if v.iter().any(|&x| x > 0.0) {
                break v;
            }
        };
        let qp = solve_qp(&model, &a).unwrap();
        let brute = solve_qp_bruteforce(&model, &a, 100).unwrap();
        let gap = qp.a_tilde.iter().zip(&brute).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        kkt_ok &= qp.active_set.iter().all(|&i| qp.lambda[i] > 0.0)
            && qp.complement.iter().all(|&j| qp.lambda[j] == 0.0 && qp.a_tilde[j] >= a[j] - 1e-12);
    }
    let ok = worst_gap <= 1e-3 && kkt_ok;
    report(
        "C2",
        "QP oracle equivalence",
        ok,
        format!("200 instances, max |a_tilde - brute| = {worst_gap:.2e}, KKT {kkt_ok}"),
        start.elapsed(),
        secs(60),
    );
}

#[test]
fn c03_exact_one_dim_vs_simulation() {
    let _g = serial();
    let start = Instant::now();
    let exact = exact_ruin_1d(1.0, 1.0, 1.0, 1.0).unwrap();
    let s = RuinScenario::new(CovarianceModel::identity(1), vec![1.0], 1.0)
        .with_trend(TrendDistribution::PointMass { c: vec![1.0] })
        .with_budget(1 << 14, 1_000_000)
        .with_seed(3);
    let e = simulate_ruin(&s).unwrap();
    let ok = (exact - 0.090418).abs() < 1e-6
        && e.point <= exact + 3.0 * e.stderr
        && e.point >= exact - 3.0 * e.stderr - 0.004;
    report(
        "C3",
        "exact 1-D oracle vs simulation",
        ok,
        format!("exact {exact:.6}, simulated {:.6} ± {:.6}", e.point, e.stderr),
        start.elapsed(),
        secs(120),
    );
}

#[test]
fn c04_ia_single_index() {
    let _g = serial();
    let start = Instant::now();
    let model = CovarianceModel::identity(1);
    let qp = solve_qp(&model, &[1.0]).unwrap();
    let config = IaConfig { horizon: 20.0, steps_per_unit: 4096, n_paths: 100_000 };
    let e = estimate_ia(&qp, &model, &config, 4).unwrap();
    let ok = qp.lambda[0] == 1.0 && (1.93..=2.02).contains(&e.point);
    report(
        "C4",
        "I_a single index",
        ok,
        format!("I_a(20) = {:.4} ± {:.4}, target [1.93, 2.02]", e.point, e.stderr),
        start.elapsed(),
        secs(300),
    );
}

#[test]
fn c05_ia_monotone_in_horizon() {
    let _g = serial();
    let start = Instant::now();
    let model = CovarianceModel::identity(2);
    let qp = solve_qp(&model, &[1.0, 1.0]).unwrap();
    let est = estimate_ia_horizons(&qp, &model, &[5.0, 10.0, 20.0], 2048, 20_000, 5).unwrap();
    let ok = est.windows(2).all(|w| w[1].point >= w[0].point - 2.0 * w[0].stderr.hypot(w[1].stderr));
    let vals: Vec<String> = est.iter().map(|e| format!("{:.4}±{:.4}", e.point, e.stderr)).collect();
    report(
        "C5",
        "I_a monotone in horizon",
        ok,
        format!("I_a(5,10,20) = {}", vals.join(", ")),
        start.elapsed(),
        secs(600),
    );
}

#[test]
fn c06_ratio_trend() {
    let _g = serial();
    let start = Instant::now();
    let model = corr2(0.5);
    let a = vec![1.0, 0.8];
    let qp = solve_qp(&model, &a).unwrap();
    let config = AsymptoticConfig {
        ia: IaConfig { horizon: 20.0, steps_per_unit: 4096, n_paths: 20_000 },
        tail_budget: 1_000_000,
        ..AsymptoticConfig::default()
    };
    let ia = estimate_ia(&qp, &model, &config.ia, 6).unwrap();
    let mut ratios = Vec::new();
    let mut lines = Vec::new();
    for u in [2.0, 3.0, 4.0, 5.0] {
        let s = RuinScenario::new(model.clone(), a.clone(), u).with_budget(1 << 14, 100_000).with_seed(6);
        let sim = simulate_ruin_tilted(&s).unwrap();
        let asym = asymptotic_psi_with_ia(&s, &config, ia.clone(), 20.0, 6).unwrap();
        let r = sim.point / asym.psi_approx.point;
        let se = r * sim.relative_stderr().hypot(asym.psi_approx.relative_stderr());
        lines.push(format!("u={u}: {r:.4}±{se:.4}"));
        ratios.push(r);
    }
    let (first, last) = (ratios[0], ratios[3]);
    let ok = (last - 1.0).abs() < (first - 1.0).abs() && (0.75..=1.25).contains(&last);
    report(
        "C6",
        "ratio trend",
        ok,
        format!("I_a = {:.4}±{:.4}; ratios {}", ia.point, ia.stderr, lines.join(", ")),
        start.elapsed(),
        secs(1200),
    );
}

#[test]
fn c07_bernoulli_factor() {
    let _g = serial();
    let start = Instant::now();
    let model = CovarianceModel::identity(2);
    let b = [5.0, 5.0];
    let bern = TrendDistribution::Bernoulli { p: vec![0.5, 0.5] };
    let with_trend = tail_term(&model, &b, &bern, 1_000_000, 256, 7).unwrap();
    let zero = tail_term(&model, &b, &TrendDistribution::zero(2), 1_000_000, 256, 7).unwrap();
    let ratio = with_trend.point / zero.point;
    let ok = (ratio / 0.25 - 1.0).abs() <= 0.05;
    report(
        "C7",
        "Bernoulli factor",
        ok,
        format!("E-tail / zero-trend tail = {ratio:.5}, target 0.25 ± 5%"),
        start.elapsed(),
        secs(120),
    );
}

#[test]
fn c08_uniform_trend_factor() {
    let _g = serial();
    let start = Instant::now();
    let model = CovarianceModel::identity(2);
    let box_law = TrendDistribution::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
    let mut ratios = Vec::new();
    for u in [5.0f64, 8.0] {
        let t = tail_term(&model, &[u, u], &box_law, 1_000_000, 256, 8).unwrap();
        let reference = u.powi(-2) * univariate_phibar(u).powi(2);
        ratios.push(t.point / reference);
    }
    let ok = (ratios[1] - 1.0).abs() < (ratios[0] - 1.0).abs() && (0.8..=1.2).contains(&ratios[1]);
    report(
        "C8",
        "uniform-trend factor",
        ok,
        format!("ratio u=5: {:.4}, u=8: {:.4}", ratios[0], ratios[1]),
        start.elapsed(),
        secs(300),
    );
}

#[test]
fn c09_uniform_tail_expansion() {
    let _g = serial();
    let start = Instant::now();
    let model = CovarianceModel::identity(2);
    let qp = solve_qp(&model, &[1.0, 1.0]).unwrap();
    let ratios: Vec<f64> = (2..=6)
        .map(|u| {
            let u = u as f64;
            uniform_tail_expansion(&model, &qp, u, &[0.0, 0.0]).unwrap() / univariate_phibar(u).powi(2)
        })
        .collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let at_six = (ratios[4] - 1.0).abs() <= 0.08;
    // Band over a 5×5 grid of shifts c ∈ [-1, 1]² at u = 8.
    let u = 8.0;
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut band: Vec<f64> = Vec::new();
    for &c1 in &grid {
        for &c2 in &grid {
            let exp = uniform_tail_expansion(&model, &qp, u, &[c1, c2]).unwrap();
            band.push(exp / (univariate_phibar(u + c1) * univariate_phibar(u + c2)));
        }
    }
    let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    let ok = decreasing && at_six && width < 0.10;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    report(
        "C9",
        "uniform tail expansion",
        ok,
        format!(
            "ratios u=2..6: [{}] (decreasing {decreasing}, within 8% at 6: {at_six}); c-band at u=8: [{lo:.4}, {hi:.4}], width {width:.4} (target < 0.10)",
            shown.join(", ")
        ),
        start.elapsed(),
        secs(300),
    );
}

#[test]
fn c10_split_sandwich() {
    let _g = serial();
    let start = Instant::now();
    let identity = CovarianceModel::identity(2);
    let suite = vec![
        RuinScenario::new(CovarianceModel::identity(1), vec![1.0], 2.0)
            .with_trend(TrendDistribution::PointMass { c: vec![0.5] }),
        RuinScenario::new(corr2(0.5), vec![1.0, 0.8], 2.0),
        RuinScenario::new(identity.clone(), vec![1.0, 1.0], 2.0)
            .with_trend(TrendDistribution::Bernoulli { p: vec![0.5, 0.5] }),
        RuinScenario::new(identity, vec![1.0, 1.0], 2.0)
            .with_trend(TrendDistribution::UniformBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }),
        RuinScenario::new(corr2(-0.3), vec![1.0, 0.5], 2.0).with_horizon(2.0),
    ];
    let mut sandwich = true;
    let mut monotone = true;
    for (i, base) in suite.into_iter().enumerate() {
        let s = base.with_budget(1024, 50_000).with_seed(10 + i as u64);
        let mut prev: Option<brisk::EstimateWithCI> = None;
        for lambda in [0.5, 1.0, 2.0, 3.0] {
            let e = simulate_split(&s, lambda).unwrap();
            sandwich &= e.m.point <= e.psi.point && e.psi.point <= e.m.point + e.big_m.point;
            if let Some(p) = &prev {
                monotone &= e.m.point <= p.point + 2.0 * e.m.stderr.hypot(p.stderr);
            }
            prev = Some(e.m);
        }
    }
    report(
        "C10",
        "m/M sandwich",
        sandwich && monotone,
        format!("5 scenarios × 4 horizons: sandwich {sandwich}, m non-increasing in Λ {monotone}"),
        start.elapsed(),
        secs(300),
    );
}

#[test]
fn c11_cli_determinism() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(
        &path,
        r#"{
  "schema_version": 1,
  "model": {"equicorr": {"dim": 2, "rho": 0.5}},
  "barrier": [1.0, 0.8],
  "trend": {"type": "bernoulli", "p": [0.3, 0.6]},
  "horizon": 1.0,
  "levels": [1.0, 2.0, 3.0],
  "budgets": {"n_steps": 512, "n_paths": 20000, "tail_budget": 100000, "ia_paths": 2000, "ia_lambda": 10.0},
  "master_seed": 11
}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let run = |args: &[&str], threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_brisk"))
            .args(args)
            .env("BRISK_CACHE_DIR", dir.path().join("cache"))
            .env("BRISK_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let mut identical = true;
    let mut checked = 0;
    for cmd in ["qp", "simulate", "asym", "validate", "tail"] {
        for extra in [&[][..], &["--json"][..]] {
            let mut args = vec![cmd, p];
            args.extend_from_slice(extra);
            identical &= run(&args, "0") == run(&args, "0");
            checked += 1;
        }
    }
    let threads_agree = run(&["simulate", p], "1") == run(&["simulate", p], "4");
    report(
        "C11",
        "CLI determinism",
        identical && threads_agree,
        format!("{checked} command variants byte-identical: {identical}; BRISK_THREADS 1 vs 4 identical: {threads_agree}"),
        start.elapsed(),
        secs(120),
    );
}
