//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Monte Carlo criteria use fixed seeds, so every run is identical.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xicor_core::estimators::{sigma_bar_hat_sq, sigma_hat_sq};
use xicor_core::inference::geometry::{ball_union_volume, o_constant_mc};
use xicor_core::simlab::{
    run_clt_experiment, run_coverage_experiment, run_hajek_experiment, ExperimentResult, Link,
    ModelSpec,
};
use xicor_core::{
    build_nn_table, build_right_nn_table, compute_ranks, compute_ranks_naive,
    nn_brute_force_oracle, null_asymptotic_variance, q_constant, xi_bar_n, EstimatorKind, Mode,
    Sample,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn clt(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    seed: u64,
    kind: EstimatorKind,
) -> ExperimentResult {
    run_clt_experiment(spec, n, reps, seed, kind).expect("experiment runs")
}

fn degenerate_identity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=200usize {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let s = Sample::from_flat(1, x, y).unwrap();
        let t = build_right_nn_table(&s, 1).unwrap();
        let got = xi_bar_n(&s, &t).unwrap();
        worst = worst.max((got - (n as f64 - 2.0) / (n as f64 + 1.0)).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |xi_bar_n - (n-2)/(n+1)| = {worst:.1e} over n = 2..200 in {elapsed:.2?}"),
    )
}

fn null_bias() -> Outcome {
    let start = Instant::now();
    let spec = ModelSpec::independent_uniform(1).unwrap();
    let n = 100;
    let nn = clt(&spec, n, 10_000, 101, EstimatorKind::Nn).summary;
    let right = clt(&spec, n, 10_000, 102, EstimatorKind::RightNn).summary;
    let target = -1.0 / (n as f64 - 1.0);
    let z_nn = (nn.mean - target) / nn.mc_se_mean;
    let z_right = right.mean / right.mc_se_mean;
    let elapsed = start.elapsed();
    check(
        z_nn.abs() <= 3.0 && z_right.abs() <= 3.0 && elapsed < Duration::from_secs(60),
        format!(
            "mean xi_n = {:.5} (target {target:.5}, z = {z_nn:.2}); mean xi_bar_n = {:.5} (z = {z_right:.2}); {elapsed:.1?}",
            nn.mean, right.mean
        ),
    )
}

fn null_variance_right() -> Outcome {
    let spec = ModelSpec::independent_uniform(1).unwrap();
    let s = clt(&spec, 2000, 10_000, 103, EstimatorKind::RightNn).summary;
    check(
        within(s.n_var, 0.4, 0.05) && within(s.median_variance_est, 0.4, 0.05),
        format!(
            "n Var_MC(xi_bar_n) = {:.4}, median sigma_bar_hat^2 = {:.4}, target 0.4",
            s.n_var, s.median_variance_est
        ),
    )
}

fn null_variance_nn() -> Outcome {
    let spec = ModelSpec::independent_uniform(1).unwrap();
    let target = null_asymptotic_variance(1, EstimatorKind::Nn).unwrap();
    let built = 0.4 + 0.4 * q_constant(1).unwrap() + 0.8 * 0.5;
    let s = clt(&spec, 2000, 10_000, 104, EstimatorKind::Nn).summary;
    check(
        within(s.n_var, 16.0 / 15.0, 0.05)
            && (target - built).abs() < 1e-15
            && (target - 16.0 / 15.0).abs() < 1e-14,
        format!(
            "n Var_MC(xi_n) = {:.4}, target {target:.6} (16/15 = {:.6})",
            s.n_var,
            16.0 / 15.0
        ),
    )
}

fn normality_and_consistency() -> (Outcome, Outcome) {
    let copula = ModelSpec::gaussian_copula(0.5).unwrap();
    let c = clt(&copula, 2000, 10_000, 105, EstimatorKind::RightNn).summary;
    let circle = ModelSpec::sphere_manifold(2, Link::Linear, 0.5).unwrap();
    let m = clt(&circle, 2000, 10_000, 106, EstimatorKind::Nn).summary;
    let (ks_c, ks_m) = (c.ks_distance.unwrap(), m.ks_distance.unwrap());
    let normality = check(
        ks_c < 0.02 && ks_m < 0.02,
        format!("KS(xi_bar_n, copula rho=0.5) = {ks_c:.4}; KS(xi_n, circle d=2) = {ks_m:.4}"),
    );
    let rel = (c.median_variance_est - c.n_var).abs() / c.n_var;
    let consistency = check(
        rel < 0.10,
        format!(
            "median sigma_bar_hat^2 = {:.4}, n Var_MC = {:.4}, relative gap {rel:.3}",
            c.median_variance_est, c.n_var
        ),
    );
    (normality, consistency)
}

fn coverage() -> Outcome {
    let spec = ModelSpec::gaussian_copula(0.5).unwrap();
    let r = run_coverage_experiment(&spec, 5000, 2000, 0.05, 107).unwrap();
    let cov = r.summary.coverage.unwrap();
    check(
        (0.93..=0.97).contains(&cov),
        format!(
            "coverage {cov:.4} of xi = {:.6}, mean width {:.4}",
            r.summary.population_xi.unwrap(),
            r.summary.mean_ci_width.unwrap()
        ),
    )
}

fn degeneracy() -> Outcome {
    let spec = ModelSpec::exact_function(Link::Cubic, 1).unwrap();
    let vars: Vec<f64> = [250, 1000, 4000]
        .iter()
        .map(|&n| clt(&spec, n, 2000, 108, EstimatorKind::Nn).summary.n_var)
        .collect();
    check(
        vars.windows(2).all(|w| w[1] < w[0]) && vars[2] < 0.05,
        format!("n Var_MC(xi_n) at n = 250, 1000, 4000: {vars:.5?}"),
    )
}

fn hajek() -> Outcome {
    let spec = ModelSpec::gaussian_copula(0.5).unwrap();
    let vars: Vec<f64> = [100, 400, 1600]
        .iter()
        .map(|&n| {
            run_hajek_experiment(&spec, n, 2000, 109, EstimatorKind::Nn)
                .unwrap()
                .summary
                .hajek_n_var
                .unwrap()
        })
        .collect();
    check(
        vars.windows(2).all(|w| w[1] < w[0]) && vars[2] < 0.25 * vars[0],
        format!("n Var_MC(xi_n - xi_n*) at n = 100, 400, 1600: {vars:.4?}"),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut mismatches = Vec::new();
    for case in 0..200 {
        let n = rng.random_range(10..=200);
        let d = [1, 2, 3][case % 3];
        let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| x[i * d] + rng.random::<f64>() * 0.5)
            .collect();
        let s = Sample::from_flat(d, x, y).unwrap();
        if compute_ranks(&s) != compute_ranks_naive(&s) {
            mismatches.push(format!("ranks case {case}"));
        }
        let table = build_nn_table(&s, 3).unwrap();
        if table != nn_brute_force_oracle(&s, 3).unwrap() {
            mismatches.push(format!("nn table case {case}"));
        }
        let (a, b) = (
            sigma_hat_sq(&s, &table, Mode::Optimized).unwrap(),
            sigma_hat_sq(&s, &table, Mode::Naive).unwrap(),
        );
        if !close(a, b) {
            mismatches.push(format!("sigma_hat_sq case {case}: {a} vs {b}"));
        }
        if d == 1 {
            let right = build_right_nn_table(&s, 3).unwrap();
            let (a, b) = (
                sigma_bar_hat_sq(&s, &right, Mode::Optimized).unwrap(),
                sigma_bar_hat_sq(&s, &right, Mode::Naive).unwrap(),
            );
            if !close(a, b) {
                mismatches.push(format!("sigma_bar_hat_sq case {case}: {a} vs {b}"));
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "200 instances, {} mismatches {mismatches:?}, {elapsed:.2?}",
            mismatches.len()
        ),
    )
}

/// Area of the union of two discs whose centers are `gap` apart.
fn planar_union(r1: f64, r2: f64, gap: f64) -> f64 {
    use std::f64::consts::PI;
    let lens = if gap >= r1 + r2 {
        0.0
    } else if gap <= (r1 - r2).abs() {
        PI * r1.min(r2).powi(2)
    } else {
        let a1 = ((gap * gap + r1 * r1 - r2 * r2) / (2.0 * gap * r1)).acos();
        let a2 = ((gap * gap + r2 * r2 - r1 * r1) / (2.0 * gap * r2)).acos();
        let kite = ((-gap + r1 + r2) * (gap + r1 - r2) * (gap - r1 + r2) * (gap + r1 + r2)).sqrt();
        r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * kite
    };
    PI * (r1 * r1 + r2 * r2) - lens
}

fn constants() -> Outcome {
    let q1 = q_constant(1).unwrap();
    let (o1, o1_se) = o_constant_mc(1, 1_000_000, 111).unwrap();

    // Rejection oracle for the union of B(w1, |w1|) and B(w2, |w2|) in the plane.
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let draws = 200_000;
    let mut misses = 0;
    let mut worst_z: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for _ in 0..50 {
        let w1 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let w2 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let (r1, r2) = (f64::hypot(w1[0], w1[1]), f64::hypot(w2[0], w2[1]));
        let lo = [(w1[0] - r1).min(w2[0] - r2), (w1[1] - r1).min(w2[1] - r2)];
        let hi = [(w1[0] + r1).max(w2[0] + r2), (w1[1] + r1).max(w2[1] + r2)];
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let mut hits = 0usize;
        for _ in 0..draws {
            let p = [
                rng.random_range(lo[0]..hi[0]),
                rng.random_range(lo[1]..hi[1]),
            ];
            let in1 = (p[0] - w1[0]).powi(2) + (p[1] - w1[1]).powi(2) <= r1 * r1;
            let in2 = (p[0] - w2[0]).powi(2) + (p[1] - w2[1]).powi(2) <= r2 * r2;
            hits += usize::from(in1 || in2);
        }
        let gap = f64::hypot(w1[0] - w2[0], w1[1] - w2[1]);
        worst_exact =
            worst_exact.max((ball_union_volume(&w1, &w2) - planar_union(r1, r2, gap)).abs());
        let frac = hits as f64 / draws as f64;
        let se = area * (frac * (1.0 - frac) / draws as f64).sqrt();
        let z = (ball_union_volume(&w1, &w2) - area * frac) / se;
        worst_z = worst_z.max(z.abs());
        if z.abs() > 3.0 {
            misses += 1;
        }
    }
    check(
        q1 == 2.0 / 3.0 && (o1 - 0.5).abs() <= 3.0 * o1_se && misses == 0,
        format!(
            "q_1 = {q1:.17}; o_1 = {o1:.5} +/- {o1_se:.5}; union volume: {misses} of 50 pairs beyond 3 MC SE (worst |z| = {worst_z:.2}), max gap to the planar lens formula {worst_exact:.1e}"
        ),
    )
}

fn variance_bound() -> Outcome {
    let univariate = [
        ModelSpec::independent_uniform(1).unwrap(),
        ModelSpec::gaussian_copula(0.5).unwrap(),
        ModelSpec::noisy_function(Link::Sine, 0.3, 1).unwrap(),
        ModelSpec::exact_function(Link::Cubic, 1).unwrap(),
    ];
    let circle = ModelSpec::sphere_manifold(2, Link::Linear, 0.5).unwrap();
    let mut worst = (0.0, String::new());
    for n in [500, 2000] {
        let runs = univariate
            .iter()
            .map(|m| (m, EstimatorKind::RightNn))
            .chain([(&circle, EstimatorKind::Nn)]);
        for (spec, kind) in runs {
            let v = clt(spec, n, 1000, 113, kind).summary.n_var;
            if v >= worst.0 {
                worst = (v, format!("{} ({}) n = {n}", spec.name(), kind.as_str()));
            }
        }
    }
    check(
        worst.0 <= 36.0,
        format!("largest n Var_MC = {:.4} at {}", worst.0, worst.1),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        report(id, name, &outcome, start.elapsed());
        results.push((id, name, outcome));
    };
    run(1, "degenerate identity", &degenerate_identity);
    run(2, "null bias", &null_bias);
    run(3, "null variance, right-NN", &null_variance_right);
    run(4, "null variance, NN at d=1", &null_variance_nn);

    let start = Instant::now();
    let (normality, consistency) = normality_and_consistency();
    let elapsed = start.elapsed();
    report(5, "normality under dependence", &normality, elapsed);
    report(6, "variance-estimator consistency", &consistency, elapsed);
    results.push((5, "", normality));
    results.push((6, "", consistency));

    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        report(id, name, &outcome, start.elapsed());
        results.push((id, name, outcome));
    };
    run(7, "CI coverage", &coverage);
    run(8, "degeneracy", &degeneracy);
    run(9, "Hajek diagnostic", &hajek);
    run(10, "oracle equivalence", &oracle_equivalence);
    run(11, "constants", &constants);
    run(12, "variance bound", &variance_bound);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn report(id: u32, name: &str, outcome: &Outcome, elapsed: Duration) {
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} criterion {id:>2} {name}: {detail} [{elapsed:.1?}]");
}
