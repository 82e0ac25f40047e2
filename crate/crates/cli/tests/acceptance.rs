//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden: the process exits non-zero
//! on any failure only when `ACCEPTANCE_STRICT=1`, so that `cargo test`
//! still runs the rest of the workspace.

use std::time::{Duration, Instant};

use ambc_v2x::oracle::feasibility_check;
use ambc_v2x::simulation::{
    compare_modes, realization_seed, run_realization, run_sweep, SweepParam, SweepPlan, SweepResult,
};
use ambc_v2x::solver::lagrangian::{grad_p1, grad_p2, lagrangian_p1, lagrangian_p2, CellProblem};
use ambc_v2x::solver::{CellDuals, DualStateP1};
use ambc_v2x::{ChannelRealization, Mode, NetworkConfig};
use ambc_v2x_cli::output::{sweep_csv, CSV_FILE};
use ambc_v2x_cli::verify::{run_verify, VerifySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REALIZATIONS: usize = 1000;
const CERT_TOL: f64 = 1e-5;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

/// Base scenario of the trend suites: the default parameters with the BS
/// budget at 43 dBm.
fn base() -> NetworkConfig {
    NetworkConfig {
        p_max: 43.0,
        n_realizations: REALIZATIONS,
        ..NetworkConfig::default()
    }
}

struct Suite {
    name: &'static str,
    plan: SweepPlan,
    result: SweepResult,
}

fn suite(name: &'static str, param: SweepParam, values: &[f64], base: NetworkConfig) -> Suite {
    let plan = SweepPlan::new(param, values.to_vec(), base);
    let result = run_sweep(&plan).expect("valid plan");
    Suite { name, plan, result }
}

fn fmt_series(s: &Suite, mode: Mode) -> String {
    s.result
        .series(mode)
        .iter()
        .map(|p| format!("{:.6}", p.mean_ee_mbpj))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Standard error of the difference of two independent point means.
fn joint_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

// ---------------------------------------------------------------- oracles

fn oracle_criteria() -> Vec<Outcome> {
    let config = NetworkConfig::default();
    let start = Instant::now();
    let summary = run_verify(&config, &VerifySpec::default());
    let elapsed = start.elapsed();

    let p1_bad = summary.p1.iter().filter(|c| !c.ok).count();
    let p1_worst = summary
        .p1
        .iter()
        .filter_map(|c| c.error_ratio())
        .fold(0.0, f64::max);
    let p2_bad = summary.p2.iter().filter(|c| !c.ok).count();
    let p2_cmp = summary
        .p2
        .iter()
        .filter(|c| c.error_ratio().is_some())
        .count();
    let p2_worst = summary
        .p2
        .iter()
        .filter_map(|c| c.error_ratio())
        .fold(0.0, f64::max);
    vec![
        report(
            "oracle equivalence, stage 1",
            summary.p1_passed() && elapsed < Duration::from_secs(60),
            format!(
                "{} seeds, {p1_bad} disagreements, worst error {p1_worst:.3} of allowance, {:.1}s",
                summary.p1.len(),
                elapsed.as_secs_f64()
            ),
        ),
        report(
            "oracle equivalence, stage 2",
            summary.p2_passed() && elapsed < Duration::from_secs(300),
            format!(
                "{p2_cmp} cells compared, {p2_bad} outside allowance, worst error {p2_worst:.3} of allowance"
            ),
        ),
    ]
}

// -------------------------------------------------------------- gradients

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Central difference; both Lagrangians are at most quadratic along a
/// coordinate, so a wide step only reduces rounding.
fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-2 * x.abs().max(1e-3);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn gradient_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for k in 0..100u64 {
        let config = NetworkConfig {
            sigma_eps: [0.0, 1e-5, 1e-3][k as usize % 3],
            ..NetworkConfig::default()
        };
        let ch = ChannelRealization::from_seed(&config, 9000 + k).unwrap();
        let p = config.p_max_w();
        let duals = DualStateP1 {
            psi1: log_uniform(&mut rng, 1e-2, 1e2) / (ch.g_bs_rsu[0] * p),
            psi2: log_uniform(&mut rng, 1e-2, 1e2) / (ch.g_bs_rsu[1] * p),
            lambda1: rng.random_range(0.0..5.0),
            lambda2: rng.random_range(0.0..5.0) * p,
            iteration: 0,
        };
        let a1: f64 = rng.random_range(1e-6..1.0);
        let alpha = [a1, rng.random_range(1e-6..1.0 - a1 + 1e-6)];
        let g = grad_p1(alpha, &duals, &ch, &config);
        for i in 0..2 {
            let f = |x: f64| {
                let mut a = alpha;
                a[i] = x;
                lagrangian_p1(a, &duals, &ch, &config)
            };
            worst1 = worst1.max(rel_err(g[i], central(f, alpha[i])));
        }

        let m = k as usize % 2;
        let q = log_uniform(&mut rng, 1e-3, config.q_max_w());
        let cell = CellProblem::new(&ch, &config, m, q, log_uniform(&mut rng, 1e-6, 10.0));
        let cd = CellDuals {
            eta1: log_uniform(&mut rng, 1e-2, 1e2) / ch.g_rsu_veh[m][0],
            eta2: log_uniform(&mut rng, 1e-2, 1e2) / ch.g_rsu_veh[m][1],
            mu: rng.random_range(0.0..5.0),
            zeta_mul: rng.random_range(0.0..5.0) * q,
            upsilon: rng.random_range(0.0..1.0) * q,
        };
        let b1: f64 = rng.random_range(1e-6..1.0);
        let beta = [b1, rng.random_range(1e-6..1.0 - b1 + 1e-6)];
        let xi: f64 = rng.random_range(0.01..0.99);
        let g = grad_p2(&cell, beta, xi, &cd);
        for i in 0..3 {
            let f = |x: f64| {
                let (mut b, mut z) = (beta, xi);
                if i < 2 {
                    b[i] = x
                } else {
                    z = x
                }
                lagrangian_p2(&cell, b, z, &cd)
            };
            let x = if i < 2 { beta[i] } else { xi };
            worst2 = worst2.max(rel_err(g[i], central(f, x)));
        }
    }
    report(
        "gradient suite",
        worst1 < 1e-6 && worst2 < 1e-6,
        format!("worst relative error: stage 1 {worst1:.2e}, stage 2 {worst2:.2e}"),
    )
}

// ------------------------------------------------------------ perfect CSI

fn perfect_csi_criterion(s: &Suite) -> Outcome {
    let mut nonzero = 0;
    let mut runs = 0;
    for &value in &s.plan.values {
        let config = s.plan.param.apply(&s.plan.base, value);
        for mode in Mode::ALL {
            for r in 0..100 {
                let (_, m) =
                    run_realization(&config, realization_seed(config.seed, r), mode).unwrap();
                runs += 1;
                nonzero += (m.icsi_w.to_bits() != 0) as usize;
            }
        }
    }
    let means_zero = s
        .result
        .points
        .iter()
        .filter(|p| p.mean_icsi_w.to_bits() != 0)
        .count();
    report(
        "perfect-CSI degeneracy",
        nonzero == 0 && means_zero == 0,
        format!(
            "P_max 37..45 dBm: {nonzero}/{runs} runs and {means_zero}/{} point means not bitwise 0",
            s.result.points.len()
        ),
    )
}

// ----------------------------------------------------------------- trends

fn monotone_sigma_criterion(s: &Suite) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for mode in Mode::ALL {
        let pts = s.result.series(mode);
        let mut violations = 0;
        let mut all_within = true;
        for w in pts.windows(2) {
            let ok = w[1].mean_ee_mbpj <= w[0].mean_ee_mbpj;
            if !ok {
                violations += 1;
                let within = w[1].mean_ee_mbpj - w[0].mean_ee_mbpj
                    <= joint_se(w[0].stderr_ee, w[1].stderr_ee);
                all_within &= within;
            }
        }
        let mode_ok = violations == 0 || (violations == 1 && all_within);
        pass &= mode_ok;
        notes.push(format!(
            "{}: [{}] {violations} increasing pairs",
            mode.name(),
            fmt_series(s, mode)
        ));
    }
    report("monotone EE in estimation error", pass, notes.join("; "))
}

fn dominance_criterion(suites: &[&Suite], fig1: &Suite) -> Outcome {
    let mut points = 0;
    let mut bad = Vec::new();
    for s in suites {
        for c in compare_modes(&s.result).unwrap() {
            points += 1;
            if c.n_paired == 0 || c.mean_diff_mbpj < -c.stderr_diff {
                bad.push(format!("{} {}={}", s.name, s.plan.param.name(), c.value));
            }
        }
    }
    let ratio = compare_modes(&fig1.result)
        .unwrap()
        .into_iter()
        .find(|c| c.value == 1e-3)
        .map_or(f64::NAN, |c| c.ratio);
    let ratio_ok = (1.05..=2.0).contains(&ratio);
    report(
        "AmBC dominance",
        bad.is_empty() && ratio_ok,
        format!(
            "{}/{points} points below pure NOMA or without paired runs{}; EE ratio at 43 dBm, sigma 1e-3: {ratio:.6} (needs 1.05..2)",
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(" ({})", bad.join(", ")) }
        ),
    )
}

fn bell_criterion(s: &Suite) -> Outcome {
    let mut any = false;
    let mut notes = Vec::new();
    for mode in Mode::ALL {
        let pts = s.result.series(mode);
        let ee: Vec<f64> = pts.iter().map(|p| p.mean_ee_mbpj).collect();
        let argmax = (0..ee.len()).fold(None::<usize>, |best, i| match best {
            Some(b) if ee[b] >= ee[i] || ee[i].is_nan() => Some(b),
            _ if ee[i].is_nan() => best,
            _ => Some(i),
        });
        let interior = matches!(argmax, Some(i) if i > 0 && i + 1 < ee.len());
        any |= interior;
        // how far the peak stands above the higher endpoint, in standard
        // errors; reported so that a peak inside the noise is visible
        let margin = argmax.map_or(f64::NAN, |i| {
            let last = ee.len() - 1;
            let edge = if ee[0] >= ee[last] { 0 } else { last };
            (ee[i] - ee[edge]) / joint_se(pts[i].stderr_ee, pts[edge].stderr_ee)
        });
        notes.push(format!(
            "{}: [{}] argmax at {}, {margin:.1e} standard errors above the ends",
            mode.name(),
            ee.iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(" "),
            argmax.map_or("-".to_string(), |i| format!("{} dBm", pts[i].value))
        ));
    }
    report("bell-shaped EE in BS budget", any, notes.join("; "))
}

fn coverage_criterion(s: &Suite) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for mode in Mode::ALL {
        let pts = s.result.series(mode);
        let inc = pts
            .windows(2)
            .all(|w| w[1].mean_ee_mbpj > w[0].mean_ee_mbpj);
        pass &= inc;
        notes.push(format!("{}: [{}]", mode.name(), fmt_series(s, mode)));
    }
    let cmp = compare_modes(&s.result).unwrap();
    let gap_ok = cmp.windows(2).all(|w| {
        w[1].mean_diff_mbpj >= w[0].mean_diff_mbpj - joint_se(w[0].stderr_diff, w[1].stderr_diff)
    });
    pass &= gap_ok;
    notes.push(format!(
        "gap [{}]",
        cmp.iter()
            .map(|c| format!("{:.2e}", c.mean_diff_mbpj))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    report("coverage trend", pass, notes.join("; "))
}

fn circuit_criterion(s: &Suite) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for mode in Mode::ALL {
        let pts = s.result.series(mode);
        pass &= pts
            .windows(2)
            .all(|w| w[1].mean_ee_mbpj < w[0].mean_ee_mbpj);
        notes.push(format!("{}: [{}]", mode.name(), fmt_series(s, mode)));
    }
    report("circuit-power trend", pass, notes.join("; "))
}

// ---------------------------------------------------- certification, CSV

fn certification_criterion(suites: &[&Suite]) -> Outcome {
    let mut converged = 0;
    let mut failed = Vec::new();
    for s in suites {
        for &value in &s.plan.values {
            let config = s.plan.param.apply(&s.plan.base, value);
            for &mode in &s.plan.modes {
                for r in 0..s.plan.realizations as u64 {
                    let seed = realization_seed(config.seed, r);
                    let (out, _) = run_realization(&config, seed, mode).unwrap();
                    if !out.converged {
                        continue;
                    }
                    converged += 1;
                    let ch = ChannelRealization::from_seed(&config, seed).unwrap();
                    let slacks = feasibility_check(&out.solution, &ch, &config, CERT_TOL);
                    let xi_ok = out.solution.xi.iter().all(|x| (0.0..=1.0).contains(x));
                    if slacks.worst_value() < -CERT_TOL || !xi_ok {
                        failed.push(format!("{} {}={value} r={r}", s.name, s.plan.param.name()));
                    }
                }
            }
        }
    }
    report(
        "constraint certification",
        failed.is_empty() && converged > 0,
        format!(
            "{converged} converged runs checked, {} with a slack below -{CERT_TOL:e}{}",
            failed.len(),
            failed
                .first()
                .map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    )
}

/// Re-runs each suite through the command line and compares the CSV bytes
/// with the in-process run.
fn determinism_criterion(suites: &[&Suite]) -> Outcome {
    let mut differing = Vec::new();
    for s in suites {
        let dir = tempfile::tempdir().unwrap();
        let mut argv: Vec<String> = vec![
            "ambc-v2x".into(),
            "sweep".into(),
            "--param".into(),
            s.plan.param.name().into(),
            "--values".into(),
            s.plan
                .values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
            "--out".into(),
            dir.path().display().to_string(),
        ];
        for (k, v) in s.plan.base.to_pairs() {
            argv.push(format!("--{}", k.replace('_', "-")));
            argv.push(v);
        }
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = ambc_v2x_cli::run(&argv, &mut out, &mut err);
        let csv = std::fs::read(dir.path().join(CSV_FILE)).unwrap_or_default();
        if code > 0 && code != ambc_v2x_cli::exit::ALL_INFEASIBLE
            || csv != sweep_csv(&s.result).into_bytes()
        {
            differing.push(s.name);
        }
    }
    report(
        "determinism",
        differing.is_empty(),
        format!(
            "{} suites repeated through the CLI, CSV differs for [{}]",
            suites.len(),
            differing.join(", ")
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut outcomes = oracle_criteria();
    outcomes.push(gradient_criterion());

    let sigma = suite(
        "sigma",
        SweepParam::SigmaEps,
        &[0.0, 1e-5, 1e-4, 1e-3, 1e-2],
        base(),
    );
    let perfect = suite(
        "perfect-csi",
        SweepParam::PMax,
        &[37.0, 38.0, 39.0, 40.0, 41.0, 42.0, 43.0, 44.0, 45.0],
        NetworkConfig {
            sigma_eps: 0.0,
            ..base()
        },
    );
    let budget = suite(
        "budget",
        SweepParam::PMax,
        &[37.0, 39.0, 41.0, 43.0, 45.0],
        base(),
    );
    let coverage = suite(
        "coverage",
        SweepParam::RsuRadius,
        &[20.0, 15.0, 10.0, 5.0],
        base(),
    );
    let circuit = suite(
        "circuit",
        SweepParam::CircuitPower,
        &[2.0, 5.0, 8.0, 11.0],
        base(),
    );

    outcomes.push(perfect_csi_criterion(&perfect));
    outcomes.push(monotone_sigma_criterion(&sigma));
    let trend_suites = [&sigma, &budget, &coverage, &circuit];
    outcomes.push(dominance_criterion(&trend_suites, &sigma));
    outcomes.push(bell_criterion(&budget));
    outcomes.push(coverage_criterion(&coverage));
    outcomes.push(circuit_criterion(&circuit));
    let all = [&sigma, &perfect, &budget, &coverage, &circuit];
    outcomes.push(certification_criterion(&all));
    outcomes.push(determinism_criterion(&all));

    println!();
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.0}s",
        outcomes.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
