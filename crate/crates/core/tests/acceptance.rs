//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{full_instance, random_small, rel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wpirc::benchmark::{eq_solve, feasibility_frontier, FrontierTarget, Scheme, FRONTIER_TOL_BITS};
use wpirc::certify::{brute_force_oracle_auto, kkt_certificate};
use wpirc::model::*;
use wpirc::sim::{run_sweep, summarize, trial_seed, write_csv_to, SweepConfig};
use wpirc::solver::{solve, DualPair, Solver};

type Verdict = Result<String, String>;

const FULL_SEED: u64 = 2024;
const FULL_COUNT: u64 = 100;

struct Pair {
    params: SystemParams,
    chan: ChannelRealization,
    op: Solution,
    eq: Solution,
}

fn full_pairs() -> Vec<Pair> {
    (0..FULL_COUNT)
        .into_par_iter()
        .map(|i| {
            let (params, chan) = full_instance(trial_seed(FULL_SEED, i));
            let op = solve(&params, &chan).expect("op solve");
            let eq = eq_solve(&params, &chan).expect("eq solve");
            Pair { params, chan, op, eq }
        })
        .collect()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let results: Vec<(Status, Status, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let (p, ch) = random_small(9000 + i, 2, 2, 5.0, 30.0);
            let sol = solve(&p, &ch).expect("solve");
            let or = brute_force_oracle_auto(&p, &ch, 200, 200).expect("oracle");
            let err = if sol.is_optimal() && or.is_optimal() { rel(sol.energy, or.energy) } else { 0.0 };
            (sol.status, or.status, err)
        })
        .collect();
    let elapsed = start.elapsed();
    let mismatched = results.iter().filter(|r| r.0 != r.1).count();
    let optimal = results.iter().filter(|r| r.0 == Status::Optimal).count();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let msg = format!("{optimal}/50 optimal, worst relative gap {worst:.4}, status mismatches {mismatched}, {elapsed:.1?}");
    if mismatched == 0 && worst <= 0.02 && optimal > 0 && elapsed < Duration::from_secs(60) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn certificate_validity(pairs: &[Pair]) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut worst_mu: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (i, pr) in pairs.iter().enumerate() {
        if !pr.op.is_optimal() {
            continue;
        }
        checked += 1;
        let cert = kkt_certificate(&pr.params, &pr.chan, &pr.op).expect("certificate");
        let mu_err = rel(cert.mu, 1.0 / pr.chan.h_norm_sqr());
        worst_mu = worst_mu.max(mu_err);
        worst_ratio = worst_ratio.max(cert.rank_one_ratio);
        let trace = pr.op.covariance_bar.trace().re;
        let ok = cert.valid
            && mu_err <= 1e-8
            && cert.rank_y == pr.params.n_antennas - 1
            && cert.complementary_residual <= 1e-6 * trace
            && cert.rank_one_ratio <= 1e-8;
        if !ok {
            bad.push((i, cert.failed_checks.clone()));
        }
    }
    let msg = format!("{checked} certificates, worst mu error {worst_mu:.1e}, worst rank-one ratio {worst_ratio:.1e}, invalid {bad:?}");
    if bad.is_empty() && checked > 0 { Ok(msg) } else { Err(msg) }
}

fn dominance(pairs: &[Pair]) -> Verdict {
    let both: Vec<&Pair> = pairs.iter().filter(|p| p.op.is_optimal() && p.eq.is_optimal()).collect();
    let wins = both.iter().filter(|p| p.eq.energy >= p.op.energy).count();
    let mean_ratio = both.iter().map(|p| p.eq.energy / p.op.energy).sum::<f64>() / both.len().max(1) as f64;
    let msg = format!("EQ >= OP in {wins}/{} paired trials, mean EQ/OP energy {mean_ratio:.3}", both.len());
    if wins == both.len() && !both.is_empty() { Ok(msg) } else { Err(msg) }
}

fn default_sweep_csv() -> (Vec<u8>, Vec<wpirc::sim::SweepRow>, Duration) {
    let start = Instant::now();
    let rows = run_sweep(&SweepConfig::default()).expect("sweep");
    let elapsed = start.elapsed();
    let mut buf = Vec::new();
    write_csv_to(&rows, &mut buf).expect("csv");
    (buf, rows, elapsed)
}

fn trend(rows: &[wpirc::sim::SweepRow], elapsed: Duration) -> Verdict {
    let cfg = SweepConfig::default();
    let summary = summarize(rows, &cfg.sweep_values, &[Scheme::Op]);
    let energy: Vec<f64> = summary.iter().map(|s| s.mean_energy).collect();
    let tau1: Vec<f64> = summary.iter().map(|s| s.mean_tau1).collect();
    let tau2: Vec<f64> = summary.iter().map(|s| s.mean_tau2).collect();
    let up = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let down = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let paired = summary.first().map_or(0, |s| s.paired_trials);
    let msg = format!(
        "{paired}/{} paired trials, mean OP energy {:.3e} -> {:.3e} J, mean tau1 {:.3e} -> {:.3e} s, sweep {elapsed:.1?}",
        cfg.trials,
        energy[0],
        energy[energy.len() - 1],
        tau1[0],
        tau1[tau1.len() - 1],
    );
    if up(&energy) && up(&tau1) && down(&tau2) && paired > 0 && elapsed < Duration::from_secs(600) {
        Ok(msg)
    } else {
        Err(format!("{msg}; energy {energy:?} tau1 {tau1:?} tau2 {tau2:?}"))
    }
}

fn frontier_behavior(pairs: &[Pair]) -> Verdict {
    let failures: Vec<String> = pairs
        .par_iter()
        .enumerate()
        .take(40)
        .filter_map(|(i, pr)| {
            let op = feasibility_frontier(&pr.params, &pr.chan, FrontierTarget::Mi, Scheme::Op).ok()?;
            let eq = feasibility_frontier(&pr.params, &pr.chan, FrontierTarget::Mi, Scheme::Eq).ok()?;
            if eq > op {
                return Some(format!("#{i}: eq frontier {eq} > op {op}"));
            }
            let band = 2.0 * FRONTIER_TOL_BITS;
            let top = op + 50.0;
            for k in 0..=12 {
                let r = top * k as f64 / 12.0;
                let p = pr.params.clone().with_mi_floor(r);
                let s_op = solve(&p, &pr.chan).ok()?.status;
                let s_eq = eq_solve(&p, &pr.chan).ok()?.status;
                let feasible = |s: Status| s != Status::Infeasible;
                if (r < op - band && !feasible(s_op)) || (r > op + band && feasible(s_op)) {
                    return Some(format!("#{i}: op {s_op} at {r:.1} bits, frontier {op:.1}"));
                }
                if (r < eq - band && !feasible(s_eq)) || (r > eq + band && feasible(s_eq)) {
                    return Some(format!("#{i}: eq {s_eq} at {r:.1} bits, frontier {eq:.1}"));
                }
            }
            // A point strictly between the two frontiers separates the schemes.
            if op - eq > 2.0 * band {
                let p = pr.params.clone().with_mi_floor(0.5 * (op + eq));
                let (a, b) = (solve(&p, &pr.chan).ok()?, eq_solve(&p, &pr.chan).ok()?);
                if !(a.is_optimal() && b.status == Status::Infeasible) {
                    return Some(format!("#{i}: between frontiers op {} eq {}", a.status, b.status));
                }
            }
            None
        })
        .collect();
    if failures.is_empty() {
        Ok("40 instances: eq frontier <= op frontier, statuses switch at each frontier".into())
    } else {
        Err(failures.join("; "))
    }
}

fn constraint_closure(pairs: &[Pair]) -> Verdict {
    let mut count = 0;
    let mut problems = Vec::new();
    let mut extra = Vec::new();
    for i in 0..50u64 {
        let (p, ch) = random_small(9000 + i, 2, 2, 5.0, 30.0);
        let sol = solve(&p, &ch).expect("solve");
        extra.push((p, ch, sol));
    }
    let all = pairs
        .iter()
        .flat_map(|pr| [(&pr.params, &pr.chan, &pr.op), (&pr.params, &pr.chan, &pr.eq)])
        .chain(extra.iter().map(|(p, c, s)| (p, c, s)));
    for (k, (p, ch, sol)) in all.enumerate() {
        if !sol.is_optimal() {
            continue;
        }
        count += 1;
        let rep = check_constraints(p, ch, sol, 1e-6).expect("check");
        let c3 = rep.get("C3").unwrap();
        let c5_tight = (sol.tau1 + sol.tau2 - p.total_time).abs() <= 1e-8 * p.total_time;
        let c3_tight = c3.slack.abs() <= 1e-8 * c3.rhs.abs();
        let tight = |n: &str| {
            let c = rep.get(n).unwrap();
            c.slack.abs() <= 1e-8 * c.rhs.abs().max(1.0)
        };
        if !(rep.all_satisfied() && c5_tight && c3_tight && (tight("C1") || tight("C2"))) {
            problems.push(k);
        }
    }
    let msg = format!("{count} optimal solutions checked, failures at {problems:?}");
    if problems.is_empty() && count > 0 { Ok(msg) } else { Err(msg) }
}

fn numerical_identities(pairs: &[Pair]) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let df = 2.5e5;
    let mut worst_h: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..16);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1e-3)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..40.0)).collect();
        let tau2 = rng.random_range(1e-6..1e-4);
        for c in [0.5, 2.0, 10.0] {
            let gc: Vec<f64> = g.iter().map(|x| x * c).collect();
            let a = radar_mi(&g, &v, tau2, df).unwrap();
            let b = comm_rate(&g, &v, tau2, df).unwrap();
            if a > 0.0 {
                worst_h = worst_h.max(rel(radar_mi(&gc, &v, c * tau2, df).unwrap(), c * a));
                worst_h = worst_h.max(rel(comm_rate(&gc, &v, c * tau2, df).unwrap(), c * b));
            }
        }
    }

    let solver = Solver::default();
    let mut worst_rec: f64 = 0.0;
    for pr in pairs.iter().filter(|p| p.op.is_optimal()).take(30) {
        let r = solver.inner_allocation(pr.op.tau2, &pr.chan, &pr.params).unwrap();
        let scale = r.gamma.iter().copied().fold(0.0, f64::max);
        for m in 0..pr.params.n_subcarriers {
            let g = wpirc::solver::subcarrier_gamma(r.duals, pr.chan.radar_snr[m], pr.chan.comm_snr[m], pr.op.tau2, df);
            worst_rec = worst_rec.max((g - r.gamma[m]).abs() / scale);
        }
    }

    let mut worst_fd: f64 = 0.0;
    for pr in pairs.iter().take(20) {
        let d = DualPair { lambda_r: rng.random_range(1e-7..3e-6), lambda_c: rng.random_range(1e-7..3e-6) };
        let tau2 = rng.random_range(2e-5..9e-5);
        let (_, grad) = solver.inner_dual(tau2, &pr.chan, &pr.params, d).unwrap();
        for (i, g) in grad.iter().enumerate() {
            let h = 1e-6 * if i == 0 { d.lambda_r } else { d.lambda_c };
            let at = |s: f64| {
                let mut e = d;
                if i == 0 { e.lambda_r += s } else { e.lambda_c += s }
                solver.inner_dual(tau2, &pr.chan, &pr.params, e).unwrap().0
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let floor = if i == 0 { pr.params.mi_floor } else { pr.params.rate_floor };
            worst_fd = worst_fd.max((fd - g).abs() / g.abs().max(1e-3 * floor));
        }
    }
    let msg = format!("homogeneity {worst_h:.1e}, dual reconstruction {worst_rec:.1e}, gradient vs finite difference {worst_fd:.1e}");
    if worst_h <= 1e-12 && worst_rec <= 1e-9 && worst_fd <= 1e-5 { Ok(msg) } else { Err(msg) }
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    results.push(("1 oracle equivalence", oracle_equivalence()));
    let pairs = full_pairs();
    results.push(("2 certificate validity", certificate_validity(&pairs)));
    results.push(("3 dominance", dominance(&pairs)));
    let (csv_a, rows, elapsed) = default_sweep_csv();
    results.push(("4 trend reproduction", trend(&rows, elapsed)));
    results.push(("5 frontier behavior", frontier_behavior(&pairs)));
    results.push(("6 constraint closure", constraint_closure(&pairs)));
    results.push(("7 numerical identities", numerical_identities(&pairs)));
    let (csv_b, _, _) = default_sweep_csv();
    let det = if csv_a == csv_b {
        Ok(format!("{} bytes identical across two runs", csv_a.len()))
    } else {
        Err("default sweep CSV differs between runs".into())
    };
    results.push(("8 determinism", det));

    let mut failed = 0;
    for (name, verdict) in &results {
        match verdict {
            Ok(msg) => println!("PASS  criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg}");
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.1?}", results.len() - failed, results.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
