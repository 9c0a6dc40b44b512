//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use aos_core::lagrange::{relaxed_policy, system_d};
use aos_core::mdp::{build_kernel, check_threshold};
use aos_core::occupation::{extract_policy, solve_node, solve_node_truncated};
use aos_core::oracle::{enumerate_threshold_policies, rvi_average_cost};
use aos_core::sim::{derive_seeds, mean_se, node_occupancy, run, sweep_n, sweep_q, SweepRow, SweepSettings};
use aos_core::{make_paper_config, NearStationaryScheduler, NodeConfig, WeightChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Instance {
    node: NodeConfig,
    eta: f64,
    s_max: usize,
}

fn random_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let rs = 1 + k % 3;
            let transition: Vec<Vec<f64>> = (0..rs)
                .map(|_| {
                    let raw: Vec<f64> = (0..rs).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    raw.iter().map(|v| v / total).collect()
                })
                .collect();
            let weights = (0..rs).map(|_| rng.gen_range(0.5..10.0)).collect();
            let lambda = rng.gen_range(0.1..0.9);
            let eta = 10f64.powf(rng.gen_range(-1.0..1.0));
            let s_max = if rs == 3 { rng.gen_range(4..=10) } else { rng.gen_range(4..=15) };
            Instance {
                node: NodeConfig::new(lambda, WeightChain::new(transition, weights).unwrap()).unwrap(),
                eta,
                s_max,
            }
        })
        .collect()
}

/// 1. LP objective vs relative value iteration and threshold enumeration.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst_rvi: f64 = 0.0;
    let mut worst_enum: f64 = 0.0;
    let instances = random_instances(60, 1);
    for inst in &instances {
        let sol = solve_node_truncated(&inst.node, inst.eta, inst.s_max).map_err(|e| e.to_string())?;
        let mdp = build_kernel(&inst.node, inst.s_max, inst.eta);
        let rvi = rvi_average_cost(&mdp, 1e-10).map_err(|e| e.to_string())?;
        let (_, enum_gain) = enumerate_threshold_policies(&mdp).map_err(|e| e.to_string())?;
        let lp_gain = sol.j + inst.eta * sol.d;
        worst_rvi = worst_rvi.max((lp_gain - rvi.gain).abs() / rvi.gain.abs().max(1e-12));
        worst_enum = worst_enum.max((lp_gain - enum_gain).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst_rvi <= 1e-6 && worst_enum <= 1e-8 && elapsed < Duration::from_secs(60),
        format!(
            "{} instances, max rel |LP-RVI| = {worst_rvi:.2e} (<= 1e-6), max |LP-enum| = {worst_enum:.2e} (<= 1e-8), {:.1}s (< 60s)",
            instances.len(),
            elapsed.as_secs_f64()
        ),
    )
}

/// 2. Every fixed-price policy is a threshold policy.
fn threshold_structure() -> Outcome {
    let instances = random_instances(60, 1);
    let mut fractional = 0;
    for (k, inst) in instances.iter().enumerate() {
        let sol = solve_node_truncated(&inst.node, inst.eta, inst.s_max).map_err(|e| e.to_string())?;
        let profile = check_threshold(&extract_policy(&sol), &sol.reachable())
            .map_err(|v| format!("instance {k}: {v}"))?;
        fractional += profile.fractional_state.iter().filter(|f| f.is_some()).count();
        let mdp = build_kernel(&inst.node, inst.s_max, inst.eta);
        let rvi = rvi_average_cost(&mdp, 1e-10).map_err(|e| e.to_string())?;
        let everywhere = vec![vec![true; mdp.num_weight_states()]; inst.s_max + 1];
        check_threshold(&rvi.as_policy(), &everywhere).map_err(|v| format!("instance {k} (value iteration): {v}"))?;
    }
    Ok(format!(
        "{} LP and value-iteration policies pass, {fractional} fractional boundary states (at most one per weight state by construction)",
        instances.len()
    ))
}

/// 3. Simulated occupancy under the extracted policy matches the LP measure.
fn occupancy_consistency() -> Outcome {
    let paper = make_paper_config(0.1, 6, 1, 0).unwrap();
    let skewed = make_paper_config(0.9, 6, 1, 0).unwrap();
    let three = NodeConfig::new(
        0.4,
        WeightChain::new(
            vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.2, 0.7]],
            vec![1.0, 3.0, 8.0],
        )
        .unwrap(),
    )
    .unwrap();
    let cases = [
        (paper.nodes[0].clone(), 7.2),
        (paper.nodes[19].clone(), 2.0),
        (paper.nodes[39].clone(), 0.5),
        (skewed.nodes[4].clone(), 20.0),
        (three, 4.0),
    ];
    let mut worst: f64 = 0.0;
    for (k, (node, eta)) in cases.iter().enumerate() {
        let sol = solve_node(node, *eta).map_err(|e| e.to_string())?;
        let policy = extract_policy(&sol);
        let occ = node_occupancy(node, &policy, 1_000_000, 100 + k as u64);
        let tv: f64 = occ
            .iter()
            .flatten()
            .zip(sol.mu.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(tv);
    }
    check(worst <= 0.02, format!("5 instances, max TV = {worst:.4} (<= 0.02) at T = 1e6"))
}

/// 4. D(eta) is monotone and the mixture meets the budget exactly.
fn multiplier_machinery() -> Outcome {
    let cfg = make_paper_config(0.1, 6, 1, 0).unwrap();
    let grid: Vec<f64> = (0..20).map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 19.0)).collect();
    let ds = grid
        .iter()
        .map(|&eta| system_d(eta, &cfg.nodes))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let monotone = ds.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let relaxed = relaxed_policy(&cfg.nodes, 6).map_err(|e| e.to_string())?;
    check(
        monotone && (relaxed.d_re - 6.0).abs() <= 1e-6 && (0.0..=1.0).contains(&relaxed.alpha),
        format!(
            "D over 20 prices from {:.3} to {:.3} monotone = {monotone}; D_re = {:.9} (6 +/- 1e-6); alpha = {:.4}",
            ds[0],
            ds[19],
            relaxed.d_re,
            relaxed.alpha
        ),
    )
}

/// 5. The relaxed bound lies below the simulated near-stationary policy.
fn ordering() -> Outcome {
    let start = Instant::now();
    let cfg = make_paper_config(0.1, 6, 100_000, 0).unwrap();
    let relaxed = relaxed_policy(&cfg.nodes, 6).map_err(|e| e.to_string())?;
    let results: Vec<_> = derive_seeds(5, 5)
        .into_iter()
        .map(|seed| {
            let mut s = NearStationaryScheduler::new(relaxed.policies.clone(), 6);
            run(&cfg, &mut s, seed)
        })
        .collect();
    let (mean, se) = mean_se(&results.iter().map(|r| r.j_avg).collect::<Vec<_>>());
    let peak = results.iter().map(|r| r.peak_transmissions).max().unwrap();
    let max_d = results.iter().map(|r| r.d_avg).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    check(
        mean > relaxed.j_re && peak <= 6 && max_d <= 6.0 && elapsed < Duration::from_secs(300),
        format!(
            "J_s = {mean:.4} +/- {se:.4} > J_re = {:.4}; peak slot load {peak} <= 6; mean D {max_d:.4}; {:.1}s (< 300s)",
            relaxed.j_re,
            elapsed.as_secs_f64()
        ),
    )
}

fn settings() -> SweepSettings {
    SweepSettings { horizon: 100_000, num_seeds: 5, master_seed: 2024 }
}

fn combined_se(r: &SweepRow) -> f64 {
    (r.j_ours_se.powi(2) + r.j_greedy_se.powi(2)).sqrt()
}

/// 6. Bandwidth sweep trends.
fn bandwidth_trend() -> Outcome {
    let rows = sweep_n(0.1, &[2, 4, 6, 8, 12, 20], &settings()).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    let mut ok_a = true;
    for r in &rows {
        let margin = r.j_greedy_mean - r.j_ours_mean;
        let needed = if r.x <= 6.0 { 2.0 * combined_se(r) } else { 0.0 };
        let pass = if r.x <= 6.0 { margin > needed } else { margin >= 0.0 };
        ok_a &= pass;
        detail.push(format!(
            "N={}: J_s {:.3}, J_greedy {:.3}, J_re {:.3}{}",
            r.x,
            r.j_ours_mean,
            r.j_greedy_mean,
            r.j_lower,
            if pass { "" } else { " [greedy better]" }
        ));
    }
    let gap = |r: &SweepRow| (r.j_ours_mean - r.j_lower) / r.j_lower;
    let (g2, g20) = (gap(&rows[0]), gap(&rows[5]));
    let ok_b = g20 < g2;
    check(
        ok_a && ok_b,
        format!(
            "(a) J_s <= J_greedy at every N, by > 2 SE for N <= 6: {ok_a}; (b) gap N=20 {g20:.4} < gap N=2 {g2:.4}: {ok_b}; {}",
            detail.join("; ")
        ),
    )
}

/// 7. Self-transition sweep trends.
fn self_transition_trend() -> Outcome {
    let rows = sweep_q(&[0.1, 0.3, 0.5, 0.7, 0.9], 6, &settings()).map_err(|e| e.to_string())?;
    let adv: Vec<f64> = rows.iter().map(|r| r.j_greedy_mean - r.j_ours_mean).collect();
    check(
        adv[2] < adv[0] && adv[2] < adv[4],
        format!(
            "advantage J_greedy - J_s: q=0.1 {:.3}, 0.3 {:.3}, 0.5 {:.3}, 0.7 {:.3}, 0.9 {:.3}",
            adv[0], adv[1], adv[2], adv[3], adv[4]
        ),
    )
}

/// 8. Repeated CLI commands produce byte-identical files.
fn cli_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("aos-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let config = dir.join("paper.json");
    std::fs::write(&config, r#"{"paper_preset": {"q": 0.1}, "N": 6, "T": 5000, "seed": 11}"#)
        .map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_aos");
    let cfg = config.to_str().unwrap().to_string();
    let run_twice = |name: &str, args: &[&str]| -> Result<(), String> {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out: PathBuf = dir.join(format!("{name}-{k}.out"));
            let status = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{name} exited with {status}"));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs[0] == outputs[1] {
            Ok(())
        } else {
            Err(format!("{name}: outputs differ"))
        }
    };
    run_twice("solve", &["solve", "--config", &cfg])?;
    run_twice("solve-eta", &["solve", "--config", &cfg, "--eta", "0.5"])?;
    let artifact = dir.join("solve-0.out");
    run_twice(
        "simulate",
        &["simulate", "--config", &cfg, "--policy", artifact.to_str().unwrap(), "--seed", "7", "--seeds", "3"],
    )?;
    run_twice("greedy", &["simulate", "--config", &cfg, "--greedy", "--seed", "7"])?;
    run_twice("sweep-n", &["sweep", "--mode", "n", "--values", "4,8", "--T", "3000", "--seeds", "2"])?;
    run_twice("sweep-q", &["sweep", "--mode", "q", "--values", "0.3,0.5", "--T", "3000", "--seeds", "2"])?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok("solve, solve --eta, simulate (policy and greedy), sweep n and sweep q repeat byte-identically".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 threshold structure", threshold_structure),
        ("3 occupancy consistency", occupancy_consistency),
        ("4 multiplier machinery", multiplier_machinery),
        ("5 ordering J_re <= J_s", ordering),
        ("6 bandwidth sweep trend", bandwidth_trend),
        ("7 self-transition sweep trend", self_transition_trend),
        ("8 CLI determinism", cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
